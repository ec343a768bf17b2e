//! Executable model of a hash-chain authentication and key-agreement scheme
//! between mobile users and drones, brokered by a control server, together
//! with an adversary harness that demonstrates where the scheme breaks.
//!
//! The crate is organised bottom-up:
//!
//! - [`crypto`]: hash digests, injective multi-field hashing, and a
//!   prime-order group abstraction (ristretto255 or a tiny Schnorr group).
//! - [`protocol`]: registration and the three-message login/key-agreement
//!   flow, modelled as pure step functions over explicit state.
//! - [`sim`]: deterministic scenario runner — seeded randomness, a logical
//!   clock, transcript capture, and machine-checkable scenario reports.
//! - [`attacks`]: what a passive eavesdropper and a verifier-table thief can
//!   do — session linkage, forged logins, forged drone responses.
//! - [`persist`]: canonical JSON file formats for databases, device stores,
//!   transcripts, and reports, so runs are reproducible byte-for-byte.

pub mod attacks;
pub mod crypto;
pub mod persist;
pub mod protocol;
pub mod sim;
