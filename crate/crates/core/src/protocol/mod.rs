//! The modelled scheme itself: registration over a secure channel, then a
//! three-message login and key agreement over a public channel.
//!
//! Message flow (all checks and derivations live in [`ops`]):
//!
//! ```text
//! user ── M1 {t1, z·P, a1, fid, pid} ──▶ server
//! server ── M2 {a3, t2, z·P, pid, kij, fid} ──▶ drone
//! drone ── M3 {g·P, t3, auth} ──▶ user
//! ```
//!
//! Every step function is pure: state goes in, messages and new state come
//! out, and nothing here performs I/O or reads a clock. The harness in
//! [`crate::sim`] owns time and delivery.

mod ops;
mod types;

pub use ops::{
    drone_process_m2, provision_device, server_process_m1, server_register_drone,
    server_register_user, user_login_start, user_process_m3, user_register_request,
};
pub(crate) use ops::{a1_digest, a3_digest, session_key_digest};
pub use types::{
    DroneDirectoryEntry, DroneRecord, DroneStore, Identity, M1, M2, M3, MobileDeviceStore,
    Password, ServerDatabase, SessionKey, Timestamp, UserRecord, UserRegistrationResponse,
    UserSessionState, MAX_NAME_LEN,
};

/// Why a protocol step refused to proceed.
#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("identity must be 1 to 64 UTF-8 bytes")]
    InvalidIdentity,

    #[error("password must be 1 to 64 UTF-8 bytes")]
    InvalidPassword,

    #[error("identity or pseudonym already registered")]
    DuplicateIdentity,

    #[error("value belongs to a different group than this run uses")]
    GroupMismatch,

    #[error("local credential check failed; session rejected")]
    SessionRejected,

    #[error("no registered user matches the presented pseudonym")]
    UnknownUser,

    #[error("no registered drone matches the presented pseudonym")]
    UnknownDrone,

    #[error("timestamp falls outside the freshness window")]
    StaleTimestamp,

    #[error("authenticator mismatch")]
    AuthFailure,

    #[error("message addressed to a different drone")]
    NotForMe,
}
