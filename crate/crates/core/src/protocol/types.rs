//! Domain types for registration and the three-message login flow.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::crypto::{Digest, GroupElement, GroupId, Scalar};

use super::ProtocolError;

/// Longest identity or password accepted, in UTF-8 bytes.
pub const MAX_NAME_LEN: usize = 64;

fn check_name(value: &str) -> bool {
    !value.is_empty() && value.len() <= MAX_NAME_LEN
}

/// Party identifier (users and drones): 1–64 bytes of UTF-8, unique per run.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize)]
#[serde(transparent)]
pub struct Identity(String);

impl Identity {
    pub fn new(value: impl Into<String>) -> Result<Self, ProtocolError> {
        let value = value.into();
        if !check_name(&value) {
            return Err(ProtocolError::InvalidIdentity);
        }
        Ok(Identity(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Identity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Identity::new(s).map_err(D::Error::custom)
    }
}

/// User-chosen password: 1–64 bytes of UTF-8.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(transparent)]
pub struct Password(String);

impl Password {
    pub fn new(value: impl Into<String>) -> Result<Self, ProtocolError> {
        let value = value.into();
        if !check_name(&value) {
            return Err(ProtocolError::InvalidPassword);
        }
        Ok(Password(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl<'de> Deserialize<'de> for Password {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Password::new(s).map_err(D::Error::custom)
    }
}

/// Logical time in milliseconds. Hash inputs use the 8-byte big-endian form.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(u64);

impl Timestamp {
    pub const fn from_millis(millis: u64) -> Self {
        Timestamp(millis)
    }

    pub const fn millis(self) -> u64 {
        self.0
    }

    pub const fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    /// |self − other| on the millisecond values.
    pub const fn abs_diff(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }

    pub const fn plus(self, millis: u64) -> Timestamp {
        Timestamp(self.0 + millis)
    }
}

/// One row of the server's user verifier table.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserRecord {
    pub id: Identity,
    /// Fixed pseudonym h(id ‖ f) — the same value in every login message.
    pub fid: Digest,
    /// Long-term user secret h(fid ‖ s ‖ q), shared with the device.
    pub k: Digest,
}

/// One row of the server's drone verifier table.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneRecord {
    pub id: Identity,
    /// Drone pseudonym h(a ‖ id).
    pub pid: Digest,
    /// Long-term drone secret h(id ‖ s ‖ a), shared with the drone.
    pub key: Digest,
}

/// The control server's full state: its secret scalar plus both verifier
/// tables. The secret never leaves this struct except through the
/// persistence layer's full-database save.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ServerDatabase {
    group: GroupId,
    s: Scalar,
    users: Vec<UserRecord>,
    drones: Vec<DroneRecord>,
}

impl ServerDatabase {
    pub fn new(group: GroupId, s: Scalar) -> Result<Self, ProtocolError> {
        ServerDatabase::from_parts(group, s, Vec::new(), Vec::new())
    }

    /// Rebuild a database from its constituents (used when loading from disk
    /// and when reconstructing a verifier from leaked tables). Enforces
    /// pseudonym and identity uniqueness.
    pub fn from_parts(
        group: GroupId,
        s: Scalar,
        users: Vec<UserRecord>,
        drones: Vec<DroneRecord>,
    ) -> Result<Self, ProtocolError> {
        if s.group() != group {
            return Err(ProtocolError::GroupMismatch);
        }
        let db = ServerDatabase {
            group,
            s,
            users,
            drones,
        };
        for (i, u) in db.users.iter().enumerate() {
            if db.users[..i].iter().any(|v| v.id == u.id || v.fid == u.fid) {
                return Err(ProtocolError::DuplicateIdentity);
            }
        }
        for (i, d) in db.drones.iter().enumerate() {
            if db.drones[..i].iter().any(|v| v.id == d.id || v.pid == d.pid) {
                return Err(ProtocolError::DuplicateIdentity);
            }
        }
        Ok(db)
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn drones(&self) -> &[DroneRecord] {
        &self.drones
    }

    pub(crate) fn secret(&self) -> &Scalar {
        &self.s
    }

    pub fn user_by_fid(&self, fid: &Digest) -> Option<&UserRecord> {
        self.users.iter().find(|u| &u.fid == fid)
    }

    pub fn drone_by_pid(&self, pid: &Digest) -> Option<&DroneRecord> {
        self.drones.iter().find(|d| &d.pid == pid)
    }

    pub fn has_user_id(&self, id: &Identity) -> bool {
        self.users.iter().any(|u| &u.id == id)
    }

    pub fn has_drone_id(&self, id: &Identity) -> bool {
        self.drones.iter().any(|d| &d.id == id)
    }

    pub(crate) fn insert_user(&mut self, record: UserRecord) -> Result<(), ProtocolError> {
        if self.has_user_id(&record.id) || self.user_by_fid(&record.fid).is_some() {
            return Err(ProtocolError::DuplicateIdentity);
        }
        self.users.push(record);
        Ok(())
    }

    pub(crate) fn insert_drone(&mut self, record: DroneRecord) -> Result<(), ProtocolError> {
        if self.has_drone_id(&record.id) || self.drone_by_pid(&record.pid).is_some() {
            return Err(ProtocolError::DuplicateIdentity);
        }
        self.drones.push(record);
        Ok(())
    }
}

/// What the server hands back over the secure channel when a user registers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UserRegistrationResponse {
    pub f: Scalar,
    pub k: Digest,
    pub b: Digest,
}

/// A (drone identity, drone pseudonym) pair the device is provisioned with,
/// so the user can address a drone and later derive a key bound to its id.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneDirectoryEntry {
    pub id: Identity,
    pub pid: Digest,
}

/// Credential material held by the user's mobile device after registration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MobileDeviceStore {
    /// Blinding nonce mixed into the password digest.
    pub d: Scalar,
    /// Pseudonym nonce; lets the device recompute fid from the typed id.
    pub f: Scalar,
    /// Long-term user secret, mirror of the server's record.
    pub k: Digest,
    /// Local credential check value h(h(fid ‖ ppw ‖ f ‖ k) ‖ fid).
    pub b: Digest,
    pub drone_directory: Vec<DroneDirectoryEntry>,
}

/// Credential material held by a drone after registration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DroneStore {
    pub id: Identity,
    pub pid: Digest,
    pub key: Digest,
}

/// Login request, user → server over the public channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M1 {
    pub t1: Timestamp,
    /// User's ephemeral Diffie-Hellman share z·P.
    pub z: GroupElement,
    /// Authenticator h(t1 ‖ fid ‖ k).
    pub a1: Digest,
    /// User pseudonym — byte-identical in every session of one user.
    pub fid: Digest,
    /// Pseudonym of the drone being contacted.
    pub pid: Digest,
}

/// Server's relay to the drone over the public channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M2 {
    /// Authenticator h(pid ‖ key ‖ drone id ‖ k).
    pub a3: Digest,
    pub t2: Timestamp,
    /// User's ephemeral share, relayed unchanged.
    pub z: GroupElement,
    pub pid: Digest,
    /// k ⊕ key — transports the user secret under the drone secret.
    pub kij: Digest,
    pub fid: Digest,
}

/// Drone's reply to the user over the public channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct M3 {
    /// Drone's ephemeral Diffie-Hellman share g·P.
    pub g: GroupElement,
    pub t3: Timestamp,
    /// Key confirmation h(sk ‖ fid ‖ t3 ‖ k).
    pub auth: Digest,
}

/// Ephemeral user-side state between sending M1 and receiving M3.
/// Deliberately neither `Clone` nor `Copy`: it is consumed by
/// [`super::user_process_m3`], so one login attempt yields at most one key.
#[derive(Debug)]
pub struct UserSessionState {
    pub(crate) z: Scalar,
    pub(crate) fid: Digest,
    pub(crate) k: Digest,
    pub(crate) drone_id: Identity,
    #[allow(dead_code)] // retained for symmetry with the message flow
    pub(crate) t1: Timestamp,
}

impl UserSessionState {
    pub fn fid(&self) -> &Digest {
        &self.fid
    }
}

/// The agreed session key: h(drone id ‖ shared DH point ‖ k ‖ fid).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionKey(pub Digest);

impl SessionKey {
    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}
