//! The per-party step functions: pure computations from immutable inputs to
//! messages, state, and keys. All multi-field hash inputs go through the
//! length-prefixed [`hash_fields`] encoding; scalars and timestamps are
//! hashed in their fixed-length byte forms.

use crate::crypto::{hash, hash_fields, scalar_mult, Digest, GroupElement, Scalar};

use super::types::{
    DroneDirectoryEntry, DroneRecord, DroneStore, Identity, M1, M2, M3, MobileDeviceStore,
    Password, ServerDatabase, SessionKey, Timestamp, UserRecord, UserRegistrationResponse,
    UserSessionState,
};
use super::ProtocolError;

/// ppw = h(h(id ‖ d) ⊕ h(pw ‖ d)) — the blinded password digest. The outer
/// hash takes the raw 32-byte XOR result (a single field, no length prefix).
fn ppw_digest(id: &Identity, pw: &Password, d: &Scalar) -> Digest {
    let left = hash_fields(&[id.as_bytes(), &d.to_bytes()]);
    let right = hash_fields(&[pw.as_bytes(), &d.to_bytes()]);
    hash(left.xor(&right).as_bytes())
}

/// fid = h(id ‖ f), the user's fixed pseudonym.
fn fid_digest(id: &Identity, f: &Scalar) -> Digest {
    hash_fields(&[id.as_bytes(), &f.to_bytes()])
}

/// a = h(fid ‖ ppw ‖ f ‖ k), the device-side credential digest.
fn a_digest(fid: &Digest, ppw: &Digest, f: &Scalar, k: &Digest) -> Digest {
    hash_fields(&[fid.as_bytes(), ppw.as_bytes(), &f.to_bytes(), k.as_bytes()])
}

/// b = h(a ‖ fid), the stored login check value.
fn b_digest(a: &Digest, fid: &Digest) -> Digest {
    hash_fields(&[a.as_bytes(), fid.as_bytes()])
}

/// a1 = h(t1 ‖ fid ‖ k), the login authenticator the server verifies.
pub(crate) fn a1_digest(t1: Timestamp, fid: &Digest, k: &Digest) -> Digest {
    hash_fields(&[&t1.to_be_bytes(), fid.as_bytes(), k.as_bytes()])
}

/// a3 = h(pid ‖ key ‖ drone id ‖ k), the relay authenticator the drone
/// verifies. Note that it does not bind fid, t2, or the ephemeral share.
pub(crate) fn a3_digest(pid: &Digest, key: &Digest, drone_id: &Identity, k: &Digest) -> Digest {
    hash_fields(&[
        pid.as_bytes(),
        key.as_bytes(),
        drone_id.as_bytes(),
        k.as_bytes(),
    ])
}

/// sk = h(drone id ‖ shared DH point ‖ k ‖ fid).
pub(crate) fn session_key_digest(
    drone_id: &Identity,
    shared: &GroupElement,
    k: &Digest,
    fid: &Digest,
) -> SessionKey {
    SessionKey(hash_fields(&[
        drone_id.as_bytes(),
        &shared.encode(),
        k.as_bytes(),
        fid.as_bytes(),
    ]))
}

/// auth = h(sk ‖ fid ‖ t3 ‖ k), the drone's key-confirmation value.
pub(crate) fn auth_digest(sk: &SessionKey, fid: &Digest, t3: Timestamp, k: &Digest) -> Digest {
    hash_fields(&[
        sk.0.as_bytes(),
        fid.as_bytes(),
        &t3.to_be_bytes(),
        k.as_bytes(),
    ])
}

/// User → server registration request: the blinded password digest the user
/// submits alongside their identity over the secure channel.
pub fn user_register_request(id: &Identity, pw: &Password, d: &Scalar) -> Digest {
    ppw_digest(id, pw, d)
}

/// Server side of user registration: derives the pseudonym and long-term
/// secret, stores the verifier row, and returns the device's credentials.
/// The one-time nonce `q` is consumed here and retained nowhere.
pub fn server_register_user(
    db: &mut ServerDatabase,
    id: &Identity,
    ppw: &Digest,
    f: Scalar,
    q: Scalar,
) -> Result<UserRegistrationResponse, ProtocolError> {
    if f.group() != db.group() || q.group() != db.group() {
        return Err(ProtocolError::GroupMismatch);
    }
    if db.has_user_id(id) {
        return Err(ProtocolError::DuplicateIdentity);
    }
    let fid = fid_digest(id, &f);
    let k = hash_fields(&[fid.as_bytes(), &db.secret().to_bytes(), &q.to_bytes()]);
    let a = a_digest(&fid, ppw, &f, &k);
    let b = b_digest(&a, &fid);
    db.insert_user(UserRecord {
        id: id.clone(),
        fid,
        k,
    })?;
    Ok(UserRegistrationResponse { f, k, b })
}

/// Installs the registration response on the user's device, first verifying
/// the check value against the user's own credentials so a corrupted
/// response cannot be provisioned.
pub fn provision_device(
    id: &Identity,
    pw: &Password,
    d: Scalar,
    response: UserRegistrationResponse,
    drone_directory: Vec<DroneDirectoryEntry>,
) -> Result<MobileDeviceStore, ProtocolError> {
    let ppw = ppw_digest(id, pw, &d);
    let fid = fid_digest(id, &response.f);
    let a = a_digest(&fid, &ppw, &response.f, &response.k);
    if b_digest(&a, &fid) != response.b {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(MobileDeviceStore {
        d,
        f: response.f,
        k: response.k,
        b: response.b,
        drone_directory,
    })
}

/// Server side of drone registration: derives the drone's pseudonym and
/// long-term secret and stores the verifier row. The returned value is
/// exactly what the drone keeps in memory. The nonce `a` is not retained.
pub fn server_register_drone(
    db: &mut ServerDatabase,
    id: &Identity,
    a: Scalar,
) -> Result<DroneStore, ProtocolError> {
    if a.group() != db.group() {
        return Err(ProtocolError::GroupMismatch);
    }
    if db.has_drone_id(id) {
        return Err(ProtocolError::DuplicateIdentity);
    }
    let pid = hash_fields(&[&a.to_bytes(), id.as_bytes()]);
    let key = hash_fields(&[id.as_bytes(), &db.secret().to_bytes(), &a.to_bytes()]);
    db.insert_drone(DroneRecord {
        id: id.clone(),
        pid,
        key,
    })?;
    Ok(DroneStore {
        id: id.clone(),
        pid,
        key,
    })
}

/// Device-side login: re-derives the credential chain from the typed
/// identity and password, compares against the stored check value, and on
/// success emits M1 plus the ephemeral state needed to finish the handshake.
pub fn user_login_start(
    store: &MobileDeviceStore,
    id: &Identity,
    pw: &Password,
    target_pid: &Digest,
    t1: Timestamp,
    z: Scalar,
) -> Result<(M1, UserSessionState), ProtocolError> {
    if z.group() != store.f.group() {
        return Err(ProtocolError::GroupMismatch);
    }
    let ppw = ppw_digest(id, pw, &store.d);
    let fid = fid_digest(id, &store.f);
    let a = a_digest(&fid, &ppw, &store.f, &store.k);
    if b_digest(&a, &fid) != store.b {
        return Err(ProtocolError::SessionRejected);
    }
    let drone_id = store
        .drone_directory
        .iter()
        .find(|e| &e.pid == target_pid)
        .map(|e| e.id.clone())
        .ok_or(ProtocolError::UnknownDrone)?;
    let m1 = M1 {
        t1,
        z: scalar_mult(&z, &z.group().generator()),
        a1: a1_digest(t1, &fid, &store.k),
        fid,
        pid: *target_pid,
    };
    let state = UserSessionState {
        z,
        fid,
        k: store.k,
        drone_id,
        t1,
    };
    Ok((m1, state))
}

/// Server relay step: freshness check, verifier-table lookups, authenticator
/// check, then M2 carrying the user secret XOR-wrapped under the drone
/// secret. Note there is no replay defense beyond the freshness window: a
/// byte-exact M1 replayed within ΔT passes this function again.
pub fn server_process_m1(
    db: &ServerDatabase,
    m1: &M1,
    t2: Timestamp,
    delta_t_ms: u64,
) -> Result<M2, ProtocolError> {
    if t2.abs_diff(m1.t1) > delta_t_ms {
        return Err(ProtocolError::StaleTimestamp);
    }
    let user = db.user_by_fid(&m1.fid).ok_or(ProtocolError::UnknownUser)?;
    let drone = db
        .drone_by_pid(&m1.pid)
        .ok_or(ProtocolError::UnknownDrone)?;
    if a1_digest(m1.t1, &m1.fid, &user.k) != m1.a1 {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(M2 {
        a3: a3_digest(&drone.pid, &drone.key, &drone.id, &user.k),
        t2,
        z: m1.z,
        pid: m1.pid,
        kij: user.k.xor(&drone.key),
        fid: m1.fid,
    })
}

/// Drone step: unwraps the user secret from kij, verifies the relay
/// authenticator, derives the session key from its own ephemeral and the
/// user's share, and answers with a key-confirmation message.
pub fn drone_process_m2(
    store: &DroneStore,
    m2: &M2,
    t3: Timestamp,
    delta_t_ms: u64,
    g: Scalar,
) -> Result<(M3, SessionKey), ProtocolError> {
    if m2.pid != store.pid {
        return Err(ProtocolError::NotForMe);
    }
    if t3.abs_diff(m2.t2) > delta_t_ms {
        return Err(ProtocolError::StaleTimestamp);
    }
    if g.group() != m2.z.group() {
        return Err(ProtocolError::GroupMismatch);
    }
    let k = m2.kij.xor(&store.key);
    if a3_digest(&store.pid, &store.key, &store.id, &k) != m2.a3 {
        return Err(ProtocolError::AuthFailure);
    }
    let shared = scalar_mult(&g, &m2.z);
    let sk = session_key_digest(&store.id, &shared, &k, &m2.fid);
    let m3 = M3 {
        g: scalar_mult(&g, &g.group().generator()),
        t3,
        auth: auth_digest(&sk, &m2.fid, t3, &k),
    };
    Ok((m3, sk))
}

/// Final user step: derives the session key from the drone's share and
/// checks the confirmation value. Consumes the session state, so a login
/// attempt can yield at most one key.
pub fn user_process_m3(
    state: UserSessionState,
    m3: &M3,
    t4: Timestamp,
    delta_t_ms: u64,
) -> Result<SessionKey, ProtocolError> {
    if t4.abs_diff(m3.t3) > delta_t_ms {
        return Err(ProtocolError::StaleTimestamp);
    }
    if state.z.group() != m3.g.group() {
        return Err(ProtocolError::GroupMismatch);
    }
    let shared = scalar_mult(&state.z, &m3.g);
    let sk = session_key_digest(&state.drone_id, &shared, &state.k, &state.fid);
    if auth_digest(&sk, &state.fid, m3.t3, &state.k) != m3.auth {
        return Err(ProtocolError::AuthFailure);
    }
    Ok(sk)
}
