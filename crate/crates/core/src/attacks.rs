//! The adversary's toolbox. Two attacker models are implemented:
//!
//! - a **passive eavesdropper** on the public channel, who can link all of a
//!   user's sessions because the pseudonym `fid` never changes
//!   ([`link_sessions`]);
//! - a **verifier-table thief** who has read the server's stored user and
//!   drone tables — but *not* the server's secret scalar — and can forge
//!   valid logins ([`forge_user_m1`]) and valid server relays
//!   ([`forge_server_m2`]), including full key agreement with the drone
//!   ([`attacker_complete_key`]).
//!
//! Every function here takes only [`StolenVerifier`] fields and data visible
//! on the public channel. None of them can reach the server secret,
//! passwords, or any honest party's ephemeral scalar — the types don't carry
//! them — which keeps the demonstrations honest about what leaks suffice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::crypto::{scalar_mult, Digest, GroupElement, Scalar};
use crate::protocol::{
    a1_digest, a3_digest, session_key_digest, DroneRecord, Identity, ProtocolError,
    ServerDatabase, SessionKey, Timestamp, UserRecord, M1, M2,
};
use crate::sim::{Message, Transcript};

/// The leaked contents of the server's credential store: exactly the two
/// tables the server persists, and nothing else. Constructing one from a
/// [`ServerDatabase`] models the database file being exfiltrated; the server
/// secret is not copied because it is not part of the stored tables.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StolenVerifier {
    pub users: Vec<UserRecord>,
    pub drones: Vec<DroneRecord>,
}

impl StolenVerifier {
    pub fn from_database(db: &ServerDatabase) -> Self {
        StolenVerifier {
            users: db.users().to_vec(),
            drones: db.drones().to_vec(),
        }
    }

    pub fn user_by_fid(&self, fid: &Digest) -> Option<&UserRecord> {
        self.users.iter().find(|u| &u.fid == fid)
    }

    pub fn drone_by_pid(&self, pid: &Digest) -> Option<&DroneRecord> {
        self.drones.iter().find(|d| &d.pid == pid)
    }
}

/// Output of the session linker: login messages grouped by the pseudonym
/// they expose. Each class is one tracked user; indices point into the
/// transcript the map was built from.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkageMap {
    classes: BTreeMap<Digest, Vec<usize>>,
}

impl LinkageMap {
    pub fn classes(&self) -> &BTreeMap<Digest, Vec<usize>> {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// The partition as index sets, each sorted, ordered by smallest member —
    /// a canonical form for comparing against a ground-truth partition.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut parts: Vec<Vec<usize>> = self.classes.values().cloned().collect();
        for p in &mut parts {
            p.sort_unstable();
        }
        parts.sort();
        parts
    }
}

/// Passive tracking: group every login message by its byte-equal pseudonym.
/// Uses nothing but public M1 fields — ground-truth labels are neither read
/// nor needed — yet recovers exactly who initiated which sessions, because
/// one user's pseudonym never varies.
pub fn link_sessions(transcript: &Transcript) -> LinkageMap {
    let mut classes: BTreeMap<Digest, Vec<usize>> = BTreeMap::new();
    for (index, entry) in transcript.entries().iter().enumerate() {
        if let Message::M1(m1) = &entry.message {
            classes.entry(m1.fid).or_default().push(index);
        }
    }
    LinkageMap { classes }
}

/// Impersonate a user to the server: with the victim's leaked `(fid, k)` the
/// attacker computes the same login authenticator an honest device would,
/// under its own fresh ephemeral. The server has no way to tell the forgery
/// from a real login.
pub fn forge_user_m1(
    stolen: &StolenVerifier,
    fid: &Digest,
    pid: &Digest,
    t: Timestamp,
    z_a: Scalar,
) -> Result<M1, ProtocolError> {
    let victim = stolen.user_by_fid(fid).ok_or(ProtocolError::UnknownUser)?;
    Ok(M1 {
        t1: t,
        z: scalar_mult(&z_a, &z_a.group().generator()),
        a1: a1_digest(t, fid, &victim.k),
        fid: *fid,
        pid: *pid,
    })
}

/// Impersonate the server to a drone: the leaked drone row gives `key` and
/// the drone's identity, the leaked user row gives `k`, and those are all
/// the relay authenticator binds. The attacker plants its own ephemeral
/// share, so the subsequent key agreement runs attacker ↔ drone.
pub fn forge_server_m2(
    stolen: &StolenVerifier,
    pid: &Digest,
    fid: &Digest,
    t: Timestamp,
    z_a: Scalar,
) -> Result<M2, ProtocolError> {
    let drone = stolen.drone_by_pid(pid).ok_or(ProtocolError::UnknownDrone)?;
    let victim = stolen.user_by_fid(fid).ok_or(ProtocolError::UnknownUser)?;
    Ok(M2 {
        a3: a3_digest(&drone.pid, &drone.key, &drone.id, &victim.k),
        t2: t,
        z: scalar_mult(&z_a, &z_a.group().generator()),
        pid: *pid,
        kij: victim.k.xor(&drone.key),
        fid: *fid,
    })
}

/// Finish the key agreement after a successful [`forge_server_m2`]: combine
/// the attacker's own ephemeral with the drone's share from M3 and evaluate
/// the session-key derivation with leaked long-term values. The result
/// equals the key the drone just accepted.
pub fn attacker_complete_key(
    z_a: &Scalar,
    g_share: &GroupElement,
    drone_id: &Identity,
    k: &Digest,
    fid: &Digest,
) -> SessionKey {
    let shared = scalar_mult(z_a, g_share);
    session_key_digest(drone_id, &shared, k, fid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::GroupId;
    use crate::protocol::{drone_process_m2, server_process_m1};
    use crate::sim::{
        run_honest_session, run_registration, Clock, DroneSpec, SimConfig, UserSpec,
    };
    use crate::protocol::{Identity, Password};

    fn setup(seed: u64, users: usize) -> (SimConfig, crate::sim::RegistrationOutput) {
        let config = SimConfig::new(seed, GroupId::Toy);
        let user_specs: Vec<UserSpec> = (0..users)
            .map(|i| UserSpec {
                id: Identity::new(format!("user-{i}")).unwrap(),
                password: Password::new(format!("pw-{i}")).unwrap(),
            })
            .collect();
        let drone_specs = vec![DroneSpec {
            id: Identity::new("drone-0").unwrap(),
        }];
        let out = run_registration(&config, &user_specs, &drone_specs).unwrap();
        (config, out)
    }

    #[test]
    fn empty_transcript_links_to_nothing() {
        assert!(link_sessions(&Transcript::new()).is_empty());
    }

    #[test]
    fn two_sessions_of_one_user_form_one_class_of_two() {
        let (config, out) = setup(31, 1);
        let mut clock = Clock::new();
        let mut transcript = Transcript::new();
        for i in 0..2 {
            run_honest_session(
                &config,
                &out.db,
                &out.users[0],
                &out.drones[0],
                &mut clock,
                &mut transcript,
                &format!("session-{i}"),
            )
            .unwrap();
        }
        let map = link_sessions(&transcript.adversary_view());
        assert_eq!(map.class_count(), 1);
        assert_eq!(map.partition(), vec![vec![0, 3]]);
    }

    #[test]
    fn forged_login_is_accepted_by_the_server() {
        let (config, out) = setup(32, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let fid = stolen.users[0].fid;
        let pid = stolen.drones[0].pid;
        let z_a = Scalar::from_u64(GroupId::Toy, 9).unwrap();
        let t = Clock::new().now();
        let m1 = forge_user_m1(&stolen, &fid, &pid, t, z_a).unwrap();
        let m2 = server_process_m1(&out.db, &m1, t.plus(config.latency_ms), config.delta_t_ms)
            .expect("server cannot distinguish the forgery");
        assert_eq!(m2.fid, fid);
    }

    #[test]
    fn forged_login_with_stale_timestamp_is_still_rejected() {
        let (config, out) = setup(33, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let z_a = Scalar::from_u64(GroupId::Toy, 9).unwrap();
        let t = Clock::new().now();
        let m1 = forge_user_m1(&stolen, &stolen.users[0].fid, &stolen.drones[0].pid, t, z_a)
            .unwrap();
        let received = t.plus(config.delta_t_ms + 1);
        assert_eq!(
            server_process_m1(&out.db, &m1, received, config.delta_t_ms),
            Err(ProtocolError::StaleTimestamp)
        );
    }

    #[test]
    fn forgery_requires_the_victim_in_the_leak() {
        let (_, out) = setup(34, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let absent = stolen.users[0].fid.with_flipped_byte(0);
        let z_a = Scalar::from_u64(GroupId::Toy, 2).unwrap();
        let t = Clock::new().now();
        assert_eq!(
            forge_user_m1(&stolen, &absent, &stolen.drones[0].pid, t, z_a).unwrap_err(),
            ProtocolError::UnknownUser
        );
        assert_eq!(
            forge_server_m2(&stolen, &absent, &stolen.users[0].fid, t, z_a).unwrap_err(),
            ProtocolError::UnknownDrone
        );
    }

    #[test]
    fn forged_relay_is_accepted_and_keys_agree_with_the_attacker() {
        let (config, out) = setup(35, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let fid = stolen.users[0].fid;
        let pid = stolen.drones[0].pid;
        let z_a = Scalar::from_u64(GroupId::Toy, 5).unwrap();
        let t = Clock::new().now();
        let m2 = forge_server_m2(&stolen, &pid, &fid, t, z_a).unwrap();
        let g = Scalar::from_u64(GroupId::Toy, 8).unwrap();
        let (m3, sk_drone) = drone_process_m2(
            &out.drones[0],
            &m2,
            t.plus(config.latency_ms),
            config.delta_t_ms,
            g,
        )
        .expect("drone cannot distinguish the fake relay");
        let sk_attacker = attacker_complete_key(
            &z_a,
            &m3.g,
            &stolen.drones[0].id,
            &stolen.users[0].k,
            &fid,
        );
        assert_eq!(sk_attacker, sk_drone);
    }

    #[test]
    fn forged_relay_must_be_byte_exact() {
        let (config, out) = setup(36, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let z_a = Scalar::from_u64(GroupId::Toy, 5).unwrap();
        let t = Clock::new().now();
        let mut m2 = forge_server_m2(&stolen, &stolen.drones[0].pid, &stolen.users[0].fid, t, z_a)
            .unwrap();
        m2.a3 = m2.a3.with_flipped_byte(11);
        let g = Scalar::from_u64(GroupId::Toy, 8).unwrap();
        assert_eq!(
            drone_process_m2(&out.drones[0], &m2, t.plus(1), config.delta_t_ms, g).unwrap_err(),
            ProtocolError::AuthFailure
        );
    }

    #[test]
    fn identity_ephemeral_reuses_the_drone_share_directly() {
        let (_, out) = setup(37, 1);
        let stolen = StolenVerifier::from_database(&out.db);
        let one = Scalar::from_u64(GroupId::Toy, 1).unwrap();
        let g_share = GroupId::Toy.generator();
        let sk = attacker_complete_key(
            &one,
            &g_share,
            &stolen.drones[0].id,
            &stolen.users[0].k,
            &stolen.users[0].fid,
        );
        let direct = session_key_digest(
            &stolen.drones[0].id,
            &g_share,
            &stolen.users[0].k,
            &stolen.users[0].fid,
        );
        assert_eq!(sk, direct);
    }

    #[test]
    fn stale_leak_fails_against_a_reprovisioned_server() {
        // Negative control: if the user re-registers (fresh seed → fresh k),
        // credentials from an old leak no longer verify.
        let (config, old) = setup(38, 1);
        let stolen = StolenVerifier::from_database(&old.db);
        let (_, fresh) = setup(39, 1);
        let z_a = Scalar::from_u64(GroupId::Toy, 3).unwrap();
        let t = Clock::new().now();
        // Same fid lookup target: aim at the fresh server's current fid so
        // the lookup succeeds and only the authenticator is stale.
        let fresh_fid = fresh.db.users()[0].fid;
        let mut forged = forge_user_m1(
            &stolen,
            &stolen.users[0].fid,
            &stolen.drones[0].pid,
            t,
            z_a,
        )
        .unwrap();
        forged.fid = fresh_fid;
        forged.pid = fresh.db.drones()[0].pid;
        assert_eq!(
            server_process_m1(&fresh.db, &forged, t.plus(1), config.delta_t_ms),
            Err(ProtocolError::AuthFailure)
        );
    }
}
