//! Named end-to-end scenarios, each producing a deterministic, self-scoring
//! [`ScenarioReport`]. Honest-path failures (a baseline session erroring)
//! propagate as errors; an *attack* failing to land is not an error — it is
//! a report with `success: false`, which the CLI turns into a distinct exit
//! code as a regression signal.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    attacker_complete_key, forge_server_m2, forge_user_m1, link_sessions, StolenVerifier,
};
use crate::crypto::random_scalar;
use crate::protocol::{
    drone_process_m2, server_process_m1, user_login_start, user_process_m3, Identity, Password,
};
use crate::sim::{
    derive_rng, ground_truth_partition, run_honest_session, run_registration, Clock, Direction,
    DroneSpec, Message, RegistrationOutput, SimConfig, SimError, Transcript, UserSpec,
};

/// Schema version of [`ScenarioReport`] files.
pub const REPORT_VERSION: u32 = 1;

/// The six built-in flows: one fully honest, two protocol-behavior probes,
/// and the three attacks.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scenario {
    /// One registration, one login, keys compared.
    Honest,
    /// Every single-byte corruption of each digest field in transit must be
    /// rejected by the next verifier.
    Tamper,
    /// A byte-exact copy of a captured login replayed inside the freshness
    /// window — accepted, faithfully reproducing the modelled scheme's lack
    /// of replay defense.
    ReplayInWindow,
    /// Passive eavesdropper groups sessions by the unchanging pseudonym.
    Track,
    /// Verifier-table thief forges a login the server accepts.
    StealImpersonateUser,
    /// Verifier-table thief forges a server relay the drone accepts, then
    /// completes key agreement with it.
    StealImpersonateServer,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Honest,
        Scenario::Tamper,
        Scenario::ReplayInWindow,
        Scenario::Track,
        Scenario::StealImpersonateUser,
        Scenario::StealImpersonateServer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Honest => "honest",
            Scenario::Tamper => "tamper",
            Scenario::ReplayInWindow => "replay-in-window",
            Scenario::Track => "track",
            Scenario::StealImpersonateUser => "steal-impersonate-user",
            Scenario::StealImpersonateServer => "steal-impersonate-server",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| SimError::UnknownScenario(s.to_string()))
    }
}

/// Machine-checkable outcome of one scenario run. Serialized canonically, so
/// identical configs produce byte-identical files.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioReport {
    pub version: u32,
    pub scenario: String,
    pub config: SimConfig,
    /// One-phrase outcome, stable per scenario (e.g. "keys-match").
    pub verdict: String,
    /// Whether the scenario demonstrated what it set out to demonstrate.
    /// For attack scenarios this means the attack *succeeded*.
    pub success: bool,
    /// Named boolean observations backing the verdict.
    pub checks: BTreeMap<String, bool>,
    /// Named tallies (sessions run, mutations tried, classes found, …).
    pub counts: BTreeMap<String, u64>,
    /// Everything that crossed the public channel, ground truth included.
    pub transcript: Transcript,
}

struct ReportBuilder {
    checks: BTreeMap<String, bool>,
    counts: BTreeMap<String, u64>,
}

impl ReportBuilder {
    fn new() -> Self {
        ReportBuilder {
            checks: BTreeMap::new(),
            counts: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    fn count(&mut self, name: &str, n: u64) {
        self.counts.insert(name.to_string(), n);
    }

    fn finish(
        self,
        scenario: Scenario,
        config: &SimConfig,
        verdict_ok: &str,
        verdict_fail: &str,
        transcript: Transcript,
    ) -> ScenarioReport {
        let success = self.checks.values().all(|&ok| ok);
        ScenarioReport {
            version: REPORT_VERSION,
            scenario: scenario.name().to_string(),
            config: *config,
            verdict: if success { verdict_ok } else { verdict_fail }.to_string(),
            success,
            checks: self.checks,
            counts: self.counts,
            transcript,
        }
    }
}

fn party_specs(users: usize, drones: usize) -> (Vec<UserSpec>, Vec<DroneSpec>) {
    let users = (0..users)
        .map(|i| UserSpec {
            id: Identity::new(format!("user-{i}")).expect("generated id is valid"),
            password: Password::new(format!("pw-{i}")).expect("generated password is valid"),
        })
        .collect();
    let drones = (0..drones)
        .map(|i| DroneSpec {
            id: Identity::new(format!("drone-{i}")).expect("generated id is valid"),
        })
        .collect();
    (users, drones)
}

/// Execute one named scenario under the given configuration.
pub fn run_scenario(config: &SimConfig, scenario: Scenario) -> Result<ScenarioReport, SimError> {
    match scenario {
        Scenario::Honest => run_honest(config),
        Scenario::Tamper => run_tamper(config),
        Scenario::ReplayInWindow => run_replay_in_window(config),
        Scenario::Track => run_track(config),
        Scenario::StealImpersonateUser => run_steal_impersonate_user(config),
        Scenario::StealImpersonateServer => run_steal_impersonate_server(config),
    }
}

fn register(config: &SimConfig, users: usize, drones: usize) -> Result<RegistrationOutput, SimError> {
    let (user_specs, drone_specs) = party_specs(users, drones);
    run_registration(config, &user_specs, &drone_specs)
}

fn run_honest(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    let out = register(config, 1, 1)?;
    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    let (sk_user, sk_drone) = run_honest_session(
        config,
        &out.db,
        &out.users[0],
        &out.drones[0],
        &mut clock,
        &mut transcript,
        "session-0",
    )?;

    let mut report = ReportBuilder::new();
    report.check("keys_match", sk_user == sk_drone);
    report.count("sessions", 1);
    report.count("transcript_entries", transcript.len() as u64);
    Ok(report.finish(Scenario::Honest, config, "keys-match", "keys-mismatch", transcript))
}

fn run_tamper(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    const FIELDS: [&str; 4] = ["a1", "a3", "kij", "auth"];
    let out = register(config, 1, 1)?;
    let user = &out.users[0];
    let drone = &out.drones[0];

    // Keep one clean session on the transcript as the reference exchange.
    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    run_honest_session(
        config,
        &out.db,
        user,
        drone,
        &mut clock,
        &mut transcript,
        "baseline",
    )?;

    let mut mutations = 0u64;
    let mut rejected = 0u64;
    for field in FIELDS {
        for pos in 0..crate::crypto::DIGEST_LEN {
            mutations += 1;
            let label = format!("tamper:{field}:{pos}");
            let z = random_scalar(config.group, &mut derive_rng(config.seed, &format!("{label}:user")));
            let g = random_scalar(config.group, &mut derive_rng(config.seed, &format!("{label}:drone")));

            // Honest parties, fresh clock; only the named byte is corrupted
            // in transit, and the immediate next verifier must reject.
            let mut clock = Clock::new();
            let t1 = clock.now();
            let (m1, state) =
                user_login_start(&user.store, &user.id, &user.password, &drone.pid, t1, z)?;
            clock.advance(config.latency_ms);
            let t2 = clock.now();

            let refused = match field {
                "a1" => {
                    let mut m = m1;
                    m.a1 = m.a1.with_flipped_byte(pos);
                    server_process_m1(&out.db, &m, t2, config.delta_t_ms).is_err()
                }
                "a3" | "kij" => {
                    let mut m2 = server_process_m1(&out.db, &m1, t2, config.delta_t_ms)?;
                    clock.advance(config.latency_ms);
                    let t3 = clock.now();
                    if field == "a3" {
                        m2.a3 = m2.a3.with_flipped_byte(pos);
                    } else {
                        m2.kij = m2.kij.with_flipped_byte(pos);
                    }
                    drone_process_m2(drone, &m2, t3, config.delta_t_ms, g).is_err()
                }
                "auth" => {
                    let m2 = server_process_m1(&out.db, &m1, t2, config.delta_t_ms)?;
                    clock.advance(config.latency_ms);
                    let t3 = clock.now();
                    let (mut m3, _) =
                        drone_process_m2(drone, &m2, t3, config.delta_t_ms, g)?;
                    clock.advance(config.latency_ms);
                    let t4 = clock.now();
                    m3.auth = m3.auth.with_flipped_byte(pos);
                    user_process_m3(state, &m3, t4, config.delta_t_ms).is_err()
                }
                _ => unreachable!(),
            };
            if refused {
                rejected += 1;
            }
        }
    }

    let mut report = ReportBuilder::new();
    report.check("all_mutations_rejected", rejected == mutations);
    report.count("mutations", mutations);
    report.count("rejected", rejected);
    Ok(report.finish(
        Scenario::Tamper,
        config,
        "all-mutations-rejected",
        "mutation-survived",
        transcript,
    ))
}

fn run_replay_in_window(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    let out = register(config, 1, 1)?;
    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    run_honest_session(
        config,
        &out.db,
        &out.users[0],
        &out.drones[0],
        &mut clock,
        &mut transcript,
        "session-0",
    )?;

    let Message::M1(captured) = transcript.entries()[0].message.clone() else {
        unreachable!("a session transcript starts with the login message");
    };

    // The eavesdropper resends the captured bytes unchanged. Its embedded
    // timestamp is three hops old — still comfortably inside the window.
    let replay_label = "replay-of-session-0";
    transcript.record(
        Direction::UserToCs,
        clock.now(),
        Message::M1(captured.clone()),
        replay_label,
    );
    clock.advance(config.latency_ms);
    let outcome = server_process_m1(&out.db, &captured, clock.now(), config.delta_t_ms);
    let accepted = match outcome {
        Ok(m2) => {
            transcript.record(Direction::CsToDrone, clock.now(), Message::M2(m2), replay_label);
            true
        }
        Err(_) => false,
    };

    let mut report = ReportBuilder::new();
    report.check("replay_accepted", accepted);
    report.count("replays", 1);
    Ok(report.finish(
        Scenario::ReplayInWindow,
        config,
        "replay-accepted",
        "replay-rejected",
        transcript,
    ))
}

/// Default population for the tracking scenario.
const TRACK_USERS: usize = 3;
const TRACK_SESSIONS_PER_USER: usize = 4;

fn run_track(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    let out = register(config, TRACK_USERS, 1)?;

    // Interleave everyone's sessions so linkage cannot fall out of ordering.
    let mut order: Vec<(usize, usize)> = (0..TRACK_USERS)
        .flat_map(|u| (0..TRACK_SESSIONS_PER_USER).map(move |s| (u, s)))
        .collect();
    order.shuffle(&mut derive_rng(config.seed, "track:order"));

    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    for (u, s) in order {
        let user = &out.users[u];
        // The ground-truth label is simply who acted; the linker never sees it.
        run_honest_session(
            config,
            &out.db,
            user,
            &out.drones[0],
            &mut clock,
            &mut transcript,
            &format!("{}#{s}", user.id),
        )?;
    }

    let linked = link_sessions(&transcript.adversary_view());
    let truth_partition =
        ground_truth_partition(&transcript).expect("the harness labels every entry");

    let mut report = ReportBuilder::new();
    report.check("partition_exact", linked.partition() == truth_partition);
    report.count("users", TRACK_USERS as u64);
    report.count("sessions_per_user", TRACK_SESSIONS_PER_USER as u64);
    report.count("login_messages", (TRACK_USERS * TRACK_SESSIONS_PER_USER) as u64);
    report.count("linked_classes", linked.class_count() as u64);
    Ok(report.finish(
        Scenario::Track,
        config,
        "linkage-perfect",
        "linkage-imperfect",
        transcript,
    ))
}

fn run_steal_impersonate_user(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    let out = register(config, 1, 1)?;
    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    run_honest_session(
        config,
        &out.db,
        &out.users[0],
        &out.drones[0],
        &mut clock,
        &mut transcript,
        "session-0",
    )?;

    // The attacker's inputs: the leaked tables plus the observed login.
    let stolen = StolenVerifier::from_database(&out.db);
    let Message::M1(observed) = &transcript.entries()[0].message else {
        unreachable!("a session transcript starts with the login message");
    };
    let (fid, pid) = (observed.fid, observed.pid);
    let z_a = random_scalar(config.group, &mut derive_rng(config.seed, "attacker"));

    let forged = forge_user_m1(&stolen, &fid, &pid, clock.now(), z_a)?;
    transcript.record(
        Direction::UserToCs,
        clock.now(),
        Message::M1(forged.clone()),
        "forged-login",
    );
    clock.advance(config.latency_ms);
    let outcome = server_process_m1(&out.db, &forged, clock.now(), config.delta_t_ms);
    let accepted = match outcome {
        Ok(m2) => {
            transcript.record(Direction::CsToDrone, clock.now(), Message::M2(m2), "forged-login");
            true
        }
        Err(_) => false,
    };

    let mut report = ReportBuilder::new();
    report.check("server_accepted", accepted);
    report.count("forgeries", 1);
    Ok(report.finish(
        Scenario::StealImpersonateUser,
        config,
        "server-accepted-forgery",
        "forgery-rejected",
        transcript,
    ))
}

fn run_steal_impersonate_server(config: &SimConfig) -> Result<ScenarioReport, SimError> {
    let out = register(config, 1, 1)?;
    let mut clock = Clock::new();
    let mut transcript = Transcript::new();
    run_honest_session(
        config,
        &out.db,
        &out.users[0],
        &out.drones[0],
        &mut clock,
        &mut transcript,
        "session-0",
    )?;

    let stolen = StolenVerifier::from_database(&out.db);
    let victim = &stolen.users[0];
    let target = &stolen.drones[0];
    let z_a = random_scalar(config.group, &mut derive_rng(config.seed, "attacker"));

    let forged = forge_server_m2(&stolen, &target.pid, &victim.fid, clock.now(), z_a)?;
    transcript.record(
        Direction::CsToDrone,
        clock.now(),
        Message::M2(forged.clone()),
        "forged-relay",
    );
    clock.advance(config.latency_ms);

    // The honest drone draws its own fresh ephemeral, as in any session.
    let g = random_scalar(
        config.group,
        &mut derive_rng(config.seed, "session:forged-relay:drone"),
    );
    let outcome = drone_process_m2(&out.drones[0], &forged, clock.now(), config.delta_t_ms, g);
    let (accepted, keys_match) = match outcome {
        Ok((m3, sk_drone)) => {
            transcript.record(
                Direction::DroneToUser,
                clock.now(),
                Message::M3(m3.clone()),
                "forged-relay",
            );
            let sk_attacker =
                attacker_complete_key(&z_a, &m3.g, &target.id, &victim.k, &victim.fid);
            (true, sk_attacker == sk_drone)
        }
        Err(_) => (false, false),
    };

    let mut report = ReportBuilder::new();
    report.check("drone_accepted", accepted);
    report.check("keys_match", keys_match);
    report.count("forgeries", 1);
    Ok(report.finish(
        Scenario::StealImpersonateServer,
        config,
        "drone-accepted-forgery",
        "forgery-rejected",
        transcript,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::GroupId;

    #[test]
    fn scenario_names_round_trip() {
        for scenario in Scenario::ALL {
            assert_eq!(scenario.name().parse::<Scenario>().unwrap(), scenario);
        }
        assert!(matches!(
            "no-such-flow".parse::<Scenario>(),
            Err(SimError::UnknownScenario(_))
        ));
    }

    #[test]
    fn every_scenario_succeeds_on_both_groups() {
        for group in [GroupId::Toy, GroupId::Curve] {
            for scenario in Scenario::ALL {
                let config = SimConfig::new(17, group);
                let report = run_scenario(&config, scenario).unwrap();
                assert!(
                    report.success,
                    "{scenario} on {group} reported {}",
                    report.verdict
                );
                assert_eq!(report.scenario, scenario.name());
            }
        }
    }

    #[test]
    fn honest_scenario_reports_matching_keys() {
        let report = run_scenario(&SimConfig::new(1, GroupId::Toy), Scenario::Honest).unwrap();
        assert_eq!(report.verdict, "keys-match");
        assert!(report.checks["keys_match"]);
        assert_eq!(report.counts["transcript_entries"], 3);
    }

    #[test]
    fn tamper_scenario_tries_all_128_mutations() {
        let report = run_scenario(&SimConfig::new(2, GroupId::Toy), Scenario::Tamper).unwrap();
        assert_eq!(report.counts["mutations"], 128);
        assert_eq!(report.counts["rejected"], 128);
        assert_eq!(report.verdict, "all-mutations-rejected");
    }

    #[test]
    fn replay_scenario_confirms_the_missing_defense() {
        let report =
            run_scenario(&SimConfig::new(3, GroupId::Toy), Scenario::ReplayInWindow).unwrap();
        assert_eq!(report.verdict, "replay-accepted");
        // Honest session (3) + replayed login + the server's fresh relay.
        assert_eq!(report.transcript.len(), 5);
    }

    #[test]
    fn track_scenario_recovers_the_user_partition() {
        let report = run_scenario(&SimConfig::new(4, GroupId::Toy), Scenario::Track).unwrap();
        assert_eq!(report.verdict, "linkage-perfect");
        assert_eq!(report.counts["linked_classes"], 3);
        assert_eq!(report.counts["login_messages"], 12);
    }

    #[test]
    fn impersonation_scenarios_report_their_checks() {
        let user = run_scenario(
            &SimConfig::new(5, GroupId::Toy),
            Scenario::StealImpersonateUser,
        )
        .unwrap();
        assert_eq!(user.verdict, "server-accepted-forgery");
        assert!(user.checks["server_accepted"]);

        let server = run_scenario(
            &SimConfig::new(6, GroupId::Toy),
            Scenario::StealImpersonateServer,
        )
        .unwrap();
        assert_eq!(server.verdict, "drone-accepted-forgery");
        assert!(server.checks["drone_accepted"]);
        assert!(server.checks["keys_match"]);
    }

    #[test]
    fn reports_are_exactly_reproducible() {
        for scenario in Scenario::ALL {
            let config = SimConfig::new(23, GroupId::Curve);
            let a = run_scenario(&config, scenario).unwrap();
            let b = run_scenario(&config, scenario).unwrap();
            assert_eq!(a, b, "{scenario} must replay identically");
        }
    }
}
