//! Deterministic orchestration: seeded randomness, a logical clock, message
//! delivery with fixed per-hop latency, and transcript capture for the
//! eavesdropper. Nothing here reads the wall clock or OS entropy — identical
//! configs replay to byte-identical artifacts.

mod scenario;

pub use scenario::{run_scenario, Scenario, ScenarioReport, REPORT_VERSION};

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::{hash_fields, random_scalar, GroupId};
use crate::protocol::{
    drone_process_m2, provision_device, server_process_m1, server_register_drone,
    server_register_user, user_login_start, user_process_m3, user_register_request,
    DroneDirectoryEntry, DroneStore, Identity, M1, M2, M3, MobileDeviceStore, Password,
    ProtocolError, ServerDatabase, SessionKey, Timestamp,
};

/// Default freshness window in milliseconds.
pub const DEFAULT_DELTA_T_MS: u64 = 5_000;
/// Default one-way delivery latency per hop in milliseconds.
pub const DEFAULT_LATENCY_MS: u64 = 10;
/// Logical time at which every run starts.
pub const CLOCK_START: Timestamp = Timestamp::from_millis(1_000_000);

fn default_group() -> GroupId {
    GroupId::Curve
}

fn default_delta_t() -> u64 {
    DEFAULT_DELTA_T_MS
}

fn default_latency() -> u64 {
    DEFAULT_LATENCY_MS
}

/// Everything that determines a run: one seed feeds all randomness, and the
/// clock advances by `latency_ms` per message hop.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    #[serde(default = "default_group")]
    pub group: GroupId,
    #[serde(default = "default_delta_t")]
    pub delta_t_ms: u64,
    #[serde(default = "default_latency")]
    pub latency_ms: u64,
}

impl SimConfig {
    pub fn new(seed: u64, group: GroupId) -> Self {
        SimConfig {
            seed,
            group,
            delta_t_ms: DEFAULT_DELTA_T_MS,
            latency_ms: DEFAULT_LATENCY_MS,
        }
    }
}

/// Derive an independent, reproducible random stream from the root seed and
/// a purpose label. Distinct labels give unrelated streams, so adding a draw
/// in one place never perturbs draws elsewhere.
pub fn derive_rng(seed: u64, label: &str) -> ChaCha20Rng {
    let digest = hash_fields(&[&seed.to_be_bytes(), label.as_bytes()]);
    ChaCha20Rng::from_seed(*digest.as_bytes())
}

/// The single logical clock all parties read. Only the harness advances it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Clock {
    now: Timestamp,
}

impl Clock {
    pub fn new() -> Self {
        Clock { now: CLOCK_START }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    /// Advance by a message-delivery delay.
    pub fn advance(&mut self, millis: u64) {
        self.now = self.now.plus(millis);
    }
}

impl Default for Clock {
    fn default() -> Self {
        Clock::new()
    }
}

/// Who sent a captured message to whom.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "user-to-cs")]
    UserToCs,
    #[serde(rename = "cs-to-drone")]
    CsToDrone,
    #[serde(rename = "drone-to-user")]
    DroneToUser,
}

/// A protocol message as the eavesdropper sees it on the public channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    M1(M1),
    M2(M2),
    M3(M3),
}

/// Run-time truth the harness knows but the adversary must never read; kept
/// in a separate struct so it can be stripped wholesale.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    /// Opaque label grouping entries that belong together (e.g. the acting
    /// user's identity), used only to score attacks after the fact.
    pub session_label: String,
}

/// One captured message on the public channel.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub sent_at: Timestamp,
    pub message: Message,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

/// Append-only eavesdropper view of a run. Registration traffic travels over
/// the secure channel and is never recorded here.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    /// Record a message. Panics if time runs backwards — entries must stay
    /// ordered by send time, and only the harness appends.
    pub fn record(
        &mut self,
        direction: Direction,
        sent_at: Timestamp,
        message: Message,
        label: &str,
    ) {
        if let Some(last) = self.entries.last() {
            assert!(
                last.sent_at <= sent_at,
                "transcript entries must be appended in send order"
            );
        }
        self.entries.push(TranscriptEntry {
            direction,
            sent_at,
            message,
            ground_truth: Some(GroundTruth {
                session_label: label.to_string(),
            }),
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The adversary's copy: identical public fields, all ground truth
    /// removed. Attack code takes transcripts through this view so it cannot
    /// cheat even accidentally.
    pub fn adversary_view(&self) -> Transcript {
        Transcript {
            entries: self
                .entries
                .iter()
                .map(|e| TranscriptEntry {
                    ground_truth: None,
                    ..e.clone()
                })
                .collect(),
        }
    }

    pub(crate) fn from_entries(entries: Vec<TranscriptEntry>) -> Transcript {
        Transcript { entries }
    }
}

/// Inputs for registering one user.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UserSpec {
    pub id: Identity,
    pub password: Password,
}

/// Inputs for registering one drone.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DroneSpec {
    pub id: Identity,
}

/// A registered user as the harness tracks it: credentials plus device.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProvisionedUser {
    pub id: Identity,
    pub password: Password,
    pub store: MobileDeviceStore,
}

/// Everything the registration phase produces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RegistrationOutput {
    pub db: ServerDatabase,
    pub users: Vec<ProvisionedUser>,
    pub drones: Vec<DroneStore>,
}

/// Errors surfaced by the harness.
#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
}

/// Register all drones, then all users, over the secure channel. Drones go
/// first so every device can be provisioned with the full drone directory.
/// Nothing is written to the transcript: the adversary never sees this phase.
///
/// Each party's nonces come from its own label-derived stream, so the
/// resulting credentials depend only on (seed, identity), not on list order.
pub fn run_registration(
    config: &SimConfig,
    users: &[UserSpec],
    drones: &[DroneSpec],
) -> Result<RegistrationOutput, SimError> {
    let group = config.group;
    let s = random_scalar(group, &mut derive_rng(config.seed, "server"));
    let mut db = ServerDatabase::new(group, s)?;

    let mut drone_stores = Vec::with_capacity(drones.len());
    for spec in drones {
        let label = format!("register-drone:{}", spec.id);
        let a = random_scalar(group, &mut derive_rng(config.seed, &label));
        drone_stores.push(server_register_drone(&mut db, &spec.id, a)?);
    }
    let directory: Vec<DroneDirectoryEntry> = drone_stores
        .iter()
        .map(|d| DroneDirectoryEntry {
            id: d.id.clone(),
            pid: d.pid,
        })
        .collect();

    let mut provisioned = Vec::with_capacity(users.len());
    for spec in users {
        let label = format!("register-user:{}", spec.id);
        let mut rng = derive_rng(config.seed, &label);
        let d = random_scalar(group, &mut rng);
        let f = random_scalar(group, &mut rng);
        let q = random_scalar(group, &mut rng);
        let ppw = user_register_request(&spec.id, &spec.password, &d);
        let response = server_register_user(&mut db, &spec.id, &ppw, f, q)?;
        let store = provision_device(&spec.id, &spec.password, d, response, directory.clone())?;
        provisioned.push(ProvisionedUser {
            id: spec.id.clone(),
            password: spec.password.clone(),
            store,
        });
    }

    Ok(RegistrationOutput {
        db,
        users: provisioned,
        drones: drone_stores,
    })
}

/// Group login-message indices by the acting user, read off the harness's
/// hidden labels: the part of the session label before `#` names the user
/// (a label without `#` is its own class). This is the answer key a linkage
/// attack is scored against. Returns `None` if any login entry is unlabeled,
/// as in an adversary view — such a transcript cannot be scored.
pub fn ground_truth_partition(transcript: &Transcript) -> Option<Vec<Vec<usize>>> {
    let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (index, entry) in transcript.entries().iter().enumerate() {
        if let Message::M1(_) = entry.message {
            let label = &entry.ground_truth.as_ref()?.session_label;
            let owner = label.split('#').next().unwrap_or(label.as_str());
            classes.entry(owner.to_string()).or_default().push(index);
        }
    }
    let mut partition: Vec<Vec<usize>> = classes.into_values().collect();
    partition.sort();
    Some(partition)
}

/// Drive one complete login through all three hops. The clock advances by
/// `latency_ms` per hop; each receiver reads its timestamp on arrival. All
/// three public messages are appended to the transcript under `label`.
/// Returns the two independently derived session keys (user's, drone's).
pub fn run_honest_session(
    config: &SimConfig,
    db: &ServerDatabase,
    user: &ProvisionedUser,
    drone: &DroneStore,
    clock: &mut Clock,
    transcript: &mut Transcript,
    label: &str,
) -> Result<(SessionKey, SessionKey), SimError> {
    let z = random_scalar(
        config.group,
        &mut derive_rng(config.seed, &format!("session:{label}:user")),
    );
    let g = random_scalar(
        config.group,
        &mut derive_rng(config.seed, &format!("session:{label}:drone")),
    );

    let t1 = clock.now();
    let (m1, state) = user_login_start(&user.store, &user.id, &user.password, &drone.pid, t1, z)?;
    transcript.record(Direction::UserToCs, t1, Message::M1(m1.clone()), label);

    clock.advance(config.latency_ms);
    let t2 = clock.now();
    let m2 = server_process_m1(db, &m1, t2, config.delta_t_ms)?;
    transcript.record(Direction::CsToDrone, t2, Message::M2(m2.clone()), label);

    clock.advance(config.latency_ms);
    let t3 = clock.now();
    let (m3, sk_drone) = drone_process_m2(drone, &m2, t3, config.delta_t_ms, g)?;
    transcript.record(Direction::DroneToUser, t3, Message::M3(m3.clone()), label);

    clock.advance(config.latency_ms);
    let t4 = clock.now();
    let sk_user = user_process_m3(state, &m3, t4, config.delta_t_ms)?;

    Ok((sk_user, sk_drone))
}

/// Drive one login with an explicit delivery delay per hop instead of the
/// uniform `latency_ms`, for probing the freshness window: each receiver
/// reads its clock `delays[hop]` ms after the previous send. No transcript
/// is kept — this is a timing probe, not a capture.
pub fn run_session_with_delays(
    config: &SimConfig,
    db: &ServerDatabase,
    user: &ProvisionedUser,
    drone: &DroneStore,
    delays: [u64; 3],
) -> Result<(SessionKey, SessionKey), SimError> {
    let z = random_scalar(config.group, &mut derive_rng(config.seed, "delays:user"));
    let g = random_scalar(config.group, &mut derive_rng(config.seed, "delays:drone"));

    let mut clock = Clock::new();
    let t1 = clock.now();
    let (m1, state) = user_login_start(&user.store, &user.id, &user.password, &drone.pid, t1, z)?;
    clock.advance(delays[0]);
    let m2 = server_process_m1(db, &m1, clock.now(), config.delta_t_ms)?;
    clock.advance(delays[1]);
    let (m3, sk_drone) = drone_process_m2(drone, &m2, clock.now(), config.delta_t_ms, g)?;
    clock.advance(delays[2]);
    let sk_user = user_process_m3(state, &m3, clock.now(), config.delta_t_ms)?;
    Ok((sk_user, sk_drone))
}
