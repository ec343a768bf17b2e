//! Bit-stable JSON file formats for everything a run reads or writes: the
//! server database (full, or the stolen-verifier export without the server
//! secret), per-party credential stores, transcripts (JSON lines), scenario
//! reports, and the run configuration.
//!
//! All writers go through one canonicalizer — values are converted to a
//! sorted-key JSON tree before rendering — so saving the same value twice
//! yields byte-identical files, which is what makes golden-file and
//! determinism tests possible.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::StolenVerifier;
use crate::crypto::{Digest, GroupId, Scalar};
use crate::protocol::{
    DroneDirectoryEntry, DroneRecord, DroneStore, Identity, MobileDeviceStore, Password,
    ServerDatabase, UserRecord,
};
use crate::sim::{ScenarioReport, SimConfig, Transcript, TranscriptEntry, REPORT_VERSION};

/// Schema version stamped into every file this module writes.
pub const FORMAT_VERSION: u32 = 1;

/// Failures while reading or writing artifact files.
#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("bad file format: {0}")]
    Format(String),
}

fn format_err(detail: impl std::fmt::Display) -> PersistError {
    PersistError::Format(detail.to_string())
}

/// Render any serializable value as canonical JSON: keys sorted, two-space
/// indentation, trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, PersistError> {
    // Round-tripping through `Value` sorts object keys (its map is a BTreeMap).
    let tree = serde_json::to_value(value).map_err(format_err)?;
    let mut text = serde_json::to_string_pretty(&tree).map_err(format_err)?;
    text.push('\n');
    Ok(text)
}

fn write_canonical<T: Serialize>(path: &Path, value: &T) -> Result<(), PersistError> {
    Ok(fs::write(path, canonical_json(value)?)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PersistError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(format_err)
}

fn check_version(found: u32, expected: u32) -> Result<(), PersistError> {
    if found != expected {
        return Err(format_err(format!(
            "unsupported version {found}, this build reads version {expected}"
        )));
    }
    Ok(())
}

/// Whether a database save includes the server secret.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SaveMode {
    /// The server's own file: secret plus both verifier tables.
    Full,
    /// What a database thief walks away with: the stored tables only. The
    /// secret scalar is not part of the stored tables and is omitted.
    StolenVerifier,
}

/// On-disk form of the server database. `s` is present only in full saves.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatabaseFile {
    version: u32,
    group: GroupId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<Scalar>,
    users: Vec<UserRecord>,
    drones: Vec<DroneRecord>,
}

/// Result of loading a database file, typed by what the file contained.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LoadedDatabase {
    Full(ServerDatabase),
    Stolen(GroupId, StolenVerifier),
}

pub fn save_database(db: &ServerDatabase, path: &Path, mode: SaveMode) -> Result<(), PersistError> {
    let file = DatabaseFile {
        version: FORMAT_VERSION,
        group: db.group(),
        s: match mode {
            SaveMode::Full => Some(*db.secret()),
            SaveMode::StolenVerifier => None,
        },
        users: db.users().to_vec(),
        drones: db.drones().to_vec(),
    };
    write_canonical(path, &file)
}

pub fn load_database(path: &Path) -> Result<LoadedDatabase, PersistError> {
    let file: DatabaseFile = read_json(path)?;
    check_version(file.version, FORMAT_VERSION)?;
    match file.s {
        Some(s) => {
            let db = ServerDatabase::from_parts(file.group, s, file.users, file.drones)
                .map_err(format_err)?;
            Ok(LoadedDatabase::Full(db))
        }
        None => Ok(LoadedDatabase::Stolen(
            file.group,
            StolenVerifier {
                users: file.users,
                drones: file.drones,
            },
        )),
    }
}

/// On-disk form of a user's provisioned device. Besides the stored
/// credential material it carries the identity and password the user would
/// type at login, so a saved device is enough to replay sessions from the
/// command line.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceStoreFile {
    pub version: u32,
    pub group: GroupId,
    pub id: Identity,
    pub password: Password,
    pub d: Scalar,
    pub f: Scalar,
    pub k: Digest,
    pub b: Digest,
    pub drone_directory: Vec<DroneDirectoryEntry>,
}

impl DeviceStoreFile {
    pub fn new(
        group: GroupId,
        id: Identity,
        password: Password,
        store: &MobileDeviceStore,
    ) -> Self {
        DeviceStoreFile {
            version: FORMAT_VERSION,
            group,
            id,
            password,
            d: store.d,
            f: store.f,
            k: store.k,
            b: store.b,
            drone_directory: store.drone_directory.clone(),
        }
    }

    pub fn store(&self) -> MobileDeviceStore {
        MobileDeviceStore {
            d: self.d,
            f: self.f,
            k: self.k,
            b: self.b,
            drone_directory: self.drone_directory.clone(),
        }
    }
}

pub fn save_device_store(file: &DeviceStoreFile, path: &Path) -> Result<(), PersistError> {
    write_canonical(path, file)
}

pub fn load_device_store(path: &Path) -> Result<DeviceStoreFile, PersistError> {
    let file: DeviceStoreFile = read_json(path)?;
    check_version(file.version, FORMAT_VERSION)?;
    if file.d.group() != file.group || file.f.group() != file.group {
        return Err(format_err("device scalars do not match the declared group"));
    }
    Ok(file)
}

/// On-disk form of a drone's provisioned memory.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneStoreFile {
    pub version: u32,
    pub group: GroupId,
    pub id: Identity,
    pub pid: Digest,
    pub key: Digest,
}

impl DroneStoreFile {
    pub fn new(group: GroupId, store: &DroneStore) -> Self {
        DroneStoreFile {
            version: FORMAT_VERSION,
            group,
            id: store.id.clone(),
            pid: store.pid,
            key: store.key,
        }
    }

    pub fn store(&self) -> DroneStore {
        DroneStore {
            id: self.id.clone(),
            pid: self.pid,
            key: self.key,
        }
    }
}

pub fn save_drone_store(file: &DroneStoreFile, path: &Path) -> Result<(), PersistError> {
    write_canonical(path, file)
}

pub fn load_drone_store(path: &Path) -> Result<DroneStoreFile, PersistError> {
    let file: DroneStoreFile = read_json(path)?;
    check_version(file.version, FORMAT_VERSION)?;
    Ok(file)
}

/// Write a transcript as JSON lines: one canonical, compact entry per line,
/// in send order.
pub fn export_transcript(transcript: &Transcript, path: &Path) -> Result<(), PersistError> {
    let mut out = String::new();
    for entry in transcript.entries() {
        let tree = serde_json::to_value(entry).map_err(format_err)?;
        out.push_str(&serde_json::to_string(&tree).map_err(format_err)?);
        out.push('\n');
    }
    Ok(fs::write(path, out)?)
}

/// Read a transcript back, including ground-truth labels. Rejects files
/// whose entries are not in send order.
pub fn import_transcript(path: &Path) -> Result<Transcript, PersistError> {
    let text = fs::read_to_string(path)?;
    let mut entries: Vec<TranscriptEntry> = Vec::new();
    for (number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: TranscriptEntry = serde_json::from_str(line)
            .map_err(|e| format_err(format!("line {}: {e}", number + 1)))?;
        if let Some(previous) = entries.last() {
            if previous.sent_at > entry.sent_at {
                return Err(format_err(format!(
                    "line {}: entries out of send order",
                    number + 1
                )));
            }
        }
        entries.push(entry);
    }
    Ok(Transcript::from_entries(entries))
}

/// Read a transcript the way the adversary gets it: same public fields, all
/// ground-truth labels stripped. Attack code should load through this.
pub fn import_transcript_adversary(path: &Path) -> Result<Transcript, PersistError> {
    Ok(import_transcript(path)?.adversary_view())
}

pub fn save_report(report: &ScenarioReport, path: &Path) -> Result<(), PersistError> {
    write_canonical(path, report)
}

pub fn load_report(path: &Path) -> Result<ScenarioReport, PersistError> {
    let report: ScenarioReport = read_json(path)?;
    check_version(report.version, REPORT_VERSION)?;
    Ok(report)
}

/// Read a run configuration. Unspecified keys take their defaults; a
/// freshness window of zero is rejected because it would make every
/// delivered message stale.
pub fn load_config(path: &Path) -> Result<SimConfig, PersistError> {
    let config: SimConfig = read_json(path)?;
    if config.delta_t_ms == 0 {
        return Err(format_err("delta_t_ms must be greater than zero"));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_registration, DroneSpec, UserSpec};

    fn sample_output(seed: u64, group: GroupId) -> crate::sim::RegistrationOutput {
        let users = vec![UserSpec {
            id: Identity::new("alice").unwrap(),
            password: Password::new("pw1").unwrap(),
        }];
        let drones = vec![DroneSpec {
            id: Identity::new("drone-1").unwrap(),
        }];
        run_registration(&SimConfig::new(seed, group), &users, &drones).unwrap()
    }

    #[test]
    fn full_database_round_trips() {
        let out = sample_output(1, GroupId::Toy);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        save_database(&out.db, &path, SaveMode::Full).unwrap();
        match load_database(&path).unwrap() {
            LoadedDatabase::Full(db) => assert_eq!(db, out.db),
            LoadedDatabase::Stolen(..) => panic!("full save must load as full"),
        }
    }

    #[test]
    fn stolen_export_has_no_secret_key() {
        let out = sample_output(2, GroupId::Curve);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stolen.json");
        save_database(&out.db, &path, SaveMode::StolenVerifier).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        assert!(!raw.contains("\"s\""), "stolen export must omit the secret");
        match load_database(&path).unwrap() {
            LoadedDatabase::Stolen(group, stolen) => {
                assert_eq!(group, GroupId::Curve);
                assert_eq!(stolen.users, out.db.users());
                assert_eq!(stolen.drones, out.db.drones());
            }
            LoadedDatabase::Full(_) => panic!("export without s must load as stolen"),
        }
    }

    #[test]
    fn resaving_a_loaded_database_is_byte_identical() {
        let out = sample_output(3, GroupId::Toy);
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.json");
        let second = dir.path().join("b.json");
        save_database(&out.db, &first, SaveMode::Full).unwrap();
        let LoadedDatabase::Full(db) = load_database(&first).unwrap() else {
            panic!("expected full database");
        };
        save_database(&db, &second, SaveMode::Full).unwrap();
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    }

    #[test]
    fn unknown_version_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        let out = sample_output(4, GroupId::Toy);
        save_database(&out.db, &path, SaveMode::Full).unwrap();
        let bumped = fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 9");
        fs::write(&path, bumped).unwrap();
        assert!(matches!(
            load_database(&path),
            Err(PersistError::Format(_))
        ));
    }

    #[test]
    fn truncated_digest_hex_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        let out = sample_output(5, GroupId::Toy);
        save_database(&out.db, &path, SaveMode::Full).unwrap();
        let fid_hex = out.db.users()[0].fid.to_hex();
        let truncated = fs::read_to_string(&path)
            .unwrap()
            .replace(&fid_hex, &fid_hex[..62]);
        fs::write(&path, truncated).unwrap();
        assert!(matches!(
            load_database(&path),
            Err(PersistError::Format(_))
        ));
    }

    #[test]
    fn unknown_keys_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        let out = sample_output(6, GroupId::Toy);
        save_database(&out.db, &path, SaveMode::Full).unwrap();
        let extended = fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\": 1", "\"version\": 1, \"zz\": 0");
        fs::write(&path, extended).unwrap();
        assert!(matches!(
            load_database(&path),
            Err(PersistError::Format(_))
        ));
    }

    #[test]
    fn device_store_round_trips_and_checks_group() {
        let out = sample_output(7, GroupId::Toy);
        let user = &out.users[0];
        let file = DeviceStoreFile::new(
            GroupId::Toy,
            user.id.clone(),
            user.password.clone(),
            &user.store,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("device.json");
        save_device_store(&file, &path).unwrap();
        let loaded = load_device_store(&path).unwrap();
        assert_eq!(loaded, file);
        assert_eq!(loaded.store(), user.store);

        // Declared group contradicts the scalar encodings.
        let lied = fs::read_to_string(&path)
            .unwrap()
            .replace("\"toy\"", "\"curve\"");
        fs::write(&path, lied).unwrap();
        assert!(matches!(
            load_device_store(&path),
            Err(PersistError::Format(_))
        ));
    }

    #[test]
    fn drone_store_round_trips() {
        let out = sample_output(8, GroupId::Curve);
        let file = DroneStoreFile::new(GroupId::Curve, &out.drones[0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("drone.json");
        save_drone_store(&file, &path).unwrap();
        let loaded = load_drone_store(&path).unwrap();
        assert_eq!(loaded.store(), out.drones[0]);
    }

    #[test]
    fn transcript_round_trips_with_one_line_per_message() {
        use crate::sim::{run_honest_session, Clock};
        let out = sample_output(9, GroupId::Toy);
        let config = SimConfig::new(9, GroupId::Toy);
        let mut clock = Clock::new();
        let mut transcript = Transcript::new();
        run_honest_session(
            &config,
            &out.db,
            &out.users[0],
            &out.drones[0],
            &mut clock,
            &mut transcript,
            "session-0",
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.jsonl");
        export_transcript(&transcript, &path).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        assert_eq!(raw.lines().count(), 3);

        let imported = import_transcript(&path).unwrap();
        assert_eq!(imported, transcript);

        let adversary = import_transcript_adversary(&path).unwrap();
        assert!(adversary.entries().iter().all(|e| e.ground_truth.is_none()));
        assert!(!raw.is_empty());
    }

    #[test]
    fn out_of_order_transcript_is_refused() {
        use crate::sim::{run_honest_session, Clock};
        let out = sample_output(10, GroupId::Toy);
        let config = SimConfig::new(10, GroupId::Toy);
        let mut clock = Clock::new();
        let mut transcript = Transcript::new();
        run_honest_session(
            &config,
            &out.db,
            &out.users[0],
            &out.drones[0],
            &mut clock,
            &mut transcript,
            "session-0",
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.jsonl");
        export_transcript(&transcript, &path).unwrap();
        let mut lines: Vec<String> = fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        lines.reverse();
        fs::write(&path, lines.join("\n")).unwrap();
        assert!(matches!(
            import_transcript(&path),
            Err(PersistError::Format(_))
        ));
    }

    #[test]
    fn report_round_trips_canonically() {
        use crate::sim::{run_scenario, Scenario};
        let report =
            run_scenario(&SimConfig::new(11, GroupId::Toy), Scenario::Honest).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        save_report(&report, &path).unwrap();
        let loaded = load_report(&path).unwrap();
        assert_eq!(loaded, report);

        let again = dir.path().join("again.json");
        save_report(&loaded, &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn config_defaults_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");

        fs::write(&path, "{\"seed\": 5}\n").unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.seed, 5);
        assert_eq!(config.group, GroupId::Curve);
        assert_eq!(config.delta_t_ms, crate::sim::DEFAULT_DELTA_T_MS);
        assert_eq!(config.latency_ms, crate::sim::DEFAULT_LATENCY_MS);

        fs::write(&path, "{\"seed\": 5, \"group\": \"toy\", \"delta_t_ms\": 0}\n").unwrap();
        assert!(matches!(load_config(&path), Err(PersistError::Format(_))));

        fs::write(&path, "{\"seed\": 5, \"speed\": 9}\n").unwrap();
        assert!(matches!(load_config(&path), Err(PersistError::Format(_))));
    }

    #[test]
    fn stolen_file_feeds_the_attacks_end_to_end() {
        use crate::attacks::forge_user_m1;
        use crate::crypto::random_scalar;
        use crate::protocol::server_process_m1;
        use crate::sim::derive_rng;

        let out = sample_output(12, GroupId::Toy);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stolen.json");
        save_database(&out.db, &path, SaveMode::StolenVerifier).unwrap();

        let LoadedDatabase::Stolen(group, stolen) = load_database(&path).unwrap() else {
            panic!("expected stolen tables");
        };
        let z_a = random_scalar(group, &mut derive_rng(99, "attacker"));
        let t = crate::sim::Clock::new().now();
        let forged =
            forge_user_m1(&stolen, &stolen.users[0].fid, &stolen.drones[0].pid, t, z_a).unwrap();
        assert!(server_process_m1(&out.db, &forged, t.plus(1), 5_000).is_ok());
    }
}
