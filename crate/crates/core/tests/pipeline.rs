use infoveil_core::fixtures::{self, reference_snapshot};
use infoveil_core::ingest::{self, read_rsv_csv, snapshot_from_table, table_from_snapshot, write_rsv_csv};
use infoveil_core::snapshot::SnapshotError;
use infoveil_core::{Catalog, SnapshotStore};

#[test]
fn fixture_csv_round_trips_to_the_same_snapshot() {
    let s = reference_snapshot(fixtures::DEFAULT_SEED);
    let mut csv = Vec::new();
    write_rsv_csv(&table_from_snapshot(&s), &mut csv).unwrap();
    let table = read_rsv_csv(csv.as_slice(), Catalog::bundled()).unwrap();
    let indicators = vec![ingest::bundled_unemployment(), ingest::bundled_medicaid()];
    let rebuilt = snapshot_from_table(table, indicators, Catalog::bundled(), fixtures::created_at()).unwrap();
    assert_eq!(rebuilt, s);
    assert_eq!(rebuilt.content_hash(), s.content_hash());
}

#[test]
fn store_serves_committed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let store = SnapshotStore::open(dir.path()).unwrap();
    let s = reference_snapshot(3);
    let hash = store.save_and_commit(&s).unwrap();
    assert_eq!(hash, s.content_hash());
    let loaded = store.load_head().unwrap();
    assert_eq!(loaded, s);
    assert_eq!(loaded.content_hash(), hash);

    let path = dir.path().join(format!("{hash}.json"));
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(store.load(&hash), Err(SnapshotError::CorruptSnapshot { .. })));
}
