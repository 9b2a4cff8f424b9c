mod common;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use biomeval::dataset::{
    load_dataset, stratify, Dataset, DatasetError, DatasetManifest, DemographicAttributes,
    EmbeddingRecord, Ethnicity, Gender, GroupKey, IdentityRecord, MAGIC,
};
use biomeval::simulator::{simulate_dataset, SimulationConfig};
use common::TestRng;

fn write_raw(dir: &Path, manifest: &str, bev: &[u8]) {
    fs::write(dir.join("manifest.json"), manifest).unwrap();
    fs::write(dir.join("embeddings.bev"), bev).unwrap();
}

fn manifest_json(dim: usize, identities: &[(&str, &str, &str, usize)]) -> String {
    let ids: Vec<String> = identities
        .iter()
        .map(|(id, e, g, n)| {
            format!(
                r#"{{"identity_id":"{id}","ethnicity":"{e}","gender":"{g}","variation_count":{n}}}"#
            )
        })
        .collect();
    format!(
        r#"{{"name":"fixture","embedding_dimension":{dim},"identities":[{}],"embedding_file":"embeddings.bev"}}"#,
        ids.join(",")
    )
}

fn record_bytes(index: u32, variation: u32, values: &[f32]) -> Vec<u8> {
    let mut out = index.to_le_bytes().to_vec();
    out.extend_from_slice(&variation.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn two_by_ten(dim: usize) -> (String, Vec<u8>) {
    let manifest = manifest_json(
        dim,
        &[
            ("alice", "Caucasian", "Female", 10),
            ("bob", "African", "Male", 10),
        ],
    );
    let mut bev = MAGIC.to_vec();
    for i in 0..2u32 {
        for v in 0..10u32 {
            let values: Vec<f32> = (0..dim)
                .map(|k| (k as f32 + 1.0) * (i + v + 1) as f32 * 0.01)
                .collect();
            bev.extend(record_bytes(i, v, &values));
        }
    }
    (manifest, bev)
}

#[test]
fn loads_well_formed_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let (m, bev) = two_by_ten(512);
    write_raw(dir.path(), &m, &bev);
    let ds = load_dataset(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(ds.records().len(), 20);
    assert_eq!(ds.dimension(), 512);
    assert_eq!(ds.identities()[0].attributes.gender, Gender::Female);
    // Loading from the directory works too.
    assert_eq!(load_dataset(dir.path()).unwrap(), ds);
}

#[test]
fn short_record_is_a_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (m, mut bev) = two_by_ten(512);
    // Cut the last record (bob, variation 9) down to 256 floats.
    bev.truncate(bev.len() - 256 * 4);
    write_raw(dir.path(), &m, &bev);
    match load_dataset(&dir.path().join("manifest.json")) {
        Err(DatasetError::DimensionMismatch {
            identity_id,
            variation_id,
            expected,
            found,
        }) => {
            assert_eq!((identity_id.as_str(), variation_id), ("bob", 9));
            assert_eq!((expected, found), (512, 256));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn missing_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_dataset(&dir.path().join("manifest.json")),
        Err(DatasetError::MissingFile(_))
    ));
    let (m, _) = two_by_ten(4);
    fs::write(dir.path().join("manifest.json"), m).unwrap();
    match load_dataset(&dir.path().join("manifest.json")) {
        Err(DatasetError::MissingFile(p)) => assert!(p.ends_with("embeddings.bev")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_attribute_label() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_json(2, &[("a", "Asian", "Male", 1), ("b", "Indian", "Male", 1)]);
    let mut bev = MAGIC.to_vec();
    bev.extend(record_bytes(0, 0, &[1.0, 0.0]));
    bev.extend(record_bytes(1, 0, &[0.0, 1.0]));
    write_raw(dir.path(), &m, &bev);
    match load_dataset(dir.path()) {
        Err(DatasetError::UnknownAttributeLabel {
            identity_id,
            field,
            label,
        }) => {
            assert_eq!(
                (identity_id.as_str(), field, label.as_str()),
                ("a", "ethnicity", "Asian")
            );
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn duplicate_identity_and_variation_in_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_json(2, &[("a", "Indian", "Male", 1), ("a", "Indian", "Male", 1)]);
    write_raw(dir.path(), &m, MAGIC);
    assert!(matches!(
        load_dataset(dir.path()),
        Err(DatasetError::DuplicateIdentity(_))
    ));

    let m = manifest_json(2, &[("a", "Indian", "Male", 2), ("b", "Indian", "Male", 1)]);
    let mut bev = MAGIC.to_vec();
    bev.extend(record_bytes(0, 4, &[1.0, 0.0]));
    bev.extend(record_bytes(0, 4, &[1.0, 1.0]));
    bev.extend(record_bytes(1, 0, &[0.0, 1.0]));
    write_raw(dir.path(), &m, &bev);
    assert!(matches!(
        load_dataset(dir.path()),
        Err(DatasetError::DuplicateVariation {
            variation_id: 4,
            ..
        })
    ));
}

#[test]
fn non_finite_and_zero_norm_in_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest_json(2, &[("a", "Indian", "Male", 1), ("b", "Indian", "Male", 1)]);
    let mut bev = MAGIC.to_vec();
    bev.extend(record_bytes(0, 0, &[1.0, f32::INFINITY]));
    bev.extend(record_bytes(1, 0, &[0.0, 1.0]));
    write_raw(dir.path(), &m, &bev);
    assert!(matches!(
        load_dataset(dir.path()),
        Err(DatasetError::NonFiniteComponent { index: 1, .. })
    ));

    let mut bev = MAGIC.to_vec();
    bev.extend(record_bytes(0, 0, &[1.0, 0.0]));
    bev.extend(record_bytes(1, 0, &[0.0, -0.0]));
    write_raw(dir.path(), &m, &bev);
    assert!(matches!(
        load_dataset(dir.path()),
        Err(DatasetError::ZeroNormVector { .. })
    ));
}

#[test]
fn record_order_on_disk_does_not_matter() {
    let ds = simulate_dataset(&SimulationConfig {
        name: "perm".into(),
        identity_count: 5,
        variations_per_identity: 7,
        dimension: 6,
        intra_spread: 0.3,
        seed: 3,
        demographic_plan: None,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.write_to_dir(dir.path()).unwrap();
    let canonical_bytes = fs::read(dir.path().join("embeddings.bev")).unwrap();

    for seed in 1..6u64 {
        // Reverse the manifest's identity list and shuffle the records.
        let n = ds.identities().len() as u32;
        let reversed: Vec<(&str, &str, &str, usize)> = ds
            .identities()
            .iter()
            .rev()
            .map(|i| {
                (
                    i.identity_id.as_str(),
                    "Unknown",
                    "Unknown",
                    i.variation_count,
                )
            })
            .collect();
        let mut recs: Vec<Vec<u8>> = ds
            .records()
            .iter()
            .map(|r| {
                let idx = n - 1 - ds.identity_index(&r.identity_id).unwrap() as u32;
                record_bytes(idx, r.variation_id, &r.vector)
            })
            .collect();
        let mut rng = TestRng(seed);
        for k in (1..recs.len()).rev() {
            recs.swap(k, rng.below(k + 1));
        }
        let shuffled = tempfile::tempdir().unwrap();
        let mut bev = MAGIC.to_vec();
        bev.extend(recs.concat());
        write_raw(
            shuffled.path(),
            &manifest_json(6, &reversed).replace("fixture", "perm"),
            &bev,
        );

        let loaded = load_dataset(shuffled.path()).unwrap();
        assert_eq!(loaded, ds);
        assert_eq!(loaded.embedding_bytes(), canonical_bytes);
    }
}

fn thirty_six() -> Dataset {
    let plan = [
        Ethnicity::EastAsian,
        Ethnicity::African,
        Ethnicity::Caucasian,
        Ethnicity::MiddleEastern,
        Ethnicity::Hispanic,
        Ethnicity::Indian,
    ];
    let mut identities = Vec::new();
    let mut records = Vec::new();
    for (e_idx, &ethnicity) in plan.iter().enumerate() {
        for k in 0..6 {
            let id = format!("p{e_idx}{k}");
            let gender = if k < 3 { Gender::Male } else { Gender::Female };
            identities.push(IdentityRecord {
                identity_id: id.clone(),
                attributes: DemographicAttributes { ethnicity, gender },
                variation_count: 70,
            });
            for v in 0..70u32 {
                records.push(EmbeddingRecord {
                    identity_id: id.clone(),
                    variation_id: v,
                    vector: vec![1.0 + v as f32, e_idx as f32, k as f32],
                });
            }
        }
    }
    Dataset::new(
        DatasetManifest {
            name: "36".into(),
            embedding_dimension: 3,
            identities,
        },
        records,
    )
    .unwrap()
}

#[test]
fn thirty_six_identity_layout_loads_and_stratifies() {
    let ds = thirty_six();
    let dir = tempfile::tempdir().unwrap();
    ds.write_to_dir(dir.path()).unwrap();
    let loaded = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded.records().len(), 36 * 70);

    let by_ethnicity = stratify(&loaded, GroupKey::Ethnicity);
    assert_eq!(by_ethnicity.len(), 6);
    assert!(by_ethnicity.values().all(|g| g.len() == 6));

    // Brute-force count of (ethnicity, gender) cells over the manifest.
    let mut cells: BTreeMap<(Ethnicity, Gender), usize> = BTreeMap::new();
    for i in loaded.identities() {
        *cells
            .entry((i.attributes.ethnicity, i.attributes.gender))
            .or_default() += 1;
    }
    let by_cell = stratify(&loaded, GroupKey::EthnicityGender);
    assert_eq!(by_cell.len(), cells.len());
    assert_eq!(by_cell.len(), 12);
    for ((e, g), n) in cells {
        assert_eq!(by_cell[&format!("{e}/{g}")].len(), n);
        assert_eq!(n, 3);
    }
}

#[test]
fn stratification_partitions_identities() {
    let ds = thirty_six();
    for key in [
        GroupKey::Ethnicity,
        GroupKey::Gender,
        GroupKey::EthnicityGender,
    ] {
        let groups = stratify(&ds, key);
        let mut seen = HashSet::new();
        for members in groups.values() {
            assert!(!members.is_empty());
            for m in members {
                assert!(seen.insert(m.clone()), "{m} in two groups");
            }
        }
        assert_eq!(seen.len(), ds.identities().len());
    }
    let total: usize = ds.identities().iter().map(|i| i.variation_count).sum();
    assert_eq!(total, ds.records().len());
}
