use std::collections::BTreeMap;

use proptest::prelude::*;
use tempfile::TempDir;
use texsem::autodiff::{AdamState, Scalar};
use texsem::io::checkpoint::{FORMAT_VERSION, MAGIC};
use texsem::io::ppm::{from_byte, to_byte};
use texsem::io::{
    decode_ppm, encode_ppm, load_checkpoint, save_checkpoint, Checkpoint, DatasetManifest, ManifestRow, ModelKind,
    OptimizerEntry,
};
use texsem::learn::{KnnModel, LdlModel, TrainingSet};
use texsem::{AdamConfig, Error, LabelDistribution, ParamSet, Tensor, TextureImage};

fn small_manifest(rows: usize) -> DatasetManifest {
    let mut m = DatasetManifest::new(3);
    m.feature_names = vec!["f0".into(), "f1".into()];
    for i in 0..rows {
        m.push(ManifestRow {
            image: format!("img_{i}.ppm"),
            semantics: vec![0.1 * i as f64, 1.0, 0.0],
            features: vec![-(i as f64), 2.5],
        })
        .unwrap();
    }
    m
}

fn arb_tensor<T: Scalar>(value: impl Strategy<Value = T> + Clone) -> impl Strategy<Value = Tensor<T>> {
    prop::collection::vec(1usize..5, 0..3).prop_flat_map(move |shape| {
        let n = shape.iter().product::<usize>();
        prop::collection::vec(value.clone(), n).prop_map(move |data| Tensor::new(shape.clone(), data).unwrap())
    })
}

fn param_set<T: Scalar>(tensors: Vec<Tensor<T>>, prefix: &str) -> ParamSet<T> {
    let mut p = ParamSet::new();
    for (i, t) in tensors.into_iter().enumerate() {
        p.insert(&format!("{prefix}.{i}"), t);
    }
    p
}

fn arb_checkpoint() -> impl Strategy<Value = Checkpoint> {
    (
        prop::sample::select(ModelKind::ALL.to_vec()),
        prop::collection::btree_map("[a-z_]{1,8}", "[ -~]{0,12}", 0..4),
        prop::collection::vec(arb_tensor(-1e6f32..1e6), 0..4),
        prop::collection::vec(arb_tensor(-1e12f64..1e12), 0..3),
        prop::option::of((0u64..10_000, prop::collection::vec(arb_tensor(-1.0f32..1.0), 1..3))),
    )
        .prop_map(|(kind, metadata, t32, t64, opt): (ModelKind, BTreeMap<String, String>, _, _, _)| {
            let mut c = Checkpoint::new(kind);
            c.metadata = metadata;
            c.tensors = param_set(t32, "w");
            c.tensors64 = param_set(t64, "x");
            if let Some((step, moments)) = opt {
                let params = param_set(moments, "p");
                let mut state = AdamState::new(AdamConfig::default(), &params);
                state.step = step;
                state.m = params.clone();
                state.v = params;
                c.optimizers.push(OptimizerEntry { name: "adam".into(), state });
            }
            c
        })
}

fn bits32(p: &ParamSet<f32>) -> Vec<(String, Vec<usize>, Vec<u32>)> {
    p.iter()
        .map(|(n, t)| (n.to_string(), t.shape().to_vec(), t.data().iter().map(|v| v.to_bits()).collect()))
        .collect()
}

fn bits64(p: &ParamSet<f64>) -> Vec<(String, Vec<usize>, Vec<u64>)> {
    p.iter()
        .map(|(n, t)| (n.to_string(), t.shape().to_vec(), t.data().iter().map(|v| v.to_bits()).collect()))
        .collect()
}

proptest! {
    #[test]
    fn manifest_rejects_rows_of_the_wrong_arity(rows in 1usize..5, pick in any::<prop::sample::Index>(), delta in prop_oneof![-3i32..0, 1i32..4]) {
        let m = small_manifest(rows);
        let text = m.to_text();
        prop_assert_eq!(&DatasetManifest::parse(&text).unwrap(), &m);
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let target = 2 + pick.index(rows);
        let mut cells: Vec<String> = lines[target].split('\t').map(str::to_string).collect();
        if delta > 0 {
            cells.extend((0..delta).map(|k| format!("0.{k}")));
        } else {
            cells.truncate(cells.len() - (-delta) as usize);
        }
        lines[target] = cells.join("\t");
        let fuzzed = lines.join("\n") + "\n";
        match DatasetManifest::parse(&fuzzed) {
            Err(Error::Parse { line, .. }) => prop_assert_eq!(line, target + 1),
            other => prop_assert!(false, "accepted a bad row: {:?}", other),
        }
    }

    #[test]
    fn checkpoints_round_trip_bitwise(c in arb_checkpoint()) {
        let bytes = c.encode().unwrap();
        prop_assert_eq!(&bytes[..4], MAGIC);
        let back = Checkpoint::decode(&bytes).unwrap();
        prop_assert_eq!(back.kind, c.kind);
        prop_assert_eq!(&back.metadata, &c.metadata);
        prop_assert_eq!(bits32(&back.tensors), bits32(&c.tensors));
        prop_assert_eq!(bits64(&back.tensors64), bits64(&c.tensors64));
        prop_assert_eq!(&back.optimizers, &c.optimizers);
        prop_assert_eq!(back.encode().unwrap(), bytes);
    }

    #[test]
    fn truncated_checkpoints_are_corrupt(c in arb_checkpoint(), cut in any::<prop::sample::Index>()) {
        let bytes = c.encode().unwrap();
        let keep = cut.index(bytes.len());
        prop_assert!(matches!(Checkpoint::decode(&bytes[..keep]), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn flipped_bytes_fail_the_crc(c in arb_checkpoint(), at in any::<prop::sample::Index>(), mask in 1u8..=255) {
        let mut bytes = c.encode().unwrap();
        let i = at.index(bytes.len());
        bytes[i] ^= mask;
        prop_assert!(matches!(Checkpoint::decode(&bytes), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn ppm_quantization_is_within_half_a_step(h in 1usize..6, w in 1usize..6, seed in prop::collection::vec(-1.0f64..=1.0, 75)) {
        let data: Vec<f64> = (0..h * w * 3).map(|i| seed[i % seed.len()]).collect();
        let image = TextureImage::new(h, w, data).unwrap();
        let back = decode_ppm(&encode_ppm(&image)).unwrap();
        prop_assert_eq!((back.height(), back.width()), (h, w));
        for (a, b) in image.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 0.5 / 127.5 + 1e-12);
        }
        prop_assert_eq!(encode_ppm(&back), encode_ppm(&image));
    }
}

#[test]
fn every_byte_survives_quantization() {
    for b in 0..=255u8 {
        assert_eq!(to_byte(from_byte(b)), b);
    }
    assert_eq!((to_byte(-1.0), to_byte(0.0), to_byte(1.0)), (0, 128, 255));
}

#[test]
fn wrong_magic_is_corrupt() {
    let mut bytes = Checkpoint::new(ModelKind::Knn).with_meta("k", 1).encode().unwrap();
    bytes[0] = b'X';
    assert!(matches!(Checkpoint::decode(&bytes), Err(Error::CorruptCheckpoint(_))));
}

#[test]
fn other_versions_are_reported() {
    let mut bytes = Checkpoint::new(ModelKind::Knn).encode().unwrap();
    bytes[4..6].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    let body = bytes.len() - 4;
    let crc = crc32fast::hash(&bytes[..body]);
    bytes[body..].copy_from_slice(&crc.to_le_bytes());
    assert!(matches!(
        Checkpoint::decode(&bytes),
        Err(Error::VersionMismatch { found, expected }) if found == FORMAT_VERSION + 1 && expected == FORMAT_VERSION
    ));
}

#[test]
fn nearest_neighbor_memorization_survives_save_and_load() {
    let features: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.37, (i as f64).sin(), 1.0 / (1.0 + i as f64)]).collect();
    let targets: Vec<LabelDistribution> = (0..12)
        .map(|i| {
            let raw = [1.0 + i as f64, 0.5, (i % 3) as f64];
            let s: f64 = raw.iter().sum();
            LabelDistribution::new(raw.iter().map(|v| v / s).collect()).unwrap()
        })
        .collect();
    let train = TrainingSet::new(features, targets).unwrap();
    let model = LdlModel::Knn(KnnModel::fit(&train, 1).unwrap());
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("knn.ckpt");
    save_checkpoint(&model.to_checkpoint(), &path).unwrap();
    let loaded = LdlModel::from_checkpoint(&load_checkpoint(&path).unwrap()).unwrap();
    assert_eq!(loaded, model);
    for (x, t) in train.features().iter().zip(train.targets()) {
        assert_eq!(loaded.predict(x).unwrap().values(), t.values());
    }
}
