//! Replays the fuzz corpus: every seed must decode, and damaged copies must
//! be rejected or accepted without panicking.

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use pcanet_core::surrogate::Surrogate;

use pcanet_harness::config::ExperimentConfig;
use pcanet_harness::dataset::Dataset;
use pcanet_harness::meta::Meta;
use pcanet_harness::{model_io, tensor};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    paths.sort();
    let out: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn split_header(data: &[u8]) -> Option<(Meta, &[u8])> {
    let nul = data.iter().position(|&b| b == 0)?;
    let meta = Meta::parse(std::str::from_utf8(&data[..nul]).ok()?).ok()?;
    Some((meta, &data[nul + 1..]))
}

fn dataset(data: &[u8]) -> Option<Dataset> {
    let (meta, rest) = split_header(data)?;
    let (x, y) = rest.split_at(rest.len() / 2);
    Dataset::from_parts(meta, x, y).ok()
}

fn model(data: &[u8]) -> Option<Surrogate> {
    let (meta, mut rest) = split_header(data)?;
    let mut blobs = BTreeMap::new();
    while let Some(nul) = rest.iter().position(|&b| b == 0) {
        let name = String::from_utf8_lossy(&rest[..nul]).into_owned();
        rest = &rest[nul + 1..];
        if rest.len() < 4 {
            break;
        }
        let len = (u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize).min(rest.len() - 4);
        blobs.insert(name, rest[4..4 + len].to_vec());
        rest = &rest[4 + len..];
    }
    model_io::from_parts(&meta, &|n: &str| blobs.get(n).cloned()).ok()
}

#[test]
fn dataset_and_model_seeds_decode() {
    for s in seeds("dataset_from_parts") {
        let ds = dataset(&s).expect("dataset seed decodes");
        assert_eq!(ds.x.len(), ds.y.len());
    }
    for s in seeds("model_from_parts") {
        assert!(model(&s).is_some(), "model seed decodes");
    }
    for s in seeds("meta_parse") {
        let text = std::str::from_utf8(&s).unwrap();
        let m = Meta::parse(text).unwrap();
        assert_eq!(Meta::parse(&m.to_string()).unwrap(), m);
    }
    for s in seeds("config_parse") {
        let c = ExperimentConfig::parse(std::str::from_utf8(&s).unwrap()).unwrap();
        c.validate().unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn damaged_seeds_never_panic(which in 0usize..64, cut in any::<prop::sample::Index>(), flip in any::<prop::sample::Index>(), bit in 0u8..8) {
        let all: Vec<(&str, Vec<u8>)> = ["dataset_from_parts", "model_from_parts", "meta_parse", "tensor_decode"]
            .into_iter()
            .flat_map(|t| seeds(t).into_iter().map(move |s| (t, s)))
            .collect();
        let (target, seed) = &all[which % all.len()];
        let mut data = seed.clone();
        if !data.is_empty() {
            let i = flip.index(data.len());
            data[i] ^= 1 << bit;
        }
        for bytes in [&data[..], &data[..cut.index(data.len() + 1)]] {
            match *target {
                "dataset_from_parts" => { dataset(bytes); }
                "model_from_parts" => { model(bytes); }
                "meta_parse" => { let _ = std::str::from_utf8(bytes).map(Meta::parse); }
                _ => { let _ = tensor::decode(bytes); }
            }
        }
    }
}
