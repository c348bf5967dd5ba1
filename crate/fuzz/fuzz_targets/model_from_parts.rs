#![no_main]

//! Input: header text, a NUL byte, then blobs framed as
//! `name NUL length(u32 LE) bytes`.

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use pcanet_harness::meta::Meta;
use pcanet_harness::model_io;

fn blobs(mut rest: &[u8]) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    while let Some(nul) = rest.iter().position(|&b| b == 0) {
        let name = String::from_utf8_lossy(&rest[..nul]).into_owned();
        rest = &rest[nul + 1..];
        if rest.len() < 4 {
            break;
        }
        let len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        let take = len.min(rest.len());
        out.insert(name, rest[..take].to_vec());
        rest = &rest[take..];
    }
    out
}

fuzz_target!(|data: &[u8]| {
    let Some(nul) = data.iter().position(|&b| b == 0) else {
        return;
    };
    let Ok(text) = std::str::from_utf8(&data[..nul]) else {
        return;
    };
    let Ok(meta) = Meta::parse(text) else {
        return;
    };
    let files = blobs(&data[nul + 1..]);
    let lookup = |name: &str| files.get(name).cloned();
    if let Ok(sur) = model_io::from_parts(&meta, &lookup) {
        let (meta2, blobs2) = model_io::to_parts(&sur, &Meta::new()).expect("loaded model serializes");
        let again = model_io::from_parts(&meta2, &|n: &str| blobs2.get(n).cloned()).expect("round trip");
        assert_eq!(again.pca_in.dim(), sur.pca_in.dim());
    }
});
