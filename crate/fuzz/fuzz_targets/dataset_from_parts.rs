#![no_main]

//! Input: header text, a NUL byte, then the x tensor followed by the y
//! tensor, split at the midpoint.

use libfuzzer_sys::fuzz_target;
use pcanet_harness::dataset::Dataset;
use pcanet_harness::meta::Meta;

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
    let rest = &data[nul + 1..];
    let (x, y) = rest.split_at(rest.len() / 2);
    if let Ok(ds) = Dataset::from_parts(meta, x, y) {
        assert_eq!(ds.x.len(), ds.y.len());
        assert_eq!(ds.len(), ds.x.len());
    }
});
