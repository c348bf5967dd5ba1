#![no_main]

use libfuzzer_sys::fuzz_target;
use pcanet_harness::meta::Meta;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(meta) = Meta::parse(text) {
        let again = Meta::parse(&meta.to_string()).expect("printed header parses");
        assert_eq!(again, meta);
    }
});
