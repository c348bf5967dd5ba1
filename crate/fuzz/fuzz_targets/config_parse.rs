#![no_main]

use libfuzzer_sys::fuzz_target;
use pcanet_harness::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::parse(text) else {
        return;
    };
    if cfg.validate().is_ok() {
        let back = ExperimentConfig::from_meta(&cfg.to_meta()).expect("written config reads back");
        assert_eq!(back, cfg);
    }
});
