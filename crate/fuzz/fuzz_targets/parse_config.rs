#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_lab::config::parse_config;
use nsp_lab::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_config(s) {
        let mut cfg = ExperimentConfig::default();
        if cfg.apply(&pairs).is_ok() {
            let _ = cfg.validate();
            let _ = cfg.hash();
        }
    }
});
