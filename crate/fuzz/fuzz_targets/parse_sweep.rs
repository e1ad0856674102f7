#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_lab::config::parse_sweep;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_sweep(s) {
        assert!(!v.is_empty());
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }
});
