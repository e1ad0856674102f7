#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_lab::config::{parse_grid, parse_list};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok((r, c)) = parse_grid(s) {
        assert!(r >= 2 && c >= 2);
    }
    if let Ok(v) = parse_list(s) {
        assert!(v.iter().all(|x| x.is_finite()));
    }
});
