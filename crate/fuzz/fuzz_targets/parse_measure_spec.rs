#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_core::SparsenessMeasure;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = SparsenessMeasure::parse(s) {
        // the canonical form parses back to the same measure
        let again = SparsenessMeasure::parse(&f.to_string()).expect("display round-trips");
        assert_eq!(again.to_string(), f.to_string());
        for t in [0.0, 1e-9, 0.5, 1.0, 7.0, 1e9] {
            let v = f.eval(t);
            assert!(!v.is_nan());
        }
    }
});
