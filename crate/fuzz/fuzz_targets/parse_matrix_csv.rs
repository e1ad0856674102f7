#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_core::subspaces::{matrix_from_csv, matrix_to_csv, vector_from_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let _ = vector_from_csv(s);
    if let Ok(m) = matrix_from_csv(s) {
        let back = matrix_from_csv(&matrix_to_csv(&m)).expect("written CSV parses");
        assert_eq!(back, m);
    }
});
