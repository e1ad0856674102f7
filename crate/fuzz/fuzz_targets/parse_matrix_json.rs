#![no_main]

use libfuzzer_sys::fuzz_target;
use nalgebra::DMatrix;
use nsp_core::subspaces::MatrixJson;

fuzz_target!(|data: &[u8]| {
    if let Ok(j) = serde_json::from_slice::<MatrixJson>(data) {
        if let Ok(m) = DMatrix::<f64>::try_from(j.clone()) {
            assert_eq!(MatrixJson::from(&m), j);
        }
    }
});
