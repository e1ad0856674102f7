//! Replays the checked-in fuzz corpus through the same checks as the fuzz
//! targets, so the seeds stay valid on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use nsp_core::subspaces::{matrix_from_csv, matrix_to_csv, vector_from_csv, MatrixJson};
use nsp_core::SparsenessMeasure;
use nsp_lab::config::{parse_config, parse_grid, parse_list, parse_sweep};
use nsp_lab::ExperimentConfig;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    assert!(!paths.is_empty(), "no seeds for {target}");
    paths.iter().map(|p| fs::read(p).unwrap()).collect()
}

fn texts(target: &str) -> Vec<String> {
    seeds(target).into_iter().filter_map(|b| String::from_utf8(b).ok()).collect()
}

#[test]
fn measure_spec_seeds() {
    let mut parsed = 0;
    for s in texts("parse_measure_spec") {
        if let Ok(f) = SparsenessMeasure::parse(&s) {
            let again = SparsenessMeasure::parse(&f.to_string()).unwrap();
            assert_eq!(again.to_string(), f.to_string());
            for t in [0.0, 1e-9, 0.5, 1.0, 7.0, 1e9] {
                assert!(!f.eval(t).is_nan());
            }
            parsed += 1;
        }
    }
    assert!(parsed >= 4);
}

#[test]
fn matrix_csv_seeds() {
    let mut parsed = 0;
    for s in texts("parse_matrix_csv") {
        let _ = vector_from_csv(&s);
        if let Ok(m) = matrix_from_csv(&s) {
            assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
            parsed += 1;
        }
    }
    assert!(parsed >= 1);
}

#[test]
fn matrix_json_seeds() {
    let mut parsed = 0;
    for b in seeds("parse_matrix_json") {
        if let Ok(j) = serde_json::from_slice::<MatrixJson>(&b) {
            if let Ok(m) = DMatrix::<f64>::try_from(j.clone()) {
                assert_eq!(MatrixJson::from(&m), j);
                parsed += 1;
            }
        }
    }
    assert!(parsed >= 1);
}

#[test]
fn config_seeds() {
    for s in texts("parse_config") {
        if let Ok(pairs) = parse_config(&s) {
            let mut cfg = ExperimentConfig::default();
            if cfg.apply(&pairs).is_ok() {
                let _ = cfg.validate();
                assert_eq!(cfg.hash().len(), 16);
            }
        }
    }
}

#[test]
fn grid_and_sweep_seeds() {
    for s in texts("parse_grid") {
        if let Ok((r, c)) = parse_grid(&s) {
            assert!(r >= 2 && c >= 2);
        }
        if let Ok(v) = parse_list(&s) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
    for s in texts("parse_sweep") {
        if let Ok(v) = parse_sweep(&s) {
            assert!(!v.is_empty());
            assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
