//! Gnuplot-ready data files: whitespace-separated columns under a comment
//! header naming the axes, the seed and the config hash.

use std::fmt::Write as _;

use nsp_core::nsp::{region_boundary_map, Region};
use nsp_core::subspaces::fmt17;
use nsp_core::width::tradeoff;
use nsp_core::SparsenessMeasure;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::montecarlo::mc_probability;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlotRequest {
    BoundaryMap { measure: String, rows: usize, cols: usize, a_max: f64, b_max: f64 },
    TradeoffCurve { beta: f64, gammas: Vec<f64>, k: usize },
    ProbabilityVsK { config: ExperimentConfig, ks: Vec<usize> },
}

impl PlotRequest {
    pub fn hash(&self, seed: u64) -> String {
        let canonical = serde_json::to_string(&(self, seed)).expect("request serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        fmt17(v)
    } else {
        "nan".into()
    }
}

pub fn region_code(r: Region) -> i32 {
    match r {
        Region::A => 1,
        Region::B => 0,
        Region::Inconclusive => -1,
    }
}

pub fn emit_plot_data(req: &PlotRequest, seed: u64) -> CliResult<String> {
    let mut out = String::new();
    let hash = req.hash(seed);
    match req {
        PlotRequest::BoundaryMap { measure, rows, cols, a_max, b_max } => {
            let f = SparsenessMeasure::parse(measure)?;
            let map = region_boundary_map(&f, *rows, *cols, *a_max, *b_max)?;
            writeln!(out, "# boundary_map measure={f} grid={rows}x{cols} seed={seed} config_hash={hash}").unwrap();
            writeln!(out, "# columns: a b region(1=A,0=B,-1=inconclusive) excess").unwrap();
            for i in 0..map.rows() {
                for j in 0..map.cols() {
                    let e = map.excess[i * map.cols() + j];
                    writeln!(out, "{} {} {} {}", num(map.a_values[j]), num(map.b_values[i]), region_code(map.at(i, j)), num(e))
                        .unwrap();
                }
                out.push('\n');
            }
        }
        PlotRequest::TradeoffCurve { beta, gammas, k } => {
            if gammas.is_empty() {
                return Err(CliError::usage("empty gamma grid"));
            }
            writeln!(out, "# tradeoff_curve beta={} k={k} seed={seed} config_hash={hash}", num(*beta)).unwrap();
            writeln!(out, "# columns: gamma delta C oracle_C gordon_bound").unwrap();
            for &g in gammas {
                let p = tradeoff(*beta, g, true, *k)?;
                writeln!(
                    out,
                    "{} {} {} {} {}",
                    num(g),
                    num(p.delta),
                    num(p.c.unwrap_or(f64::NAN)),
                    num(p.oracle_c.unwrap_or(f64::NAN)),
                    num(p.gordon_bound)
                )
                .unwrap();
            }
        }
        PlotRequest::ProbabilityVsK { config, ks } => {
            if ks.is_empty() {
                return Err(CliError::usage("empty k grid"));
            }
            writeln!(
                out,
                "# probability_vs_k n={} m={} measure={} trials={} seed={seed} config_hash={hash}",
                config.n, config.m, config.measure, config.trials
            )
            .unwrap();
            let ds: Vec<String> = config.d_grid.iter().map(|d| format!("p_rrc(d={d})")).collect();
            writeln!(out, "# columns: k p_erc ci_low ci_high {}", ds.join(" ")).unwrap();
            for &k in ks {
                let cfg = ExperimentConfig { k, seed, ..config.clone() };
                let (s, _) = mc_probability(&cfg)?;
                let mut line = format!("{k} {} {} {}", num(s.p_erc.estimate), num(s.p_erc.ci_low), num(s.p_erc.ci_high));
                for r in &s.p_rrc_at_d {
                    line.push(' ');
                    line.push_str(&num(r.probability.estimate));
                }
                writeln!(out, "{line}").unwrap();
            }
        }
    }
    Ok(out)
}
