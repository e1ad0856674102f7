//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 when a check fails, 2 on bad usage.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nsp_core::nsp::{erc_member, nsc, nsp_check, region_boundary_map, rrc_probe, SearchOptions};
use nsp_core::solver::{solve_noiseless, solve_noisy, RecoveryProblem, SolveMethod, SolveOptions, TrialRecord};
use nsp_core::subspaces::{fmt17, matrix_from_csv, vector_from_csv};
use nsp_core::width::{tradeoff, width_extended, width_mc};
use nsp_core::{rng, CostFunction, MeasurementMatrix, SparsenessMeasure, Subspace};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_config, parse_grid, parse_list, parse_sweep, ExperimentConfig, Format, MatrixSource};
use crate::error::{CliError, CliResult};
use crate::montecarlo::mc_probability;
use crate::plot::{emit_plot_data, region_code, PlotRequest};
use crate::suite::{run_suite, verify_counterexample1, SuiteName, SuiteOptions};

#[derive(Debug, Parser)]
#[command(name = "nsp-lab", version, about = "Null space property certificates for sparse recovery")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Where the null space comes from.
#[derive(Debug, Clone, Args)]
pub struct NullSpaceArgs {
    /// Measurement matrix CSV; the null space of its rows is used.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// CSV whose columns span the null space.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Generators inline, e.g. `1,1,2` or `1,0,1;0,1,1`.
    #[arg(long)]
    pub generators: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    BoundaryMap,
    TradeoffCurve,
    ProbabilityVsK,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Null space constant and the NSP verdict.
    Nsc {
        #[command(flatten)]
        source: NullSpaceArgs,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Searches for a perturbed-NSP violation at radius `d`.
    Probe {
        #[command(flatten)]
        source: NullSpaceArgs,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Solves `min J(x)` subject to `‖Ax − y‖ ≤ ε`, or runs a batch of
    /// random `k`-sparse trials with `--trials`.
    Recover {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        y: Option<PathBuf>,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value = "enumerate")]
        method: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Monte Carlo Gaussian width of the NSP cone.
    Width {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        /// Also estimate the width of the `d`-extended cone.
        #[arg(long)]
        d: Option<f64>,
    },
    /// `δ(β,γ)`, the robustness constant and the Gordon bound.
    Tradeoff {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// `start:stop:step`.
        #[arg(long)]
        gamma_sweep: Option<String>,
        /// Sparsity used for the finite-size Gordon column.
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long)]
        no_oracle: bool,
    },
    /// Monte Carlo ERC/RRC probabilities.
    Mc {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated probe radii.
        #[arg(long)]
        d_grid: Option<String>,
        #[arg(long, value_enum)]
        matrix_source: Option<MatrixSource>,
        #[arg(long)]
        matrix_file: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Region A/B map of `F(x) + F(y) ≤ F(ax + by)`.
    Boundary {
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value = "200x200")]
        grid: String,
        #[arg(long, default_value_t = 2.0)]
        a_max: f64,
        #[arg(long, default_value_t = 2.0)]
        b_max: f64,
    },
    /// The ERC-without-RRC counter-example.
    Ce1 {
        #[arg(long, default_value = "0.5,0.1,0.01,0.001")]
        d_list: String,
    },
    /// Verification suites.
    Suite {
        #[arg(value_enum)]
        name: SuiteName,
        #[arg(long, hide = true)]
        mutate_mcp: bool,
    },
    /// Gnuplot data files.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value = "10x10")]
        grid: String,
        #[arg(long, default_value_t = 100.0)]
        beta: f64,
        #[arg(long, default_value = "62:99:1")]
        gamma_sweep: String,
        #[arg(long, default_value_t = 100)]
        k: usize,
        /// Comma-separated sparsity levels.
        #[arg(long, default_value = "1,2")]
        ks: String,
    },
}

struct Ctx {
    cfg: ExperimentConfig,
    format: Format,
    out: Option<PathBuf>,
    hash: String,
}

impl Ctx {
    fn header(&self) -> String {
        format!("# seed={} config_hash={}\n", self.cfg.seed, self.hash)
    }

    fn emit_json<T: Serialize>(&self, command: &str, result: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            command: &'a str,
            seed: u64,
            config_hash: &'a str,
            result: &'a T,
        }
        let env = Envelope { command, seed: self.cfg.seed, config_hash: &self.hash, result };
        let mut text = serde_json::to_string_pretty(&env).map_err(nsp_core::Error::from)?;
        text.push('\n');
        self.write(&text)
    }

    fn emit<T: Serialize>(&self, command: &str, result: &T, csv: impl FnOnce() -> String) -> CliResult<()> {
        match self.format {
            Format::Json => self.emit_json(command, result),
            Format::Csv => {
                let text = self.header() + &csv();
                self.write(&text)
            }
        }
    }

    fn write(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(";")
}

fn join_idx(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_generators(s: &str) -> CliResult<Vec<Vec<f64>>> {
    let gens: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<CliResult<_>>()?;
    if gens.is_empty() || gens.iter().any(|g| g.is_empty()) {
        return Err(CliError::usage("empty generator"));
    }
    Ok(gens)
}

fn null_space(src: &NullSpaceArgs) -> CliResult<Subspace> {
    match (&src.matrix, &src.basis, &src.generators) {
        (Some(p), None, None) => Ok(MeasurementMatrix::new(matrix_from_csv(&read(p)?)?)?.null_space().clone()),
        (None, Some(p), None) => Ok(Subspace::from_generators(&matrix_from_csv(&read(p)?)?)?),
        (None, None, Some(g)) => {
            let gens = parse_generators(g)?;
            let refs: Vec<&[f64]> = gens.iter().map(|v| v.as_slice()).collect();
            Ok(Subspace::span(&refs)?)
        }
        _ => Err(CliError::usage("give exactly one of --matrix, --basis, --generators")),
    }
}

fn hash_of(parts: &str) -> String {
    hex::encode(&Sha256::digest(parts.as_bytes())[..8])
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn context(cli: &Cli) -> CliResult<Ctx> {
    let mut cfg = ExperimentConfig::default();
    let mut file_format = None;
    if let Some(p) = &cli.config {
        let pairs = parse_config(&read(p)?)?;
        cfg.apply(&pairs)?;
        if pairs.contains_key("format") {
            file_format = Some(cfg.format);
        }
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let by_ext = out.as_ref().and_then(|p| match p.extension().and_then(|e| e.to_str()) {
        Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        _ => None,
    });
    let format = cli.format.or(file_format).or(by_ext).unwrap_or(Format::Json);
    Ok(Ctx { hash: String::new(), cfg, format, out })
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut ctx = context(&cli)?;
    ctx.hash = hash_of(&format!("{:?}|{}", cli.command, ctx.cfg.hash()));
    let cfg = ctx.cfg.clone();
    let measure_or = |m: &Option<String>| m.clone().unwrap_or_else(|| cfg.measure.clone());
    match &cli.command {
        Command::Nsc { source, measure, k } => {
            let nu = null_space(source)?;
            let k = k.unwrap_or(cfg.k);
            let cost = CostFunction::new(SparsenessMeasure::parse(&measure_or(measure))?, nu.ambient_dim())?;
            let opts = SearchOptions { seed: cfg.seed, ..Default::default() };
            let theta = nsc(&nu, &cost, k, &opts)?;
            let verdict = nsp_check(&nu, &cost, k, &opts)?;
            let erc = erc_member(&nu, &cost, k, &opts)?;
            #[derive(Serialize)]
            struct Out<'a> {
                nsc: &'a nsp_core::nsp::NscReport,
                nsp: &'a nsp_core::nsp::NspReport,
                erc: &'a nsp_core::nsp::ErcReport,
            }
            ctx.emit("nsc", &Out { nsc: &theta, nsp: &verdict, erc: &erc }, || {
                format!(
                    "theta,method,is_lower_bound,verdict,margin,erc_member,witness_t,witness_z\n{},{:?},{},{:?},{},{},{},{}\n",
                    fmt17(theta.theta),
                    theta.method,
                    theta.is_lower_bound,
                    verdict.verdict,
                    fmt17(verdict.margin),
                    erc.member,
                    join_idx(&theta.witness_t),
                    join(&theta.witness_z)
                )
            })?;
            Ok(0)
        }
        Command::Probe { source, measure, k, d, budget } => {
            let nu = null_space(source)?;
            let k = k.unwrap_or(cfg.k);
            let d = d.or_else(|| cfg.d_grid.first().copied()).ok_or_else(|| CliError::usage("--d is required"))?;
            let cost = CostFunction::new(SparsenessMeasure::parse(&measure_or(measure))?, nu.ambient_dim())?;
            let opts = SearchOptions { seed: cfg.seed, ..Default::default() };
            let p = rrc_probe(&nu, &cost, k, d, budget.unwrap_or(cfg.budget), &opts)?;
            ctx.emit("probe", &p, || {
                let (s, z, n) = p
                    .violation
                    .as_ref()
                    .map(|w| (join_idx(&w.support), join(&w.z), join(&w.n_vec)))
                    .unwrap_or_default();
                format!(
                    "d,outcome,evaluations,best_relative_deficit,support,z,n_vec\n{},{:?},{},{},{s},{z},{n}\n",
                    fmt17(p.d),
                    p.outcome,
                    p.evaluations,
                    fmt17(p.best_relative_deficit)
                )
            })?;
            Ok(0)
        }
        Command::Recover { matrix, y, measure, eps, method, k, trials } => {
            let a = MeasurementMatrix::new(matrix_from_csv(&read(matrix)?)?)?;
            let cost = CostFunction::new(SparsenessMeasure::parse(&measure_or(measure))?, a.cols())?;
            let method: SolveMethod = method.parse()?;
            let k = k.unwrap_or(cfg.k);
            let opts = SolveOptions { seed: cfg.seed, ..Default::default() };
            if let Some(t) = trials {
                let records = recover_batch(&a, &cost, k, *eps, method, *t, cfg.seed)?;
                ctx.emit("recover", &records, || trial_csv(&records))?;
                return Ok(0);
            }
            let y = vector_from_csv(&read(y.as_ref().ok_or_else(|| CliError::usage("--y is required without --trials"))?)?)?;
            let p = RecoveryProblem::new(&a, y, *eps, &cost, k)?;
            let s = if *eps > 0.0 { solve_noisy(&p, method, &opts)? } else { solve_noiseless(&p, method, &opts)? };
            ctx.emit("recover", &s, || {
                format!(
                    "cost,residual,method,iterations,globally_optimal,x\n{},{},{:?},{},{},{}\n",
                    fmt17(s.cost),
                    fmt17(s.residual),
                    s.method,
                    s.iterations,
                    s.globally_optimal,
                    join(&s.x)
                )
            })?;
            Ok(0)
        }
        Command::Width { measure, n, k, draws, d } => {
            let n = n.unwrap_or(cfg.n);
            let k = k.unwrap_or(cfg.k);
            let cost = CostFunction::new(SparsenessMeasure::parse(&measure_or(measure))?, n)?;
            let base = width_mc(&cost, n, k, *draws, cfg.seed)?;
            let ext = d.map(|d| width_extended(&cost, n, k, d, *draws, cfg.seed)).transpose()?;
            #[derive(Serialize)]
            struct Out {
                width: nsp_core::width::WidthEstimate,
                extended: Option<nsp_core::width::WidthEstimate>,
                d: Option<f64>,
            }
            let out = Out { width: base, extended: ext, d: *d };
            ctx.emit("width", &out, || {
                let mut s = String::from("set,d,mean,std_error,samples,inner_search,is_lower_bound,norm_mean,bound_violations\n");
                let mut row = |name: &str, d: Option<f64>, w: &nsp_core::width::WidthEstimate| {
                    writeln!(
                        s,
                        "{name},{},{},{},{},{:?},{},{},{}",
                        opt(d),
                        fmt17(w.mean),
                        fmt17(w.std_error),
                        w.samples,
                        w.inner_search,
                        w.is_lower_bound,
                        fmt17(w.norm_mean),
                        w.bound_violations
                    )
                    .unwrap();
                };
                row("K", None, &out.width);
                if let Some(e) = &out.extended {
                    row("K_d", out.d, e);
                }
                s
            })?;
            Ok(0)
        }
        Command::Tradeoff { beta, gamma, gamma_sweep, k, no_oracle } => {
            let gammas = match (gamma, gamma_sweep) {
                (Some(g), None) => vec![*g],
                (None, Some(s)) => parse_sweep(s)?,
                _ => return Err(CliError::usage("give exactly one of --gamma, --gamma-sweep")),
            };
            let points = gammas.iter().map(|&g| tradeoff(*beta, g, !no_oracle, *k)).collect::<nsp_core::Result<Vec<_>>>()?;
            ctx.emit("tradeoff", &points, || {
                let mut s = String::from("gamma,delta,C,oracle_C,gordon_bound\n");
                for p in &points {
                    writeln!(s, "{},{},{},{},{}", fmt17(p.gamma), fmt17(p.delta), opt(p.c), opt(p.oracle_c), fmt17(p.gordon_bound))
                        .unwrap();
                }
                s
            })?;
            Ok(0)
        }
        Command::Mc { n, m, k, measure, trials, d_grid, matrix_source, matrix_file, budget } => {
            let mut c = cfg.clone();
            c.n = n.unwrap_or(c.n);
            c.m = m.unwrap_or(c.m);
            c.k = k.unwrap_or(c.k);
            c.measure = measure_or(measure);
            c.trials = trials.unwrap_or(c.trials);
            if let Some(g) = d_grid {
                c.d_grid = parse_list(g)?;
            }
            c.matrix_source = matrix_source.unwrap_or(c.matrix_source);
            if let Some(f) = matrix_file {
                c.matrix_file = Some(f.clone());
            }
            c.budget = budget.unwrap_or(c.budget);
            ctx.hash = c.hash();
            ctx.cfg = c.clone();
            let (summary, outcomes) = mc_probability(&c)?;
            ctx.emit("mc", &summary, || {
                let ds: Vec<String> = c.d_grid.iter().map(|d| format!("rrc_d={}", fmt17(*d))).collect();
                let mut s = format!("trial,erc,margin,boundary,{}\n", ds.join(","));
                for o in &outcomes {
                    let rrc: Vec<String> = o.rrc.iter().map(|b| b.to_string()).collect();
                    writeln!(s, "{},{},{},{},{}", o.trial, o.erc, fmt17(o.margin), o.boundary, rrc.join(",")).unwrap();
                }
                s
            })?;
            if !summary.subset_holds() {
                eprintln!("subset invariant violated: {} trials pass the probe without ERC", summary.subset_violations);
                return Ok(1);
            }
            Ok(0)
        }
        Command::Boundary { measure, grid, a_max, b_max } => {
            let (rows, cols) = parse_grid(grid)?;
            let f = SparsenessMeasure::parse(&measure_or(measure))?;
            let map = region_boundary_map(&f, rows, cols, *a_max, *b_max)?;
            ctx.emit("boundary", &map, || {
                let mut s = String::from("a,b,region,excess\n");
                for i in 0..map.rows() {
                    for j in 0..map.cols() {
                        writeln!(
                            s,
                            "{},{},{},{}",
                            fmt17(map.a_values[j]),
                            fmt17(map.b_values[i]),
                            region_code(map.at(i, j)),
                            fmt17(map.excess[i * map.cols() + j])
                        )
                        .unwrap();
                    }
                }
                s
            })?;
            Ok(if map.upward_violations == 0 { 0 } else { 1 })
        }
        Command::Ce1 { d_list } => {
            let report = verify_counterexample1(&parse_list(d_list)?)?;
            ctx.emit("ce1", &report, || {
                let mut s = String::from("d,t,deficit,leading_term,probe_violated,adversarial_ratio,converse_bound\n");
                for r in &report.rows {
                    writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        fmt17(r.d),
                        fmt17(r.t),
                        fmt17(r.deficit),
                        fmt17(r.leading_term),
                        r.probe_violated,
                        fmt17(r.adversarial_ratio),
                        fmt17(r.converse_bound)
                    )
                    .unwrap();
                }
                s
            })?;
            Ok(0)
        }
        Command::Suite { name, mutate_mcp } => {
            let report = run_suite(*name, &SuiteOptions { seed: cfg.seed, mutate_mcp: *mutate_mcp });
            for c in &report.criteria {
                eprintln!("{}", c.line());
            }
            ctx.emit_json("suite", &report)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Plot { kind, measure, grid, beta, gamma_sweep, k, ks } => {
            let req = match kind {
                PlotKind::BoundaryMap => {
                    let (rows, cols) = parse_grid(grid)?;
                    PlotRequest::BoundaryMap { measure: measure_or(measure), rows, cols, a_max: 2.0, b_max: 2.0 }
                }
                PlotKind::TradeoffCurve => PlotRequest::TradeoffCurve { beta: *beta, gammas: parse_sweep(gamma_sweep)?, k: *k },
                PlotKind::ProbabilityVsK => {
                    let ks = parse_list(ks)?
                        .into_iter()
                        .map(|v| if v >= 0.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(CliError::usage(format!("bad k `{v}`"))) })
                        .collect::<CliResult<Vec<usize>>>()?;
                    let mut c = cfg.clone();
                    c.measure = measure_or(measure);
                    PlotRequest::ProbabilityVsK { config: c, ks }
                }
            };
            ctx.write(&emit_plot_data(&req, cfg.seed)?)?;
            Ok(0)
        }
    }
}

/// Random `k`-sparse trials: standard normal nonzeros on a uniform support,
/// noise of norm `eps` in a uniform direction.
pub fn recover_batch(
    a: &MeasurementMatrix,
    cost: &CostFunction,
    k: usize,
    eps: f64,
    method: SolveMethod,
    trials: usize,
    seed: u64,
) -> CliResult<Vec<TrialRecord>> {
    use nsp_core::search::{gaussian_vec, normalize};
    let (n, m) = (a.cols(), a.rows());
    if k > n {
        return Err(CliError::usage(format!("k = {k} exceeds n = {n}")));
    }
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut r = rng::stream(seed, t as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + (rng::uniform(&mut r) * (n - i) as f64) as usize;
            idx.swap(i, j.min(n - 1));
        }
        let vals = gaussian_vec(&mut r, k);
        let mut x_true = vec![0.0; n];
        for (i, v) in idx[..k].iter().zip(vals) {
            x_true[*i] = v;
        }
        let mut dir = gaussian_vec(&mut r, m);
        normalize(&mut dir);
        let y: Vec<f64> = a.apply(&x_true).iter().zip(&dir).map(|(c, d)| c + eps * d).collect();
        let p = RecoveryProblem::new(a, y, eps, cost, k)?;
        let opts = SolveOptions { seed: seed ^ t as u64, ..Default::default() };
        let s = if eps > 0.0 { solve_noisy(&p, method, &opts)? } else { solve_noiseless(&p, method, &opts)? };
        let error = s.x.iter().zip(&x_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        out.push(TrialRecord {
            cost_gap: s.cost - cost.total(&x_true),
            x_true,
            x_hat: s.x,
            error,
            epsilon: eps,
            residual: s.residual,
            method,
            iterations: s.iterations,
        });
    }
    Ok(out)
}

fn trial_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from("trial,epsilon,error,cost_gap,residual,method,iterations,x_true,x_hat\n");
    for (i, r) in records.iter().enumerate() {
        writeln!(
            s,
            "{i},{},{},{},{},{:?},{},{},{}",
            fmt17(r.epsilon),
            fmt17(r.error),
            fmt17(r.cost_gap),
            fmt17(r.residual),
            r.method,
            r.iterations,
            join(&r.x_true),
            join(&r.x_hat)
        )
        .unwrap();
    }
    s
}
