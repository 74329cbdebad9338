//! Batch driver: reads a scenario file, runs it and writes CSV traces plus a
//! `key = value` report into the output directory.
//!
//! Exit status: 0 ok, 1 I/O failure, 2 invalid input, 3 failed numerical check.

pub mod config;
pub mod output;

use std::path::PathBuf;

use arealaw::divisibility::{default_splits, divisibility_residual, DivisibilityReport, DIVISIBILITY_TOL};
use arealaw::dynamics::TimeGrid;
use arealaw::entropy::{entropy_trace, area_law_bound_report, EntropyTrace};
use arealaw::linalg::{partial_trace_sys, ComplexMatrix};
use arealaw::model::{BipartiteSystem, PureState};
use arealaw::random::{random_hermitian, random_product_state, random_system, random_unit_vector, seeded_rng};
use arealaw::spin_boson::{build_model, closed_form_entropy, cross_check, mixed_spin_start};
use arealaw::zassenhaus::{log_spaced, truncation_order_scan};

use config::{matrix_from_entries, EnsembleStart, ScenarioConfig, ScenarioKind};
use output::{num, opt_num, write_atomic, Csv, Report};

pub const TRACE_HEADER: [&str; 8] =
    ["t", "S_nats", "S_bits", "purity_A", "sigma11", "sigma22", "bound_rhs", "rate_at_zero"];
pub const DIVISIBILITY_HEADER: [&str; 3] = ["split_time", "residual", "verdict"];
pub const ENSEMBLE_HEADER: [&str; 4] = ["seed", "rate", "coupling_norm", "ratio"];
pub const SPIN_BOSON_HEADER: [&str; 12] = [
    "t",
    "omega_closed",
    "omega_normalized",
    "omega_sum_re",
    "omega_sum_im",
    "oracle_factor_abs",
    "ratio_raw",
    "ratio_normalized",
    "S_raw",
    "S_normalized",
    "S_oracle",
    "S_oracle_product",
];
pub const ZASSENHAUS_HEADER: [&str; 4] = ["order", "t", "error", "used"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Validation(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl From<arealaw::Error> for RunError {
    fn from(e: arealaw::Error) -> Self {
        use arealaw::Error::*;
        match e {
            NotHermitian { .. } | Dimension(_) | InvalidState(_) | InvalidParameter(_) | InvalidGrid(_) => {
                RunError::Validation(e.to_string())
            }
            InvariantViolation(_) | NegativeDiscriminant(_) | TruncationNotConverged { .. } | TooFewPoints(_) => {
                RunError::Numerical(e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Bound,
    Divisibility,
    SpinBoson,
    Zassenhaus,
}

impl Command {
    fn kinds(self) -> &'static [ScenarioKind] {
        match self {
            Command::Simulate => &[ScenarioKind::GenericBipartite],
            Command::Bound => &[ScenarioKind::BoundEnsemble, ScenarioKind::GenericBipartite],
            Command::Divisibility => &[ScenarioKind::Divisibility, ScenarioKind::GenericBipartite],
            Command::SpinBoson => &[ScenarioKind::SpinBoson],
            Command::Zassenhaus => &[ScenarioKind::ZassenhausScan],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: ScenarioKind,
    pub files: Vec<PathBuf>,
}

pub fn run(command: Command, cfg: &ScenarioConfig) -> Result<RunSummary, RunError> {
    let allowed = command.kinds();
    let kind = cfg.kind.unwrap_or(allowed[0]);
    if !allowed.contains(&kind) {
        return Err(RunError::Validation(format!(
            "kind: scenario '{}' cannot run under this subcommand",
            kind.label()
        )));
    }
    let files = match (command, kind) {
        (Command::Simulate, _) => run_simulate(cfg)?,
        (Command::Bound, ScenarioKind::BoundEnsemble) => run_ensemble(cfg)?,
        (Command::Bound, _) => run_single_bound(cfg)?,
        (Command::Divisibility, _) => run_divisibility(cfg)?,
        (Command::SpinBoson, _) => run_spin_boson(cfg)?,
        (Command::Zassenhaus, _) => run_zassenhaus(cfg)?,
    };
    Ok(RunSummary { kind, files })
}

fn grid(cfg: &ScenarioConfig) -> Result<TimeGrid, RunError> {
    Ok(TimeGrid::uniform(cfg.t_max()?, cfg.steps()?)?)
}

fn trace_csv(trace: &EntropyTrace) -> String {
    let mut csv = Csv::new(&TRACE_HEADER);
    for (k, &t) in trace.times.iter().enumerate() {
        let s = trace.entropy[k];
        let (s11, s22) = match &trace.spectrum {
            Some(sp) => (num(sp[k].sigma11), num(sp[k].sigma22)),
            None => (String::new(), String::new()),
        };
        csv.row(&[
            num(t),
            num(s),
            num(s / std::f64::consts::LN_2),
            num(trace.purity[k]),
            s11,
            s22,
            num(trace.bound.bound_rhs),
            num(trace.rate_at_zero.value),
        ]);
    }
    csv.into_string()
}

fn bound_lines(report: &mut Report, trace: &EntropyTrace) {
    let b = &trace.bound;
    report
        .value("rate_at_zero", trace.rate_at_zero.value)
        .value("rate_error_estimate", trace.rate_at_zero.error_estimate)
        .line("rate_converged", trace.rate_at_zero.converged)
        .value("coupling_norm", b.coupling_norm)
        .line("delta", b.delta_dim)
        .value("c", b.c)
        .value("bound_rhs", b.bound_rhs)
        .line("bound_satisfied", b.satisfied)
        .line("bound_satisfied_abs", b.satisfied_abs)
        .line("bound_ratio", opt_num(b.ratio));
}

fn env_weights(cfg: &ScenarioConfig, sys: &BipartiteSystem, init: &PureState) -> Result<ComplexMatrix, RunError> {
    match &cfg.divisibility.env_weights {
        Some(entries) => matrix_from_entries("divisibility.env-weights", sys.dim_e(), entries),
        None => Ok(partial_trace_sys(&init.projector(), sys.dim_a(), sys.dim_e())?),
    }
}

fn divisibility_for(cfg: &ScenarioConfig, sys: &BipartiteSystem, init: &PureState) -> Result<DivisibilityReport, RunError> {
    let t = cfg.divisibility.t.map_or_else(|| cfg.t_max(), Ok)?;
    let splits = cfg.divisibility.splits.clone().unwrap_or_else(|| default_splits(t));
    let d = env_weights(cfg, sys, init)?;
    Ok(divisibility_residual(sys, &d, t, &splits)?)
}

fn divisibility_csv(rep: &DivisibilityReport) -> String {
    let mut csv = Csv::new(&DIVISIBILITY_HEADER);
    for s in &rep.per_split {
        let verdict = if s.residual <= DIVISIBILITY_TOL { "divisible" } else { "non-divisible" };
        csv.row(&[num(s.split_time), num(s.residual), verdict.to_string()]);
    }
    csv.into_string()
}

fn divisibility_lines(report: &mut Report, rep: &DivisibilityReport) {
    report
        .value("divisibility_t", rep.t)
        .value("divisibility_residual", rep.residual)
        .value("divisibility_tolerance", DIVISIBILITY_TOL)
        .line("divisibility_verdict", rep.verdict);
}

fn model_lines(report: &mut Report, sys: &BipartiteSystem) {
    let comm = sys.commutator_classification();
    report
        .line("dim_a", sys.dim_a())
        .line("dim_e", sys.dim_e())
        .line("commutator_class", comm.class.label())
        .value("env_commutator_norm", comm.env_norm)
        .value("sys_commutator_norm", comm.sys_norm);
}

fn run_simulate(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let (sys, init) = cfg.build_system()?;
    let grid = grid(cfg)?;
    let trace = entropy_trace(&sys, &init, &grid, cfg.c()?)?;
    let div = divisibility_for(cfg, &sys, &init)?;

    let mut report = Report::default();
    report.line("kind", ScenarioKind::GenericBipartite.label());
    model_lines(&mut report, &sys);
    report.line("steps", grid.len()).value("t_max", grid.last());
    let s_max = trace.entropy.iter().copied().fold(0.0, f64::max);
    report.value("max_entropy", s_max);
    bound_lines(&mut report, &trace);
    divisibility_lines(&mut report, &div);

    let dir = cfg.out_dir();
    Ok(vec![
        write_atomic(&dir.join("trace.csv"), &trace_csv(&trace))?,
        write_atomic(&dir.join("divisibility.csv"), &divisibility_csv(&div))?,
        write_atomic(&dir.join("report.txt"), report.as_str())?,
    ])
}

fn run_single_bound(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let (sys, init) = cfg.build_system()?;
    let (b, rate) = area_law_bound_report(&sys, &init, cfg.c()?)?;
    let mut report = Report::default();
    report.line("kind", ScenarioKind::GenericBipartite.label());
    model_lines(&mut report, &sys);
    report
        .value("rate_at_zero", b.rate)
        .value("rate_error_estimate", rate.error_estimate)
        .line("rate_converged", rate.converged)
        .value("coupling_norm", b.coupling_norm)
        .line("delta", b.delta_dim)
        .value("c", b.c)
        .value("bound_rhs", b.bound_rhs)
        .line("bound_satisfied", b.satisfied)
        .line("bound_satisfied_abs", b.satisfied_abs)
        .line("bound_ratio", opt_num(b.ratio));
    Ok(vec![write_atomic(&cfg.out_dir().join("report.txt"), report.as_str())?])
}

fn run_ensemble(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let base = cfg.require_seed("the bound ensemble")?;
    let e = &cfg.ensemble;
    if e.count == 0 || e.dim_a == 0 || e.dim_e == 0 {
        return Err(RunError::Validation("ensemble: count and dimensions must be positive".into()));
    }
    let c = cfg.c()?;
    let mut csv = Csv::new(&ENSEMBLE_HEADER);
    let (mut satisfied, mut satisfied_abs, mut unconverged) = (0usize, 0usize, 0usize);
    let mut max_ratio = f64::NEG_INFINITY;
    for k in 0..e.count as u64 {
        let seed = base.wrapping_add(k);
        let mut rng = seeded_rng(seed);
        let sys = random_system(&mut rng, e.dim_a, e.dim_e);
        let init = match e.start {
            EnsembleStart::Product => random_product_state(&mut rng, e.dim_a, e.dim_e),
            EnsembleStart::Entangled => {
                let amps = random_unit_vector(&mut rng, e.dim_a * e.dim_e);
                PureState::new(e.dim_a, e.dim_e, amps)?
            }
        };
        let (b, rate) = area_law_bound_report(&sys, &init, c)?;
        satisfied += b.satisfied as usize;
        satisfied_abs += b.satisfied_abs as usize;
        unconverged += (!rate.converged) as usize;
        if let Some(r) = b.ratio {
            max_ratio = max_ratio.max(r.abs());
        }
        csv.row(&[seed.to_string(), num(b.rate), num(b.coupling_norm), opt_num(b.ratio)]);
    }
    let mut report = Report::default();
    report
        .line("kind", ScenarioKind::BoundEnsemble.label())
        .line("count", e.count)
        .line("dim_a", e.dim_a)
        .line("dim_e", e.dim_e)
        .line("start", match e.start {
            EnsembleStart::Product => "product",
            EnsembleStart::Entangled => "entangled",
        })
        .line("first_seed", base)
        .value("c", c)
        .line("bound_satisfied", satisfied)
        .line("bound_satisfied_abs", satisfied_abs)
        .line("rate_unconverged", unconverged)
        .line("max_abs_ratio", if max_ratio.is_finite() { num(max_ratio) } else { String::new() });
    let dir = cfg.out_dir();
    Ok(vec![
        write_atomic(&dir.join("ensemble.csv"), &csv.into_string())?,
        write_atomic(&dir.join("report.txt"), report.as_str())?,
    ])
}

fn run_divisibility(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let (sys, init) = cfg.build_system()?;
    let div = divisibility_for(cfg, &sys, &init)?;
    let mut report = Report::default();
    report.line("kind", ScenarioKind::Divisibility.label());
    model_lines(&mut report, &sys);
    divisibility_lines(&mut report, &div);
    let dir = cfg.out_dir();
    Ok(vec![
        write_atomic(&dir.join("divisibility.csv"), &divisibility_csv(&div))?,
        write_atomic(&dir.join("report.txt"), report.as_str())?,
    ])
}

fn run_spin_boson(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let (p, oracle_nmax) = cfg.spin_boson_params()?;
    let grid = grid(cfg)?;
    let check = cross_check(&p, &grid, oracle_nmax)?;

    let mut csv = Csv::new(&SPIN_BOSON_HEADER);
    for r in &check.rows {
        csv.row(&[
            num(r.t),
            num(r.omega_closed),
            num(r.omega_normalized),
            num(r.omega_sum.re),
            num(r.omega_sum.im),
            num(r.oracle_factor.norm()),
            num(r.ratio_raw),
            num(r.ratio_normalized),
            opt_num(r.s_raw),
            opt_num(r.s_normalized),
            num(r.s_oracle),
            num(r.s_oracle_product),
        ]);
    }

    // oracle trace from the maximally mixed spin start
    let oracle_p = p.with_nmax(oracle_nmax)?;
    let sys = build_model(&oracle_p);
    let trace = entropy_trace(&sys, &mixed_spin_start(&oracle_p)?, &grid, cfg.c()?)?;

    let zero = check.row_at_zero();
    let mut report = Report::default();
    report
        .line("kind", ScenarioKind::SpinBoson.label())
        .value("omega", p.omega)
        .value("beta", p.beta)
        .value("eta", p.eta)
        .value("j", p.j())
        .line("nmax", p.nmax)
        .line("oracle_nmax", oracle_nmax)
        .value("gamma", p.gamma())
        .value("truncation_drift", check.truncation_drift)
        .line("verdict", check.verdict.label());
    if let arealaw::spin_boson::CrossCheckVerdict::ConstantFactorMismatch { factor } = check.verdict {
        report.value("mismatch_factor", factor);
    }
    report
        .value("omega_closed_at_zero", zero.omega_closed)
        .line("s_raw_at_zero", opt_num(zero.s_raw))
        .value("s_oracle_at_zero", zero.s_oracle)
        .value("s_oracle_product_at_zero", zero.s_oracle_product)
        .line("closed_rate", opt_num(check.closed_rate))
        .value("oracle_rate", check.oracle_rate)
        .line("oracle_rate_converged", check.oracle_rate_converged);
    if p.two_j == 1 {
        let lit = closed_form_entropy(&p, 0.0)?;
        if lit.s_raw.is_some_and(|s| s < 0.0) {
            report.note(
                "the literal closed-form entropy -Omega ln Omega is negative at t = 0 because Omega(0) = 2; \
                 the exact reduced state of the product start is pure (S = 0) and that of the mixed start is I/2 (S = ln 2)",
            );
        }
    }
    report.note("the coupling acts as the identity on the spin, so the exact spin dynamics is free precession");

    let dir = cfg.out_dir();
    Ok(vec![
        write_atomic(&dir.join("spinboson.csv"), &csv.into_string())?,
        write_atomic(&dir.join("trace.csv"), &trace_csv(&trace))?,
        write_atomic(&dir.join("report.txt"), report.as_str())?,
    ])
}

fn run_zassenhaus(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, RunError> {
    let z = &cfg.zassenhaus;
    if z.dim == 0 || z.points < 4 || !(z.t_min > 0.0 && z.t_max > z.t_min) {
        return Err(RunError::Validation(
            "zassenhaus: need dim >= 1, points >= 4 and 0 < t-min < t-max".into(),
        ));
    }
    if z.orders.is_empty() || z.orders.contains(&0) {
        return Err(RunError::Validation("zassenhaus.orders: need a non-empty list of orders >= 1".into()));
    }
    let (a, b) = match (&z.a, &z.b) {
        (Some(a), Some(b)) => (
            matrix_from_entries("zassenhaus.a", z.dim, a)?,
            matrix_from_entries("zassenhaus.b", z.dim, b)?,
        ),
        (None, None) => {
            let mut rng = seeded_rng(cfg.require_seed("the generator pair")?);
            (random_hermitian(&mut rng, z.dim, 1.0), random_hermitian(&mut rng, z.dim, 1.0))
        }
        _ => return Err(RunError::Validation("zassenhaus: give both a and b or neither".into())),
    };
    for (name, m) in [("zassenhaus.a", &a), ("zassenhaus.b", &b)] {
        m.check_hermitian(arealaw::linalg::HERMITIAN_TOL)
            .map_err(|e| RunError::Validation(format!("{name}: {e}")))?;
    }
    let ts = log_spaced(z.t_min, z.t_max, z.points);
    let mut csv = Csv::new(&ZASSENHAUS_HEADER);
    let mut report = Report::default();
    report.line("kind", ScenarioKind::ZassenhausScan.label()).line("dim", z.dim);
    for &order in &z.orders {
        let scan = truncation_order_scan(&a, &b, order, &ts)?;
        for ((t, err), used) in ts.iter().zip(&scan.errors).zip(&scan.used) {
            csv.row(&[order.to_string(), num(*t), num(*err), used.to_string()]);
        }
        report
            .line(&format!("order_{order}_slope"), opt_num(scan.slope))
            .value(&format!("order_{order}_expected"), order as f64 + 1.0)
            .line(&format!("order_{order}_degenerate"), scan.degenerate);
    }
    let dir = cfg.out_dir();
    Ok(vec![
        write_atomic(&dir.join("zassenhaus.csv"), &csv.into_string())?,
        write_atomic(&dir.join("report.txt"), report.as_str())?,
    ])
}
