//! Scenarios, end-to-end runs and reports.

pub mod demos;
pub mod oracle;
pub mod random;
mod scenario;

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StageExt, WnsError};
use crate::filters::{
    additive_noise_closed_form, additive_noise_closed_form_normalized, causal_wiener, noncausal_wiener,
    orthogonality_residual, wiener_hopf_residual, FilterOptions, FilterResult, OrthogonalityReport, ResidualReport,
    SpectralPair,
};
use crate::lift::ProcessSpec;
use crate::opwiener::{default_num_points, positivity_check, spectral_factorize, OperatorLaurent};

pub use oracle::{ClassicalFilters, ScalarProblem};
pub use scenario::{
    build_process, ModeSelection, NoiseCovariance, ObservationSpec, Scenario, Tolerances, SCHEMA_VERSION,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectraSummary {
    pub dim: usize,
    pub lag_band: usize,
    pub out_band: usize,
    pub num_points: usize,
    pub min_eigenvalue: f64,
    pub argmin_omega: f64,
    pub hermitian_defect: f64,
    pub s_y: OperatorLaurent,
    pub s_uy: OperatorLaurent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterRun {
    pub result: FilterResult,
    pub wiener_hopf: ResidualReport,
    pub orthogonality: OrthogonalityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    /// `‖K − (I − W^{-1} V₀)‖_wiener`.
    pub literal_defect: f64,
    /// `‖K − (I − W^{-1} W_0^{-*} V₀)‖_wiener`.
    pub normalized_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub filters: ClassicalFilters,
    /// Largest entry deviation of any operator coefficient from a multiple of `I`.
    pub max_scalar_deviation: f64,
    pub noncausal_max_diff: Option<f64>,
    pub causal_max_diff: Option<f64>,
    pub w_plus_max_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
        }
    }
}

/// Wall-clock time per stage; kept out of the serialized report.
#[derive(Clone, Debug, Default)]
pub struct Timing {
    pub stages: Vec<(&'static str, Duration)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub spectra: SpectraSummary,
    pub noncausal: Option<FilterRun>,
    pub causal: Option<FilterRun>,
    pub closed_form: Option<ClosedFormCheck>,
    pub oracle: Option<OracleComparison>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub timing: Timing,
}

impl PartialEq for RunReport {
    fn eq(&self, other: &Self) -> bool {
        self.schema_version == other.schema_version
            && self.scenario == other.scenario
            && self.spectra == other.spectra
            && self.noncausal == other.noncausal
            && self.causal == other.causal
            && self.closed_form == other.closed_form
            && self.oracle == other.oracle
            && self.checks == other.checks
            && self.passed == other.passed
    }
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Clock {
    timing: Timing,
    last: Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            timing: Timing::default(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timing.stages.push((stage, now - self.last));
        self.last = now;
    }
}

fn filter_options(s: &Scenario) -> FilterOptions {
    FilterOptions {
        out_band: Some(s.out_band()),
        residual_window: None,
        factor: s.factor.clone(),
    }
}

fn run_filter(
    s: &Scenario,
    sp: &SpectralPair,
    fr: FilterResult,
    model: &crate::filters::JointModel,
) -> Result<FilterRun> {
    let window = filter_options(s).residual_window(s.lag_band);
    let wiener_hopf = wiener_hopf_residual(sp, &fr, window);
    let orthogonality = orthogonality_residual(model, &fr, s.orthogonality_window, &s.truncation, s.lag_band)
        .stage("orthogonality")?;
    let mut result = fr;
    result.diagnostics.orthogonality_max = Some(orthogonality.max);
    Ok(FilterRun {
        result,
        wiener_hopf,
        orthogonality,
    })
}

fn scalar_problem(s: &Scenario) -> Option<ScalarProblem> {
    if !s.is_deterministic() {
        return None;
    }
    Some(match &s.observation {
        ObservationSpec::Explicit { process } => ScalarProblem {
            target: s.target.clone(),
            observation: process.clone(),
            noise_variance: 0.0,
            additive: false,
            lag_band: s.lag_band,
        },
        ObservationSpec::AdditiveNoise { signal, v0 } => ScalarProblem {
            target: s.target.clone(),
            observation: signal.clone(),
            noise_variance: v0.as_scalar()?,
            additive: true,
            lag_band: s.lag_band,
        },
    })
}

fn max_tap_diff(ops: &OperatorLaurent, taps: &std::collections::BTreeMap<i64, Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (lag, t) in taps {
        let v = ops.coeff(*lag).map(|m| m[(0, 0)]).unwrap_or_default();
        worst = worst.max((v - t).norm());
    }
    for (lag, m) in ops.coeffs() {
        if !taps.contains_key(&lag) {
            worst = worst.max(m[(0, 0)].norm());
        }
    }
    worst
}

/// Classical scalar pipeline for an all-deterministic scenario.
pub fn classical_oracle(s: &Scenario) -> Result<ClassicalFilters> {
    let problem = scalar_problem(s)
        .ok_or_else(|| WnsError::Invalid("classical oracle needs an all-deterministic scenario".into()))?;
    let grid = oracle::DEFAULT_GRID.max((4 * s.out_band() + 1).next_power_of_two());
    problem.solve(s.out_band(), grid)
}

/// Full pipeline: spectra → filters → residual suites → report.
pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    s.validate().stage("validate")?;
    let mut clock = Clock::new();
    let model = s.joint_model()?;
    let sp = model.spectral_pair(&s.truncation, s.lag_band, &s.density).stage("spectra")?;
    let num_points = default_num_points(sp.s_y.band());
    let pos = positivity_check(&sp.s_y, num_points).stage("positivity")?;
    let spectra = SpectraSummary {
        dim: sp.dim(),
        lag_band: s.lag_band,
        out_band: s.out_band(),
        num_points,
        min_eigenvalue: pos.min_eigenvalue,
        argmin_omega: pos.argmin_omega,
        hermitian_defect: sp.s_y.hermitian_defect(),
        s_y: sp.s_y.clone(),
        s_uy: sp.s_uy.clone(),
    };
    clock.lap("spectra");

    let opts = filter_options(s);
    let tol = &s.tolerances;
    let mut checks = Vec::new();

    let noncausal = if s.mode.noncausal() {
        let fr = noncausal_wiener(&sp, &opts).stage("noncausal filter")?;
        let run = run_filter(s, &sp, fr, &model)?;
        checks.push(Check::new(
            "noncausal.factorization",
            run.result.diagnostics.factorization_defect,
            tol.factorization,
        ));
        checks.push(Check::new("noncausal.wiener_hopf", run.wiener_hopf.max, tol.wiener_hopf));
        checks.push(Check::new("noncausal.orthogonality", run.orthogonality.max, tol.orthogonality));
        Some(run)
    } else {
        None
    };
    clock.lap("noncausal");

    let causal = if s.mode.causal() {
        let fr = causal_wiener(&sp, &opts).stage("causal filter")?;
        let run = run_filter(s, &sp, fr, &model)?;
        checks.push(Check::new(
            "causal.factorization",
            run.result.diagnostics.factorization_defect,
            tol.factorization,
        ));
        checks.push(Check::new("causal.wiener_hopf", run.wiener_hopf.max, tol.wiener_hopf));
        checks.push(Check::new("causal.orthogonality", run.orthogonality.max, tol.orthogonality));
        Some(run)
    } else {
        None
    };
    clock.lap("causal");

    let closed_form = match (&s.observation, &causal) {
        (ObservationSpec::AdditiveNoise { signal, v0 }, Some(run)) if *signal == s.target => {
            let v0 = v0.to_matrix(sp.dim())?;
            let ob = s.out_band();
            let k = &run.result.k_ops;
            let literal = additive_noise_closed_form(&sp.s_y, &v0, ob, &s.factor).stage("closed form")?;
            let normalized =
                additive_noise_closed_form_normalized(&sp.s_y, &v0, ob, &s.factor).stage("closed form")?;
            let check = ClosedFormCheck {
                literal_defect: k.distance(&literal)?,
                normalized_defect: k.distance(&normalized)?,
            };
            checks.push(Check::new("causal.closed_form", check.normalized_defect, tol.closed_form));
            Some(check)
        }
        _ => None,
    };
    clock.lap("closed form");

    let oracle = if s.is_deterministic() {
        let filters = classical_oracle(s).stage("classical oracle")?;
        let mut max_scalar_deviation: f64 = 0.0;
        let noncausal_max_diff = noncausal.as_ref().map(|r| {
            max_scalar_deviation = max_scalar_deviation.max(r.result.k_ops.max_dev_from_scalar());
            max_tap_diff(&r.result.k_ops, &filters.noncausal)
        });
        let causal_max_diff = causal.as_ref().map(|r| {
            max_scalar_deviation = max_scalar_deviation.max(r.result.k_ops.max_dev_from_scalar());
            max_tap_diff(&r.result.k_ops, &filters.causal)
        });
        let (w, _) = spectral_factorize(&sp.s_y, &s.factor).stage("oracle factorization")?;
        max_scalar_deviation = max_scalar_deviation.max(w.truncate(s.out_band()).max_dev_from_scalar());
        let w_plus_max_diff = max_tap_diff(&w.truncate(s.out_band()), &filters.w_plus);
        if let Some(d) = noncausal_max_diff {
            checks.push(Check::new("oracle.noncausal", d, tol.oracle));
        }
        if let Some(d) = causal_max_diff {
            checks.push(Check::new("oracle.causal", d, tol.oracle));
        }
        checks.push(Check::new("oracle.w_plus", w_plus_max_diff, tol.oracle));
        checks.push(Check::new("oracle.scalar_structure", max_scalar_deviation, tol.oracle));
        Some(OracleComparison {
            filters,
            max_scalar_deviation,
            noncausal_max_diff,
            causal_max_diff,
            w_plus_max_diff,
        })
    } else {
        None
    };
    clock.lap("oracle");

    let passed = checks.iter().all(|c| c.pass);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: s.clone(),
        spectra,
        noncausal,
        causal,
        closed_form,
        oracle,
        checks,
        passed,
        timing: clock.timing,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WnsError + '_ {
    move |source| WnsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-lag residual table: `mode, check, l, j, residual`.
pub fn write_residuals_csv<W: Write>(r: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "check", "l", "j", "residual"])?;
    for (mode, run) in [("noncausal", &r.noncausal), ("causal", &r.causal)] {
        let Some(run) = run else { continue };
        for (j, v) in &run.wiener_hopf.per_lag {
            w.write_record([mode, "wiener_hopf", "0", &j.to_string(), &v.to_string()])?;
        }
        for (l, j, v) in &run.orthogonality.entries {
            w.write_record([mode, "orthogonality", &l.to_string(), &j.to_string(), &v.to_string()])?;
        }
    }
    w.flush().map_err(|source| WnsError::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

/// Sibling path `<stem>_residuals.csv` for the residual table.
pub fn residuals_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}_residuals.csv"))
}

/// JSON: the whole report. CSV: the circle-sampled `S_y` at `path` and the
/// per-lag residuals next to it. Without a path everything goes to stdout.
pub fn emit_report(r: &RunReport, format: ReportFormat, path: Option<&Path>) -> Result<()> {
    match (format, path) {
        (ReportFormat::Json, Some(p)) => {
            let mut text = r.to_json()?;
            text.push('\n');
            std::fs::write(p, text).map_err(io_err(p))
        }
        (ReportFormat::Json, None) => {
            println!("{}", r.to_json()?);
            Ok(())
        }
        (ReportFormat::Csv, Some(p)) => {
            let f = std::fs::File::create(p).map_err(io_err(p))?;
            crate::opwiener::write_spectrum_csv(&r.spectra.s_y, r.spectra.num_points, f)?;
            let rp = residuals_path(p);
            let f = std::fs::File::create(&rp).map_err(io_err(&rp))?;
            write_residuals_csv(r, f)
        }
        (ReportFormat::Csv, None) => {
            let stdout = std::io::stdout();
            crate::opwiener::write_spectrum_csv(&r.spectra.s_y, r.spectra.num_points, stdout.lock())?;
            println!();
            write_residuals_csv(r, stdout.lock())
        }
    }
}

/// Lifts a process at one time index on the scenario basis (CLI helper).
pub fn lift_at(p: &ProcessSpec, n: i64, s: &crate::chaos::TruncationSpec) -> Result<crate::lift::OperatorMatrix> {
    let x = p
        .realize(n)
        .ok_or_else(|| WnsError::Invalid("white innovations have no realization to lift".into()))?;
    let basis = std::sync::Arc::new(crate::lift::BasisEnumeration::new(s.num_vars, s.max_degree)?);
    crate::lift::mult_operator(&x, &basis, &basis, s.k)
}
