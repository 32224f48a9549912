use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wns_core::chaos::{vage_constant, KondratievElement, TruncationSpec};
use wns_core::filters::{causal_wiener, noncausal_wiener, FilterOptions};
use wns_core::harness::{self, demos, random, ReportFormat, Scenario};
use wns_core::lift::{self, BasisEnumeration};
use wns_core::opwiener::{self, FactorOptions, OperatorLaurent};

#[derive(Parser)]
#[command(name = "wns", version, about = "Operator-valued Wiener filtering in the Kondratiev white-noise space")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Generate a random stochastic scenario from this seed when no file is given.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Noncausal,
    Causal,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum WickOp {
    Product,
    Sum,
    Difference,
}

#[derive(Subcommand)]
enum Command {
    /// Element algebra on element files.
    Wick {
        a: PathBuf,
        b: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = WickOp::Product)]
        op: WickOp,
        /// Norm index for the reported norm and Våge bound.
        #[arg(long, default_value_t = 3)]
        k: i32,
        #[arg(long, default_value_t = 1)]
        ell: i32,
    },
    /// Matrix of M_x on a truncated basis.
    Lift {
        /// Element file; otherwise the scenario target at --time is lifted.
        #[arg(long)]
        element: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        time: i64,
        #[arg(long)]
        num_vars: Option<u32>,
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long)]
        k: Option<i32>,
    },
    /// Observation and cross spectra of a scenario.
    Spectrum,
    /// Spectral factorization of an operator Laurent file.
    Factorize {
        input: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        working_band: Option<usize>,
    },
    /// Wiener filters of a scenario.
    Filter {
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        /// Output band of the filter.
        #[arg(long)]
        band: Option<usize>,
        /// Factorization tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Full residual suite on a scenario.
    Verify,
    /// Built-in stochastic additive-noise example.
    DemoAdditiveNoise,
    /// Classical scalar pipeline on an all-deterministic scenario.
    Oracle,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_scenario(g: &Global) -> Result<Scenario> {
    match (&g.scenario, g.seed) {
        (Some(p), _) => Ok(Scenario::load(p)?),
        (None, Some(seed)) => Ok(random::scenario(seed)),
        (None, None) => bail!("a scenario is required: pass --scenario <path> or --seed <int>"),
    }
}

fn report_format(f: Format) -> ReportFormat {
    match f {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    }
}

fn summarize(r: &harness::RunReport, quiet: bool) -> bool {
    if !quiet {
        for c in &r.checks {
            eprintln!(
                "{:<28} {:>12.3e}  tol {:>8.1e}  {}",
                c.name,
                c.value,
                c.tol,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
        if let Some(cf) = &r.closed_form {
            eprintln!(
                "closed form I - W^-1 V0: defect {:.3e}; with W_0^-* factor: {:.3e}",
                cf.literal_defect, cf.normalized_defect
            );
        }
    }
    r.passed
}

#[derive(Serialize)]
struct WickOutput {
    result: KondratievElement,
    hk_norm: f64,
    vage_bound: Option<f64>,
}

#[derive(Serialize)]
struct FactorOutput {
    w_plus: OperatorLaurent,
    diagnostics: opwiener::FactorDiagnostics,
}

#[derive(Serialize)]
struct FilterOutput {
    noncausal: Option<wns_core::filters::FilterResult>,
    causal: Option<wns_core::filters::FilterResult>,
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Wick { a, b, op, k, ell } => {
            let fa: KondratievElement = read_json(&a)?;
            let fb: Option<KondratievElement> = b.as_deref().map(read_json).transpose()?;
            let result = match (&fb, op) {
                (None, _) => fa.clone(),
                (Some(fb), WickOp::Product) => fa.wick(fb),
                (Some(fb), WickOp::Sum) => fa.add(fb),
                (Some(fb), WickOp::Difference) => fa.sub(fb),
            };
            let vage_bound = match (&fb, op) {
                (Some(fb), WickOp::Product) => Some(vage_constant(i64::from(k - ell))? * fa.hk_norm(ell) * fb.hk_norm(k)),
                _ => None,
            };
            let hk_norm = result.hk_norm(k);
            write_json(&WickOutput { result, hk_norm, vage_bound }, out)?;
            Ok(true)
        }
        Command::Lift { element, time, num_vars, degree, k } => {
            let m = match element {
                Some(path) => {
                    let x: KondratievElement = read_json(&path)?;
                    let d = num_vars.unwrap_or_else(|| x.max_position().max(1));
                    let basis = std::sync::Arc::new(BasisEnumeration::new(d, degree.unwrap_or(2))?);
                    lift::mult_operator(&x, &basis, &basis, k.unwrap_or(TruncationSpec::with_defaults(d, 0).k))?
                }
                None => {
                    let s = load_scenario(g)?;
                    harness::lift_at(&s.target, time, &s.truncation)?
                }
            };
            write_json(&m, out)?;
            Ok(true)
        }
        Command::Spectrum => {
            let s = load_scenario(g)?;
            let sp = s.joint_model()?.spectral_pair(&s.truncation, s.lag_band, &s.density)?;
            match (g.format, out) {
                (Format::Json, _) => write_json(&sp, out)?,
                (Format::Csv, Some(p)) => {
                    let f = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
                    opwiener::write_spectrum_csv(&sp.s_y, opwiener::default_num_points(sp.s_y.band()), f)?;
                }
                (Format::Csv, None) => {
                    opwiener::write_spectrum_csv(&sp.s_y, opwiener::default_num_points(sp.s_y.band()), std::io::stdout())?;
                }
            }
            Ok(true)
        }
        Command::Factorize { input, tol, working_band } => {
            let s: OperatorLaurent = read_json(&input)?;
            let mut opts = FactorOptions::default();
            if let Some(t) = tol {
                opts.tol = t;
            }
            opts.working_band = working_band;
            let (w_plus, diagnostics) = opwiener::spectral_factorize(&s, &opts)?;
            if !g.quiet {
                eprintln!(
                    "factorization defect {:.3e} after {} iterations",
                    diagnostics.defect, diagnostics.iterations
                );
            }
            let ok = diagnostics.defect <= opts.tol;
            write_json(&FactorOutput { w_plus, diagnostics }, out)?;
            Ok(ok)
        }
        Command::Filter { mode, band, tol } => {
            let s = load_scenario(g)?;
            let sp = s.joint_model()?.spectral_pair(&s.truncation, s.lag_band, &s.density)?;
            let mut factor = s.factor.clone();
            if let Some(t) = tol {
                factor.tol = t;
            }
            let opts = FilterOptions {
                out_band: Some(band.unwrap_or_else(|| s.out_band())),
                residual_window: None,
                factor,
            };
            let noncausal = matches!(mode, Mode::Noncausal | Mode::Both)
                .then(|| noncausal_wiener(&sp, &opts))
                .transpose()?;
            let causal = matches!(mode, Mode::Causal | Mode::Both)
                .then(|| causal_wiener(&sp, &opts))
                .transpose()?;
            let tol_wh = s.tolerances.wiener_hopf;
            let ok = [&noncausal, &causal]
                .into_iter()
                .flatten()
                .all(|fr| fr.diagnostics.wiener_hopf_max <= tol_wh);
            if !g.quiet {
                for fr in [&noncausal, &causal].into_iter().flatten() {
                    eprintln!(
                        "{:?}: wiener-hopf residual {:.3e}, multiplicativity defect {:.3e}",
                        fr.mode, fr.diagnostics.wiener_hopf_max, fr.diagnostics.multiplicativity_defect
                    );
                }
            }
            write_json(&FilterOutput { noncausal, causal }, out)?;
            Ok(ok)
        }
        Command::Verify => {
            let s = load_scenario(g)?;
            let r = harness::run_scenario(&s)?;
            harness::emit_report(&r, report_format(g.format), out)?;
            Ok(summarize(&r, g.quiet))
        }
        Command::DemoAdditiveNoise => {
            let s = match &g.scenario {
                Some(p) => Scenario::load(p)?,
                None => demos::additive_noise_scenario(),
            };
            let r = harness::run_scenario(&s)?;
            harness::emit_report(&r, report_format(g.format), out)?;
            Ok(summarize(&r, g.quiet))
        }
        Command::Oracle => {
            let s = load_scenario(g)?;
            let filters = harness::classical_oracle(&s)?;
            if !g.quiet {
                eprintln!("noncausal gain at omega = 0: {:.12}", filters.noncausal_gain_at_zero.re);
            }
            write_json(&filters, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
