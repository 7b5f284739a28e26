//! Command-line front end: expansions, sweeps, exceptional-point scans and oracle comparisons.

mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{expand_inductive, CoefficientFamily, ExpandOptions, FloquetExpansion};
use crate::fourier::C64;
use crate::models::{classify_dimer_ep, classify_oscillator_ep, Channels, ModelConfig, ModelKind, RatioConvention};
use crate::oracle::{self, DEFAULT_STEPS};
use crate::spectral::{all_asymptotics, detect_first_order_ep, exponents_at};

pub use sweep::{run_sweep, write_csv, GridAxis, Output, SweepRow, SweepSpec};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "floquet", version, about = "Asymptotic Floquet exponents of weakly modulated periodic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Expansion order.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub order: u8,
    /// Modulation amplitudes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub eps: Vec<f64>,
    /// RK4 steps per period for oracle runs.
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid commands.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid axis `name=start:stop:count`; repeat for a product grid.
    #[arg(long = "grid")]
    pub grid: Vec<String>,
    /// Fixed override `name=value`.
    #[arg(long = "set")]
    pub set: Vec<String>,
    /// Tie `name=other`: `name` follows `other` at every grid point.
    #[arg(long = "tie")]
    pub tie: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RatioArg {
    Consistent,
    Printed,
}

impl From<RatioArg> for RatioConvention {
    fn from(r: RatioArg) -> Self {
        match r {
            RatioArg::Consistent => RatioConvention::ProofConsistent,
            RatioArg::Printed => RatioConvention::AsPrinted,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expansion at one parameter point (JSON).
    Expand {
        #[command(flatten)]
        common: Common,
    },
    /// Parameter sweep (CSV).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        /// Quantities to report.
        #[arg(long, value_delimiter = ',', default_value = "f0,folding")]
        outputs: Vec<Output>,
    },
    /// First-order exceptional-point reports over a grid (JSON lines).
    EpScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "consistent")]
        ratio: RatioArg,
    },
    /// Asymptotic exponents against the RK4 oracle (JSON).
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form dimer classification tables (JSON lines).
    DimerEp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value = "consistent")]
        ratio: RatioArg,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Expand { common } => {
            let cfg = ModelConfig::from_path(&common.config)?;
            let v = expand_report(&cfg, common)?;
            write_text(common.out.as_deref(), &format!("{}\n", pretty(&v)))
        }
        Command::Sweep { common, grid, outputs } => {
            let spec = SweepSpec::from_args(common, grid, outputs)?;
            let rows = run_sweep(&spec)?;
            let mut w = open_out(common.out.as_deref())?;
            write_csv(&spec, &rows, &mut w)
        }
        Command::EpScan { common, grid, ratio } => {
            let spec = SweepSpec::from_args(common, grid, &[])?;
            let lines = spec.map_points(|cfg| Ok(ep_line(cfg, (*ratio).into())))?;
            write_lines(common.out.as_deref(), &lines)
        }
        Command::Oracle { common } => {
            let cfg = ModelConfig::from_path(&common.config)?;
            let v = oracle_report(&cfg, common.order as usize, &common.eps, common.steps)?;
            write_text(common.out.as_deref(), &format!("{}\n", pretty(&v)))
        }
        Command::DimerEp { common, grid, ratio } => {
            let spec = SweepSpec::from_args(common, grid, &[])?;
            if spec.config.model != ModelKind::Dimer {
                return Err(Error::Config("dimer-ep needs a dimer configuration".into()));
            }
            let conv: RatioConvention = (*ratio).into();
            let lines = spec.map_points(|cfg| Ok(dimer_line(cfg, conv)))?;
            write_lines(common.out.as_deref(), &lines)
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_text(path: Option<&Path>, s: &str) -> Result<()> {
    let mut w = open_out(path)?;
    w.write_all(s.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::Invalid(e.to_string()))
}

fn write_lines(path: Option<&Path>, lines: &[Value]) -> Result<()> {
    let mut s = String::new();
    for l in lines {
        s.push_str(&serde_json::to_string(l).expect("JSON values serialize"));
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn cj(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Expansion of a configured model; oscillator families are padded with zero higher orders.
pub fn expand_config(cfg: &ModelConfig, family: &CoefficientFamily, order: usize) -> Result<FloquetExpansion> {
    let pad = cfg.model == ModelKind::Oscillator;
    if !pad && order > family.order() {
        return Err(Error::Config(format!(
            "order {order} requested but this dimer channel is only available to order {}",
            family.order()
        )));
    }
    expand_inductive(family, order, ExpandOptions { pad })
}

fn ep_value(family: &CoefficientFamily, expansion: &FloquetExpansion) -> Value {
    match detect_first_order_ep(family, &expansion.folding) {
        Ok(r) => Value::Array(r.iter().map(|x| x.to_json()).collect()),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn expand_report(cfg: &ModelConfig, common: &Common) -> Result<Value> {
    let family = cfg.build()?;
    let order = common.order as usize;
    let ex = expand_config(cfg, &family, order)?;
    let asym = all_asymptotics(&ex)?;
    let mut exps = Vec::new();
    for &e in &common.eps {
        let v = exponents_at(&ex, e)?;
        exps.push(json!({ "eps": e, "values": v.into_iter().map(cj).collect::<Vec<_>>() }));
    }
    Ok(json!({
        "folding": {
            "f0": ex.folding.f0.iter().copied().map(cj).collect::<Vec<_>>(),
            "folding_numbers": ex.folding.folding_numbers,
            "classes": ex.folding.classes,
        },
        "expansion": serde_json::to_value(ex.to_json()).expect("serializable"),
        "asymptotics": asym.iter().map(|a| json!({
            "index": a.index,
            "f0": cj(a.f0),
            "lambda1": cj(a.lambda1),
            "lambda2": a.lambda2.map(cj),
            "branch": a.branch_note,
        })).collect::<Vec<_>>(),
        "exponents": exps,
        "ep": if family.order() >= 1 { ep_value(&family, &ex) } else { Value::Null },
    }))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn oracle_report(cfg: &ModelConfig, order: usize, eps: &[f64], steps: usize) -> Result<Value> {
    let family = cfg.build()?;
    let ex = expand_config(cfg, &family, order)?;
    let mut runs = Vec::new();
    let mut res = Vec::new();
    for &e in eps {
        let asym = exponents_at(&ex, e)?;
        let m = oracle::integrate_family(&family, e, steps)?;
        let orc = oracle::exponents_from_monodromy(&m, family.period())?;
        let cmp = oracle::compare_exponents(&asym, &orc, family.period())?;
        res.push(cmp.max_residual);
        runs.push(json!({
            "eps": e,
            "asymptotic": asym.iter().copied().map(cj).collect::<Vec<_>>(),
            "oracle": orc.values.iter().copied().map(cj).collect::<Vec<_>>(),
            "pairing": cmp.pairing,
            "residuals": cmp.residuals,
            "max_residual": cmp.max_residual,
            "richardson_error_estimate": m.richardson_error_estimate,
            "near_defective": orc.near_defective,
        }));
    }
    Ok(json!({ "order": order, "steps": steps, "runs": runs, "slope": loglog_slope(eps, &res) }))
}

fn ep_line(cfg: &ModelConfig, conv: RatioConvention) -> Value {
    let detector = cfg.build().and_then(|family| {
        let ex = expand_config(cfg, &family, 0)?;
        let reports = detect_first_order_ep(&family, &ex.folding)?;
        Ok(reports)
    });
    let classifier = match cfg.model {
        ModelKind::Oscillator => cfg.oscillator().map(|p| serde_json::to_value(classify_oscillator_ep(&p)).expect("serializable")),
        ModelKind::Dimer => cfg
            .dimer()
            .and_then(|p| classify_dimer_ep(&p, cfg.channels(), conv))
            .map(|c| serde_json::to_value(c).expect("serializable")),
    };
    let mut v = json!({ "point": cfg.params });
    match detector {
        Ok(r) => {
            v["verdict"] = json!(r.iter().any(|x| x.verdict));
            v["reports"] = Value::Array(r.iter().map(|x| x.to_json()).collect());
        }
        Err(e) => {
            v["verdict"] = Value::Null;
            v["err"] = json!(e.to_string());
        }
    }
    v["classifier"] = classifier.unwrap_or_else(|e| json!({ "error": e.to_string() }));
    v
}

fn dimer_line(cfg: &ModelConfig, conv: RatioConvention) -> Value {
    let mut v = ep_line(cfg, conv);
    if let Ok(p) = cfg.dimer() {
        let ch = cfg.channels();
        v["channels"] = json!(ch);
        v["w_plus"] = json!(p.w_plus());
        v["w_minus"] = json!(p.w_minus());
        if ch != Channels::Both {
            v["frequency_ratio"] = match crate::models::check_frequency_ratio(&p) {
                Ok(r) => json!(r),
                Err(e) => json!({ "error": e.to_string() }),
            };
        }
    }
    v
}
