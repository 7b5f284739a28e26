use std::io::Write;

use clap::ValueEnum;
use rayon::prelude::*;

use super::{expand_config, Common, GridArgs};
use crate::error::{Error, Result};
use crate::expansion::fold_diagonal;
use crate::fourier::C64;
use crate::models::{ModelConfig, ModelKind};
use crate::oracle;
use crate::spectral::{all_asymptotics, detect_first_order_ep, exponents_at};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    F0,
    Folding,
    F1,
    Lambda2,
    Ep,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridAxis {
    /// `name=start:stop:count`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid axis `{s}` is not of the form name=start:stop:count"));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count < 2 {
            return Err(Error::Config(format!("grid axis `{name}` needs count >= 2")));
        }
        Ok(Self { name: name.trim().to_string(), start, stop, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
    }
}

fn parse_pair(s: &str) -> Result<(String, String)> {
    let (a, b) = s.split_once('=').ok_or_else(|| Error::Config(format!("expected name=value, got `{s}`")))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub config: ModelConfig,
    pub axes: Vec<GridAxis>,
    pub ties: Vec<(String, String)>,
    pub outputs: Vec<Output>,
    pub order: usize,
    pub eps: f64,
    pub steps: usize,
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(config: ModelConfig, axes: Vec<GridAxis>, outputs: Vec<Output>) -> Result<Self> {
        let spec = Self { config, axes, ties: Vec::new(), outputs, order: 2, eps: 0.05, steps: oracle::DEFAULT_STEPS, threads: None };
        spec.check()?;
        Ok(spec)
    }

    pub fn from_args(common: &Common, grid: &GridArgs, outputs: &[Output]) -> Result<Self> {
        let mut config = ModelConfig::from_path(&common.config)?;
        for s in &grid.set {
            let (k, v) = parse_pair(s)?;
            let v: f64 = v.parse().map_err(|_| Error::Config(format!("`{s}`: value is not a number")))?;
            config.set(&k, v)?;
        }
        let axes = grid.grid.iter().map(|g| GridAxis::parse(g)).collect::<Result<Vec<_>>>()?;
        let ties = grid.tie.iter().map(|t| parse_pair(t)).collect::<Result<Vec<_>>>()?;
        let spec = Self {
            config,
            axes,
            ties,
            outputs: outputs.to_vec(),
            order: common.order as usize,
            eps: common.eps.first().copied().unwrap_or(0.05),
            steps: common.steps,
            threads: common.threads,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let keys = self.config.keys();
        for a in &self.axes {
            if !keys.contains(&a.name.as_str()) {
                return Err(Error::Config(format!("unknown grid parameter `{}`", a.name)));
            }
        }
        for (a, b) in &self.ties {
            if !keys.contains(&a.as_str()) || !keys.contains(&b.as_str()) {
                return Err(Error::Config(format!("unknown tie `{a}={b}`")));
            }
        }
        if let Some(0) = self.threads {
            return Err(Error::Config("--threads must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid values of point `idx`, first axis slowest.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut rem = idx;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.value(rem % a.count);
            rem /= a.count;
        }
        out
    }

    pub fn config_at(&self, idx: usize) -> Result<ModelConfig> {
        let mut c = self.config.clone();
        for (a, v) in self.axes.iter().zip(self.point(idx)) {
            c.set(&a.name, v)?;
        }
        for (a, b) in &self.ties {
            let v = c.get(b).ok_or_else(|| Error::Config(format!("tie source `{b}` is unset")))?;
            c.set(a, v)?;
        }
        Ok(c)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Invalid(e.to_string()))
    }

    /// Evaluate `f` at every grid point in parallel; results come back in grid order.
    pub fn map_points<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&ModelConfig) -> Result<T> + Sync,
    {
        let n = self.len().max(1);
        let configs = (0..n)
            .map(|i| if self.axes.is_empty() { Ok(self.config.clone()) } else { self.config_at(i) })
            .collect::<Result<Vec<_>>>()?;
        self.pool()?.install(|| configs.par_iter().map(&f).collect())
    }

    fn dim(&self) -> usize {
        match self.config.model {
            ModelKind::Oscillator => 2,
            ModelKind::Dimer => 4,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let n = self.dim();
        let mut h: Vec<String> = self.axes.iter().map(|a| a.name.clone()).collect();
        let cplx = |h: &mut Vec<String>, stem: &str| {
            for i in 0..n {
                h.push(format!("{stem}_{i}_re"));
                h.push(format!("{stem}_{i}_im"));
            }
        };
        for o in &self.outputs {
            match o {
                Output::F0 => cplx(&mut h, "f0"),
                Output::Folding => {
                    h.extend((0..n).map(|i| format!("n_{i}")));
                    h.push("multiple".into());
                    h.push("crossing".into());
                }
                Output::F1 => cplx(&mut h, "lambda1"),
                Output::Lambda2 => cplx(&mut h, "lambda2"),
                Output::Ep => h.push("ep".into()),
                Output::Oracle => h.push("oracle_residual".into()),
            }
        }
        h.push("err".into());
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<f64>,
    pub f0: Vec<C64>,
    pub folding_numbers: Vec<i64>,
    pub multiple: bool,
    /// Two constant-order exponents crossed between the previous grid point and this one.
    pub crossing: bool,
    pub lambda1: Vec<Option<C64>>,
    pub lambda2: Vec<Option<C64>>,
    pub ep: Option<bool>,
    pub oracle_residual: Option<f64>,
    pub err: Option<String>,
}

fn evaluate(spec: &SweepSpec, cfg: &ModelConfig, point: Vec<f64>) -> SweepRow {
    let n = spec.dim();
    let mut row = SweepRow {
        point,
        f0: vec![C64::new(f64::NAN, f64::NAN); n],
        folding_numbers: vec![0; n],
        multiple: false,
        crossing: false,
        lambda1: vec![None; n],
        lambda2: vec![None; n],
        ep: None,
        oracle_residual: None,
        err: None,
    };
    if let Err(e) = fill(spec, cfg, &mut row) {
        row.err = Some(e.to_string());
    }
    row
}

fn fill(spec: &SweepSpec, cfg: &ModelConfig, row: &mut SweepRow) -> Result<()> {
    let family = cfg.build()?;
    let folding = fold_diagonal(family.a0(), family.period(), family.default_fold_tol());
    row.f0 = folding.f0.clone();
    row.folding_numbers = folding.folding_numbers.clone();
    row.multiple = folding.multiple_classes().next().is_some();
    let wants = |o: Output| spec.outputs.contains(&o);
    let need_lambda = wants(Output::F1) || wants(Output::Lambda2);
    if !need_lambda && !wants(Output::Ep) && !wants(Output::Oracle) {
        return Ok(());
    }
    if wants(Output::Ep) {
        row.ep = Some(detect_first_order_ep(&family, &folding)?.iter().any(|r| r.verdict));
    }
    if need_lambda || wants(Output::Oracle) {
        let order = if cfg.model == ModelKind::Dimer { spec.order.min(family.order()) } else { spec.order };
        let ex = expand_config(cfg, &family, order)?;
        if need_lambda {
            for a in all_asymptotics(&ex)? {
                row.lambda1[a.index] = (order >= 1).then_some(a.lambda1);
                row.lambda2[a.index] = if order >= 2 { a.lambda2 } else { None };
            }
        }
        if wants(Output::Oracle) {
            let asym = exponents_at(&ex, spec.eps)?;
            let m = oracle::integrate_family(&family, spec.eps, spec.steps)?;
            let orc = oracle::exponents_from_monodromy(&m, family.period())?;
            row.oracle_residual = Some(oracle::compare_exponents(&asym, &orc, family.period())?.max_residual);
        }
    }
    Ok(())
}

/// Wrapped difference `f_i − f_j` with imaginary part in `[−Ω/2, Ω/2)`.
fn wrapped_diff(a: C64, b: C64, omega: f64) -> C64 {
    let d = a - b;
    let im = d.im - omega * ((d.im + omega / 2.0) / omega).floor();
    C64::new(d.re, im)
}

fn mark_crossings(rows: &mut [SweepRow], omega_of: impl Fn(usize) -> f64) {
    for k in 1..rows.len() {
        let (prev, cur) = (&rows[k - 1], &rows[k]);
        if prev.err.is_some() || cur.err.is_some() || cur.multiple {
            continue;
        }
        let om = omega_of(k);
        let n = cur.f0.len();
        let mut hit = false;
        for i in 0..n {
            for j in i + 1..n {
                let a = wrapped_diff(prev.f0[i], prev.f0[j], om);
                let b = wrapped_diff(cur.f0[i], cur.f0[j], om);
                let scale = 1e-9 * (1.0 + cur.f0[i].norm().max(cur.f0[j].norm()));
                let same_re = a.re.abs() <= scale && b.re.abs() <= scale;
                let through_zero = (a.im <= 0.0) != (b.im <= 0.0) && (a.im - b.im).abs() < om / 2.0;
                hit |= same_re && through_zero;
            }
        }
        rows[k].crossing = hit;
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.axes.is_empty() {
        return Err(Error::Config("sweep needs at least one --grid axis".into()));
    }
    let idx: Vec<usize> = (0..spec.len()).collect();
    let mut rows: Vec<SweepRow> = spec.pool()?.install(|| {
        idx.par_iter()
            .map(|&i| {
                let point = spec.point(i);
                match spec.config_at(i) {
                    Ok(cfg) => evaluate(spec, &cfg, point),
                    Err(e) => SweepRow { err: Some(e.to_string()), ..evaluate(spec, &spec.config, point) },
                }
            })
            .collect()
    });
    // Crossings only along the fastest axis.
    let last = spec.axes.last().map_or(1, |a| a.count);
    let omegas: Vec<f64> = (0..rows.len())
        .map(|i| spec.config_at(i).and_then(|c| c.period()).map(|t| 2.0 * std::f64::consts::PI / t).unwrap_or(f64::NAN))
        .collect();
    for chunk_start in (0..rows.len()).step_by(last) {
        let end = (chunk_start + last).min(rows.len());
        mark_crossings(&mut rows[chunk_start..end], |k| omegas[chunk_start + k]);
    }
    Ok(rows)
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

fn cnum(z: Option<C64>) -> [String; 2] {
    match z {
        Some(z) => [num(z.re), num(z.im)],
        None => ["nan".into(), "nan".into()],
    }
}

pub fn write_csv<W: Write>(spec: &SweepSpec, rows: &[SweepRow], w: W) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(spec.header()).map_err(io)?;
    for r in rows {
        let mut rec: Vec<String> = r.point.iter().map(|&x| num(x)).collect();
        let failed = r.err.is_some();
        for o in &spec.outputs {
            match o {
                Output::F0 => r.f0.iter().for_each(|&z| rec.extend(cnum((!failed).then_some(z)))),
                Output::Folding => {
                    rec.extend(r.folding_numbers.iter().map(|n| if failed { "nan".into() } else { n.to_string() }));
                    rec.push(r.multiple.to_string());
                    rec.push(r.crossing.to_string());
                }
                Output::F1 => r.lambda1.iter().for_each(|&z| rec.extend(cnum(z))),
                Output::Lambda2 => r.lambda2.iter().for_each(|&z| rec.extend(cnum(z))),
                Output::Ep => rec.push(r.ep.map_or("nan".into(), |b| b.to_string())),
                Output::Oracle => rec.push(r.oracle_residual.map_or("nan".into(), num)),
            }
        }
        rec.push(r.err.clone().unwrap_or_default());
        out.write_record(&rec).map_err(io)?;
    }
    out.flush().map_err(|e| Error::Invalid(e.to_string()))
}
