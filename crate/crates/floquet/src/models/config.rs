//! JSON model configuration shared by the command-line tools.
//!
//! ```json
//! { "model": "dimer",
//!   "params": { "c11": 2, "c22": 1, "delta": 1, "vol": 1, "omega": 0.41421356 },
//!   "channels": "rho",
//!   "series": { "eta1": [{ "m": 1, "re": 1.0 }] } }
//! ```
//!
//! Series listed only at non-negative frequencies are mirrored into real-valued series.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dimer::{build_dimer_with, CapacitanceMatrix, Channels, DimerOptions, DimerParams};
use super::oscillator::{build_oscillator_with, OscillatorParams, SpringCoupling};
use crate::error::{Error, Result};
use crate::expansion::CoefficientFamily;
use crate::fourier::{ScalarCoeffJson, ScalarFourierSeries, C64};

const OSCILLATOR_KEYS: &[&str] = &["c", "k", "a", "b", "phi", "period", "omega"];
const DIMER_KEYS: &[&str] = &["c11", "c22", "c12_re", "c12_im", "delta", "vol", "period", "omega"];
const SERIES_KEYS: &[&str] = &["eta1", "eta2", "gamma1", "gamma2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Oscillator,
    Dimer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub channels: Option<Channels>,
    #[serde(default)]
    pub series: BTreeMap<String, Vec<ScalarCoeffJson>>,
    #[serde(default)]
    pub options: DimerOptions,
    #[serde(default)]
    pub coupling: SpringCoupling,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ModelConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| cfg(e.to_string()))?;
        c.check_keys()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn keys(&self) -> &'static [&'static str] {
        match self.model {
            ModelKind::Oscillator => OSCILLATOR_KEYS,
            ModelKind::Dimer => DIMER_KEYS,
        }
    }

    fn check_keys(&self) -> Result<()> {
        for k in self.params.keys() {
            if !self.keys().contains(&k.as_str()) {
                return Err(cfg(format!("unknown parameter `{k}` for {:?}", self.model)));
            }
        }
        if self.params.contains_key("period") && self.params.contains_key("omega") {
            return Err(cfg("give either `period` or `omega`, not both"));
        }
        for k in self.series.keys() {
            if self.model == ModelKind::Oscillator || !SERIES_KEYS.contains(&k.as_str()) {
                return Err(cfg(format!("unknown series `{k}`")));
            }
        }
        Ok(())
    }

    /// Override one parameter; `period` and `omega` replace each other.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !self.keys().contains(&name) {
            return Err(cfg(format!("unknown parameter `{name}` for {:?}", self.model)));
        }
        match name {
            "period" => {
                self.params.remove("omega");
            }
            "omega" => {
                self.params.remove("period");
            }
            _ => {}
        }
        self.params.insert(name.to_string(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    fn req(&self, name: &str) -> Result<f64> {
        self.get(name).ok_or_else(|| cfg(format!("missing parameter `{name}`")))
    }

    fn int(&self, name: &str, default: i64) -> Result<i64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) if v.fract() == 0.0 => Ok(v as i64),
            Some(v) => Err(cfg(format!("`{name}` must be an integer, got {v}"))),
        }
    }

    pub fn period(&self) -> Result<f64> {
        match (self.get("period"), self.get("omega")) {
            (Some(t), None) => Ok(t),
            (None, Some(w)) => Ok(2.0 * PI / w),
            _ => Err(cfg("exactly one of `period` and `omega` is required")),
        }
    }

    pub fn oscillator(&self) -> Result<OscillatorParams> {
        if self.model != ModelKind::Oscillator {
            return Err(cfg("not an oscillator configuration"));
        }
        Ok(OscillatorParams {
            c: self.req("c")?,
            k: self.req("k")?,
            a: self.int("a", 1)?,
            b: self.int("b", 1)?,
            phi: self.get("phi").unwrap_or(0.0),
            period: self.period()?,
        })
    }

    pub fn channels(&self) -> Channels {
        self.channels.unwrap_or(Channels::Rho)
    }

    pub fn dimer(&self) -> Result<DimerParams> {
        if self.model != ModelKind::Dimer {
            return Err(cfg("not a dimer configuration"));
        }
        let period = self.period()?;
        let cap = CapacitanceMatrix::new(
            self.req("c11")?,
            self.req("c22")?,
            C64::new(self.get("c12_re").unwrap_or(0.0), self.get("c12_im").unwrap_or(0.0)),
        );
        let mut p = DimerParams::unmodulated(cap, self.req("delta")?, self.req("vol")?, period);
        for (name, entries) in &self.series {
            let s = if entries.iter().all(|e| e.m >= 0) {
                ScalarFourierSeries::from_nonnegative(period, entries.iter().map(|e| (e.m, C64::new(e.re, e.im))))
            } else {
                ScalarFourierSeries::from_entries(period, entries, true)
            }
            .map_err(|e| cfg(format!("series `{name}`: {e}")))?;
            match name.as_str() {
                "eta1" => p.eta1 = s,
                "eta2" => p.eta2 = s,
                "gamma1" => p.gamma1 = s,
                _ => p.gamma2 = s,
            }
        }
        Ok(p)
    }

    pub fn build(&self) -> Result<CoefficientFamily> {
        match self.model {
            ModelKind::Oscillator => build_oscillator_with(&self.oscillator()?, self.coupling),
            ModelKind::Dimer => build_dimer_with(&self.dimer()?, self.channels(), self.options),
        }
    }
}
