//! Model builders and their closed-form exceptional-point classifiers.

pub mod config;
pub mod dimer;
pub mod oscillator;

pub use config::{ModelConfig, ModelKind};
pub use dimer::{
    admissible_omegas, build_dimer, build_dimer_with, build_hill_system, check_frequency_ratio, classify_dimer_ep,
    A2Variant, AdmissibleOmega, CapacitanceMatrix, Channels, DimerEpClassification, DimerOptions, DimerPairReport,
    DimerParams, HillSystem, KappaBScale, RatioConvention, ResonanceCase,
};
pub use oscillator::{
    build_oscillator, build_oscillator_with, classify_oscillator_ep, OscillatorEpVerdict, OscillatorParams, SpringCoupling,
};
