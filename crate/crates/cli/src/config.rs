//! Experiment configuration files (TOML).

use std::f64::consts::FRAC_1_SQRT_2;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C;
use oam_photonics::density::{triplet, DensityMatrix};
use oam_photonics::elements::{parse_chain, prepare_from_chain, prepare_vv};
use oam_photonics::gate::ChshSetting;
use oam_photonics::tomo::{BackgroundMode, Sampling, Scheme};
use oam_photonics::{EfficiencyChain, Ket};
use serde::Deserialize;

use crate::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Hom,
    Histogram,
    Gate,
    Chsh,
    Tomo,
    Budget,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    pub histogram: Option<HistogramConfig>,
    pub gate: Option<GateConfig>,
    pub chsh: Option<ChshConfig>,
    pub tomo: Option<TomoConfig>,
    pub budget: Option<toml::Table>,
}

/// One photon's preparation: a named state, a mode label, an element chain
/// acting on `|H,0>`, or vector-vortex angles.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preparation {
    pub state: Option<String>,
    pub chain: Option<String>,
    pub vv_deg: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub name: Option<String>,
    pub a: Preparation,
    pub b: Preparation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "M", default = "one")]
    pub m: f64,
    pub tau_ns: Option<f64>,
    pub tau_c_ns: Option<f64>,
    /// Points of the delay scan written to `hom_dip.csv`.
    pub dip_points: Option<usize>,
    pub dip_max_ns: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { m: 1.0, tau_ns: None, tau_c_ns: None, dip_points: None, dip_max_ns: None }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub rate_hz: f64,
    #[serde(default = "rep_ns")]
    pub rep_period_ns: f64,
    pub duration_s: f64,
    pub visibility: f64,
    pub g2: f64,
    #[serde(default = "five")]
    pub peaks_per_side: usize,
}

fn rep_ns() -> f64 {
    12.5
}

fn five() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    pub a: Preparation,
    pub b: Preparation,
    #[serde(default = "yes")]
    pub relabel: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshConfig {
    #[serde(default = "triplet_name")]
    pub state: String,
    pub werner: Option<f64>,
    /// `[theta, phi]` Bloch angles of a, a', b, b'; omitted: optimal setting.
    pub angles_deg: Option<[[f64; 2]; 4]>,
}

fn triplet_name() -> String {
    "triplet".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoConfig {
    pub scheme: Scheme,
    #[serde(default = "triplet_name")]
    pub state: String,
    pub werner: Option<f64>,
    pub counts_per_basis: f64,
    #[serde(default)]
    pub background_hz: f64,
    #[serde(default = "one")]
    pub time_s: f64,
    pub subtract: Option<BackgroundMode>,
    pub sampling: Option<Sampling>,
    #[serde(default)]
    pub mc_samples: usize,
}

impl ExperimentConfig {
    /// Parses TOML text; errors report line and column.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            anyhow!("config line {line}, column {col}: {}", e.message())
        })
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl Preparation {
    pub fn ket(&self) -> Result<Ket> {
        match (&self.state, &self.chain, &self.vv_deg) {
            (Some(s), None, None) => named_ket(s),
            (None, Some(c), None) => {
                let specs = parse_chain(c).provenance().with_context(|| format!("chain '{c}'"))?;
                prepare_from_chain(&specs).provenance()
            }
            (None, None, Some([t, p])) => Ok(prepare_vv(t.to_radians(), p.to_radians())),
            _ => bail!("a preparation needs exactly one of state, chain or vv_deg"),
        }
    }
}

fn named_ket(name: &str) -> Result<Ket> {
    use std::f64::consts::{FRAC_PI_2, PI};
    match name {
        "phi+" => Ok(prepare_vv(FRAC_PI_2, 0.0)),
        "phi-" => Ok(prepare_vv(FRAC_PI_2, PI)),
        label => Ket::from_label(label).provenance().with_context(|| format!("state '{label}'")),
    }
}

/// Two-qubit Bell states by name, optionally mixed with white noise.
pub fn named_density(name: &str, werner: Option<f64>) -> Result<DensityMatrix> {
    let h = FRAC_1_SQRT_2;
    let z = 0.0;
    let amps = match name {
        "triplet" | "psi+" => return mix(triplet(), werner),
        "psi-" => [z, h, -h, z],
        "phi+" => [h, z, z, h],
        "phi-" => [h, z, z, -h],
        other => bail!("unknown two-qubit state '{other}' (triplet, psi+, psi-, phi+, phi-)"),
    };
    mix(DensityMatrix::from_pure(&amps.map(|x| C::new(x, 0.0))).provenance()?, werner)
}

fn mix(rho: DensityMatrix, werner: Option<f64>) -> Result<DensityMatrix> {
    match werner {
        Some(v) => rho.werner(v).provenance(),
        None => Ok(rho),
    }
}

impl ChshConfig {
    pub fn setting(&self) -> Result<Option<ChshSetting>> {
        self.angles_deg.map(|a| ChshSetting::from_angles_deg(a).provenance()).transpose()
    }
}

/// Chain from a `[budget]` table; the nominal chain when absent.
pub fn budget_chain(table: Option<&toml::Table>) -> Result<EfficiencyChain> {
    let Some(table) = table else { return Ok(EfficiencyChain::nominal()) };
    let mut chain = EfficiencyChain::new();
    for (key, value) in table {
        let v = match value {
            toml::Value::Float(f) => *f,
            toml::Value::Integer(i) => *i as f64,
            other => bail!("budget.{key}: expected a number, got {}", other.type_str()),
        };
        chain.set(key, v).provenance()?;
    }
    Ok(chain)
}
