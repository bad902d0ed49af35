//! Transmission-efficiency chains and the resulting photon rates.
//!
//! A chain is a set of named factors (`eta_*`, each in `(0, 1]`), integer
//! multiplicities (`connectors_*`) and the rates `r_exc_hz` / `r_det_hz`.
//! Configs are key-value text, one `key = value` per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RATE_KEYS: [&str; 2] = ["r_exc_hz", "r_det_hz"];

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct EfficiencyChain {
    factors: BTreeMap<String, f64>,
    multiplicities: BTreeMap<String, u32>,
    rates: BTreeMap<String, f64>,
}

impl EfficiencyChain {
    pub fn new() -> Self {
        Self::default()
    }

    /// The source and setup values of the reference experiment.
    pub fn nominal() -> Self {
        let mut c = Self::new();
        for (k, v) in [
            ("eta_fibered", 0.133),
            ("eta_connector", 0.80),
            ("eta_bs", 0.75),
            ("eta_pol", 0.83),
            ("eta_qplate", 0.70),
            ("eta_coupling", 0.45),
            ("eta_det", 0.38),
            ("eta_setup", 0.52),
        ] {
            c.factors.insert(k.into(), v);
        }
        c.multiplicities.insert("connectors_intra".into(), 2);
        c.multiplicities.insert("connectors_inter".into(), 3);
        c.rates.insert("r_exc_hz".into(), 79e6);
        c.rates.insert("r_det_hz".into(), 4e6);
        c
    }

    /// Sets a factor, multiplicity or rate, checking its range.
    pub fn set(&mut self, key: &str, value: f64) -> Result<&mut Self> {
        if key.starts_with("eta_") {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Configuration(format!("{key} = {value} is outside (0, 1]")));
            }
            self.factors.insert(key.into(), value);
        } else if key.starts_with("connectors_") {
            if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                return Err(Error::Configuration(format!("{key} = {value} is not a nonnegative integer")));
            }
            self.multiplicities.insert(key.into(), value as u32);
        } else if RATE_KEYS.contains(&key) {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Configuration(format!("{key} = {value} must be positive")));
            }
            self.rates.insert(key.into(), value);
        } else {
            return Err(Error::Configuration(format!("unknown key '{key}'")));
        }
        Ok(self)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::Configuration(e.message().to_string() + &location(text, e.span()))
        })?;
        let mut chain = Self::new();
        for (key, value) in &table {
            let v = match value {
                toml::Value::Float(f) => *f,
                toml::Value::Integer(i) => *i as f64,
                other => {
                    return Err(Error::Configuration(format!("{key}: expected a number, got {}", other.type_str())))
                }
            };
            chain.set(key, v)?;
        }
        Ok(chain)
    }

    pub fn factor(&self, name: &str) -> Result<f64> {
        self.factors.get(name).copied().ok_or_else(|| Error::Configuration(format!("missing factor '{name}'")))
    }

    pub fn multiplicity(&self, name: &str) -> Result<u32> {
        self.multiplicities
            .get(name)
            .copied()
            .ok_or_else(|| Error::Configuration(format!("missing multiplicity '{name}'")))
    }

    pub fn rate(&self, name: &str) -> Result<f64> {
        self.rates.get(name).copied().ok_or_else(|| Error::Configuration(format!("missing rate '{name}'")))
    }

    /// Product of factors raised to their exponents.
    pub fn chain(&self, terms: &[(&str, u32)]) -> Result<f64> {
        terms.iter().try_fold(1.0, |acc, &(name, k)| Ok(acc * self.factor(name)?.powi(k as i32)))
    }

    /// Generation stage for one photon carrying an intra-particle state.
    pub fn eta_gen1(&self) -> Result<f64> {
        let k = self.multiplicity("connectors_intra")?;
        self.chain(&[("eta_fibered", 1), ("eta_connector", k), ("eta_pol", 1), ("eta_qplate", 1)])
    }

    /// Generation stage for each photon of the inter-particle gate.
    pub fn eta_gen2(&self) -> Result<f64> {
        let k = self.multiplicity("connectors_inter")?;
        self.chain(&[("eta_fibered", 1), ("eta_connector", k), ("eta_bs", 1), ("eta_pol", 1), ("eta_qplate", 1)])
    }

    /// Analysis stage: q-plate, fiber coupling and detection.
    pub fn eta_tomo(&self) -> Result<f64> {
        self.chain(&[("eta_qplate", 1), ("eta_coupling", 1), ("eta_det", 1)])
    }

    pub fn rates(&self) -> Result<Rates> {
        let r_exc = self.rate("r_exc_hz")?;
        let (g1, g2, t) = (self.eta_gen1()?, self.eta_gen2()?, self.eta_tomo()?);
        let r_gen_intra = g1 * r_exc / 2.0;
        let r_gen_inter = g2 * g2 * r_exc / 8.0;
        Ok(Rates { r_gen_intra_hz: r_gen_intra, r_intra_hz: t * r_gen_intra, r_gen_inter_hz: r_gen_inter, r_inter_hz: t * t * r_gen_inter })
    }

    /// Fiber-coupled source efficiency inferred from the detected rate.
    pub fn fibered_brightness(&self) -> Result<f64> {
        Ok(self.rate("r_det_hz")? / (self.rate("r_exc_hz")? * self.factor("eta_det")?))
    }

    pub fn first_lens_brightness(&self) -> Result<f64> {
        first_lens_brightness(self.rate("r_det_hz")?, self.rate("r_exc_hz")?, self.factor("eta_det")?, self.factor("eta_setup")?)
    }

    pub fn report(&self) -> Result<BudgetReport> {
        let has_det = self.rates.contains_key("r_det_hz");
        Ok(BudgetReport {
            eta_gen1: self.eta_gen1()?,
            eta_gen2: self.eta_gen2()?,
            eta_tomo: self.eta_tomo()?,
            rates: self.rates()?,
            fibered_brightness: if has_det { Some(self.fibered_brightness()?) } else { None },
            first_lens_brightness: if has_det && self.factors.contains_key("eta_setup") {
                Some(self.first_lens_brightness()?)
            } else {
                None
            },
        })
    }
}

fn location(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let before = &text[..r.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!(" (line {line}, column {col})")
        }
        None => String::new(),
    }
}

/// `B = R_det / (R_exc eta_det eta_setup)`.
pub fn first_lens_brightness(r_det_hz: f64, r_exc_hz: f64, eta_det: f64, eta_setup: f64) -> Result<f64> {
    if [r_det_hz, r_exc_hz, eta_det, eta_setup].iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Parameter("brightness inputs must be positive".into()));
    }
    Ok(r_det_hz / (r_exc_hz * eta_det * eta_setup))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Generated intra-particle states.
    pub r_gen_intra_hz: f64,
    /// Detected intra-particle states.
    pub r_intra_hz: f64,
    /// Generated post-selected two-photon states.
    pub r_gen_inter_hz: f64,
    /// Detected two-photon coincidences.
    pub r_inter_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub eta_gen1: f64,
    pub eta_gen2: f64,
    pub eta_tomo: f64,
    #[serde(flatten)]
    pub rates: Rates,
    pub fibered_brightness: Option<f64>,
    pub first_lens_brightness: Option<f64>,
}
