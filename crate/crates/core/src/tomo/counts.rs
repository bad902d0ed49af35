use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::sampling::{poisson, seeded_rng, Sampling};

use super::MeasurementSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: String,
    /// Integral when sampled; expectation values in exact mode.
    pub counts: f64,
    pub time_s: f64,
    /// Background rate in Hz; `background * time_s` counts are expected.
    pub background: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundMode {
    /// Detector dark counts.
    Dark,
    /// Accidental coincidences.
    Accidental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountData {
    pub records: Vec<CountRecord>,
    pub sampling: Sampling,
    /// Set once a background has been subtracted.
    pub subtracted: Option<BackgroundMode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationParams {
    /// Expected signal counts per product basis.
    pub mean_total: f64,
    pub background_rate: f64,
    pub time_s: f64,
    pub seed: u64,
    pub sampling: Sampling,
}

impl SimulationParams {
    pub fn new(mean_total: f64, seed: u64) -> Self {
        SimulationParams { mean_total, background_rate: 0.0, time_s: 1.0, seed, sampling: Sampling::Poisson }
    }
}

/// Counts per setting, `Poisson(mean_total Tr(rho Pi) + background T)`.
pub fn simulate_counts(rho: &DensityMatrix, set: &MeasurementSet, p: &SimulationParams) -> Result<CountData> {
    if !(p.mean_total > 0.0) || !(p.time_s > 0.0) || p.background_rate < 0.0 {
        return Err(Error::Parameter(format!(
            "need mean_total > 0, time > 0, background >= 0 (got {}, {}, {})",
            p.mean_total, p.time_s, p.background_rate
        )));
    }
    let probs = set.probabilities(rho)?;
    let mut rng = seeded_rng(p.seed, 0);
    let records = set
        .settings()
        .iter()
        .zip(probs)
        .map(|(s, prob)| {
            let mean = p.mean_total * prob.max(0.0) + p.background_rate * p.time_s;
            let counts = match p.sampling {
                Sampling::Poisson => poisson(mean, &mut rng),
                Sampling::Exact => mean,
            };
            CountRecord { setting: s.label.clone(), counts, time_s: p.time_s, background: p.background_rate }
        })
        .collect();
    Ok(CountData { records, sampling: p.sampling, subtracted: None })
}

/// `counts' = max(0, counts - background T)`.
pub fn subtract_background(data: &CountData, mode: BackgroundMode) -> CountData {
    let records = data
        .records
        .iter()
        .map(|r| CountRecord { counts: (r.counts - r.background * r.time_s).max(0.0), ..r.clone() })
        .collect();
    CountData { records, sampling: data.sampling, subtracted: Some(mode) }
}

/// Accidental coincidence rate `R_c R_d tau_window`.
pub fn accidental_rate(rate_c_hz: f64, rate_d_hz: f64, window_s: f64) -> f64 {
    rate_c_hz * rate_d_hz * window_s
}

impl CountData {
    /// Counts aligned with the settings of `set`.
    pub fn aligned_counts(&self, set: &MeasurementSet) -> Result<Vec<f64>> {
        set.settings()
            .iter()
            .map(|s| {
                self.records
                    .iter()
                    .find(|r| r.setting == s.label)
                    .map(|r| r.counts)
                    .ok_or_else(|| Error::Incomplete { rank: self.records.len(), needed: set.len() })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("setting,counts,time_s,background\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{},{}\n", r.setting, r.counts, r.time_s, r.background));
        }
        s
    }

    pub fn from_csv(text: &str, sampling: Sampling) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "setting,counts,time_s,background" => {}
            Some((i, h)) => return Err(Error::Data { line: i + 1, message: format!("unexpected header '{h}'") }),
            None => return Err(Error::Data { line: 1, message: "empty count file".into() }),
        }
        let mut records = Vec::new();
        for (i, l) in lines {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Data { line: i + 1, message: format!("expected 4 fields, got {}", f.len()) });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Data { line: i + 1, message: format!("not a number: '{s}'") })
            };
            let r = CountRecord { setting: f[0].to_string(), counts: num(f[1])?, time_s: num(f[2])?, background: num(f[3])? };
            if r.counts < 0.0 || !(r.time_s > 0.0) {
                return Err(Error::Data { line: i + 1, message: "counts must be >= 0 and time > 0".into() });
            }
            records.push(r);
        }
        Ok(CountData { records, sampling, subtracted: None })
    }
}
