//! Pulsed coincidence histograms and their estimators.
//!
//! HOM histogram (unbalanced interferometer, pulse train): peaks with
//! `|k| >= 2` have mean `mu = (rate/2)^2 T_rep T`, the `+-1` peaks `3 mu / 4`,
//! and the central peak `mu (1 - V)/2 + g2 mu`. HBT histogram: all side
//! peaks `mu`, central `g2 mu`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{poisson, seeded_rng, Sampling};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub delay_ns: f64,
    pub counts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    rep_period_ns: f64,
    peaks: Vec<Peak>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramParams {
    pub rate_hz: f64,
    pub rep_period_ns: f64,
    pub duration_s: f64,
    pub peaks_per_side: usize,
    pub sampling: Sampling,
}

impl HistogramParams {
    pub fn new(rate_hz: f64, rep_period_ns: f64, duration_s: f64) -> Result<Self> {
        let p = HistogramParams { rate_hz, rep_period_ns, duration_s, peaks_per_side: 5, sampling: Sampling::Poisson };
        p.validate()?;
        Ok(p)
    }

    pub fn with_peaks_per_side(self, k: usize) -> Result<Self> {
        let p = HistogramParams { peaks_per_side: k, ..self };
        p.validate()?;
        Ok(p)
    }

    /// Peaks carry their expectation values instead of Poisson samples.
    pub fn exact(self) -> Self {
        HistogramParams { sampling: Sampling::Exact, ..self }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("rate", self.rate_hz), ("rep_period", self.rep_period_ns), ("duration", self.duration_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.peaks_per_side < 1 {
            return Err(Error::Parameter("at least one side peak per side is required".into()));
        }
        Ok(())
    }

    /// Mean of a fully uncorrelated peak.
    pub fn side_mean(&self) -> f64 {
        let half = self.rate_hz / 2.0;
        half * half * self.rep_period_ns * 1e-9 * self.duration_s
    }
}

fn check_g2(g2: f64) -> Result<()> {
    if !(0.0..1.0).contains(&g2) {
        return Err(Error::Parameter(format!("g2 must lie in [0, 1), got {g2}")));
    }
    Ok(())
}

fn sample(params: &HistogramParams, seed: u64, mean_of: impl Fn(i64) -> f64) -> Histogram {
    let mut rng = seeded_rng(seed, 0);
    let k = params.peaks_per_side as i64;
    let peaks = (-k..=k)
        .map(|i| Peak { delay_ns: i as f64 * params.rep_period_ns, counts: match params.sampling {
            Sampling::Poisson => poisson(mean_of(i), &mut rng),
            Sampling::Exact => mean_of(i),
        } })
        .collect();
    Histogram { rep_period_ns: params.rep_period_ns, peaks }
}

/// HOM coincidence histogram for interference visibility `visibility`.
pub fn simulate_hom_histogram(params: &HistogramParams, visibility: f64, g2: f64, seed: u64) -> Result<Histogram> {
    params.validate()?;
    check_g2(g2)?;
    if !(-1.0..=1.0).contains(&visibility) {
        return Err(Error::Parameter(format!("visibility must lie in [-1, 1], got {visibility}")));
    }
    let mu = params.side_mean();
    Ok(sample(params, seed, |k| match k.abs() {
        0 => mu * (1.0 - visibility) / 2.0 + g2 * mu,
        1 => 0.75 * mu,
        _ => mu,
    }))
}

/// Hanbury Brown-Twiss histogram of one source.
pub fn simulate_hbt_histogram(params: &HistogramParams, g2: f64, seed: u64) -> Result<Histogram> {
    params.validate()?;
    check_g2(g2)?;
    let mu = params.side_mean();
    Ok(sample(params, seed, |k| if k == 0 { g2 * mu } else { mu }))
}

impl Histogram {
    pub fn new(rep_period_ns: f64, peaks: Vec<Peak>) -> Result<Self> {
        if !(rep_period_ns > 0.0) {
            return Err(Error::Parameter(format!("rep_period must be positive, got {rep_period_ns}")));
        }
        Ok(Histogram { rep_period_ns, peaks })
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn rep_period_ns(&self) -> f64 {
        self.rep_period_ns
    }

    fn index(&self, p: &Peak) -> i64 {
        (p.delay_ns / self.rep_period_ns).round() as i64
    }

    pub fn central(&self) -> Result<f64> {
        self.peaks
            .iter()
            .find(|p| self.index(p) == 0)
            .map(|p| p.counts)
            .ok_or_else(|| Error::Estimation("no zero-delay peak".into()))
    }

    /// Mean and number of the side peaks with `|k| >= min_k`; requires
    /// `min_side` peaks on each side.
    fn side(&self, min_k: i64, min_side: usize) -> Result<(f64, usize)> {
        let sel: Vec<(i64, f64)> = self
            .peaks
            .iter()
            .map(|p| (self.index(p), p.counts))
            .filter(|(k, _)| k.abs() >= min_k)
            .collect();
        let left = sel.iter().filter(|(k, _)| *k < 0).count();
        let right = sel.len() - left;
        if left < min_side || right < min_side {
            return Err(Error::Estimation(format!(
                "need {min_side} side peaks per side with |k| >= {min_k}, found {left} and {right}"
            )));
        }
        let mean = sel.iter().map(|(_, c)| c).sum::<f64>() / sel.len() as f64;
        if mean <= 0.0 {
            return Err(Error::Estimation("side peaks are empty".into()));
        }
        Ok((mean, sel.len()))
    }

    /// `delay_ns,counts` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delay_ns,counts\n");
        for p in &self.peaks {
            s.push_str(&format!("{},{}\n", p.delay_ns, p.counts));
        }
        s
    }

    pub fn from_csv(text: &str, rep_period_ns: f64) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "delay_ns,counts" => {}
            Some((i, h)) => {
                return Err(Error::Data { line: i + 1, message: format!("expected header 'delay_ns,counts', got '{h}'") })
            }
            None => return Err(Error::Data { line: 1, message: "empty histogram".into() }),
        }
        let mut peaks = Vec::new();
        for (i, l) in lines {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Data { line: i + 1, message: format!("expected 2 fields, got {}", fields.len()) });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Data { line: i + 1, message: format!("not a number: '{s}'") })
            };
            peaks.push(Peak { delay_ns: num(fields[0])?, counts: num(fields[1])? });
        }
        Histogram::new(rep_period_ns, peaks)
    }
}

/// `V = 1 - 2 C0 / <C>` over the `|k| >= 2` peaks, with Poisson error.
pub fn estimate_visibility(h: &Histogram) -> Result<(f64, f64)> {
    let c0 = h.central()?;
    let (mean, n) = h.side(2, 3)?;
    let v = 1.0 - 2.0 * c0 / mean;
    let var = 4.0 * c0 / (mean * mean) + 4.0 * c0 * c0 / (mean.powi(3) * n as f64);
    Ok((v, var.sqrt()))
}

/// `g2 = C0 / <C>` over all side peaks of an HBT histogram.
pub fn estimate_g2(h: &Histogram) -> Result<(f64, f64)> {
    let c0 = h.central()?;
    let (mean, n) = h.side(1, 3)?;
    let g = c0 / mean;
    let var = c0 / (mean * mean) + c0 * c0 / (mean.powi(3) * n as f64);
    Ok((g, var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomReport {
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "V_std")]
    pub v_std: f64,
    pub g2: f64,
    pub g2_std: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C_side_mean")]
    pub c_side_mean: f64,
}

impl HomReport {
    pub fn from_histograms(hom: &Histogram, hbt: &Histogram) -> Result<Self> {
        let (v, v_std) = estimate_visibility(hom)?;
        let (g2, g2_std) = estimate_g2(hbt)?;
        Ok(HomReport { v, v_std, g2, g2_std, c0: hom.central()?, c_side_mean: hom.side(2, 3)?.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock2::{expected_raw_visibility, hom_visibility, IndistinguishabilityModel};
    use crate::modes::{Mode, Pol, SingleKet};

    fn hist(c0: f64, side: f64) -> Histogram {
        let peaks = (-5..=5)
            .map(|k: i32| Peak { delay_ns: 12.5 * k as f64, counts: if k == 0 { c0 } else { side } })
            .collect();
        Histogram::new(12.5, peaks).unwrap()
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(estimate_visibility(&hist(0.0, 1000.0)).unwrap(), (1.0, 0.0));
        assert!(estimate_visibility(&hist(500.0, 1000.0)).unwrap().0.abs() < 1e-15);
        assert!((estimate_g2(&hist(10.0, 1000.0)).unwrap().0 - 0.01).abs() < 1e-15);
        assert!(matches!(estimate_visibility(&hist(5.0, 0.0)), Err(Error::Estimation(_))));
    }

    #[test]
    fn standard_errors_match_finite_differences() {
        // Poisson propagation compared with a numerical gradient of V(C0, <C>)
        let (c0, side, n) = (600.0, 2000.0, 8.0);
        let v = |c0: f64, m: f64| 1.0 - 2.0 * c0 / m;
        let e = 1e-3;
        let d0 = (v(c0 + e, side) - v(c0 - e, side)) / (2.0 * e);
        let dm = (v(c0, side + e) - v(c0, side - e)) / (2.0 * e);
        let want = (d0 * d0 * c0 + dm * dm * side / n).sqrt();
        let (_, got) = estimate_visibility(&hist(c0, side)).unwrap();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn too_few_side_peaks() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap().with_peaks_per_side(3).unwrap();
        let h = simulate_hom_histogram(&p, 0.9, 0.0, 1).unwrap();
        assert!(matches!(estimate_visibility(&h), Err(Error::Estimation(_))));
        assert!(estimate_g2(&simulate_hbt_histogram(&p, 0.01, 1).unwrap()).is_ok());
    }

    #[test]
    fn exact_histograms_carry_expectations() {
        let p = HistogramParams::new(20e6, 12.5, 1.0).unwrap().exact();
        let h = simulate_hom_histogram(&p, 0.93, 0.0126, 1).unwrap();
        let (v, _) = estimate_visibility(&h).unwrap();
        assert!((v - (0.93 - 2.0 * 0.0126)).abs() < 1e-12);
        let (g, _) = estimate_g2(&simulate_hbt_histogram(&p, 0.0126, 1).unwrap()).unwrap();
        assert!((g - 0.0126).abs() < 1e-12);
    }

    #[test]
    fn parameter_errors() {
        assert!(HistogramParams::new(0.0, 12.5, 1.0).is_err());
        assert!(HistogramParams::new(1e6, 12.5, -1.0).is_err());
        let p = HistogramParams::new(1e6, 12.5, 1.0).unwrap();
        assert!(simulate_hom_histogram(&p, 0.5, 1.0, 0).is_err());
        assert!(simulate_hbt_histogram(&p, -0.1, 0).is_err());
    }

    #[test]
    fn perfect_dip_and_distinguishable_baseline() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap();
        let a = SingleKet::basis(Mode::new(Pol::R, 2)).unwrap();
        let b = SingleKet::basis(Mode::new(Pol::L, -2)).unwrap();
        let v1 = hom_visibility(&a, &b, &IndistinguishabilityModel::new(1.0).unwrap()).unwrap();
        let h = simulate_hom_histogram(&p, v1, 0.0, 3).unwrap();
        assert_eq!(h.central().unwrap(), 0.0);
        let v0 = hom_visibility(&a, &b, &IndistinguishabilityModel::new(0.0).unwrap()).unwrap();
        let h = simulate_hom_histogram(&p, v0, 0.0, 3).unwrap();
        let (v, s) = estimate_visibility(&h).unwrap();
        assert!(v.abs() < 3.0 * s, "{v} +- {s}");
    }

    #[test]
    fn peak_positions() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap();
        let h = simulate_hom_histogram(&p, 0.9, 0.0, 0).unwrap();
        let d: Vec<f64> = h.peaks().iter().map(|p| p.delay_ns).collect();
        assert_eq!(d, vec![-62.5, -50.0, -37.5, -25.0, -12.5, 0.0, 12.5, 25.0, 37.5, 50.0, 62.5]);
    }

    #[test]
    fn round_trip_within_three_sigma() {
        let p = HistogramParams::new(4e6, 12.5, 60.0).unwrap();
        let g2 = 0.0126;
        let v_int = 0.93 + 2.0 * g2;
        for seed in 0..20 {
            let h = simulate_hom_histogram(&p, v_int, g2, seed).unwrap();
            let (v, s) = estimate_visibility(&h).unwrap();
            assert!((v - expected_raw_visibility(v_int, g2)).abs() < 3.0 * s, "seed {seed}: {v} +- {s}");
            let (g, gs) = estimate_g2(&simulate_hbt_histogram(&p, g2, seed).unwrap()).unwrap();
            assert!((g - g2).abs() < 3.0 * gs, "seed {seed}: {g} +- {gs}");
        }
    }

    #[test]
    fn seeded_simulation_is_deterministic() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap();
        assert_eq!(simulate_hom_histogram(&p, 0.9, 0.01, 42), simulate_hom_histogram(&p, 0.9, 0.01, 42));
        assert_ne!(simulate_hom_histogram(&p, 0.9, 0.01, 42), simulate_hom_histogram(&p, 0.9, 0.01, 43));
    }

    #[test]
    fn csv_round_trip() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap();
        let h = simulate_hom_histogram(&p, 0.9, 0.01, 5).unwrap();
        let back = Histogram::from_csv(&h.to_csv(), 12.5).unwrap();
        assert_eq!(back, h);
        let e = Histogram::from_csv("delay_ns,counts\n0,abc\n", 12.5).unwrap_err();
        assert_eq!(e, Error::Data { line: 2, message: "not a number: 'abc'".into() });
    }

    #[test]
    fn report_json_keys() {
        let p = HistogramParams::new(4e6, 12.5, 1.0).unwrap();
        let r = HomReport::from_histograms(
            &simulate_hom_histogram(&p, 0.9, 0.01, 1).unwrap(),
            &simulate_hbt_histogram(&p, 0.01, 2).unwrap(),
        )
        .unwrap();
        assert!(r.c_side_mean > 0.0 && r.v_std > 0.0);
    }
}
