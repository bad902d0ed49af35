//! The experiment runners. Each returns its artifacts in memory.

use anyhow::{bail, ensure, Context, Result};
use oam_photonics::density::triplet;
use oam_photonics::fock2::{
    bs_scatter, hom_visibility, pattern_probabilities, simulate_hbt_histogram, simulate_hom_histogram, HistogramParams,
    HomReport, IndistinguishabilityModel,
};
use oam_photonics::gate::{chsh_optimal, chsh_value, entangling_gate, ChshReport};
use oam_photonics::modes::LogicalQubitMap;
use oam_photonics::reference::ReferenceReport;
use oam_photonics::tomo::{
    build_measurements, linear_inversion, mle_reconstruct, monte_carlo_errors, simulate_counts, subtract_background,
    MleOptions, Sampling, SimulationParams, TomoReport,
};
use oam_photonics::budget::BudgetReport;
use oam_photonics::{EfficiencyChain, Ket};
use serde::{Deserialize, Serialize};

use crate::config::{budget_chain, named_density, ExperimentConfig, PairConfig, Preparation};
use crate::output::{table, Artifact, Format};
use crate::Provenance;

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub format: Format,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomRow {
    pub name: String,
    pub visibility: f64,
    /// Pattern probabilities for perfectly overlapping photons.
    pub p_cc: f64,
    pub p_dd: f64,
    pub p_cd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSummary {
    pub success_prob: f64,
    pub leakage: f64,
    pub fidelity: f64,
    pub concurrence: f64,
    #[serde(rename = "S")]
    pub s: f64,
    /// Logical amplitudes in the order |00>, |01>, |10>, |11>.
    pub state_re: [f64; 4],
    pub state_im: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetOutput {
    #[serde(flatten)]
    pub report: BudgetReport,
    pub inputs: serde_json::Value,
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Artifact>> {
    use crate::config::Experiment::*;
    let seed = opts.seed.or(cfg.seed);
    match cfg.experiment {
        Hom => hom(cfg, opts),
        Histogram => histogram(cfg, opts, seed),
        Gate => gate(cfg, opts),
        Chsh => chsh(cfg, opts),
        Tomo => tomo(cfg, opts, seed),
        Budget => budget(cfg, opts),
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.context("a seed is mandatory for sampled runs (config `seed` or --seed)")
}

fn prep(label: &str, p: &Preparation) -> Result<Ket> {
    p.ket().with_context(|| format!("preparation {label}"))
}

/// The five preparations of the canonical interference runs.
pub fn default_pairs() -> Vec<PairConfig> {
    let state = |s: &str| Preparation { state: Some(s.into()), chain: None, vv_deg: None };
    [("R:+2", "R:+2"), ("R:+2", "L:-2"), ("phi+", "phi-"), ("phi+", "phi+"), ("L:-2", "phi+")]
        .into_iter()
        .map(|(a, b)| PairConfig { name: Some(format!("{a} / {b}")), a: state(a), b: state(b) })
        .collect()
}

fn hom(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Artifact>> {
    let pairs = if cfg.pairs.is_empty() { default_pairs() } else { cfg.pairs.clone() };
    let m = &cfg.model;
    let mut model = IndistinguishabilityModel::new(m.m).provenance()?;
    if let (Some(tau), Some(tc)) = (m.tau_ns, m.tau_c_ns) {
        model = model.with_delay(tau, tc).provenance()?;
    }
    let mut rows = Vec::new();
    let mut kets = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let name = p.name.clone().unwrap_or_else(|| format!("pair {i}"));
        let (a, b) = (prep(&format!("{name} a"), &p.a)?, prep(&format!("{name} b"), &p.b)?);
        let probs = pattern_probabilities(&bs_scatter(&a, &b).provenance()?);
        let visibility = hom_visibility(&a, &b, &model).provenance()?;
        rows.push(HomRow { name, visibility, p_cc: probs.p_cc, p_dd: probs.p_dd, p_cd: probs.p_cd });
        kets.push((a, b));
    }
    let mut out = vec![table("hom", opts.format, &rows)?];
    if let Some(points) = m.dip_points {
        let tc = m.tau_c_ns.context("dip_points needs model.tau_c_ns")?;
        ensure!(points >= 2, "dip_points must be at least 2");
        let max = m.dip_max_ns.unwrap_or(3.0 * tc);
        let base = IndistinguishabilityModel::new(m.m).provenance()?;
        let mut csv = String::from("pair,delay_ns,p_cd\n");
        for (i, (a, b)) in kets.iter().enumerate() {
            for k in 0..points {
                let tau = -max + 2.0 * max * k as f64 / (points - 1) as f64;
                let v = hom_visibility(a, b, &base.with_delay(tau, tc).provenance()?).provenance()?;
                csv.push_str(&format!("{i},{tau},{}\n", (1.0 - v) / 2.0));
            }
        }
        out.push(Artifact::new("hom_dip.csv", csv));
    }
    Ok(out)
}

fn histogram(cfg: &ExperimentConfig, opts: &RunOptions, seed: Option<u64>) -> Result<Vec<Artifact>> {
    let h = cfg.histogram.as_ref().context("missing [histogram] section")?;
    let mut params = HistogramParams::new(h.rate_hz, h.rep_period_ns, h.duration_s)
        .and_then(|p| p.with_peaks_per_side(h.peaks_per_side))
        .provenance()?;
    let seed = if opts.exact {
        params = params.exact();
        seed.unwrap_or(0)
    } else {
        require_seed(seed)?
    };
    let hom = simulate_hom_histogram(&params, h.visibility, h.g2, seed).provenance()?;
    let hbt = simulate_hbt_histogram(&params, h.g2, seed.wrapping_add(1)).provenance()?;
    let report = HomReport::from_histograms(&hom, &hbt).provenance()?;
    Ok(vec![
        Artifact::new("hom_histogram.csv", hom.to_csv()),
        Artifact::new("hbt_histogram.csv", hbt.to_csv()),
        table("histogram_report", opts.format, &[report])?,
    ])
}

fn gate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Artifact>> {
    let g = cfg.gate.as_ref().context("missing [gate] section")?;
    let (a, b) = (prep("a", &g.a)?, prep("b", &g.b)?);
    let out = entangling_gate(&a, &b, &LogicalQubitMap::default(), g.relabel).provenance()?;
    let summary = GateSummary {
        success_prob: out.success_prob,
        leakage: out.leakage,
        fidelity: out.rho.fidelity(&triplet()).provenance()?,
        concurrence: out.rho.concurrence().provenance()?,
        s: chsh_optimal(&out.rho).provenance()?.0,
        state_re: out.state.map(|z| z.re),
        state_im: out.state.map(|z| z.im),
    };
    Ok(vec![table("gate", opts.format, &[summary])?, Artifact::new("gate_density.csv", out.rho.to_csv())])
}

fn chsh(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Artifact>> {
    let c = cfg.chsh.as_ref().context("missing [chsh] section")?;
    let rho = named_density(&c.state, c.werner)?;
    let (s, setting) = match c.setting()? {
        Some(setting) => (chsh_value(&rho, &setting).provenance()?, setting),
        None => chsh_optimal(&rho).provenance()?,
    };
    let report = ChshReport { s, s_std: 0.0, angles_deg: setting.angles_deg(), corrected: false };
    Ok(vec![table("chsh", opts.format, &[report])?])
}

fn tomo(cfg: &ExperimentConfig, opts: &RunOptions, seed: Option<u64>) -> Result<Vec<Artifact>> {
    let t = cfg.tomo.as_ref().context("missing [tomo] section")?;
    let sampling = if opts.exact { Sampling::Exact } else { t.sampling.unwrap_or(Sampling::Poisson) };
    let seed = match sampling {
        Sampling::Poisson => require_seed(seed)?,
        Sampling::Exact => seed.unwrap_or(0),
    };
    let target = named_density(&t.state, None)?;
    let truth = named_density(&t.state, t.werner)?;
    let set = build_measurements(t.scheme).provenance()?;
    let params = SimulationParams {
        background_rate: t.background_hz,
        time_s: t.time_s,
        sampling,
        ..SimulationParams::new(t.counts_per_basis, seed)
    };
    let raw = simulate_counts(&truth, &set, &params).provenance()?;
    let data = match t.subtract {
        Some(mode) => subtract_background(&raw, mode),
        None => raw.clone(),
    };
    let linear = linear_inversion(&data, &set).provenance()?;
    let linear_rho = linear.to_density().provenance()?;
    let linear_report = TomoReport::new(&linear_rho, linear.min_eigenvalue, &target, true, None).provenance()?;
    let opts_mle = MleOptions::default();
    let mle = mle_reconstruct(&data, &set, &opts_mle).provenance()?;
    let mc = match t.mc_samples {
        0 => None,
        n => Some(monte_carlo_errors(&data, &set, &target, n, seed, &opts_mle).provenance()?),
    };
    let mle_report =
        TomoReport::new(&mle.rho, mle.rho.min_eigenvalue(), &target, mle.converged, mc.as_ref()).provenance()?;
    Ok(vec![
        Artifact::new("counts.csv", raw.to_csv()),
        table("tomo_linear", opts.format, &[linear_report])?,
        table("tomo_mle", opts.format, &[mle_report])?,
        Artifact::new("density_linear.csv", linear_rho.to_csv()),
        Artifact::new("density_mle.csv", mle.rho.to_csv()),
    ])
}

fn budget(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<Artifact>> {
    let chain = budget_chain(cfg.budget.as_ref())?;
    budget_artifacts(&chain, opts.format)
}

pub fn budget_artifacts(chain: &EfficiencyChain, format: Format) -> Result<Vec<Artifact>> {
    let report = chain.report().provenance()?;
    Ok(vec![match format {
        Format::Json => {
            let out = BudgetOutput { report, inputs: serde_json::to_value(chain)? };
            Artifact::new("budget.json", serde_json::to_string_pretty(&out)? + "\n")
        }
        Format::Csv => {
            let mut csv = String::from("quantity,value\n");
            let v = serde_json::to_value(report)?;
            for (k, x) in v.as_object().expect("struct") {
                if !x.is_null() {
                    csv.push_str(&format!("{k},{x}\n"));
                }
            }
            Artifact::new("budget.csv", csv)
        }
    }])
}

pub fn reference_artifact(report: &ReferenceReport, format: Format) -> Result<Artifact> {
    match format {
        Format::Json => Ok(Artifact::new("reference.json", serde_json::to_string_pretty(report)? + "\n")),
        Format::Csv => table("reference", format, &report.checks),
    }
}

/// Rejects configs whose stochastic parts cannot run reproducibly.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.experiment == crate::config::Experiment::Tomo {
        if let Some(t) = &cfg.tomo {
            if t.mc_samples != 0 && t.mc_samples < 50 {
                bail!("tomo.mc_samples must be 0 or at least 50");
            }
        }
    }
    Ok(())
}
