//! Two-qubit state tomography: measurement sets built from analysis chains,
//! count simulation, reconstruction and Monte-Carlo error bars.
//!
//! Intra-particle scheme: one photon on span{|L,-2>, |L,2>, |R,-2>, |R,2>},
//! with the polarization qubit first (L = 0, R = 1) and the OAM qubit second
//! (-2 = 0, +2 = 1). Inter-particle scheme: the port-c and port-d photons,
//! each on {|L,-2> = 0, |R,2> = 1}.

mod counts;
mod errors;
mod reconstruct;

pub use counts::{
    accidental_rate, simulate_counts, subtract_background, BackgroundMode, CountData, CountRecord,
    SimulationParams,
};
pub use crate::sampling::Sampling;
pub use errors::{monte_carlo_errors, MonteCarloSummary};
pub use reconstruct::{linear_inversion, mle_reconstruct, LinearEstimate, MleOptions, MleResult};

use nalgebra::Matrix4;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::elements::{analysis_projector, analyzer_angles};
use crate::error::{Error, Result};
use crate::gate::chsh_optimal;
use crate::modes::{LinearPol, Mode, Pol, Truncation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Eigenvector for eigenvalue `+1` (`plus`) or `-1`.
    pub fn eigenvector(self, plus: bool) -> [C; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if plus { 1.0 } else { -1.0 };
        match self {
            Pauli::X => [C::new(s, 0.0), C::new(sign * s, 0.0)],
            Pauli::Y => [C::new(s, 0.0), C::new(0.0, sign * s)],
            Pauli::Z if plus => [C::new(1.0, 0.0), C::new(0.0, 0.0)],
            Pauli::Z => [C::new(0.0, 0.0), C::new(1.0, 0.0)],
        }
    }
}

/// One analyzer setting with its effective projector on the logical space.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub label: String,
    /// Index of the product basis (0..9) the outcome belongs to.
    pub group: usize,
    pub projector: Matrix4<C>,
    /// Transmission of the physical chain, divided out of `projector`.
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    scheme: Scheme,
    settings: Vec<Setting>,
}

fn target_circular_pol(v: [C; 2]) -> [C; 2] {
    // polarization qubit L = 0, R = 1; analyzer works on (R, L) components
    [v[1], v[0]]
}

/// Projector realized by an analysis chain on the given logical basis modes.
fn chain_operator(trunc: Truncation, pol: Option<[C; 2]>, oam: [C; 2], basis: &[Mode]) -> Result<Vec<C>> {
    let (qo, ho) = analyzer_angles(oam);
    let oam_chain = analysis_projector(trunc, qo, ho, LinearPol::H, true);
    let chain = match pol {
        Some(p) => {
            let (qp, hp) = analyzer_angles(target_circular_pol(p));
            analysis_projector(trunc, qp, hp, LinearPol::H, false).followed_by(oam_chain)
        }
        None => oam_chain,
    };
    chain.effective_operator(basis)
}

fn kron(a: &[C], b: &[C]) -> Matrix4<C> {
    Matrix4::from_fn(|r, c| a[(r / 2) * 2 + c / 2] * b[(r % 2) * 2 + c % 2])
}

pub fn build_measurements(scheme: Scheme) -> Result<MeasurementSet> {
    let trunc = Truncation::default();
    let l = Mode::new(Pol::L, -2);
    let r = Mode::new(Pol::R, 2);
    let mut settings = Vec::with_capacity(36);
    for (g, (b1, b2)) in Pauli::ALL.iter().flat_map(|&x| Pauli::ALL.iter().map(move |&y| (x, y))).enumerate() {
        let mut group = Vec::with_capacity(4);
        for s1 in [true, false] {
            for s2 in [true, false] {
                let (v1, v2) = (b1.eigenvector(s1), b2.eigenvector(s2));
                let op = match scheme {
                    Scheme::Intra => {
                        let basis = [Mode::new(Pol::L, -2), Mode::new(Pol::L, 2), Mode::new(Pol::R, -2), Mode::new(Pol::R, 2)];
                        let k = chain_operator(trunc, Some(v1), v2, &basis)?;
                        Matrix4::from_row_slice(&k)
                    }
                    Scheme::Inter => {
                        let k1 = chain_operator(trunc, None, v1, &[l, r])?;
                        let k2 = chain_operator(trunc, None, v2, &[l, r])?;
                        kron(&k1, &k2)
                    }
                };
                let sign = |p: bool| if p { '+' } else { '-' };
                let label = format!("{}{}{}{}", b1.letter(), sign(s1), b2.letter(), sign(s2));
                group.push((label, op));
            }
        }
        let total: Matrix4<C> = group.iter().map(|(_, op)| op).sum();
        let eta = total.trace().re / 4.0;
        if (total - Matrix4::identity() * C::new(eta, 0.0)).norm() > 1e-9 * eta.max(1.0) {
            return Err(Error::Incomplete { rank: 0, needed: 16 });
        }
        for (label, op) in group {
            settings.push(Setting { label, group: g, projector: op / C::new(eta, 0.0), efficiency: eta });
        }
    }
    Ok(MeasurementSet { scheme, settings })
}

impl MeasurementSet {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn settings(&self) -> &[Setting] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn groups(&self) -> usize {
        self.settings.iter().map(|s| s.group + 1).max().unwrap_or(0)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.settings.iter().position(|s| s.label == label)
    }

    /// Born-rule probabilities `Tr(rho Pi_i)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        let m = rho.to_matrix4()?;
        Ok(self.settings.iter().map(|s| (m * s.projector).trace().re).collect())
    }
}

/// Reconstruction report in the JSON schema of the tomography outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomoReport {
    pub fidelity: f64,
    pub fidelity_std: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_std")]
    pub s_std: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub converged: bool,
}

impl TomoReport {
    /// Point estimates of `rho` against `target`, with optional Monte-Carlo spreads.
    pub fn new(
        rho: &DensityMatrix,
        raw_min_eigenvalue: f64,
        target: &DensityMatrix,
        converged: bool,
        mc: Option<&MonteCarloSummary>,
    ) -> Result<Self> {
        Ok(TomoReport {
            fidelity: rho.fidelity(target)?,
            fidelity_std: mc.map_or(0.0, |m| m.f_std),
            s: chsh_optimal(rho)?.0,
            s_std: mc.map_or(0.0, |m| m.s_std),
            purity: rho.purity(),
            min_eigenvalue: raw_min_eigenvalue,
            converged,
        })
    }
}
