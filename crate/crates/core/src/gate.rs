//! Post-selected entangling gate and CHSH analysis.
//!
//! Logical index convention: the port-c photon is the first qubit, so the
//! basis vector `|ij>` sits at index `2i + j`.

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4, Vector3};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::density::{kron2, paulis, DensityMatrix};
use crate::error::{Error, Result};
use crate::fock2::{bs_scatter, pattern_probabilities};
use crate::modes::{LogicalQubitMap, SingleKet};
use crate::scalar::phase;

/// OAM reference-phase angle applied with the mirror relabelling of port d.
pub const D_FRAME_PHASE: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutput {
    /// Normalized logical two-qubit state.
    pub state: [C; 4],
    pub rho: DensityMatrix,
    /// Coincidence probability `p_cd`.
    pub success_prob: f64,
    /// Fraction of the coincidence weight outside the logical span.
    pub leakage: f64,
}

/// Interferes the inputs, keeps coincidences and maps both photons to
/// logical qubits. With `relabel_d` the port-d photon is read in the
/// reflected frame (mirror plus OAM reference phase `D_FRAME_PHASE`).
pub fn entangling_gate(
    input_a: &SingleKet<f64>,
    input_b: &SingleKet<f64>,
    map: &LogicalQubitMap,
    relabel_d: bool,
) -> Result<GateOutput> {
    entangling_gate_in_frame(input_a, input_b, map, relabel_d.then_some(D_FRAME_PHASE))
}

/// As [`entangling_gate`], with an explicit d-frame phase (`None`: raw frame).
pub fn entangling_gate_in_frame(
    input_a: &SingleKet<f64>,
    input_b: &SingleKet<f64>,
    map: &LogicalQubitMap,
    d_frame: Option<f64>,
) -> Result<GateOutput> {
    let out = bs_scatter(input_a, input_b)?;
    let p_cd = pattern_probabilities(&out).p_cd;
    if p_cd < 1e-12 {
        return Err(Error::EmptyPostSelection);
    }
    let mut psi = [C::new(0.0, 0.0); 4];
    for ((mc, md), amp) in out.coincidence_amplitudes() {
        let (md, amp) = match d_frame {
            Some(beta) => {
                let m = md.mirrored();
                (m, amp * phase(-f64::from(m.oam) * beta))
            }
            None => (md, amp),
        };
        let bit = |m| (0..2).find(|&b| map.basis(b) == m);
        if let (Some(i), Some(j)) = (bit(mc), bit(md)) {
            psi[2 * i + j] += amp;
        }
    }
    let kept: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if kept < 1e-24 {
        return Err(Error::DegenerateProjection);
    }
    let n = kept.sqrt();
    let state = psi.map(|z| z / n);
    Ok(GateOutput {
        state,
        rho: DensityMatrix::from_pure(&state)?,
        success_prob: p_cd,
        leakage: (1.0 - kept / p_cd).max(0.0),
    })
}

pub fn werner(rho: &DensityMatrix, v: f64) -> Result<DensityMatrix> {
    rho.werner(v)
}

/// Four Bloch-sphere measurement directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSetting {
    pub a: Vector3<f64>,
    pub a_prime: Vector3<f64>,
    pub b: Vector3<f64>,
    pub b_prime: Vector3<f64>,
}

impl ChshSetting {
    pub fn new(a: Vector3<f64>, a_prime: Vector3<f64>, b: Vector3<f64>, b_prime: Vector3<f64>) -> Result<Self> {
        for (name, v) in [("a", a), ("a'", a_prime), ("b", b), ("b'", b_prime)] {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Parameter(format!("direction {name} is not a unit vector")));
            }
        }
        Ok(ChshSetting { a, a_prime, b, b_prime })
    }

    /// From (polar, azimuth) angles in degrees.
    pub fn from_angles_deg(angles: [[f64; 2]; 4]) -> Result<Self> {
        let [a, ap, b, bp] = angles.map(|[t, p]| bloch(t.to_radians(), p.to_radians()));
        Self::new(a, ap, b, bp)
    }

    /// (polar, azimuth) angles in degrees of a, a', b, b'.
    pub fn angles_deg(&self) -> [[f64; 2]; 4] {
        [self.a, self.a_prime, self.b, self.b_prime].map(|v| {
            let t = v.z.clamp(-1.0, 1.0).acos().to_degrees();
            let p = if v.x.abs() < 1e-15 && v.y.abs() < 1e-15 { 0.0 } else { v.y.atan2(v.x).to_degrees() };
            [t, p]
        })
    }
}

pub fn bloch(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

fn four(rho: &DensityMatrix) -> Result<Matrix4<C>> {
    rho.to_matrix4()
}

/// `T_ij = Tr(rho sigma_i (x) sigma_j)` for i, j in {x, y, z}.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<Matrix3<f64>> {
    let m = four(rho)?;
    let s = paulis();
    Ok(Matrix3::from_fn(|i, j| (m * kron2(&s[i + 1], &s[j + 1])).trace().re))
}

fn spin(n: &Vector3<f64>) -> Matrix2<C> {
    let s = paulis();
    s[1] * C::new(n.x, 0.0) + s[2] * C::new(n.y, 0.0) + s[3] * C::new(n.z, 0.0)
}

/// Correlation of the two ±1-valued spin measurements along `a` and `b`.
pub fn correlation(rho: &DensityMatrix, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64> {
    Ok((four(rho)? * kron2(&spin(a), &spin(b))).trace().re)
}

/// `S = E(a,b) - E(a,b') + E(a',b) + E(a',b')`.
pub fn chsh_value(rho: &DensityMatrix, s: &ChshSetting) -> Result<f64> {
    Ok(correlation(rho, &s.a, &s.b)? - correlation(rho, &s.a, &s.b_prime)?
        + correlation(rho, &s.a_prime, &s.b)?
        + correlation(rho, &s.a_prime, &s.b_prime)?)
}

/// Maximal CHSH value `2 sqrt(t1^2 + t2^2)` from the two largest singular
/// values of the correlation matrix, with a setting that attains it.
pub fn chsh_optimal(rho: &DensityMatrix) -> Result<(f64, ChshSetting)> {
    let t = correlation_matrix(rho)?;
    let svd = t.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let (t1, t2) = (svd.singular_values[idx[0]], svd.singular_values[idx[1]]);
    let u1: Vector3<f64> = u.column(idx[0]).into_owned();
    let u2: Vector3<f64> = u.column(idx[1]).into_owned();
    let v1: Vector3<f64> = vt.row(idx[0]).transpose();
    let v2: Vector3<f64> = vt.row(idx[1]).transpose();
    let r = (t1 * t1 + t2 * t2).sqrt();
    let (c, s) = if r < 1e-15 { (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2) } else { (t1 / r, t2 / r) };
    let setting = ChshSetting::new(u2, u1, c * v1 + s * v2, c * v1 - s * v2)?;
    Ok((2.0 * r, setting))
}

/// Textbook-optimal setting for the triplet in the x-z plane:
/// a = z, a' = x, b = (x - z)/sqrt2, b' = (x + z)/sqrt2.
pub fn triplet_setting() -> ChshSetting {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    ChshSetting::new(bloch(0.0, 0.0), bloch(FRAC_PI_2, 0.0), bloch(3.0 * FRAC_PI_4, 0.0), bloch(FRAC_PI_4, 0.0))
        .expect("unit vectors")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_std")]
    pub s_std: f64,
    pub angles_deg: [[f64; 2]; 4],
    pub corrected: bool,
}

/// Embeds a 4x4 matrix into a general density matrix.
pub fn density_from_matrix4(m: &Matrix4<C>) -> Result<DensityMatrix> {
    DensityMatrix::new(DMatrix::from_fn(4, 4, |r, c| m[(r, c)]))
}
