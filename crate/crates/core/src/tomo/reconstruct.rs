use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C;

use crate::density::{hermitian_eigen, kron2, paulis, DensityMatrix};
use crate::error::{Error, Result};

use super::{CountData, MeasurementSet};

/// Least-squares estimate; Hermitian with unit trace but possibly not PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub matrix: DMatrix<C>,
    pub min_eigenvalue: f64,
}

impl LinearEstimate {
    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue >= -1e-10
    }

    /// Eigenvalue-clipped physical state.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::project_physical(&self.matrix)
    }
}

fn pauli_basis() -> Vec<Matrix4<C>> {
    let s = paulis();
    (0..16).map(|n| kron2(&s[n / 4], &s[n % 4])).collect()
}

/// Per-setting frequencies normalized within each product basis; groups
/// without counts are dropped.
fn frequencies(counts: &[f64], set: &MeasurementSet) -> Vec<Option<f64>> {
    let mut totals = vec![0.0; set.groups()];
    for (s, n) in set.settings().iter().zip(counts) {
        totals[s.group] += n;
    }
    set.settings().iter().zip(counts).map(|(s, n)| (totals[s.group] > 0.0).then(|| n / totals[s.group])).collect()
}

/// Solves `Tr(rho Pi_i) = p_i` in the Pauli expansion
/// `rho = (I + sum r_jk sigma_j sigma_k)/4` by SVD least squares.
pub fn linear_inversion(data: &CountData, set: &MeasurementSet) -> Result<LinearEstimate> {
    let counts = data.aligned_counts(set)?;
    let freqs = frequencies(&counts, set);
    let basis = pauli_basis();
    let rows: Vec<(usize, f64)> = freqs.iter().enumerate().filter_map(|(i, f)| f.map(|f| (i, f))).collect();
    let a = DMatrix::from_fn(rows.len(), 15, |r, c| {
        0.25 * (set.settings()[rows[r].0].projector * basis[c + 1]).trace().re
    });
    let b = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|&(i, f)| f - 0.25 * set.settings()[i].projector.trace().re),
    );
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax.max(1e-300)).count();
    if rows.len() < 15 || rank < 15 {
        return Err(Error::Incomplete { rank, needed: 15 });
    }
    let r = svd.solve(&b, 1e-12 * smax).map_err(|e| Error::Estimation(e.to_string()))?;
    let mut m = basis[0] * C::new(0.25, 0.0);
    for (c, &rc) in r.iter().enumerate() {
        m += basis[c + 1] * C::new(0.25 * rc, 0.0);
    }
    let matrix = DMatrix::from_fn(4, 4, |i, j| m[(i, j)]);
    let min_eigenvalue = hermitian_eigen(&matrix).0[0];
    Ok(LinearEstimate { matrix, min_eigenvalue })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Stop once the per-count log-likelihood gain falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub dilution: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { tol: 1e-10, max_iter: 10_000, dilution: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Per-count log-likelihood after each accepted step, starting with the
    /// maximally mixed seed.
    pub log_likelihood: Vec<f64>,
}

fn log_likelihood(rho: &Matrix4<C>, data: &[(f64, Matrix4<C>)]) -> f64 {
    data.iter().map(|(f, p)| f * (rho * p).trace().re.max(1e-300).ln()).sum()
}

fn normalized(m: Matrix4<C>) -> Matrix4<C> {
    let h = (m + m.adjoint()) * C::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C::new(tr, 0.0)
}

/// Diluted `R rho R` maximum likelihood, started from the maximally mixed
/// state. The dilution is halved whenever a step would lower the likelihood.
pub fn mle_reconstruct(data: &CountData, set: &MeasurementSet, opts: &MleOptions) -> Result<MleResult> {
    let counts = data.aligned_counts(set)?;
    mle_from_counts(&counts, set, opts)
}

pub(crate) fn mle_from_counts(counts: &[f64], set: &MeasurementSet, opts: &MleOptions) -> Result<MleResult> {
    if counts.iter().any(|&n| n < 0.0 || !n.is_finite()) {
        return Err(Error::Parameter("counts must be finite and nonnegative".into()));
    }
    let total: f64 = counts.iter().sum();
    let mixed = Matrix4::<C>::identity() * C::new(0.25, 0.0);
    let to_density = |m: &Matrix4<C>| DensityMatrix::from_matrix_unchecked(DMatrix::from_fn(4, 4, |i, j| m[(i, j)]));
    if total <= 0.0 {
        return Ok(MleResult { rho: to_density(&mixed), converged: false, iterations: 0, log_likelihood: vec![] });
    }
    let data: Vec<(f64, Matrix4<C>)> = counts
        .iter()
        .zip(set.settings())
        .filter(|(&n, _)| n > 0.0)
        .map(|(&n, s)| (n / total, s.projector))
        .collect();
    let id = Matrix4::<C>::identity();
    let mut rho = mixed;
    let mut ll = log_likelihood(&rho, &data);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let r: Matrix4<C> = data.iter().map(|(f, p)| p * C::new(f / (rho * p).trace().re.max(1e-300), 0.0)).sum();
        let mut eps = opts.dilution;
        let accepted = loop {
            let a = id + r * C::new(eps, 0.0);
            let cand = normalized(a * rho * a.adjoint());
            let ll_c = log_likelihood(&cand, &data);
            if ll_c >= ll {
                break Some((cand, ll_c));
            }
            eps /= 2.0;
            if eps < 1e-12 {
                break None;
            }
        };
        match accepted {
            Some((cand, ll_c)) => {
                let gain = ll_c - ll;
                rho = cand;
                ll = ll_c;
                trace.push(ll);
                if gain < opts.tol {
                    converged = true;
                    break;
                }
            }
            None => {
                converged = true;
                break;
            }
        }
    }
    Ok(MleResult { rho: to_density(&rho), converged, iterations, log_likelihood: trace })
}
