//! Density matrices on small Hilbert spaces (f64, nalgebra).

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

const TOL: f64 = 1e-10;
const PURE_TOL: f64 = 1e-12;
const CLIP: f64 = 1e-14;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C>,
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    let h = (m + m.adjoint()) * C::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (values, vectors)
}

/// `f` applied to the spectrum of a Hermitian matrix.
fn hermitian_fn(m: &DMatrix<C>, f: impl Fn(f64) -> f64) -> DMatrix<C> {
    let (vals, vecs) = hermitian_eigen(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| C::new(f(v), 0.0))));
    &vecs * d * vecs.adjoint()
}

impl DensityMatrix {
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotDensityMatrix(format!("shape {}x{}", m.nrows(), m.ncols())));
        }
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > TOL {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - C::new(1.0, 0.0)).norm() > TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let min = hermitian_eigen(&m).0[0];
        if min < -TOL {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix { m })
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn from_pure(psi: &[C]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let n = v.norm();
        if n < PURE_TOL {
            return Err(Error::ZeroVector);
        }
        let v = v / C::new(n, 0.0);
        Ok(DensityMatrix { m: &v * v.adjoint() })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { m: DMatrix::identity(dim, dim) * C::new(1.0 / dim as f64, 0.0) }
    }

    /// Nearest physical state by clipping negative eigenvalues and
    /// renormalizing.
    pub fn project_physical(m: &DMatrix<C>) -> Result<Self> {
        let clipped = hermitian_fn(m, |v| v.max(0.0));
        let tr = clipped.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotDensityMatrix("no positive spectrum".into()));
        }
        Ok(DensityMatrix { m: clipped / C::new(tr, 0.0) })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C>) -> Self {
        DensityMatrix { m }
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.m).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Dominant eigenvector.
    fn principal_vector(&self) -> DVector<C> {
        let (_, vecs) = hermitian_eigen(&self.m);
        vecs.column(self.dim() - 1).into_owned()
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`; reduces
    /// to `Tr(rho sigma)` when either state is pure.
    pub fn fidelity(&self, target: &DensityMatrix) -> Result<f64> {
        if self.dim() != target.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: target.dim() });
        }
        if self.purity() > 1.0 - PURE_TOL || target.purity() > 1.0 - PURE_TOL {
            return Ok((&self.m * &target.m).trace().re.clamp(0.0, 1.0));
        }
        // trace norm of sqrt(rho) sqrt(sigma), with eigenvalue noise clipped
        let root = |m: &DMatrix<C>| hermitian_fn(m, |v| if v > CLIP { v.sqrt() } else { 0.0 });
        let tr: f64 = (root(&self.m) * root(&target.m)).singular_values().iter().sum();
        Ok((tr * tr).clamp(0.0, 1.0))
    }

    /// Wootters concurrence of a two-qubit state.
    pub fn concurrence(&self) -> Result<f64> {
        if self.dim() != 4 {
            return Err(Error::Dimension { expected: 4, got: self.dim() });
        }
        let yy = sigma_y_y();
        if self.purity() > 1.0 - PURE_TOL {
            let psi = self.principal_vector();
            let flipped = &yy * psi.map(|z| z.conj());
            return Ok(psi.dotc(&flipped).norm());
        }
        let tilde = &yy * self.m.map(|z| z.conj()) * &yy;
        let s = hermitian_fn(&self.m, |v| if v > CLIP { v.sqrt() } else { 0.0 });
        let r = &s * tilde * &s;
        let mut l: Vec<f64> = hermitian_eigen(&r).0.iter().map(|v| v.max(0.0).sqrt()).collect();
        l.reverse();
        Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
    }

    /// `v rho + (1 - v) I/d`.
    pub fn werner(&self, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("Werner weight must lie in [0, 1], got {v}")));
        }
        let d = self.dim();
        let mixed = DMatrix::<C>::identity(d, d) * C::new((1.0 - v) / d as f64, 0.0);
        Ok(DensityMatrix { m: &self.m * C::new(v, 0.0) + mixed })
    }

    pub fn to_matrix4(&self) -> Result<Matrix4<C>> {
        if self.dim() != 4 {
            return Err(Error::Dimension { expected: 4, got: self.dim() });
        }
        Ok(Matrix4::from_fn(|r, c| self.m[(r, c)]))
    }

    /// Row-major `re,im` lines after a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im\n");
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.m[(r, c)];
                s.push_str(&format!("{},{}\n", z.re, z.im));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut vals = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "re,im") {
                continue;
            }
            let (re, im) = line
                .split_once(',')
                .ok_or_else(|| Error::Data { line: i + 1, message: "expected 're,im'".into() })?;
            let num = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| Error::Data { line: i + 1, message: format!("not a number: '{s}'") })
            };
            vals.push(C::new(num(re)?, num(im)?));
        }
        let d = (vals.len() as f64).sqrt().round() as usize;
        if d * d != vals.len() || d == 0 {
            return Err(Error::Data { line: 0, message: format!("{} entries do not form a square matrix", vals.len()) });
        }
        DensityMatrix::new(DMatrix::from_row_slice(d, d, &vals))
    }
}

/// Pauli matrices `[I, X, Y, Z]`.
pub fn paulis() -> [Matrix2<C>; 4] {
    let o = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    [
        Matrix2::new(one, o, o, one),
        Matrix2::new(o, one, one, o),
        Matrix2::new(o, -i, i, o),
        Matrix2::new(one, o, o, -one),
    ]
}

/// Kronecker product of two 2x2 matrices.
pub fn kron2(a: &Matrix2<C>, b: &Matrix2<C>) -> Matrix4<C> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn sigma_y_y() -> DMatrix<C> {
    let y = paulis()[2];
    let k = kron2(&y, &y);
    DMatrix::from_fn(4, 4, |r, c| k[(r, c)])
}

/// Bell state `(|01> + |10>)/sqrt2`.
pub fn triplet() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C::new(0.0, 0.0);
    DensityMatrix::from_pure(&[z, C::new(s, 0.0), C::new(s, 0.0), z]).expect("nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ket(v: [f64; 4]) -> DensityMatrix {
        DensityMatrix::from_pure(&v.map(|x| C::new(x, 0.0))).unwrap()
    }

    pub(crate) fn random_density(seed_vals: &[f64], rank: usize) -> DensityMatrix {
        let g = DMatrix::from_fn(4, rank, |r, c| {
            let k = 2 * (r * rank + c);
            C::new(seed_vals[k % seed_vals.len()], seed_vals[(k + 1) % seed_vals.len()])
        });
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(m / tr).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let t = triplet();
        assert!((t.fidelity(&t).unwrap() - 1.0).abs() < 1e-15);
        assert!((ket([0.0, 1.0, 0.0, 0.0]).fidelity(&t).unwrap() - 0.5).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed(4).fidelity(&t).unwrap() - 0.25).abs() < 1e-15);
        let w = t.werner(0.5).unwrap();
        assert!((w.fidelity(&w).unwrap() - 1.0).abs() < 1e-10);
        assert!(t.fidelity(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn mixed_fidelity_matches_commuting_formula() {
        // commuting states: F = (sum_i sqrt(p_i q_i))^2
        let p: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
        let q = [0.25, 0.25, 0.4, 0.1];
        let diag = |v: [f64; 4]| {
            DensityMatrix::new(DMatrix::from_diagonal(&DVector::from_iterator(4, v.iter().map(|&x| C::new(x, 0.0)))))
                .unwrap()
        };
        let want: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2);
        assert!((diag(p).fidelity(&diag(q)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.0, 1.0), C::new(0.0, 0.0)]);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NotDensityMatrix(_))));
        let neg = DMatrix::from_row_slice(2, 2, &[C::new(1.5, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(neg.clone()).is_err());
        let p = DensityMatrix::project_physical(&neg).unwrap();
        assert!((p.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::from_pure(&[C::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn concurrence_and_purity() {
        let t = triplet();
        assert!((t.concurrence().unwrap() - 1.0).abs() < 1e-12);
        assert!(ket([0.0, 1.0, 0.0, 0.0]).concurrence().unwrap() < 1e-12);
        // Werner mixture of a Bell state: C = max(0, (3v - 1)/2)
        for v in [0.2, 0.5, 0.8, 0.95] {
            let c = t.werner(v).unwrap().concurrence().unwrap();
            assert!((c - ((3.0 * v - 1.0) / 2.0).max(0.0)).abs() < 1e-10, "{v}: {c}");
        }
        assert!((DensityMatrix::maximally_mixed(4).purity() - 0.25).abs() < 1e-15);
        assert!(t.werner(1.2).is_err());
    }

    #[test]
    fn werner_limits() {
        let t = triplet();
        assert_eq!(t.werner(1.0).unwrap(), t);
        assert!((t.werner(0.0).unwrap().matrix() - DensityMatrix::maximally_mixed(4).matrix()).norm() < 1e-15);
        // F(werner(psi, v), psi) = (1 + 3v)/4
        assert!((t.werner(0.6).unwrap().fidelity(&t).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let w = triplet().werner(0.7).unwrap();
        let back = DensityMatrix::from_csv(&w.to_csv()).unwrap();
        assert!((back.matrix() - w.matrix()).norm() < 1e-15);
        assert!(matches!(DensityMatrix::from_csv("re,im\n1,0\n0,x\n"), Err(Error::Data { line: 3, .. })));
    }

    proptest! {
        #[test]
        fn fidelity_is_symmetric_and_bounded(v in prop::collection::vec(-1.0..1.0f64, 16), w in prop::collection::vec(-1.0..1.0f64, 16)) {
            let a = random_density(&v, 2);
            let b = random_density(&w, 3);
            let f = a.fidelity(&b).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((f - b.fidelity(&a).unwrap()).abs() < 1e-8);
            prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-8);
        }

        #[test]
        fn pure_fidelity_is_overlap(v in prop::collection::vec(-1.0..1.0f64, 8), w in prop::collection::vec(-1.0..1.0f64, 8)) {
            let a: Vec<C> = v.chunks(2).map(|p| C::new(p[0], p[1])).collect();
            let b: Vec<C> = w.chunks(2).map(|p| C::new(p[0], p[1])).collect();
            prop_assume!(a.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
            prop_assume!(b.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
            let (ra, rb) = (DensityMatrix::from_pure(&a).unwrap(), DensityMatrix::from_pure(&b).unwrap());
            let va = DVector::from_column_slice(&a).normalize();
            let vb = DVector::from_column_slice(&b).normalize();
            let want = va.dotc(&vb).norm_sqr();
            prop_assert!((ra.fidelity(&rb).unwrap() - want).abs() < 1e-12);
            prop_assert!((rb.fidelity(&ra).unwrap() - want).abs() < 1e-12);
        }
    }
}
