//! Single-photon optical elements acting on the truncated hybrid mode space.
//!
//! Waveplates are written as Jones matrices in the linear (H, V) basis and
//! conjugated into the circular canonical basis. `hwp(0)` is real in both.
//! The q-plate of charge `q` maps
//!
//! ```text
//! |R,m> -> exp(+i 2q a0) |L,m-2q>
//! |L,m> -> exp(-i 2q a0) |R,m+2q>
//! ```
//!
//! and the mirror flips both helicities, `|R,m> <-> |L,-m>`, without phase, so
//! that `|H>` and `|V>` are eigenstates with eigenvalues +1 and -1.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::modes::{norm_sqr, prune, Amplitudes, LinearPol, Mode, Pol, SingleKet, Truncation};
use crate::scalar::{c, phase, Scalar};

type Jones<T> = [[Complex<T>; 2]; 2];

/// Linear map on the truncated mode space, stored column by column.
///
/// Input modes without a column are outside the element's valid domain
/// (their image would leave the truncation).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementUnitary<T: Scalar> {
    trunc: Truncation,
    columns: BTreeMap<Mode, Vec<(Mode, Complex<T>)>>,
}

impl<T: Scalar> ElementUnitary<T> {
    pub fn identity(trunc: Truncation) -> Self {
        let one = Complex::new(T::one(), T::zero());
        let columns = trunc.modes().map(|m| (m, vec![(m, one)])).collect();
        ElementUnitary { trunc, columns }
    }

    /// Polarization-only element from a circular-basis Jones matrix
    /// (rows/columns ordered R, L); identity on OAM.
    pub fn polarization(trunc: Truncation, jones: Jones<T>) -> Self {
        let tol = T::prune_tol();
        let columns = trunc
            .modes()
            .map(|m| {
                let j = if m.pol == Pol::R { 0 } else { 1 };
                let col = [(Pol::R, jones[0][j]), (Pol::L, jones[1][j])]
                    .into_iter()
                    .filter(|(_, a)| a.norm() >= tol)
                    .map(|(p, a)| (Mode::new(p, m.oam), a))
                    .collect();
                (m, col)
            })
            .collect();
        ElementUnitary { trunc, columns }
    }

    /// Polarization element from a Jones matrix in the (H, V) basis.
    pub fn from_linear_jones(trunc: Truncation, jones: Jones<T>) -> Self {
        Self::polarization(trunc, linear_to_circular(jones))
    }

    pub fn hwp(trunc: Truncation, theta: T) -> Self {
        Self::from_linear_jones(trunc, jones_hwp(theta))
    }

    pub fn qwp(trunc: Truncation, theta: T) -> Self {
        Self::from_linear_jones(trunc, jones_qwp(theta))
    }

    pub fn qplate(trunc: Truncation, q: QPlateCharge, alpha0: T) -> Self {
        let shift = q.twice();
        let ph = phase(T::lit(f64::from(shift)) * alpha0);
        let columns = trunc
            .modes()
            .filter_map(|m| {
                let (out, amp) = match m.pol {
                    Pol::R => (Mode::new(Pol::L, m.oam - shift), ph),
                    Pol::L => (Mode::new(Pol::R, m.oam + shift), ph.conj()),
                };
                trunc.contains(out).then(|| (m, vec![(out, amp)]))
            })
            .collect();
        ElementUnitary { trunc, columns }
    }

    pub fn mirror(trunc: Truncation) -> Self {
        let one = Complex::new(T::one(), T::zero());
        let columns = trunc.modes().map(|m| (m, vec![(m.mirrored(), one)])).collect();
        ElementUnitary { trunc, columns }
    }

    /// OAM reference phase `|P,m> -> exp(-i m beta) |P,m>`.
    pub fn oam_phase(trunc: Truncation, beta: T) -> Self {
        let columns = trunc
            .modes()
            .map(|m| (m, vec![(m, phase(-T::lit(f64::from(m.oam)) * beta))]))
            .collect();
        ElementUnitary { trunc, columns }
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Matrix element `<out|U|input>`.
    pub fn entry(&self, out: Mode, input: Mode) -> Complex<T> {
        self.columns
            .get(&input)
            .and_then(|col| col.iter().find(|(m, _)| *m == out).map(|(_, a)| *a))
            .unwrap_or_default()
    }

    /// Image of a basis mode, or `None` outside the valid domain.
    pub fn column(&self, input: Mode) -> Option<&[(Mode, Complex<T>)]> {
        self.columns.get(&input).map(Vec::as_slice)
    }

    pub fn domain(&self) -> impl Iterator<Item = Mode> + '_ {
        self.columns.keys().copied()
    }

    pub(crate) fn apply_amplitudes(&self, amps: &Amplitudes<T>) -> Result<Amplitudes<T>> {
        let mut out = Amplitudes::new();
        for (&m, &a) in amps {
            let col = self
                .columns
                .get(&m)
                .ok_or(Error::Truncation { label: m.to_string(), m_max: self.trunc.m_max() })?;
            for &(o, u) in col {
                let e = out.entry(o).or_insert_with(Complex::default);
                *e = *e + u * a;
            }
        }
        prune(&mut out);
        Ok(out)
    }

    /// Applies the element. Support whose image would leave the truncation is
    /// an error; amplitude is never dropped.
    pub fn apply(&self, ket: &SingleKet<T>) -> Result<SingleKet<T>> {
        if ket.truncation() != self.trunc {
            return Err(Error::TruncationMismatch(ket.truncation().m_max(), self.trunc.m_max()));
        }
        let out = self.apply_amplitudes(ket.amplitudes())?;
        SingleKet::from_amplitudes(self.trunc, out)
    }

    /// Composition in beam order: `self` acts first, then `next`.
    pub fn then(&self, next: &ElementUnitary<T>) -> ElementUnitary<T> {
        let columns = self
            .columns
            .iter()
            .filter_map(|(&m, col)| {
                let amps: Amplitudes<T> = col.iter().copied().collect();
                next.apply_amplitudes(&amps).ok().map(|o| (m, o.into_iter().collect()))
            })
            .collect();
        ElementUnitary { trunc: self.trunc, columns }
    }

    /// Columns orthonormal within `tol` on the valid domain.
    pub fn is_unitary(&self, tol: T) -> bool {
        let cols: Vec<Amplitudes<T>> =
            self.columns.values().map(|c| c.iter().copied().collect()).collect();
        for (i, a) in cols.iter().enumerate() {
            for b in &cols[i..] {
                let ip = a
                    .iter()
                    .filter_map(|(m, x)| b.get(m).map(|y| x.conj() * y))
                    .fold(Complex::<T>::default(), |s, v| s + v);
                let want = if std::ptr::eq(a, b) { T::one() } else { T::zero() };
                if (ip - Complex::new(want, T::zero())).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Operator equality up to one global phase, on a common domain.
    pub fn approx_eq_up_to_phase(&self, other: &ElementUnitary<T>, tol: T) -> bool {
        if self.columns.keys().ne(other.columns.keys()) {
            return false;
        }
        let mut global: Option<Complex<T>> = None;
        for (&input, col) in &self.columns {
            for out in self.trunc.modes() {
                let a = self.entry(out, input);
                let b = other.entry(out, input);
                if a.norm() < tol && b.norm() < tol {
                    continue;
                }
                if b.norm() < tol || a.norm() < tol {
                    return false;
                }
                let r = a / b;
                match global {
                    None => global = Some(r),
                    Some(g) if (g - r).norm() > tol => return false,
                    _ => {}
                }
            }
            let _ = col;
        }
        global.map_or(true, |g| (g.norm() - T::one()).abs() < tol)
    }
}

/// q-plate topological charge; `2q` must be an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QPlateCharge(i32);

impl QPlateCharge {
    pub fn new(q: f64) -> Result<Self> {
        let twice = 2.0 * q;
        if (twice - twice.round()).abs() > 1e-9 || twice.round() == 0.0 {
            return Err(Error::Parameter(format!("q-plate charge must be a nonzero half-integer, got {q}")));
        }
        Ok(QPlateCharge(twice.round() as i32))
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

pub(crate) fn jones_hwp<T: Scalar>(theta: T) -> Jones<T> {
    let two = theta + theta;
    let (s, c2) = (two.sin(), two.cos());
    let z = T::zero();
    [[Complex::new(c2, z), Complex::new(s, z)], [Complex::new(s, z), Complex::new(-c2, z)]]
}

/// Quarter-wave retarder `R(-t) diag(1, i) R(t)`.
pub(crate) fn jones_qwp<T: Scalar>(theta: T) -> Jones<T> {
    let (s, co) = (theta.sin(), theta.cos());
    let i = Complex::new(T::zero(), T::one());
    let re = |x: T| Complex::new(x, T::zero());
    let sc = re(s * co);
    [
        [re(co * co) + i * re(s * s), sc - i * sc],
        [sc - i * sc, re(s * s) + i * re(co * co)],
    ]
}

fn matmul<T: Scalar>(a: &Jones<T>, b: &Jones<T>) -> Jones<T> {
    let mut out = [[Complex::default(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `T J T^dagger` with `T` taking (H, V) coordinates to (R, L) coordinates.
fn linear_to_circular<T: Scalar>(j: Jones<T>) -> Jones<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t: Jones<T> = [[c(s, 0.0), c(0.0, -s)], [c(s, 0.0), c(0.0, s)]];
    let t_dag: Jones<T> = [[c(s, 0.0), c(s, 0.0)], [c(0.0, s), c(0.0, -s)]];
    matmul(&matmul(&t, &j), &t_dag)
}

fn apply2<T: Scalar>(j: &Jones<T>, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
    [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]]
}

/// Circular components `(c_R, c_L)` to linear `(c_H, c_V)`.
fn circular_to_linear_vec<T: Scalar>(v: [Complex<T>; 2]) -> [Complex<T>; 2] {
    let s = T::FRAC_1_SQRT_2();
    let i = Complex::new(T::zero(), T::one());
    [(v[0] + v[1]) * s, i * (v[0] - v[1]) * s]
}

/// Polarization azimuth and ellipticity angle of a state in (H, V) coordinates.
fn ellipse<T: Scalar>(lin: [Complex<T>; 2]) -> (T, T) {
    let n = lin[0].norm_sqr() + lin[1].norm_sqr();
    let s1 = (lin[0].norm_sqr() - lin[1].norm_sqr()) / n;
    let cross = lin[0].conj() * lin[1];
    let two = T::lit(2.0);
    let s2 = two * cross.re / n;
    let s3 = (two * cross.im / n).max(-T::one()).min(T::one());
    (s2.atan2(s1) / two, s3.asin() / two)
}

fn overlap<T: Scalar>(a: [Complex<T>; 2], b: [Complex<T>; 2]) -> T {
    let ip = a[0].conj() * b[0] + a[1].conj() * b[1];
    ip.norm_sqr() / ((a[0].norm_sqr() + a[1].norm_sqr()) * (b[0].norm_sqr() + b[1].norm_sqr()))
}

/// Waveplate angles `(qwp, hwp)` such that HWP(hwp) QWP(qwp) |H> equals the
/// polarization state with circular components `target` up to global phase.
pub fn preparation_angles<T: Scalar>(target: [Complex<T>; 2]) -> (T, T) {
    let lin = circular_to_linear_vec(target);
    let (psi, chi) = ellipse(lin);
    let h_in = [Complex::new(T::one(), T::zero()), Complex::default()];
    let two = T::lit(2.0);
    let mut best = (T::zero(), T::zero(), -T::one());
    for q in [chi, -chi] {
        for h in [(psi + q) / two, (psi - q) / two] {
            let out = apply2(&matmul(&jones_hwp(h), &jones_qwp(q)), h_in);
            let f = overlap(out, lin);
            if f > best.2 {
                best = (q, h, f);
            }
        }
    }
    (best.0, best.1)
}

/// Analyzer angles `(qwp, hwp)` such that QWP then HWP then a PBS
/// transmitting H projects onto `target` (circular components).
pub fn analyzer_angles<T: Scalar>(target: [Complex<T>; 2]) -> (T, T) {
    let lin = circular_to_linear_vec(target);
    let (psi, chi) = ellipse(lin);
    let h_out = [Complex::new(T::one(), T::zero()), Complex::default()];
    let two = T::lit(2.0);
    let mut best = (T::zero(), T::zero(), -T::one());
    for q in [psi, psi + T::FRAC_PI_2()] {
        for phi in [q + chi, q - chi, q + chi + T::FRAC_PI_2(), q - chi + T::FRAC_PI_2()] {
            let h = phi / two;
            let out = apply2(&matmul(&jones_hwp(h), &jones_qwp(q)), lin);
            let f = overlap(out, h_out);
            if f > best.2 {
                best = (q, h, f);
            }
        }
    }
    (best.0, best.1)
}

/// Element with the default truncation.
pub fn hwp<T: Scalar>(theta: T) -> ElementUnitary<T> {
    ElementUnitary::hwp(Truncation::default(), theta)
}

pub fn qwp<T: Scalar>(theta: T) -> ElementUnitary<T> {
    ElementUnitary::qwp(Truncation::default(), theta)
}

pub fn qplate<T: Scalar>(q: QPlateCharge, alpha0: T) -> ElementUnitary<T> {
    ElementUnitary::qplate(Truncation::default(), q, alpha0)
}

pub fn mirror<T: Scalar>() -> ElementUnitary<T> {
    ElementUnitary::mirror(Truncation::default())
}

/// `cos(theta/2)|L,-2> + exp(i psi) sin(theta/2)|R,2>`.
pub fn prepare_vv<T: Scalar>(theta: T, psi: T) -> SingleKet<T> {
    let half = theta / T::lit(2.0);
    let amps = [
        (Mode::new(Pol::L, -2), Complex::new(half.cos(), T::zero())),
        (Mode::new(Pol::R, 2), phase(psi) * half.sin()),
    ];
    SingleKet::new(&amps).expect("vector vortex state is in range")
}

fn h_zero<T: Scalar>() -> SingleKet<T> {
    let [r, l] = LinearPol::H.circular::<T>();
    SingleKet::new(&[(Mode::new(Pol::R, 0), r), (Mode::new(Pol::L, 0), l)]).expect("|H,0>")
}

/// QWP, HWP and a q = 1, a0 = 0 q-plate acting on the fixed input |H,0>.
pub fn prepare_from_waveplates<T: Scalar>(qwp_angle: T, hwp_angle: T) -> Result<SingleKet<T>> {
    let q = QPlateCharge::new(1.0)?;
    let chain = qwp(qwp_angle).then(&hwp(hwp_angle)).then(&qplate(q, T::zero()));
    chain.apply(&h_zero())
}

/// One stage of an analysis chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage<T: Scalar> {
    Element(ElementUnitary<T>),
    /// Polarizing beam splitter, transmitted port only.
    Filter(LinearPol),
    /// Single-mode fiber coupling: only `m = 0` survives.
    Fiber,
}

/// Measurement chain applied in beam order; its effective operator is
/// `K^dagger K` with `K` the product of the stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorChain<T: Scalar> {
    stages: Vec<Stage<T>>,
}

impl<T: Scalar> ProjectorChain<T> {
    pub fn new(elements: Vec<ElementUnitary<T>>, filter: LinearPol, fiber_coupled: bool) -> Self {
        let mut stages: Vec<Stage<T>> = elements.into_iter().map(Stage::Element).collect();
        stages.push(Stage::Filter(filter));
        if fiber_coupled {
            stages.push(Stage::Fiber);
        }
        ProjectorChain { stages }
    }

    /// Cascade: `self` first, then `next`.
    pub fn followed_by(mut self, next: ProjectorChain<T>) -> Self {
        self.stages.extend(next.stages);
        self
    }

    pub fn stages(&self) -> &[Stage<T>] {
        &self.stages
    }

    pub(crate) fn propagate(&self, amps: &Amplitudes<T>) -> Result<Amplitudes<T>> {
        let mut cur = amps.clone();
        for stage in &self.stages {
            cur = match stage {
                Stage::Element(u) => u.apply_amplitudes(&cur)?,
                Stage::Filter(lp) => filter(&cur, *lp),
                Stage::Fiber => cur.into_iter().filter(|(m, _)| m.oam == 0).collect(),
            };
        }
        Ok(cur)
    }

    /// Transmission probability of a (normalized) ket through the chain.
    pub fn probability(&self, ket: &SingleKet<T>) -> Result<T> {
        Ok(norm_sqr(&self.propagate(ket.amplitudes())?))
    }

    /// Effective measurement operator on the span of `basis`, row-major.
    pub fn effective_operator(&self, basis: &[Mode]) -> Result<Vec<Complex<T>>> {
        let one = Complex::new(T::one(), T::zero());
        let images = basis
            .iter()
            .map(|&m| self.propagate(&[(m, one)].into_iter().collect()))
            .collect::<Result<Vec<_>>>()?;
        let n = basis.len();
        let mut op = vec![Complex::default(); n * n];
        for j in 0..n {
            for k in 0..n {
                op[j * n + k] = images[j]
                    .iter()
                    .filter_map(|(m, a)| images[k].get(m).map(|b| a.conj() * b))
                    .fold(Complex::default(), |s, v| s + v);
            }
        }
        Ok(op)
    }
}

fn filter<T: Scalar>(amps: &Amplitudes<T>, lp: LinearPol) -> Amplitudes<T> {
    let [hr, hl] = lp.circular::<T>();
    let mut oams: Vec<i32> = amps.keys().map(|m| m.oam).collect();
    oams.dedup();
    let mut out = Amplitudes::new();
    for m in oams {
        let r = amps.get(&Mode::new(Pol::R, m)).copied().unwrap_or_default();
        let l = amps.get(&Mode::new(Pol::L, m)).copied().unwrap_or_default();
        let proj = hr.conj() * r + hl.conj() * l;
        out.insert(Mode::new(Pol::R, m), proj * hr);
        out.insert(Mode::new(Pol::L, m), proj * hl);
    }
    prune(&mut out);
    out
}

/// Analysis chain: optional q-plate (OAM analysis, fiber coupled), then
/// QWP, HWP and a PBS transmitting `filter`.
pub fn analysis_projector<T: Scalar>(
    trunc: Truncation,
    pol_qwp: T,
    pol_hwp: T,
    pol_filter: LinearPol,
    with_qplate: bool,
) -> ProjectorChain<T> {
    let mut elements = Vec::new();
    if with_qplate {
        let q = QPlateCharge::new(1.0).expect("q = 1");
        elements.push(ElementUnitary::qplate(trunc, q, T::zero()));
    }
    elements.push(ElementUnitary::qwp(trunc, pol_qwp));
    elements.push(ElementUnitary::hwp(trunc, pol_hwp));
    ProjectorChain::new(elements, pol_filter, with_qplate)
}

/// Parsed element from the chain grammar
/// `qwp(<deg>) | hwp(<deg>) | qplate(q=<val>, a0=<deg>) | pbs(<H|V>)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementSpec {
    Qwp { deg: f64 },
    Hwp { deg: f64 },
    QPlate { q: f64, a0_deg: f64 },
    Pbs(LinearPol),
}

impl ElementSpec {
    pub fn build<T: Scalar>(&self, trunc: Truncation) -> Result<Stage<T>> {
        Ok(match *self {
            ElementSpec::Qwp { deg } => Stage::Element(ElementUnitary::qwp(trunc, T::lit(deg.to_radians()))),
            ElementSpec::Hwp { deg } => Stage::Element(ElementUnitary::hwp(trunc, T::lit(deg.to_radians()))),
            ElementSpec::QPlate { q, a0_deg } => Stage::Element(ElementUnitary::qplate(
                trunc,
                QPlateCharge::new(q)?,
                T::lit(a0_deg.to_radians()),
            )),
            ElementSpec::Pbs(lp) => Stage::Filter(lp),
        })
    }
}

/// Parses a chain of elements in beam order, separated by whitespace, `|`
/// or `->`. Errors carry a 1-based column.
pub fn parse_chain(text: &str) -> Result<Vec<ElementSpec>> {
    let err = |column: usize, message: String| Error::Parse { column, message };
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() || ch == b'|' || ch == b',' || ch == b';' {
            i += 1;
            continue;
        }
        if text[i..].starts_with("->") {
            i += 2;
            continue;
        }
        let start = i;
        while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
            i += 1;
        }
        let name = &text[start..i];
        if name.is_empty() {
            return Err(err(start + 1, format!("unexpected character '{}'", ch as char)));
        }
        if i >= bytes.len() || bytes[i] != b'(' {
            return Err(err(i + 1, format!("expected '(' after '{name}'")));
        }
        let open = i;
        let close = text[open..]
            .find(')')
            .map(|p| open + p)
            .ok_or_else(|| err(open + 1, "unclosed '('".to_string()))?;
        let args = &text[open + 1..close];
        let arg_col = open + 2;
        let number = |s: &str, col: usize| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| err(col, format!("expected a number, got '{}'", s.trim())))
        };
        let spec = match name {
            "qwp" => ElementSpec::Qwp { deg: number(args, arg_col)? },
            "hwp" => ElementSpec::Hwp { deg: number(args, arg_col)? },
            "pbs" => match args.trim() {
                "H" => ElementSpec::Pbs(LinearPol::H),
                "V" => ElementSpec::Pbs(LinearPol::V),
                other => return Err(err(arg_col, format!("pbs filter must be H or V, got '{other}'"))),
            },
            "qplate" => {
                let mut q = None;
                let mut a0 = None;
                let mut offset = 0;
                for part in args.split(',') {
                    let col = arg_col + offset;
                    offset += part.len() + 1;
                    let (k, v) = part
                        .split_once('=')
                        .ok_or_else(|| err(col, "expected key=value".to_string()))?;
                    match k.trim() {
                        "q" => q = Some(number(v, col + k.len() + 1)?),
                        "a0" => a0 = Some(number(v, col + k.len() + 1)?),
                        other => return Err(err(col, format!("unknown qplate key '{other}'"))),
                    }
                }
                let q = q.ok_or_else(|| err(arg_col, "qplate requires q=<val>".to_string()))?;
                QPlateCharge::new(q).map_err(|e| err(arg_col, e.to_string()))?;
                ElementSpec::QPlate { q, a0_deg: a0.unwrap_or(0.0) }
            }
            other => return Err(err(start + 1, format!("unknown element '{other}'"))),
        };
        out.push(spec);
        i = close + 1;
    }
    if out.is_empty() {
        return Err(err(1, "empty element chain".to_string()));
    }
    Ok(out)
}

/// Applies a parsed chain to |H,0>. PBS stages project and renormalize.
pub fn prepare_from_chain<T: Scalar>(specs: &[ElementSpec]) -> Result<SingleKet<T>> {
    let trunc = Truncation::default();
    let mut amps = h_zero::<T>().amplitudes().clone();
    for spec in specs {
        amps = match spec.build::<T>(trunc)? {
            Stage::Element(u) => u.apply_amplitudes(&amps)?,
            Stage::Filter(lp) => filter(&amps, lp),
            Stage::Fiber => unreachable!("fiber is not part of the preparation grammar"),
        };
    }
    SingleKet::from_amplitudes(trunc, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

    type C = Complex<f64>;
    const L_M2: Mode = Mode::new(Pol::L, -2);
    const R_P2: Mode = Mode::new(Pol::R, 2);

    fn q1() -> QPlateCharge {
        QPlateCharge::new(1.0).unwrap()
    }

    fn h0() -> SingleKet<f64> {
        SingleKet::from_label("H:0").unwrap()
    }

    fn assert_ket_eq_up_to_phase(a: &SingleKet<f64>, b: &SingleKet<f64>) {
        assert!((a.inner(b).norm() - 1.0).abs() < 1e-12, "{a:?} vs {b:?}");
    }

    #[test]
    fn qplate_examples() {
        let qp = qplate(q1(), 0.0);
        let out = qp.apply(&SingleKet::basis(Mode::new(Pol::R, 0)).unwrap()).unwrap();
        assert!((out.amplitude(L_M2) - C::new(1.0, 0.0)).norm() < 1e-15);
        let out = qp.apply(&SingleKet::basis(Mode::new(Pol::L, 0)).unwrap()).unwrap();
        assert!((out.amplitude(R_P2) - C::new(1.0, 0.0)).norm() < 1e-15);
        // H = (R+L)/sqrt2 maps termwise
        let out = qp.apply(&h0()).unwrap();
        assert!((out.amplitude(L_M2) - C::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((out.amplitude(R_P2) - C::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn qplate_alpha0_phase() {
        let a0 = 0.3;
        let qp = qplate(q1(), a0);
        let out = qp.apply(&SingleKet::basis(Mode::new(Pol::R, 0)).unwrap()).unwrap();
        assert!((out.amplitude(L_M2) - C::from_polar(1.0, 2.0 * a0)).norm() < 1e-15);
        let out = qp.apply(&SingleKet::basis(Mode::new(Pol::L, 0)).unwrap()).unwrap();
        assert!((out.amplitude(R_P2) - C::from_polar(1.0, -2.0 * a0)).norm() < 1e-15);
    }

    #[test]
    fn qplate_truncation_edge_is_an_error() {
        let qp = qplate::<f64>(q1(), 0.0);
        let edge = SingleKet::basis(Mode::new(Pol::R, -3)).unwrap();
        assert!(matches!(qp.apply(&edge), Err(Error::Truncation { .. })));
        assert!(qp.is_unitary(1e-12));
        assert!(QPlateCharge::new(0.25).is_err());
        assert_eq!(QPlateCharge::new(0.5).unwrap().twice(), 1);
    }

    #[test]
    fn hwp_examples() {
        let out = hwp(0.0).apply(&h0()).unwrap();
        assert_ket_eq_up_to_phase(&out, &h0());
        let out = hwp(FRAC_PI_8).apply(&h0()).unwrap();
        let s = FRAC_1_SQRT_2;
        let [hr, hl] = LinearPol::H.circular::<f64>();
        let [vr, vl] = LinearPol::V.circular::<f64>();
        let want = SingleKet::new(&[
            (Mode::new(Pol::R, 0), (hr + vr) * s),
            (Mode::new(Pol::L, 0), (hl + vl) * s),
        ])
        .unwrap();
        assert_ket_eq_up_to_phase(&out, &want);
        // hwp(0) is real in the circular basis
        let u = hwp::<f64>(0.0);
        for m in Truncation::default().modes() {
            for o in Truncation::default().modes() {
                assert!(u.entry(o, m).im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn qwp_at_45_degrees_gives_circular_light() {
        // direct retarder-matrix product on |H>: ((1+i)/2, (1-i)/2) in (H, V),
        // which has zero overlap with R and unit overlap with L
        let out = qwp(FRAC_PI_4).apply(&h0()).unwrap();
        assert!(out.probability(Mode::new(Pol::R, 0)) < 1e-15);
        assert!((out.probability(Mode::new(Pol::L, 0)) - 1.0).abs() < 1e-15);
        let out = qwp(-FRAC_PI_4).apply(&h0()).unwrap();
        assert!((out.probability(Mode::new(Pol::R, 0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mirror_examples() {
        let m = mirror::<f64>();
        let out = m.apply(&SingleKet::basis(R_P2).unwrap()).unwrap();
        assert!((out.amplitude(L_M2) - C::new(1.0, 0.0)).norm() < 1e-15);
        let out = m.apply(&h0()).unwrap();
        assert!((out.inner(&h0()) - C::new(1.0, 0.0)).norm() < 1e-15);
        let v0 = SingleKet::from_label("V:0").unwrap();
        let out = m.apply(&v0).unwrap();
        assert!((out.inner(&v0) + C::new(1.0, 0.0)).norm() < 1e-15);
        assert!(m.then(&m).approx_eq_up_to_phase(&ElementUnitary::identity(Truncation::default()), 1e-15));
        assert_eq!(m.then(&m), ElementUnitary::identity(Truncation::default()));
    }

    #[test]
    fn mirror_conjugated_qplate_has_mirrored_orientation() {
        let m = mirror::<f64>();
        for a0 in [0.0, 0.4, 1.3] {
            let conj = m.then(&qplate(q1(), a0)).then(&m);
            let want = qplate(q1(), -a0);
            assert!(conj.approx_eq_up_to_phase(&want, 1e-12));
            for i in conj.domain() {
                for o in Truncation::default().modes() {
                    assert!((conj.entry(o, i) - want.entry(o, i)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn vv_family() {
        let phi = prepare_vv(FRAC_PI_2, 0.0);
        let want = SingleKet::new(&[(L_M2, C::new(1.0, 0.0)), (R_P2, C::new(1.0, 0.0))]).unwrap();
        assert!((phi.inner(&want) - C::new(1.0, 0.0)).norm() < 1e-15);
        let k = prepare_vv::<f64>(0.0, 1.0);
        assert!((k.probability(L_M2) - 1.0).abs() < 1e-15 && k.support_len() == 1);
        let minus = prepare_vv(FRAC_PI_2, PI);
        assert!((minus.amplitude(R_P2) + C::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!(minus.inner(&phi).norm() < 1e-15);
    }

    #[test]
    fn waveplate_preparation() {
        let (q, h) = preparation_angles::<f64>([C::new(1.0, 0.0), C::default()]);
        let k = prepare_from_waveplates(q, h).unwrap();
        assert!((k.probability(L_M2) - 1.0).abs() < 1e-12);
        // unchanged |H,0> reaches the balanced vector vortex state
        let k = prepare_from_waveplates(0.0, 0.0).unwrap();
        assert_ket_eq_up_to_phase(&k, &prepare_vv(FRAC_PI_2, 0.0));
    }

    #[test]
    fn composite_waveplates_match_matrix_product() {
        // brute-force 2x2 product in the linear basis, then q-plate bookkeeping
        let (qa, ha) = (FRAC_PI_4, FRAC_PI_4 / 2.0 + 0.1);
        let j = matmul(&jones_hwp(ha), &jones_qwp(qa));
        let lin = [j[0][0], j[1][0]];
        let i = C::new(0.0, 1.0);
        let cr = (lin[0] - i * lin[1]) * FRAC_1_SQRT_2;
        let cl = (lin[0] + i * lin[1]) * FRAC_1_SQRT_2;
        let k = prepare_from_waveplates(qa, ha).unwrap();
        assert!((k.probability(L_M2) - cr.norm_sqr()).abs() < 1e-12);
        assert!((k.probability(R_P2) - cl.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn analysis_chains() {
        let tr = Truncation::default();
        let basis = [L_M2, R_P2];
        // with a q-plate: |L,-2> -> |R,0>; project the analyzer onto R
        let (q, h) = analyzer_angles::<f64>([C::new(1.0, 0.0), C::default()]);
        let chain = analysis_projector(tr, q, h, LinearPol::H, true);
        let op = chain.effective_operator(&basis).unwrap();
        assert!((op[0] - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!(op[1].norm() < 1e-12 && op[2].norm() < 1e-12 && op[3].norm() < 1e-12);
        assert!(chain.probability(&SingleKet::basis(R_P2).unwrap()).unwrap() < 1e-12);

        let chain = analysis_projector(tr, 0.0, 0.0, LinearPol::H, false);
        let p = chain.probability(&h0()).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let p = chain.probability(&SingleKet::from_label("V:0").unwrap()).unwrap();
        assert!(p < 1e-15);
    }

    #[test]
    fn analyzer_and_preparation_solvers_cover_the_sphere() {
        for k in 0..40 {
            let th = PI * (k as f64 + 0.5) / 40.0;
            let ph = 2.0 * PI * ((k * 7) % 40) as f64 / 40.0;
            let t = [C::new((th / 2.0).cos(), 0.0), C::from_polar((th / 2.0).sin(), ph)];
            let (q, h) = analyzer_angles(t);
            let j = matmul(&jones_hwp(h), &jones_qwp(q));
            let out = apply2(&j, circular_to_linear_vec(t));
            assert!((out[0].norm_sqr() - 1.0).abs() < 1e-12, "analyzer {k}");
            let (q, h) = preparation_angles(t);
            let out = apply2(&matmul(&jones_hwp(h), &jones_qwp(q)), [C::new(1.0, 0.0), C::default()]);
            assert!((overlap(out, circular_to_linear_vec(t)) - 1.0).abs() < 1e-12, "prep {k}");
        }
    }

    #[test]
    fn chain_grammar() {
        let specs = parse_chain("qwp(45) | hwp(22.5) qplate(q=1, a0=0) -> pbs(H)").unwrap();
        assert_eq!(specs.len(), 4);
        assert_eq!(specs[2], ElementSpec::QPlate { q: 1.0, a0_deg: 0.0 });
        assert_eq!(specs[3], ElementSpec::Pbs(LinearPol::H));
        let e = parse_chain("qwp(45) foo(1)").unwrap_err();
        assert_eq!(e, Error::Parse { column: 9, message: "unknown element 'foo'".into() });
        assert!(matches!(parse_chain("hwp(x)"), Err(Error::Parse { column: 5, .. })));
        assert!(parse_chain("qplate(q=0.3)").is_err());
        assert!(parse_chain("pbs(D)").is_err());
        let k: SingleKet<f64> = prepare_from_chain(&parse_chain("qwp(0) hwp(0) qplate(q=1,a0=0)").unwrap()).unwrap();
        assert_ket_eq_up_to_phase(&k, &prepare_vv(FRAC_PI_2, 0.0));
    }

    #[test]
    fn f32_elements() {
        let k = prepare_from_waveplates::<f32>(0.0, 0.0).unwrap();
        assert!((k.probability(R_P2) - 0.5).abs() < 1e-6);
    }

    fn arb_ket() -> impl Strategy<Value = SingleKet<f64>> {
        let modes: Vec<Mode> = Truncation::default().modes().filter(|m| m.oam.abs() <= 2).collect();
        prop::collection::vec((0..modes.len(), -1.0..1.0f64, -1.0..1.0f64), 1..6).prop_filter_map(
            "nonzero",
            move |v| {
                let amps: Vec<_> = v.iter().map(|&(i, re, im)| (modes[i], C::new(re, im))).collect();
                SingleKet::new(&amps).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn elements_preserve_norm(k in arb_ket(), th in -PI..PI, a0 in -PI..PI) {
            for u in [hwp(th), qwp(th), qplate(q1(), a0), mirror()] {
                let out = u.apply(&k).unwrap();
                prop_assert!((out.norm() - 1.0).abs() < 1e-12);
                prop_assert!(u.is_unitary(1e-12));
            }
        }

        #[test]
        fn vv_probabilities(th in 0.0..PI, psi in 0.0..(2.0 * PI)) {
            let k = prepare_vv(th, psi);
            prop_assert!((k.probability(L_M2) - (th / 2.0).cos().powi(2)).abs() < 1e-14);
            prop_assert!((k.probability(R_P2) - (th / 2.0).sin().powi(2)).abs() < 1e-14);
        }

        #[test]
        fn waveplates_stay_in_vv_family(q in -PI..PI, h in -PI..PI) {
            let k = prepare_from_waveplates(q, h).unwrap();
            prop_assert!((k.probability(L_M2) + k.probability(R_P2) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn waveplates_reach_every_vv_state(th in 0.0..PI, psi in 0.0..(2.0 * PI)) {
            let target = prepare_vv(th, psi);
            // pre-q-plate polarization: R -> |L,-2>, L -> |R,2>
            let pol = [target.amplitude(L_M2), target.amplitude(R_P2)];
            let (q, h) = preparation_angles(pol);
            let k = prepare_from_waveplates(q, h).unwrap();
            prop_assert!((k.inner(&target).norm() - 1.0).abs() < 1e-10);
        }
    }
}
