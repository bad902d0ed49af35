//! Truncated hybrid single-photon mode space: circular polarization times OAM.
//!
//! Circular polarization is the canonical storage basis. Linear states are
//! derived with the fixed convention
//!
//! ```text
//! |H> = (|R> + |L>) / sqrt(2)
//! |V> = (|R> - |L>) / (i sqrt(2))
//! ```
//!
//! Every phase-sensitive result in the crate is expressed in this convention.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// Circular polarization label. `R` orders before `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pol {
    R,
    L,
}

impl Pol {
    pub fn flipped(self) -> Pol {
        match self {
            Pol::R => Pol::L,
            Pol::L => Pol::R,
        }
    }
}

/// Linear polarization label used by filters and the label grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinearPol {
    H,
    V,
}

impl LinearPol {
    /// Circular components `(c_R, c_L)` of this linear state.
    pub fn circular<T: Scalar>(self) -> [Complex<T>; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            LinearPol::H => [c(s, 0.0), c(s, 0.0)],
            // (R - L) / (i sqrt2) = -i R / sqrt2 + i L / sqrt2
            LinearPol::V => [c(0.0, -s), c(0.0, s)],
        }
    }
}

/// One single-photon basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub pol: Pol,
    pub oam: i32,
}

impl Mode {
    pub const fn new(pol: Pol, oam: i32) -> Self {
        Mode { pol, oam }
    }

    /// Helicity flip of both polarization and OAM.
    pub fn mirrored(self) -> Mode {
        Mode::new(self.pol.flipped(), -self.oam)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.pol {
            Pol::R => 'R',
            Pol::L => 'L',
        };
        if self.oam == 0 {
            write!(f, "{p}:0")
        } else {
            write!(f, "{p}:{:+}", self.oam)
        }
    }
}

/// OAM truncation `|m| <= m_max`, with `m_max >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation(u32);

impl Default for Truncation {
    fn default() -> Self {
        Truncation(4)
    }
}

impl Truncation {
    pub fn new(m_max: u32) -> Result<Self> {
        if m_max < 2 {
            return Err(Error::Parameter(format!("m_max must be >= 2, got {m_max}")));
        }
        Ok(Truncation(m_max))
    }

    pub fn m_max(self) -> u32 {
        self.0
    }

    pub fn contains(self, mode: Mode) -> bool {
        mode.oam.unsigned_abs() <= self.0
    }

    pub fn check(self, mode: Mode) -> Result<()> {
        if self.contains(mode) {
            Ok(())
        } else {
            Err(Error::Truncation { label: mode.to_string(), m_max: self.0 })
        }
    }

    /// All representable modes in the canonical order.
    pub fn modes(self) -> impl Iterator<Item = Mode> {
        let m = self.0 as i32;
        [Pol::R, Pol::L]
            .into_iter()
            .flat_map(move |p| (-m..=m).map(move |oam| Mode::new(p, oam)))
    }
}

pub(crate) type Amplitudes<T> = BTreeMap<Mode, Complex<T>>;

pub(crate) fn prune<T: Scalar>(map: &mut Amplitudes<T>) {
    let tol = T::prune_tol();
    map.retain(|_, a| a.norm() >= tol);
}

pub(crate) fn norm_sqr<T: Scalar>(map: &Amplitudes<T>) -> T {
    map.values().fold(T::zero(), |acc, a| acc + a.norm_sqr())
}

/// Normalized single-photon state as a sparse amplitude map.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleKet<T: Scalar> {
    trunc: Truncation,
    amps: Amplitudes<T>,
    raw_norm: T,
}

impl<T: Scalar> SingleKet<T> {
    /// Builds a normalized ket in the default truncation. Repeated modes add.
    pub fn new(amplitudes: &[(Mode, Complex<T>)]) -> Result<Self> {
        Self::with_truncation(amplitudes, Truncation::default())
    }

    pub fn with_truncation(amplitudes: &[(Mode, Complex<T>)], trunc: Truncation) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroVector);
        }
        let mut amps = Amplitudes::new();
        for &(mode, a) in amplitudes {
            trunc.check(mode)?;
            let e = amps.entry(mode).or_insert_with(Complex::default);
            *e = *e + a;
        }
        Self::from_amplitudes(trunc, amps)
    }

    /// Normalizes an amplitude map, recording its original norm.
    pub(crate) fn from_amplitudes(trunc: Truncation, mut amps: Amplitudes<T>) -> Result<Self> {
        let norm = norm_sqr(&amps).sqrt();
        if norm < T::prune_tol() {
            return Err(Error::ZeroVector);
        }
        for a in amps.values_mut() {
            *a = *a / norm;
        }
        prune(&mut amps);
        Ok(SingleKet { trunc, amps, raw_norm: norm })
    }

    pub fn basis(mode: Mode) -> Result<Self> {
        Self::new(&[(mode, Complex::new(T::one(), T::zero()))])
    }

    /// Parses a mode label such as `R:+2` or `H:0`.
    pub fn from_label(label: &str) -> Result<Self> {
        let parsed: ModeLabel = label.parse()?;
        Self::new(&parsed.expand())
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Norm of the amplitudes passed at construction.
    pub fn raw_norm(&self) -> T {
        self.raw_norm
    }

    pub fn amplitude(&self, mode: Mode) -> Complex<T> {
        self.amps.get(&mode).copied().unwrap_or_default()
    }

    pub fn probability(&self, mode: Mode) -> T {
        self.amplitude(mode).norm_sqr()
    }

    pub fn norm(&self) -> T {
        norm_sqr(&self.amps).sqrt()
    }

    /// Nonzero amplitudes in canonical mode order.
    pub fn iter(&self) -> impl Iterator<Item = (Mode, Complex<T>)> + '_ {
        self.amps.iter().map(|(m, a)| (*m, *a))
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub(crate) fn amplitudes(&self) -> &Amplitudes<T> {
        &self.amps
    }

    /// Renormalizes; idempotent on an already normalized ket.
    pub fn normalize(&self) -> Self {
        let norm = self.norm();
        let amps = self.amps.iter().map(|(m, a)| (*m, *a / norm)).collect();
        SingleKet { trunc: self.trunc, amps, raw_norm: self.raw_norm }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &SingleKet<T>) -> Complex<T> {
        self.amps
            .iter()
            .filter_map(|(m, a)| other.amps.get(m).map(|b| a.conj() * b))
            .fold(Complex::default(), |acc, x| acc + x)
    }

    /// Projects onto the logical span of `map` and renormalizes.
    pub fn to_logical(&self, map: &LogicalQubitMap) -> Result<LogicalProjection<T>> {
        let a0 = self.amplitude(map.basis0());
        let a1 = self.amplitude(map.basis1());
        let weight = a0.norm_sqr() + a1.norm_sqr();
        if weight < T::prune_tol() {
            return Err(Error::DegenerateProjection);
        }
        let total = self.norm().powi(2);
        let n = weight.sqrt();
        Ok(LogicalProjection { amplitudes: [a0 / n, a1 / n], leakage: (total - weight) / total })
    }
}

/// Result of [`SingleKet::to_logical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalProjection<T: Scalar> {
    pub amplitudes: [Complex<T>; 2],
    /// Probability weight outside the logical span.
    pub leakage: T,
}

/// Assignment of two physical modes to the logical qubit states |0>, |1>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalQubitMap {
    basis0: Mode,
    basis1: Mode,
}

impl Default for LogicalQubitMap {
    /// |L,-2> -> |0>, |R,2> -> |1>.
    fn default() -> Self {
        LogicalQubitMap { basis0: Mode::new(Pol::L, -2), basis1: Mode::new(Pol::R, 2) }
    }
}

impl LogicalQubitMap {
    pub fn new(basis0: Mode, basis1: Mode) -> Result<Self> {
        if basis0 == basis1 {
            return Err(Error::Parameter(format!("logical basis modes coincide: {basis0}")));
        }
        Ok(LogicalQubitMap { basis0, basis1 })
    }

    pub fn basis0(&self) -> Mode {
        self.basis0
    }

    pub fn basis1(&self) -> Mode {
        self.basis1
    }

    pub fn basis(&self, bit: usize) -> Mode {
        if bit == 0 {
            self.basis0
        } else {
            self.basis1
        }
    }
}

/// Parsed form of the textual mode grammar `R:+2`, `L:-2`, `H:0`, `V:0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    Circular(Mode),
    Linear(LinearPol, i32),
}

impl ModeLabel {
    /// Amplitudes in the circular basis.
    pub fn expand<T: Scalar>(self) -> Vec<(Mode, Complex<T>)> {
        match self {
            ModeLabel::Circular(m) => vec![(m, Complex::new(T::one(), T::zero()))],
            ModeLabel::Linear(lp, oam) => {
                let [r, l] = lp.circular::<T>();
                vec![(Mode::new(Pol::R, oam), r), (Mode::new(Pol::L, oam), l)]
            }
        }
    }
}

impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let err = |column: usize, message: &str| Error::Parse { column, message: message.to_string() };
        let (p, m) = s.split_once(':').ok_or_else(|| err(1, "expected <pol>:<oam>"))?;
        let oam: i32 = m
            .trim()
            .parse()
            .map_err(|_| err(p.len() + 2, "OAM value must be an integer"))?;
        match p.trim() {
            "R" => Ok(ModeLabel::Circular(Mode::new(Pol::R, oam))),
            "L" => Ok(ModeLabel::Circular(Mode::new(Pol::L, oam))),
            "H" => Ok(ModeLabel::Linear(LinearPol::H, oam)),
            "V" => Ok(ModeLabel::Linear(LinearPol::V, oam)),
            _ => Err(err(1, "polarization must be one of R, L, H, V")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one() -> Complex<f64> {
        Complex::new(1.0, 0.0)
    }

    const L_M2: Mode = Mode::new(Pol::L, -2);
    const R_P2: Mode = Mode::new(Pol::R, 2);

    #[test]
    fn single_basis_element() {
        let k = SingleKet::new(&[(R_P2, one())]).unwrap();
        assert_eq!(k.support_len(), 1);
        assert!((k.amplitude(R_P2) - one()).norm() < 1e-15);
    }

    #[test]
    fn phi_plus_is_balanced() {
        let k = SingleKet::new(&[(L_M2, one()), (R_P2, one())]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k.amplitude(L_M2).re - s).abs() < 1e-15);
        assert!((k.amplitude(R_P2).re - s).abs() < 1e-15);
        assert!((k.raw_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn truncation_and_zero_errors() {
        let e = SingleKet::new(&[(Mode::new(Pol::R, 5), one())]).unwrap_err();
        assert!(matches!(e, Error::Truncation { m_max: 4, .. }));
        let e = SingleKet::<f64>::new(&[(R_P2, Complex::default())]).unwrap_err();
        assert_eq!(e, Error::ZeroVector);
        assert_eq!(SingleKet::<f64>::new(&[]).unwrap_err(), Error::ZeroVector);
        assert!(Truncation::new(1).is_err());
    }

    #[test]
    fn ordering_is_r_first_then_ascending_m() {
        let modes: Vec<Mode> = Truncation::new(2).unwrap().modes().collect();
        assert_eq!(modes.first(), Some(&Mode::new(Pol::R, -2)));
        assert_eq!(modes[5], Mode::new(Pol::L, -2));
        let mut sorted = modes.clone();
        sorted.sort();
        assert_eq!(modes, sorted);
    }

    #[test]
    fn inner_products() {
        let r2 = SingleKet::<f64>::basis(R_P2).unwrap();
        let l2 = SingleKet::<f64>::basis(L_M2).unwrap();
        let phi = SingleKet::new(&[(L_M2, one()), (R_P2, one())]).unwrap();
        assert!((r2.inner(&r2) - one()).norm() < 1e-15);
        assert!(r2.inner(&l2).norm() < 1e-15);
        // expansion of the balanced state: amplitude 1/sqrt2 on |R,2>
        let want = std::f64::consts::FRAC_1_SQRT_2;
        assert!((phi.inner(&r2) - Complex::new(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn logical_projection() {
        let map = LogicalQubitMap::default();
        let phi = SingleKet::new(&[(L_M2, one()), (R_P2, one())]).unwrap();
        let p = phi.to_logical(&map).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.amplitudes[0].re - s).abs() < 1e-15 && (p.amplitudes[1].re - s).abs() < 1e-15);
        assert!(p.leakage.abs() < 1e-15);

        let p = SingleKet::<f64>::basis(L_M2).unwrap().to_logical(&map).unwrap();
        assert!((p.amplitudes[0] - one()).norm() < 1e-15 && p.leakage.abs() < 1e-15);

        let k = SingleKet::new(&[(L_M2, one()), (Mode::new(Pol::L, 0), one())]).unwrap();
        let p = k.to_logical(&map).unwrap();
        assert!((p.amplitudes[0] - one()).norm() < 1e-15);
        assert!((p.leakage - 0.5).abs() < 1e-15);

        let k = SingleKet::<f64>::basis(Mode::new(Pol::R, 0)).unwrap();
        assert_eq!(k.to_logical(&map).unwrap_err(), Error::DegenerateProjection);
        assert!(LogicalQubitMap::new(R_P2, R_P2).is_err());
    }

    #[test]
    fn label_grammar() {
        assert_eq!("R:+2".parse::<ModeLabel>().unwrap(), ModeLabel::Circular(R_P2));
        assert_eq!("L:-2".parse::<ModeLabel>().unwrap(), ModeLabel::Circular(L_M2));
        assert_eq!("H:0".parse::<ModeLabel>().unwrap(), ModeLabel::Linear(LinearPol::H, 0));
        assert!("X:0".parse::<ModeLabel>().is_err());
        assert!("R:two".parse::<ModeLabel>().is_err());
        let h = SingleKet::<f64>::from_label("H:0").unwrap();
        let v = SingleKet::<f64>::from_label("V:0").unwrap();
        assert!(h.inner(&v).norm() < 1e-15);
        assert_eq!(Mode::new(Pol::L, -2).to_string(), "L:-2");
        assert_eq!(Mode::new(Pol::R, 0).to_string(), "R:0");
    }

    #[test]
    fn generic_over_f32() {
        let k = SingleKet::<f32>::from_label("V:2").unwrap();
        assert!((k.norm() - 1.0).abs() < 1e-6);
    }

    fn arb_ket() -> impl Strategy<Value = SingleKet<f64>> {
        let modes: Vec<Mode> = Truncation::default().modes().collect();
        prop::collection::vec((0..modes.len(), -1.0..1.0f64, -1.0..1.0f64), 1..8).prop_filter_map(
            "nonzero",
            move |v| {
                let amps: Vec<_> =
                    v.iter().map(|&(i, re, im)| (modes[i], Complex::new(re, im))).collect();
                SingleKet::new(&amps).ok()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn inner_is_conjugate_symmetric(a in arb_ket(), b in arb_ket()) {
            let ab = a.inner(&b);
            let ba = b.inner(&a);
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
            prop_assert!(ab.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn normalize_is_idempotent(a in arb_ket()) {
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            let n1 = a.normalize();
            let n2 = n1.normalize();
            for (m, x) in n1.iter() {
                prop_assert!((x - n2.amplitude(m)).norm() < 1e-15);
            }
        }

        #[test]
        fn leakage_plus_weight_is_one(a in arb_ket()) {
            let map = LogicalQubitMap::default();
            let w = a.probability(map.basis0()) + a.probability(map.basis1());
            if let Ok(p) = a.to_logical(&map) {
                prop_assert!((p.leakage + w - 1.0).abs() < 1e-12);
            }
        }
    }
}
