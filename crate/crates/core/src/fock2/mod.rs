//! Two-photon interference on a beam splitter with a mirror reflection.
//!
//! Creation operators transform as
//!
//! ```text
//! a† -> (c† - M d†)/sqrt2
//! b† -> (M c† + d†)/sqrt2
//! ```
//!
//! where `M` is the single-photon reflection map (the mirror for the physical
//! splitter, identity for the ideal one). States are kept in the normalized
//! Fock basis keyed by unordered port-mode pairs.

mod histogram;
mod permanent;
mod visibility;

pub use histogram::{
    estimate_g2, estimate_visibility, simulate_hbt_histogram, simulate_hom_histogram, Histogram,
    HistogramParams, HomReport, Peak,
};
pub use permanent::{oracle_state, permanent_oracle, DenseScattering};
pub use visibility::{expected_raw_visibility, hom_visibility, IndistinguishabilityModel};

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;

use crate::elements::ElementUnitary;
use crate::error::{Error, Result};
use crate::modes::{Mode, SingleKet, Truncation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Port::A => "a",
            Port::B => "b",
            Port::C => "c",
            Port::D => "d",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortMode {
    pub port: Port,
    pub mode: Mode,
}

impl PortMode {
    pub const fn new(port: Port, mode: Mode) -> Self {
        PortMode { port, mode }
    }
}

impl fmt::Display for PortMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.mode, self.port)
    }
}

/// Unordered pair of occupied port modes; `first <= second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    first: PortMode,
    second: PortMode,
}

impl PairKey {
    pub fn new(x: PortMode, y: PortMode) -> Self {
        if x <= y {
            PairKey { first: x, second: y }
        } else {
            PairKey { first: y, second: x }
        }
    }

    pub fn first(&self) -> PortMode {
        self.first
    }

    pub fn second(&self) -> PortMode {
        self.second
    }

    pub fn is_doubly_occupied(&self) -> bool {
        self.first == self.second
    }
}

/// Two-photon state in the normalized Fock basis. A doubly occupied key
/// stands for `(x†)²|0>/sqrt2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState<T: Scalar> {
    amps: BTreeMap<PairKey, Complex<T>>,
}

impl<T: Scalar> TwoPhotonState<T> {
    /// State `(sum_x f_x x†)(sum_y g_y y†)|0>`, normalized.
    pub fn from_creation_product(
        f: &[(PortMode, Complex<T>)],
        g: &[(PortMode, Complex<T>)],
    ) -> Result<Self> {
        let sqrt2 = T::SQRT_2();
        let mut amps: BTreeMap<PairKey, Complex<T>> = BTreeMap::new();
        for &(x, a) in f {
            for &(y, b) in g {
                let key = PairKey::new(x, y);
                let w = if x == y { a * b * sqrt2 } else { a * b };
                let e = amps.entry(key).or_default();
                *e = *e + w;
            }
        }
        Self::from_map(amps)
    }

    /// Normalizes a Fock-basis amplitude map.
    pub fn from_map(mut amps: BTreeMap<PairKey, Complex<T>>) -> Result<Self> {
        amps.retain(|_, a| a.norm() >= T::prune_tol());
        let n = amps.values().fold(T::zero(), |s, a| s + a.norm_sqr()).sqrt();
        if n < T::norm_tol() {
            return Err(Error::ZeroVector);
        }
        for a in amps.values_mut() {
            *a = *a / n;
        }
        Ok(TwoPhotonState { amps })
    }

    pub fn amplitude(&self, x: PortMode, y: PortMode) -> Complex<T> {
        self.amps.get(&PairKey::new(x, y)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairKey, Complex<T>)> + '_ {
        self.amps.iter().map(|(k, a)| (*k, *a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> T {
        self.amps.values().fold(T::zero(), |s, a| s + a.norm_sqr()).sqrt()
    }

    /// Unnormalized coincidence amplitudes indexed by (c mode, d mode).
    pub fn coincidence_amplitudes(&self) -> BTreeMap<(Mode, Mode), Complex<T>> {
        self.amps
            .iter()
            .filter(|(k, _)| k.first.port == Port::C && k.second.port == Port::D)
            .map(|(k, a)| ((k.first.mode, k.second.mode), *a))
            .collect()
    }

    /// Overlap `<self|other>`.
    pub fn inner(&self, other: &TwoPhotonState<T>) -> Complex<T> {
        self.amps
            .iter()
            .filter_map(|(k, a)| other.amps.get(k).map(|b| a.conj() * b))
            .fold(Complex::default(), |s, v| s + v)
    }
}

/// Detection-pattern probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternProbabilities<T> {
    pub p_cc: T,
    pub p_dd: T,
    pub p_cd: T,
}

pub fn pattern_probabilities<T: Scalar>(state: &TwoPhotonState<T>) -> PatternProbabilities<T> {
    let mut p = PatternProbabilities { p_cc: T::zero(), p_dd: T::zero(), p_cd: T::zero() };
    for (k, a) in state.iter() {
        let w = a.norm_sqr();
        match (k.first.port, k.second.port) {
            (Port::C, Port::C) => p.p_cc = p.p_cc + w,
            (Port::D, Port::D) => p.p_dd = p.p_dd + w,
            _ => p.p_cd = p.p_cd + w,
        }
    }
    p
}

/// Single-photon scattering map on port modes, input -> outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMap<T: Scalar> {
    columns: BTreeMap<PortMode, Vec<(PortMode, Complex<T>)>>,
}

impl<T: Scalar> ScatteringMap<T> {
    pub fn new(columns: BTreeMap<PortMode, Vec<(PortMode, Complex<T>)>>) -> Self {
        ScatteringMap { columns }
    }

    pub fn column(&self, input: PortMode) -> Result<&[(PortMode, Complex<T>)]> {
        self.columns
            .get(&input)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Truncation { label: input.to_string(), m_max: 0 })
    }

    pub fn inputs(&self) -> impl Iterator<Item = PortMode> + '_ {
        self.columns.keys().copied()
    }

    /// Image of a single photon in `port` carrying `ket`.
    pub fn image(&self, port: Port, ket: &SingleKet<T>) -> Result<Vec<(PortMode, Complex<T>)>> {
        let mut out: BTreeMap<PortMode, Complex<T>> = BTreeMap::new();
        for (m, a) in ket.iter() {
            let pm = PortMode::new(port, m);
            let col = self.columns.get(&pm).ok_or(Error::Truncation {
                label: pm.to_string(),
                m_max: ket.truncation().m_max(),
            })?;
            for &(o, u) in col {
                let e = out.entry(o).or_default();
                *e = *e + u * a;
            }
        }
        Ok(out.into_iter().collect())
    }
}

/// Beam splitter whose reflected d-port output passes a reflection map.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSplitter<T: Scalar> {
    reflection: ElementUnitary<T>,
}

impl<T: Scalar> BeamSplitter<T> {
    /// Physical splitter: reflection flips helicity and OAM sign.
    pub fn physical(trunc: Truncation) -> Self {
        BeamSplitter { reflection: ElementUnitary::mirror(trunc) }
    }

    /// Textbook splitter with a trivial reflection.
    pub fn ideal(trunc: Truncation) -> Self {
        BeamSplitter { reflection: ElementUnitary::identity(trunc) }
    }

    pub fn scattering_map(&self) -> ScatteringMap<T> {
        let s = T::FRAC_1_SQRT_2();
        let mut columns = BTreeMap::new();
        for m in self.reflection.truncation().modes() {
            let Some(refl) = self.reflection.column(m) else { continue };
            let mut a = vec![(PortMode::new(Port::C, m), Complex::new(s, T::zero()))];
            a.extend(refl.iter().map(|&(o, u)| (PortMode::new(Port::D, o), -u * s)));
            let mut b: Vec<_> = refl.iter().map(|&(o, u)| (PortMode::new(Port::C, o), u * s)).collect();
            b.push((PortMode::new(Port::D, m), Complex::new(s, T::zero())));
            columns.insert(PortMode::new(Port::A, m), a);
            columns.insert(PortMode::new(Port::B, m), b);
        }
        ScatteringMap { columns }
    }
}

/// Scatters one photon in port a and one in port b through `map`.
pub fn scatter<T: Scalar>(
    map: &ScatteringMap<T>,
    input_a: &SingleKet<T>,
    input_b: &SingleKet<T>,
) -> Result<TwoPhotonState<T>> {
    let f = map.image(Port::A, input_a)?;
    let g = map.image(Port::B, input_b)?;
    TwoPhotonState::from_creation_product(&f, &g)
}

/// Scattering through the physical (mirror) beam splitter.
pub fn bs_scatter<T: Scalar>(input_a: &SingleKet<T>, input_b: &SingleKet<T>) -> Result<TwoPhotonState<T>> {
    if input_a.truncation() != input_b.truncation() {
        return Err(Error::TruncationMismatch(input_a.truncation().m_max(), input_b.truncation().m_max()));
    }
    scatter(&BeamSplitter::physical(input_a.truncation()).scattering_map(), input_a, input_b)
}
