//! Permanent-based two-photon amplitudes, used as an independent check of
//! the creation-operator expansion.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::modes::SingleKet;
use crate::scalar::Scalar;

use super::{PairKey, Port, PortMode, ScatteringMap, TwoPhotonState};

/// Dense single-photon transfer matrix, `matrix[out][in]` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseScattering<T: Scalar> {
    inputs: Vec<PortMode>,
    outputs: Vec<PortMode>,
    matrix: Vec<Complex<T>>,
}

impl<T: Scalar> DenseScattering<T> {
    pub fn new(inputs: Vec<PortMode>, outputs: Vec<PortMode>, matrix: Vec<Complex<T>>) -> Result<Self> {
        let expected = inputs.len() * outputs.len();
        if matrix.len() != expected {
            return Err(Error::Dimension { expected, got: matrix.len() });
        }
        Ok(DenseScattering { inputs, outputs, matrix })
    }

    pub fn from_map(map: &ScatteringMap<T>) -> Self {
        let inputs: Vec<PortMode> = map.inputs().collect();
        let mut outs = std::collections::BTreeSet::new();
        for &x in &inputs {
            outs.extend(map.column(x).expect("listed input").iter().map(|(o, _)| *o));
        }
        let outputs: Vec<PortMode> = outs.into_iter().collect();
        let mut matrix = vec![Complex::default(); inputs.len() * outputs.len()];
        for (j, &x) in inputs.iter().enumerate() {
            for &(o, u) in map.column(x).expect("listed input") {
                let i = outputs.binary_search(&o).expect("collected output");
                matrix[i * inputs.len() + j] = u;
            }
        }
        DenseScattering { inputs, outputs, matrix }
    }

    pub fn inputs(&self) -> &[PortMode] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PortMode] {
        &self.outputs
    }

    pub fn to_map(&self) -> ScatteringMap<T> {
        let n = self.inputs.len();
        let columns = self
            .inputs
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let col = self.outputs.iter().enumerate().map(|(i, &o)| (o, self.matrix[i * n + j])).collect();
                (x, col)
            })
            .collect();
        ScatteringMap::new(columns)
    }

    fn element(&self, out: PortMode, input: PortMode) -> Complex<T> {
        let i = self.outputs.iter().position(|&o| o == out);
        let j = self.inputs.iter().position(|&x| x == input);
        match (i, j) {
            (Some(i), Some(j)) => self.matrix[i * self.inputs.len() + j],
            _ => Complex::default(),
        }
    }
}

fn multiplicity_factorial<T: Scalar>(x: PortMode, y: PortMode) -> T {
    if x == y {
        T::lit(2.0)
    } else {
        T::one()
    }
}

/// `<y1 y2| U |x1 x2>` as the permanent of the 2x2 submatrix divided by
/// `sqrt(prod n_in! prod n_out!)`.
pub fn permanent_oracle<T: Scalar>(
    u: &DenseScattering<T>,
    input: (PortMode, PortMode),
    output: (PortMode, PortMode),
) -> Complex<T> {
    let (x1, x2) = input;
    let (y1, y2) = output;
    let perm = u.element(y1, x1) * u.element(y2, x2) + u.element(y1, x2) * u.element(y2, x1);
    let norm = (multiplicity_factorial::<T>(x1, x2) * multiplicity_factorial::<T>(y1, y2)).sqrt();
    perm / norm
}

/// Full output state for a photon in port a and one in port b, built
/// pattern by pattern from permanents.
pub fn oracle_state<T: Scalar>(
    u: &DenseScattering<T>,
    input_a: &SingleKet<T>,
    input_b: &SingleKet<T>,
) -> Result<TwoPhotonState<T>> {
    let lift = |port: Port, k: &SingleKet<T>| -> Result<Vec<(PortMode, Complex<T>)>> {
        k.iter()
            .map(|(m, a)| {
                let pm = PortMode::new(port, m);
                if !u.inputs.contains(&pm) {
                    return Err(Error::Truncation { label: pm.to_string(), m_max: k.truncation().m_max() });
                }
                Ok((pm, a))
            })
            .collect()
    };
    let fa = lift(Port::A, input_a)?;
    let fb = lift(Port::B, input_b)?;
    let mut amps = BTreeMap::new();
    for (i, &y1) in u.outputs.iter().enumerate() {
        for &y2 in &u.outputs[i..] {
            let mut amp = Complex::default();
            for &(x, a) in &fa {
                for &(z, b) in &fb {
                    amp = amp + a * b * permanent_oracle(u, (x, z), (y1, y2));
                }
            }
            amps.insert(PairKey::new(y1, y2), amp);
        }
    }
    TwoPhotonState::from_map(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock2::{bs_scatter, pattern_probabilities, scatter, BeamSplitter};
    use crate::modes::{Mode, Pol, Truncation};
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    type C = Complex<f64>;
    const LM2: Mode = Mode::new(Pol::L, -2);

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
        let g = DMatrix::from_fn(n, n, |_, _| {
            C::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        });
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        // fix column phases so the distribution is Haar
        let mut q = q;
        for j in 0..n {
            let d = r[(j, j)];
            let ph = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
        q
    }

    fn random_ket(modes: &[Mode], rng: &mut ChaCha8Rng) -> SingleKet<f64> {
        let amps: Vec<_> = modes
            .iter()
            .map(|&m| (m, C::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))))
            .collect();
        SingleKet::new(&amps).unwrap()
    }

    #[test]
    fn identity_scattering() {
        let x = PortMode::new(Port::A, LM2);
        let y = PortMode::new(Port::B, Mode::new(Pol::R, 2));
        let u = DenseScattering::new(vec![x, y], vec![x, y], vec![C::new(1.0, 0.0), C::default(), C::default(), C::new(1.0, 0.0)]).unwrap();
        assert!((permanent_oracle(&u, (x, y), (x, y)) - C::new(1.0, 0.0)).norm() < 1e-15);
        assert!((permanent_oracle(&u, (x, x), (x, x)) - C::new(1.0, 0.0)).norm() < 1e-15);
        assert!(DenseScattering::<f64>::new(vec![x], vec![x], vec![]).is_err());
    }

    #[test]
    fn mirrored_splitter_term() {
        let u = DenseScattering::from_map(&BeamSplitter::<f64>::physical(Truncation::default()).scattering_map());
        let amp = permanent_oracle(
            &u,
            (PortMode::new(Port::A, LM2), PortMode::new(Port::B, LM2)),
            (PortMode::new(Port::C, LM2), PortMode::new(Port::D, LM2)),
        );
        assert!((amp - C::new(0.5, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn oracle_matches_expansion_on_random_unitaries(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes = [Mode::new(Pol::R, 0), Mode::new(Pol::L, 0), Mode::new(Pol::R, 2)];
            let inputs: Vec<_> = [Port::A, Port::B]
                .iter()
                .flat_map(|&p| modes.iter().map(move |&m| PortMode::new(p, m)))
                .collect();
            let outputs: Vec<_> = [Port::C, Port::D]
                .iter()
                .flat_map(|&p| modes.iter().map(move |&m| PortMode::new(p, m)))
                .collect();
            let q = random_unitary(6, &mut rng);
            let flat: Vec<C> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| q[(i, j)]).collect();
            let u = DenseScattering::new(inputs, outputs, flat).unwrap();
            let a = random_ket(&modes, &mut rng);
            let b = random_ket(&modes, &mut rng);
            let expanded = scatter(&u.to_map(), &a, &b).unwrap();
            let oracle = oracle_state(&u, &a, &b).unwrap();
            for (k, amp) in oracle.iter() {
                prop_assert!((expanded.amplitude(k.first(), k.second()) - amp).norm() < 1e-10);
            }
            for (k, amp) in expanded.iter() {
                prop_assert!((oracle.amplitude(k.first(), k.second()) - amp).norm() < 1e-10);
            }
        }

        #[test]
        fn oracle_matches_physical_splitter(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<Mode> = Truncation::default().modes().filter(|m| m.oam.abs() <= 2).collect();
            let a = random_ket(&modes, &mut rng);
            let b = random_ket(&modes, &mut rng);
            let u = DenseScattering::from_map(&BeamSplitter::physical(Truncation::default()).scattering_map());
            let s = bs_scatter(&a, &b).unwrap();
            let o = oracle_state(&u, &a, &b).unwrap();
            prop_assert!((s.inner(&o).norm() - 1.0).abs() < 1e-10);
            let (p, q) = (pattern_probabilities(&s), pattern_probabilities(&o));
            prop_assert!((p.p_cd - q.p_cd).abs() < 1e-10);
            prop_assert!((p.p_cc - q.p_cc).abs() < 1e-10);
        }
    }
}
