use crate::error::{Error, Result};
use crate::modes::SingleKet;
use crate::scalar::Scalar;

use super::{bs_scatter, pattern_probabilities};

/// Scalar overlap `M` of the photons' remaining degrees of freedom, with an
/// optional Gaussian delay profile `M(tau) = M exp(-(tau/tau_c)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndistinguishabilityModel<T> {
    m: T,
    delay: Option<(T, T)>,
}

impl<T: Scalar> IndistinguishabilityModel<T> {
    pub fn new(m: T) -> Result<Self> {
        if !(m >= T::zero() && m <= T::one()) {
            return Err(Error::Parameter(format!("indistinguishability must lie in [0, 1], got {m}")));
        }
        Ok(IndistinguishabilityModel { m, delay: None })
    }

    /// Delay `tau_ns` between the photons with coherence width `tau_c_ns`.
    pub fn with_delay(self, tau_ns: T, tau_c_ns: T) -> Result<Self> {
        if !(tau_c_ns > T::zero()) || !tau_ns.is_finite() {
            return Err(Error::Parameter(format!("invalid delay {tau_ns} ns / width {tau_c_ns} ns")));
        }
        Ok(IndistinguishabilityModel { delay: Some((tau_ns, tau_c_ns)), ..self })
    }

    pub fn overlap(&self) -> T {
        self.m
    }

    /// Overlap at the configured delay.
    pub fn effective(&self) -> T {
        match self.delay {
            None => self.m,
            Some((tau, tau_c)) => {
                let x = tau / tau_c;
                self.m * (-(x * x)).exp()
            }
        }
    }
}

/// `V = 1 - 2 p_cd(M)` with `p_cd(M) = M p_cd,ind + (1 - M)/2`.
pub fn hom_visibility<T: Scalar>(
    input_a: &SingleKet<T>,
    input_b: &SingleKet<T>,
    model: &IndistinguishabilityModel<T>,
) -> Result<T> {
    let p_ind = pattern_probabilities(&bs_scatter(input_a, input_b)?).p_cd;
    let m = model.effective();
    let half = T::lit(0.5);
    let p = m * p_ind + (T::one() - m) * half;
    Ok(T::one() - (p + p))
}

/// Raw histogram visibility for interference visibility `v` and source
/// `g2`, under the additive-accidentals model.
pub fn expected_raw_visibility(v: f64, g2: f64) -> f64 {
    v - 2.0 * g2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::prepare_vv;
    use crate::modes::{Mode, Pol};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ket(pol: Pol, oam: i32) -> SingleKet<f64> {
        SingleKet::basis(Mode::new(pol, oam)).unwrap()
    }

    fn full() -> IndistinguishabilityModel<f64> {
        IndistinguishabilityModel::new(1.0).unwrap()
    }

    #[test]
    fn visibility_table() {
        let r2 = ket(Pol::R, 2);
        let l2 = ket(Pol::L, -2);
        let pp = prepare_vv(FRAC_PI_2, 0.0);
        let pm = prepare_vv(FRAC_PI_2, PI);
        let cases = [(&r2, &r2, 0.0), (&r2, &l2, 1.0), (&pp, &pp, 1.0), (&pp, &pm, 0.0), (&pp, &r2, 0.5)];
        for (a, b, want) in cases {
            let v = hom_visibility(a, b, &full()).unwrap();
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        }
        let m = IndistinguishabilityModel::new(0.955).unwrap();
        assert!((hom_visibility(&r2, &l2, &m).unwrap() - 0.955).abs() < 1e-12);
    }

    #[test]
    fn delay_profile() {
        let m = IndistinguishabilityModel::new(0.9).unwrap();
        assert_eq!(m.with_delay(0.0, 0.1).unwrap().effective(), 0.9);
        let e = m.with_delay(0.1, 0.1).unwrap().effective();
        assert!((e - 0.9 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(m.with_delay(0.1, 0.0).is_err());
        assert!(IndistinguishabilityModel::new(1.2).is_err());
        assert!(IndistinguishabilityModel::new(f64::NAN).is_err());
    }

    #[test]
    fn raw_visibility() {
        assert!((expected_raw_visibility(0.955, 0.0126) - 0.9298).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn visibility_is_affine_and_bounded(
            a in super::super::tests::arb_ket(),
            b in super::super::tests::arb_ket(),
            m in 0.0..=1.0f64,
            tau in -1.0..1.0f64,
        ) {
            let model = IndistinguishabilityModel::new(m).unwrap();
            let v = hom_visibility(&a, &b, &model).unwrap();
            let v1 = hom_visibility(&a, &b, &full()).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
            prop_assert!((v - m * v1).abs() < 1e-12);
            let zero = IndistinguishabilityModel::new(0.0).unwrap();
            prop_assert!(hom_visibility(&a, &b, &zero).unwrap().abs() < 1e-12);
            let eff = model.with_delay(tau, 0.3).unwrap().effective();
            prop_assert!(eff >= 0.0 && eff <= m);
        }
    }
}
