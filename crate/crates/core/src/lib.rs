//! Photonic simulation of hybrid polarization/OAM single photons.

pub mod budget;
pub mod density;
pub mod elements;
pub mod error;
pub mod fock2;
pub mod gate;
pub mod modes;
pub mod sampling;
pub mod reference;
pub mod scalar;
pub mod tomo;

pub use error::{Error, Result};
pub use budget::EfficiencyChain;
pub use density::DensityMatrix;
pub use scalar::Scalar;

pub type Ket = modes::SingleKet<f64>;
pub type Ket32 = modes::SingleKet<f32>;
pub type Unitary = elements::ElementUnitary<f64>;
pub type Chain = elements::ProjectorChain<f64>;
pub type TwoPhoton = fock2::TwoPhotonState<f64>;
