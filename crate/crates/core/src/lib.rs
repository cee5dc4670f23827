//! Isomonodromic deformations of rank-4 Fuchsian systems and the spectral-type
//! calculus around them.

pub mod error;
pub mod linalg;
pub mod monodromy;
pub mod schlesinger;
pub mod spectral;
pub mod systems;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
pub use systems::{
    FactoredSystem, HtlForm, Partition, PointType, RationalSystem, RiemannScheme, SingularPoint,
    SpectralType,
};
