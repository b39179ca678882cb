//! Anisotropic norm laboratory: test functions, the `C^r` convention,
//! mollification, leafwise functionals and dictionary estimates.

pub mod experiments;
pub mod leaf;
pub mod profile;

pub use experiments::{inequality_experiments, Entry, NormsConfig, NormsReport, Semantics};
pub use leaf::{ell, estimate_norm, estimate_seminorm, Dictionary, LeafObservable, NormEstimate};
pub use profile::{cr_norm, CrNorm, Mollified, Profile, TestFunction};
