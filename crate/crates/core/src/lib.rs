pub mod automorphism;
pub mod error;
pub mod group;
pub mod hexfloat;
pub mod norms;
pub mod quadrature;
pub mod resonance;
pub mod sector;
pub mod transfer;

pub use automorphism::{Cocycle, Frame, PartialHypAuto, QuadPoly};
pub use error::{Error, Result};
pub use group::{exp, reduce, Coord, ExactPoint, GroupElement, LatticeElement, LieVector, Point, ReducedPoint};
pub use sector::{theta_atom, DiffOp, SectorFunction, ThetaTerm};
pub use transfer::{correlate, transfer_apply, CorrelationSeries, SeriesMeta};
pub use resonance::{band0_agreement, band_analysis, pencil_fit, residual_decay, PencilFit, Resonance, Tolerances, Verdict, Check, DecayEstimate};
