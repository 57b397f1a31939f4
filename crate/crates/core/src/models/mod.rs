//! Financial models and their reduction to the Bessel PDE.

mod cev;
mod cir;
mod curve;
mod problem;
mod riccati;
mod timemap;

pub use cev::{cev_to_bessel, BarrierKind, BarrierSpec, CevModel, CevTimeMaps};
pub use cir::{cir_bond_b_closed, cir_bond_b_printed, cir_to_bessel, CirModel, CirTimeMaps};
pub use curve::TimeCurve;
pub use problem::{
    lift_below_half, small_b_lift, BackMap, BesselProblem, Boundary, Domain, InitialProfile, ProfileShape,
};
pub use riccati::{riccati_solve, OdePath, RiccatiSolution};
pub use timemap::{RealFn, TimeChange};
