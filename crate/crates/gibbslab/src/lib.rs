//! Numerical laboratory for hyperbolic surface groups and weighted orbital
//! equidistribution on the projective line.
//!
//! The library builds an explicit genus-2 fuchsian lattice (the symmetric
//! octagon group), enumerates orbit balls, evaluates Hölder potentials and
//! their Gibbs cocycles along geodesics, and assembles the weighted counting
//! measures, ball/sphere averages and boundary measures whose limits the
//! crate's acceptance suite cross-validates. Quasifuchsian deformations are
//! produced by bending along the separating commutator curve, and the
//! projective holonomy cocycle comes with Lyapunov exponent and Lyapunov
//! section estimators, plus a discrete-time cocycle toolkit for Oseledets
//! flags and basin diagnostics.
//!
//! Modules follow the subsystems:
//!
//! * [`hypgeom`] — upper half-plane model: Möbius maps, distance, geodesics,
//!   the geodesic flow in Hopf coordinates and the Busemann cocycle;
//! * [`group`] — the octagon lattice, orbit-ball enumeration, fundamental
//!   domain reduction, representations and bending;
//! * [`potential`] — invariant potentials, geodesic line integrals, the
//!   weight kappa, the delta and Gibbs cocycles, pressure estimation;
//! * [`cocycle`] — projective points, Lyapunov exponents/sections over the
//!   geodesic flow, and the discrete projective cocycle machinery;
//! * [`measures`] — empirical measures, counting measures, Monte-Carlo
//!   averages, boundary measures, measure distances and Cauchy diagnostics;
//! * [`render`] — deterministic SVG figures with CSV siblings.

pub mod cocycle;
pub mod group;
pub mod hypgeom;
pub mod measures;
pub mod potential;
pub mod render;

pub use cocycle::ProjPoint;
pub use group::{GroupElement, GroupPresentation, Representation, Word};
pub use hypgeom::{BoundaryPoint, HPoint, MobiusMap, UnitTangent};
pub use measures::EmpiricalMeasure;
pub use potential::Potential;
