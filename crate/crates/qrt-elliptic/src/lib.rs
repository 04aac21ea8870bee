//! Closed-form integration of QRT maps whose invariant biquadratic curve is
//! smooth.
//!
//! A QRT map is the composition of two involutive coordinate switches on
//! `CP^1 x CP^1` determined by a pencil of biquadratic curves
//! `x^T A y + K x^T B y = 0`.  When the member of the pencil through the
//! initial point is a smooth elliptic curve, the map restricted to that curve
//! is conjugate to a translation `u -> u + (h_x - h_y)` on a complex torus
//! `C / (Z w1 + Z w2)`.  This crate computes that conjugacy explicitly:
//!
//! * [`qrt`] — the map itself: pencil evaluation, the invariant `K`, the
//!   switch composition, base points of the pencil;
//! * [`pencil`] — analysis of the fixed curve: the discriminant quartic, its
//!   Eisenstein invariants and the smoothness gate, Moebius normalization;
//! * [`riemann`] — contour integration of `dx / sqrt(Delta(x))` on the double
//!   cover: branch points, period integrals, Abel integrals to marked points;
//! * [`elliptic`] — the function kernel: theta series, Weierstrass sigma,
//!   quasi-period constants, and the sigma-quotient coordinate functions;
//! * [`solver`] — end-to-end assembly of the closed form and its verification
//!   against direct iteration.

pub mod elliptic;
pub mod error;
pub mod lattice;
pub mod pencil;
pub mod poly;
pub mod proj;
pub mod qrt;
pub mod riemann;
pub mod solver;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use proj::{ProjCoord, ProjPoint, C64};
