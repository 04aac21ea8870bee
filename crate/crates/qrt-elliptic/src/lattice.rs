//! Period-lattice bookkeeping: normalized generators, the modular
//! parameter and nome, the quasi-period constants, and reduction of
//! points into the fundamental cell.

use crate::elliptic;
use crate::error::{Error, Result};
use crate::proj::C64;
use std::f64::consts::PI;

/// A rank-2 lattice `Z w1 + Z w2` in the complex plane, with the derived
/// constants used by the sigma-function machinery.
///
/// Construction normalizes the generator order so that `Im(w2/w1) > 0`
/// (exchanging the pair when necessary, recorded in `swapped`), which
/// puts the nome strictly inside the unit disc.  Instances are immutable.
#[derive(Debug, Clone)]
pub struct Lattice {
    /// First generator (after any normalizing exchange).
    pub w1: C64,
    /// Second generator; `Im(w2/w1) > 0`.
    pub w2: C64,
    /// Modular parameter `w2/w1`, in the upper half-plane.
    pub tau: C64,
    /// Nome `exp(i pi tau)`, inside the unit disc.
    pub q_nome: C64,
    /// Quasi-period constant attached to `w1`.
    pub eta1: C64,
    /// Quasi-period constant attached to `w2`; the pair satisfies
    /// `eta1 w2 - eta2 w1 = i pi`.
    pub eta2: C64,
    /// Whether the input generators were exchanged during normalization.
    pub swapped: bool,
}

impl Lattice {
    /// Build the lattice spanned by `w1` and `w2`, normalizing the
    /// generator order and computing the nome and quasi-period constants.
    pub fn new(w1: C64, w2: C64) -> Result<Self> {
        let scale = w1.norm() + w2.norm();
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::DegenerateLattice);
        }
        // Im(w2/w1) has the sign of the cross product of the generators;
        // colinear generators span only a line.
        let cross = (w1.conj() * w2).im;
        if cross.abs() <= 1e-12 * w1.norm() * w2.norm() {
            return Err(Error::TauNotInUpperHalfPlane);
        }
        let (w1, w2, swapped) = if cross < 0.0 {
            (w2, w1, true)
        } else {
            (w1, w2, false)
        };
        let tau = w2 / w1;
        let q_nome = (C64::new(0.0, PI) * tau).exp();
        if !q_nome.is_finite() || q_nome.norm() >= 0.999 {
            // The theta series needs the nome uniformly inside the disc.
            return Err(Error::DegenerateLattice);
        }
        let (eta1, eta2) = elliptic::eta_constants(w1, w2, tau)?;
        Ok(Lattice {
            w1,
            w2,
            tau,
            q_nome,
            eta1,
            eta2,
            swapped,
        })
    }

    /// Real coordinates `(a, b)` of `u` in the generator basis, so that
    /// `u = a w1 + b w2`.
    pub fn coords(&self, u: C64) -> (f64, f64) {
        let det = self.w1.re * self.w2.im - self.w1.im * self.w2.re;
        let a = (u.re * self.w2.im - u.im * self.w2.re) / det;
        let b = (self.w1.re * u.im - self.w1.im * u.re) / det;
        (a, b)
    }

    /// Reduce `u` into the fundamental cell centered at the origin.
    /// Returns the reduced point together with the integers `(n, m)` such
    /// that `u = reduced + n w1 + m w2`.
    pub fn reduce(&self, u: C64) -> (C64, i64, i64) {
        let (a, b) = self.coords(u);
        let n = a.round();
        let m = b.round();
        (u - n * self.w1 - m * self.w2, n as i64, m as i64)
    }

    /// Distance from `u` to the nearest lattice point.  Rounding in a
    /// skew basis can miss the closest point, so the immediate neighbor
    /// shifts are scanned as well.
    pub fn dist_to_lattice(&self, u: C64) -> f64 {
        let (r, _, _) = self.reduce(u);
        let mut best = f64::INFINITY;
        for dn in -1..=1 {
            for dm in -1..=1 {
                let shifted = r - f64::from(dn) * self.w1 - f64::from(dm) * self.w2;
                best = best.min(shifted.norm());
            }
        }
        best
    }

    /// The shorter generator length; a natural length scale for
    /// congruence tolerances.
    pub fn min_period(&self) -> f64 {
        self.w1.norm().min(self.w2.norm())
    }
}
