//! Dense univariate polynomials over `C` with companion-matrix root finding.
//!
//! Degrees in this crate never exceed eight (the base-point resolvent), so a
//! dense coefficient vector plus one Schur decomposition per solve is both
//! simple and accurate.  Roots are polished with a few Newton steps after the
//! eigenvalue sweep.

use crate::error::{Error, Result};
use crate::proj::C64;
use nalgebra::DMatrix;

/// Coefficients in ascending order: `c[k]` multiplies `x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub c: Vec<C64>,
}

impl Poly {
    pub fn new(c: Vec<C64>) -> Self {
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: vec![] }
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn scale(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Degree after dropping leading coefficients below `rel_eps * scale`.
    /// Returns `None` for the (numerically) zero polynomial.
    pub fn effective_degree(&self, rel_eps: f64) -> Option<usize> {
        let s = self.scale();
        if s == 0.0 {
            return None;
        }
        let cut = rel_eps * s;
        self.c.iter().rposition(|z| z.norm() > cut)
    }

    /// A copy trimmed to its effective degree.
    pub fn trimmed(&self, rel_eps: f64) -> Poly {
        match self.effective_degree(rel_eps) {
            None => Poly::zero(),
            Some(d) => Poly::new(self.c[..=d].to_vec()),
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &ck in self.c.iter().rev() {
            acc = acc * x + ck;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.c[1..]
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * ((k + 1) as f64))
                .collect(),
        )
    }

    /// Product by convolution.
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.c.is_empty() || other.c.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in other.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.c.len().max(other.c.len());
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (k, slot) in out.iter_mut().enumerate() {
            let a = self.c.get(k).copied().unwrap_or_else(|| C64::new(0.0, 0.0));
            let b = other.c.get(k).copied().unwrap_or_else(|| C64::new(0.0, 0.0));
            *slot = a - b;
        }
        Poly::new(out)
    }

    pub fn scaled(&self, s: C64) -> Poly {
        Poly::new(self.c.iter().map(|&z| z * s).collect())
    }

    /// All roots of the effective-degree polynomial, with multiplicity, in
    /// no particular order.  The number of returned roots equals the
    /// effective degree; callers tracking roots at infinity compare that to
    /// the nominal degree themselves.
    ///
    /// Roots come from the eigenvalues of the Frobenius companion matrix and
    /// are then polished with Newton steps while the residual improves.
    pub fn roots(&self, rel_eps: f64) -> Result<Vec<C64>> {
        let p = self.trimmed(rel_eps);
        let deg = match p.effective_degree(0.0) {
            None => return Ok(vec![]),
            Some(0) => return Ok(vec![]),
            Some(d) => d,
        };
        if deg == 1 {
            return Ok(vec![-p.c[0] / p.c[1]]);
        }
        // Monic normalization, then the companion matrix with the negated
        // coefficients in its last column.
        let lead = p.c[deg];
        let monic: Vec<C64> = p.c[..deg].iter().map(|&z| z / lead).collect();
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let mut m = DMatrix::from_element(deg, deg, zero);
        for i in 0..deg {
            m[(i, deg - 1)] = -monic[i];
            if i + 1 < deg {
                m[(i + 1, i)] = one;
            }
        }
        let schur = m.try_schur(1e-14, 20_000).ok_or(Error::EigenFailure)?;
        let eigs = schur.eigenvalues().ok_or(Error::EigenFailure)?;
        let dp = p.derivative();
        let mut out = Vec::with_capacity(deg);
        for &e in eigs.iter() {
            out.push(polish_root(&p, &dp, e));
        }
        Ok(out)
    }
}

/// A few Newton steps, kept only while they shrink the residual.
fn polish_root(p: &Poly, dp: &Poly, mut z: C64) -> C64 {
    let mut best = z;
    let mut best_res = p.eval(z).norm();
    for _ in 0..12 {
        let d = dp.eval(z);
        if d.norm() < 1e-300 {
            break;
        }
        z -= p.eval(z) / d;
        let res = p.eval(z).norm();
        if res < best_res {
            best_res = res;
            best = z;
        } else {
            break;
        }
    }
    best
}

/// Greedy clustering of points at an absolute-plus-relative tolerance;
/// returns `(representative, count)` pairs.  Used to assign multiplicities
/// to nearly coincident roots.
pub fn cluster(points: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    // Sort for deterministic cluster representatives.
    let mut sorted: Vec<C64> = points.to_vec();
    sorted.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for &z in &sorted {
        let mut placed = false;
        for (rep, count) in clusters.iter_mut() {
            if (z - *rep).norm() <= tol * (1.0 + rep.norm()) {
                // Running mean keeps the representative centered.
                let n = *count as f64;
                *rep = (*rep * n + z) / (n + 1.0);
                *count += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push((z, 1));
        }
    }
    clusters
}
