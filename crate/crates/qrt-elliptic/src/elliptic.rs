//! The odd theta function, the Weierstrass sigma function through the
//! theta connection, quasi-period constants, Eisenstein lattice
//! invariants, and the order-2 elliptic factor pair that parametrizes a
//! normalized biquadratic curve.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::proj::{C64, ProjCoord};
use std::f64::consts::PI;

/// Relative truncation target for the theta q-series.
const SERIES_TOL: f64 = 1e-17;
/// Hard cap on theta series terms; the nome guard in [`Lattice::new`]
/// keeps convergence well inside this.
const SERIES_MAX: usize = 64;

/// `q^s = exp(i pi tau s)`, with the branch pinned by `tau` rather than
/// by a principal logarithm of the nome.
fn q_pow(tau: C64, s: f64) -> C64 {
    (C64::new(0.0, PI) * tau * s).exp()
}

/// The odd theta function
/// `theta1(z | tau) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) z)`.
///
/// The argument is first reduced to `z = z0 + k pi + m pi tau` with `z0`
/// in the fundamental strip, and the quasi-periodicity factor
/// `(-1)^{k+m} q^{-m^2} exp(-2 i m z0)` re-applied; this keeps the series
/// uniformly fast for any argument.
pub fn theta1(z: C64, tau: C64) -> C64 {
    let m = (z.im / (PI * tau.im)).round();
    let zp = z - m * PI * tau;
    let k = (zp.re / PI).round();
    let z0 = zp - k * PI;

    let mut sum = C64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    let mut small = 0usize;
    for n in 0..SERIES_MAX {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * q_pow(tau, (nf + 0.5) * (nf + 0.5)) * ((2.0 * nf + 1.0) * z0).sin();
        sum += term;
        peak = peak.max(sum.norm());
        if term.norm() <= SERIES_TOL * peak.max(f64::MIN_POSITIVE) {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    let parity = if (k + m).rem_euclid(2.0) < 0.5 { 1.0 } else { -1.0 };
    let factor = parity * q_pow(tau, -m * m) * (C64::new(0.0, -2.0 * m) * z0).exp();
    2.0 * factor * sum
}

/// First and third derivatives of `theta1` at `z = 0`:
/// `theta1'(0) = 2 sum (-1)^n q^{(n+1/2)^2} (2n+1)` and
/// `theta1'''(0) = -2 sum (-1)^n q^{(n+1/2)^2} (2n+1)^3`.
pub fn theta1_derivs_at_zero(tau: C64) -> (C64, C64) {
    let mut d1 = C64::new(0.0, 0.0);
    let mut d3 = C64::new(0.0, 0.0);
    for n in 0..SERIES_MAX {
        let nf = n as f64;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let base = sign * q_pow(tau, (nf + 0.5) * (nf + 0.5));
        let odd = 2.0 * nf + 1.0;
        d1 += base * odd;
        d3 += base * (odd * odd * odd);
        if (base * odd * odd * odd).norm() < 1e-18 * d1.norm().max(1.0) && n > 2 {
            break;
        }
    }
    (2.0 * d1, -2.0 * d3)
}

/// Quasi-period constants for an oriented generator pair
/// (`Im(w2/w1) > 0`): `eta1 = -pi^2 theta1'''(0) / (6 w1 theta1'(0))`,
/// with `eta2` pinned by the relation `eta1 w2 - eta2 w1 = i pi`.
pub(crate) fn eta_constants(w1: C64, w2: C64, tau: C64) -> Result<(C64, C64)> {
    let (d1, d3) = theta1_derivs_at_zero(tau);
    if d1.norm() < 1e-300 {
        return Err(Error::DegenerateLattice);
    }
    let eta1 = -(PI * PI) / (6.0 * w1) * (d3 / d1);
    let eta2 = (eta1 * w2 - C64::new(0.0, PI)) / w1;
    Ok((eta1, eta2))
}

/// Evaluator for the Weierstrass sigma function of a lattice, through
/// the connection
/// `sigma(u) = (w1 / (pi theta1'(0))) exp(eta1 u^2 / w1) theta1(pi u / w1 | tau)`.
///
/// Arguments are reduced into the fundamental cell first and the
/// quasi-periodicity factor re-applied, so evaluation stays stable far
/// from the origin.  Instances are immutable after construction and the
/// evaluation calls are pure.
#[derive(Debug, Clone)]
pub struct SigmaEvaluator {
    pub lattice: Lattice,
    prefactor: C64,
}

impl SigmaEvaluator {
    pub fn new(lattice: Lattice) -> Result<Self> {
        let (d1, _) = theta1_derivs_at_zero(lattice.tau);
        if d1.norm() < 1e-300 {
            return Err(Error::DegenerateLattice);
        }
        Ok(SigmaEvaluator {
            prefactor: lattice.w1 / (PI * d1),
            lattice,
        })
    }

    /// Sigma at an argument already inside (or near) the fundamental cell.
    fn sigma_reduced(&self, u: C64) -> C64 {
        self.prefactor
            * (self.lattice.eta1 * u * u / self.lattice.w1).exp()
            * theta1(PI * u / self.lattice.w1, self.lattice.tau)
    }

    /// The Weierstrass sigma function of the lattice.
    pub fn sigma(&self, u: C64) -> C64 {
        let (u0, n, m) = self.lattice.reduce(u);
        let base = self.sigma_reduced(u0);
        if n == 0 && m == 0 {
            return base;
        }
        let nf = n as f64;
        let mf = m as f64;
        let omega = nf * self.lattice.w1 + mf * self.lattice.w2;
        let eta = nf * self.lattice.eta1 + mf * self.lattice.eta2;
        let parity = if (n + m + n * m).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        parity * (2.0 * eta * (u0 + 0.5 * omega)).exp() * base
    }
}

/// Lattice invariants `(g2, g3)` from the Eisenstein series
/// `E4 = 1 + 240 sum sigma_3(k) Q^k` and `E6 = 1 - 504 sum sigma_5(k) Q^k`
/// with `Q = exp(2 pi i tau)`:
/// `g2 = (2 pi / w1)^4 E4 / 12`, `g3 = (2 pi / w1)^6 E6 / 216`.
pub fn lattice_invariants(lat: &Lattice) -> (C64, C64) {
    let big_q = lat.q_nome * lat.q_nome;
    let mut e4 = C64::new(1.0, 0.0);
    let mut e6 = C64::new(1.0, 0.0);
    let mut qk = C64::new(1.0, 0.0);
    for k in 1..=4000usize {
        qk *= big_q;
        let mut s3 = 0.0f64;
        let mut s5 = 0.0f64;
        for d in 1..=k {
            if k % d == 0 {
                let df = d as f64;
                s3 += df * df * df;
                s5 += df * df * df * df * df;
            }
        }
        let t6 = 504.0 * s5 * qk;
        e4 += 240.0 * s3 * qk;
        e6 -= t6;
        if t6.norm() < 1e-18 * e6.norm() && k > 4 {
            break;
        }
    }
    let f = 2.0 * PI / lat.w1;
    let f2 = f * f;
    let f4 = f2 * f2;
    (f4 * e4 / 12.0, f4 * f2 * e6 / 216.0)
}

/// The balanced four-point sigma ratio
/// `F(u) = sigma(u-a) sigma(u-b) / (sigma(u-g) sigma(u-d))`,
/// doubly periodic exactly when `a + b = g + d`, returned projectively
/// so poles come out as the infinite coordinate.
pub fn f_factor_proj(
    u: C64,
    a: C64,
    b: C64,
    g: C64,
    d: C64,
    ev: &SigmaEvaluator,
) -> Result<ProjCoord> {
    let scale = 1.0 + a.norm() + b.norm() + g.norm() + d.norm();
    if (a + b - g - d).norm() > 1e-10 * scale {
        return Err(Error::ImbalancedFactor);
    }
    // Double periodicity makes reduction exact, and it keeps every sigma
    // argument within a few cells of the origin.
    let (u0, _, _) = ev.lattice.reduce(u);
    let num = ev.sigma(u0 - a) * ev.sigma(u0 - b);
    let den = ev.sigma(u0 - g) * ev.sigma(u0 - d);
    Ok(ProjCoord::new(num, den))
}

/// Scalar form of [`f_factor_proj`]; a pole (argument congruent to `g`
/// or `d` mod the lattice) is an error here.
pub fn f_factor(u: C64, a: C64, b: C64, g: C64, d: C64, ev: &SigmaEvaluator) -> Result<C64> {
    let v = f_factor_proj(u, a, b, g, d, ev)?;
    v.value().ok_or(Error::PoleAtU)
}

/// Parameters of the two order-2 elliptic factors embedding a normalized
/// biquadratic curve: zeros/poles (`e1`, `e2`, `hx`, `hy`) and the two
/// multiplicative coefficients.
#[derive(Debug, Clone)]
pub struct EmbeddingParams {
    pub e1: C64,
    pub e2: C64,
    pub hx: C64,
    pub hy: C64,
    pub c1: C64,
    pub c2: C64,
}

/// `F12(u) = sigma(u-e2) sigma(u-hx+e2) / (sigma(u-e1) sigma(u-hx+e1))`.
pub fn f12_proj(u: C64, p: &EmbeddingParams, ev: &SigmaEvaluator) -> Result<ProjCoord> {
    f_factor_proj(u, p.e2, p.hx - p.e2, p.e1, p.hx - p.e1, ev)
}

/// `G12(u) = sigma(u-e2) sigma(u-hy+e2) / (sigma(u-e1) sigma(u-hy+e1))`.
pub fn g12_proj(u: C64, p: &EmbeddingParams, ev: &SigmaEvaluator) -> Result<ProjCoord> {
    f_factor_proj(u, p.e2, p.hy - p.e2, p.e1, p.hy - p.e1, ev)
}

/// Scalar [`f12_proj`]; poles are errors.
pub fn f12(u: C64, p: &EmbeddingParams, ev: &SigmaEvaluator) -> Result<C64> {
    f12_proj(u, p, ev)?.value().ok_or(Error::PoleAtU)
}

/// Scalar [`g12_proj`]; poles are errors.
pub fn g12(u: C64, p: &EmbeddingParams, ev: &SigmaEvaluator) -> Result<C64> {
    g12_proj(u, p, ev)?.value().ok_or(Error::PoleAtU)
}
