//! Analysis of a single biquadratic curve: the discriminant quartic of its
//! projection to the `x`-line, the Eisenstein invariants `g2`, `g3` and the
//! smoothness gate, and the Moebius normalization that places one curve
//! point at `(0, 0)` and another at `(infinity, infinity)`.
//!
//! On a normalized curve (vanishing corner coefficients) the four auxiliary
//! marked points — the second intersections of the curve with the lines
//! `x = 0`, `y = 0`, `x = infinity`, `y = infinity` — are simple coefficient
//! ratios, and the whole later construction of the closed form hangs off
//! them.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::proj::{C64, ProjCoord, ProjPoint};
use crate::qrt::Biquadratic;

/// Relative size below which a coefficient counts as absent.
const COEFF_ZERO_TOL: f64 = 1e-8;

/// Relative discriminant threshold of the smoothness gate.
const SMOOTH_REL_TOL: f64 = 1e-8;

/// A quartic polynomial `c[0] + c[1] x + ... + c[4] x^4`.
#[derive(Clone, Debug)]
pub struct Quartic {
    pub c: [C64; 5],
}

impl Quartic {
    pub fn eval(&self, x: C64) -> C64 {
        self.c
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &ck| acc * x + ck)
    }

    pub fn scale(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn as_poly(&self) -> Poly {
        Poly::new(self.c.to_vec())
    }

    /// The four roots (fewer if the leading coefficients vanish).
    pub fn roots(&self) -> Result<Vec<C64>> {
        self.as_poly().roots(1e-12)
    }
}

/// Discriminant of the curve read as a quadratic in `y`:
/// `Delta(x) = beta(x)^2 - 4 alpha(x) gamma(x)`, a polynomial of degree at
/// most four whose roots are the branch points of the projection
/// `(x, y) -> x` restricted to the curve.
pub fn partial_discriminant(curve: &Biquadratic) -> Result<Quartic> {
    // Row j of the coefficient matrix, as the quadratic-in-x coefficient of
    // y^(2-j): r_j(x) = c[0][j] x^2 + c[1][j] x + c[2][j].
    let r = |j: usize| [curve.c[2][j], curve.c[1][j], curve.c[0][j]];
    let alpha = r(0);
    let beta = r(1);
    let gamma = r(2);
    let ascale = alpha.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if ascale <= 1e-12 * curve.scale() {
        return Err(Error::NotBiquadraticInY);
    }
    // beta^2 - 4 alpha gamma by convolution of the degree-2 rows.
    let mut c = [C64::new(0.0, 0.0); 5];
    for i in 0..3 {
        for j in 0..3 {
            c[i + j] += beta[i] * beta[j] - 4.0 * alpha[i] * gamma[j];
        }
    }
    Ok(Quartic { c })
}

/// The modular invariants of a binary quartic.
#[derive(Clone, Copy, Debug)]
pub struct Invariants {
    pub g2: C64,
    pub g3: C64,
    /// `g2^3 - 27 g3^2`; vanishes exactly when the quartic has a repeated
    /// root (counting the root at infinity when the degree drops by two).
    pub delta: C64,
}

/// Eisenstein's invariants of the quartic `c0 + c1 x + ... + c4 x^4`.
pub fn eisenstein_invariants(q: &Quartic) -> Invariants {
    let [c0, c1, c2, c3, c4] = q.c;
    let g2 = c0 * c4 - c1 * c3 / 4.0 + c2 * c2 / 12.0;
    let g3 = -(c0 * c3 * c3 / 16.0 + c1 * c1 * c4 / 16.0
        - c0 * c2 * c4 / 6.0
        - c1 * c2 * c3 / 48.0
        + c2 * c2 * c2 / 216.0);
    let delta = g2 * g2 * g2 - 27.0 * g3 * g3;
    Invariants { g2, g3, delta }
}

/// Outcome of the smoothness test for a biquadratic curve.
#[derive(Clone, Copy, Debug)]
pub struct SmoothnessGate {
    pub invariants: Invariants,
    pub delta_abs: f64,
    /// Comparison scale: the discriminant is homogeneous of degree twelve in
    /// the curve coefficients, so the threshold is relative to `scale^12`.
    pub threshold: f64,
    pub smooth: bool,
}

/// Evaluate the smoothness gate: the curve is accepted as a smooth elliptic
/// curve when the modular discriminant of its branch quartic is nonzero
/// relative to the curve's coefficient size.
pub fn smoothness_gate(curve: &Biquadratic) -> Result<SmoothnessGate> {
    let s = curve.scale();
    if s == 0.0 {
        return Err(Error::Numerical("zero curve".into()));
    }
    let quartic = partial_discriminant(curve)?;
    let invariants = eisenstein_invariants(&quartic);
    let delta_abs = invariants.delta.norm();
    let threshold = SMOOTH_REL_TOL * s.powi(12);
    Ok(SmoothnessGate {
        invariants,
        delta_abs,
        threshold,
        smooth: delta_abs >= threshold,
    })
}

/// Like [`smoothness_gate`], but an error when the curve is singular.
pub fn require_smooth(curve: &Biquadratic) -> Result<Invariants> {
    let gate = smoothness_gate(curve)?;
    if !gate.smooth {
        return Err(Error::CurveNotSmooth {
            delta_abs: gate.delta_abs,
            threshold: gate.threshold,
        });
    }
    Ok(gate.invariants)
}

// ---------------------------------------------------------------------------
// Moebius transforms.

/// A pair of Moebius transforms acting independently on the two coordinates.
///
/// Each 2x2 matrix acts on homogeneous coordinate pairs `(num, den)`.
#[derive(Clone, Debug)]
pub struct MoebiusPair {
    pub mx: [[C64; 2]; 2],
    pub my: [[C64; 2]; 2],
}

fn moebius_to_zero_inf(zero: &ProjCoord, inf: &ProjCoord) -> Result<[[C64; 2]; 2]> {
    let one = C64::new(1.0, 0.0);
    let o = C64::new(0.0, 0.0);
    match (zero.value(), inf.value()) {
        (Some(a2), Some(a1)) => {
            if (a1 - a2).norm() <= 1e-12 * (1.0 + a1.norm() + a2.norm()) {
                return Err(Error::DegenerateTransform {
                    reason: "coincident marked coordinates".into(),
                });
            }
            Ok([[one, -a2], [one, -a1]])
        }
        // Send infinity to infinity: a plain shift.
        (Some(a2), None) => Ok([[one, -a2], [o, one]]),
        // Send infinity to zero: a shifted reciprocal.
        (None, Some(a1)) => Ok([[o, one], [one, -a1]]),
        (None, None) => Err(Error::DegenerateTransform {
            reason: "both marked coordinates infinite".into(),
        }),
    }
}

fn apply_matrix(m: &[[C64; 2]; 2], c: &ProjCoord) -> ProjCoord {
    let n = c.normalized();
    ProjCoord::new(m[0][0] * n.num + m[0][1] * n.den, m[1][0] * n.num + m[1][1] * n.den)
        .normalized()
}

impl MoebiusPair {
    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let o = C64::new(0.0, 0.0);
        MoebiusPair {
            mx: [[one, o], [o, one]],
            my: [[one, o], [o, one]],
        }
    }

    /// The transform sending `p_zero` to `(0, 0)` and `p_inf` to
    /// `(infinity, infinity)`, coordinatewise.
    pub fn sending(p_zero: &ProjPoint, p_inf: &ProjPoint) -> Result<Self> {
        Ok(MoebiusPair {
            mx: moebius_to_zero_inf(&p_zero.x, &p_inf.x)?,
            my: moebius_to_zero_inf(&p_zero.y, &p_inf.y)?,
        })
    }

    pub fn apply_x(&self, c: &ProjCoord) -> ProjCoord {
        apply_matrix(&self.mx, c)
    }

    pub fn apply_y(&self, c: &ProjCoord) -> ProjCoord {
        apply_matrix(&self.my, c)
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        ProjPoint::new(self.apply_x(&p.x), self.apply_y(&p.y))
    }

    /// The inverse pair (adjugate matrices; projective, so the determinant
    /// scaling is irrelevant).
    pub fn inverse(&self) -> MoebiusPair {
        let adj = |m: &[[C64; 2]; 2]| [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
        MoebiusPair {
            mx: adj(&self.mx),
            my: adj(&self.my),
        }
    }

    pub fn is_identity(&self) -> bool {
        let id = |m: &[[C64; 2]; 2]| {
            m[0][0] == C64::new(1.0, 0.0)
                && m[1][1] == C64::new(1.0, 0.0)
                && m[0][1] == C64::new(0.0, 0.0)
                && m[1][0] == C64::new(0.0, 0.0)
        };
        id(&self.mx) && id(&self.my)
    }
}

/// The curve in the coordinates `(x', y') = pair(x, y)`: same point set,
/// new coefficient matrix.  Exact (the new coefficients are obtained by
/// interpolating the transformed polynomial on a 3x3 grid).
pub fn moebius_transform(curve: &Biquadratic, pair: &MoebiusPair) -> Biquadratic {
    let inv = pair.inverse();
    // Homogeneous pair for the original coordinate at a new-coordinate node
    // t: the matrix action on (t, 1) is linear, so the homogenized curve
    // value is a genuine biquadratic polynomial in the new coordinates.
    let hom = |m: &[[C64; 2]; 2], t: C64| {
        let n = m[0][0] * t + m[0][1];
        let d = m[1][0] * t + m[1][1];
        [n * n, n * d, d * d]
    };
    let one = C64::new(1.0, 0.0);
    let nodes = [C64::new(0.0, 0.0), one, -one];
    let mut values = [[C64::new(0.0, 0.0); 3]; 3];
    for (r, &xn) in nodes.iter().enumerate() {
        let xv = hom(&inv.mx, xn);
        for (s, &yn) in nodes.iter().enumerate() {
            let yv = hom(&inv.my, yn);
            values[r][s] = crate::qrt::bilinear(&xv, &curve.c, &yv);
        }
    }
    // Interpolate on nodes {0, 1, -1}: f = a0 + a1 t + a2 t^2 with
    // a0 = f(0), a1 = (f(1) - f(-1)) / 2, a2 = (f(1) + f(-1)) / 2 - f(0).
    let interp = |f0: C64, f1: C64, fm: C64| [f0, (f1 - fm) / 2.0, (f1 + fm) / 2.0 - f0];
    let mut wx = [[C64::new(0.0, 0.0); 3]; 3]; // wx[p][s]: x'^p coeff at y-node s
    for s in 0..3 {
        let a = interp(values[0][s], values[1][s], values[2][s]);
        for p in 0..3 {
            wx[p][s] = a[p];
        }
    }
    let mut c = [[C64::new(0.0, 0.0); 3]; 3];
    for p in 0..3 {
        let a = interp(wx[p][0], wx[p][1], wx[p][2]);
        for (q, &aq) in a.iter().enumerate() {
            c[2 - p][2 - q] = aq;
        }
    }
    Biquadratic { c }
}

// ---------------------------------------------------------------------------
// Marked points of a normalized curve.

/// The auxiliary marked coordinates of a normalized curve: the second
/// intersections with the four coordinate lines.
///
/// With `a_ij` the coefficient of `x^i y^j` and vanishing corners
/// `a00 = a22 = 0`, the curve meets `x = 0` at `y = 0` and `y = y2`; `y = 0`
/// at `x = 0` and `x = x2`; `y = infinity` at `x = infinity` and `x = x1`;
/// `x = infinity` at `y = infinity` and `y = y1`.
#[derive(Clone, Copy, Debug)]
pub struct MarkedValues {
    pub x2: C64,
    pub y2: C64,
    pub x1: C64,
    pub y1: C64,
}

/// Extract the marked values from a normalized curve, checking every
/// genericity condition the later stages rely on: the six boundary
/// coefficients are present, the marked values are distinct, and neither
/// `x2` nor `x1` is a branch point of the `x`-projection.
pub fn marked_values(curve: &Biquadratic) -> Result<MarkedValues> {
    let s = curve.scale();
    let tol = COEFF_ZERO_TOL * s;
    let corner_ok = curve.coeff_xy(0, 0).norm() <= tol && curve.coeff_xy(2, 2).norm() <= tol;
    if !corner_ok {
        return Err(Error::DegenerateTransform {
            reason: "curve is not normalized (corner coefficients present)".into(),
        });
    }
    let need = |i: usize, j: usize, name: &str| -> Result<C64> {
        let a = curve.coeff_xy(i, j);
        if a.norm() <= tol {
            Err(Error::DegenerateTransform {
                reason: format!("coefficient {name} vanishes"),
            })
        } else {
            Ok(a)
        }
    };
    let a10 = need(1, 0, "of x")?;
    let a20 = need(2, 0, "of x^2")?;
    let a01 = need(0, 1, "of y")?;
    let a02 = need(0, 2, "of y^2")?;
    let a12 = need(1, 2, "of x y^2")?;
    let a21 = need(2, 1, "of x^2 y")?;
    let mv = MarkedValues {
        x2: -a10 / a20,
        y2: -a01 / a02,
        x1: -a02 / a12,
        y1: -a20 / a21,
    };
    let distinct = |u: C64, v: C64| (u - v).norm() > 1e-8 * (1.0 + u.norm() + v.norm());
    if !distinct(mv.x2, mv.x1) || !distinct(mv.y2, mv.y1) {
        return Err(Error::DegenerateTransform {
            reason: "marked coordinates coincide".into(),
        });
    }
    // The marked x-values must avoid the ramification of the x-projection:
    // at x2 and x1 the curve's y-discriminant equals beta^2, so it suffices
    // that beta is nonzero there.
    for (x, name) in [(mv.x2, "x2"), (mv.x1, "x1")] {
        let (_, beta, _) = curve.y_coeffs(x);
        if beta.norm() <= COEFF_ZERO_TOL * s * (1.0 + x.norm()).powi(2) {
            return Err(Error::DegenerateTransform {
                reason: format!("marked point at {name} is a branch point"),
            });
        }
    }
    Ok(mv)
}

/// Transform the curve by the pair sending the two given on-curve points to
/// `(0, 0)` and `(infinity, infinity)`, verify the result is normalized,
/// and zero out the corner coefficients exactly.
pub fn moebius_normalize(
    curve: &Biquadratic,
    p_zero: &ProjPoint,
    p_inf: &ProjPoint,
) -> Result<(Biquadratic, MoebiusPair)> {
    let pair = MoebiusPair::sending(p_zero, p_inf)?;
    let mut out = moebius_transform(curve, &pair);
    let s = out.scale();
    let c00 = out.coeff_xy(2, 2).norm();
    let c22 = out.coeff_xy(0, 0).norm();
    if c00 > COEFF_ZERO_TOL * s || c22 > COEFF_ZERO_TOL * s {
        return Err(Error::DegenerateTransform {
            reason: "marked points do not lie on the curve".into(),
        });
    }
    out.c[0][0] = C64::new(0.0, 0.0);
    out.c[2][2] = C64::new(0.0, 0.0);
    marked_values(&out)?;
    Ok((out, pair))
}

// ---------------------------------------------------------------------------
// Choosing marked points.

/// A normalized presentation of a smooth biquadratic curve.
#[derive(Clone, Debug)]
pub struct NormalizedCurve {
    /// The curve in the new coordinates, corners exactly zero.
    pub curve: Biquadratic,
    /// Original coordinates -> normalized coordinates.
    pub transform: MoebiusPair,
    /// Preimage of `(0, 0)`.
    pub p_zero: ProjPoint,
    /// Preimage of `(infinity, infinity)`.
    pub p_inf: ProjPoint,
    pub marked: MarkedValues,
}

/// Quasi-random point of the two-dimensional low-discrepancy sequence built
/// on the plastic constant.
pub(crate) fn r2_point(k: u64) -> (f64, f64) {
    const G: f64 = 1.324_717_957_244_746;
    let a1 = 1.0 / G;
    let a2 = 1.0 / (G * G);
    let kf = (k & 0xFFFF_FFFF) as f64;
    ((0.5 + a1 * kf).fract(), (0.5 + a2 * kf).fract())
}

/// Find a pair of curve points whose normalization satisfies all the
/// genericity guards, preferring the canonical pair `((0,0), (inf,inf))`
/// when the curve is already normalized.
///
/// The search is deterministic: candidate `x`-values come from a
/// low-discrepancy sequence (offset by `seed`) in a disc around the
/// centroid of the branch quartic's roots, and candidate pairs are tried in
/// a fixed order.
pub fn choose_marked_points(curve: &Biquadratic, seed: u64) -> Result<(ProjPoint, ProjPoint)> {
    let s = curve.scale();
    let tol = COEFF_ZERO_TOL * s;
    // Already normalized: keep the canonical pair if every guard holds.
    if curve.coeff_xy(0, 0).norm() <= tol && curve.coeff_xy(2, 2).norm() <= tol {
        let mut canon = curve.clone();
        canon.c[0][0] = C64::new(0.0, 0.0);
        canon.c[2][2] = C64::new(0.0, 0.0);
        if marked_values(&canon).is_ok() {
            let zero = ProjPoint::finite(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            let inf = ProjPoint::new(ProjCoord::infinity(), ProjCoord::infinity());
            return Ok((zero, inf));
        }
    }

    let quartic = partial_discriminant(curve)?;
    let centroid = if quartic.c[4].norm() > 1e-12 * quartic.scale() {
        -quartic.c[3] / (4.0 * quartic.c[4])
    } else {
        C64::new(0.0, 0.0)
    };

    // Curve points over quasi-random x-values.
    let mut candidates: Vec<ProjPoint> = Vec::new();
    let mut j = 0u64;
    while candidates.len() < 20 && j < 64 {
        let (u, v) = r2_point(seed.wrapping_mul(977).wrapping_add(j));
        j += 1;
        let x = centroid
            + 2.0 * u.sqrt() * C64::new(0.0, 2.0 * std::f64::consts::PI * v).exp();
        let (alpha, beta, gamma) = curve.y_coeffs(x);
        if alpha.norm() <= 1e-10 * s * (1.0 + x.norm()).powi(2) {
            continue;
        }
        let disc = (beta * beta - 4.0 * alpha * gamma).sqrt();
        for sign in [1.0, -1.0] {
            let y = (-beta + sign * disc) / (2.0 * alpha);
            candidates.push(ProjPoint::finite(x, y));
        }
    }

    let mut tried = 0usize;
    for i in 0..candidates.len() {
        for k in 0..candidates.len() {
            if i == k {
                continue;
            }
            tried += 1;
            if tried > 200 {
                return Err(Error::ExhaustedSearch { tried });
            }
            if moebius_normalize(curve, &candidates[i], &candidates[k]).is_ok() {
                return Ok((candidates[i], candidates[k]));
            }
        }
    }
    Err(Error::ExhaustedSearch { tried })
}

/// One-stop normalization: choose marked points (seeded), transform, and
/// package the result.
pub fn normalize_curve(curve: &Biquadratic, seed: u64) -> Result<NormalizedCurve> {
    let (p_zero, p_inf) = choose_marked_points(curve, seed)?;
    let (normalized, transform) = moebius_normalize(curve, &p_zero, &p_inf)?;
    let marked = marked_values(&normalized)?;
    Ok(NormalizedCurve {
        curve: normalized,
        transform,
        p_zero,
        p_inf,
        marked,
    })
}
