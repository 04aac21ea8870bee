//! The QRT map: a pencil of biquadratic curves and the composition of its
//! two coordinate switches.
//!
//! A map is given by two complex 3x3 matrices `A`, `B`.  With the Veronese
//! vectors `x = (x^2, x, 1)^T` and `y = (y^2, y, 1)^T`, the pencil is
//!
//! ```text
//! P(x, y; K) = x^T A y + K * x^T B y = 0 .
//! ```
//!
//! For fixed `y`, `P` is a quadratic in `x` whose two roots are swapped by
//! the horizontal switch; the vertical switch does the same in `y`.  Both
//! switches are expressed through cross products of the matrix images of the
//! Veronese vectors, which eliminates `K` and makes them globally defined
//! rational involutions.  The map is the composition: horizontal switch
//! first, then vertical.

use crate::error::{Error, Result};
use crate::poly::{cluster, Poly};
use crate::proj::{C64, ProjCoord, ProjPoint};

/// Relative threshold below which a pencil form value counts as zero.
const FORM_ZERO_TOL: f64 = 1e-12;

/// Cluster tolerance for base-point multiplicities.
const BASE_CLUSTER_TOL: f64 = 1e-6;

/// Normalized residual bound accepted for a polished base point.
const BASE_RESIDUAL_TOL: f64 = 1e-8;

/// A QRT map, determined by the two coefficient matrices of its pencil.
#[derive(Clone, Debug)]
pub struct QrtMap {
    pub a: [[C64; 3]; 3],
    pub b: [[C64; 3]; 3],
}

/// One member of the pencil: a single biquadratic curve.
///
/// Convention: `c[i][j]` multiplies `x^(2-i) * y^(2-j)`, so `c[0][0]` is the
/// `x^2 y^2` coefficient and `c[2][2]` the constant term, matching the
/// matrix form `x^T C y` with Veronese vectors.
#[derive(Clone, Debug)]
pub struct Biquadratic {
    pub c: [[C64; 3]; 3],
}

impl Biquadratic {
    pub fn new(c: [[C64; 3]; 3]) -> Self {
        Biquadratic { c }
    }

    /// Coefficient of `x^i y^j` (power indexing).
    pub fn coeff_xy(&self, i: usize, j: usize) -> C64 {
        self.c[2 - i][2 - j]
    }

    /// Largest coefficient magnitude.
    pub fn scale(&self) -> f64 {
        mat_scale(&self.c)
    }

    /// Value at a finite point.
    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let xv = [x * x, x, C64::new(1.0, 0.0)];
        let yv = [y * y, y, C64::new(1.0, 0.0)];
        bilinear(&xv, &self.c, &yv)
    }

    /// Homogeneous value at a projective point, computed from normalized
    /// coordinate pairs.  Zero exactly when the point lies on the curve;
    /// the magnitude is only meaningful relative to [`Self::scale`].
    pub fn eval_proj(&self, p: &ProjPoint) -> C64 {
        bilinear(&p.x.veronese(), &self.c, &p.y.veronese())
    }

    /// `|eval_proj| / scale`: a dimensionless measure of how far off the
    /// curve a point sits.
    pub fn rel_residual(&self, p: &ProjPoint) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            return f64::NAN;
        }
        self.eval_proj(p).norm() / s
    }

    /// Coefficients `(alpha, beta, gamma)` of `P(x, .) = alpha y^2 + beta y
    /// + gamma` as quadratic polynomials in `x` evaluated at `x`.
    pub fn y_coeffs(&self, x: C64) -> (C64, C64, C64) {
        let xv = [x * x, x, C64::new(1.0, 0.0)];
        let col = |j: usize| xv[0] * self.c[0][j] + xv[1] * self.c[1][j] + xv[2] * self.c[2][j];
        (col(0), col(1), col(2))
    }

    /// Coefficients of `P(., y)` as a quadratic in `x`.
    pub fn x_coeffs(&self, y: C64) -> (C64, C64, C64) {
        let yv = [y * y, y, C64::new(1.0, 0.0)];
        let row = |i: usize| yv[0] * self.c[i][0] + yv[1] * self.c[i][1] + yv[2] * self.c[i][2];
        (row(0), row(1), row(2))
    }

    /// Partial derivative in `x` at a finite point.
    pub fn dx(&self, x: C64, y: C64) -> C64 {
        let dxv = [x * 2.0, C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let yv = [y * y, y, C64::new(1.0, 0.0)];
        bilinear(&dxv, &self.c, &yv)
    }

    /// Partial derivative in `y` at a finite point.
    pub fn dy(&self, x: C64, y: C64) -> C64 {
        let xv = [x * x, x, C64::new(1.0, 0.0)];
        let dyv = [y * 2.0, C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        bilinear(&xv, &self.c, &dyv)
    }

    /// The same curve with the roles of `x` and `y` exchanged.
    pub fn transposed(&self) -> Biquadratic {
        Biquadratic {
            c: transpose(&self.c),
        }
    }

    /// The curve rewritten in the chart `x -> 1/x` and/or `y -> 1/y`
    /// (multiplied through by `x^2` resp. `y^2`): reversing rows swaps the
    /// `x`-powers, reversing columns the `y`-powers.
    pub fn chart(&self, invert_x: bool, invert_y: bool) -> Biquadratic {
        let mut c = self.c;
        if invert_x {
            c.swap(0, 2);
        }
        if invert_y {
            for row in c.iter_mut() {
                row.swap(0, 2);
            }
        }
        Biquadratic { c }
    }
}

// ---------------------------------------------------------------------------
// Small dense matrix helpers.

pub(crate) fn mat_scale(m: &[[C64; 3]; 3]) -> f64 {
    m.iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub(crate) fn transpose(m: &[[C64; 3]; 3]) -> [[C64; 3]; 3] {
    let mut t = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[j][i] = m[i][j];
        }
    }
    t
}

pub(crate) fn mat_vec(m: &[[C64; 3]; 3], v: &[C64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

pub(crate) fn bilinear(x: &[C64; 3], m: &[[C64; 3]; 3], y: &[C64; 3]) -> C64 {
    let my = mat_vec(m, y);
    x[0] * my[0] + x[1] * my[1] + x[2] * my[2]
}

pub(crate) fn cross(u: &[C64; 3], v: &[C64; 3]) -> [C64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

// ---------------------------------------------------------------------------
// Pencil evaluation and the invariant.

/// Both pencil forms `x^T A y`, `x^T B y` at a projective point, evaluated
/// homogeneously with the same normalized Veronese vectors (so their ratio
/// is chart-independent).
pub fn pencil_forms(map: &QrtMap, p: &ProjPoint) -> (C64, C64) {
    let xv = p.x.veronese();
    let yv = p.y.veronese();
    (bilinear(&xv, &map.a, &yv), bilinear(&xv, &map.b, &yv))
}

/// The pencil value `P(x, y; K)` at a finite point.
pub fn eval_pencil(map: &QrtMap, p: &ProjPoint, k: C64) -> Result<C64> {
    let (x, y) = p
        .values()
        .ok_or(Error::Numerical("eval_pencil needs a finite point".into()))?;
    let xv = [x * x, x, C64::new(1.0, 0.0)];
    let yv = [y * y, y, C64::new(1.0, 0.0)];
    Ok(bilinear(&xv, &map.a, &yv) + k * bilinear(&xv, &map.b, &yv))
}

/// The value of `K` selecting the pencil member through `p0`:
/// `K = -(x^T A y) / (x^T B y)`, so that `P(x0, y0; K) = 0`.
///
/// Errors with [`Error::InfiniteK`] when `p0` lies on `x^T B y = 0` only
/// (the fixed curve is then the `K = infinity` member; swapping `A` and `B`
/// makes it the `K = 0` member of the same pencil), and with
/// [`Error::DegeneratePoint`] when both forms vanish (a base point).
pub fn compute_k(map: &QrtMap, p0: &ProjPoint) -> Result<C64> {
    let (av, bv) = pencil_forms(map, p0);
    let a_zero = av.norm() <= FORM_ZERO_TOL * mat_scale(&map.a).max(f64::MIN_POSITIVE);
    let b_zero = bv.norm() <= FORM_ZERO_TOL * mat_scale(&map.b).max(f64::MIN_POSITIVE);
    match (a_zero, b_zero) {
        (true, true) => Err(Error::DegeneratePoint),
        (false, true) => Err(Error::InfiniteK),
        _ => Ok(-av / bv),
    }
}

/// The fixed curve `x^T (A + K B) y = 0` as a single biquadratic.
pub fn fix_curve(map: &QrtMap, k: C64) -> Biquadratic {
    let mut c = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = map.a[i][j] + k * map.b[i][j];
        }
    }
    Biquadratic { c }
}

// ---------------------------------------------------------------------------
// The switches and the map.

/// The horizontal switch: `x` is replaced by the other root of the pencil
/// quadratic in `x` through the point; `y` is unchanged.
///
/// With `f = (A y) x (B y)` (cross product of the matrix images of the
/// Veronese vector of `y`):
///
/// ```text
/// x_new = (f1 - f2 x) / (f2 - f3 x) .
/// ```
pub fn switch_x(map: &QrtMap, p: &ProjPoint) -> Result<ProjPoint> {
    let yv = p.y.veronese();
    let u = mat_vec(&map.a, &yv);
    let v = mat_vec(&map.b, &yv);
    let f = cross(&u, &v);
    let xn = p.x.normalized();
    let num = f[0] * xn.den - f[1] * xn.num;
    let den = f[1] * xn.den - f[2] * xn.num;
    let fs = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let out = ProjCoord::new(num, den);
    if out.is_indeterminate(fs) {
        return Err(Error::IndeterminatePoint);
    }
    Ok(ProjPoint::new(out.normalized(), p.y))
}

/// The vertical switch: the mirror of [`switch_x`], with
/// `g = (A^T x) x (B^T x)` acting on `y`.
pub fn switch_y(map: &QrtMap, p: &ProjPoint) -> Result<ProjPoint> {
    let xv = p.x.veronese();
    let u = mat_vec(&transpose(&map.a), &xv);
    let v = mat_vec(&transpose(&map.b), &xv);
    let g = cross(&u, &v);
    let yn = p.y.normalized();
    let num = g[0] * yn.den - g[1] * yn.num;
    let den = g[1] * yn.den - g[2] * yn.num;
    let gs = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let out = ProjCoord::new(num, den);
    if out.is_indeterminate(gs) {
        return Err(Error::IndeterminatePoint);
    }
    Ok(ProjPoint::new(p.x, out.normalized()))
}

/// One step of the map: horizontal switch, then vertical switch.
pub fn qrt_step(map: &QrtMap, p: &ProjPoint) -> Result<ProjPoint> {
    switch_y(map, &switch_x(map, p)?)
}

/// One step of the inverse map: the switches composed in the other order.
pub fn qrt_step_inverse(map: &QrtMap, p: &ProjPoint) -> Result<ProjPoint> {
    switch_x(map, &switch_y(map, p)?)
}

// ---------------------------------------------------------------------------
// Base points.

/// A base point of the pencil together with its intersection multiplicity.
pub type BasePoint = (ProjPoint, usize);

/// All base points of the pencil (common zeros of both forms on
/// `CP^1 x CP^1`), counted with multiplicity; generically eight in total.
///
/// The `y`-coordinates of base points are the roots of the degree-8
/// resolvent `f2^2 - f1 f3` (the resultant in `x` of the two pencil
/// quadratics); missing leading coefficients are roots on the line
/// `y = infinity`, which is handled in the reciprocal chart.  The matching
/// `x` comes from the proportionality `(x^2 : x : 1) ~ f`, with a quadratic
/// fallback on lines where the cross product vanishes identically.  The same
/// procedure runs on the transposed pencil, and multiplicities are
/// reconciled between the two resolvents' root clusters.
pub fn find_base_points(map: &QrtMap) -> Result<Vec<BasePoint>> {
    let ry = resolvent(&map.a, &map.b);
    let ta = transpose(&map.a);
    let tb = transpose(&map.b);
    let rx = resolvent(&ta, &tb);
    let rel = 1e-10;
    if ry.effective_degree(rel).is_none() || rx.effective_degree(rel).is_none() {
        return Err(Error::DegeneratePencil);
    }

    let y_lines = resolvent_lines(&ry, rel)?;
    let x_lines = resolvent_lines(&rx, rel)?;

    // Candidate points from both sides.
    let mut candidates: Vec<ProjPoint> = Vec::new();
    for line in &y_lines {
        candidates.extend(points_on_line(&map.a, &map.b, &line.coord)?);
    }
    for line in &x_lines {
        for p in points_on_line(&ta, &tb, &line.coord)? {
            candidates.push(ProjPoint::new(p.y, p.x)); // swap back
        }
    }

    // Polish in the appropriate chart and drop anything that fails to land
    // on both forms.
    let curve_a = Biquadratic::new(map.a);
    let curve_b = Biquadratic::new(map.b);
    let mut polished: Vec<ProjPoint> = Vec::new();
    for p in candidates {
        let q = newton_base_point(map, &p);
        let res = curve_a.rel_residual(&q).max(curve_b.rel_residual(&q));
        if res <= BASE_RESIDUAL_TOL {
            polished.push(q);
        }
    }

    // Merge coincident candidates.
    let mut distinct: Vec<ProjPoint> = Vec::new();
    for p in polished {
        if !distinct.iter().any(|q| p.chordal(q) <= BASE_CLUSTER_TOL) {
            distinct.push(p);
        }
    }
    sort_points(&mut distinct);

    // Attribute multiplicities: each resolvent root cluster carries the sum
    // of the intersection multiplicities of the base points on its line.
    let mult = reconcile_multiplicities(&distinct, &y_lines, &x_lines);
    Ok(distinct.into_iter().zip(mult).collect())
}

struct Line {
    coord: ProjCoord,
    mult: usize,
}

/// The degree-8 resolvent `f2^2 - f1 f3` in `y`, built by polynomial
/// convolution from the rows of the two matrices.
fn resolvent(a: &[[C64; 3]; 3], b: &[[C64; 3]; 3]) -> Poly {
    let row_poly = |m: &[[C64; 3]; 3], i: usize| Poly::new(vec![m[i][2], m[i][1], m[i][0]]);
    let u: Vec<Poly> = (0..3).map(|i| row_poly(a, i)).collect();
    let v: Vec<Poly> = (0..3).map(|i| row_poly(b, i)).collect();
    let f0 = u[1].mul(&v[2]).sub(&u[2].mul(&v[1]));
    let f1 = u[2].mul(&v[0]).sub(&u[0].mul(&v[2]));
    let f2 = u[0].mul(&v[1]).sub(&u[1].mul(&v[0]));
    f1.mul(&f1).sub(&f0.mul(&f2))
}

/// Root clusters of a resolvent, plus the line at infinity when the
/// effective degree falls short of the nominal eight.
fn resolvent_lines(r: &Poly, rel: f64) -> Result<Vec<Line>> {
    let deg = r.effective_degree(rel).unwrap_or(0);
    let roots = r.roots(rel)?;
    let mut lines: Vec<Line> = cluster(&roots, BASE_CLUSTER_TOL)
        .into_iter()
        .map(|(z, n)| Line {
            coord: ProjCoord::finite(z),
            mult: n,
        })
        .collect();
    if deg < 8 {
        lines.push(Line {
            coord: ProjCoord::infinity(),
            mult: 8 - deg,
        });
    }
    Ok(lines)
}

/// Base-point candidates on one horizontal line `y = const` (possibly the
/// line at infinity).
fn points_on_line(
    a: &[[C64; 3]; 3],
    b: &[[C64; 3]; 3],
    y: &ProjCoord,
) -> Result<Vec<ProjPoint>> {
    let yv = y.veronese();
    let u = mat_vec(a, &yv);
    let v = mat_vec(b, &yv);
    let f = cross(&u, &v);
    let fscale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let fref = 9.0 * mat_scale(a) * mat_scale(b);

    if fscale > 1e-10 * fref {
        // Generic line: (x^2 : x : 1) is proportional to f.  Read x off the
        // better conditioned of the two consecutive ratios.
        let x = if f[1].norm() >= f[2].norm() {
            ProjCoord::new(f[0], f[1])
        } else {
            ProjCoord::new(f[1], f[2])
        };
        return Ok(vec![ProjPoint::new(x.normalized(), *y)]);
    }

    // The cross product vanishes along this line: the two quadratics in `x`
    // are proportional, and their common roots are all base points.
    let (q, qscale) = {
        let qu = Poly::new(vec![u[2], u[1], u[0]]);
        let su = qu.scale();
        if su > 1e-10 * 3.0 * mat_scale(a) {
            (qu, su)
        } else {
            let qv = Poly::new(vec![v[2], v[1], v[0]]);
            let sv = qv.scale();
            (qv, sv)
        }
    };
    if qscale <= 1e-10 * 3.0 * mat_scale(a).max(mat_scale(b)) {
        // Both forms vanish identically on the line: a common component.
        return Err(Error::DegeneratePencil);
    }
    let deg = q.effective_degree(1e-10).unwrap_or(0);
    let mut pts: Vec<ProjPoint> = q
        .roots(1e-10)?
        .into_iter()
        .map(|x| ProjPoint::new(ProjCoord::finite(x), *y))
        .collect();
    if deg < 2 {
        // The remaining intersections with this line sit at x = infinity.
        pts.push(ProjPoint::new(ProjCoord::infinity(), *y));
    }
    Ok(pts)
}

/// Newton polish of a base-point candidate on the system
/// `(x^T A y, x^T B y) = 0`, run in the affine chart that keeps both
/// coordinates finite.
fn newton_base_point(map: &QrtMap, p: &ProjPoint) -> ProjPoint {
    let cx = p.x.is_infinite();
    let cy = p.y.is_infinite();
    let ca = Biquadratic::new(map.a).chart(cx, cy);
    let cb = Biquadratic::new(map.b).chart(cx, cy);
    let inv = |c: &ProjCoord, flip: bool| -> C64 {
        if flip {
            let n = c.normalized();
            n.den / n.num // the chart coordinate 1/x, zero at infinity
        } else {
            c.expect_finite()
        }
    };
    let mut xi = inv(&p.x, cx);
    let mut eta = inv(&p.y, cy);
    for _ in 0..60 {
        let fa = ca.eval(xi, eta);
        let fb = cb.eval(xi, eta);
        let j = [
            [ca.dx(xi, eta), ca.dy(xi, eta)],
            [cb.dx(xi, eta), cb.dy(xi, eta)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.norm() < 1e-14 * (ca.scale() * cb.scale()).max(f64::MIN_POSITIVE) {
            break;
        }
        let dx = (fa * j[1][1] - fb * j[0][1]) / det;
        let dy = (fb * j[0][0] - fa * j[1][0]) / det;
        xi -= dx;
        eta -= dy;
        if dx.norm() + dy.norm() < 1e-15 * (1.0 + xi.norm() + eta.norm()) {
            break;
        }
    }
    let back = |z: C64, flip: bool| -> ProjCoord {
        if flip {
            ProjCoord::new(C64::new(1.0, 0.0), z).normalized()
        } else {
            ProjCoord::finite(z)
        }
    };
    ProjPoint::new(back(xi, cx), back(eta, cy))
}

/// Distribute line multiplicities over the distinct base points.
///
/// Each resolvent root cluster says how much total multiplicity sits on its
/// line; a point alone on a line is pinned immediately, and the rest follows
/// by elimination.  Anything left undetermined (which does not happen for
/// pencils with isolated base points in general position) is split evenly.
fn reconcile_multiplicities(points: &[ProjPoint], y_lines: &[Line], x_lines: &[Line]) -> Vec<usize> {
    let assoc_tol = 10.0 * BASE_CLUSTER_TOL;
    // Membership lists per line.
    let members = |lines: &[Line], pick: &dyn Fn(&ProjPoint) -> ProjCoord| -> Vec<Vec<usize>> {
        lines
            .iter()
            .map(|line| {
                points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| pick(p).chordal(&line.coord) <= assoc_tol)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    };
    let y_members = members(y_lines, &|p: &ProjPoint| p.y);
    let x_members = members(x_lines, &|p: &ProjPoint| p.x);

    let mut mult: Vec<Option<usize>> = vec![None; points.len()];
    loop {
        let mut progress = false;
        let all_lines = y_lines
            .iter()
            .zip(&y_members)
            .chain(x_lines.iter().zip(&x_members));
        for (line, mem) in all_lines {
            let unresolved: Vec<usize> = mem.iter().copied().filter(|&i| mult[i].is_none()).collect();
            if unresolved.len() == 1 {
                let assigned: usize = mem.iter().filter_map(|&i| mult[i]).sum();
                mult[unresolved[0]] = Some(line.mult.saturating_sub(assigned).max(1));
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    // Even split of whatever the elimination pass could not pin down.
    for (line, mem) in y_lines.iter().zip(&y_members) {
        let unresolved: Vec<usize> = mem.iter().copied().filter(|&i| mult[i].is_none()).collect();
        if unresolved.is_empty() {
            continue;
        }
        let assigned: usize = mem.iter().filter_map(|&i| mult[i]).sum();
        let remaining = line.mult.saturating_sub(assigned).max(unresolved.len());
        let share = remaining / unresolved.len();
        let extra = remaining % unresolved.len();
        for (k, &i) in unresolved.iter().enumerate() {
            mult[i] = Some(share + usize::from(k < extra));
        }
    }
    mult.into_iter().map(|m| m.unwrap_or(1)).collect()
}

/// Deterministic ordering: finite before infinite, then lexicographic by
/// real and imaginary parts of `x`, then of `y`.
fn sort_points(points: &mut [ProjPoint]) {
    let key = |c: &ProjCoord| -> (u8, f64, f64) {
        match c.value() {
            Some(z) => (0, z.re, z.im),
            None => (1, 0.0, 0.0),
        }
    };
    points.sort_by(|p, q| {
        let kp = (key(&p.x), key(&p.y));
        let kq = (key(&q.x), key(&q.y));
        kp.partial_cmp(&kq).unwrap_or(std::cmp::Ordering::Equal)
    });
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The shared `A` matrix of the two bundled example maps.
    pub(crate) fn example_a() -> [[C64; 3]; 3] {
        [
            [c(0.0, 0.0), c(-7.0, -1.0), c(3.0, 1.0)],
            [c(0.0, 4.0), c(-5.0, 2.0), c(2.0, -1.0)],
            [c(3.0, 4.0), c(6.0, 0.0), c(0.0, 0.0)],
        ]
    }

    /// Pencil with second form `x + y` (an antidiagonal `B`).
    pub(crate) fn sum_pencil() -> QrtMap {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        QrtMap {
            a: example_a(),
            b: [[z, z, z], [z, z, one], [z, one, z]],
        }
    }

    /// Pencil with second form `x * y` (a center-only `B`).
    pub(crate) fn product_pencil() -> QrtMap {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        QrtMap {
            a: example_a(),
            b: [[z, z, z], [z, one, z], [z, z, z]],
        }
    }

    pub(crate) fn example_start() -> ProjPoint {
        ProjPoint::finite(c(1.0, 0.0), c(0.437561, 0.328195))
    }

    /// The same starting point with `y` sharpened to full precision by
    /// solving the curve quadratic at `x = 1` (the quoted value has only six
    /// decimals).
    pub(crate) fn example_start_exact() -> ProjPoint {
        let (al, be, ga) = Biquadratic::new(example_a()).y_coeffs(c(1.0, 0.0));
        let disc = (be * be - 4.0 * al * ga).sqrt();
        let y1 = (-be + disc) / (2.0 * al);
        let y2 = (-be - disc) / (2.0 * al);
        let approx = c(0.437561, 0.328195);
        let y = if (y1 - approx).norm() < (y2 - approx).norm() {
            y1
        } else {
            y2
        };
        assert!((y - approx).norm() < 1e-5);
        ProjPoint::finite(c(1.0, 0.0), y)
    }

    /// Explicit rational form of the sum-pencil map, obtained independently
    /// by eliminating the switch intermediates by hand.  Used as an oracle
    /// for the cross-product implementation.
    fn sum_recurrence(x: C64, y: C64) -> (C64, C64) {
        let i = c(0.0, 1.0);
        let xb = y * (1.0 + i) * (-(c(7.0, 1.0)) * x * y + c(3.0, 1.0) * x + 4.0 * i * y * y
            - c(8.0, 2.0) * y
            - c(4.0, 1.0))
            / (2.0 * (c(3.0, 4.0) * y - c(1.0, 2.0)) * (x + y));
        let yb = -i
            * xb
            * (-4.0 * i * xb * y + c(7.0, 1.0) * xb * xb + c(8.0, -1.0) * xb
                - c(3.0, 4.0) * y
                - c(4.0, 1.0))
            / ((4.0 * xb + c(4.0, -3.0)) * (xb + y));
        (xb, yb)
    }

    /// Same, for the product pencil.
    fn product_recurrence(x: C64, y: C64) -> (C64, C64) {
        let i = c(0.0, 1.0);
        let xb = -y * (1.0 + i) * (c(6.0, 0.0) + c(3.0, 4.0) * y)
            / (2.0 * x * (c(3.0, 4.0) * y - c(1.0, 2.0)));
        let yb = -xb * (1.0 + 2.0 * i) * (c(1.0, 0.0) + (1.0 + i) * xb)
            / ((4.0 * xb + c(4.0, -3.0)) * y);
        (xb, yb)
    }

    /// Tiny deterministic generator for complex test samples.
    pub(crate) struct SplitMix(pub u64);
    impl SplitMix {
        pub fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        }
        pub fn uniform(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
        }
        pub fn complex_in_box(&mut self, half_width: f64) -> C64 {
            C64::new(
                (2.0 * self.uniform() - 1.0) * half_width,
                (2.0 * self.uniform() - 1.0) * half_width,
            )
        }
    }

    #[test]
    fn invariant_k_of_examples() {
        let p0 = example_start_exact();
        let k1 = compute_k(&sum_pencil(), &p0).unwrap();
        assert!(k1.norm() < 1e-12, "sum pencil K = {k1}");
        let k2 = compute_k(&product_pencil(), &p0).unwrap();
        assert!(k2.norm() < 1e-12, "product pencil K = {k2}");
        // B = A forces K = -1 at any non-base point.
        let same = QrtMap {
            a: example_a(),
            b: example_a(),
        };
        let k3 = compute_k(&same, &ProjPoint::finite(c(0.3, 0.1), c(-0.2, 0.7))).unwrap();
        assert!((k3 + c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn invariant_k_error_cases() {
        // On x + y = 0 but off the A-curve the invariant blows up.
        let p = ProjPoint::finite(c(1.0, 0.0), c(-1.0, 0.0));
        match compute_k(&sum_pencil(), &p) {
            Err(Error::InfiniteK) => {}
            other => panic!("expected InfiniteK, got {other:?}"),
        }
        // (0, 0) lies on both forms: a base point.
        let origin = ProjPoint::finite(c(0.0, 0.0), c(0.0, 0.0));
        match compute_k(&sum_pencil(), &origin) {
            Err(Error::DegeneratePoint) => {}
            other => panic!("expected DegeneratePoint, got {other:?}"),
        }
    }

    #[test]
    fn pencil_vanishes_on_fixed_curve_along_orbit() {
        let map = sum_pencil();
        let mut p = example_start_exact();
        let k0 = compute_k(&map, &p).unwrap();
        let scale = mat_scale(&map.a);
        for _ in 0..50 {
            let val = eval_pencil(&map, &p, k0).unwrap();
            // The orbit stays on the K = 0 member.
            let (x, y) = p.values().unwrap();
            let local = scale * (1.0 + x.norm().powi(2)) * (1.0 + y.norm().powi(2));
            assert!(val.norm() <= 1e-8 * local, "pencil value {val} off curve");
            p = qrt_step(&map, &p).unwrap();
            assert!(!p.x.is_infinite() && !p.y.is_infinite());
        }
    }

    #[test]
    fn step_matches_reference_recurrence_sum_pencil() {
        let map = sum_pencil();
        let mut p = example_start();
        let (mut x, mut y) = p.values().unwrap();
        for n in 0..25 {
            let (xr, yr) = sum_recurrence(x, y);
            p = qrt_step(&map, &p).unwrap();
            let q = ProjPoint::finite(xr, yr);
            assert!(
                p.chordal(&q) < 1e-9,
                "step {n}: cross-product step {p} vs reference {q}"
            );
            x = xr;
            y = yr;
        }
    }

    #[test]
    fn step_matches_reference_recurrence_product_pencil() {
        let map = product_pencil();
        let mut p = example_start();
        let (mut x, mut y) = p.values().unwrap();
        for n in 0..25 {
            let (xr, yr) = product_recurrence(x, y);
            p = qrt_step(&map, &p).unwrap();
            let q = ProjPoint::finite(xr, yr);
            assert!(
                p.chordal(&q) < 1e-9,
                "step {n}: cross-product step {p} vs reference {q}"
            );
            x = xr;
            y = yr;
        }
    }

    #[test]
    fn switches_are_involutions() {
        let map = sum_pencil();
        let mut rng = SplitMix(7);
        for _ in 0..40 {
            let p = ProjPoint::finite(rng.complex_in_box(2.0), rng.complex_in_box(2.0));
            if let Ok(q) = switch_x(&map, &p) {
                let back = switch_x(&map, &q).unwrap();
                assert!(back.chordal(&p) < 1e-9, "switch_x^2 moved {p} to {back}");
            }
            if let Ok(q) = switch_y(&map, &p) {
                let back = switch_y(&map, &q).unwrap();
                assert!(back.chordal(&p) < 1e-9, "switch_y^2 moved {p} to {back}");
            }
        }
    }

    #[test]
    fn inverse_undoes_step() {
        let map = product_pencil();
        let mut rng = SplitMix(13);
        for _ in 0..40 {
            let p = ProjPoint::finite(rng.complex_in_box(2.0), rng.complex_in_box(2.0));
            let fwd = match qrt_step(&map, &p) {
                Ok(q) => q,
                Err(_) => continue,
            };
            let back = qrt_step_inverse(&map, &fwd).unwrap();
            assert!(back.chordal(&p) < 1e-8, "inverse mismatch at {p}: {back}");
        }
    }

    #[test]
    fn step_is_scale_invariant_in_homogeneous_coordinates() {
        let map = sum_pencil();
        let mut rng = SplitMix(99);
        for _ in 0..20 {
            let x = rng.complex_in_box(3.0);
            let y = rng.complex_in_box(3.0);
            let sx = rng.complex_in_box(5.0) + c(6.0, 0.0);
            let sy = rng.complex_in_box(5.0) + c(6.0, 0.0);
            let p1 = ProjPoint::finite(x, y);
            let p2 = ProjPoint::new(ProjCoord::new(x * sx, sx), ProjCoord::new(y * sy, sy));
            let q1 = qrt_step(&map, &p1).unwrap();
            let q2 = qrt_step(&map, &p2).unwrap();
            assert!(q1.chordal(&q2) < 1e-10);
        }
    }

    #[test]
    fn invariant_is_conserved_along_orbit() {
        let map = sum_pencil();
        let mut p = example_start();
        let k0 = compute_k(&map, &p).unwrap();
        for n in 0..100 {
            p = qrt_step(&map, &p).unwrap();
            let k = compute_k(&map, &p).unwrap();
            assert!(
                (k - k0).norm() <= 1e-9 * (1.0 + k0.norm()),
                "step {n}: K drifted to {k}"
            );
        }
    }

    #[test]
    fn fix_curve_of_sum_pencil_at_zero_is_a() {
        let map = sum_pencil();
        let curve = fix_curve(&map, c(0.0, 0.0));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(curve.c[i][j], map.a[i][j]);
            }
        }
        // And with K = 2 it is A + 2B.
        let curve2 = fix_curve(&map, c(2.0, 0.0));
        assert_eq!(curve2.c[1][2], map.a[1][2] + c(2.0, 0.0));
        assert_eq!(curve2.c[2][1], map.a[2][1] + c(2.0, 0.0));
    }

    fn assert_contains(points: &[BasePoint], target: &ProjPoint, mult: usize) {
        let found = points
            .iter()
            .find(|(p, _)| p.chordal(target) < 1e-6)
            .unwrap_or_else(|| panic!("missing base point {target}"));
        assert_eq!(found.1, mult, "multiplicity of {target}");
    }

    #[test]
    fn base_points_of_sum_pencil() {
        let map = sum_pencil();
        let pts = find_base_points(&map).unwrap();
        let total: usize = pts.iter().map(|(_, m)| m).sum();
        assert_eq!(total, 8, "total multiplicity, got {pts:?}");
        let ca = Biquadratic::new(map.a);
        let cb = Biquadratic::new(map.b);
        for (p, _) in &pts {
            assert!(ca.rel_residual(p) < 1e-8);
            assert!(cb.rel_residual(p) < 1e-8);
        }
        let inf = ProjCoord::infinity();
        assert_contains(&pts, &ProjPoint::finite(c(0.0, 0.0), c(0.0, 0.0)), 1);
        assert_contains(&pts, &ProjPoint::new(inf, ProjCoord::finite(c(0.44, 0.08))), 1);
        assert_contains(&pts, &ProjPoint::new(ProjCoord::finite(c(-1.0, 0.75)), inf), 1);
        assert_contains(&pts, &ProjPoint::new(inf, inf), 3);
        // All base points satisfy x + y = 0 or lie on the infinity lines.
        for (p, _) in &pts {
            if let Some((x, y)) = p.values() {
                assert!((x + y).norm() < 1e-6, "finite base point {p} off x+y=0");
            }
        }
    }

    #[test]
    fn base_points_of_product_pencil() {
        let map = product_pencil();
        let pts = find_base_points(&map).unwrap();
        let total: usize = pts.iter().map(|(_, m)| m).sum();
        assert_eq!(total, 8, "total multiplicity, got {pts:?}");
        let inf = ProjCoord::infinity();
        assert_contains(&pts, &ProjPoint::finite(c(0.0, 0.0), c(0.0, 0.0)), 2);
        assert_contains(&pts, &ProjPoint::finite(c(0.0, 0.0), c(-0.72, 0.96)), 1);
        assert_contains(&pts, &ProjPoint::finite(c(-0.5, 0.5), c(0.0, 0.0)), 1);
        assert_contains(&pts, &ProjPoint::new(inf, ProjCoord::finite(c(0.44, 0.08))), 1);
        assert_contains(&pts, &ProjPoint::new(ProjCoord::finite(c(-1.0, 0.75)), inf), 1);
        assert_contains(&pts, &ProjPoint::new(inf, inf), 2);
    }

    #[test]
    fn degenerate_pencil_is_detected() {
        // B = A: every member of the "pencil" is the same curve.
        let map = QrtMap {
            a: example_a(),
            b: example_a(),
        };
        match find_base_points(&map) {
            Err(Error::DegeneratePencil) => {}
            other => panic!("expected DegeneratePencil, got {other:?}"),
        }
    }
}
