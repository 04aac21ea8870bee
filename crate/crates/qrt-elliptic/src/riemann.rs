//! Contour integration on the double cover `w^2 = Delta(x)`.
//!
//! The projection of a smooth biquadratic curve to the `x`-line is a double
//! cover of `CP^1` branched over the four roots of the discriminant quartic
//! `Delta`.  Everything downstream needs integrals of `dx / w` along paths
//! on this cover: two independent period loops, and Abel integrals from a
//! fixed base point to the marked points of the curve (two of which sit
//! over `x = infinity` and are reached in the reciprocal chart).
//!
//! The square root is continued along each path numerically: an adaptive
//! walk keeps a running branch choice and localizes, by bisection, the
//! parameter values where `Delta` crosses the principal branch cut, so the
//! integrand can be handed to Gauss-Legendre quadrature in pieces on which
//! it is analytic.

use std::sync::LazyLock;

use crate::error::{Error, Result};
use crate::pencil::Quartic;
use crate::poly::Poly;
use crate::proj::{C64, ProjPoint};
use crate::qrt::Biquadratic;

/// Initial step of the branch-tracking walk, as a fraction of the segment.
const INIT_STEP: f64 = 1.0 / 64.0;

/// Smallest admissible walk step before giving up.
const MIN_STEP: f64 = 1.0 / (1 << 20) as f64;

/// Largest accepted drift of the tracked root between consecutive samples,
/// as a fraction of the separation `2 |w|` of the two branches.
const DRIFT_FACTOR: f64 = 0.1;

/// Relative tolerance of the adaptive quadrature.
const QUAD_REL_TOL: f64 = 1e-11;

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature.

fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    // Roots of P_n by Newton iteration on the three-term recurrence.
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x.
            let (mut p0, mut p1) = (1.0f64, x);
            for m in 2..=n {
                let pm = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = pm;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for m in 2..=n {
            let pm = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
            p0 = p1;
            p1 = pm;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

static GAUSS16: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| legendre_nodes(16));
static GAUSS32: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| legendre_nodes(32));

fn gauss_on<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, nodes: &[(f64, f64)]) -> C64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = C64::new(0.0, 0.0);
    for &(x, w) in nodes {
        acc += f(mid + half * x) * w;
    }
    acc * half
}

/// Adaptive Gauss-Legendre on `[a, b]`: accept when the 16- and 32-node
/// rules agree, bisect otherwise.
fn adaptive_gauss<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64, depth: usize) -> Result<C64> {
    let coarse = gauss_on(f, a, b, &GAUSS16);
    let fine = gauss_on(f, a, b, &GAUSS32);
    if (coarse - fine).norm() <= QUAD_REL_TOL * fine.norm() + 1e-13 {
        return Ok(fine);
    }
    if depth == 0 {
        return Err(Error::Numerical(
            "quadrature failed to converge on a subinterval".into(),
        ));
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive_gauss(f, a, mid, depth - 1)? + adaptive_gauss(f, mid, b, depth - 1)?)
}

// ---------------------------------------------------------------------------
// Continuous square-root tracking.

/// Integral of `num / w(t) dt` over `[0, 1]`, where `w` is the branch of
/// `sqrt(rad(t))` continued from `w_start`.  Returns the integral and the
/// final branch value `w(1)`.
///
/// The radicand must stay away from zero on the whole interval (callers
/// enforce clearance from branch points geometrically).
fn tracked_integral<F: Fn(f64) -> C64>(rad: &F, num: C64, w_start: C64) -> Result<(C64, C64)> {
    // Establish the starting sign relative to the principal square root.
    let p0 = rad(0.0).sqrt();
    if p0.norm() == 0.0 {
        return Err(Error::StepCollapse { t: 0.0 });
    }
    let mut sign: f64 = if (w_start - p0).norm() <= (w_start + p0).norm() {
        1.0
    } else {
        -1.0
    };
    let mut w_prev = p0 * sign;

    // Walk, collecting sign-constant subintervals.
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new(); // (t_lo, t_hi, sign)
    let mut t = 0.0f64;
    let mut piece_start = 0.0f64;
    let mut h = INIT_STEP;
    while t < 1.0 {
        let tn = (t + h).min(1.0);
        let p = rad(tn).sqrt();
        if p.norm() == 0.0 {
            return Err(Error::StepCollapse { t: tn });
        }
        let (cand, s_new) = if (p - w_prev).norm() <= (-p - w_prev).norm() {
            (p, 1.0)
        } else {
            (-p, -1.0)
        };
        let drift = (cand - w_prev).norm();
        let sep = 2.0 * p.norm();
        if drift > DRIFT_FACTOR * sep {
            if h <= MIN_STEP {
                return Err(Error::StepCollapse { t });
            }
            h *= 0.5;
            continue;
        }
        if s_new != sign {
            // The principal branch cut was crossed in (t, tn): bisect.
            let tc = locate_crossing(rad, t, tn, w_prev);
            pieces.push((piece_start, tc, sign));
            piece_start = tc;
            sign = s_new;
        }
        w_prev = cand;
        t = tn;
        h = (h * 1.3).min(4.0 * INIT_STEP);
    }
    pieces.push((piece_start, 1.0, sign));

    let mut total = C64::new(0.0, 0.0);
    for &(lo, hi, s) in &pieces {
        if hi - lo <= 1e-15 {
            continue;
        }
        let f = |u: f64| num / (rad(u).sqrt() * s);
        total += adaptive_gauss(&f, lo, hi, 40)?;
    }
    Ok((total, w_prev))
}

/// Bisect for the parameter where the principal square root of `rad` jumps,
/// given a continuous branch value `w_lo` at `t_lo`.
fn locate_crossing<F: Fn(f64) -> C64>(rad: &F, mut t_lo: f64, mut t_hi: f64, mut w_lo: C64) -> f64 {
    let sign_of = |p: C64, w_ref: C64| -> (f64, C64) {
        if (p - w_ref).norm() <= (-p - w_ref).norm() {
            (1.0, p)
        } else {
            (-1.0, -p)
        }
    };
    let p_lo = rad(t_lo).sqrt();
    let (s_lo, _) = sign_of(p_lo, w_lo);
    for _ in 0..60 {
        let tm = 0.5 * (t_lo + t_hi);
        let pm = rad(tm).sqrt();
        let (sm, wm) = sign_of(pm, w_lo);
        if sm == s_lo {
            t_lo = tm;
            w_lo = wm;
        } else {
            t_hi = tm;
        }
        if t_hi - t_lo < 1e-14 {
            break;
        }
    }
    0.5 * (t_lo + t_hi)
}

// ---------------------------------------------------------------------------
// Geometry helpers.

fn seg_point_dist(a: C64, b: C64, q: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = ((q - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (q - (a + ab * t)).norm()
}

fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    let cross = |u: C64, v: C64| u.re * v.im - u.im * v.re;
    let d1 = cross(d - c, a - c);
    let d2 = cross(d - c, b - c);
    let d3 = cross(b - a, c - a);
    let d4 = cross(b - a, d - a);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn seg_seg_dist(a: C64, b: C64, c: C64, d: C64) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    seg_point_dist(a, b, c)
        .min(seg_point_dist(a, b, d))
        .min(seg_point_dist(c, d, a))
        .min(seg_point_dist(c, d, b))
}

// ---------------------------------------------------------------------------
// Branch data: roots, cuts, margin.

/// The branch points of the cover with a chosen pair of disjoint cuts.
#[derive(Clone, Debug)]
pub struct BranchData {
    /// The four branch points, sorted lexicographically by `(re, im)`.
    pub roots: [C64; 4],
    /// Two disjoint cuts, as index pairs into `roots`.
    pub cuts: [(usize, usize); 2],
    /// Safety distance all integration paths keep from the branch points.
    pub margin: f64,
}

impl BranchData {
    pub fn new(quartic: &Quartic) -> Result<Self> {
        let mut roots = quartic.roots()?;
        if roots.len() != 4 {
            return Err(Error::DegenerateQuartic {
                reason: format!("expected 4 branch points, found {}", roots.len()),
            });
        }
        roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        let roots: [C64; 4] = [roots[0], roots[1], roots[2], roots[3]];

        let mut min_dist = f64::INFINITY;
        let mut diam = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                let d = (roots[i] - roots[j]).norm();
                min_dist = min_dist.min(d);
                diam = diam.max(d);
            }
        }
        if min_dist <= 1e-9 * diam.max(1e-300) {
            return Err(Error::DegenerateQuartic {
                reason: "branch points nearly coincide".into(),
            });
        }
        let margin = (0.05 * diam).min(0.4 * min_dist);

        // Pick the pairing of roots into two cuts whose segments stay
        // farthest apart; require clearance of twice the margin.
        let pairings = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
        let mut best: Option<([(usize, usize); 2], f64)> = None;
        for p in pairings {
            let d = seg_seg_dist(
                roots[p[0].0],
                roots[p[0].1],
                roots[p[1].0],
                roots[p[1].1],
            );
            if d <= 2.0 * margin {
                continue;
            }
            let len = (roots[p[0].0] - roots[p[0].1]).norm()
                + (roots[p[1].0] - roots[p[1].1]).norm();
            if best.is_none() || len < best.unwrap().1 {
                best = Some((p, len));
            }
        }
        let cuts = best
            .ok_or(Error::DegenerateQuartic {
                reason: "no pair of separated branch cuts exists".into(),
            })?
            .0;
        Ok(BranchData {
            roots,
            cuts,
            margin,
        })
    }
}

// ---------------------------------------------------------------------------
// Path construction.

/// Polyline approximation of a circular arc around `center` from angle `a0`
/// to `a1` (radians, traversed monotonically), radius `r`.
fn arc(center: C64, r: f64, a0: f64, a1: f64, n: usize) -> Vec<C64> {
    (0..=n)
        .map(|k| {
            let th = a0 + (a1 - a0) * k as f64 / n as f64;
            center + C64::new(0.0, th).exp() * r
        })
        .collect()
}

/// Closed stadium-shaped loop around the segment `[a, b]` at distance `r`,
/// counterclockwise, first vertex repeated at the end.
fn stadium(a: C64, b: C64, r: f64) -> Vec<C64> {
    let th = (b - a).arg();
    let half = std::f64::consts::FRAC_PI_2;
    let mut v = arc(b, r, th - half, th + half, 8);
    v.extend(arc(a, r, th + half, th + 3.0 * half, 8));
    v.push(v[0]);
    v
}

/// Insert detours so every edge of the polyline keeps `clear` distance from
/// every listed point.  Detours follow the circle of radius `1.5 * clear`
/// (shrunk near the edge's endpoints) on the side the edge already favors.
fn route_polyline(vertices: Vec<C64>, avoid: &[C64], clear: f64) -> Result<Vec<C64>> {
    let mut v = vertices;
    for _pass in 0..8 {
        let mut changed = false;
        let mut out: Vec<C64> = Vec::with_capacity(v.len() + 8);
        out.push(v[0]);
        for i in 1..v.len() {
            let p = v[i - 1];
            let r = v[i];
            let mut offender: Option<(C64, f64)> = None;
            for &q in avoid {
                // Endpoints are allowed to sit at the clearance boundary.
                if (p - q).norm() < 0.99 * clear || (r - q).norm() < 0.99 * clear {
                    return Err(Error::PathTooCloseToBranchPoint {
                        dist: (p - q).norm().min((r - q).norm()),
                        margin: clear,
                    });
                }
                let d = seg_point_dist(p, r, q);
                if d < clear && offender.map_or(true, |(_, od)| d < od) {
                    offender = Some((q, d));
                }
            }
            if let Some((q, _)) = offender {
                let rd = (1.5 * clear).min(0.95 * (p - q).norm()).min(0.95 * (r - q).norm());
                let th_p = (p - q).arg();
                let th_r = (r - q).arg();
                // Side the original edge passes the point on.
                let foot = {
                    let ab = r - p;
                    let t = (((q - p) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0);
                    p + ab * t
                };
                let side = if (foot - q).norm() > 1e-12 * (1.0 + q.norm()) {
                    (foot - q).arg()
                } else {
                    (r - p).arg() + std::f64::consts::FRAC_PI_2
                };
                // Choose the sweep direction whose midpoint lies on `side`.
                let mut dth = th_r - th_p;
                while dth > std::f64::consts::PI {
                    dth -= 2.0 * std::f64::consts::PI;
                }
                while dth < -std::f64::consts::PI {
                    dth += 2.0 * std::f64::consts::PI;
                }
                let mid = th_p + 0.5 * dth;
                let mid_dev = {
                    let mut d = mid - side;
                    while d > std::f64::consts::PI {
                        d -= 2.0 * std::f64::consts::PI;
                    }
                    while d < -std::f64::consts::PI {
                        d += 2.0 * std::f64::consts::PI;
                    }
                    d
                };
                let dth = if mid_dev.abs() <= std::f64::consts::FRAC_PI_2 {
                    dth
                } else if dth >= 0.0 {
                    dth - 2.0 * std::f64::consts::PI
                } else {
                    dth + 2.0 * std::f64::consts::PI
                };
                out.extend(arc(q, rd, th_p, th_p + dth, 6).into_iter().skip(1));
                changed = true;
            }
            out.push(r);
        }
        v = out;
        if !changed {
            return Ok(v);
        }
    }
    // Report the worst remaining violation.
    let mut worst = f64::INFINITY;
    for i in 1..v.len() {
        for &q in avoid {
            worst = worst.min(seg_point_dist(v[i - 1], v[i], q));
        }
    }
    Err(Error::PathTooCloseToBranchPoint {
        dist: worst,
        margin: clear,
    })
}

// ---------------------------------------------------------------------------
// The double cover.

/// A smooth biquadratic curve presented as the double cover
/// `w^2 = Delta(x)` of the `x`-line, with everything needed to integrate
/// `dx / w` along paths: branch data and the sheet labels of curve points.
///
/// A point `(x, y)` on the curve lies on the sheet
/// `w = 2 alpha(x) y + beta(x)`, where `alpha, beta` are the `y^2`- and
/// `y`-coefficients of the curve at `x`; conversely
/// `y = (w - beta) / (2 alpha)`.
#[derive(Clone, Debug)]
pub struct DoubleCover {
    pub curve: Biquadratic,
    pub quartic: Quartic,
    pub branch: BranchData,
}

/// Result of an Abel integral: the value, the polyline actually integrated
/// along (for reporting), and whether a sheet-correcting detour was needed.
#[derive(Clone, Debug)]
pub struct AbelIntegral {
    pub u: C64,
    pub path: Vec<C64>,
    pub sheet_fixed: bool,
}

/// The two period integrals with the loops they were computed on.
#[derive(Clone, Debug)]
pub struct PeriodData {
    pub w1: C64,
    pub w2: C64,
    pub loop1: Vec<C64>,
    pub loop2: Vec<C64>,
}

impl DoubleCover {
    pub fn new(curve: &Biquadratic) -> Result<Self> {
        let quartic = crate::pencil::partial_discriminant(curve)?;
        let branch = BranchData::new(&quartic)?;
        Ok(DoubleCover {
            curve: curve.clone(),
            quartic,
            branch,
        })
    }

    /// Sheet label of a finite curve point.
    pub fn w_of(&self, x: C64, y: C64) -> C64 {
        let (alpha, beta, _) = self.curve.y_coeffs(x);
        2.0 * alpha * y + beta
    }

    /// The `y`-coordinate over `x` on the sheet labeled `w`.
    pub fn y_of(&self, x: C64, w: C64) -> Result<C64> {
        let (alpha, beta, _) = self.curve.y_coeffs(x);
        let s = self.curve.scale() * (1.0 + x.norm()).powi(2);
        if alpha.norm() <= 1e-12 * s {
            return Err(Error::ChartDegenerate {
                reason: "vertical line is tangent: alpha vanishes".into(),
            });
        }
        Ok((w - beta) / (2.0 * alpha))
    }

    fn walk_polyline(&self, v: &[C64], w_start: C64, clear: f64) -> Result<(C64, C64)> {
        // Exact clearance check, edge by edge.
        for i in 1..v.len() {
            for &q in &self.branch.roots {
                let d = seg_point_dist(v[i - 1], v[i], q);
                if d < clear {
                    return Err(Error::PathTooCloseToBranchPoint {
                        dist: d,
                        margin: clear,
                    });
                }
            }
        }
        let mut w = w_start;
        let mut total = C64::new(0.0, 0.0);
        for i in 1..v.len() {
            let (a, b) = (v[i - 1], v[i]);
            if (b - a).norm() == 0.0 {
                continue;
            }
            let rad = |t: f64| self.quartic.eval(a + (b - a) * t);
            let (piece, w_end) = tracked_integral(&rad, b - a, w)?;
            total += piece;
            w = w_end;
        }
        Ok((total, w))
    }

    /// Integral of `dx / w` from the branch point `q` (a root of the
    /// quartic) straight to `target`, using the desingularizing
    /// substitution `x = q + t^2 e^{i phi}`.  The sheet at the branch point
    /// is genuinely ambiguous; the returned `(integral, w_end)` pair is one
    /// consistent choice (negate both for the other sheet).
    pub fn from_branch_point(&self, q: C64, target: C64) -> Result<(C64, C64)> {
        let d = target - q;
        if d.norm() == 0.0 {
            return Ok((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        }
        let phi = C64::new(0.0, d.arg()).exp();
        let t_end = d.norm().sqrt();
        // Deflate the quartic by the root: Delta(x) / (x - q), exact up to
        // the accuracy of the root itself.
        let quotient = deflate(&self.quartic, q);
        let rad = |s: f64| {
            let t = t_end * s;
            let x = q + phi * (t * t);
            phi * quotient.eval(x)
        };
        let (integral, g_end) = tracked_integral(&rad, 2.0 * phi * t_end, rad(0.0).sqrt())?;
        Ok((integral, t_end * g_end))
    }

    /// The two periods of `dx / w`: counterclockwise stadium loops around
    /// the first cut and around the pair (second endpoint of the first cut,
    /// first endpoint of the second cut).  Their lattice is the full period
    /// lattice of the curve.
    pub fn periods(&self) -> Result<PeriodData> {
        let r = &self.branch.roots;
        let (c0, c1) = (self.branch.cuts[0], self.branch.cuts[1]);
        let loop1 = self.period_loop(r[c0.0], r[c0.1], &[r[c1.0], r[c1.1]])?;
        let loop2 = self.period_loop(r[c0.1], r[c1.0], &[r[c0.0], r[c1.1]])?;
        let w1 = self.closed_loop_integral(&loop1)?;
        let w2 = self.closed_loop_integral(&loop2)?;
        Ok(PeriodData {
            w1,
            w2,
            loop1,
            loop2,
        })
    }

    fn period_loop(&self, a: C64, b: C64, others: &[C64]) -> Result<Vec<C64>> {
        let mut r = self.branch.margin;
        for &q in others {
            r = r.min(0.45 * seg_point_dist(a, b, q));
        }
        if r <= 1e-12 * (a - b).norm().max(1.0) {
            return Err(Error::DegenerateQuartic {
                reason: "a branch point sits on the segment joining two others".into(),
            });
        }
        Ok(stadium(a, b, r))
    }

    fn closed_loop_integral(&self, lp: &[C64]) -> Result<C64> {
        // Clearance: the loop hugs its own two branch points at its radius,
        // so check only against a reduced bound.
        let w_start = self.quartic.eval(lp[0]).sqrt();
        let clear = self.loop_clearance(lp);
        let (value, w_end) = self.walk_polyline(lp, w_start, clear)?;
        if (w_end - w_start).norm() > 1e-7 * w_start.norm() {
            return Err(Error::Numerical(
                "period loop failed to return to its starting sheet".into(),
            ));
        }
        Ok(value)
    }

    fn loop_clearance(&self, lp: &[C64]) -> f64 {
        let mut min_d = f64::INFINITY;
        for i in 1..lp.len() {
            for &q in &self.branch.roots {
                min_d = min_d.min(seg_point_dist(lp[i - 1], lp[i], q));
            }
        }
        0.8 * min_d
    }

    /// Abel integral `u = int dx / w` from the curve point
    /// `(from_x, from_y)` to the (possibly infinite) target point, along a
    /// deterministic branch-point-avoiding path.  The arrival sheet is
    /// checked against the target; if it disagrees, the path is re-run with
    /// a prepended loop around one branch point, which exchanges the
    /// sheets.
    pub fn abel(&self, from_x: C64, from_y: C64, to: &ProjPoint) -> Result<AbelIntegral> {
        let w0 = self.w_of(from_x, from_y);
        let delta0 = self.quartic.eval(from_x);
        let res = (w0 * w0 - delta0).norm();
        if res > 1e-6 * (delta0.norm() + w0.norm_sqr()).max(1e-12 * self.quartic.scale()) {
            return Err(Error::StartOffCurve {
                residual: res / (delta0.norm() + w0.norm_sqr()).max(f64::MIN_POSITIVE),
            });
        }
        for attempt in 0..2 {
            let sheet_fixed = attempt == 1;
            let prefix = if sheet_fixed {
                self.sheet_fix_prefix(from_x)?
            } else {
                vec![from_x]
            };
            let ((u, w_end, path), target_w) = if to.x.is_infinite() {
                self.abel_to_x_infinity(&prefix, w0, to.y.is_infinite())?
            } else {
                let x1 = to.x.expect_finite();
                let path = self.route(prefix, x1)?;
                let (u, w_end) = self.walk_polyline(&path, w0, 0.45 * self.branch.margin)?;
                let target_w = if to.y.is_infinite() {
                    // Over x1 the curve has a point at infinite y exactly
                    // when alpha(x1) = 0; its sheet is w = -beta(x1).
                    let (alpha, beta, _) = self.curve.y_coeffs(x1);
                    let s = self.curve.scale() * (1.0 + x1.norm()).powi(2);
                    if alpha.norm() > 1e-8 * s {
                        return Err(Error::ChartDegenerate {
                            reason: "no point at infinite y over this x".into(),
                        });
                    }
                    -beta
                } else {
                    self.w_of(x1, to.y.expect_finite())
                };
                ((u, w_end, path), target_w)
            };
            if (w_end - target_w).norm() <= (w_end + target_w).norm() {
                return Ok(AbelIntegral {
                    u,
                    path,
                    sheet_fixed,
                });
            }
        }
        Err(Error::SheetMismatch)
    }

    /// Route from the end of `prefix` to `target`, keeping clearance.
    fn route(&self, mut prefix: Vec<C64>, target: C64) -> Result<Vec<C64>> {
        let last = *prefix.last().unwrap();
        let routed = route_polyline(
            vec![last, target],
            &self.branch.roots,
            0.5 * self.branch.margin,
        )?;
        prefix.extend(routed.into_iter().skip(1));
        Ok(prefix)
    }

    /// Abel integral continuing to `x = infinity` in the chart `X = 1 / x`.
    /// Over `X = 0` the reciprocal radicand takes the value `c4 = a21^2`;
    /// the sheet `+a21` carries the finite-`y` point of a normalized curve,
    /// the sheet `-a21` the point at `(infinity, infinity)`.
    fn abel_to_x_infinity(
        &self,
        prefix: &[C64],
        w0: C64,
        y_infinite: bool,
    ) -> Result<((C64, C64, Vec<C64>), C64)> {
        let a22 = self.curve.coeff_xy(2, 2);
        let a21 = self.curve.coeff_xy(2, 1);
        if a22.norm() > 1e-8 * self.curve.scale() || a21.norm() <= 1e-8 * self.curve.scale() {
            return Err(Error::ChartDegenerate {
                reason: "points over x = infinity need a normalized curve".into(),
            });
        }
        let max_r = self
            .branch
            .roots
            .iter()
            .map(|q| q.norm())
            .fold(0.0, f64::max);
        let swap_r = 4.0 * max_r;
        let start = *prefix.last().unwrap();
        let angle = if start.norm() > 1e-12 { start.arg() } else { 0.0 };
        let x_swap = C64::new(0.0, angle).exp() * swap_r;

        let mut path = self.route(prefix.to_vec(), x_swap)?;
        let (u1, w_swap) = self.walk_polyline(&path, w0, 0.45 * self.branch.margin)?;

        // Reciprocal chart: x = 1 / X, w = w~ / X^2, du = -dX / w~.
        let x_big = x_swap; // == 1 / X_swap reciprocal base
        let x_cap = 1.0 / x_big;
        let mut rev = [C64::new(0.0, 0.0); 5];
        for k in 0..5 {
            rev[k] = self.quartic.c[4 - k];
        }
        let rev_q = Quartic { c: rev };
        let w_tilde_start = x_cap * x_cap * w_swap;
        let rad = |t: f64| rev_q.eval(x_cap * (1.0 - t));
        let (u2, w_tilde_end) = tracked_integral(&rad, x_cap, w_tilde_start)?;

        // Sample the outward leg for reporting.
        for frac in [0.75, 0.5, 0.25] {
            path.push(x_big / frac);
        }

        let target = if y_infinite { -a21 } else { a21 };
        Ok(((u1 + u2, w_tilde_end, path), target))
    }

    /// A closed loop at `from_x` around the first branch point, prepended to
    /// exchange sheets.  The return leg retraces the outward leg, so any
    /// winding the approach picks up around other branch points cancels and
    /// only the deliberate circle contributes.
    fn sheet_fix_prefix(&self, from_x: C64) -> Result<Vec<C64>> {
        let q = self.branch.roots[0];
        let m = self.branch.margin;
        let dir = if (from_x - q).norm() > 1e-12 {
            (from_x - q) / (from_x - q).norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let entry = q + dir * m;
        let th = (entry - q).arg();
        let out = route_polyline(vec![from_x, entry], &self.branch.roots, 0.5 * m)?;
        let mut v = out.clone();
        v.extend(
            arc(q, m, th, th + 2.0 * std::f64::consts::PI, 12)
                .into_iter()
                .skip(1),
        );
        v.extend(out.into_iter().rev().skip(1));
        Ok(v)
    }
}

/// Exact synthetic division of the quartic by `(x - q)` (valid because `q`
/// is a root; the remainder is dropped).
fn deflate(q: &Quartic, root: C64) -> Poly {
    let mut out = [C64::new(0.0, 0.0); 4];
    let mut acc = q.c[4];
    out[3] = acc;
    for k in (1..4).rev() {
        acc = q.c[k] + acc * root;
        out[k - 1] = acc;
    }
    Poly::new(out.to_vec())
}
