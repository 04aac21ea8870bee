//! Points of `CP^1` and `CP^1 x CP^1` in homogeneous coordinates.
//!
//! Every coordinate is stored as a pair `[num : den]` and only normalized
//! when it is read, so the rational switch maps never have to special-case
//! the point at infinity.  Comparisons use the chordal metric on the Riemann
//! sphere, which treats infinity like any other point.

use num_complex::Complex64;

/// The complex scalar type used throughout the crate.
pub type C64 = Complex64;

/// Relative tolerance for projective comparisons (classifying a coordinate
/// as infinite, equality of points, detecting the indeterminate `[0 : 0]`).
pub const PROJ_REL_TOL: f64 = 1e-10;

/// A point of the complex projective line, stored as `[num : den]`.
///
/// `den = 0` is the point at infinity; `num = den = 0` is invalid and only
/// ever arises transiently when a switch map is indeterminate.
#[derive(Clone, Copy, Debug)]
pub struct ProjCoord {
    pub num: C64,
    pub den: C64,
}

impl ProjCoord {
    /// The finite point `z`.
    pub fn finite(z: C64) -> Self {
        ProjCoord {
            num: z,
            den: C64::new(1.0, 0.0),
        }
    }

    /// The point at infinity.
    pub fn infinity() -> Self {
        ProjCoord {
            num: C64::new(1.0, 0.0),
            den: C64::new(0.0, 0.0),
        }
    }

    /// A point from an arbitrary homogeneous pair (not normalized).
    pub fn new(num: C64, den: C64) -> Self {
        ProjCoord { num, den }
    }

    /// Rescale so the larger of `|num|, |den|` is 1.  Keeps repeated
    /// rational-map applications away from overflow and underflow.
    pub fn normalized(&self) -> Self {
        let s = self.num.norm().max(self.den.norm());
        if s == 0.0 || !s.is_finite() {
            return *self;
        }
        ProjCoord {
            num: self.num / s,
            den: self.den / s,
        }
    }

    /// True when both entries of the pair are (relatively) zero, i.e. the
    /// coordinate is the indeterminate `[0 : 0]`.
    pub fn is_indeterminate(&self, scale: f64) -> bool {
        let s = scale.max(1e-300);
        self.num.norm() <= PROJ_REL_TOL * s && self.den.norm() <= PROJ_REL_TOL * s
    }

    /// True when the point is (numerically) the point at infinity.
    pub fn is_infinite(&self) -> bool {
        let n = self.normalized();
        n.den.norm() <= PROJ_REL_TOL
    }

    /// The affine value, or `None` for the point at infinity.
    pub fn value(&self) -> Option<C64> {
        if self.is_infinite() {
            None
        } else {
            Some(self.num / self.den)
        }
    }

    /// The affine value for points known to be finite.
    ///
    /// Panics when called on the point at infinity; use [`Self::value`] when
    /// that is possible.
    pub fn expect_finite(&self) -> C64 {
        self.value().expect("coordinate is the point at infinity")
    }

    /// Chordal distance on the Riemann sphere, normalized to diameter 1.
    ///
    /// For small finite values this agrees with `|a - b|` to first order;
    /// the point at infinity is at distance `1 / sqrt(1 + |z|^2)` from `z`.
    pub fn chordal(&self, other: &ProjCoord) -> f64 {
        let a = self.normalized();
        let b = other.normalized();
        let cross = (a.num * b.den - b.num * a.den).norm();
        let na = (a.num.norm_sqr() + a.den.norm_sqr()).sqrt();
        let nb = (b.num.norm_sqr() + b.den.norm_sqr()).sqrt();
        if na == 0.0 || nb == 0.0 {
            return f64::NAN;
        }
        cross / (na * nb)
    }

    /// Equality in the chordal metric at the crate-wide projective tolerance.
    pub fn approx_eq(&self, other: &ProjCoord) -> bool {
        self.chordal(other) <= PROJ_REL_TOL
    }

    /// The homogeneous Veronese lift `(num^2, num*den, den^2)` of a point,
    /// computed from the normalized pair.  For a finite point `x` this is
    /// proportional to `(x^2, x, 1)`.
    pub fn veronese(&self) -> [C64; 3] {
        let n = self.normalized();
        [n.num * n.num, n.num * n.den, n.den * n.den]
    }
}

impl From<C64> for ProjCoord {
    fn from(z: C64) -> Self {
        ProjCoord::finite(z)
    }
}

/// A point of `CP^1 x CP^1`.
#[derive(Clone, Copy, Debug)]
pub struct ProjPoint {
    pub x: ProjCoord,
    pub y: ProjCoord,
}

impl ProjPoint {
    /// A point with two finite coordinates.
    pub fn finite(x: C64, y: C64) -> Self {
        ProjPoint {
            x: ProjCoord::finite(x),
            y: ProjCoord::finite(y),
        }
    }

    pub fn new(x: ProjCoord, y: ProjCoord) -> Self {
        ProjPoint { x, y }
    }

    /// The larger of the two per-coordinate chordal distances.
    pub fn chordal(&self, other: &ProjPoint) -> f64 {
        self.x.chordal(&other.x).max(self.y.chordal(&other.y))
    }

    pub fn approx_eq(&self, other: &ProjPoint) -> bool {
        self.chordal(other) <= PROJ_REL_TOL
    }

    /// Both coordinates as affine values; `None` if either is infinite.
    pub fn values(&self) -> Option<(C64, C64)> {
        Some((self.x.value()?, self.y.value()?))
    }
}

/// A short display form `(x, y)` with `inf` for points at infinity, used in
/// diagnostics and reports.
impl std::fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt_coord = |c: &ProjCoord| match c.value() {
            Some(z) => format!("{:+.6}{:+.6}i", z.re, z.im),
            None => "inf".to_string(),
        };
        write!(f, "({}, {})", fmt_coord(&self.x), fmt_coord(&self.y))
    }
}
