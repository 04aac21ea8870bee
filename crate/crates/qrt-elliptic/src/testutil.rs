//! Helpers shared by unit tests: small dense linear algebra used to build
//! independent oracles (resultants via Sylvester determinants).

use crate::poly::Poly;
use crate::proj::C64;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let (pivot, _) = (k..n)
            .map(|i| (i, m[i][k].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if m[pivot][k].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != k {
            m.swap(pivot, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..n {
            let factor = m[i][k] / m[k][k];
            for j in k..n {
                let sub = factor * m[k][j];
                m[i][j] -= sub;
            }
        }
    }
    det
}

/// Resultant of two polynomials via the Sylvester matrix, using the given
/// nominal degrees (trailing zero coefficients are honored, so the caller
/// controls the homogenization).
pub fn sylvester_resultant(p: &Poly, dp: usize, q: &Poly, dq: usize) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let coeff = |poly: &Poly, k: usize| poly.c.get(k).copied().unwrap_or(zero);
    let n = dp + dq;
    let mut m = vec![vec![zero; n]; n];
    // dq rows of p's coefficients (descending), then dp rows of q's.
    for r in 0..dq {
        for k in 0..=dp {
            m[r][r + k] = coeff(p, dp - k);
        }
    }
    for r in 0..dp {
        for k in 0..=dq {
            m[dq + r][r + k] = coeff(q, dq - k);
        }
    }
    determinant(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn determinant_of_known_matrix() {
        // [[1, 2], [3, 4i]] has determinant 4i - 6.
        let m = vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(0.0, 4.0)]];
        let d = determinant(m);
        assert!((d - c(-6.0, 4.0)).norm() < 1e-14);
    }

    #[test]
    fn resultant_detects_shared_root() {
        // p = (x - 2)(x - 3), q = (x - 2)(x + 1): shared root 2.
        let p = Poly::new(vec![c(6.0, 0.0), c(-5.0, 0.0), c(1.0, 0.0)]);
        let q = Poly::new(vec![c(-2.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        let r = sylvester_resultant(&p, 2, &q, 2);
        assert!(r.norm() < 1e-12, "resultant should vanish, got {r}");
        // Replace q by (x - 4)(x + 1): resultant = prod of differences.
        let q2 = Poly::new(vec![c(-4.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]);
        let r2 = sylvester_resultant(&p, 2, &q2, 2);
        // (2-4)(2+1)(3-4)(3+1) = (-2)(3)(-1)(4) = 24.
        assert!((r2 - c(24.0, 0.0)).norm() < 1e-10, "got {r2}");
    }
}
