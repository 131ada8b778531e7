//! Symmetric matrices in dimensions one and two.

use std::ops::{Add, Mul, Neg, Sub};

/// Spatial dimension of the problem. Solvers target d ∈ {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

/// A symmetric d×d matrix, d ∈ {1, 2}, stored as (xx, xy, yy).
/// In dimension one only `xx` is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix {
    pub dim: Dim,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMatrix {
    pub fn new_1d(m: f64) -> Self {
        SymMatrix { dim: Dim::One, xx: m, xy: 0.0, yy: 0.0 }
    }

    pub fn new_2d(xx: f64, xy: f64, yy: f64) -> Self {
        SymMatrix { dim: Dim::Two, xx, xy, yy }
    }

    pub fn zero(dim: Dim) -> Self {
        SymMatrix { dim, xx: 0.0, xy: 0.0, yy: 0.0 }
    }

    pub fn identity(dim: Dim) -> Self {
        match dim {
            Dim::One => Self::new_1d(1.0),
            Dim::Two => Self::new_2d(1.0, 0.0, 1.0),
        }
    }

    pub fn diag(dim: Dim, a: f64, b: f64) -> Self {
        match dim {
            Dim::One => Self::new_1d(a),
            Dim::Two => Self::new_2d(a, 0.0, b),
        }
    }

    /// Rank-one matrix s·ξ⊗ξ (ξ need not be normalized).
    pub fn rank_one(dim: Dim, s: f64, xi: [f64; 2]) -> Self {
        match dim {
            Dim::One => Self::new_1d(s * xi[0] * xi[0]),
            Dim::Two => Self::new_2d(s * xi[0] * xi[0], s * xi[0] * xi[1], s * xi[1] * xi[1]),
        }
    }

    pub fn trace(&self) -> f64 {
        match self.dim {
            Dim::One => self.xx,
            Dim::Two => self.xx + self.yy,
        }
    }

    /// Eigenvalues in increasing order; closed form, no iteration.
    /// In dimension one the second entry repeats the first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        match self.dim {
            Dim::One => (self.xx, self.xx),
            Dim::Two => {
                let mean = 0.5 * (self.xx + self.yy);
                let half_diff = 0.5 * (self.xx - self.yy);
                let delta = (half_diff * half_diff + self.xy * self.xy).sqrt();
                (mean - delta, mean + delta)
            }
        }
    }

    /// Traces of the positive and negative parts of the unique splitting
    /// M = M₊ − M₋ with M₊M₋ = 0.
    pub fn part_traces(&self) -> (f64, f64) {
        let (e1, e2) = self.eigenvalues();
        match self.dim {
            Dim::One => (e1.max(0.0), (-e1).max(0.0)),
            Dim::Two => (e1.max(0.0) + e2.max(0.0), (-e1).max(0.0) + (-e2).max(0.0)),
        }
    }

    /// Quadratic form vᵀ M v.
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        match self.dim {
            Dim::One => self.xx * v[0] * v[0],
            Dim::Two => {
                self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
            }
        }
    }

    /// True when every eigenvalue of self − other is ≥ −tol.
    pub fn dominates(&self, other: &SymMatrix, tol: f64) -> bool {
        let (e1, _) = (*self - *other).eigenvalues();
        e1 >= -tol
    }

    /// Positive part M₊ (as a matrix); used by shift constructions.
    pub fn positive_part(&self) -> SymMatrix {
        match self.dim {
            Dim::One => SymMatrix::new_1d(self.xx.max(0.0)),
            Dim::Two => {
                let (e1, e2) = self.eigenvalues();
                // Eigenvector for e2: rotate back from the diagonal frame.
                if self.xy == 0.0 {
                    return SymMatrix::new_2d(self.xx.max(0.0), 0.0, self.yy.max(0.0));
                }
                let v = [e2 - self.yy, self.xy];
                let n2 = v[0] * v[0] + v[1] * v[1];
                let u = [v[0] / n2.sqrt(), v[1] / n2.sqrt()];
                let p2 = SymMatrix::rank_one(Dim::Two, e2.max(0.0), u);
                let w = [-u[1], u[0]];
                let p1 = SymMatrix::rank_one(Dim::Two, e1.max(0.0), w);
                p1 + p2
            }
        }
    }

    /// Frobenius-type magnitude |M| = max |eigenvalue|.
    pub fn norm(&self) -> f64 {
        let (e1, e2) = self.eigenvalues();
        e1.abs().max(e2.abs())
    }

    /// Entries in row-major order, length d².
    pub fn row_major(&self) -> Vec<f64> {
        match self.dim {
            Dim::One => vec![self.xx],
            Dim::Two => vec![self.xx, self.xy, self.xy, self.yy],
        }
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        SymMatrix { dim: self.dim, xx: self.xx + rhs.xx, xy: self.xy + rhs.xy, yy: self.yy + rhs.yy }
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        SymMatrix { dim: self.dim, xx: self.xx - rhs.xx, xy: self.xy - rhs.xy, yy: self.yy - rhs.yy }
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, xx: s * self.xx, xy: s * self.xy, yy: s * self.yy }
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self * -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigenvalues_of_rotated_diag() {
        // diag(2, -3) rotated by 45 degrees.
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let m = SymMatrix::rank_one(Dim::Two, 2.0, [c, c])
            + SymMatrix::rank_one(Dim::Two, -3.0, [-c, c]);
        let (e1, e2) = m.eigenvalues();
        assert_abs_diff_eq!(e1, -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e2, 2.0, epsilon = 1e-12);
        let (tp, tn) = m.part_traces();
        assert_abs_diff_eq!(tp, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tn, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn positive_part_orthogonality() {
        let m = SymMatrix::new_2d(1.0, 2.0, -1.5);
        let p = m.positive_part();
        let n = p - m; // negative part
        // p and n are PSD and p·n = 0 ⟺ tr(p n) = 0 for PSD factors.
        let (p1, _) = p.eigenvalues();
        let (n1, _) = n.eigenvalues();
        assert!(p1 >= -1e-12 && n1 >= -1e-12);
        let prod_trace = p.xx * n.xx + 2.0 * p.xy * n.xy + p.yy * n.yy;
        assert_abs_diff_eq!(prod_trace, 0.0, epsilon = 1e-12);
    }
}
