//! Fixed-size dense linear algebra for the 2x2 and 3x3 systems that show up
//! in the transition law, the bivariate estimator and the moment equations.

use core::ops::{Add, Mul, Sub};

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0], m[1][0], m[0][1], m[1][1])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2::new(s * m[0][0], s * m[0][1], s * m[1][0], s * m[1][1])
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        libm::fabs(self.0[0][1] - self.0[1][0]) <= tol
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max(libm::fabs(self.0[i][j] - other.0[i][j]));
            }
        }
        worst
    }

    /// Eigenvalues of a matrix with real spectrum, in decreasing order.
    ///
    /// Returns `None` when the discriminant is negative beyond rounding.
    pub fn real_eigenvalues(&self) -> Option<[f64; 2]> {
        let m = &self.0;
        let half_tr = 0.5 * self.trace();
        let half_gap = 0.5 * (m[0][0] - m[1][1]);
        let disc = half_gap * half_gap + m[0][1] * m[1][0];
        let scale = half_tr * half_tr + half_gap * half_gap;
        if disc < -1e-14 * scale {
            return None;
        }
        let root = libm::sqrt(disc.max(0.0));
        // Larger-magnitude root first, the other from the determinant.
        let big = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
        let small = if big == 0.0 { 0.0 } else { self.det() / big };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        Some([hi, lo])
    }

    /// Symmetric 2x2 inverse; `None` if the determinant is not positive-finite
    /// relative to the entries.
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).scale(1.0 / det))
    }

    /// Lower Cholesky factor of a symmetric PSD matrix; tiny negative pivots
    /// from rounding are clamped to zero.
    pub fn cholesky_psd(&self) -> Mat2 {
        let m = &self.0;
        let l11 = libm::sqrt(m[0][0].max(0.0));
        let l21 = if l11 > 0.0 { m[1][0] / l11 } else { 0.0 };
        let l22 = libm::sqrt((m[1][1] - l21 * l21).max(0.0));
        Mat2::new(l11, 0.0, l21, l22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(-1.0)
    }
}

/// Solves `m x = rhs` for a 3x3 system by Gaussian elimination with partial
/// pivoting. `None` when a pivot vanishes.
pub fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = rhs[i];
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| libm::fabs(a[i][col]).total_cmp(&libm::fabs(a[j][col])))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut acc = a[i][3];
        for k in i + 1..3 {
            acc -= a[i][k] * x[k];
        }
        x[i] = acc / a[i][i];
    }
    Some(x)
}

/// Determinant of a 3x3 matrix (cofactor expansion).
pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
