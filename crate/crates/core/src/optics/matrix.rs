use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        ComplexMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// max |(U^dagger U - I)_{ij}|.
    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.cols))
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        ComplexMatrix::from_fn(self.rows, rhs.cols, |r, c| (0..self.cols).map(|k| self[(r, k)] * rhs[(k, c)]).sum())
    }
}

fn coupler() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::new(
        2,
        2,
        vec![Complex64::new(s, 0.0), Complex64::new(0.0, s), Complex64::new(0.0, s), Complex64::new(s, 0.0)],
    )
}

/// Transfer matrix of a Mach-Zehnder stage at angular frequency `omega`
/// (rad/ps): 50:50 coupler, lower arm delayed by `delay` ps with an extra
/// phase factor `extra_phase`, 50:50 coupler.
pub fn mzi_matrix(omega: f64, delay: f64, extra_phase: Complex64) -> ComplexMatrix {
    let h = coupler();
    let mut arms = ComplexMatrix::identity(2);
    arms[(1, 1)] = extra_phase * Complex64::from_polar(1.0, -omega * delay);
    &(&h * &arms) * &h
}

/// Unitary DFT, F_{mk} = e^{j 2 pi m k / n} / sqrt(n).
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    assert!(n > 0, "DFT size must be positive");
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |m, k| Complex64::from_polar(scale, 2.0 * PI * ((m * k) % n) as f64 / n as f64))
}
