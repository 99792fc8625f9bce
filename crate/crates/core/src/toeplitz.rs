//! Symmetric Toeplitz matrices stored by their first column.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Symmetric Toeplitz matrix `T[i][j] = col[|i - j|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz<T> {
    col: Vec<T>,
}

impl<T: Copy> SymmetricToeplitz<T> {
    pub fn new(col: Vec<T>) -> Self {
        SymmetricToeplitz { col }
    }

    pub fn dim(&self) -> usize {
        self.col.len()
    }

    pub fn column(&self) -> &[T] {
        &self.col
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.col[i.abs_diff(j)]
    }
}

impl SymmetricToeplitz<f64> {
    pub fn to_complex(&self) -> SymmetricToeplitz<Complex64> {
        SymmetricToeplitz::new(self.col.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `T x` by plain summation, `O(n²)`.
    pub fn matvec_direct(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    acc += xj * self.col[i.abs_diff(j)];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

impl SymmetricToeplitz<Complex64> {
    pub fn matvec_direct(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    acc += xj * self.col[i.abs_diff(j)];
                }
                acc
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// Diagonalized circulant of size `m` acting through FFTs.
#[derive(Clone)]
struct Circulant {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    eigen: Vec<Complex64>,
}

impl Circulant {
    fn from_column(c: Vec<Complex64>) -> Self {
        let m = c.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut eigen = c;
        forward.process(&mut eigen);
        Circulant {
            forward,
            inverse,
            eigen,
        }
    }

    fn size(&self) -> usize {
        self.eigen.len()
    }

    /// Applies `C` (or `C⁻¹`) in place to a length-`m` buffer.
    fn apply(&self, buf: &mut [Complex64], invert: bool) {
        let m = self.size() as f64;
        self.forward.process(buf);
        for (b, e) in buf.iter_mut().zip(&self.eigen) {
            *b = if invert { *b / e } else { *b * e };
        }
        self.inverse.process(buf);
        for b in buf.iter_mut() {
            *b /= m;
        }
    }
}

/// Fast `O(n log n)` Toeplitz matvec by embedding into a circulant of
/// power-of-two size at least `2n`.
#[derive(Clone)]
pub struct ToeplitzFft {
    n: usize,
    circ: Circulant,
}

impl std::fmt::Debug for ToeplitzFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzFft")
            .field("n", &self.n)
            .field("embedding", &self.circ.size())
            .finish()
    }
}

impl ToeplitzFft {
    pub fn new(col: &[Complex64]) -> Self {
        let n = col.len();
        let m = (2 * n).max(2).next_power_of_two();
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        c[..n].copy_from_slice(col);
        for k in 1..n {
            c[m - k] = col[k];
        }
        ToeplitzFft {
            n,
            circ: Circulant::from_column(c),
        }
    }

    pub fn from_real(col: &[f64]) -> Self {
        let c: Vec<Complex64> = col.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(&c)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn embedding_size(&self) -> usize {
        self.circ.size()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.circ.size()];
        buf[..self.n].copy_from_slice(x);
        self.circ.apply(&mut buf, false);
        buf.truncate(self.n);
        buf
    }
}

/// Strang's circulant approximation of a symmetric Toeplitz matrix, used as
/// a preconditioner.
#[derive(Clone)]
pub struct StrangPreconditioner {
    circ: Circulant,
}

impl StrangPreconditioner {
    pub fn new(col: &[Complex64]) -> Self {
        let n = col.len();
        let c = (0..n)
            .map(|k| if k <= n / 2 { col[k] } else { col[n - k] })
            .collect();
        StrangPreconditioner {
            circ: Circulant::from_column(c),
        }
    }

    /// `C⁻¹ x`; falls back to the identity on eigenvalues that vanish.
    pub fn solve(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        if self.circ.eigen.iter().any(|e| e.norm() < 1e-300) {
            return buf;
        }
        self.circ.apply(&mut buf, true);
        buf
    }
}
