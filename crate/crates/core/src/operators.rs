//! Discrete compact fractional Laplacian on a uniform grid.
//!
//! With `A = tridiag(ϱ2, 1 - 2ϱ2, ϱ2)` and `B = -(H + Hᵀ) / (2 h^α cos(πα/2))`,
//! where `H` is the lower Hessenberg Toeplitz matrix `H[i][j] = κ4_{i-j+1}`,
//! the approximation is
//!
//! ```text
//! (-Δ)^{α/2} u ≈ y,   A y = -B u.
//! ```
//!
//! At `α = 2` this is the classical fourth-order compact Laplacian.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{g4_coeffs, gen_fn_params, varrho2};
use crate::linalg::TridiagonalSpd;
use crate::special::gamma;
use crate::toeplitz::{SymmetricToeplitz, ToeplitzFft};
use crate::{Error, Result};

/// Interior sizes up to this use plain summation for `B u`.
const DIRECT_MATVEC_LIMIT: usize = 64;

/// Uniform grid `x_j = a + j h`, `j = 0..=nx`; unknowns live on `1..nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub nx: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, nx: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("grid needs a < b, got [{a}, {b}]")));
        }
        if nx < 3 {
            return Err(Error::Domain(format!("grid needs nx >= 3 intervals, got {nx}")));
        }
        Ok(Grid1D { a, b, nx })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.nx as f64
    }

    /// Number of interior unknowns, `nx - 1`.
    pub fn interior(&self) -> usize {
        self.nx - 1
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.nx {
            self.b
        } else {
            self.a + j as f64 * self.h()
        }
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.nx).map(|j| self.node(j)).collect()
    }
}

/// Assembled `A` (factored) and `B` (first column) for one `(α, grid)`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub alpha: f64,
    pub grid: Grid1D,
    pub varrho2: f64,
    a_factor: TridiagonalSpd,
    b: SymmetricToeplitz<f64>,
    b_fast: ToeplitzFft,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "operator order must lie in (1, 2], got {alpha}"
        )))
    }
}

/// First column of `B`.
pub fn b_column(alpha: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let n = grid.interior();
    let kappa = g4_coeffs(alpha, grid.nx)?.values;
    let scale = -1.0 / (2.0 * grid.h().powf(alpha) * (PI * alpha / 2.0).cos());
    let mut col = Vec::with_capacity(n);
    for d in 0..n {
        let entry = match d {
            0 => 2.0 * kappa[1],
            1 => kappa[0] + kappa[2],
            _ => kappa[d + 1],
        };
        col.push(scale * entry);
    }
    Ok(col)
}

pub fn assemble(alpha: f64, grid: Grid1D) -> Result<DiscreteOperator> {
    check_alpha(alpha)?;
    let n = grid.interior();
    let r2 = varrho2(alpha);
    let a_factor = TridiagonalSpd::factor(vec![1.0 - 2.0 * r2; n], vec![r2; n - 1])?;
    let col = b_column(alpha, &grid)?;
    let b_fast = ToeplitzFft::from_real(&col);
    Ok(DiscreteOperator {
        alpha,
        grid,
        varrho2: r2,
        a_factor,
        b: SymmetricToeplitz::new(col),
        b_fast,
    })
}

fn check_len(u: &[Complex64], n: usize) -> Result<()> {
    if u.len() == n {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: n,
            found: u.len(),
        })
    }
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.grid.interior()
    }

    pub fn b_toeplitz(&self) -> &SymmetricToeplitz<f64> {
        &self.b
    }

    pub fn b_column(&self) -> &[f64] {
        self.b.column()
    }

    /// Diagonal and off-diagonal value of `A`.
    pub fn a_entries(&self) -> (f64, f64) {
        (1.0 - 2.0 * self.varrho2, self.varrho2)
    }

    pub fn apply_b_direct(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(u, self.dim())?;
        Ok(self.b.matvec_direct(u))
    }

    pub fn apply_b_fast(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(u, self.dim())?;
        Ok(self.b_fast.matvec(u))
    }

    /// `B u`; small systems sum directly, larger ones go through the FFT.
    pub fn apply_b(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.dim() <= DIRECT_MATVEC_LIMIT {
            self.apply_b_direct(u)
        } else {
            self.apply_b_fast(u)
        }
    }

    pub fn apply_a(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(u, self.dim())?;
        Ok(self.a_factor.matvec(u))
    }

    pub fn solve_a(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(rhs, self.dim())?;
        Ok(self.a_factor.solve(rhs))
    }

    /// Compact approximation of `(-Δ)^{α/2} u`.
    pub fn frac_laplacian(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let bu = self.apply_b(u)?;
        let neg: Vec<Complex64> = bu.iter().map(|v| -v).collect();
        self.solve_a(&neg)
    }

    pub fn frac_laplacian_real(&self, u: &[f64]) -> Result<Vec<f64>> {
        let uc: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.frac_laplacian(&uc)?.iter().map(|z| z.re).collect())
    }

    pub fn dense_a(&self) -> DMatrix<f64> {
        let n = self.dim();
        let (d, o) = self.a_entries();
        DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => d,
            1 => o,
            _ => 0.0,
        })
    }

    pub fn dense_b(&self) -> DMatrix<f64> {
        self.b.to_dense()
    }

    /// `λ_j(A) = 1 - (3α³ - 19α² + 36α - 16)/(6α) sin²(jπ / (2 nx))`, `j = 1..nx`.
    pub fn a_eigenvalues(&self) -> Vec<f64> {
        a_eigenvalues_closed_form(self.alpha, self.grid.nx)
    }
}

pub fn a_eigenvalues_closed_form(alpha: f64, nx: usize) -> Vec<f64> {
    let c = 4.0 * varrho2(alpha);
    (1..nx)
        .map(|j| {
            let s = (j as f64 * PI / (2.0 * nx as f64)).sin();
            1.0 - c * s * s
        })
        .collect()
}

/// Lower bound `(-3α³ + 19α² - 30α + 16)/(6α)` on the spectrum of `A`.
pub fn a_spectrum_lower_bound(alpha: f64) -> f64 {
    let a = alpha;
    (-3.0 * a * a * a + 19.0 * a * a - 30.0 * a + 16.0) / (6.0 * a)
}

/// Printed constants `(C1, C2)` of the two-sided bound
/// `C2 |u|² ≤ (A⁻¹ B u, u) ≤ C1 |u|²` in the `H^{α/2}` semi-norm.
pub fn quadratic_form_constants(alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let p = gen_fn_params(alpha)?;
    let cos = (PI * alpha / 2.0).cos();
    let c1 = (p.b0 + p.b2).powf(alpha) * (4.0 * p.eta - cos) / (2.0 * cos) * (2.0 / PI).powf(alpha);
    let c2 = (p.b0 - p.b2).powf(alpha) * (alpha * alpha - 16.0 * p.eta * (alpha - 1.0).powi(2))
        / (2.0 * alpha * alpha * cos * (1.0 - 4.0 * varrho2(alpha)));
    Ok((c1, c2))
}

/// Polynomial on `[a, b]` with its monomial coefficients in `(x - a)` and in
/// `(b - x)`; the Riesz derivative of its zero extension is available in
/// closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyOracle {
    pub a: f64,
    pub b: f64,
    /// `u(x) = Σ left[p] (x - a)^p`.
    pub left: Vec<f64>,
    /// `u(x) = Σ right[p] (b - x)^p`.
    pub right: Vec<f64>,
}

fn binomial_int(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PolyOracle {
    /// Builds both expansions from the left one.
    pub fn from_left(a: f64, b: f64, left: Vec<f64>) -> Result<Self> {
        let len = b - a;
        let mut right = vec![0.0; left.len()];
        // c_p (L - s)^p = c_p Σ_q C(p, q) L^{p-q} (-s)^q
        for (p, &c) in left.iter().enumerate() {
            for (q, r) in right.iter_mut().enumerate().take(p + 1) {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                *r += c * binomial_int(p, q) * len.powi((p - q) as i32) * sign;
            }
        }
        Self::new(a, b, left, right)
    }

    /// Checks both expansions agree and vanish to fourth order at each end.
    pub fn new(a: f64, b: f64, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let oracle = PolyOracle { a, b, left, right };
        for (side, c) in [("left", &oracle.left), ("right", &oracle.right)] {
            if let Some(p) = c.iter().take(4).position(|&v| v != 0.0) {
                return Err(Error::Regularity(format!(
                    "{side} expansion has a nonzero (x-endpoint)^{p} term; need a zero of order >= 4"
                )));
            }
        }
        let scale = oracle.left.iter().map(|c| c.abs()).sum::<f64>().max(1.0)
            * (b - a).abs().max(1.0).powi(oracle.left.len() as i32);
        for i in 0..=8 {
            let x = a + (b - a) * i as f64 / 8.0;
            let l = oracle.eval_left(x);
            let r = oracle.eval_right(x);
            if (l - r).abs() > 1e-10 * scale {
                return Err(Error::Input(format!(
                    "left and right expansions disagree at x = {x}: {l} vs {r}"
                )));
            }
        }
        Ok(oracle)
    }

    /// `x⁴ (1 - x)⁴` on `[0, 1]`.
    pub fn example1() -> Self {
        // (1 - x)^4 = 1 - 4x + 6x² - 4x³ + x⁴
        let left = vec![0.0, 0.0, 0.0, 0.0, 1.0, -4.0, 6.0, -4.0, 1.0];
        Self::from_left(0.0, 1.0, left).expect("example polynomial is regular")
    }

    fn eval_left(&self, x: f64) -> f64 {
        let t = x - self.a;
        self.left.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn eval_right(&self, x: f64) -> f64 {
        let s = self.b - x;
        self.right.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            0.0
        } else {
            self.eval_left(x)
        }
    }

    /// Left Riemann-Liouville derivative of order `α` at `x`.
    pub fn left_derivative(&self, alpha: f64, x: f64) -> f64 {
        rl_sum(&self.left, alpha, x - self.a)
    }

    /// Right Riemann-Liouville derivative of order `α` at `x`.
    pub fn right_derivative(&self, alpha: f64, x: f64) -> f64 {
        rl_sum(&self.right, alpha, self.b - x)
    }
}

fn rl_sum(coeffs: &[f64], alpha: f64, t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(p, &c)| {
            let pf = p as f64;
            c * gamma(pf + 1.0) / gamma(pf + 1.0 - alpha) * t.powf(pf - alpha)
        })
        .sum()
}

/// Exact `(-Δ)^{α/2} u(x)` for the zero-extended polynomial.
pub fn poly_exact_frac_laplacian(oracle: &PolyOracle, alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(x > oracle.a && x < oracle.b) {
        return Err(Error::Domain(format!(
            "evaluation point {x} must lie inside ({}, {})",
            oracle.a, oracle.b
        )));
    }
    let dl = oracle.left_derivative(alpha, x);
    let dr = oracle.right_derivative(alpha, x);
    Ok((dl + dr) / (2.0 * (PI * alpha / 2.0).cos()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(nx: usize) -> Grid1D {
        Grid1D::new(0.0, 1.0, nx).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 0.0, 10).is_err());
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
        let g = unit(4);
        assert_eq!(g.interior_nodes(), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn classical_pair_at_two() {
        let g = unit(10);
        let op = assemble(2.0, g).unwrap();
        let h2 = g.h() * g.h();
        let col = op.b_column();
        assert!((col[0] + 2.0 / h2).abs() < 1e-9);
        assert!((col[1] - 1.0 / h2).abs() < 1e-9);
        assert!(col[2..].iter().all(|v| v.abs() < 1e-9));
        let (d, o) = op.a_entries();
        assert!((d - 5.0 / 6.0).abs() < 1e-15 && (o - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_order_one() {
        assert!(assemble(1.0, unit(8)).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let op = assemble(1.5, unit(16)).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); 15];
        assert!(op.frac_laplacian(&z).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(op.apply_b(&z[..3]).is_err());
    }

    #[test]
    fn oracle_is_symmetric_and_classical_at_two() {
        let o = PolyOracle::example1();
        let dl = o.left_derivative(1.6, 0.5);
        let dr = o.right_derivative(1.6, 0.5);
        assert!((dl - dr).abs() < 1e-14 * dl.abs());
        // u'' of x⁴(1-x)⁴ at 1/2 is -1/8
        let v = poly_exact_frac_laplacian(&o, 2.0, 0.5).unwrap();
        assert!((v - 0.125).abs() < 1e-12, "{v}");
    }

    #[test]
    fn oracle_regularity_enforced() {
        let err = PolyOracle::from_left(0.0, 1.0, vec![0.0, 0.0, 1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::Regularity(_)));
    }
}
