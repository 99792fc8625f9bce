//! Linear solvers used by the operators and the time stepper.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// `LDLᵀ` factorization of a symmetric positive definite tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSpd {
    /// Pivots `d_i`.
    d: Vec<f64>,
    /// Multipliers `l_i` below the diagonal.
    l: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalSpd {
    /// Factors the matrix with diagonal `diag` and off-diagonal `off`
    /// (`off.len() == diag.len() - 1`).
    pub fn factor(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || off.len() + 1 != n {
            return Err(Error::LengthMismatch {
                expected: n.saturating_sub(1),
                found: off.len(),
            });
        }
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n - 1);
        d.push(diag[0]);
        for i in 1..n {
            let li = off[i - 1] / d[i - 1];
            l.push(li);
            d.push(diag[i] - li * off[i - 1]);
        }
        if let Some((i, p)) = d.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::LinearSolve(format!(
                "tridiagonal matrix is not positive definite (pivot {i} = {p})"
            )));
        }
        Ok(TridiagonalSpd { d, l, diag, off })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut v = x[i] * self.diag[i];
                if i > 0 {
                    v += x[i - 1] * self.off[i - 1];
                }
                if i + 1 < n {
                    v += x[i + 1] * self.off[i];
                }
                v
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 1..n {
            let prev = y[i - 1];
            y[i] -= prev * self.l[i - 1];
        }
        for (yi, di) in y.iter_mut().zip(&self.d) {
            *yi /= *di;
        }
        for i in (0..n - 1).rev() {
            let next = y[i + 1];
            y[i] -= next * self.l[i];
        }
        y
    }
}

/// Dense complex LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    pub fn factor(m: DMatrix<Complex64>) -> Result<Self> {
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::LinearSolve("matrix is singular".into()));
        }
        Ok(DenseLu { lu })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let b = DVector::from_column_slice(rhs);
        self.lu
            .solve(&b)
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::LinearSolve("LU solve failed".into()))
    }
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES with right preconditioning, solving `A x = b` from `x = 0`.
pub fn gmres<A, P>(
    apply: A,
    precond: P,
    b: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<Complex64>, KrylovStats)>
where
    A: Fn(&[Complex64]) -> Vec<Complex64>,
    P: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let restart = restart.max(1).min(n.max(1));
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta / b_norm <= tol {
            return Ok((
                x,
                KrylovStats {
                    iterations: total,
                    relative_residual: beta / b_norm,
                },
            ));
        }
        if total >= max_iter {
            return Err(Error::LinearSolve(format!(
                "GMRES stalled at relative residual {:.3e} after {total} iterations",
                beta / b_norm
            )));
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![zero; restart]; restart + 1];
        let mut cs = vec![zero; restart];
        let mut sn = vec![zero; restart];
        let mut g = vec![zero; restart + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            total += 1;
            let mut w = apply(&precond(&basis[k]));
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][k] = h;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= h * vj;
                }
            }
            let wn = norm2(&w);
            hess[k + 1][k] = Complex64::new(wn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * hess[i][k] + sn[i].conj() * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a / denom;
            sn[k] = bb / denom;
            hess[k][k] = Complex64::new(denom, 0.0);
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            if g[k + 1].norm() / b_norm <= tol || wn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the rotated Hessenberg system
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut z = vec![zero; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (zj, vj) in z.iter_mut().zip(v) {
                *zj += yi * vj;
            }
        }
        let dx = precond(&z);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tridiagonal_solve_inverts_matvec() {
        let n = 9;
        let t = TridiagonalSpd::factor(vec![5.0 / 6.0; n], vec![1.0 / 12.0; n - 1]).unwrap();
        let x: Vec<Complex64> = (0..n).map(|j| c(j as f64, -(j as f64) / 3.0)).collect();
        let back = t.solve(&t.matvec(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn indefinite_tridiagonal_rejected() {
        assert!(TridiagonalSpd::factor(vec![1.0, 1.0], vec![2.0]).is_err());
    }

    #[test]
    fn gmres_solves_small_system() {
        let n = 30;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(4.0, 1.0)
            } else if i.abs_diff(j) == 1 {
                c(-1.0, 0.2)
            } else {
                c(0.0, 0.0)
            }
        });
        let b: Vec<Complex64> = (0..n).map(|j| c(1.0, j as f64)).collect();
        let apply = |v: &[Complex64]| (&m * DVector::from_column_slice(v)).as_slice().to_vec();
        let (x, stats) = gmres(apply, |v| v.to_vec(), &b, 1e-13, 10, 500).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        let lu = DenseLu::factor(m.clone()).unwrap();
        let y = lu.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
