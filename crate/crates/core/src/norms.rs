//! Discrete norms on interior grid values.
//!
//! Grid functions are treated as finitely supported sequences: values outside
//! the interior nodes are zero. The fractional semi-norm
//!
//! ```text
//! |u|²_{H^σ} = h ∫_{-π}^{π} h^{-2σ} |s|^{2σ} |û(s)|² ds,   û(s) = (2π)^{-1/2} Σ u_j e^{-ijs}
//! ```
//!
//! is evaluated by the rectangle rule on `K = 8 (nx - 1)` equispaced
//! frequencies, which is the zero-padded DFT of the sequence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::operators::Grid1D;
use crate::special::beta;
use crate::{Error, Result};

/// Fourier grid points per interior unknown.
pub const FOURIER_OVERSAMPLING: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.interior() {
            return Err(Error::LengthMismatch {
                expected: grid.interior(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Input("grid function has non-finite values".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        GridFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.interior()],
        }
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// `sqrt(h Σ |u_j|²)` for raw values.
pub fn l2h(h: f64, u: &[Complex64]) -> f64 {
    (h * u.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn norm_l2h(u: &GridFunction) -> f64 {
    l2h(u.h(), &u.values)
}

pub fn max_abs(u: &[Complex64]) -> f64 {
    u.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `(h Σ |u_j|^p)^{1/p}`, or `max |u_j|` for `p = ∞`.
pub fn norm_lph(u: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("l_h^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(max_abs(&u.values));
    }
    let sum: f64 = u.values.iter().map(|v| v.norm().powf(p)).sum();
    Ok((u.h() * sum).powf(1.0 / p))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&sigma) {
        Ok(())
    } else {
        Err(Error::Domain(format!("sigma must lie in [0, 1], got {sigma}")))
    }
}

/// Frequencies `s_k = 2πk/K` folded into `(-π, π]`.
fn fourier_grid(k_len: usize) -> impl Iterator<Item = f64> {
    (0..k_len).map(move |k| {
        let s = 2.0 * PI * k as f64 / k_len as f64;
        if s > PI {
            s - 2.0 * PI
        } else {
            s
        }
    })
}

fn fourier_length(n: usize) -> usize {
    (FOURIER_OVERSAMPLING * n).max(1)
}

/// `|F_k|²` of the zero-padded sequence, `k = 0..K`.
fn power_spectrum(u: &[Complex64]) -> Vec<f64> {
    let k_len = fourier_length(u.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); k_len];
    buf[..u.len()].copy_from_slice(u);
    FftPlanner::new().plan_fft_forward(k_len).process(&mut buf);
    buf.iter().map(|z| z.norm_sqr()).collect()
}

/// `|u|_{H_h^σ}`.
pub fn frac_seminorm(u: &GridFunction, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let h = u.h();
    let power = power_spectrum(&u.values);
    let k_len = power.len() as f64;
    let sum: f64 = fourier_grid(power.len())
        .zip(&power)
        .map(|(s, p)| s.abs().powf(2.0 * sigma) * p)
        .sum();
    Ok((h.powf(1.0 - 2.0 * sigma) / k_len * sum).sqrt())
}

/// `‖u‖_{H_h^σ} = sqrt(‖u‖²_h + |u|²_{H_h^σ})`.
pub fn frac_norm(u: &GridFunction, sigma: f64) -> Result<f64> {
    let l2 = norm_l2h(u);
    let semi = frac_seminorm(u, sigma)?;
    Ok((l2 * l2 + semi * semi).sqrt())
}

/// `‖u‖_{H_h^σ}` from the single integral `h ∫ (1 + h^{-2σ}|s|^{2σ}) |û|² ds`,
/// without splitting it into the two parts.
pub fn frac_norm_spectral(u: &GridFunction, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let h = u.h();
    let power = power_spectrum(&u.values);
    let k_len = power.len() as f64;
    let sum: f64 = fourier_grid(power.len())
        .zip(&power)
        .map(|(s, p)| (1.0 + h.powf(-2.0 * sigma) * s.abs().powf(2.0 * sigma)) * p)
        .sum();
    Ok((h / k_len * sum).sqrt())
}

/// Same quadrature as [`frac_seminorm`] but summing the trigonometric
/// polynomial term by term at every frequency, `O(n K)`.
pub fn frac_seminorm_direct(u: &GridFunction, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let h = u.h();
    let k_len = fourier_length(u.values.len());
    let mut sum = 0.0;
    for s in fourier_grid(k_len) {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in u.values.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, -(j as f64) * s);
        }
        sum += s.abs().powf(2.0 * sigma) * acc.norm_sqr();
    }
    Ok((h.powf(1.0 - 2.0 * sigma) / k_len as f64 * sum).sqrt())
}

/// Both sides of `‖u‖_{H^{σ0}} ≤ 2^{(σ-σ0)/(2σ)} ‖u‖_{H^σ}^{σ0/σ} ‖u‖_h^{1-σ0/σ}`.
pub fn interpolation_probe(u: &GridFunction, sigma0: f64, sigma: f64) -> Result<(f64, f64)> {
    check_sigma(sigma0)?;
    check_sigma(sigma)?;
    if !(sigma0 <= sigma) || sigma == 0.0 {
        return Err(Error::Domain(format!(
            "interpolation needs 0 <= sigma0 <= sigma <= 1 and sigma > 0, got ({sigma0}, {sigma})"
        )));
    }
    let lhs = frac_norm(u, sigma0)?;
    let theta = sigma0 / sigma;
    let rhs = 2f64.powf((sigma - sigma0) / (2.0 * sigma))
        * frac_norm(u, sigma)?.powf(theta)
        * norm_l2h(u).powf(1.0 - theta);
    Ok((lhs, rhs))
}

/// Constant of the discrete Gagliardo-Nirenberg inequality, as printed.
pub fn gn_constant(sigma0: f64, sigma: f64, p: f64) -> f64 {
    2f64.powf((sigma - sigma0) / (2.0 * sigma))
        * sigma0.powf((2.0 - p) / (2.0 * p))
        * p.powf(-p / 2.0)
        * (p / (p - 1.0)).powf(p / (2.0 * (p - 1.0)))
        * beta(1.0 / (2.0 * sigma0), p / (p - 2.0) - 1.0 / (2.0 * sigma0)).powf((p - 2.0) / (2.0 * p))
}

/// `(‖u‖_{l_h^p}, C ‖u‖_{H^σ}^{σ0/σ} ‖u‖_h^{1-σ0/σ})`.
pub fn gn_probe(u: &GridFunction, sigma0: f64, sigma: f64, p: f64) -> Result<(f64, f64)> {
    if !(p > 2.0) || !((p - 2.0) / (2.0 * p) < sigma0 && sigma0 <= sigma && sigma <= 1.0) {
        return Err(Error::Domain(format!(
            "need p > 2 and (p-2)/(2p) < sigma0 <= sigma <= 1, got p={p}, sigma0={sigma0}, sigma={sigma}"
        )));
    }
    let lhs = norm_lph(u, p)?;
    let theta = sigma0 / sigma;
    let rhs = gn_constant(sigma0, sigma, p) * frac_norm(u, sigma)?.powf(theta) * norm_l2h(u).powf(1.0 - theta);
    Ok((lhs, rhs))
}
