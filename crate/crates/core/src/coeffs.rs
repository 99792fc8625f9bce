//! Generating-function coefficients for the fractional difference operators.
//!
//! `G2(z) = (b0 + b1 z + b2 z²)^α` gives a second-order shifted Grünwald-type
//! formula; `G4(z) = G2(z)·(1 + η (b0 + b1 z + b2 z²)²)` lifts it to fourth
//! order. Both factor as `b0^α (1 - z)^α (1 - r z)^α` with `r = b2 / b0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::special::{gamma, log_binomial, LogBinomial};
use crate::{Error, Result};

/// Cancellation beyond this relative level is reported as precision loss.
const CANCELLATION_LIMIT: f64 = 1e-8;

/// Quadratic `b0 + b1 z + b2 z²` and correction weight `η` for a given order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenFnParams {
    pub alpha: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub eta: f64,
}

impl GenFnParams {
    /// Second root ratio `r = b2 / b0`, in `[-1, 0]` for `α ∈ [1, 2]`.
    pub fn ratio(&self) -> f64 {
        self.b2 / self.b0
    }
}

pub fn gen_fn_params(alpha: f64) -> Result<GenFnParams> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "generating function needs alpha >= 1, got {alpha}"
        )));
    }
    let b0 = (3.0 * alpha - 2.0) / (2.0 * alpha);
    let b2 = (alpha - 2.0) / (2.0 * alpha);
    let b1 = -2.0 * (alpha - 1.0) / alpha;
    let eta = (3.0 * alpha - 2.0) * (alpha - 2.0) * (alpha - 1.0) / (24.0 * alpha);
    Ok(GenFnParams {
        alpha,
        b0,
        b1,
        b2,
        eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    G2,
    G4,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g2" => Ok(Family::G2),
            "g4" => Ok(Family::G4),
            other => Err(Error::Input(format!("unknown family `{other}` (g2|g4)"))),
        }
    }
}

/// Coefficients `κ_0..κ_L` of a generating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffTable {
    pub alpha: f64,
    pub family: Family,
    pub values: Vec<f64>,
}

impl CoeffTable {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn partial_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Taylor coefficients of `(b0 + b1 z + b2 z²)^p` for `m < len`.
///
/// The three-term recursion comes from `Q G' = p Q' G`; the wanted solution
/// is the dominant one, so running it forward is stable.
pub fn power_coeffs(params: &GenFnParams, p: f64, len: usize) -> Vec<f64> {
    let GenFnParams { b0, b1, b2, .. } = *params;
    let mut k = Vec::with_capacity(len);
    if len == 0 {
        return k;
    }
    k.push(b0.powf(p));
    if len == 1 {
        return k;
    }
    k.push(p * b1 * b0.powf(p - 1.0));
    for n in 1..len - 1 {
        let nf = n as f64;
        let next = (b1 * (p - nf) * k[n] + b2 * (2.0 * p - nf + 1.0) * k[n - 1]) / (b0 * (nf + 1.0));
        k.push(next);
    }
    k
}

fn check_table_args(alpha: f64, len: usize) -> Result<GenFnParams> {
    if len < 3 {
        return Err(Error::Domain(format!(
            "coefficient table needs L >= 2, got L = {}",
            len as isize - 1
        )));
    }
    gen_fn_params(alpha)
}

fn check_operator_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")))
    }
}

/// `κ_{2,0..=l}` by recursion.
pub fn g2_coeffs(alpha: f64, l: usize) -> Result<CoeffTable> {
    let params = check_table_args(alpha, l + 1)?;
    Ok(CoeffTable {
        alpha,
        family: Family::G2,
        values: power_coeffs(&params, alpha, l + 1),
    })
}

/// Precomputed pieces of the binomial-sum formula, shared across indices.
struct DirectSum {
    alpha: f64,
    ln_b0_pow: f64,
    ln_abs_r: f64,
    r_negative: bool,
    r_zero: bool,
    binom: Vec<LogBinomial>,
}

impl DirectSum {
    fn new(alpha: f64, n_max: usize) -> Result<Self> {
        let params = gen_fn_params(alpha)?;
        let r = params.ratio();
        Ok(DirectSum {
            alpha,
            ln_b0_pow: alpha * params.b0.ln(),
            ln_abs_r: r.abs().ln(),
            r_negative: r < 0.0,
            r_zero: r == 0.0,
            binom: (0..=n_max).map(|k| log_binomial(alpha, k)).collect(),
        })
    }

    /// `(-1)^n b0^α Σ_k r^k C(α, k) C(α, n - k)`, with a Neumaier-compensated
    /// sum and a cancellation estimate.
    fn eval(&self, n: usize) -> Result<f64> {
        let k_max = if self.r_zero { 0 } else { n };
        let mut logs = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let (a, b) = (self.binom[k], self.binom[n - k]);
            if a.sign == 0 || b.sign == 0 {
                continue;
            }
            let mut sign = a.sign * b.sign;
            if self.r_negative && k % 2 == 1 {
                sign = -sign;
            }
            let ln = a.ln_abs + b.ln_abs + if k > 0 { k as f64 * self.ln_abs_r } else { 0.0 };
            logs.push((sign, ln));
        }
        if logs.is_empty() {
            return Ok(0.0);
        }
        let top = logs.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut comp, mut abs_sum) = (0.0_f64, 0.0_f64, 0.0_f64);
        for &(sign, ln) in &logs {
            let term = f64::from(sign) * (ln - top).exp();
            abs_sum += term.abs();
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
        sum += comp;
        let integer_order = self.alpha.fract() == 0.0;
        let estimate = if sum == 0.0 {
            f64::INFINITY
        } else {
            f64::EPSILON * abs_sum / sum.abs()
        };
        if estimate > CANCELLATION_LIMIT {
            if integer_order {
                // polynomial generating function: the coefficient is an exact zero
                return Ok(0.0);
            }
            return Err(Error::PrecisionLoss { index: n, estimate });
        }
        let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(parity * sum * (top + self.ln_b0_pow).exp())
    }
}

/// `κ_{2,n}` from the closed binomial sum, independent of the recursion.
pub fn g2_coeffs_direct(alpha: f64, n: usize) -> Result<f64> {
    DirectSum::new(alpha, n)?.eval(n)
}

/// All of `κ_{2,0..=l}` from the binomial sum, reusing the binomial table.
pub fn g2_coeffs_direct_table(alpha: f64, l: usize) -> Result<Vec<f64>> {
    let ds = DirectSum::new(alpha, l)?;
    (0..=l).map(|n| ds.eval(n)).collect()
}

/// `κ_{4,0..=l}` as `κ_2^{(α)} + η κ_2^{(α+2)}`.
pub fn g4_coeffs(alpha: f64, l: usize) -> Result<CoeffTable> {
    check_operator_alpha(alpha)?;
    let params = check_table_args(alpha, l + 1)?;
    let base = power_coeffs(&params, alpha, l + 1);
    let lifted = power_coeffs(&params, alpha + 2.0, l + 1);
    let values = base
        .iter()
        .zip(&lifted)
        .map(|(k2, k2p)| k2 + params.eta * k2p)
        .collect();
    Ok(CoeffTable {
        alpha,
        family: Family::G4,
        values,
    })
}

/// `κ_{4,0..=l}` from the mixed recursion that runs `κ_4` alongside
/// `κ_2^{(α+2)}`. Kept as an independent cross-check of [`g4_coeffs`].
pub fn g4_coeffs_recursive(alpha: f64, l: usize) -> Result<CoeffTable> {
    check_operator_alpha(alpha)?;
    let params = check_table_args(alpha, l + 1)?;
    let GenFnParams { b0, b1, b2, eta, .. } = params;
    let lifted = power_coeffs(&params, alpha + 2.0, l + 1);
    let mut k = Vec::with_capacity(l + 1);
    k.push(b0.powf(alpha) * (1.0 + eta * b0 * b0));
    k.push(b1 / b0 * (alpha * k[0] + 2.0 * eta * lifted[0]));
    for m in 2..=l {
        let mf = m as f64;
        let next = (b1 * (alpha - mf + 1.0) * k[m - 1]
            + b2 * (2.0 * alpha - mf + 2.0) * k[m - 2]
            + 2.0 * eta * b1 * lifted[m - 1]
            + 4.0 * eta * b2 * lifted[m - 2])
            / (mf * b0);
        k.push(next);
    }
    Ok(CoeffTable {
        alpha,
        family: Family::G4,
        values: k,
    })
}

/// Generates a table of either family.
pub fn coeff_table(alpha: f64, family: Family, l: usize) -> Result<CoeffTable> {
    match family {
        Family::G2 => g2_coeffs(alpha, l),
        Family::G4 => g4_coeffs(alpha, l),
    }
}

/// Coefficients of `e^z z^{-α} G4(e^{-z}) = 1 + ϱ1 z + ϱ2 z² + ϱ3 z³ + ϱ4 z⁴ + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    pub varrho1: f64,
    pub varrho2: f64,
    pub varrho3: f64,
    pub varrho4: f64,
}

pub fn varrho2(alpha: f64) -> f64 {
    let a = alpha;
    (3.0 * a * a * a - 19.0 * a * a + 36.0 * a - 16.0) / (24.0 * a)
}

pub fn varrho4(alpha: f64) -> f64 {
    let a = alpha;
    let poly = ((((30.0 * a - 180.0) * a + 459.0) * a - 835.0) * a + 1210.0) * a * a
        - 990.0 * a
        + 300.0;
    -poly / (720.0 * a * a * a)
}

pub fn expansion_coeffs(alpha: f64) -> Result<ExpansionCoeffs> {
    check_operator_alpha(alpha)?;
    Ok(ExpansionCoeffs {
        varrho1: 0.0,
        varrho2: varrho2(alpha),
        varrho3: 0.0,
        varrho4: varrho4(alpha),
    })
}

/// `e^z z^{-α} G4(e^{-z}) - 1 - ϱ2 z² - ϱ4 z⁴` for small `z > 0`.
pub fn symbol_expansion_residual(alpha: f64, z: f64) -> Result<f64> {
    let ex = expansion_coeffs(alpha)?;
    let p = gen_fn_params(alpha)?;
    let w = (-z).exp();
    // Q(w) = (1 - w)(b0 - b2 w); keep 1 - e^{-z} accurate for tiny z
    let one_minus_w = -(-z).exp_m1();
    let second = p.b0 - p.b2 * w;
    let q = one_minus_w * second;
    let ln_head = z + alpha * (one_minus_w / z).ln() + alpha * second.ln();
    let value = ln_head.exp() * (1.0 + p.eta * q * q);
    let z2 = z * z;
    Ok(value - 1.0 - ex.varrho2 * z2 - ex.varrho4 * z2 * z2)
}

fn z1(params: &GenFnParams, p: f64, s: f64) -> f64 {
    let d1 = params.b0 - params.b2 * s.cos();
    let d2 = -params.b2 * s.sin();
    let theta = (d2 / d1).atan();
    (((s - PI) / 2.0 + theta) * p - s).cos()
}

/// Symbol factors `(Z1(α, s), Z(α, s))` for `s ∈ [0, π]`.
pub fn symbol_functions(alpha: f64, s: f64) -> Result<(f64, f64)> {
    check_operator_alpha(alpha)?;
    if !(0.0..=PI).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [0, pi], got {s}")));
    }
    let params = gen_fn_params(alpha)?;
    let d1 = params.b0 - params.b2 * s.cos();
    let d2 = -params.b2 * s.sin();
    let zed1 = z1(&params, alpha, s);
    let half = (s / 2.0).sin();
    let zed = zed1 + 4.0 * params.eta * (d1 * d1 + d2 * d2) * half * half * z1(&params, alpha + 2.0, s);
    Ok((zed1, zed))
}

/// Two-sided bound on `Z(α, s)`: `(lower, upper)`.
pub fn symbol_bounds(alpha: f64) -> Result<(f64, f64)> {
    check_operator_alpha(alpha)?;
    let eta = gen_fn_params(alpha)?.eta;
    let lower = -1.0 + 16.0 * eta * (alpha - 1.0).powi(2) / (alpha * alpha);
    let upper = (PI * alpha / 2.0).cos() - 4.0 * eta;
    Ok((lower, upper))
}

/// `sin(πα) Γ(α+1) / π`, the printed large-`n` constant for `κ_{2,n} n^{α+1}`.
pub fn decay_constant(alpha: f64) -> f64 {
    (PI * alpha).sin() * gamma(alpha + 1.0) / PI
}

/// `κ_{2,n} n^{α+1} / decay_constant(α)`, using the recursion.
pub fn decay_ratio(alpha: f64, n: usize) -> Result<f64> {
    let table = g2_coeffs(alpha, n.max(2))?;
    let nf = n as f64;
    Ok(table.values[n] * nf.powf(alpha + 1.0) / decay_constant(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn params_at_integer_orders() {
        let p = gen_fn_params(2.0).unwrap();
        assert_eq!((p.b0, p.b1, p.b2, p.eta), (1.0, -1.0, 0.0, 0.0));
        let p = gen_fn_params(1.0).unwrap();
        assert_eq!((p.b0, p.b1, p.b2, p.eta), (0.5, 0.0, -0.5, 0.0));
        assert!(gen_fn_params(0.99).is_err());
    }

    #[test]
    fn params_at_one_and_a_half() {
        let p = gen_fn_params(1.5).unwrap();
        assert!(close(p.b0, 5.0 / 6.0, 1e-15));
        assert!(close(p.b1, -2.0 / 3.0, 1e-15));
        assert!(close(p.b2, -1.0 / 6.0, 1e-15));
        // (3α-2)(α-2)(α-1)/(24α) = 2.5 * -0.5 * 0.5 / 36
        assert!(close(p.eta, -0.625 / 36.0, 1e-15));
        assert!((p.b0 + p.b1 + p.b2).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn g2_small_tables() {
        assert_eq!(g2_coeffs(2.0, 4).unwrap().values, vec![1.0, -2.0, 1.0, 0.0, 0.0]);
        assert_eq!(g2_coeffs(1.0, 4).unwrap().values, vec![0.5, 0.0, -0.5, 0.0, 0.0]);
        assert!(g2_coeffs(1.5, 1).is_err());
    }

    #[test]
    fn direct_formula_small_cases() {
        assert_eq!(g2_coeffs_direct(2.0, 1).unwrap(), -2.0);
        assert!(close(g2_coeffs_direct(1.0, 2).unwrap(), -0.5, 1e-15));
        assert_eq!(g2_coeffs_direct(1.0, 3).unwrap(), 0.0);
        let rec = g2_coeffs(1.4, 7).unwrap().values[7];
        let dir = g2_coeffs_direct(1.4, 7).unwrap();
        assert!((rec - dir).abs() <= 1e-12 * dir.abs(), "{rec} vs {dir}");
    }

    #[test]
    fn g4_at_two_equals_g2() {
        assert_eq!(g4_coeffs(2.0, 4).unwrap().values, vec![1.0, -2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn g4_leading_coefficient() {
        let b0: f64 = 5.0 / 6.0;
        let eta = gen_fn_params(1.5).unwrap().eta;
        let want = b0.powf(1.5) * (1.0 + eta * b0 * b0);
        let got = g4_coeffs(1.5, 4).unwrap().values[0];
        assert!(close(got, want, 1e-15));
    }

    #[test]
    fn g4_routes_agree() {
        for &alpha in &[1.05, 1.3, 1.5, 1.77, 1.99, 2.0] {
            let a = g4_coeffs(alpha, 500).unwrap();
            let b = g4_coeffs_recursive(alpha, 500).unwrap();
            for (m, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300) + 1e-300, "α={alpha} m={m}");
            }
        }
    }

    #[test]
    fn expansion_values() {
        assert!(close(varrho2(2.0), 1.0 / 12.0, 1e-15));
        assert!(close(varrho2(1.0), 1.0 / 6.0, 1e-15));
        assert!(close(varrho4(2.0), 1.0 / 360.0, 1e-14));
        let e = expansion_coeffs(1.5).unwrap();
        assert_eq!((e.varrho1, e.varrho3), (0.0, 0.0));
    }

    #[test]
    fn symbol_at_zero_frequency() {
        for &alpha in &[1.2, 1.5, 2.0] {
            let (a, b) = symbol_functions(alpha, 0.0).unwrap();
            assert_eq!(a, b);
            // θ = 0 at s = 0, so Z1 = cos(πα/2)
            assert!((a - (PI * alpha / 2.0).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_family_rejected() {
        assert!("g3".parse::<Family>().is_err());
        assert_eq!("G4".parse::<Family>().unwrap(), Family::G4);
    }
}
