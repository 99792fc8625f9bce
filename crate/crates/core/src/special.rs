//! Log-space gamma helpers and generalized binomial coefficients.
//!
//! Plain gamma ratios overflow long before the coefficient tables stop being
//! useful (n > ~170), so everything here works with `ln|·|` plus an explicit
//! sign.

use std::f64::consts::PI;

pub use statrs::function::beta::beta;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Below this argument `ln Γ(x) - ln Γ(x + d)` is evaluated by subtraction.
const STIRLING_CUTOVER: f64 = 20.0;

/// Binomials with at most this many factors are formed as a plain product,
/// which is more accurate than differencing log-gammas.
const PRODUCT_LIMIT: usize = 64;

/// Tail of the Stirling series, `ln Γ(z) - [(z - 1/2) ln z - z + ln(2π)/2]`.
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0 + r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0)))))
}

/// `ln Γ(x) - ln Γ(x + d)` for `x > 0`, `d ≥ 0`.
///
/// For large `x` the two log-gammas are both of order `x ln x` and their
/// difference is small, so the subtraction is carried out analytically.
pub fn ln_gamma_ratio(x: f64, d: f64) -> f64 {
    debug_assert!(x > 0.0 && d >= 0.0);
    if x < STIRLING_CUTOVER {
        return ln_gamma(x) - ln_gamma(x + d);
    }
    -(x - 0.5) * (d / x).ln_1p() - d * (x + d).ln() + d + stirling_tail(x) - stirling_tail(x + d)
}

/// Generalized binomial coefficient `C(a, k)` in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBinomial {
    /// -1, 0 or +1.
    pub sign: i8,
    /// `ln |C(a, k)|`; `-inf` when the coefficient vanishes.
    pub ln_abs: f64,
}

impl LogBinomial {
    pub const ZERO: LogBinomial = LogBinomial {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }
}

fn is_nonneg_integer(a: f64) -> bool {
    a >= 0.0 && a.fract() == 0.0
}

/// `C(a, k) = a(a-1)...(a-k+1)/k!` for real `a ≥ 0`.
pub fn log_binomial(a: f64, k: usize) -> LogBinomial {
    debug_assert!(a >= 0.0);
    let kf = k as f64;
    if is_nonneg_integer(a) && kf > a {
        return LogBinomial::ZERO;
    }
    if k <= PRODUCT_LIMIT || kf <= a + 1.0 {
        let mut prod = 1.0_f64;
        for i in 0..k {
            prod *= (a - i as f64) / (i as f64 + 1.0);
        }
        if prod == 0.0 {
            return LogBinomial::ZERO;
        }
        return LogBinomial {
            sign: if prod > 0.0 { 1 } else { -1 },
            ln_abs: prod.abs().ln(),
        };
    }
    // k > a + 1: reflect Γ(a - k + 1) so only positive arguments remain,
    //   |C(a, k)| = Γ(a + 1) |sin(πa)| / π · Γ(k - a) / Γ(k + 1)
    let sin_term = (PI * a.fract()).sin().abs();
    let ln_abs = ln_gamma(a + 1.0) + sin_term.ln() - PI.ln() + ln_gamma_ratio(kf - a, a + 1.0);
    // factors (a - i) with floor(a) < i < k are negative
    let negatives = k - (a.floor() as usize + 1);
    LogBinomial {
        sign: if negatives.is_multiple_of(2) { 1 } else { -1 },
        ln_abs,
    }
}
