//! Two-level implicit time stepping for the coupled system.
//!
//! Each step solves for the midpoint values by the lagged-nonlinearity
//! iteration
//!
//! ```text
//! M_1 U^{(n+1)} = A [U^k + τ/2 (-(μ1 + iζ1)|U^{(n)}|² U^{(n)} + i |U^{(n)}|² V^{(n)})]
//! M_s = (1 - τγ_s/2) A - τ/2 (β_s + iη_s) B
//! ```
//!
//! (and the mirrored equation for `V`), then sets `U^{k+1} = 2 U^{k+1/2} - U^k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{gmres, DenseLu};
use crate::norms::{l2h, max_abs};
use crate::operators::{assemble, DiscreteOperator, Grid1D};
use crate::toeplitz::{SymmetricToeplitz, StrangPreconditioner, ToeplitzFft};
use crate::{Error, Result};

/// Interior sizes above this use the Krylov path under [`LinearSolverChoice::Auto`].
pub const DENSE_LIMIT: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 200;
const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_RESTART: usize = 60;
const KRYLOV_MAX_ITER: usize = 2000;

/// Coefficients of the coupled system and its domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Allows zero diffusion/dispersion/nonlinear coefficients.
    #[serde(default)]
    pub test_mode: bool,
}

/// Coefficients of one of the two equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub zeta: f64,
    pub gamma: f64,
}

impl ModelParams {
    /// Every violated invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fields = [
            ("alpha", self.alpha),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("a", self.a),
            ("b", self.b),
            ("T", self.t_final),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                out.push(format!("{name} must be finite, got {v}"));
            }
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            out.push(format!("alpha must lie in (1, 2], got {}", self.alpha));
        }
        if !(self.b > self.a) {
            out.push(format!("domain needs a < b, got [{}, {}]", self.a, self.b));
        }
        if !(self.t_final > 0.0) {
            out.push(format!("T must be positive, got {}", self.t_final));
        }
        let (strict, loose) = if self.test_mode {
            ("non-negative in test mode", "non-negative")
        } else {
            ("positive", "non-negative")
        };
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
        ] {
            let ok = if self.test_mode { v >= 0.0 } else { v > 0.0 };
            if !ok {
                out.push(format!("{name} must be {strict}, got {v}"));
            }
        }
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v >= 0.0) {
                out.push(format!("{name} must be {loose}, got {v}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma1.abs().max(self.gamma2.abs())
    }

    pub fn component(&self, s: usize) -> Component {
        if s == 0 {
            Component {
                beta: self.beta1,
                eta: self.eta1,
                mu: self.mu1,
                zeta: self.zeta1,
                gamma: self.gamma1,
            }
        } else {
            Component {
                beta: self.beta2,
                eta: self.eta2,
                mu: self.mu2,
                zeta: self.zeta2,
                gamma: self.gamma2,
            }
        }
    }

    pub fn grid(&self, nx: usize) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, nx)
    }
}

/// Interior values of both fields at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub t: f64,
}

impl FieldPair {
    pub fn zeros(n: usize, t: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        FieldPair {
            u: z.clone(),
            v: z,
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `W = ‖U‖²_h + ‖V‖²_h`.
    pub fn energy(&self, h: f64) -> f64 {
        l2h(h, &self.u).powi(2) + l2h(h, &self.v).powi(2)
    }

    fn field(&self, s: usize) -> &[Complex64] {
        if s == 0 {
            &self.u
        } else {
            &self.v
        }
    }
}

/// Samples `u0`, `v0` at the interior nodes.
pub fn init_fields<F, G>(grid: &Grid1D, u0: F, v0: G) -> Result<FieldPair>
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64) -> Complex64,
{
    let xs = grid.interior_nodes();
    let u: Vec<Complex64> = xs.iter().map(|&x| u0(x)).collect();
    let v: Vec<Complex64> = xs.iter().map(|&x| v0(x)).collect();
    let bad = |w: &[Complex64]| w.iter().position(|z| !z.re.is_finite() || !z.im.is_finite());
    if let Some(j) = bad(&u).or(bad(&v)) {
        return Err(Error::Input(format!(
            "initial condition is not finite at x = {}",
            xs[j]
        )));
    }
    Ok(FieldPair { u, v, t: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverChoice {
    #[default]
    Auto,
    Dense,
    Krylov,
}

impl std::str::FromStr for LinearSolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense" => Ok(Self::Dense),
            "krylov" => Ok(Self::Krylov),
            other => Err(Error::Input(format!(
                "unknown linear solver `{other}` (auto|dense|krylov)"
            ))),
        }
    }
}

#[derive(Clone)]
enum MSolver {
    Dense(DenseLu),
    Krylov {
        fast: ToeplitzFft,
        precond: StrangPreconditioner,
    },
}

/// Factored `M_1`, `M_2` for one `(operator, τ)`.
#[derive(Debug, Clone)]
pub struct StepMatrices {
    pub tau: f64,
    pub params: ModelParams,
    pub op: DiscreteOperator,
    columns: [SymmetricToeplitz<Complex64>; 2],
    solvers: [MSolver; 2],
}

impl std::fmt::Debug for MSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MSolver::Dense(_) => f.write_str("Dense"),
            MSolver::Krylov { .. } => f.write_str("Krylov"),
        }
    }
}

impl StepMatrices {
    pub fn new(
        op: DiscreteOperator,
        params: &ModelParams,
        tau: f64,
        choice: LinearSolverChoice,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {tau}")));
        }
        let n = op.dim();
        let krylov = match choice {
            LinearSolverChoice::Auto => n > DENSE_LIMIT,
            LinearSolverChoice::Dense => false,
            LinearSolverChoice::Krylov => true,
        };
        let build = |s: usize| -> Result<(SymmetricToeplitz<Complex64>, MSolver)> {
            let c = params.component(s);
            let (ad, ao) = op.a_entries();
            let shift = 1.0 - tau * c.gamma / 2.0;
            let w = Complex64::new(c.beta, c.eta) * (tau / 2.0);
            let col: Vec<Complex64> = op
                .b_column()
                .iter()
                .enumerate()
                .map(|(k, &bk)| {
                    let a = match k {
                        0 => ad,
                        1 => ao,
                        _ => 0.0,
                    };
                    Complex64::new(shift * a, 0.0) - w * bk
                })
                .collect();
            let t = SymmetricToeplitz::new(col);
            let solver = if krylov {
                MSolver::Krylov {
                    fast: ToeplitzFft::new(t.column()),
                    precond: StrangPreconditioner::new(t.column()),
                }
            } else {
                MSolver::Dense(DenseLu::factor(t.to_dense())?)
            };
            Ok((t, solver))
        };
        let (c1, s1) = build(0)?;
        let (c2, s2) = build(1)?;
        Ok(StepMatrices {
            tau,
            params: *params,
            op,
            columns: [c1, c2],
            solvers: [s1, s2],
        })
    }

    pub fn is_krylov(&self) -> bool {
        matches!(self.solvers[0], MSolver::Krylov { .. })
    }

    /// `M_s x` by direct summation.
    pub fn apply(&self, s: usize, x: &[Complex64]) -> Vec<Complex64> {
        self.columns[s].matvec_direct(x)
    }

    /// Solves `M_s x = rhs`.
    pub fn solve(&self, s: usize, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.solvers[s] {
            MSolver::Dense(lu) => lu.solve(rhs),
            MSolver::Krylov { fast, precond } => {
                let (x, _) = gmres(
                    |v| fast.matvec(v),
                    |v| precond.solve(v),
                    rhs,
                    KRYLOV_TOL,
                    KRYLOV_RESTART,
                    KRYLOV_MAX_ITER,
                )?;
                Ok(x)
            }
        }
    }
}

/// Convergence record of one fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iterations: usize,
    /// `l_h^∞` size of the last correction (max over both fields).
    pub final_update: f64,
    pub converged: bool,
}

/// `(t_k, W_k)` for every accepted step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub points: Vec<(f64, f64)>,
}

impl EnergyTrace {
    pub fn push(&mut self, t: f64, w: f64) {
        self.points.push((t, w));
    }

    pub fn initial(&self) -> Option<f64> {
        self.points.first().map(|p| p.1)
    }

    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|p| p.1)
    }
}

/// `N_s = -(μ + iζ)|w|² w + i |w|² z` for field `w` and partner `z`.
fn nonlinear(c: &Component, w: &[Complex64], z: &[Complex64]) -> Vec<Complex64> {
    let damp = Complex64::new(c.mu, c.zeta);
    let i = Complex64::new(0.0, 1.0);
    w.iter()
        .zip(z)
        .map(|(wj, zj)| {
            let m = wj.norm_sqr();
            -damp * m * wj + i * m * zj
        })
        .collect()
}

/// Initial guess for the midpoint values.
///
/// With a previous level this is `3/2 U^k - 1/2 U^{k-1}`; on the first step
/// it is an explicit half step from `U^0`.
pub fn predictor(
    current: &FieldPair,
    previous: Option<&FieldPair>,
    mats: &StepMatrices,
) -> Result<FieldPair> {
    let t = current.t + mats.tau / 2.0;
    if let Some(prev) = previous {
        let extrap = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x * 1.5 - y * 0.5).collect()
        };
        return Ok(FieldPair {
            u: extrap(&current.u, &prev.u),
            v: extrap(&current.v, &prev.v),
            t,
        });
    }
    let half = mats.tau / 2.0;
    let mut out = [Vec::new(), Vec::new()];
    for (s, slot) in out.iter_mut().enumerate() {
        let c = mats.params.component(s);
        let w = current.field(s);
        let z = current.field(1 - s);
        // A⁻¹ B w approximates minus the fractional Laplacian
        let bw = mats.op.apply_b(w)?;
        let q = mats.op.solve_a(&bw)?;
        let nl = nonlinear(&c, w, z);
        let coef = Complex64::new(c.beta, c.eta);
        *slot = w
            .iter()
            .zip(q.iter().zip(&nl))
            .map(|(wj, (qj, nj))| wj + (coef * qj + wj * c.gamma + nj) * half)
            .collect();
    }
    let [u, v] = out;
    Ok(FieldPair { u, v, t })
}

/// Iterates the midpoint equations from `pred` until the update is at most `tol`.
pub fn fixed_point_halfstep(
    state: &FieldPair,
    pred: &FieldPair,
    mats: &StepMatrices,
    tol: f64,
    max_iter: usize,
) -> Result<(FieldPair, IterationReport)> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("iteration tolerance must be positive, got {tol}")));
    }
    let half = mats.tau / 2.0;
    let mut cur = pred.clone();
    let mut update = f64::INFINITY;
    for it in 1..=max_iter {
        let mut next = [Vec::new(), Vec::new()];
        for (s, slot) in next.iter_mut().enumerate() {
            let c = mats.params.component(s);
            let nl = nonlinear(&c, cur.field(s), cur.field(1 - s));
            let inner: Vec<Complex64> = state
                .field(s)
                .iter()
                .zip(&nl)
                .map(|(w, n)| w + n * half)
                .collect();
            let rhs = mats.op.apply_a(&inner)?;
            *slot = mats.solve(s, &rhs)?;
        }
        let [u, v] = next;
        let du = u.iter().zip(&cur.u).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let dv = v.iter().zip(&cur.v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        update = du.max(dv);
        cur.u = u;
        cur.v = v;
        if !update.is_finite() {
            break;
        }
        if update <= tol {
            return Ok((
                cur,
                IterationReport {
                    iterations: it,
                    final_update: update,
                    converged: true,
                },
            ));
        }
    }
    Err(Error::NonConvergence(IterationReport {
        iterations: max_iter,
        final_update: update,
        converged: false,
    }))
}

/// Advances one step; `previous` is the level before `state`, if any.
pub fn step(
    state: &FieldPair,
    previous: Option<&FieldPair>,
    mats: &StepMatrices,
    tol: f64,
    max_iter: usize,
) -> Result<(FieldPair, IterationReport)> {
    let pred = predictor(state, previous, mats)?;
    let (half, report) = fixed_point_halfstep(state, &pred, mats, tol, max_iter)?;
    let double = |m: &[Complex64], w: &[Complex64]| -> Vec<Complex64> {
        m.iter().zip(w).map(|(a, b)| a * 2.0 - b).collect()
    };
    Ok((
        FieldPair {
            u: double(&half.u, &state.u),
            v: double(&half.v, &state.v),
            t: state.t + mats.tau,
        },
        report,
    ))
}

/// Iteration and linear-solver settings for [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub linear_solver: LinearSolverChoice,
    /// Times at which to keep a copy of the fields (nearest step).
    pub snapshot_times: Vec<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            linear_solver: LinearSolverChoice::Auto,
            snapshot_times: Vec::new(),
        }
    }
}

/// Monitoring of `W^k ≤ exp(4γT) W^0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBound {
    pub gamma_max: f64,
    /// Whether `τ γ ≤ 1/2`, the step-size condition of the bound.
    pub precondition: bool,
    /// `4 γ T`.
    pub log_bound: f64,
    /// `max_k ln(W^k / W^0)`.
    pub max_log_growth: f64,
    /// Steps where the bound failed.
    pub violations: Vec<usize>,
}

impl EnergyBound {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: FieldPair,
    pub trace: EnergyTrace,
    pub reports: Vec<IterationReport>,
    pub snapshots: Vec<FieldPair>,
    pub bound: EnergyBound,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn max_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn median_iterations(&self) -> f64 {
        let mut it: Vec<usize> = self.reports.iter().map(|r| r.iterations).collect();
        if it.is_empty() {
            return 0.0;
        }
        it.sort_unstable();
        let n = it.len();
        if n % 2 == 1 {
            it[n / 2] as f64
        } else {
            (it[n / 2 - 1] + it[n / 2]) as f64 / 2.0
        }
    }
}

fn check_bound(bound: &mut EnergyBound, k: usize, w0: f64, wk: f64) {
    let growth = if w0 == 0.0 {
        if wk == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (wk / w0).ln()
    };
    bound.max_log_growth = bound.max_log_growth.max(growth);
    // relative slack for rounding in W itself
    if growth > bound.log_bound + 1e-12 {
        bound.violations.push(k);
    }
}

/// Runs `nt` steps of size `T / nt` from `init`, calling `on_step` after each.
pub fn run<F>(
    params: &ModelParams,
    grid: Grid1D,
    nt: usize,
    init: &FieldPair,
    opts: &RunOptions,
    mut on_step: F,
) -> Result<RunOutput>
where
    F: FnMut(&FieldPair, &IterationReport),
{
    params.validate()?;
    if nt == 0 {
        return Err(Error::Domain("need at least one time step".into()));
    }
    if init.u.len() != grid.interior() || init.v.len() != grid.interior() {
        return Err(Error::LengthMismatch {
            expected: grid.interior(),
            found: init.u.len().min(init.v.len()),
        });
    }
    let tau = params.t_final / nt as f64;
    let op = assemble(params.alpha, grid)?;
    let mats = StepMatrices::new(op, params, tau, opts.linear_solver)?;
    let h = grid.h();
    let gamma = params.gamma_max();
    let mut warnings = Vec::new();
    let precondition = tau * gamma <= 0.5;
    if !precondition {
        let msg = format!(
            "tau * max|gamma| = {:.4} exceeds 1/2; the energy bound is not guaranteed",
            tau * gamma
        );
        log::info!("{msg}");
        warnings.push(msg);
    }
    let mut bound = EnergyBound {
        gamma_max: gamma,
        precondition,
        log_bound: 4.0 * gamma * params.t_final,
        max_log_growth: 0.0,
        violations: Vec::new(),
    };
    let snap_steps: Vec<usize> = opts
        .snapshot_times
        .iter()
        .map(|&ts| ((ts / tau).round().max(0.0) as usize).min(nt))
        .collect();
    let mut snapshots = Vec::new();
    let take_snaps = |k: usize, s: &FieldPair, out: &mut Vec<FieldPair>| {
        for &ks in &snap_steps {
            if ks == k {
                out.push(s.clone());
            }
        }
    };

    let mut trace = EnergyTrace::default();
    let w0 = init.energy(h);
    trace.push(init.t, w0);
    take_snaps(0, init, &mut snapshots);
    let mut reports = Vec::with_capacity(nt);
    let mut previous: Option<FieldPair> = None;
    let mut current = init.clone();
    for k in 1..=nt {
        let (next, report) = match step(&current, previous.as_ref(), &mats, opts.tol, opts.max_iter) {
            Ok(r) => r,
            Err(e) => {
                return Err(Error::StepFailed {
                    step: k,
                    time: current.t,
                    trace,
                    source: Box::new(e),
                })
            }
        };
        let mut next = next;
        // keep t on the grid of step multiples
        next.t = k as f64 * tau;
        let wk = next.energy(h);
        trace.push(next.t, wk);
        check_bound(&mut bound, k, w0, wk);
        take_snaps(k, &next, &mut snapshots);
        on_step(&next, &report);
        reports.push(report);
        previous = Some(std::mem::replace(&mut current, next));
    }
    if !bound.holds() {
        log::warn!(
            "energy bound exceeded at {} step(s); max ln(W/W0) = {:.4e}, bound {:.4e}",
            bound.violations.len(),
            bound.max_log_growth,
            bound.log_bound
        );
    }
    Ok(RunOutput {
        final_state: current,
        trace,
        reports,
        snapshots,
        bound,
        warnings,
    })
}

/// Largest `|U|`, `|V|` entry; handy for blow-up diagnostics.
pub fn field_max(f: &FieldPair) -> f64 {
    max_abs(&f.u).max(max_abs(&f.v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_params(gamma1: f64) -> ModelParams {
        ModelParams {
            alpha: 1.5,
            beta1: 0.0,
            beta2: 0.0,
            eta1: 0.0,
            eta2: 0.0,
            mu1: 0.0,
            mu2: 0.0,
            zeta1: 0.0,
            zeta2: 0.0,
            gamma1,
            gamma2: 0.0,
            a: -1.0,
            b: 1.0,
            t_final: 1.0,
            test_mode: true,
        }
    }

    fn mats_for(p: &ModelParams, nx: usize, tau: f64) -> StepMatrices {
        let grid = p.grid(nx).unwrap();
        let op = assemble(p.alpha, grid).unwrap();
        StepMatrices::new(op, p, tau, LinearSolverChoice::Dense).unwrap()
    }

    #[test]
    fn physical_params_reject_zeros() {
        let mut p = linear_params(1.0);
        assert!(p.validate().is_ok());
        p.test_mode = false;
        let v = p.violations();
        assert_eq!(v.len(), 6, "{v:?}");
    }

    #[test]
    fn zero_state_is_fixed() {
        let p = linear_params(1.0);
        let mats = mats_for(&p, 10, 0.1);
        let z = FieldPair::zeros(9, 0.0);
        let pred = predictor(&z, None, &mats).unwrap();
        assert!(pred.u.iter().all(|v| v.norm() == 0.0));
        let (half, rep) = fixed_point_halfstep(&z, &pred, &mats, 1e-14, 200).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(half.u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn extrapolating_predictor_keeps_constants() {
        let p = linear_params(1.0);
        let mats = mats_for(&p, 10, 0.1);
        let c = FieldPair {
            u: vec![Complex64::new(0.3, -0.2); 9],
            v: vec![Complex64::new(1.0, 0.0); 9],
            t: 0.0,
        };
        let pred = predictor(&c, Some(&c), &mats).unwrap();
        for (a, b) in pred.u.iter().chain(&pred.v).zip(c.u.iter().chain(&c.v)) {
            assert!((a - b).norm() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn first_predictor_in_linear_mode() {
        let p = linear_params(0.8);
        let tau = 0.1;
        let mats = mats_for(&p, 10, tau);
        let grid = p.grid(10).unwrap();
        let s = init_fields(&grid, |x| Complex64::new(1.0 - x * x, 0.0), |_| Complex64::new(0.0, 0.0)).unwrap();
        let pred = predictor(&s, None, &mats).unwrap();
        for (a, b) in pred.u.iter().zip(&s.u) {
            assert!((a - b * (1.0 + tau * 0.8 / 2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_mode_growth_factor() {
        let p = linear_params(-1.7);
        let tau = 0.05;
        let mats = mats_for(&p, 12, tau);
        let grid = p.grid(12).unwrap();
        let s = init_fields(&grid, |x| Complex64::new(1.0 - x * x, x), |_| Complex64::new(0.0, 0.0)).unwrap();
        let (next, _) = step(&s, None, &mats, 1e-14, 200).unwrap();
        let g = (2.0 + tau * -1.7) / (2.0 - tau * -1.7);
        for (a, b) in next.u.iter().zip(&s.u) {
            assert!((a - b * g).norm() <= 1e-14 * b.norm().max(1e-300));
        }
        assert!(next.v.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn non_finite_initial_data_rejected() {
        let grid = Grid1D::new(0.0, 1.0, 4).unwrap();
        let err = init_fields(&grid, |x| Complex64::new(1.0 / (x - 0.5), 0.0), |_| Complex64::new(0.0, 0.0));
        assert!(err.is_err());
    }
}
