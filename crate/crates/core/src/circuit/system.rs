//! Switched affine systems and their fixed-step integration.
//!
//! A switched system alternates between two affine vector fields
//! `x' = A x + b`: the ON field for the first `duty` fraction of each
//! period and the OFF field for the rest. Switching is commanded by the
//! drive, so transitions sit on step edges and never depend on the state.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Norm growth factor past which an integration is declared unstable.
const INSTABILITY_GROWTH: f64 = 1e8;

/// `x' = a x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::InvalidModel(format!(
                "system matrix {}x{} does not match input of length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite system coefficient".into()));
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn derivative(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }

    /// One classical fourth-order Runge-Kutta step of length `h`.
    pub fn rk4_step(&self, x: &DVector<f64>, h: f64) -> DVector<f64> {
        let k1 = self.derivative(x);
        let k2 = self.derivative(&(x + &k1 * (0.5 * h)));
        let k3 = self.derivative(&(x + &k2 * (0.5 * h)));
        let k4 = self.derivative(&(x + &k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }
}

/// The RK4 step of a linear time-invariant field is itself affine,
/// `x_next = m x + c`; this caches `m` and `c` for one step length.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub m: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl StepOperator {
    pub fn rk4(sys: &AffineSystem, h: f64) -> Self {
        let n = sys.dim();
        let homogeneous = AffineSystem {
            a: sys.a.clone(),
            b: DVector::zeros(n),
        };
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
            m.set_column(j, &homogeneous.rk4_step(&e, h));
        }
        let c = sys.rk4_step(&DVector::zeros(n), h);
        Self { m, c }
    }

    #[inline]
    pub fn apply_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        out.copy_from(&self.c);
        out.gemv(1.0, &self.m, x, 1.0);
    }
}

/// Two affine fields toggled by a periodic drive.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedSystem {
    pub on: AffineSystem,
    pub off: AffineSystem,
    /// Switching period, seconds.
    pub period: f64,
    /// Fraction of the period spent in the ON field.
    pub duty: f64,
}

impl SwitchedSystem {
    pub fn new(on: AffineSystem, off: AffineSystem, period: f64, duty: f64) -> Result<Self> {
        if on.dim() != off.dim() {
            return Err(Error::InvalidModel(
                "ON and OFF systems must share the state ordering".into(),
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidModel(format!("period {period} must be > 0")));
        }
        if !(duty > 0.0 && duty < 1.0) {
            return Err(Error::InvalidModel(format!("duty {duty} must lie in (0, 1)")));
        }
        Ok(Self {
            on,
            off,
            period,
            duty,
        })
    }

    pub fn dim(&self) -> usize {
        self.on.dim()
    }

    /// Step schedule for `steps_per_cycle`, checking the ON/OFF edge lands
    /// on a step boundary.
    pub fn schedule(&self, steps_per_cycle: usize) -> Result<Schedule> {
        Schedule::new(self.period, self.duty, steps_per_cycle)
    }

    pub fn operators(&self, schedule: &Schedule) -> CycleOperators {
        CycleOperators {
            on: StepOperator::rk4(&self.on, schedule.dt),
            off: StepOperator::rk4(&self.off, schedule.dt),
            schedule: *schedule,
        }
    }
}

/// Uniform step grid over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub steps_per_cycle: usize,
    /// Steps spent in the ON field at the start of each period.
    pub on_steps: usize,
    pub dt: f64,
}

pub const MIN_STEPS_PER_CYCLE: usize = 64;

impl Schedule {
    pub fn new(period: f64, duty: f64, steps_per_cycle: usize) -> Result<Self> {
        if steps_per_cycle < MIN_STEPS_PER_CYCLE {
            return Err(Error::Precondition(format!(
                "steps_per_cycle = {steps_per_cycle} must be >= {MIN_STEPS_PER_CYCLE}"
            )));
        }
        let exact = duty * steps_per_cycle as f64;
        let on_steps = exact.round();
        if (exact - on_steps).abs() > 1e-9 * steps_per_cycle as f64
            || on_steps < 1.0
            || on_steps >= steps_per_cycle as f64
        {
            return Err(Error::Precondition(format!(
                "duty {duty} x {steps_per_cycle} steps does not put the switching \
                 edge on a step boundary"
            )));
        }
        Ok(Self {
            steps_per_cycle,
            on_steps: on_steps as usize,
            dt: period / steps_per_cycle as f64,
        })
    }

    /// Whether step `k` (counted from the start of a period) is in the ON field.
    #[inline]
    pub fn is_on(&self, k: usize) -> bool {
        k % self.steps_per_cycle < self.on_steps
    }
}

/// Cached step operators for both switch states.
#[derive(Debug, Clone)]
pub struct CycleOperators {
    pub on: StepOperator,
    pub off: StepOperator,
    pub schedule: Schedule,
}

impl CycleOperators {
    pub fn dim(&self) -> usize {
        self.on.c.len()
    }

    /// Integrates `n_cycles` periods from `x0`, calling `visit` on every
    /// sample including `x0`.
    pub fn integrate(
        &self,
        x0: &DVector<f64>,
        n_cycles: usize,
        mut visit: impl FnMut(&DVector<f64>),
    ) -> Result<DVector<f64>> {
        let steps = self.schedule.steps_per_cycle;
        let forcing = self.on.c.amax().max(self.off.c.amax()) * steps as f64;
        let bound = INSTABILITY_GROWTH * (1.0 + x0.amax() + forcing);
        let mut x = x0.clone();
        let mut next = DVector::zeros(x.len());
        visit(&x);
        for k in 0..n_cycles * steps {
            let op = if self.schedule.is_on(k) { &self.on } else { &self.off };
            op.apply_into(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
            let norm = x.amax();
            if !norm.is_finite() || norm > bound {
                return Err(Error::Unstable {
                    step: k + 1,
                    norm,
                    steps_per_cycle: steps,
                });
            }
            visit(&x);
        }
        Ok(x)
    }

    /// State after one full period starting from `x`.
    pub fn cycle_map(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.integrate(x, 1, |_| {})
    }
}

/// Settings for the periodic steady-state search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Relative cycle-map residual accepted as periodic.
    pub tol: f64,
    /// Cycle budget, counting the cycles spent on shooting Jacobians.
    pub max_cycles: usize,
    pub steps_per_cycle: usize,
    /// Fixed-point cycles between shooting corrections.
    pub shooting_interval: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_cycles: 500,
            steps_per_cycle: 1024,
            shooting_interval: 100,
        }
    }
}

/// Outcome of a periodic steady-state search.
#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub x_star: DVector<f64>,
    pub converged: bool,
    pub cycles_used: usize,
    /// Final relative residual `|phi(x) - x| / (|x| + eps)`.
    pub residual: f64,
}

const RESIDUAL_EPS: f64 = 1e-12;
const NEWTON_REFINEMENTS: usize = 4;

fn relative_residual(x: &DVector<f64>, fx: &DVector<f64>) -> f64 {
    (fx - x).norm() / (x.norm() + RESIDUAL_EPS)
}

/// One Newton step on `phi(x) - x = 0` with a finite-difference Jacobian.
/// Returns the corrected state and the number of cycles spent.
fn shooting_step(
    ops: &CycleOperators,
    x: &DVector<f64>,
    fx: &DVector<f64>,
) -> Result<(DVector<f64>, usize)> {
    let n = x.len();
    // The cycle map is affine, so the difference quotient carries no
    // truncation error and a generous perturbation is safe.
    let h = 1e-2 * x.amax().max(1e-6);
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        xp[j] += h;
        let fp = ops.cycle_map(&xp)?;
        jac.set_column(j, &((fp - fx) / h));
    }
    let lhs = jac - DMatrix::identity(n, n);
    let rhs = -(fx - x);
    let delta = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Divergent("singular shooting Jacobian".into()))?;
    Ok((x + delta, n))
}

/// Fixed-point iteration of the cycle map with periodic shooting
/// corrections; a final shooting refinement runs when the cycle budget is
/// exhausted.
pub fn periodic_steady_state(
    sys: &SwitchedSystem,
    x0: &DVector<f64>,
    opts: &SteadyStateOptions,
) -> Result<PeriodicSolution> {
    let schedule = sys.schedule(opts.steps_per_cycle)?;
    let ops = sys.operators(&schedule);
    periodic_steady_state_with(&ops, x0, opts)
}

pub(crate) fn periodic_steady_state_with(
    ops: &CycleOperators,
    x0: &DVector<f64>,
    opts: &SteadyStateOptions,
) -> Result<PeriodicSolution> {
    if x0.len() != ops.dim() {
        return Err(Error::Precondition(format!(
            "initial state has {} entries, system has {}",
            x0.len(),
            ops.dim()
        )));
    }
    let interval = opts.shooting_interval.max(1);
    let mut x = x0.clone();
    let mut cycles = 0usize;
    let mut since_shoot = 0usize;
    loop {
        let fx = ops.cycle_map(&x).map_err(diverged)?;
        cycles += 1;
        since_shoot += 1;
        let residual = relative_residual(&x, &fx);
        if !residual.is_finite() {
            return Err(Error::Divergent("non-finite cycle-map residual".into()));
        }
        if residual < opts.tol {
            return Ok(PeriodicSolution {
                x_star: fx,
                converged: true,
                cycles_used: cycles,
                residual,
            });
        }
        if cycles >= opts.max_cycles {
            x = fx;
            break;
        }
        if since_shoot >= interval && cycles + ops.dim() < opts.max_cycles {
            let (shot, spent) = shooting_step(ops, &x, &fx)?;
            cycles += spent;
            since_shoot = 0;
            x = shot;
        } else {
            x = fx;
        }
    }

    // Budget exhausted: refine by shooting before giving up.
    let mut fx = ops.cycle_map(&x).map_err(diverged)?;
    cycles += 1;
    let mut residual = relative_residual(&x, &fx);
    for _ in 0..NEWTON_REFINEMENTS {
        if residual < opts.tol {
            break;
        }
        let (shot, spent) = shooting_step(ops, &x, &fx)?;
        cycles += spent;
        x = shot;
        fx = ops.cycle_map(&x).map_err(diverged)?;
        cycles += 1;
        residual = relative_residual(&x, &fx);
    }
    Ok(PeriodicSolution {
        converged: residual < opts.tol,
        x_star: fx,
        cycles_used: cycles,
        residual,
    })
}

fn diverged(e: Error) -> Error {
    match e {
        Error::Unstable { step, norm, .. } => {
            Error::Divergent(format!("state norm {norm:e} at step {step}"))
        }
        other => other,
    }
}
