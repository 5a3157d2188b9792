use crate::error::{Error, Result};

use super::field::{solve_increasing, PeriodicField};
use super::operators::{apply_ak, euler_hk_rhs, q_k, MetricOrder};

/// Default threshold on `min φ_x` below which the flow map is declared
/// no longer a diffeomorphism.
pub const DEFAULT_DIFFEO_EPS: f64 = 1e-6;

/// Default step for the exponential map.
pub const DEFAULT_EXP_DT: f64 = 1e-3;

/// Relative tolerance on `|v - u∘φ|` accepted by [`momentum_k`].
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// A circle diffeomorphism `φ(x) = x + ψ(x)` with its time derivative `v = φ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMapState {
    pub psi: PeriodicField,
    pub v: PeriodicField,
    pub t: f64,
}

impl FlowMapState {
    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self {
            psi: PeriodicField::zeros(n)?,
            v: PeriodicField::zeros(n)?,
            t: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.psi.n()
    }

    /// `φ(x_j)`.
    pub fn phi_points(&self) -> Vec<f64> {
        phi_points(&self.psi)
    }

    pub fn phi_x(&self) -> PeriodicField {
        phi_x(&self.psi)
    }

    pub fn min_phi_x(&self) -> f64 {
        self.phi_x().min()
    }

    /// `f∘φ` sampled on the grid.
    pub fn compose(&self, f: &PeriodicField) -> Result<PeriodicField> {
        self.psi.same_grid(f)?;
        Ok(PeriodicField::raw(f.eval_at(&self.phi_points())))
    }

    /// `φ⁻¹(x_j)`, by monotone root-finding on `y + ψ(y) = x_j`.
    pub fn inverse_points(&self) -> Result<Vec<f64>> {
        let min = self.min_phi_x();
        if !(min > 0.0) {
            return Err(Error::DiffeoLoss {
                time: self.t,
                min_phi_x: min,
            });
        }
        let psi = self.psi.interpolant();
        let dpsi = psi.derivative(1);
        let reach = self.psi.max_abs() * 1.01 + 1e-12;
        Ok(PeriodicField::grid(self.n())
            .into_iter()
            .map(|x| solve_increasing(|y| (y + psi.eval(y) - x, 1.0 + dpsi.eval(y)), x - reach, x + reach))
            .collect())
    }
}

fn phi_points(psi: &PeriodicField) -> Vec<f64> {
    PeriodicField::grid(psi.n())
        .into_iter()
        .zip(psi.values())
        .map(|(x, p)| x + p)
        .collect()
}

fn phi_x(psi: &PeriodicField) -> PeriodicField {
    psi.dx().map_values(|d| 1.0 + d)
}

impl PeriodicField {
    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::raw(self.values().iter().map(|&v| f(v)).collect())
    }
}

fn rk4_pair<F>(y: (&PeriodicField, &PeriodicField), dt: f64, f: F) -> Result<(PeriodicField, PeriodicField)>
where
    F: Fn(&PeriodicField, &PeriodicField) -> Result<(PeriodicField, PeriodicField)>,
{
    let axpy = |a: &PeriodicField, b: &PeriodicField, s: f64| a + &b.scale(s);
    let (a1, b1) = f(y.0, y.1)?;
    let (a2, b2) = f(&axpy(y.0, &a1, 0.5 * dt), &axpy(y.1, &b1, 0.5 * dt))?;
    let (a3, b3) = f(&axpy(y.0, &a2, 0.5 * dt), &axpy(y.1, &b2, 0.5 * dt))?;
    let (a4, b4) = f(&axpy(y.0, &a3, dt), &axpy(y.1, &b3, dt))?;
    let combine =
        |y: &PeriodicField, k1: &PeriodicField, k2: &PeriodicField, k3: &PeriodicField, k4: &PeriodicField| {
            let sum = &(&(k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + k4;
            axpy(y, &sum, dt / 6.0)
        };
    Ok((combine(y.0, &a1, &a2, &a3, &a4), combine(y.1, &b1, &b2, &b3, &b4)))
}

/// Time-stepping scheme for [`euler_hk_step`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scheme {
    #[default]
    Rk4,
    /// Implicit midpoint rule solved by fixed-point iteration. Conserves the
    /// `H^k` energy of the dealiased system up to the solver tolerance.
    ImplicitMidpoint,
}

/// One step of `u_t = B_k(u, u)`. A non-finite result is reported as
/// [`Error::Divergence`] with step index 0; callers attach their own index.
pub fn euler_hk_step(u: &PeriodicField, k: usize, dt: f64, scheme: Scheme, dealias: bool) -> Result<PeriodicField> {
    MetricOrder::new(k)?;
    check_dt(dt)?;
    let f = |u: &PeriodicField| euler_hk_rhs(u, k, dealias);
    let k1 = f(u)?;
    let k2 = f(&(u + &k1.scale(0.5 * dt)))?;
    let k3 = f(&(u + &k2.scale(0.5 * dt)))?;
    let k4 = f(&(u + &k3.scale(dt)))?;
    let sum = &(&(&k1 + &k2.scale(2.0)) + &k3.scale(2.0)) + &k4;
    let mut out = u + &sum.scale(dt / 6.0);
    if scheme == Scheme::ImplicitMidpoint && out.is_finite() {
        let tol = 4.0 * f64::EPSILON * (1.0 + u.max_abs());
        let mut converged = false;
        for _ in 0..100 {
            let mid = (u + &out).scale(0.5);
            let next = u + &f(&mid)?.scale(dt);
            let change = (&next - &out).max_abs();
            out = next;
            if change <= tol || !change.is_finite() {
                converged = change <= tol;
                break;
            }
        }
        if !converged {
            return Err(Error::Divergence {
                step: 0,
                time: f64::NAN,
            });
        }
    }
    if !out.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            time: f64::NAN,
        });
    }
    Ok(out)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// Step sizes covering `[0, t_end]`: whole steps of `dt` and, if needed, one
/// shorter final step.
pub fn step_schedule(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    check_dt(dt)?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "end time must be non-negative, got {t_end}"
        )));
    }
    let ratio = t_end / dt;
    let whole = (ratio + 1e-9).floor() as usize;
    let mut steps = vec![dt; whole];
    let rest = t_end - whole as f64 * dt;
    if rest > 1e-12 * t_end.max(dt) {
        steps.push(rest);
    }
    Ok(steps)
}

/// Eulerian integrator for `u_t = B_k(u, u)` that carries the flow map along
/// through `ψ_t = u(x + ψ)`.
#[derive(Clone, Debug)]
pub struct GeodesicFlow {
    k: usize,
    dt: f64,
    dealias: bool,
    diffeo_eps: f64,
    u: PeriodicField,
    psi: PeriodicField,
    t: f64,
    steps: usize,
}

impl GeodesicFlow {
    pub fn new(u0: PeriodicField, k: usize, dt: f64) -> Result<Self> {
        MetricOrder::new(k)?;
        check_dt(dt)?;
        let psi = PeriodicField::zeros(u0.n())?;
        Ok(Self {
            k,
            dt,
            dealias: false,
            diffeo_eps: DEFAULT_DIFFEO_EPS,
            u: u0,
            psi,
            t: 0.0,
            steps: 0,
        })
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn with_diffeo_eps(mut self, eps: f64) -> Self {
        self.diffeo_eps = eps;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn u(&self) -> &PeriodicField {
        &self.u
    }

    pub fn psi(&self) -> &PeriodicField {
        &self.psi
    }

    pub fn min_phi_x(&self) -> f64 {
        phi_x(&self.psi).min()
    }

    /// Current flow map with `v = u∘φ`.
    pub fn state(&self) -> FlowMapState {
        FlowMapState {
            psi: self.psi.clone(),
            v: PeriodicField::raw(self.u.eval_at(&phi_points(&self.psi))),
            t: self.t,
        }
    }

    fn rhs(&self, u: &PeriodicField, psi: &PeriodicField) -> Result<(PeriodicField, PeriodicField)> {
        let du = euler_hk_rhs(u, self.k, self.dealias)?;
        let dpsi = PeriodicField::raw(u.eval_at(&phi_points(psi)));
        Ok((du, dpsi))
    }

    /// Advances by `h` (normally `dt`).
    pub fn step_by(&mut self, h: f64) -> Result<()> {
        check_dt(h)?;
        let (u, psi) = rk4_pair((&self.u, &self.psi), h, |u, p| self.rhs(u, p))?;
        let (step, time) = (self.steps + 1, self.t + h);
        if !u.is_finite() || !psi.is_finite() {
            return Err(Error::Divergence { step, time });
        }
        let min = phi_x(&psi).min();
        if !(min > self.diffeo_eps) {
            return Err(Error::DiffeoLoss { time, min_phi_x: min });
        }
        self.u = u;
        self.psi = psi;
        self.t = time;
        self.steps = step;
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        self.step_by(self.dt)
    }

    /// Integrates to `t_end`, calling `observe` after every step.
    pub fn run_until(&mut self, t_end: f64, mut observe: impl FnMut(&Self)) -> Result<()> {
        for h in step_schedule(t_end - self.t, self.dt)? {
            self.step_by(h)?;
            observe(self);
        }
        Ok(())
    }
}

/// One sample of a geodesic: flow map and Eulerian velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSample {
    pub state: FlowMapState,
    pub u: PeriodicField,
}

/// Geodesic from the identity with initial velocity `u0`, sampled at `t = 0`
/// and after every step.
pub fn geodesic_flow(u0: &PeriodicField, k: usize, t_end: f64, dt: f64) -> Result<Vec<GeodesicSample>> {
    let mut flow = GeodesicFlow::new(u0.clone(), k, dt)?;
    let mut out = vec![GeodesicSample {
        state: flow.state(),
        u: u0.clone(),
    }];
    flow.run_until(t_end, |f| {
        out.push(GeodesicSample {
            state: f.state(),
            u: f.u().clone(),
        })
    })?;
    Ok(out)
}

/// `P_k(φ, v) = [Q_k(v∘φ⁻¹)]∘φ`.
pub fn p_k(state: &FlowMapState, k: usize) -> Result<PeriodicField> {
    state.psi.same_grid(&state.v)?;
    let u = PeriodicField::raw(state.v.eval_at(&state.inverse_points()?));
    state.compose(&q_k(&u, k)?)
}

/// `P_0(φ, v) = -2 v v_x / φ_x`.
pub fn p0_rhs(state: &FlowMapState) -> Result<PeriodicField> {
    state.psi.same_grid(&state.v)?;
    let phi_x = state.phi_x();
    let min = phi_x.min();
    if !(min > 0.0) {
        return Err(Error::DiffeoLoss {
            time: state.t,
            min_phi_x: min,
        });
    }
    let vv = &state.v * &state.v.dx();
    Ok(PeriodicField::raw(
        vv.values()
            .iter()
            .zip(phi_x.values())
            .map(|(a, b)| -2.0 * a / b)
            .collect(),
    ))
}

/// Integrates `φ_t = v, v_t = P_k(φ, v)` directly in Lagrangian variables.
pub fn lagrangian_step(state: &FlowMapState, k: usize, dt: f64) -> Result<FlowMapState> {
    MetricOrder::new(k)?;
    check_dt(dt)?;
    let t = state.t;
    let rhs = |psi: &PeriodicField, v: &PeriodicField| {
        let s = FlowMapState {
            psi: psi.clone(),
            v: v.clone(),
            t,
        };
        let acc = if k == 0 { p0_rhs(&s)? } else { p_k(&s, k)? };
        Ok((v.clone(), acc))
    };
    let (psi, v) = rk4_pair((&state.psi, &state.v), dt, rhs)?;
    if !psi.is_finite() || !v.is_finite() {
        return Err(Error::Divergence { step: 0, time: t + dt });
    }
    Ok(FlowMapState { psi, v, t: t + dt })
}

/// `m_k = A_k(u)∘φ · φ_x²`; constant in time along a geodesic.
pub fn momentum_k(state: &FlowMapState, u: &PeriodicField, k: usize) -> Result<PeriodicField> {
    state.psi.same_grid(u)?;
    let uphi = state.compose(u)?;
    let gap = (&state.v - &uphi).max_abs();
    if gap > CONSISTENCY_TOL * (1.0 + u.max_abs()) {
        return Err(Error::InconsistentState(gap));
    }
    let m = state.compose(&apply_ak(u, k)?)?;
    let jac = state.phi_x();
    Ok(&m * &(&jac * &jac))
}

/// `exp(u0) = φ(1; u0)` with the default step.
pub fn riemannian_exp(u0: &PeriodicField, k: usize) -> Result<FlowMapState> {
    riemannian_exp_with(u0, k, DEFAULT_EXP_DT)
}

pub fn riemannian_exp_with(u0: &PeriodicField, k: usize, dt: f64) -> Result<FlowMapState> {
    MetricOrder::new(k)?;
    check_dt(dt)?;
    let mut flow = GeodesicFlow::new(u0.clone(), k, dt)?;
    flow.run_until(1.0, |_| {})
        .map_err(|e| Error::OutOfDomain(Box::new(e)))?;
    Ok(flow.state())
}

/// Central-difference probes `(exp(h w) - exp(-h w)) / 2h` of the derivative
/// of the exponential map at zero, as displacement fields.
pub fn dexp_at_zero(k: usize, directions: &[PeriodicField], h: f64) -> Result<Vec<PeriodicField>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("probe step must be positive, got {h}")));
    }
    directions
        .iter()
        .map(|w| {
            let plus = riemannian_exp(&w.scale(h), k)?;
            let minus = riemannian_exp(&w.scale(-h), k)?;
            Ok((&plus.psi - &minus.psi).scale(0.5 / h))
        })
        .collect()
}
