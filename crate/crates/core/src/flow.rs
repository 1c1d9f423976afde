//! Deterministic dynamics between jumps.
//!
//! One step of length `h` applies, in order:
//! 1. the queue update with outflow `g_out` computed from the pre-step queue,
//! 2. the left-sided upwind update of the density with inlet flux `g_out`,
//! 3. the explicit-Euler/rectangle-rule update of the workload.
//!
//! The capacity `μ = r c` is constant during a call since the status only
//! changes at jumps.

use crate::error::{Result, SimError};
use crate::model::{ModelParams, Scenario, Status, SystemState};
use crate::scalar::Scalar;

/// Diagnostics of one flow step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStepReport<T> {
    pub t_start: T,
    pub dt: T,
    pub inflow: T,
    /// Realized queue outflow, i.e. the processor inlet flux.
    pub g_out: T,
    /// Flux leaving the processor at `x = b`.
    pub out_flux: T,
    /// Total mass `q + Δx Σρ` after the step.
    pub mass: T,
    /// `|Δ(q + Δx Σρ) − Δt (G_in − out_flux)|`.
    pub mass_balance_residual: T,
}

/// Explicit Euler step of the queue. Returns `(q_new, g_out)`.
///
/// An empty queue passes `min(G_in, μ)`. A nonempty queue drains at `μ`,
/// capped at `G_in + q/Δt` so that it empties exactly instead of going
/// negative.
pub fn queue_step<T: Scalar>(q: T, inflow: T, capacity: T, dt: T) -> Result<(T, T)> {
    if !(q >= T::zero() && inflow >= T::zero() && capacity >= T::zero() && dt > T::zero()) {
        return Err(SimError::domain(
            "queue_step",
            format!("need q, G_in, mu >= 0 and dt > 0; got q={q}, G_in={inflow}, mu={capacity}, dt={dt}"),
        ));
    }
    if q == T::zero() {
        let g_out = inflow.min(capacity);
        return Ok((dt * (inflow - g_out), g_out));
    }
    let drain = inflow + q / dt;
    if capacity >= drain {
        Ok((T::zero(), drain))
    } else {
        let q_new = q + dt * (inflow - capacity);
        Ok((q_new.max(T::zero()), capacity))
    }
}

/// Left-sided upwind step of `∂t ρ + ∂x min(vρ, μ) = 0`, returning the new grid.
pub fn upwind_step<T: Scalar>(
    rho: &[T],
    capacity: T,
    g_out: T,
    params: &ModelParams<T>,
    dt: T,
    dx: T,
) -> Result<Vec<T>> {
    let mut out = rho.to_vec();
    upwind_step_in_place(&mut out, capacity, g_out, params.velocity, dt, dx)?;
    Ok(out)
}

/// In-place variant of [`upwind_step`]. Returns the outlet flux
/// `min(v ρ_N, μ)` evaluated on the pre-step grid.
pub fn upwind_step_in_place<T: Scalar>(
    rho: &mut [T],
    capacity: T,
    g_out: T,
    velocity: T,
    dt: T,
    dx: T,
) -> Result<T> {
    let courant = velocity * dt / dx;
    if courant > T::one() + T::lit(4.0) * T::epsilon() {
        return Err(SimError::Cfl {
            v_dt: (velocity * dt).as_f64(),
            dx: dx.as_f64(),
        });
    }
    if g_out > capacity * (T::one() + T::lit(4.0) * T::epsilon()) || g_out < T::zero() {
        return Err(SimError::domain(
            "upwind_step",
            format!("inlet flux {g_out} outside [0, mu = {capacity}]"),
        ));
    }
    let ratio = dt / dx;
    let mut upstream_flux = g_out;
    for (i, cell) in rho.iter_mut().enumerate() {
        let old = *cell;
        let flux = (velocity * old).min(capacity);
        let mut new = old - ratio * flux + ratio * upstream_flux;
        if new < T::zero() {
            let scale = old.max(ratio * upstream_flux).max(T::min_positive_value());
            if new < -T::lit(64.0) * T::epsilon() * scale {
                return Err(SimError::Invariant(format!(
                    "upwind step produced density {new} in cell {i}"
                )));
            }
            new = T::zero();
        }
        *cell = new;
        upstream_flux = flux;
    }
    Ok(upstream_flux)
}

/// Rectangle-rule workload update `w + Δt r Δx Σρ`.
pub fn workload_step<T: Scalar>(w: T, r: Status, rho: &[T], dx: T, dt: T) -> T {
    match r {
        Status::Down => w,
        Status::Up => w + dt * dx * rho.iter().fold(T::zero(), |acc, &x| acc + x),
    }
}

/// Advances `state` by one step of length `h <= Δt` with the status held fixed.
pub fn flow_step<T: Scalar>(
    state: &mut SystemState<T>,
    h: T,
    scenario: &Scenario<T>,
) -> Result<FlowStepReport<T>> {
    let params = &scenario.params;
    let dx = scenario.dx;
    let mass_before = state.total_mass(dx);
    let inflow = scenario.inflow.rate_at(state.t);
    let capacity = params.capacity(state.r);

    let (q_new, g_out) = queue_step(state.q, inflow, capacity, h)?;
    let w_new = workload_step(state.w, state.r, &state.rho, dx, h);
    let out_flux = upwind_step_in_place(&mut state.rho, capacity, g_out, params.velocity, h, dx)?;
    state.q = q_new;
    state.w = w_new;

    let t_start = state.t;
    state.t += h;
    let mass = state.total_mass(dx);
    let residual = ((mass - mass_before) - h * (inflow - out_flux)).abs();
    Ok(FlowStepReport {
        t_start,
        dt: h,
        inflow,
        g_out,
        out_flux,
        mass,
        mass_balance_residual: residual,
    })
}

/// Remaining intervals shorter than this fraction of `Δt` are absorbed by
/// snapping the clock, so roundoff never produces degenerate steps.
const SNAP_FRACTION: f64 = 1e-9;

/// Advances `state` to `t_target` with full steps of `Δt` and one shorter
/// final step, calling `on_step` after each step. On return `state.t` equals
/// `t_target` exactly.
pub fn advance_with<T: Scalar, F>(
    state: &mut SystemState<T>,
    t_target: T,
    scenario: &Scenario<T>,
    mut on_step: F,
) -> Result<()>
where
    F: FnMut(&SystemState<T>, &FlowStepReport<T>) -> Result<()>,
{
    if t_target < state.t {
        return Err(SimError::domain(
            "flow_advance",
            format!("target time {t_target} precedes state time {}", state.t),
        ));
    }
    let snap = T::lit(SNAP_FRACTION) * scenario.dt;
    while t_target - state.t > snap {
        let h = scenario.dt.min(t_target - state.t);
        let report = flow_step(state, h, scenario)?;
        on_step(state, &report)?;
    }
    state.t = t_target;
    Ok(())
}

/// Flow map: the state at `t_target` and the per-step reports.
pub fn flow_advance<T: Scalar>(
    state: &SystemState<T>,
    t_target: T,
    scenario: &Scenario<T>,
) -> Result<(SystemState<T>, Vec<FlowStepReport<T>>)> {
    let mut next = state.clone();
    let mut reports = Vec::new();
    advance_with(&mut next, t_target, scenario, |_, r| {
        reports.push(*r);
        Ok(())
    })?;
    Ok((next, reports))
}
