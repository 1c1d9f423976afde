//! Trajectories of the piecewise deterministic process.
//!
//! Jump times are generated by thinning: candidates arrive at the constant
//! rate `Λ = max(λ₁₀max, λ₀₁)`, the flow is advanced to each candidate, and
//! the candidate is accepted with probability `ψ/Λ` where `ψ` is the rate of
//! leaving the current status. A failure keeps the workload, a repair resets
//! it to zero. Queue and density are continuous across jumps.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SimError};
use crate::flow::advance_with;
use crate::model::{transition_rate, ModelParams, Scenario, Status, SystemState};
use crate::scalar::Scalar;

/// Per-trajectory random stream: ChaCha8 keyed by the master seed, with the
/// sample index as stream id. Streams never overlap, so trajectory `i` is
/// the same whatever worker computes it.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Dominating rate of the thinning clock.
pub fn rate_bound<T: Scalar>(params: &ModelParams<T>) -> T {
    params.lambda_10_max.max(params.lambda_01)
}

/// Inverse transform of `Exp(rate)`: `−ln(u)/rate`.
pub fn exponential_from_uniform<T: Scalar>(u: T, rate: T) -> T {
    -u.ln() / rate
}

/// Next candidate time after `t` for a clock of rate `bound > 0`.
pub fn propose_next_candidate<T: Scalar, R: Rng + ?Sized>(t: T, bound: T, rng: &mut R) -> T {
    loop {
        let u: f64 = rng.sample(Open01);
        let next = t + exponential_from_uniform(T::lit(u), bound);
        if next > t {
            return next;
        }
    }
}

/// Thinning test at a candidate: accept with probability `ψ/Λ`.
pub fn accept_candidate<T: Scalar, R: Rng + ?Sized>(
    state: &SystemState<T>,
    bound: T,
    params: &ModelParams<T>,
    rng: &mut R,
) -> Result<bool> {
    let intensity = transition_rate(state.t, state.r, state.w, params)?;
    if intensity > bound {
        return Err(SimError::Invariant(format!(
            "intensity {intensity} exceeds thinning bound {bound}"
        )));
    }
    let u: f64 = rng.gen();
    Ok(T::lit(u) * bound < intensity)
}

/// Jump kernel: `(w, 1, q, ρ) → (w, 0, q, ρ)` and `(w, 0, q, ρ) → (0, 1, q, ρ)`.
pub fn apply_jump<T: Scalar>(state: &SystemState<T>) -> SystemState<T> {
    let mut next = state.clone();
    jump_in_place(&mut next);
    next
}

fn jump_in_place<T: Scalar>(state: &mut SystemState<T>) {
    state.w = match state.r {
        Status::Up => state.w,
        Status::Down => T::zero(),
    };
    state.r = state.r.flipped();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpKind {
    /// Up to down.
    Failure,
    /// Down to up; resets the workload.
    Repair,
}

impl JumpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpKind::Failure => "failure",
            JumpKind::Repair => "repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub kind: JumpKind,
    pub w_before: T,
    pub w_after: T,
    pub r_after: Status,
    pub q_after: T,
    pub mass_after: T,
}

/// Observables of one trajectory on the output grid plus its jump log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub sample_times: Vec<T>,
    pub w_series: Vec<T>,
    pub capacity_series: Vec<T>,
    pub q_series: Vec<T>,
    /// Density in the last cell.
    pub outflow_density_series: Vec<T>,
    pub jumps: Vec<JumpEvent<T>>,
    pub repair_count: usize,
}

impl<T: Scalar> TrajectoryRecord<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            sample_times: Vec::with_capacity(n),
            w_series: Vec::with_capacity(n),
            capacity_series: Vec::with_capacity(n),
            q_series: Vec::with_capacity(n),
            outflow_density_series: Vec::with_capacity(n),
            jumps: Vec::new(),
            repair_count: 0,
        }
    }

    fn push_sample(&mut self, state: &SystemState<T>, params: &ModelParams<T>) {
        self.sample_times.push(state.t);
        self.w_series.push(state.w);
        self.capacity_series.push(params.capacity(state.r));
        self.q_series.push(state.q);
        self.outflow_density_series.push(state.outlet_density());
    }

    /// Time of the first failure, if any.
    pub fn first_failure(&self) -> Option<T> {
        self.jumps
            .iter()
            .find(|j| j.kind == JumpKind::Failure)
            .map(|j| j.time)
    }
}

/// Uniform output grid `k · stride · Δt` on `[0, T]`.
pub fn output_grid<T: Scalar>(scenario: &Scenario<T>, stride: usize) -> Vec<T> {
    let step = scenario.dt * T::from_usize_lossy(stride.max(1));
    let last = (scenario.horizon / step + T::lit(1e-9)).floor();
    let count = last.to_usize().unwrap_or(0);
    (0..=count).map(|k| T::from_usize_lossy(k) * step).collect()
}

/// Stateful thinning simulator for a single path.
pub struct PathSimulator<'a, T, R> {
    scenario: &'a Scenario<T>,
    bound: T,
    rng: R,
    next_candidate: T,
    state: SystemState<T>,
    jumps: Vec<JumpEvent<T>>,
}

impl<'a, T: Scalar, R: Rng> PathSimulator<'a, T, R> {
    /// Starts from `state`, which need not be the scenario's initial state.
    pub fn new(scenario: &'a Scenario<T>, state: SystemState<T>, mut rng: R) -> Self {
        let bound = rate_bound(&scenario.params);
        let next_candidate = if bound > T::zero() {
            propose_next_candidate(state.t, bound, &mut rng)
        } else {
            T::infinity()
        };
        Self {
            scenario,
            bound,
            rng,
            next_candidate,
            state,
            jumps: Vec::new(),
        }
    }

    pub fn state(&self) -> &SystemState<T> {
        &self.state
    }

    pub fn jumps(&self) -> &[JumpEvent<T>] {
        &self.jumps
    }

    /// Runs the process up to and including time `t`. Candidates falling
    /// exactly on `t` are resolved before returning, so the state is the
    /// post-jump one.
    pub fn advance_to(&mut self, t: T) -> Result<()> {
        let scenario = self.scenario;
        while self.next_candidate <= t {
            let candidate = self.next_candidate;
            advance_with(&mut self.state, candidate, scenario, |_, _| Ok(()))?;
            if accept_candidate(&self.state, self.bound, &scenario.params, &mut self.rng)? {
                let w_before = self.state.w;
                let kind = match self.state.r {
                    Status::Up => JumpKind::Failure,
                    Status::Down => JumpKind::Repair,
                };
                jump_in_place(&mut self.state);
                self.jumps.push(JumpEvent {
                    time: candidate,
                    kind,
                    w_before,
                    w_after: self.state.w,
                    r_after: self.state.r,
                    q_after: self.state.q,
                    mass_after: self.state.total_mass(scenario.dx),
                });
            }
            self.next_candidate = propose_next_candidate(candidate, self.bound, &mut self.rng);
        }
        advance_with(&mut self.state, t, scenario, |_, _| Ok(()))
    }

    pub fn into_parts(self) -> (SystemState<T>, Vec<JumpEvent<T>>) {
        (self.state, self.jumps)
    }
}

/// Simulates sample `index` of an ensemble keyed by `master_seed`, recording
/// every `stride`-th point of the `Δt` grid.
pub fn simulate_sample<T: Scalar>(
    scenario: &Scenario<T>,
    master_seed: u64,
    index: u64,
    stride: usize,
) -> Result<TrajectoryRecord<T>> {
    let grid = output_grid(scenario, stride);
    simulate_on_grid(scenario, &grid, trajectory_rng(master_seed, index))
}

/// One trajectory on `[0, T]` seeded by `seed`, sampled on the `Δt` grid.
pub fn simulate_trajectory<T: Scalar>(
    scenario: &Scenario<T>,
    seed: u64,
) -> Result<TrajectoryRecord<T>> {
    simulate_sample(scenario, seed, 0, 1)
}

/// Simulates on `[0, horizon]` and records the observables at each time in
/// `grid` (nondecreasing, within the horizon).
pub fn simulate_on_grid<T: Scalar, R: Rng>(
    scenario: &Scenario<T>,
    grid: &[T],
    rng: R,
) -> Result<TrajectoryRecord<T>> {
    scenario.validate()?;
    let mut record = TrajectoryRecord::with_capacity(grid.len());
    let mut sim = PathSimulator::new(scenario, scenario.initial_state(), rng);
    for &t in grid {
        if t > scenario.horizon {
            break;
        }
        sim.advance_to(t)?;
        record.push_sample(sim.state(), &scenario.params);
    }
    sim.advance_to(scenario.horizon)?;
    let (_, jumps) = sim.into_parts();
    record.repair_count = jumps.iter().filter(|j| j.kind == JumpKind::Repair).count();
    record.jumps = jumps;
    Ok(record)
}

/// Survival function of the first failure time,
/// `S(t) = exp(−∫₀ᵗ λ₁₀(w(s)) ds)`, along the jump-free path, with the hazard
/// integrated by the trapezoidal rule over the flow steps. Requires `r0 = 1`.
pub fn first_failure_survival_oracle<T: Scalar>(
    scenario: &Scenario<T>,
    grid: &[T],
) -> Result<Vec<T>> {
    scenario.validate()?;
    if scenario.r0 != Status::Up {
        return Err(SimError::domain(
            "first_failure_survival_oracle",
            "machine must start up",
        ));
    }
    let params = &scenario.params;
    let mut state = scenario.initial_state();
    let mut cumulative_hazard = T::zero();
    let mut hazard_prev = transition_rate(state.t, Status::Up, state.w, params)?;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        advance_with(&mut state, t, scenario, |st, rep| {
            let hazard = transition_rate(st.t, Status::Up, st.w, params)?;
            cumulative_hazard += T::lit(0.5) * rep.dt * (hazard_prev + hazard);
            hazard_prev = hazard;
            Ok(())
        })?;
        out.push((-cumulative_hazard).exp());
    }
    Ok(out)
}
