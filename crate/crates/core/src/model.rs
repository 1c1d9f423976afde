//! Domain types of the production line and its workload-dependent hazard.
//!
//! The machine has two states. While up it fails with a rate that grows with
//! the workload processed since the last repair, shaped like a Weibull CDF
//! between `lambda_10_min` and `lambda_10_max`. While down it is repaired at
//! the constant rate `lambda_01`.

use crate::error::{Result, SimError};
use crate::gamma::gamma;
use crate::scalar::Scalar;

/// Machine status. The capacity is `c` when up and zero when down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Down,
    Up,
}

impl Status {
    pub fn flipped(self) -> Self {
        match self {
            Status::Down => Status::Up,
            Status::Up => Status::Down,
        }
    }

    /// 0 or 1.
    pub fn indicator<T: Scalar>(self) -> T {
        match self {
            Status::Down => T::zero(),
            Status::Up => T::one(),
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Status::Down),
            1 => Some(Status::Up),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Status::Down => 0,
            Status::Up => 1,
        }
    }
}

/// Physical and hazard parameters of a single queue-processor unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    /// Production velocity `v`.
    pub velocity: T,
    /// Processor occupies `(a, b)`.
    pub a: T,
    pub b: T,
    /// Maximal capacity `c`; the capacity is `r * c`.
    pub max_capacity: T,
    pub lambda_10_min: T,
    pub lambda_10_max: T,
    /// Weibull scale (inverse length) of the failure-rate profile.
    pub theta1: T,
    /// Weibull shape.
    pub theta2: T,
    /// Constant repair rate.
    pub lambda_01: T,
}

impl<T: Scalar> ModelParams<T> {
    /// Unit processor with `v = 1`, `c = 2`, failure rate between 1/10 and
    /// 1/0.5, `θ₁ = 1/10`, `θ₂ = 5` and repair rate 1/0.5.
    pub fn reference() -> Self {
        Self {
            velocity: T::one(),
            a: T::zero(),
            b: T::one(),
            max_capacity: T::lit(2.0),
            lambda_10_min: T::lit(0.1),
            lambda_10_max: T::lit(2.0),
            theta1: T::lit(0.1),
            theta2: T::lit(5.0),
            lambda_01: T::lit(2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, x: T| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(SimError::param(
                    key,
                    format!("must be finite and > 0, got {x}"),
                ))
            }
        };
        let nonneg = |key: &str, x: T| {
            if x >= T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(SimError::param(
                    key,
                    format!("must be finite and >= 0, got {x}"),
                ))
            }
        };
        positive("v", self.velocity)?;
        positive("c", self.max_capacity)?;
        positive("theta1", self.theta1)?;
        positive("theta2", self.theta2)?;
        nonneg("lambda_10_min", self.lambda_10_min)?;
        nonneg("lambda_10_max", self.lambda_10_max)?;
        nonneg("lambda_01", self.lambda_01)?;
        if !(self.a.is_finite() && self.b.is_finite()) || self.b <= self.a {
            return Err(SimError::param(
                "b",
                format!("interval ({}, {}) must satisfy a < b", self.a, self.b),
            ));
        }
        if self.lambda_10_min > self.lambda_10_max {
            return Err(SimError::param(
                "lambda_10_min",
                format!(
                    "{} exceeds lambda_10_max = {}",
                    self.lambda_10_min, self.lambda_10_max
                ),
            ));
        }
        Ok(())
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }

    /// Capacity `μ = r c`.
    pub fn capacity(&self, status: Status) -> T {
        status.indicator::<T>() * self.max_capacity
    }
}

/// Failure rate of an intact machine that has processed workload `w` since
/// its last repair: `λmin + (λmax − λmin)(1 − exp(−(θ₁ w)^θ₂))`.
pub fn failure_rate<T: Scalar>(w: T, params: &ModelParams<T>) -> Result<T> {
    if !(w >= T::zero()) {
        return Err(SimError::domain(
            "failure_rate",
            format!("workload must be >= 0, got {w}"),
        ));
    }
    let weibull_cdf = -(-(params.theta1 * w).powf(params.theta2)).exp_m1();
    let rate = params.lambda_10_min + (params.lambda_10_max - params.lambda_10_min) * weibull_cdf;
    // rounding may push the sum one ulp past the upper bound
    Ok(rate.max(params.lambda_10_min).min(params.lambda_10_max))
}

/// Repair rate; independent of the workload.
pub fn repair_rate<T: Scalar>(_w: T, params: &ModelParams<T>) -> T {
    params.lambda_01
}

/// Rate of leaving `status` at time `t` with workload `w`. Both rates are
/// time-homogeneous; `t` is accepted for time-dependent extensions.
pub fn transition_rate<T: Scalar>(
    _t: T,
    status: Status,
    w: T,
    params: &ModelParams<T>,
) -> Result<T> {
    match status {
        Status::Up => failure_rate(w, params),
        Status::Down => Ok(repair_rate(w, params)),
    }
}

/// Weibull mean lifetime `Γ(1 + 1/θ₂) / θ₁`, in units of workload.
pub fn mean_time_to_failure<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    if !(params.theta1 > T::zero() && params.theta2 > T::zero()) {
        return Err(SimError::domain(
            "mean_time_to_failure",
            format!(
                "theta1 and theta2 must be > 0, got {} and {}",
                params.theta1, params.theta2
            ),
        ));
    }
    Ok(gamma(T::one() + params.theta2.recip()) / params.theta1)
}

/// Time at which an intact machine fed at constant rate `inflow` is most
/// likely to fail: `Γ(1 + 1/θ₂) / (θ₁ G_in)`.
pub fn characteristic_failure_time<T: Scalar>(params: &ModelParams<T>, inflow: T) -> Result<T> {
    if !(inflow > T::zero()) {
        return Err(SimError::domain(
            "characteristic_failure_time",
            format!("inflow must be > 0, got {inflow}"),
        ));
    }
    Ok(mean_time_to_failure(params)? / inflow)
}

/// Piecewise-constant inflow `G_in(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InflowProfile<T> {
    /// `(start time, rate)` pairs, strictly increasing in start time, the
    /// first starting at 0.
    segments: Vec<(T, T)>,
}

impl<T: Scalar> InflowProfile<T> {
    pub fn constant(rate: T) -> Self {
        Self {
            segments: vec![(T::zero(), rate)],
        }
    }

    pub fn piecewise(segments: Vec<(T, T)>) -> Result<Self> {
        let profile = Self { segments };
        profile.validate()?;
        Ok(profile)
    }

    pub fn segments(&self) -> &[(T, T)] {
        &self.segments
    }

    pub fn validate(&self) -> Result<()> {
        match self.segments.first() {
            Some((start, _)) if *start == T::zero() => {}
            _ => {
                return Err(SimError::param(
                    "inflow",
                    "first segment must start at t = 0",
                ))
            }
        }
        for (i, &(start, rate)) in self.segments.iter().enumerate() {
            if !(rate >= T::zero() && rate.is_finite()) {
                return Err(SimError::param(
                    format!("inflow[{i}].rate"),
                    format!("must be finite and >= 0, got {rate}"),
                ));
            }
            if i > 0 && !(start > self.segments[i - 1].0) {
                return Err(SimError::param(
                    format!("inflow[{i}].start"),
                    "segment starts must be strictly increasing",
                ));
            }
        }
        Ok(())
    }

    pub fn rate_at(&self, t: T) -> T {
        let idx = self.segments.partition_point(|&(start, _)| start <= t);
        self.segments[idx.saturating_sub(1)].1
    }
}

/// Initial value of the workload variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialWorkload {
    /// `w(0)` equals the initial work in progress `∫ρ₀ dx`.
    #[default]
    InitialMass,
    Zero,
}

/// A complete experiment: model, inflow, initial data and discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub params: ModelParams<T>,
    pub inflow: InflowProfile<T>,
    /// Initial density per cell.
    pub rho0: Vec<T>,
    pub q0: T,
    pub r0: Status,
    pub horizon: T,
    pub dx: T,
    pub dt: T,
    pub initial_workload: InitialWorkload,
}

impl<T: Scalar> Scenario<T> {
    /// Reference experiment: [`ModelParams::reference`], constant inflow,
    /// empty line, intact machine, `Δx = Δt = 0.1`, horizon 50.
    pub fn reference(inflow: T) -> Self {
        let dx = T::lit(0.1);
        Self {
            params: ModelParams::reference(),
            inflow: InflowProfile::constant(inflow),
            rho0: vec![T::zero(); 10],
            q0: T::zero(),
            r0: Status::Up,
            horizon: T::lit(50.0),
            dx,
            dt: T::lit(0.1),
            initial_workload: InitialWorkload::InitialMass,
        }
    }

    /// Number of cells `(b − a)/Δx`, if it is a positive integer.
    pub fn cell_count(&self) -> Result<usize> {
        let ratio = self.params.length() / self.dx;
        let n = ratio.round();
        let tol = T::lit(1e-9) * ratio.max(T::one());
        if !(n >= T::one()) || (ratio - n).abs() > tol {
            return Err(SimError::param(
                "dx",
                format!("(b - a)/dx = {ratio} must be a positive integer"),
            ));
        }
        n.to_usize()
            .ok_or_else(|| SimError::param("dx", "cell count does not fit in usize"))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.inflow.validate()?;
        if !(self.dx > T::zero() && self.dx.is_finite()) {
            return Err(SimError::param(
                "dx",
                format!("must be > 0, got {}", self.dx),
            ));
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(SimError::param(
                "dt",
                format!("must be > 0, got {}", self.dt),
            ));
        }
        if !(self.horizon > T::zero() && self.horizon.is_finite()) {
            return Err(SimError::param(
                "horizon",
                format!("must be > 0, got {}", self.horizon),
            ));
        }
        if self.params.velocity * self.dt > self.dx {
            return Err(SimError::Cfl {
                v_dt: (self.params.velocity * self.dt).as_f64(),
                dx: self.dx.as_f64(),
            });
        }
        let cells = self.cell_count()?;
        if self.rho0.len() != cells {
            return Err(SimError::param(
                "rho0",
                format!("expected {cells} cells, got {}", self.rho0.len()),
            ));
        }
        if let Some(i) = self
            .rho0
            .iter()
            .position(|x| !(*x >= T::zero() && x.is_finite()))
        {
            return Err(SimError::param(
                format!("rho0[{i}]"),
                format!("must be finite and >= 0, got {}", self.rho0[i]),
            ));
        }
        if !(self.q0 >= T::zero() && self.q0.is_finite()) {
            return Err(SimError::param(
                "q0",
                format!("must be >= 0, got {}", self.q0),
            ));
        }
        Ok(())
    }

    /// State at `t = 0`.
    pub fn initial_state(&self) -> SystemState<T> {
        let mut state = SystemState {
            t: T::zero(),
            w: T::zero(),
            r: self.r0,
            q: self.q0,
            rho: self.rho0.clone(),
        };
        if self.initial_workload == InitialWorkload::InitialMass {
            state.w = state.work_in_progress(self.dx);
        }
        state
    }
}

/// State of the piecewise deterministic process at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<T> {
    pub t: T,
    /// Workload accumulated since the last repair.
    pub w: T,
    pub r: Status,
    pub q: T,
    /// Cell averages of the density on `(a, b)`.
    pub rho: Vec<T>,
}

impl<T: Scalar> SystemState<T> {
    /// Rectangle-rule `∫ρ dx`.
    pub fn work_in_progress(&self, dx: T) -> T {
        dx * self.rho.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    /// Queue plus work in progress.
    pub fn total_mass(&self, dx: T) -> T {
        self.q + self.work_in_progress(dx)
    }

    /// Density in the last cell, i.e. at the processor exit.
    pub fn outlet_density(&self) -> T {
        self.rho.last().copied().unwrap_or_else(T::zero)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if !(self.w >= T::zero()) {
            return Err(SimError::Invariant(format!("negative workload {}", self.w)));
        }
        if !(self.q >= T::zero()) {
            return Err(SimError::Invariant(format!("negative queue {}", self.q)));
        }
        if let Some(i) = self.rho.iter().position(|x| !(*x >= T::zero())) {
            return Err(SimError::Invariant(format!(
                "negative density {} in cell {i}",
                self.rho[i]
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams<f64> {
        ModelParams::reference()
    }

    #[test]
    fn failure_rate_at_zero_workload_is_minimum() {
        assert_eq!(failure_rate(0.0, &params()).unwrap(), 0.1);
    }

    #[test]
    fn failure_rate_saturates_at_maximum() {
        let r = failure_rate(1e6, &params()).unwrap();
        assert_eq!(r, 2.0);
    }

    #[test]
    fn failure_rate_at_scale_workload() {
        // 0.1 + 1.9 (1 - 1/e), mpmath
        let want = 1.301_029_061_774_259_7;
        let got = failure_rate(10.0, &params()).unwrap();
        assert!((got - want).abs() < 1e-14, "{got}");
    }

    #[test]
    fn failure_rate_rejects_negative_workload() {
        assert!(matches!(
            failure_rate(-1.0, &params()),
            Err(SimError::Domain { .. })
        ));
        assert!(failure_rate(f64::NAN, &params()).is_err());
    }

    #[test]
    fn repair_rate_is_constant() {
        let p = params();
        assert_eq!(repair_rate(0.0, &p), 2.0);
        assert_eq!(repair_rate(0.0, &p), repair_rate(100.0, &p));
        let never = ModelParams {
            lambda_01: 0.0,
            ..p
        };
        assert_eq!(repair_rate(3.0, &never), 0.0);
    }

    #[test]
    fn mttf_reference_and_exponential_case() {
        let mttf = mean_time_to_failure(&params()).unwrap();
        assert!((mttf - 9.181_687_423_997_606).abs() < 1e-9);
        let exp = ModelParams {
            theta2: 1.0,
            theta1: 0.37,
            ..params()
        };
        assert!((mean_time_to_failure(&exp).unwrap() * 0.37 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mttf_rejects_nonpositive_theta() {
        let bad = ModelParams {
            theta1: 0.0,
            ..params()
        };
        assert!(mean_time_to_failure(&bad).is_err());
        let bad = ModelParams {
            theta2: -1.0,
            ..params()
        };
        assert!(mean_time_to_failure(&bad).is_err());
    }

    #[test]
    fn characteristic_times_of_reference_inflows() {
        let p = params();
        let t1 = characteristic_failure_time(&p, 0.5).unwrap();
        let t2 = characteristic_failure_time(&p, 1.5).unwrap();
        assert!((t1 - 18.4).abs() < 0.05, "{t1}");
        assert!((t2 - 6.1).abs() < 0.05, "{t2}");
    }

    #[test]
    fn params_validation_names_key() {
        let bad = ModelParams {
            theta1: -0.1,
            ..params()
        };
        match bad.validate() {
            Err(SimError::InvalidParameter { key, .. }) => assert_eq!(key, "theta1"),
            other => panic!("{other:?}"),
        }
        let bad = ModelParams {
            lambda_10_min: 3.0,
            ..params()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenario_rejects_cfl_violation() {
        let mut s = Scenario::<f64>::reference(0.5);
        assert!(s.validate().is_ok());
        s.dt = 0.2;
        assert!(matches!(s.validate(), Err(SimError::Cfl { .. })));
    }

    #[test]
    fn scenario_rejects_fractional_cell_count() {
        let mut s = Scenario::<f64>::reference(0.5);
        s.dx = 0.3;
        s.dt = 0.1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn initial_workload_policies() {
        let mut s = Scenario::<f64>::reference(0.5);
        s.rho0 = vec![0.5; 10];
        assert!((s.initial_state().w - 0.5).abs() < 1e-15);
        s.initial_workload = InitialWorkload::Zero;
        assert_eq!(s.initial_state().w, 0.0);
    }

    #[test]
    fn piecewise_inflow_lookup() {
        let g = InflowProfile::piecewise(vec![(0.0, 0.5), (10.0, 1.5), (20.0, 0.0)]).unwrap();
        assert_eq!(g.rate_at(0.0), 0.5);
        assert_eq!(g.rate_at(9.99), 0.5);
        assert_eq!(g.rate_at(10.0), 1.5);
        assert_eq!(g.rate_at(25.0), 0.0);
        assert!(InflowProfile::piecewise(vec![(1.0, 0.5)]).is_err());
        assert!(InflowProfile::piecewise(vec![(0.0, 0.5), (0.0, 1.0)]).is_err());
        assert!(InflowProfile::piecewise(vec![(0.0, -0.5)]).is_err());
    }

    #[test]
    fn status_flip_and_bits() {
        assert_eq!(Status::Up.flipped(), Status::Down);
        assert_eq!(Status::from_bit(1), Some(Status::Up));
        assert_eq!(Status::from_bit(2), None);
        assert_eq!(Status::Down.indicator::<f32>(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_params() -> impl Strategy<Value = ModelParams<f64>> {
            (0.0..3.0f64, 0.0..3.0f64, 0.01..2.0f64, 0.2..8.0f64).prop_map(|(l1, l2, t1, t2)| {
                ModelParams {
                    lambda_10_min: l1.min(l2),
                    lambda_10_max: l1.max(l2),
                    theta1: t1,
                    theta2: t2,
                    ..ModelParams::reference()
                }
            })
        }

        proptest! {
            #[test]
            fn failure_rate_bounded_and_monotone(p in arb_params(), w1 in 0.0..200.0f64, w2 in 0.0..200.0f64) {
                let (lo, hi) = (w1.min(w2), w1.max(w2));
                let r_lo = failure_rate(lo, &p).unwrap();
                let r_hi = failure_rate(hi, &p).unwrap();
                prop_assert!(r_lo <= r_hi);
                for r in [r_lo, r_hi] {
                    prop_assert!(r >= p.lambda_10_min && r <= p.lambda_10_max);
                }
                prop_assert_eq!(failure_rate(0.0, &p).unwrap(), p.lambda_10_min);
            }

            #[test]
            fn repair_rate_ignores_workload(p in arb_params(), w1 in 0.0..1e3f64, w2 in 0.0..1e3f64) {
                prop_assert_eq!(repair_rate(w1, &p), repair_rate(w2, &p));
            }
        }
    }
}
