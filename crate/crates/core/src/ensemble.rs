//! Monte Carlo aggregation over independent trajectories.
//!
//! Trajectories are generated in parallel in fixed-size blocks and folded
//! into streaming accumulators strictly in sample-index order, so the result
//! does not depend on the number of workers.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::model::Scenario;
use crate::pdmp::{simulate_sample, TrajectoryRecord};
use crate::scalar::Scalar;

/// Welford running mean and sum of squared deviations, one slot per time point.
#[derive(Debug, Clone)]
pub struct WelfordSeries<T> {
    count: u64,
    mean: Vec<T>,
    m2: Vec<T>,
}

impl<T: Scalar> WelfordSeries<T> {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![T::zero(); len],
            m2: vec![T::zero(); len],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.mean.len(), "series length mismatch");
        self.count += 1;
        let n = T::from_u64(self.count).expect("count representable");
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(values) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    /// Standard error of the mean, `sqrt(s² / n)`; zero for fewer than two samples.
    pub fn stderr(&self) -> Vec<T> {
        if self.count < 2 {
            return vec![T::zero(); self.mean.len()];
        }
        let n = T::from_u64(self.count).expect("count representable");
        self.m2
            .iter()
            .map(|&m2| (m2.max(T::zero()) / (n - T::one()) / n).sqrt())
            .collect()
    }

    pub fn finish(&self) -> SeriesMoments<T> {
        SeriesMoments {
            mean: self.mean.clone(),
            stderr: self.stderr(),
        }
    }
}

/// Pointwise sample mean and standard error of one observable.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMoments<T> {
    pub mean: Vec<T>,
    pub stderr: Vec<T>,
}

/// First-order moments of the four observables.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates<T> {
    pub sample_times: Vec<T>,
    pub w: SeriesMoments<T>,
    pub capacity: SeriesMoments<T>,
    pub q: SeriesMoments<T>,
    /// Density at the processor exit.
    pub outflow_density: SeriesMoments<T>,
    pub n_samples: u64,
}

/// Streaming accumulator for moments and repair counts.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator<T> {
    sample_times: Vec<T>,
    w: WelfordSeries<T>,
    capacity: WelfordSeries<T>,
    q: WelfordSeries<T>,
    outflow_density: WelfordSeries<T>,
    repair_counts: BTreeMap<usize, u64>,
}

impl<T: Scalar> EnsembleAccumulator<T> {
    pub fn new(sample_times: Vec<T>) -> Self {
        let len = sample_times.len();
        Self {
            sample_times,
            w: WelfordSeries::new(len),
            capacity: WelfordSeries::new(len),
            q: WelfordSeries::new(len),
            outflow_density: WelfordSeries::new(len),
            repair_counts: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, record: &TrajectoryRecord<T>) -> Result<()> {
        if record.sample_times != self.sample_times {
            return Err(SimError::domain(
                "estimate_moments",
                "records do not share one sample grid",
            ));
        }
        self.w.push(&record.w_series);
        self.capacity.push(&record.capacity_series);
        self.q.push(&record.q_series);
        self.outflow_density.push(&record.outflow_density_series);
        *self.repair_counts.entry(record.repair_count).or_default() += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.w.count()
    }

    pub fn moments(&self) -> MomentEstimates<T> {
        MomentEstimates {
            sample_times: self.sample_times.clone(),
            w: self.w.finish(),
            capacity: self.capacity.finish(),
            q: self.q.finish(),
            outflow_density: self.outflow_density.finish(),
            n_samples: self.count(),
        }
    }

    pub fn histogram(&self) -> BTreeMap<usize, T> {
        normalize_counts(&self.repair_counts)
    }
}

fn normalize_counts<T: Scalar>(counts: &BTreeMap<usize, u64>) -> BTreeMap<usize, T> {
    let total: u64 = counts.values().sum();
    let total = T::from_u64(total).expect("count representable");
    counts
        .iter()
        .map(|(&k, &c)| (k, T::from_u64(c).expect("count representable") / total))
        .collect()
}

/// Pointwise means and standard errors in a single pass over `records`.
pub fn estimate_moments<'a, T, I>(records: I) -> Result<MomentEstimates<T>>
where
    T: Scalar,
    I: IntoIterator<Item = &'a TrajectoryRecord<T>>,
{
    let mut iter = records.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| SimError::domain("estimate_moments", "no records"))?;
    let mut acc = EnsembleAccumulator::new(first.sample_times.clone());
    acc.push(first)?;
    for record in iter {
        acc.push(record)?;
    }
    Ok(acc.moments())
}

/// Relative frequency of each observed repair count.
pub fn repair_count_histogram<'a, T, I>(records: I) -> BTreeMap<usize, T>
where
    T: Scalar,
    I: IntoIterator<Item = &'a TrajectoryRecord<T>>,
{
    let mut counts = BTreeMap::new();
    for record in records {
        *counts.entry(record.repair_count).or_insert(0u64) += 1;
    }
    normalize_counts(&counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub samples: u64,
    pub master_seed: u64,
    pub workers: usize,
    /// Record every `output_stride`-th point of the `Δt` grid.
    pub output_stride: usize,
}

impl EnsembleConfig {
    pub fn new(samples: u64, master_seed: u64) -> Self {
        Self {
            samples,
            master_seed,
            workers: 1,
            output_stride: 1,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn output_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }
}

/// Monte Carlo aggregates of an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats<T> {
    pub moments: MomentEstimates<T>,
    /// Repair count → relative frequency.
    pub repair_histogram: BTreeMap<usize, T>,
    pub mean_repairs: T,
    pub n_samples: u64,
    pub master_seed: u64,
}

impl<T: Scalar> EnsembleStats<T> {
    /// Most frequent repair count; ties resolve to the smallest count.
    pub fn repair_mode(&self) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (&k, &f) in &self.repair_histogram {
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((k, f));
            }
        }
        best.map(|(k, _)| k)
    }
}

const BLOCK: u64 = 1024;

/// Runs `config.samples` trajectories; sample `i` uses the random stream
/// `(master_seed, i)`. The output is bit-identical for every worker count.
pub fn run_ensemble<T: Scalar>(
    scenario: &Scenario<T>,
    config: &EnsembleConfig,
) -> Result<EnsembleStats<T>> {
    if config.samples == 0 {
        return Err(SimError::param("samples", "must be >= 1"));
    }
    if config.workers == 0 {
        return Err(SimError::param("workers", "must be >= 1"));
    }
    scenario.validate()?;
    let stride = config.output_stride.max(1);
    let simulate = |index: u64| {
        simulate_sample(scenario, config.master_seed, index, stride).map_err(|e| SimError::Sample {
            index,
            source: Box::new(e),
        })
    };

    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| SimError::Invariant(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut acc = EnsembleAccumulator::new(crate::pdmp::output_grid(scenario, stride));
    let mut repair_sum = 0u64;
    let mut start = 0;
    while start < config.samples {
        let end = (start + BLOCK).min(config.samples);
        let block: Vec<Result<TrajectoryRecord<T>>> = match &pool {
            Some(pool) => pool.install(|| (start..end).into_par_iter().map(simulate).collect()),
            None => (start..end).map(simulate).collect(),
        };
        for record in block {
            let record = record?;
            repair_sum += record.repair_count as u64;
            acc.push(&record)?;
        }
        start = end;
    }

    let n = T::from_u64(config.samples).expect("count representable");
    Ok(EnsembleStats {
        moments: acc.moments(),
        repair_histogram: acc.histogram(),
        mean_repairs: T::from_u64(repair_sum).expect("count representable") / n,
        n_samples: config.samples,
        master_seed: config.master_seed,
    })
}

/// Centered moving average over `2 * half_width + 1` points, truncated at the
/// ends of the series.
pub fn centered_moving_average<T: Scalar>(series: &[T], half_width: usize) -> Vec<T> {
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(series.len());
            let window = &series[lo..hi];
            window.iter().fold(T::zero(), |a, &x| a + x) / T::from_usize_lossy(window.len())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdmp::simulate_trajectory;

    fn jump_free(inflow: f64) -> Scenario<f64> {
        let mut s = Scenario::reference(inflow);
        s.params.lambda_10_min = 0.0;
        s.params.lambda_10_max = 0.0;
        s.params.lambda_01 = 0.0;
        s.horizon = 5.0;
        s
    }

    #[test]
    fn welford_matches_two_pass() {
        let data: [[f64; 2]; 4] = [[1.0, 4.0], [2.0, 4.0], [4.0, 4.0], [7.0, 4.0]];
        let mut acc = WelfordSeries::new(2);
        for row in &data {
            acc.push(row);
        }
        let mean = 14.0 / 4.0;
        let var = data.iter().map(|r| (r[0] - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((acc.mean()[0] - mean).abs() < 1e-15);
        assert!((acc.stderr()[0] - (var / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(acc.stderr()[1], 0.0);
    }

    #[test]
    fn single_record_moments_equal_record() {
        let s = Scenario::<f64>::reference(1.5);
        let rec = simulate_trajectory(&s, 3).unwrap();
        let m = estimate_moments([&rec]).unwrap();
        assert_eq!(m.w.mean, rec.w_series);
        assert_eq!(m.capacity.mean, rec.capacity_series);
        assert!(m.q.stderr.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn identical_records_have_zero_stderr() {
        let s = Scenario::<f64>::reference(1.5);
        let rec = simulate_trajectory(&s, 3).unwrap();
        let m = estimate_moments([&rec, &rec, &rec]).unwrap();
        for series in [&m.w, &m.capacity, &m.q, &m.outflow_density] {
            assert!(series.stderr.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn empty_collection_is_error() {
        let none: Vec<TrajectoryRecord<f64>> = Vec::new();
        assert!(estimate_moments(&none).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let s = Scenario::<f64>::reference(1.5);
        let a = simulate_trajectory(&s, 1).unwrap();
        let mut short = s.clone();
        short.horizon = 10.0;
        let b = simulate_trajectory(&short, 1).unwrap();
        assert!(estimate_moments([&a, &b]).is_err());
    }

    #[test]
    fn capacity_mean_is_convex_combination() {
        let s = Scenario::<f64>::reference(1.5);
        let recs: Vec<_> = (0..20)
            .map(|i| simulate_trajectory(&s, i).unwrap())
            .collect();
        let m = estimate_moments(&recs).unwrap();
        assert!(m.capacity.mean.iter().all(|&c| (0.0..=2.0).contains(&c)));
    }

    #[test]
    fn histogram_of_jump_free_runs() {
        let s = jump_free(0.5);
        let recs: Vec<_> = (0..5)
            .map(|i| simulate_trajectory(&s, i).unwrap())
            .collect();
        let h = repair_count_histogram(&recs);
        assert_eq!(h.len(), 1);
        assert_eq!(h[&0], 1.0);
    }

    #[test]
    fn jump_free_ensemble_has_zero_variance() {
        let s = jump_free(0.5);
        let stats = run_ensemble(&s, &EnsembleConfig::new(17, 4)).unwrap();
        let single = simulate_trajectory(&s, 99).unwrap();
        assert_eq!(stats.moments.w.mean, single.w_series);
        assert!(stats.moments.q.stderr.iter().all(|&x| x == 0.0));
        assert_eq!(stats.repair_mode(), Some(0));
    }

    #[test]
    fn ensemble_of_one_equals_trajectory() {
        let s = Scenario::<f64>::reference(0.5);
        let stats = run_ensemble(&s, &EnsembleConfig::new(1, 42)).unwrap();
        let rec = simulate_sample(&s, 42, 0, 1).unwrap();
        assert_eq!(stats.moments.capacity.mean, rec.capacity_series);
        assert_eq!(stats.moments.w.mean, rec.w_series);
        assert_eq!(stats.repair_histogram[&rec.repair_count], 1.0);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let mut s = Scenario::<f64>::reference(1.5);
        s.horizon = 10.0;
        let cfg = EnsembleConfig::new(2500, 77);
        let one = run_ensemble(&s, &cfg).unwrap();
        let eight = run_ensemble(&s, &cfg.workers(8)).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn histogram_normalized_and_capacity_starts_full() {
        let s = Scenario::<f64>::reference(0.5);
        let stats = run_ensemble(&s, &EnsembleConfig::new(500, 5).workers(2)).unwrap();
        let total: f64 = stats.repair_histogram.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(stats.moments.capacity.mean[0], 2.0);
        assert!(stats.moments.w.mean.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn stderr_scales_with_inverse_root_n() {
        let s = Scenario::<f64>::reference(1.5);
        let small = run_ensemble(&s, &EnsembleConfig::new(1000, 1).workers(4)).unwrap();
        let large = run_ensemble(&s, &EnsembleConfig::new(4000, 2).workers(4)).unwrap();
        let avg = |v: &[f64]| v[1..].iter().sum::<f64>() / (v.len() - 1) as f64;
        let ratio = avg(&small.moments.capacity.stderr) / avg(&large.moments.capacity.stderr);
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn rejects_zero_samples_or_workers() {
        let s = Scenario::<f64>::reference(1.5);
        assert!(run_ensemble(&s, &EnsembleConfig::new(0, 1)).is_err());
        assert!(run_ensemble(&s, &EnsembleConfig::new(1, 1).workers(0)).is_err());
    }

    #[test]
    fn moving_average_truncates_at_edges() {
        let avg = centered_moving_average(&[0.0, 3.0, 6.0, 9.0], 1);
        assert_eq!(avg, vec![1.5, 3.0, 6.0, 7.5]);
    }
}
