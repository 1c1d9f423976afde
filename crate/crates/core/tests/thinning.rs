//! Statistical checks of jump-time sampling.

use prodline::pdmp::{simulate_on_grid, trajectory_rng};
use prodline::{run_ensemble, EnsembleConfig, Scenario, Scenario32, Scenario64, Status};

fn ks_exponential(mut xs: Vec<f64>, rate: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn rejection_against_loose_bound_keeps_exponential_law() {
    // bound 5 from the repair rate while up-time hazard is constant 1.5:
    // most candidates are rejected while up.
    let mut s = Scenario64::reference(0.5);
    s.params.lambda_10_min = 1.5;
    s.params.lambda_10_max = 1.5;
    s.params.lambda_01 = 5.0;
    s.horizon = 20.0;
    let n = 5000;
    let mut up = Vec::new();
    let mut down = Vec::new();
    for i in 0..n {
        let rec = simulate_on_grid(&s, &[], trajectory_rng(17, i)).unwrap();
        up.push(rec.jumps[0].time);
        down.push(rec.jumps[1].time - rec.jumps[0].time);
    }
    let crit = 1.6276 / (n as f64).sqrt();
    let d_up = ks_exponential(up, 1.5);
    let d_down = ks_exponential(down, 5.0);
    assert!(d_up < crit, "{d_up} vs {crit}");
    assert!(d_down < crit, "{d_down} vs {crit}");
}

#[test]
fn no_repairs_means_single_failure() {
    let mut s = Scenario64::reference(1.5);
    s.params.lambda_01 = 0.0;
    for i in 0..200 {
        let rec = simulate_on_grid(&s, &[], trajectory_rng(3, i)).unwrap();
        assert_eq!(rec.jumps.len(), 1);
        assert_eq!(rec.repair_count, 0);
    }
}

#[test]
fn down_start_begins_with_repair() {
    let mut s = Scenario64::reference(1.5);
    s.r0 = Status::Down;
    s.q0 = 2.0;
    let rec = simulate_on_grid(&s, &[], trajectory_rng(4, 0)).unwrap();
    assert_eq!(rec.jumps[0].kind, prodline::JumpKind::Repair);
    assert_eq!(rec.jumps[0].w_after, 0.0);
}

#[test]
fn higher_inflow_wears_machine_faster() {
    let cfg = EnsembleConfig::new(2000, 8).workers(2);
    let low = run_ensemble(&Scenario64::reference(0.5), &cfg).unwrap();
    let high = run_ensemble(&Scenario64::reference(1.5), &cfg).unwrap();
    assert!(high.mean_repairs > low.mean_repairs + 2.0);
}

#[test]
fn single_precision_ensemble_agrees_with_double() {
    let cfg = EnsembleConfig::new(3000, 12).workers(2);
    let single = run_ensemble(&Scenario32::reference(1.5), &cfg).unwrap();
    let double = run_ensemble(&Scenario::<f64>::reference(1.5), &cfg).unwrap();
    let diff = (single.mean_repairs as f64 - double.mean_repairs).abs();
    assert!(
        diff < 0.3,
        "{} vs {}",
        single.mean_repairs,
        double.mean_repairs
    );
}
