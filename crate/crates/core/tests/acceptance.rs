//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N: PASS` line. Run with
//! `cargo test --test acceptance -- --nocapture`.
//!
//! Criteria 8 and 9 share one expensive 500-variable batch run; the run is
//! computed once behind a `OnceLock` and both tests read from it.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use infonet_core::calibrate::{determine_bstar, estimate_pair_mi, triplet_bstar};
use infonet_core::engine::{
    estimate_all_pairs, verify_shuffled, verify_subsample_stability, BatchConfig, MiMatrix,
};
use infonet_core::extrapolate::{extrapolate_pair, make_schedule, SubsampleSchedule, Variate};
use infonet_core::multiinfo::{consistency_check, estimate_triplet};
use infonet_core::plugin::{exact_chain_terms, exact_multiinformation, JointTable};
use infonet_core::testdata;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn report(criterion: usize, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------- criterion 1

/// Exact MI of the b-level equal-probability quantization of a standard
/// bivariate Gaussian with correlation rho. Cell probabilities by composite
/// Simpson integration of phi(x) * [Phi((d-rho x)/s) - Phi((c-rho x)/s)] over
/// each quantile strip.
fn quantized_gaussian_mi(rho: f64, b: usize) -> f64 {
    let norm = Normal::new(0.0, 1.0).unwrap();
    let edge = |k: usize| -> f64 {
        match k {
            0 => -8.5,
            k if k == b => 8.5,
            k => norm.inverse_cdf(k as f64 / b as f64),
        }
    };
    let s = (1.0 - rho * rho).sqrt();
    let steps = 4000; // per strip; even
    let mut mi = 0.0;
    for i in 0..b {
        let (lo, hi) = (edge(i), edge(i + 1));
        let h = (hi - lo) / steps as f64;
        for j in 0..b {
            let (c, d) = (edge(j), edge(j + 1));
            let f = |x: f64| {
                let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                phi * (norm.cdf((d - rho * x) / s) - norm.cdf((c - rho * x) / s))
            };
            let mut acc = f(lo) + f(hi);
            for k in 1..steps {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(lo + k as f64 * h);
            }
            let p = acc * h / 3.0;
            if p > 0.0 {
                mi += p * (p * (b * b) as f64).log2();
            }
        }
    }
    mi
}

#[test]
fn criterion_1_gaussian_oracle() {
    let start = Instant::now();
    let rho = 0.6;
    let n = 10_000;
    let seeds = 50u64;
    let levels = [2usize, 3, 4, 5];
    let sched = SubsampleSchedule::default_three_point();

    let oracle: Vec<f64> = levels.iter().map(|&b| quantized_gaussian_mi(rho, b)).collect();

    let per_seed: Vec<([f64; 4], f64)> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let (x, y) = testdata::bivariate_gaussian(n, rho, &mut rng(1000 + seed));
            let mut intercepts = [0.0f64; 4];
            for (idx, &b) in levels.iter().enumerate() {
                let r = extrapolate_pair(
                    &Variate::Continuous { values: &x, levels: b },
                    &Variate::Continuous { values: &y, levels: b },
                    &sched,
                    seed * 17 + b as u64,
                )
                .unwrap();
                intercepts[idx] = r.intercept_bits;
            }
            let selected = estimate_pair_mi(&x, &y, 5, &sched, seed * 31).unwrap();
            (intercepts, selected.value_bits)
        })
        .collect();

    let mut max_dev = 0.0f64;
    for (idx, &target) in oracle.iter().enumerate() {
        let mean: f64 =
            per_seed.iter().map(|(i, _)| i[idx]).sum::<f64>() / seeds as f64;
        max_dev = max_dev.max((mean - target).abs());
    }
    let mean_selected: f64 = per_seed.iter().map(|(_, v)| v).sum::<f64>() / seeds as f64;
    let analytic = -0.5 * (1.0 - rho * rho).log2();
    let elapsed = start.elapsed().as_secs_f64();

    report(
        1,
        max_dev < 0.02 && mean_selected <= analytic && elapsed < 60.0,
        &format!(
            "max per-level deviation {max_dev:.4} bits, selected mean {mean_selected:.4} \
             vs analytic {analytic:.4}, {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_miller_slope() {
    let start = Instant::now();
    let n = 5000;
    let seeds = 200u64;
    let sched = SubsampleSchedule::default_three_point();
    let expected = 4.0 / (2.0 * std::f64::consts::LN_2); // (b-1)^2 / (2 ln 2), b = 3

    let mean_slope: f64 = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(2000 + seed);
            let (x, _) = testdata::bivariate_gaussian(n, 0.0, &mut r);
            let (y, _) = testdata::bivariate_gaussian(n, 0.0, &mut r);
            extrapolate_pair(
                &Variate::Continuous { values: &x, levels: 3 },
                &Variate::Continuous { values: &y, levels: 3 },
                &sched,
                seed,
            )
            .unwrap()
            .slope_bits_samples
        })
        .sum::<f64>()
        / seeds as f64;

    let rel = (mean_slope - expected).abs() / expected;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        2,
        rel < 0.20 && elapsed < 120.0,
        &format!("mean slope {mean_slope:.3} vs {expected:.3} ({:.1}% off), {elapsed:.1}s", rel * 100.0),
    );
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_shuffle_zero() {
    let start = Instant::now();
    let n_obs = 200;
    let ds = testdata::gaussian_dataset(60, n_obs, &mut rng(33));
    let cfg = BatchConfig { seed: 33, min_joint_samples: 100, ..BatchConfig::default() };
    let sched = cfg.schedule().unwrap();
    let calib =
        determine_bstar(&ds, cfg.b_max, 200, &sched, cfg.seed, cfg.tolerance_bits).unwrap();
    let summary = verify_shuffled(&ds, &cfg, &calib, 1000).unwrap();

    let sem = summary.std_bits / (summary.n_pairs as f64).sqrt();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        3,
        summary.mean_bits.abs() <= 2.0 * sem
            && summary.fraction_beyond_3_sigma <= 0.01
            && elapsed < 300.0,
        &format!(
            "b* = {}, mean {:.5} bits (SEM {:.5}), {:.2}% beyond 3 error bars, {elapsed:.1}s",
            calib.b_star().unwrap(),
            summary.mean_bits,
            sem,
            summary.fraction_beyond_3_sigma * 100.0
        ),
    );
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn criterion_4_calibration_shape() {
    let start = Instant::now();
    let n_obs = 173;
    let ds = testdata::gaussian_dataset(80, n_obs, &mut rng(44));
    let sched = SubsampleSchedule::default_three_point();
    let b_max = 8;
    let pair = determine_bstar(&ds, b_max, 1000, &sched, 44, 0.01).unwrap();
    let tri = triplet_bstar(&ds, b_max, 1000, &sched, 44, 0.01).unwrap();

    let pair_curve: BTreeMap<usize, f64> =
        pair.per_level.iter().map(|(&b, s)| (b, s.mean_intercept_bits)).collect();
    let tri_curve: BTreeMap<usize, f64> =
        tri.per_level.iter().map(|(&b, s)| (b, s.mean_intercept_bits)).collect();

    let nondecreasing = pair_curve
        .values()
        .zip(pair_curve.values().skip(1))
        .all(|(a, b)| b >= a);
    let triplet_above = tri_curve
        .iter()
        .filter(|(&b, _)| b >= 3)
        .all(|(b, &v)| pair_curve.get(b).is_some_and(|&p| v > p));
    let elapsed = start.elapsed().as_secs_f64();
    let round = |c: &BTreeMap<usize, f64>| {
        c.values().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
    };
    report(
        4,
        nondecreasing && triplet_above,
        &format!(
            "pairwise curve {:?} nondecreasing: {nondecreasing}; triplet curve {:?} above \
             pairwise for b>=3: {triplet_above}; b* pair {:?} triplet {:?}, {elapsed:.1}s",
            round(&pair_curve),
            round(&tri_curve),
            pair.b_star,
            tri.b_star
        ),
    );
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn criterion_5_chain_rule_identity() {
    let start = Instant::now();
    let mut r = rng(55);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        use rand::Rng;
        let dims: Vec<usize> = (0..3).map(|_| r.gen_range(2..=4)).collect();
        let cells: usize = dims.iter().product();
        let mut probs: Vec<f64> = (0..cells).map(|_| r.gen::<f64>() + 1e-3).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let jt = JointTable::new(dims, probs).unwrap();
        let exact = exact_multiinformation(&jt);
        for order in [[0, 1, 2], [1, 2, 0], [2, 0, 1]] {
            let terms = exact_chain_terms(&jt, &order).unwrap();
            worst = worst.max((terms.iter().sum::<f64>() - exact).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        worst < 1e-10 && elapsed < 1.0,
        &format!("worst chain-sum deviation {worst:.2e}, {elapsed:.3}s"),
    );
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_triplet_consistency() {
    let start = Instant::now();
    let n = 10_000;
    let sched = SubsampleSchedule::default_three_point();
    let b_star_triplet = 3;
    let passes: usize = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let (x, y, z) = testdata::dependent_triple(n, 0.6, &mut rng(6000 + seed));
            let t = estimate_triplet([&x, &y, &z], b_star_triplet, &sched, b_star_triplet, seed)
                .unwrap();
            consistency_check(&t).pass
        })
        .count();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        6,
        passes >= 95 && elapsed < 300.0,
        &format!("{passes}/100 triplets consistent, {elapsed:.1}s"),
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_parity_case() {
    let start = Instant::now();
    let n = 10_000;
    let sched = SubsampleSchedule::default_three_point();
    let seeds = 5u64;
    let mut i3_sum = 0.0;
    let mut max_pair = 0.0f64;
    for seed in 0..seeds {
        let (x, y, z) = testdata::xor_carriers(n, &mut rng(7000 + seed));
        let t = estimate_triplet([&x, &y, &z], 2, &sched, 2, seed).unwrap();
        i3_sum += t.mean_bits;
        for (a, b) in [(&x, &y), (&y, &z), (&x, &z)] {
            let r = extrapolate_pair(
                &Variate::Continuous { values: a, levels: 2 },
                &Variate::Continuous { values: b, levels: 2 },
                &sched,
                seed,
            )
            .unwrap();
            max_pair = max_pair.max(r.intercept_bits.abs());
        }
    }
    let mean_i3 = i3_sum / seeds as f64;
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        (mean_i3 - 1.0).abs() < 0.05 && max_pair < 0.05 && elapsed < 30.0,
        &format!("mean I3 {mean_i3:.4} bits, max pairwise {max_pair:.4} bits, {elapsed:.1}s"),
    );
}

// ----------------------------------------------------------- criteria 8 and 9

struct BigRun {
    base: MiMatrix,
    base_seconds: f64,
    identical_across_workers: bool,
    stability_fraction: f64,
    n_compared: usize,
}

fn big_run() -> &'static BigRun {
    static RUN: OnceLock<BigRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let ds = testdata::planted_blocks(500, 273, 10, 0.45, &mut rng(89));
        let cfg8 = BatchConfig {
            seed: 89,
            min_joint_samples: 100,
            worker_count: 8,
            ..BatchConfig::default()
        };
        let sched = cfg8.schedule().unwrap();
        let calib =
            determine_bstar(&ds, cfg8.b_max, 300, &sched, cfg8.seed, cfg8.tolerance_bits).unwrap();

        let t0 = Instant::now();
        let base = estimate_all_pairs(&ds, &cfg8, &calib).unwrap();
        let base_seconds = t0.elapsed().as_secs_f64();

        let cfg1 = BatchConfig { worker_count: 1, ..cfg8.clone() };
        let serial = estimate_all_pairs(&ds, &cfg1, &calib).unwrap();
        let identical_across_workers = base
            .pairs
            .iter()
            .zip(serial.pairs.iter())
            .all(|((ka, ea), (kb, eb))| {
                ka == kb
                    && ea.value_bits.to_bits() == eb.value_bits.to_bits()
                    && ea.chosen_b == eb.chosen_b
                    && ea.error_bar_bits.to_bits() == eb.error_bar_bits.to_bits()
            })
            && base.pairs.len() == serial.pairs.len();

        let stab = verify_subsample_stability(&ds, &cfg8, &calib, &base, 2.0 / 3.0).unwrap();
        BigRun {
            base,
            base_seconds,
            identical_across_workers,
            stability_fraction: stab.fraction_above_tenth_bit,
            n_compared: stab.n_pairs,
        }
    })
}

#[test]
fn criterion_8_subsample_stability() {
    let run = big_run();
    report(
        8,
        run.stability_fraction < 0.05,
        &format!(
            "{:.2}% of {} pairs moved > 0.1 bits on 2/3 resample",
            run.stability_fraction * 100.0,
            run.n_compared
        ),
    );
}

#[test]
fn criterion_9_determinism_and_throughput() {
    let run = big_run();
    // Budget: 30 wall-clock minutes on 8 cores = 240 core-minutes. The gate is
    // on core-time so the measurement is meaningful on smaller machines too.
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let core_minutes = run.base_seconds * cores as f64 / 60.0;
    report(
        9,
        run.identical_across_workers && core_minutes < 240.0,
        &format!(
            "{} pairs, bit-identical across 1 vs 8 workers: {}, full run {:.0}s on {cores} \
             core(s) = {core_minutes:.0} core-minutes (budget 240)",
            run.base.pairs.len(),
            run.identical_across_workers,
            run.base_seconds
        ),
    );
}

// --------------------------------------------------------------- criterion 10

#[test]
fn criterion_10_paper_schedule() {
    let sched = make_schedule(0.7, 0.9, 21, true).unwrap();
    let pass = sched.fractions == [0.7, 0.7875, 0.9]
        && sched.trials == [21, 16, 12]
        && sched.total_trials() == 50;
    report(
        10,
        pass,
        &format!("fractions {:?}, trials {:?}, total {}", sched.fractions, sched.trials, sched.total_trials()),
    );
}
