//! Calibration of the critical quantization level b* against shuffled data,
//! and selection of the final per-estimate level.
//!
//! Shuffling destroys all dependence, so any nonzero extrapolated intercept on
//! shuffled data is an uncorrected small-sample effect. b* is the largest
//! level at which the shuffled intercepts still average to zero within the
//! configured tolerance and noise window.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::extrapolate::{extrapolate_pair, ExtrapolationResult, SubsampleSchedule, Variate};
use crate::ingest::{joint_sample, shuffle_column, Dataset};
use crate::plugin::plugin_mi;
use crate::quantize::equal_population_quantize;
use crate::plugin::tabulate;
use crate::{seed, Error, Result};

/// Minimum number of shuffled probes for a meaningful mean/std.
pub const MIN_PROBES: usize = 30;

/// Shuffled-intercept statistics for one quantization level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub mean_intercept_bits: f64,
    pub std_intercept_bits: f64,
    pub probes: usize,
}

/// Per-level shuffle statistics and the selected critical level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub per_level: BTreeMap<usize, LevelStats>,
    /// None when no level satisfies the criterion even at b = 2.
    pub b_star: Option<usize>,
    pub tolerance_bits: f64,
}

impl CalibrationReport {
    /// The critical level, or an error if calibration failed.
    pub fn b_star(&self) -> Result<usize> {
        self.b_star.ok_or(Error::CalibrationFailed)
    }

    /// Human-readable per-level table.
    pub fn render(&self) -> String {
        let mut out = String::from("b\tmean_intercept_bits\tstd_intercept_bits\tprobes\n");
        for (b, s) in &self.per_level {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                b, s.mean_intercept_bits, s.std_intercept_bits, s.probes
            ));
        }
        match self.b_star {
            Some(b) => out.push_str(&format!("b_star\t{}\n", b)),
            None => out.push_str("b_star\tundefined\n"),
        }
        out.push_str(&format!("tolerance_bits\t{}\n", self.tolerance_bits));
        out
    }
}

/// A finished pairwise estimate: the selected level's intercept together with
/// the whole per-level curve it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value_bits: f64,
    pub chosen_b: usize,
    pub error_bar_bits: f64,
    pub per_b: BTreeMap<usize, ExtrapolationResult>,
    pub n_joint: usize,
}

fn select_b_star(per_level: &BTreeMap<usize, LevelStats>, tolerance_bits: f64) -> Option<usize> {
    let mut best = None;
    for (&b, s) in per_level {
        let noise_window = 2.0 * s.std_intercept_bits / (s.probes as f64).sqrt();
        let mean = s.mean_intercept_bits.abs();
        if mean <= tolerance_bits && mean <= noise_window {
            best = Some(b);
        } else {
            break; // criterion must hold for every level up to b*
        }
    }
    best
}

fn summarize(intercepts: &BTreeMap<usize, Vec<f64>>, tolerance_bits: f64) -> CalibrationReport {
    let per_level: BTreeMap<usize, LevelStats> = intercepts
        .iter()
        .map(|(&b, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            (
                b,
                LevelStats {
                    mean_intercept_bits: mean,
                    std_intercept_bits: crate::extrapolate::std_dev(vals),
                    probes: vals.len(),
                },
            )
        })
        .collect();
    let b_star = select_b_star(&per_level, tolerance_bits);
    CalibrationReport { per_level, b_star, tolerance_bits }
}

/// Draw `count` distinct k-subsets of variables. Falls back to sampling with
/// replacement when the dataset has fewer distinct tuples than requested.
pub(crate) fn draw_tuples<R: Rng>(
    n_vars: usize,
    k: usize,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut total: usize = 1;
    for i in 0..k {
        total = total.saturating_mul(n_vars - i) / (i + 1);
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut tuple = Vec::with_capacity(k);
        while tuple.len() < k {
            let v = rng.gen_range(0..n_vars);
            if !tuple.contains(&v) {
                tuple.push(v);
            }
        }
        tuple.sort_unstable();
        if out.len() < total && !seen.insert(tuple.clone()) {
            continue;
        }
        out.push(tuple);
    }
    out
}

/// Probe shuffled pairs at every level in 2..=b_max and pick the pairwise b*.
///
/// For each probe pair one member is shuffled, the extrapolation pipeline runs
/// at each level, and the per-level intercepts are pooled.
pub fn determine_bstar(
    ds: &Dataset,
    b_max: usize,
    n_probe_pairs: usize,
    sched: &SubsampleSchedule,
    base_seed: u64,
    tolerance_bits: f64,
) -> Result<CalibrationReport> {
    if b_max < 2 {
        return Err(Error::BadBMax);
    }
    if n_probe_pairs < MIN_PROBES {
        return Err(Error::BelowMinimumProbes { got: n_probe_pairs, min: MIN_PROBES });
    }
    let mut rng = seed::rng(base_seed, &[0x70_61_69_72]);
    let tuples = draw_tuples(ds.n_vars(), 2, n_probe_pairs, &mut rng);

    let mut intercepts: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (pid, pair) in tuples.iter().enumerate() {
        let js = joint_sample(ds, pair)?;
        if js.is_empty() || sched.smallest_subsample(js.len()) < b_max {
            continue;
        }
        let mut shuffle_rng = seed::rng(base_seed, &[1, pid as u64]);
        let shuffled = shuffle_column(&js, 1, &mut shuffle_rng);
        for b in 2..=b_max {
            let r = extrapolate_pair(
                &Variate::Continuous { values: &shuffled.columns[0], levels: b },
                &Variate::Continuous { values: &shuffled.columns[1], levels: b },
                sched,
                seed::derive(base_seed, &[2, pid as u64, b as u64]),
            )?;
            intercepts.entry(b).or_default().push(r.intercept_bits);
        }
    }
    if intercepts.is_empty() {
        return Err(Error::CalibrationFailed);
    }
    Ok(summarize(&intercepts, tolerance_bits))
}

/// Probe shuffled triplets through the chain-rule estimator, which exercises
/// the b-by-b^2 joint table, and pick the triplet b*.
pub fn triplet_bstar(
    ds: &Dataset,
    b_max: usize,
    n_probe_triplets: usize,
    sched: &SubsampleSchedule,
    base_seed: u64,
    tolerance_bits: f64,
) -> Result<CalibrationReport> {
    if b_max < 2 {
        return Err(Error::BadBMax);
    }
    if n_probe_triplets < MIN_PROBES {
        return Err(Error::BelowMinimumProbes { got: n_probe_triplets, min: MIN_PROBES });
    }
    let mut rng = seed::rng(base_seed, &[0x74_72_69_70]);
    let tuples = draw_tuples(ds.n_vars(), 3, n_probe_triplets, &mut rng);

    let mut intercepts: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (tid, triple) in tuples.iter().enumerate() {
        let js = joint_sample(ds, triple)?;
        if js.is_empty() || sched.smallest_subsample(js.len()) < b_max * b_max {
            continue;
        }
        // shuffle two members independently so all three are independent
        let mut rng1 = seed::rng(base_seed, &[3, tid as u64, 1]);
        let mut rng2 = seed::rng(base_seed, &[3, tid as u64, 2]);
        let js = shuffle_column(&js, 1, &mut rng1);
        let js = shuffle_column(&js, 2, &mut rng2);
        for b in 2..=b_max {
            // I3 at level b via the chain rule: pivot vs combined plus the pair
            let pivot = extrapolate_pair(
                &Variate::Continuous { values: &js.columns[0], levels: b },
                &Variate::Product { parts: vec![(&js.columns[1], b), (&js.columns[2], b)] },
                sched,
                seed::derive(base_seed, &[4, tid as u64, b as u64, 0]),
            )?;
            let pair = extrapolate_pair(
                &Variate::Continuous { values: &js.columns[1], levels: b },
                &Variate::Continuous { values: &js.columns[2], levels: b },
                sched,
                seed::derive(base_seed, &[4, tid as u64, b as u64, 1]),
            )?;
            intercepts.entry(b).or_default().push(pivot.intercept_bits + pair.intercept_bits);
        }
    }
    if intercepts.is_empty() {
        return Err(Error::CalibrationFailed);
    }
    Ok(summarize(&intercepts, tolerance_bits))
}

/// Pick the final level from per-level extrapolations: scanning b upward from
/// 3 to b*, an increment is significant when it exceeds that level's error
/// bar; the chosen level is the largest significant one, or 2 when none is.
pub fn select_level(
    per_b: &BTreeMap<usize, ExtrapolationResult>,
    b_star: usize,
    n_joint: usize,
) -> Result<MiEstimate> {
    for b in 2..=b_star {
        if !per_b.contains_key(&b) {
            return Err(Error::MissingLevel(b));
        }
    }
    let mut chosen = 2;
    for b in 3..=b_star {
        let prev = &per_b[&(b - 1)];
        let cur = &per_b[&b];
        if cur.intercept_bits - prev.intercept_bits > cur.error_bar_bits {
            chosen = b;
        }
    }
    let winner = &per_b[&chosen];
    Ok(MiEstimate {
        value_bits: winner.intercept_bits,
        chosen_b: chosen,
        error_bar_bits: winner.error_bar_bits,
        per_b: per_b.clone(),
        n_joint,
    })
}

/// Full single-pair pipeline: extrapolate at every level 2..=cap admissible
/// for the sample size, then select. `cap` is normally the calibrated b*.
pub fn estimate_pair_mi(
    x: &[f64],
    y: &[f64],
    cap: usize,
    sched: &SubsampleSchedule,
    call_seed: u64,
) -> Result<MiEstimate> {
    let n = x.len();
    let mut per_b = BTreeMap::new();
    let mut effective_cap = 2;
    for b in 2..=cap {
        if sched.smallest_subsample(n) < b {
            break;
        }
        let r = extrapolate_pair(
            &Variate::Continuous { values: x, levels: b },
            &Variate::Continuous { values: y, levels: b },
            sched,
            seed::derive(call_seed, &[b as u64]),
        )?;
        per_b.insert(b, r);
        effective_cap = b;
    }
    if per_b.is_empty() {
        return Err(Error::SampleTooSmall {
            n,
            smallest: sched.smallest_subsample(n),
            needed: 2,
        });
    }
    select_level(&per_b, effective_cap, n)
}

/// Naive full-sample plug-in MI of two real vectors at level b. Diagnostic
/// helper used by verification reports.
pub fn naive_mi(x: &[f64], y: &[f64], b: usize) -> Result<f64> {
    let qa = equal_population_quantize(x, b)?;
    let qb = equal_population_quantize(y, b)?;
    Ok(plugin_mi(&tabulate(&qa, &qb)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn stats(mean: f64, std: f64, probes: usize) -> LevelStats {
        LevelStats { mean_intercept_bits: mean, std_intercept_bits: std, probes }
    }

    #[test]
    fn b_star_is_largest_prefix_passing() {
        let mut per_level = BTreeMap::new();
        per_level.insert(2, stats(0.0005, 0.01, 100));
        per_level.insert(3, stats(0.001, 0.02, 100));
        per_level.insert(4, stats(0.05, 0.02, 100)); // fails both guards
        per_level.insert(5, stats(0.0, 0.01, 100)); // passing again must not matter
        assert_eq!(select_b_star(&per_level, 0.01), Some(3));
    }

    #[test]
    fn zero_tolerance_is_unsatisfiable() {
        let mut per_level = BTreeMap::new();
        per_level.insert(2, stats(1e-6, 0.01, 100));
        assert_eq!(select_b_star(&per_level, 0.0), None);
    }

    #[test]
    fn select_level_stops_at_insignificant_increment() {
        let mk = |i: f64| ExtrapolationResult {
            levels: (2, 2),
            points: vec![(0.1, i), (0.2, i)],
            intercept_bits: i,
            slope_bits_samples: 0.0,
            error_bar_bits: 0.01,
        };
        let mut per_b = BTreeMap::new();
        per_b.insert(2, mk(0.30));
        per_b.insert(3, mk(0.45));
        per_b.insert(4, mk(0.50));
        per_b.insert(5, mk(0.505));
        let est = select_level(&per_b, 5, 1000).unwrap();
        assert_eq!(est.chosen_b, 4);
        assert_abs_diff_eq!(est.value_bits, 0.50, epsilon = 1e-12);
    }

    #[test]
    fn select_level_all_significant() {
        let mk = |i: f64| ExtrapolationResult {
            levels: (2, 2),
            points: vec![],
            intercept_bits: i,
            slope_bits_samples: 0.0,
            error_bar_bits: 0.01,
        };
        let mut per_b = BTreeMap::new();
        for (b, i) in [(2, 0.1), (3, 0.2), (4, 0.3), (5, 0.4)] {
            per_b.insert(b, mk(i));
        }
        assert_eq!(select_level(&per_b, 5, 100).unwrap().chosen_b, 5);
    }

    #[test]
    fn select_level_flat_falls_back_to_two() {
        let mk = |i: f64| ExtrapolationResult {
            levels: (2, 2),
            points: vec![],
            intercept_bits: i,
            slope_bits_samples: 0.0,
            error_bar_bits: 0.01,
        };
        let mut per_b = BTreeMap::new();
        for b in 2..=5 {
            per_b.insert(b, mk(0.0));
        }
        let est = select_level(&per_b, 5, 100).unwrap();
        assert_eq!(est.chosen_b, 2);
        assert_eq!(est.value_bits, 0.0);
    }

    #[test]
    fn select_level_missing_level_rejected() {
        let mut per_b = BTreeMap::new();
        per_b.insert(2, ExtrapolationResult {
            levels: (2, 2),
            points: vec![],
            intercept_bits: 0.0,
            slope_bits_samples: 0.0,
            error_bar_bits: 0.0,
        });
        assert!(matches!(select_level(&per_b, 3, 10), Err(Error::MissingLevel(3))));
    }

    #[test]
    fn probe_floor_enforced() {
        let ds = Dataset::complete(
            vec!["a".into(), "b".into()],
            vec![vec![1.0; 50], vec![2.0; 50]],
        )
        .unwrap();
        let sched = SubsampleSchedule::default_three_point();
        assert!(matches!(
            determine_bstar(&ds, 4, 5, &sched, 0, 0.01),
            Err(Error::BelowMinimumProbes { .. })
        ));
        assert!(matches!(determine_bstar(&ds, 1, 100, &sched, 0, 0.01), Err(Error::BadBMax)));
    }

    #[test]
    fn draw_tuples_distinct_until_exhausted() {
        let mut rng = crate::seed::rng_from(4);
        let tuples = draw_tuples(5, 2, 10, &mut rng);
        assert_eq!(tuples.len(), 10);
        let distinct: std::collections::HashSet<_> = tuples.iter().cloned().collect();
        assert_eq!(distinct.len(), 10); // C(5,2) = 10, all used exactly once
        for t in &tuples {
            assert!(t[0] < t[1]);
        }
    }

    #[test]
    fn calibration_accepts_large_independent_sample() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(21);
        let n = 4000;
        let values: Vec<Vec<f64>> = (0..6).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
        let names = (0..6).map(|i| format!("v{i}")).collect();
        let ds = Dataset::complete(names, values).unwrap();
        let sched = crate::extrapolate::make_schedule(0.7, 0.9, 5, true).unwrap();
        let report = determine_bstar(&ds, 3, 30, &sched, 17, 0.01).unwrap();
        // bias is tiny at N=4000, both levels must pass
        assert_eq!(report.b_star, Some(3));
    }
}
