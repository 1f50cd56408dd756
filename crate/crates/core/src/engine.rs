//! Batch orchestration: all-pairs matrices, group-wise triplet sweeps,
//! verification runs, sorted/thresholded renderings, and group summaries.
//!
//! Every unit of work carries a seed derived from stable identifiers (variable
//! indices, level), so batch output is bit-identical regardless of worker
//! count or scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline;
use crate::calibrate::{estimate_pair_mi, CalibrationReport, MiEstimate};
use crate::extrapolate::{make_schedule, SubsampleSchedule};
use crate::ingest::{joint_sample, shuffle_column, Dataset};
use crate::multiinfo::{consistency_check, estimate_triplet, ConsistencyCheck, TripletEstimate};
use crate::{seed, Error, Result};

/// Parameters for batch estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub f1: f64,
    pub f3: f64,
    pub t1: usize,
    pub include_full: bool,
    pub b_max: usize,
    pub tolerance_bits: f64,
    pub min_joint_samples: usize,
    pub seed: u64,
    /// 0 means use all available cores.
    pub worker_count: usize,
    pub probe_pairs: usize,
    pub probe_triplets: usize,
    /// Ceiling on C(g,3) for a group triplet sweep.
    pub triplet_budget: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            f1: 0.7,
            f3: 0.9,
            t1: 21,
            include_full: true,
            b_max: 10,
            tolerance_bits: 0.01,
            min_joint_samples: 200,
            seed: 0,
            worker_count: 0,
            probe_pairs: 10_000,
            probe_triplets: 10_000,
            triplet_budget: 200_000,
        }
    }
}

impl BatchConfig {
    pub fn schedule(&self) -> Result<SubsampleSchedule> {
        make_schedule(self.f1, self.f3, self.t1, self.include_full)
    }

    /// Run `f` inside a rayon pool sized to `worker_count` (0 = default pool).
    pub fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        if self.worker_count == 0 {
            f()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.worker_count)
                .build()
                .expect("thread pool")
                .install(f)
        }
    }
}

/// Why a pair was left out of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SkipReason {
    InsufficientJoint { n_joint: usize, min: usize },
    Failed { message: String },
}

/// Symmetric all-pairs MI estimates with per-pair metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiMatrix {
    pub names: Vec<String>,
    /// Estimates keyed by (i, j) with i < j.
    pub pairs: BTreeMap<(usize, usize), MiEstimate>,
    pub skipped: Vec<((usize, usize), SkipReason)>,
}

impl MiMatrix {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    /// MI value for an unordered pair; None for the diagonal or skipped pairs.
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let key = (i.min(j), i.max(j));
        self.pairs.get(&key).map(|e| e.value_bits)
    }

    /// Mean over estimated (non-skipped) pairs.
    pub fn mean_value(&self) -> Option<f64> {
        if self.pairs.is_empty() {
            return None;
        }
        Some(self.pairs.values().map(|e| e.value_bits).sum::<f64>() / self.pairs.len() as f64)
    }
}

/// Estimate every unordered pair with a joint sample of at least
/// `min_joint_samples`, at levels 2..=b*. Deterministic across worker counts.
pub fn estimate_all_pairs(
    ds: &Dataset,
    cfg: &BatchConfig,
    calib: &CalibrationReport,
) -> Result<MiMatrix> {
    let b_star = calib.b_star()?;
    let sched = cfg.schedule()?;
    let n = ds.n_vars();
    let keys: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

    let results: Vec<((usize, usize), std::result::Result<MiEstimate, SkipReason>)> =
        cfg.with_pool(|| {
            keys.par_iter()
                .map(|&(i, j)| {
                    ((i, j), estimate_one_pair(ds, i, j, b_star, &sched, cfg))
                })
                .collect()
        });

    let mut pairs = BTreeMap::new();
    let mut skipped = Vec::new();
    for (key, r) in results {
        match r {
            Ok(est) => {
                pairs.insert(key, est);
            }
            Err(reason) => skipped.push((key, reason)),
        }
    }
    Ok(MiMatrix { names: ds.names().to_vec(), pairs, skipped })
}

fn estimate_one_pair(
    ds: &Dataset,
    i: usize,
    j: usize,
    b_star: usize,
    sched: &SubsampleSchedule,
    cfg: &BatchConfig,
) -> std::result::Result<MiEstimate, SkipReason> {
    let js = joint_sample(ds, &[i, j]).map_err(|e| SkipReason::Failed { message: e.to_string() })?;
    if js.len() < cfg.min_joint_samples {
        return Err(SkipReason::InsufficientJoint { n_joint: js.len(), min: cfg.min_joint_samples });
    }
    estimate_pair_mi(
        &js.columns[0],
        &js.columns[1],
        b_star,
        sched,
        seed::derive(cfg.seed, &[i as u64, j as u64]),
    )
    .map_err(|e| SkipReason::Failed { message: e.to_string() })
}

/// Summary of a shuffled-pair verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleSummary {
    pub n_pairs: usize,
    pub mean_bits: f64,
    pub std_bits: f64,
    /// Fraction of pairs with |MI| above three error bars.
    pub fraction_beyond_3_sigma: f64,
    pub values: Vec<f64>,
}

/// Run the full pipeline on shuffled pairs; with a valid calibration the
/// extrapolated values concentrate around zero.
pub fn verify_shuffled(
    ds: &Dataset,
    cfg: &BatchConfig,
    calib: &CalibrationReport,
    n_pairs: usize,
) -> Result<ShuffleSummary> {
    if n_pairs == 0 {
        return Ok(ShuffleSummary {
            n_pairs: 0,
            mean_bits: 0.0,
            std_bits: 0.0,
            fraction_beyond_3_sigma: 0.0,
            values: vec![],
        });
    }
    let b_star = calib.b_star()?;
    let sched = cfg.schedule()?;
    let mut rng = seed::rng(cfg.seed, &[0x76_65_72]);
    let tuples = crate::calibrate::draw_tuples(ds.n_vars(), 2, n_pairs, &mut rng);

    let estimates: Vec<Option<MiEstimate>> = cfg.with_pool(|| {
        tuples
            .par_iter()
            .enumerate()
            .map(|(pid, pair)| {
                let js = joint_sample(ds, pair).ok()?;
                if js.len() < cfg.min_joint_samples {
                    return None;
                }
                let mut srng = seed::rng(cfg.seed, &[5, pid as u64]);
                let js = shuffle_column(&js, 1, &mut srng);
                estimate_pair_mi(
                    &js.columns[0],
                    &js.columns[1],
                    b_star,
                    &sched,
                    seed::derive(cfg.seed, &[6, pid as u64]),
                )
                .ok()
            })
            .collect()
    });

    let mut values = Vec::new();
    let mut beyond = 0usize;
    for est in estimates.into_iter().flatten() {
        if est.value_bits.abs() > 3.0 * est.error_bar_bits {
            beyond += 1;
        }
        values.push(est.value_bits);
    }
    let n = values.len();
    let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
    Ok(ShuffleSummary {
        n_pairs: n,
        mean_bits: mean,
        std_bits: crate::extrapolate::std_dev(&values),
        fraction_beyond_3_sigma: if n == 0 { 0.0 } else { beyond as f64 / n as f64 },
        values,
    })
}

/// Distribution of re-estimation differences under joint-sample reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub n_pairs: usize,
    pub n_excluded: usize,
    pub differences: Vec<f64>,
    /// Share of re-estimated pairs whose value moved by more than 0.1 bits.
    pub fraction_above_tenth_bit: f64,
}

/// Re-estimate every pair of `base` on a random fraction of its joint sample
/// and compare. Pairs whose reduced sample violates the schedule minimum are
/// excluded and counted.
pub fn verify_subsample_stability(
    ds: &Dataset,
    cfg: &BatchConfig,
    calib: &CalibrationReport,
    base: &MiMatrix,
    fraction: f64,
) -> Result<StabilitySummary> {
    let b_star = calib.b_star()?;
    let sched = cfg.schedule()?;
    let keys: Vec<(usize, usize)> = base.pairs.keys().cloned().collect();

    let diffs: Vec<Option<f64>> = cfg.with_pool(|| {
        keys.par_iter()
            .map(|&(i, j)| {
                let est = &base.pairs[&(i, j)];
                let js = joint_sample(ds, &[i, j]).ok()?;
                let keep = (fraction * js.len() as f64).floor() as usize;
                if sched.smallest_subsample(keep) < b_star || keep < 2 {
                    return None;
                }
                let mut rng = seed::rng(cfg.seed, &[7, i as u64, j as u64]);
                let idx = {
                    use rand::seq::SliceRandom;
                    let mut pool: Vec<usize> = (0..js.len()).collect();
                    pool.shuffle(&mut rng);
                    let mut kept = pool[..keep].to_vec();
                    kept.sort_unstable();
                    kept
                };
                let x: Vec<f64> = idx.iter().map(|&t| js.columns[0][t]).collect();
                let y: Vec<f64> = idx.iter().map(|&t| js.columns[1][t]).collect();
                // same per-pair seed as the base run, so fraction 1.0 reproduces it
                let reduced = estimate_pair_mi(
                    &x,
                    &y,
                    b_star,
                    &sched,
                    seed::derive(cfg.seed, &[i as u64, j as u64]),
                )
                .ok()?;
                Some(reduced.value_bits - est.value_bits)
            })
            .collect()
    });

    let n_total = diffs.len();
    let differences: Vec<f64> = diffs.into_iter().flatten().collect();
    let n_excluded = n_total - differences.len();
    let above = differences.iter().filter(|d| d.abs() > 0.1).count();
    Ok(StabilitySummary {
        n_pairs: differences.len(),
        n_excluded,
        fraction_above_tenth_bit: if differences.is_empty() {
            0.0
        } else {
            above as f64 / differences.len() as f64
        },
        differences,
    })
}

/// A rendered, group-sorted, thresholded view of an [`MiMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortedMatrix {
    /// Variable indices in render order.
    pub order: Vec<usize>,
    /// Group label per rendered position.
    pub group_of: Vec<String>,
    /// Thresholded values in render order; entries below the global mean are
    /// zeroed, diagonal and skipped entries are zero.
    pub rendered: Vec<Vec<f64>>,
    pub threshold_bits: f64,
}

/// Group variables by label, order each group internally by descending mean MI
/// to other group members (stable tie-break on input order), and zero entries
/// below the mean over all estimated pairs. Unlabeled variables form an
/// implicit trailing group.
pub fn sorted_matrix(m: &MiMatrix, labels: &[(String, Vec<String>)]) -> Result<SortedMatrix> {
    let idx_of: BTreeMap<&str, usize> =
        m.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut group_of: Vec<Option<String>> = vec![None; m.n_vars()];
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (label, members) in labels {
        let mut ids = Vec::new();
        for name in members {
            let &i = idx_of
                .get(name.as_str())
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            if group_of[i].is_none() {
                group_of[i] = Some(label.clone());
                ids.push(i);
            }
        }
        groups.push((label.clone(), ids));
    }
    let trailing: Vec<usize> =
        (0..m.n_vars()).filter(|&i| group_of[i].is_none()).collect();
    if !trailing.is_empty() {
        groups.push(("(unlabeled)".to_string(), trailing));
    }

    let threshold_bits = m.mean_value().unwrap_or(0.0);
    let mut order = Vec::with_capacity(m.n_vars());
    let mut order_groups = Vec::with_capacity(m.n_vars());
    for (label, ids) in &groups {
        let mut scored: Vec<(usize, usize, f64)> = ids
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let others: Vec<f64> =
                    ids.iter().filter(|&&j| j != i).filter_map(|&j| m.value(i, j)).collect();
                let mean = if others.is_empty() {
                    0.0
                } else {
                    others.iter().sum::<f64>() / others.len() as f64
                };
                (pos, i, mean)
            })
            .collect();
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        for (_, i, _) in scored {
            order.push(i);
            order_groups.push(label.clone());
        }
    }

    let rendered = order
        .iter()
        .map(|&i| {
            order
                .iter()
                .map(|&j| match m.value(i, j) {
                    Some(v) if v >= threshold_bits => v,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    Ok(SortedMatrix { order, group_of: order_groups, rendered, threshold_bits })
}

/// One estimated triplet within a group sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTriplet {
    pub members: (usize, usize, usize),
    pub estimate: TripletEstimate,
    pub consistency: ConsistencyCheck,
}

/// Estimate all C(g,3) triplets of a variable group.
pub fn estimate_group_triplets(
    ds: &Dataset,
    group: &[usize],
    cfg: &BatchConfig,
    calib_triplet: &CalibrationReport,
) -> Result<Vec<GroupTriplet>> {
    let g = group.len();
    if g < 3 {
        return Ok(vec![]);
    }
    let count = g * (g - 1) * (g - 2) / 6;
    if count > cfg.triplet_budget {
        return Err(Error::TripletBudget { count, budget: cfg.triplet_budget });
    }
    let b_star = calib_triplet.b_star()?;
    let sched = cfg.schedule()?;

    let mut keys = Vec::with_capacity(count);
    for a in 0..g {
        for b in a + 1..g {
            for c in b + 1..g {
                keys.push((group[a], group[b], group[c]));
            }
        }
    }

    let results: Vec<Result<Option<GroupTriplet>>> = cfg.with_pool(|| {
        keys.par_iter()
            .map(|&(i, j, k)| {
                let js = joint_sample(ds, &[i, j, k])?;
                if js.len() < cfg.min_joint_samples {
                    return Ok(None);
                }
                let estimate = estimate_triplet(
                    [&js.columns[0], &js.columns[1], &js.columns[2]],
                    b_star,
                    &sched,
                    b_star,
                    seed::derive(cfg.seed, &[9, i as u64, j as u64, k as u64]),
                )?;
                let consistency = consistency_check(&estimate);
                Ok(Some(GroupTriplet { members: (i, j, k), estimate, consistency }))
            })
            .collect()
    });

    let mut out = Vec::with_capacity(count);
    for r in results {
        if let Some(t) = r? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Per-group information summary with exceedance probabilities against
/// non-specific baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub members: Vec<usize>,
    pub mean_triplet_bits: f64,
    /// Probability a group triplet exceeds the baseline triplet mean.
    pub exceedance_triplet: f64,
    /// Probability a group pair exceeds the baseline pair mean.
    pub exceedance_pair: f64,
    pub baseline_triplet_mean_bits: f64,
    pub baseline_pair_mean_bits: f64,
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Exceedance summary: what fraction of the group's values sit above the mean
/// of non-specific (randomly drawn) tuples.
pub fn group_summary(
    label: &str,
    members: &[usize],
    group_triplets: &[f64],
    group_pairs: &[f64],
    baseline_triplets: &[f64],
    baseline_pairs: &[f64],
) -> Result<GroupSummary> {
    let baseline_triplet_mean_bits = mean(baseline_triplets).ok_or(Error::EmptyBaseline)?;
    let baseline_pair_mean_bits = mean(baseline_pairs).ok_or(Error::EmptyBaseline)?;
    let exceed = |vals: &[f64], threshold: f64| {
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().filter(|&&v| v > threshold).count() as f64 / vals.len() as f64
        }
    };
    Ok(GroupSummary {
        label: label.to_string(),
        members: members.to_vec(),
        mean_triplet_bits: mean(group_triplets).unwrap_or(0.0),
        exceedance_triplet: exceed(group_triplets, baseline_triplet_mean_bits),
        exceedance_pair: exceed(group_pairs, baseline_pair_mean_bits),
        baseline_triplet_mean_bits,
        baseline_pair_mean_bits,
    })
}

/// Non-specific baseline values: MI of `count` randomly drawn pairs and mean
/// triplet information of `count` randomly drawn triplets.
pub fn baseline_values(
    ds: &Dataset,
    cfg: &BatchConfig,
    calib_pair: &CalibrationReport,
    calib_triplet: &CalibrationReport,
    count: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b_pair = calib_pair.b_star()?;
    let b_tri = calib_triplet.b_star()?;
    let sched = cfg.schedule()?;
    let mut rng = seed::rng(cfg.seed, &[0x62_61_73_65]);
    let pair_tuples = crate::calibrate::draw_tuples(ds.n_vars(), 2, count, &mut rng);
    let tri_tuples = crate::calibrate::draw_tuples(ds.n_vars(), 3, count, &mut rng);

    let pairs: Vec<f64> = cfg.with_pool(|| {
        pair_tuples
            .par_iter()
            .enumerate()
            .filter_map(|(pid, t)| {
                let js = joint_sample(ds, t).ok()?;
                if js.len() < cfg.min_joint_samples {
                    return None;
                }
                estimate_pair_mi(
                    &js.columns[0],
                    &js.columns[1],
                    b_pair,
                    &sched,
                    seed::derive(cfg.seed, &[10, pid as u64]),
                )
                .ok()
                .map(|e| e.value_bits)
            })
            .collect()
    });
    let triplets: Vec<f64> = cfg.with_pool(|| {
        tri_tuples
            .par_iter()
            .enumerate()
            .filter_map(|(tid, t)| {
                let js = joint_sample(ds, t).ok()?;
                if js.len() < cfg.min_joint_samples {
                    return None;
                }
                estimate_triplet(
                    [&js.columns[0], &js.columns[1], &js.columns[2]],
                    b_tri,
                    &sched,
                    b_tri,
                    seed::derive(cfg.seed, &[11, tid as u64]),
                )
                .ok()
                .map(|e| e.mean_bits)
            })
            .collect()
    });
    Ok((pairs, triplets))
}

/// Convenience: pairwise MI values among a group's members from a matrix.
pub fn group_pair_values(m: &MiMatrix, members: &[usize]) -> Vec<f64> {
    let mut out = Vec::new();
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if let Some(v) = m.value(i, j) {
                out.push(v);
            }
        }
    }
    out
}

/// MI-vs-PC comparison over every estimated pair of a matrix.
pub fn compare_pc(m: &MiMatrix, ds: &Dataset) -> Result<Vec<baseline::PcMiPoint>> {
    let estimates: Vec<((usize, usize), MiEstimate)> =
        m.pairs.iter().map(|(&k, v)| (k, v.clone())).collect();
    baseline::compare_report(&estimates, ds)
}
