//! Subsample schedules, repeated naive estimation, and the linear fit against
//! inverse sample size that yields the infinite-sample intercept.
//!
//! Naive plug-in estimates depend on the sample size N as
//! `I_est(b, N) = I_inf(b) + A(b)/N + ...`; fitting the estimates over a
//! spread of subsample sizes and reading off the intercept removes the
//! leading finite-sample bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::plugin::{plugin_mi, tabulate};
use crate::quantize::{combine, equal_population_quantize, QuantizedVector};
use crate::{seed, Error, Result};

/// One side of a pairwise estimation: how to turn a slice of observations into
/// a quantized variable.
#[derive(Debug, Clone)]
pub enum Variate<'a> {
    /// Real-valued data, adaptively quantized at each draw.
    Continuous { values: &'a [f64], levels: usize },
    /// Pre-quantized symbols, subsampled as-is.
    Discrete { symbols: &'a [u32], levels: usize },
    /// Several real vectors, each quantized at its own level and combined into
    /// one product-alphabet variable.
    Product { parts: Vec<(&'a [f64], usize)> },
}

impl<'a> Variate<'a> {
    pub fn len(&self) -> usize {
        match self {
            Variate::Continuous { values, .. } => values.len(),
            Variate::Discrete { symbols, .. } => symbols.len(),
            Variate::Product { parts } => parts.first().map_or(0, |(v, _)| v.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total alphabet size.
    pub fn levels(&self) -> usize {
        match self {
            Variate::Continuous { levels, .. } | Variate::Discrete { levels, .. } => *levels,
            Variate::Product { parts } => parts.iter().map(|(_, b)| *b).product(),
        }
    }

    /// Quantize the observations at the given positions.
    fn quantize_subset(&self, idx: &[usize]) -> Result<QuantizedVector> {
        match self {
            Variate::Continuous { values, levels } => {
                let sub: Vec<f64> = idx.iter().map(|&t| values[t]).collect();
                equal_population_quantize(&sub, *levels)
            }
            Variate::Discrete { symbols, levels } => {
                let sub: Vec<u32> = idx.iter().map(|&t| symbols[t]).collect();
                QuantizedVector::from_symbols(sub, *levels)
            }
            Variate::Product { parts } => {
                let mut iter = parts.iter();
                let (v0, b0) = iter.next().ok_or(Error::EmptyInput)?;
                let sub0: Vec<f64> = idx.iter().map(|&t| v0[t]).collect();
                let mut acc = equal_population_quantize(&sub0, *b0)?;
                for (v, b) in iter {
                    let sub: Vec<f64> = idx.iter().map(|&t| v[t]).collect();
                    let q = equal_population_quantize(&sub, *b)?;
                    acc = combine(&acc, &q)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Whether each subsample draw is re-quantized from the raw values, or the
/// full sample is quantized once and its symbols subsampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizeMode {
    /// Re-quantize within every draw, keeping bins equally populated in the
    /// sample actually being estimated. The default.
    PerDraw,
    /// Quantize the full sample once, then subsample the symbols.
    Once,
}

/// Subsample fractions with per-fraction trial counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSchedule {
    /// Strictly increasing fractions in (0, 1].
    pub fractions: Vec<f64>,
    /// Trial counts, one per fraction.
    pub trials: Vec<usize>,
    /// Whether one extra trial at the full sample joins the fit.
    pub include_full: bool,
}

impl SubsampleSchedule {
    pub fn total_trials(&self) -> usize {
        self.trials.iter().sum::<usize>() + usize::from(self.include_full)
    }

    /// Smallest subsample size under this schedule for a sample of `n`.
    pub fn smallest_subsample(&self, n: usize) -> usize {
        self.fractions.iter().map(|&f| (f * n as f64).floor() as usize).min().unwrap_or(n)
    }

    /// The paper-default schedule: fractions 0.7 / 0.7875 / 0.9, trial counts
    /// 21 / 16 / 12, plus the full sample, 50 trials in all.
    pub fn default_three_point() -> Self {
        make_schedule(0.7, 0.9, 21, true).expect("default schedule is valid")
    }
}

/// Build the three-point schedule: the middle fraction is the harmonic mean
/// `2*f1*f3/(f1+f3)` so the inverse subsample sizes are uniformly spaced, and
/// trial counts follow `t_k = max(1, floor(t1*(f1/f_k)^2))` so the error bars
/// stay roughly constant across the fitting region.
pub fn make_schedule(f1: f64, f3: f64, t1: usize, include_full: bool) -> Result<SubsampleSchedule> {
    if !(f1 > 0.0 && f1 < f3 && f3 <= 1.0) {
        return Err(Error::BadScheduleFractions { f1, f3 });
    }
    if t1 < 2 {
        return Err(Error::BadTrialCount(t1));
    }
    let f2 = 2.0 * f1 * f3 / (f1 + f3);
    let fractions = vec![f1, f2, f3];
    let trials = fractions
        .iter()
        .map(|&f| std::cmp::max(1, (t1 as f64 * (f1 / f).powi(2)).floor() as usize))
        .collect();
    Ok(SubsampleSchedule { fractions, trials, include_full })
}

/// Per-level extrapolation output: the raw trial points, the fitted line, and
/// the spread of the naive estimates at the smallest fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    /// Alphabet sizes of the two sides.
    pub levels: (usize, usize),
    /// (inverse subsample size, naive MI in bits), one per trial.
    pub points: Vec<(f64, f64)>,
    /// Fitted infinite-sample intercept I_inf(b).
    pub intercept_bits: f64,
    /// Fitted slope A(b), in bit-samples.
    pub slope_bits_samples: f64,
    /// Standard deviation of the naive estimates at the smallest fraction.
    pub error_bar_bits: f64,
}

impl ExtrapolationResult {
    /// Fit injected (inverse size, MI) points directly; test hook for
    /// exercising the fit in isolation. The error bar is the standard
    /// deviation of the estimates at the largest inverse size (smallest
    /// subsample).
    pub fn fit_from_points(levels: (usize, usize), points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let (intercept_bits, slope_bits_samples) = fit_line(&points)?;
        let max_x = points.iter().map(|&(x, _)| x).fold(f64::NEG_INFINITY, f64::max);
        let at_smallest: Vec<f64> =
            points.iter().filter(|&&(x, _)| x == max_x).map(|&(_, y)| y).collect();
        Ok(ExtrapolationResult {
            levels,
            points,
            intercept_bits,
            slope_bits_samples,
            error_bar_bits: std_dev(&at_smallest),
        })
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Ordinary least squares of y against x: returns (intercept, slope).
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let first = points.first().ok_or(Error::DegenerateFit)?.0;
    if points.iter().all(|&(x, _)| x == first) {
        return Err(Error::DegenerateFit);
    }
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    Ok((mean_y - slope * mean_x, slope))
}

/// Draw `k` distinct indices from `0..n`, ascending. Partial Fisher-Yates.
fn draw_indices<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    let mut out = pool[..k].to_vec();
    out.sort_unstable();
    out
}

/// Run the subsample schedule for one pair of variates and fit the 1/N law.
///
/// Per-trial randomness derives from `(call_seed, fraction index, trial
/// index)` only, so trials may be evaluated in any order or in parallel with
/// identical results.
pub fn extrapolate_pair(
    a: &Variate,
    b: &Variate,
    sched: &SubsampleSchedule,
    call_seed: u64,
) -> Result<ExtrapolationResult> {
    extrapolate_pair_mode(a, b, sched, call_seed, QuantizeMode::PerDraw)
}

/// [`extrapolate_pair`] with an explicit quantization mode.
pub fn extrapolate_pair_mode(
    a: &Variate,
    b: &Variate,
    sched: &SubsampleSchedule,
    call_seed: u64,
    mode: QuantizeMode,
) -> Result<ExtrapolationResult> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::LengthMismatch(n, b.len()));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let needed = std::cmp::max(a.levels(), b.levels());
    let smallest = sched.smallest_subsample(n);
    if smallest < needed {
        return Err(Error::SampleTooSmall { n, smallest, needed });
    }

    // Once-mode quantizes the full vectors up front and subsamples symbols.
    let (qa_full, qb_full);
    let full: Vec<usize> = (0..n).collect();
    let (a, b) = match mode {
        QuantizeMode::PerDraw => (a.clone(), b.clone()),
        QuantizeMode::Once => {
            qa_full = a.quantize_subset(&full)?;
            qb_full = b.quantize_subset(&full)?;
            (
                Variate::Discrete { symbols: &qa_full.symbols, levels: qa_full.levels },
                Variate::Discrete { symbols: &qb_full.symbols, levels: qb_full.levels },
            )
        }
    };

    let mut points = Vec::with_capacity(sched.total_trials());
    let mut smallest_estimates = Vec::new();
    let f_min = sched.fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    for (k, (&f, &t_k)) in sched.fractions.iter().zip(&sched.trials).enumerate() {
        let size = (f * n as f64).floor() as usize;
        for t in 0..t_k {
            let mut rng = seed::rng(call_seed, &[k as u64, t as u64]);
            let idx = draw_indices(n, size, &mut rng);
            let mi = plugin_mi(&tabulate(&a.quantize_subset(&idx)?, &b.quantize_subset(&idx)?)?);
            points.push((1.0 / size as f64, mi));
            if f == f_min {
                smallest_estimates.push(mi);
            }
        }
    }
    if sched.include_full {
        let mi = plugin_mi(&tabulate(&a.quantize_subset(&full)?, &b.quantize_subset(&full)?)?);
        points.push((1.0 / n as f64, mi));
    }

    let (intercept_bits, slope_bits_samples) = fit_line(&points)?;
    Ok(ExtrapolationResult {
        levels: (a.levels(), b.levels()),
        points,
        intercept_bits,
        slope_bits_samples,
        error_bar_bits: std_dev(&smallest_estimates),
    })
}
