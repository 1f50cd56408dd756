//! Sample-based multi-information estimation via the chain-rule decomposition.
//!
//! A triplet's information splits into two pairwise terms, e.g.
//! `I3 = I(y_i; y_j,y_k) + I(y_j; y_k)`, each of which goes through the full
//! pairwise pipeline. The combined variable in the first term lives on a b^2
//! alphabet, so the joint table has b^3 cells and the admissible level cap is
//! lower than for plain pairs. Permuting the pivot gives three compositions of
//! the same quantity, which serves as a built-in consistency check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibrate::{select_level, MiEstimate};
use crate::extrapolate::{extrapolate_pair, SubsampleSchedule, Variate};
use crate::{seed, Error, Result};

/// The three chain-rule compositions of a triplet information value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletEstimate {
    /// One value per pivot choice, in input order of the pivot.
    pub compositions: [f64; 3],
    pub mean_bits: f64,
    /// Max absolute pairwise difference among the three compositions.
    pub spread_bits: f64,
    pub per_composition_error_bars: [f64; 3],
}

/// Result of the three-way consistency comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub pass: bool,
    pub spread_bits: f64,
    pub max_error_bar_bits: f64,
    pub compositions: [f64; 3],
}

/// One chain-rule term of a general-order estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTerm {
    /// Position (in the supplied ordering) of the head variable.
    pub head: usize,
    pub estimate: MiEstimate,
}

/// A general-order multi-information estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiInfoEstimate {
    pub value_bits: f64,
    pub terms: Vec<ChainTerm>,
}

fn occupancy_guard(n: usize, sched: &SubsampleSchedule, cells: usize) -> Result<()> {
    let smallest = sched.smallest_subsample(n);
    if smallest < cells {
        return Err(Error::OccupancyGuard { smallest, cells });
    }
    Ok(())
}

/// Estimate one chain term I(head; tail...) with per-level extrapolation and
/// level selection over 2..=b.
fn estimate_term(
    head: &[f64],
    tail: &[&[f64]],
    b: usize,
    sched: &SubsampleSchedule,
    term_seed: u64,
) -> Result<MiEstimate> {
    let mut per_b = BTreeMap::new();
    for level in 2..=b {
        let r = extrapolate_pair(
            &Variate::Continuous { values: head, levels: level },
            &Variate::Product { parts: tail.iter().map(|&t| (t, level)).collect() },
            sched,
            seed::derive(term_seed, &[level as u64]),
        )?;
        per_b.insert(level, r);
    }
    select_level(&per_b, b, head.len())
}

/// Estimate a triplet information value through all three compositions.
///
/// For each pivot the two non-pivot variables are combined into a b^2-level
/// variable; both the pivot-vs-combined term and the remaining pair term get
/// independent level selection capped at `b`, which must not exceed the
/// calibrated triplet b*.
pub fn estimate_triplet(
    xs: [&[f64]; 3],
    b: usize,
    sched: &SubsampleSchedule,
    b_star_triplet: usize,
    call_seed: u64,
) -> Result<TripletEstimate> {
    if b > b_star_triplet {
        return Err(Error::LevelAboveCap { b, cap: b_star_triplet });
    }
    let n = xs[0].len();
    if xs[1].len() != n || xs[2].len() != n {
        return Err(Error::LengthMismatch(n, xs[1].len().max(xs[2].len())));
    }
    occupancy_guard(n, sched, b * b)?;

    let mut compositions = [0.0; 3];
    let mut error_bars = [0.0; 3];
    for pivot in 0..3 {
        let (j, k) = match pivot {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let head_term = estimate_term(
            xs[pivot],
            &[xs[j], xs[k]],
            b,
            sched,
            seed::derive(call_seed, &[pivot as u64, 0]),
        )?;
        let pair_term = estimate_term(
            xs[j],
            &[xs[k]],
            b,
            sched,
            seed::derive(call_seed, &[pivot as u64, 1]),
        )?;
        compositions[pivot] = head_term.value_bits + pair_term.value_bits;
        error_bars[pivot] =
            (head_term.error_bar_bits.powi(2) + pair_term.error_bar_bits.powi(2)).sqrt();
    }
    let mean_bits = compositions.iter().sum::<f64>() / 3.0;
    let spread_bits = compositions
        .iter()
        .flat_map(|a| compositions.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(TripletEstimate {
        compositions,
        mean_bits,
        spread_bits,
        per_composition_error_bars: error_bars,
    })
}

/// Estimate the order-r multi-information of `xs` under a variable ordering by
/// summing the r-1 chain terms. The occupancy guard on the largest combined
/// tail (b^(r-1) cells) is what makes high orders infeasible at small N.
pub fn estimate_multiinformation(
    xs: &[&[f64]],
    order: &[usize],
    b: usize,
    sched: &SubsampleSchedule,
    call_seed: u64,
) -> Result<MultiInfoEstimate> {
    let r = xs.len();
    if r < 2 {
        return Err(Error::EmptyInput);
    }
    if order.len() != r {
        return Err(Error::BadPermutation);
    }
    let mut seen = vec![false; r];
    for &v in order {
        if v >= r || seen[v] {
            return Err(Error::BadPermutation);
        }
        seen[v] = true;
    }
    let n = xs[0].len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::LengthMismatch(n, 0));
    }
    occupancy_guard(n, sched, b.pow((r - 1) as u32))?;

    let mut terms = Vec::with_capacity(r - 1);
    let mut total = 0.0;
    for head_pos in 0..r - 1 {
        let head = xs[order[head_pos]];
        let tail: Vec<&[f64]> = order[head_pos + 1..].iter().map(|&v| xs[v]).collect();
        let est = estimate_term(
            head,
            &tail,
            b,
            sched,
            seed::derive(call_seed, &[head_pos as u64]),
        )?;
        total += est.value_bits;
        terms.push(ChainTerm { head: head_pos, estimate: est });
    }
    Ok(MultiInfoEstimate { value_bits: total, terms })
}

/// Compare the three compositions: they are consistent when the spread does
/// not exceed twice the largest per-composition error bar.
pub fn consistency_check(t: &TripletEstimate) -> ConsistencyCheck {
    let max_error_bar_bits =
        t.per_composition_error_bars.iter().cloned().fold(0.0, f64::max);
    ConsistencyCheck {
        pass: t.spread_bits <= 2.0 * max_error_bar_bits,
        spread_bits: t.spread_bits,
        max_error_bar_bits,
        compositions: t.compositions,
    }
}
