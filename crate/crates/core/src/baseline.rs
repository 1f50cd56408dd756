//! Pearson correlation and the Gaussian MI correspondence, for MI-vs-PC
//! comparison reports.

use serde::{Deserialize, Serialize};

use crate::calibrate::MiEstimate;
use crate::ingest::{joint_sample, Dataset};
use crate::{Error, Result};

/// One point of an MI-vs-PC scatter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcMiPoint {
    pub pair: (usize, usize),
    /// None when the correlation is undefined for this pair (zero variance).
    pub pc: Option<f64>,
    pub mi_bits: f64,
    /// MI a bivariate Gaussian with this correlation would have; None when pc
    /// is undefined or |pc| = 1.
    pub gaussian_mi_bits: Option<f64>,
    pub n_joint: usize,
}

/// Sample Pearson correlation, population (n) variance in both numerator and
/// denominator. Clamped against rounding just beyond +/-1.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    let n = u.len();
    if n < 2 {
        return Err(Error::EmptyInput);
    }
    let nf = n as f64;
    let mu = u.iter().sum::<f64>() / nf;
    let mv = v.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_u = 0.0;
    let mut var_v = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        cov += (a - mu) * (b - mv);
        var_u += (a - mu) * (a - mu);
        var_v += (b - mv) * (b - mv);
    }
    if var_u == 0.0 || var_v == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let pc = cov / (var_u * var_v).sqrt();
    if pc > 1.0 {
        if pc > 1.0 + 1e-12 {
            return Err(Error::Divergent(pc));
        }
        return Ok(1.0);
    }
    if pc < -1.0 {
        if pc < -1.0 - 1e-12 {
            return Err(Error::Divergent(pc));
        }
        return Ok(-1.0);
    }
    Ok(pc)
}

/// MI, in bits, of a bivariate Gaussian with correlation `pc`:
/// `-0.5 * log2(1 - pc^2)`.
pub fn gaussian_mi(pc: f64) -> Result<f64> {
    if pc.abs() >= 1.0 {
        return Err(Error::Divergent(pc));
    }
    Ok((-0.5 * (1.0 - pc * pc).log2()).max(0.0))
}

/// Pair each MI estimate with the Pearson correlation computed on the same
/// joint sample. Per-pair correlation failures are flagged (pc = None), not
/// fatal. Output sorted by pair id.
pub fn compare_report(
    estimates: &[((usize, usize), MiEstimate)],
    ds: &Dataset,
) -> Result<Vec<PcMiPoint>> {
    let mut out = Vec::with_capacity(estimates.len());
    for ((i, j), est) in estimates {
        let js = joint_sample(ds, &[*i, *j])?;
        let pc = pearson(&js.columns[0], &js.columns[1]).ok();
        let gaussian_mi_bits = pc.and_then(|p| gaussian_mi(p).ok());
        out.push(PcMiPoint {
            pair: (*i, *j),
            pc,
            mi_bits: est.value_bits,
            gaussian_mi_bits,
            n_joint: est.n_joint,
        });
    }
    out.sort_by_key(|p| p.pair);
    Ok(out)
}
