//! Adaptive equal-population quantization and product-alphabet combination.

use crate::{Error, Result};

/// A variable reduced to `levels` discrete symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVector {
    pub levels: usize,
    pub symbols: Vec<u32>,
}

impl QuantizedVector {
    /// Wrap pre-quantized symbols, validating that each is below `levels`.
    pub fn from_symbols(symbols: Vec<u32>, levels: usize) -> Result<Self> {
        if levels == 0 || symbols.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &s in &symbols {
            if s as usize >= levels {
                return Err(Error::BadLevelCount { levels, n: s as usize });
            }
        }
        Ok(QuantizedVector { levels, symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Quantize `x` into `b` equally populated levels.
///
/// Entries are ranked by value, ties broken by original position, and rank `r`
/// maps to symbol `floor(r*b/N)`. Bin occupancies differ by at most one, and
/// the map depends only on ranks, so any strictly increasing transform of the
/// input yields the identical output.
pub fn equal_population_quantize(x: &[f64], b: usize) -> Result<QuantizedVector> {
    let n = x.len();
    if b == 0 || b > n {
        return Err(Error::BadLevelCount { levels: b, n });
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&i, &j| {
        x[i as usize].total_cmp(&x[j as usize]).then(i.cmp(&j))
    });
    let mut symbols = vec![0u32; n];
    for (rank, &idx) in order.iter().enumerate() {
        symbols[idx as usize] = (rank * b / n) as u32;
    }
    Ok(QuantizedVector { levels: b, symbols })
}

/// Combine two quantized variables into one over the product alphabet.
///
/// `symbol = s1 * b2 + s2`, `levels = b1 * b2`. The output is generally not
/// equally populated.
pub fn combine(q1: &QuantizedVector, q2: &QuantizedVector) -> Result<QuantizedVector> {
    if q1.len() != q2.len() {
        return Err(Error::LengthMismatch(q1.len(), q2.len()));
    }
    let levels = q1
        .levels
        .checked_mul(q2.levels)
        .filter(|&l| l <= u32::MAX as usize)
        .ok_or(Error::LevelOverflow(q1.levels, q2.levels))?;
    let b2 = q2.levels as u32;
    let symbols = q1
        .symbols
        .iter()
        .zip(&q2.symbols)
        .map(|(&s1, &s2)| s1 * b2 + s2)
        .collect();
    Ok(QuantizedVector { levels, symbols })
}
