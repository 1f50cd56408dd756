//! Naive (plug-in) entropy and mutual information on contingency counts, and
//! exact multi-information on explicit joint tables.
//!
//! All logarithms are base 2; results are in bits. Cell contributions are
//! accumulated with compensated summation since joint tables can reach
//! hundreds of cells with tiny probabilities.

use crate::quantize::QuantizedVector;
use crate::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Joint counts of two quantized variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// counts[i][j] over levels of A (rows) and B (cols).
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
}

impl ContingencyTable {
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let cols = self.counts.first().map_or(0, |r| r.len());
        (0..cols).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Count joint symbol occurrences of two equal-length quantized vectors.
pub fn tabulate(qa: &QuantizedVector, qb: &QuantizedVector) -> Result<ContingencyTable> {
    if qa.len() != qb.len() {
        return Err(Error::LengthMismatch(qa.len(), qb.len()));
    }
    if qa.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![vec![0u64; qb.levels]; qa.levels];
    for (&a, &b) in qa.symbols.iter().zip(&qb.symbols) {
        counts[a as usize][b as usize] += 1;
    }
    Ok(ContingencyTable { counts, total: qa.len() as u64 })
}

/// Plug-in mutual information of a contingency table, in bits.
///
/// Tiny negative rounding residue (above -1e-12) is clamped to zero; genuine
/// negatives indicate a bug upstream and are returned as-is.
pub fn plugin_mi(t: &ContingencyTable) -> f64 {
    let n = t.total as f64;
    let rows = t.row_sums();
    let cols = t.col_sums();
    let mut acc = CompensatedSum::default();
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            let pi = rows[i] as f64 / n;
            let pj = cols[j] as f64 / n;
            acc.add(p * (p / (pi * pj)).log2());
        }
    }
    let v = acc.value();
    if v < 0.0 && v > -1e-12 {
        0.0
    } else {
        v
    }
}

/// Plug-in entropy of a count vector, in bits.
pub fn plugin_entropy(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let n = total as f64;
    let mut acc = CompensatedSum::default();
    for &c in counts {
        if c == 0 {
            continue;
        }
        let p = c as f64 / n;
        acc.add(-p * p.log2());
    }
    Ok(acc.value().max(0.0))
}

/// An explicit joint probability table over `dims.len()` variables.
///
/// Probabilities are stored row-major with the first variable slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub dims: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointTable {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let cells: usize = dims.iter().product();
        if dims.is_empty() || cells == 0 || probs.len() != cells {
            return Err(Error::EmptyInput);
        }
        let mut acc = CompensatedSum::default();
        for &p in &probs {
            acc.add(p);
        }
        let total = acc.value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        Ok(JointTable { dims, probs })
    }

    pub fn n_vars(&self) -> usize {
        self.dims.len()
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }

    /// Marginal table over `vars`, in the given order.
    pub fn marginalize(&self, vars: &[usize]) -> Result<JointTable> {
        for &v in vars {
            if v >= self.dims.len() {
                return Err(Error::IndexOutOfRange(v));
            }
        }
        let dims: Vec<usize> = vars.iter().map(|&v| self.dims[v]).collect();
        let cells: usize = dims.iter().product();
        let mut probs = vec![0.0; cells];
        for (flat, &p) in self.probs.iter().enumerate() {
            let idx = self.unravel(flat);
            let mut out = 0;
            for (k, &v) in vars.iter().enumerate() {
                out = out * dims[k] + idx[v];
            }
            probs[out] += p;
        }
        // marginal sums carry the same normalization; bypass re-validation drift
        Ok(JointTable { dims, probs })
    }

    /// Shannon entropy of the whole table, in bits.
    pub fn entropy(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &p in &self.probs {
            if p > 0.0 {
                acc.add(-p * p.log2());
            }
        }
        acc.value().max(0.0)
    }
}

/// Exact multi-information of the joint: sum of marginal entropies minus the
/// joint entropy.
pub fn exact_multiinformation(jt: &JointTable) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in 0..jt.n_vars() {
        acc.add(jt.marginalize(&[v]).expect("valid index").entropy());
    }
    acc.add(-jt.entropy());
    acc.value().max(0.0)
}

/// Exact mutual information between the first variable of `jt` and the joint
/// of the remaining variables.
fn mi_first_vs_rest(jt: &JointTable) -> f64 {
    let rest: Vec<usize> = (1..jt.n_vars()).collect();
    let h_first = jt.marginalize(&[0]).expect("valid").entropy();
    let h_rest = jt.marginalize(&rest).expect("valid").entropy();
    (h_first + h_rest - jt.entropy()).max(0.0)
}

/// The multi-information chain rule evaluated exactly on `jt` under a variable
/// ordering: returns the r-1 terms I(v_{k}; v_{k+1}, ..., v_r), whose sum
/// equals the multi-information.
pub fn exact_chain_terms(jt: &JointTable, order: &[usize]) -> Result<Vec<f64>> {
    let r = jt.n_vars();
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
    let mut terms = Vec::with_capacity(r - 1);
    for k in 0..r - 1 {
        let vars: Vec<usize> = order[k..].to_vec();
        let sub = jt.marginalize(&vars)?;
        terms.push(mi_first_vs_rest(&sub));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q(levels: usize, symbols: Vec<u32>) -> QuantizedVector {
        QuantizedVector { levels, symbols }
    }

    #[test]
    fn tabulate_enumerates_cells() {
        let t = tabulate(&q(2, vec![0, 0, 1, 1]), &q(2, vec![0, 1, 0, 1])).unwrap();
        assert_eq!(t.counts, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(t.total, 4);
    }

    #[test]
    fn tabulate_diagonal() {
        let v = q(2, vec![0, 1, 0, 1]);
        let t = tabulate(&v, &v).unwrap();
        assert_eq!(t.counts, vec![vec![2, 0], vec![0, 2]]);
    }

    #[test]
    fn tabulate_empty_rejected() {
        let e = q(2, vec![]);
        assert!(tabulate(&e, &e).is_err());
    }

    #[test]
    fn mi_independent_is_zero() {
        let t = ContingencyTable { counts: vec![vec![25, 25], vec![25, 25]], total: 100 };
        assert_eq!(plugin_mi(&t), 0.0);
    }

    #[test]
    fn mi_deterministic_is_one_bit() {
        let t = ContingencyTable { counts: vec![vec![50, 0], vec![0, 50]], total: 100 };
        assert_abs_diff_eq!(plugin_mi(&t), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mi_mixed_table() {
        // direct evaluation of the plug-in sum on [[40,10],[10,40]]
        let t = ContingencyTable { counts: vec![vec![40, 10], vec![10, 40]], total: 100 };
        let expected = 2.0 * (0.4 * (0.4f64 / 0.25).log2() + 0.1 * (0.1f64 / 0.25).log2());
        assert_abs_diff_eq!(plugin_mi(&t), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(plugin_mi(&t), 0.2780719051126377, epsilon = 1e-10);
    }

    #[test]
    fn entropy_uniform_binary() {
        assert_abs_diff_eq!(plugin_entropy(&[50, 50]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_degenerate() {
        assert_eq!(plugin_entropy(&[100]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_skewed() {
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert_abs_diff_eq!(plugin_entropy(&[75, 25]).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(plugin_entropy(&[75, 25]).unwrap(), 0.8112781244591328, epsilon = 1e-10);
    }

    #[test]
    fn entropy_all_zero_rejected() {
        assert!(plugin_entropy(&[0, 0]).is_err());
    }

    fn independent_bits() -> JointTable {
        JointTable::new(vec![2, 2, 2], vec![0.125; 8]).unwrap()
    }

    fn xor_triple() -> JointTable {
        // y_k = y_i XOR y_j with y_i, y_j independent uniform bits
        let mut probs = vec![0.0; 8];
        for i in 0..2 {
            for j in 0..2 {
                let k = i ^ j;
                probs[i * 4 + j * 2 + k] = 0.25;
            }
        }
        JointTable::new(vec![2, 2, 2], probs).unwrap()
    }

    fn copied_bits() -> JointTable {
        let mut probs = vec![0.0; 8];
        probs[0] = 0.5;
        probs[7] = 0.5;
        JointTable::new(vec![2, 2, 2], probs).unwrap()
    }

    #[test]
    fn multiinformation_product_is_zero() {
        assert_abs_diff_eq!(exact_multiinformation(&independent_bits()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn multiinformation_xor_is_one_bit_with_zero_pairs() {
        let jt = xor_triple();
        assert_abs_diff_eq!(exact_multiinformation(&jt), 1.0, epsilon = 1e-12);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let pair = jt.marginalize(&[a, b]).unwrap();
            assert_abs_diff_eq!(exact_multiinformation(&pair), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn multiinformation_copies_is_two_bits() {
        assert_abs_diff_eq!(exact_multiinformation(&copied_bits()), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn chain_terms_xor_sum_to_one() {
        let jt = xor_triple();
        for order in [[0, 1, 2], [1, 2, 0], [2, 0, 1]] {
            let terms = exact_chain_terms(&jt, &order).unwrap();
            assert_eq!(terms.len(), 2);
            // first term carries the whole bit, the pair term is zero
            assert_abs_diff_eq!(terms[0], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(terms[1], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn chain_terms_product_all_zero() {
        let terms = exact_chain_terms(&independent_bits(), &[0, 1, 2]).unwrap();
        assert!(terms.iter().all(|&t| t.abs() < 1e-12));
    }

    #[test]
    fn chain_terms_copies() {
        let terms = exact_chain_terms(&copied_bits(), &[0, 1, 2]).unwrap();
        assert_abs_diff_eq!(terms[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(terms[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn chain_terms_invalid_permutation() {
        assert!(exact_chain_terms(&copied_bits(), &[0, 1, 1]).is_err());
        assert!(exact_chain_terms(&copied_bits(), &[0, 1]).is_err());
    }

    #[test]
    fn joint_table_requires_normalization() {
        assert!(JointTable::new(vec![2], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn mi_transpose_and_permutation_invariance() {
        let t = ContingencyTable {
            counts: vec![vec![13, 7, 4], vec![2, 31, 9]],
            total: 66,
        };
        let transposed = ContingencyTable {
            counts: (0..3).map(|j| (0..2).map(|i| t.counts[i][j]).collect()).collect(),
            total: 66,
        };
        assert_eq!(plugin_mi(&t), plugin_mi(&transposed));

        let row_swapped = ContingencyTable {
            counts: vec![t.counts[1].clone(), t.counts[0].clone()],
            total: 66,
        };
        assert_abs_diff_eq!(plugin_mi(&t), plugin_mi(&row_swapped), epsilon = 1e-14);
    }

    #[test]
    fn mi_equals_entropy_combination() {
        let qa = q(3, vec![0, 1, 2, 0, 1, 2, 1, 1, 0, 2]);
        let qb = q(2, vec![0, 1, 1, 0, 0, 1, 1, 0, 0, 1]);
        let t = tabulate(&qa, &qb).unwrap();
        let flat: Vec<u64> = t.counts.iter().flatten().copied().collect();
        let lhs = plugin_mi(&t);
        let rhs = plugin_entropy(&t.row_sums()).unwrap() + plugin_entropy(&t.col_sums()).unwrap()
            - plugin_entropy(&flat).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    /// Coarsening b-level symbols into b' groups (b' dividing b) never raises
    /// the plug-in MI.
    #[test]
    fn nested_coarsening_never_increases_mi() {
        let mut rng = crate::seed::rng_from(11);
        use rand::Rng;
        let n = 300;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + 0.3 * rng.gen::<f64>()).collect();
        for (b, bp) in [(4, 2), (6, 3), (6, 2), (8, 4)] {
            let qa = crate::quantize::equal_population_quantize(&x, b).unwrap();
            let qb = crate::quantize::equal_population_quantize(&y, b).unwrap();
            let fine = plugin_mi(&tabulate(&qa, &qb).unwrap());
            let coarsen = |qv: &QuantizedVector| QuantizedVector {
                levels: bp,
                symbols: qv.symbols.iter().map(|&s| s * bp as u32 / b as u32).collect(),
            };
            let coarse = plugin_mi(&tabulate(&coarsen(&qa), &coarsen(&qb)).unwrap());
            assert!(
                coarse <= fine + 1e-12,
                "coarse {coarse} > fine {fine} for b={b}, b'={bp}"
            );
        }
    }
}
