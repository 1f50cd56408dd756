//! Loading variable-by-observation matrices with missing values, extraction of
//! jointly complete samples, and deterministic column shuffling.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Whether variables run along rows or columns of the delimited file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Each row is one variable; the first cell of a row is its name.
    VariablesAsRows,
    /// Each column is one variable; the header row carries the names.
    VariablesAsColumns,
}

/// Parsing options for [`load_dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: char,
    pub missing_token: String,
    pub orientation: Orientation,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: ',',
            missing_token: "NA".to_string(),
            orientation: Orientation::VariablesAsRows,
        }
    }
}

/// A named variables-by-observations matrix with an explicit missing-value mask.
///
/// Immutable after load; shared concurrent reads are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    /// n_vars rows of n_obs values. Entries where the mask is false are
    /// unspecified and must never be read.
    values: Vec<Vec<f64>>,
    present: Vec<Vec<bool>>,
}

impl Dataset {
    /// Build a dataset from parts, checking the shape invariants.
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>, present: Vec<Vec<bool>>) -> Result<Self> {
        if names.is_empty() || values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_obs = values[0].len();
        if n_obs == 0 {
            return Err(Error::EmptyDataset);
        }
        if names.len() != values.len() || values.len() != present.len() {
            return Err(Error::LengthMismatch(names.len(), values.len()));
        }
        for (row, (v, p)) in values.iter().zip(&present).enumerate() {
            if v.len() != n_obs || p.len() != n_obs {
                return Err(Error::RaggedRow { row, got: v.len(), expected: n_obs });
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
        }
        Ok(Dataset { names, values, present })
    }

    /// Fully observed dataset (all-true mask).
    pub fn complete(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let present = values.iter().map(|v| vec![true; v.len()]).collect();
        Dataset::new(names, values, present)
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_obs(&self) -> usize {
        self.values[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_present(&self, var: usize, obs: usize) -> bool {
        self.present[var][obs]
    }

    /// Raw value; only meaningful where the mask is true.
    pub fn value(&self, var: usize, obs: usize) -> f64 {
        self.values[var][obs]
    }
}

/// Ordered observation positions where every requested variable is present,
/// with the extracted value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    /// Strictly increasing observation positions.
    pub indices: Vec<usize>,
    /// One column per requested variable, each of length `indices.len()`.
    pub columns: Vec<Vec<f64>>,
}

impl JointSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Parse a delimited text stream into a [`Dataset`].
///
/// The missing token (and a blank cell) marks an unobserved entry. Any other
/// cell must parse as a finite number; non-finite spellings are rejected
/// rather than silently treated as missing.
pub fn load_dataset<R: BufRead>(source: R, options: &LoadOptions) -> Result<Dataset> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for line in source.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split(options.delimiter).map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let cells: Vec<Vec<String>> = match options.orientation {
        Orientation::VariablesAsRows => rows,
        Orientation::VariablesAsColumns => {
            let width = rows[0].len();
            for (row, r) in rows.iter().enumerate() {
                if r.len() != width {
                    return Err(Error::RaggedRow { row, got: r.len(), expected: width });
                }
            }
            (0..width).map(|c| rows.iter().map(|r| r[c].clone()).collect()).collect()
        }
    };

    // First cell of each (logical) row is the variable name.
    let mut names = Vec::with_capacity(cells.len());
    let mut values = Vec::with_capacity(cells.len());
    let mut present = Vec::with_capacity(cells.len());
    let n_obs = cells[0].len().saturating_sub(1);
    if n_obs == 0 {
        return Err(Error::EmptyDataset);
    }
    for (row, r) in cells.iter().enumerate() {
        if r.len() != n_obs + 1 {
            return Err(Error::RaggedRow { row, got: r.len(), expected: n_obs + 1 });
        }
        names.push(r[0].clone());
        let mut vals = Vec::with_capacity(n_obs);
        let mut mask = Vec::with_capacity(n_obs);
        for (col, cell) in r[1..].iter().enumerate() {
            if cell.is_empty() || *cell == options.missing_token {
                vals.push(0.0);
                mask.push(false);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::BadCell { row, col, value: cell.clone() })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col, value: cell.clone() });
                }
                vals.push(v);
                mask.push(true);
            }
        }
        values.push(vals);
        present.push(mask);
    }
    Dataset::new(names, values, present)
}

/// Round-trip writer for [`load_dataset`] output (variables as rows).
pub fn write_dataset<W: Write>(ds: &Dataset, sink: &mut W, options: &LoadOptions) -> Result<()> {
    let d = options.delimiter;
    for var in 0..ds.n_vars() {
        write!(sink, "{}", ds.names()[var])?;
        for obs in 0..ds.n_obs() {
            if ds.is_present(var, obs) {
                write!(sink, "{}{}", d, ds.value(var, obs))?;
            } else {
                write!(sink, "{}{}", d, options.missing_token)?;
            }
        }
        writeln!(sink)?;
    }
    Ok(())
}

/// Extract the jointly complete sample for the given variables, columns in
/// `vars` order.
pub fn joint_sample(ds: &Dataset, vars: &[usize]) -> Result<JointSample> {
    if vars.is_empty() {
        return Err(Error::EmptyInput);
    }
    for &v in vars {
        if v >= ds.n_vars() {
            return Err(Error::IndexOutOfRange(v));
        }
    }
    let indices: Vec<usize> =
        (0..ds.n_obs()).filter(|&t| vars.iter().all(|&v| ds.is_present(v, t))).collect();
    let columns = vars
        .iter()
        .map(|&v| indices.iter().map(|&t| ds.value(v, t)).collect())
        .collect();
    Ok(JointSample { indices, columns })
}

/// Return a copy of `js` with one column permuted uniformly at random.
///
/// The shuffled column keeps its marginal multiset exactly; all other columns
/// are untouched.
pub fn shuffle_column<R: Rng>(js: &JointSample, which: usize, rng: &mut R) -> JointSample {
    assert!(which < js.columns.len(), "column index out of range");
    let mut out = js.clone();
    // Fisher-Yates
    let col = &mut out.columns[which];
    for i in (1..col.len()).rev() {
        let j = rng.gen_range(0..=i);
        col.swap(i, j);
    }
    out
}
