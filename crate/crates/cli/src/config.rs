//! Run configuration, resolved from flags > environment > config file >
//! defaults before any computation starts. The resolved config is echoed into
//! every output file for provenance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use infonet_core::engine::BatchConfig;
use infonet_core::ingest::Orientation;

pub const ENV_PREFIX: &str = "INFONET_";

/// Fully resolved configuration for one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub orientation: Orientation,
    pub delimiter: char,
    pub missing_token: String,
    pub output_dir: PathBuf,
    pub f1: f64,
    pub f3: f64,
    pub t1: usize,
    pub include_full: bool,
    pub b_max: usize,
    pub tolerance_bits: f64,
    pub min_joint_samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub probe_pairs: usize,
    pub probe_triplets: usize,
    pub triplet_budget: usize,
    pub baseline_tuples: usize,
}

impl RunConfig {
    pub fn batch(&self) -> BatchConfig {
        BatchConfig {
            f1: self.f1,
            f3: self.f3,
            t1: self.t1,
            include_full: self.include_full,
            b_max: self.b_max,
            tolerance_bits: self.tolerance_bits,
            min_joint_samples: self.min_joint_samples,
            seed: self.seed,
            worker_count: self.workers,
            probe_pairs: self.probe_pairs,
            probe_triplets: self.probe_triplets,
            triplet_budget: self.triplet_budget,
        }
    }

    pub fn load_options(&self) -> infonet_core::ingest::LoadOptions {
        infonet_core::ingest::LoadOptions {
            delimiter: self.delimiter,
            missing_token: self.missing_token.clone(),
            orientation: self.orientation,
        }
    }
}

/// Unresolved overlay: every field optional. Flags, environment, and the
/// config file each produce one of these; later overlays win field by field.
#[derive(Debug, Default, Clone)]
pub struct Overlay {
    pub input: Option<PathBuf>,
    pub orientation: Option<Orientation>,
    pub delimiter: Option<char>,
    pub missing_token: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub f1: Option<f64>,
    pub f3: Option<f64>,
    pub t1: Option<usize>,
    pub include_full: Option<bool>,
    pub b_max: Option<usize>,
    pub tolerance_bits: Option<f64>,
    pub min_joint_samples: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub probe_pairs: Option<usize>,
    pub probe_triplets: Option<usize>,
    pub triplet_budget: Option<usize>,
    pub baseline_tuples: Option<usize>,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    match s {
        "rows" | "variables-as-rows" => Ok(Orientation::VariablesAsRows),
        "columns" | "variables-as-columns" => Ok(Orientation::VariablesAsColumns),
        other => Err(format!("unknown orientation {other:?} (rows|columns)")),
    }
}

impl Overlay {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let bad = |e: &dyn std::fmt::Display| format!("bad value for {key}: {e}");
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "orientation" => self.orientation = Some(parse_orientation(value)?),
            "delimiter" => {
                let mut chars = value.chars();
                let c = chars.next().ok_or("delimiter is empty".to_string())?;
                if chars.next().is_some() {
                    return Err("delimiter must be a single character".to_string());
                }
                self.delimiter = Some(c);
            }
            "missing_token" => self.missing_token = Some(value.to_string()),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "f1" => self.f1 = Some(value.parse().map_err(|e| bad(&e))?),
            "f3" => self.f3 = Some(value.parse().map_err(|e| bad(&e))?),
            "t1" => self.t1 = Some(value.parse().map_err(|e| bad(&e))?),
            "include_full" => self.include_full = Some(value.parse().map_err(|e| bad(&e))?),
            "b_max" => self.b_max = Some(value.parse().map_err(|e| bad(&e))?),
            "tolerance_bits" => self.tolerance_bits = Some(value.parse().map_err(|e| bad(&e))?),
            "min_joint_samples" => {
                self.min_joint_samples = Some(value.parse().map_err(|e| bad(&e))?)
            }
            "seed" => self.seed = Some(value.parse().map_err(|e| bad(&e))?),
            "workers" => self.workers = Some(value.parse().map_err(|e| bad(&e))?),
            "probe_pairs" => self.probe_pairs = Some(value.parse().map_err(|e| bad(&e))?),
            "probe_triplets" => self.probe_triplets = Some(value.parse().map_err(|e| bad(&e))?),
            "triplet_budget" => self.triplet_budget = Some(value.parse().map_err(|e| bad(&e))?),
            "baseline_tuples" => self.baseline_tuples = Some(value.parse().map_err(|e| bad(&e))?),
            other => return Err(format!("unknown configuration key {other:?}")),
        }
        Ok(())
    }

    /// key=value lines; blank lines and #-comments ignored.
    pub fn from_file(path: &Path) -> Result<Overlay, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut overlay = Overlay::default();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", ln + 1))?;
            overlay.set(key.trim(), value.trim())?;
        }
        Ok(overlay)
    }

    /// Read INFONET_* variables, lowercasing the suffix into config keys.
    pub fn from_env(vars: &BTreeMap<String, String>) -> Result<Overlay, String> {
        let mut overlay = Overlay::default();
        for (k, v) in vars {
            if let Some(suffix) = k.strip_prefix(ENV_PREFIX) {
                overlay.set(&suffix.to_lowercase(), v)?;
            }
        }
        Ok(overlay)
    }

    fn merged_over(self, base: Overlay) -> Overlay {
        Overlay {
            input: self.input.or(base.input),
            orientation: self.orientation.or(base.orientation),
            delimiter: self.delimiter.or(base.delimiter),
            missing_token: self.missing_token.or(base.missing_token),
            output_dir: self.output_dir.or(base.output_dir),
            f1: self.f1.or(base.f1),
            f3: self.f3.or(base.f3),
            t1: self.t1.or(base.t1),
            include_full: self.include_full.or(base.include_full),
            b_max: self.b_max.or(base.b_max),
            tolerance_bits: self.tolerance_bits.or(base.tolerance_bits),
            min_joint_samples: self.min_joint_samples.or(base.min_joint_samples),
            seed: self.seed.or(base.seed),
            workers: self.workers.or(base.workers),
            probe_pairs: self.probe_pairs.or(base.probe_pairs),
            probe_triplets: self.probe_triplets.or(base.probe_triplets),
            triplet_budget: self.triplet_budget.or(base.triplet_budget),
            baseline_tuples: self.baseline_tuples.or(base.baseline_tuples),
        }
    }
}

/// Resolve flags > environment > config file > defaults.
pub fn resolve(
    flags: Overlay,
    env: Overlay,
    file: Option<Overlay>,
) -> Result<RunConfig, String> {
    let defaults = BatchConfig::default();
    let merged = flags.merged_over(env.merged_over(file.unwrap_or_default()));
    let input = merged.input.ok_or("no input file given (--input)")?;
    Ok(RunConfig {
        input,
        orientation: merged.orientation.unwrap_or(Orientation::VariablesAsRows),
        delimiter: merged.delimiter.unwrap_or(','),
        missing_token: merged.missing_token.unwrap_or_else(|| "NA".to_string()),
        output_dir: merged.output_dir.unwrap_or_else(|| PathBuf::from(".")),
        f1: merged.f1.unwrap_or(defaults.f1),
        f3: merged.f3.unwrap_or(defaults.f3),
        t1: merged.t1.unwrap_or(defaults.t1),
        include_full: merged.include_full.unwrap_or(defaults.include_full),
        b_max: merged.b_max.unwrap_or(defaults.b_max),
        tolerance_bits: merged.tolerance_bits.unwrap_or(defaults.tolerance_bits),
        min_joint_samples: merged.min_joint_samples.unwrap_or(defaults.min_joint_samples),
        seed: merged.seed.unwrap_or(defaults.seed),
        workers: merged.workers.unwrap_or(defaults.worker_count),
        probe_pairs: merged.probe_pairs.unwrap_or(defaults.probe_pairs),
        probe_triplets: merged.probe_triplets.unwrap_or(defaults.probe_triplets),
        triplet_budget: merged.triplet_budget.unwrap_or(defaults.triplet_budget),
        baseline_tuples: merged.baseline_tuples.unwrap_or(10_000),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_env_file_defaults() {
        let mut file = Overlay::default();
        file.set("seed", "1").unwrap();
        file.set("b_max", "4").unwrap();
        file.set("t1", "5").unwrap();
        let mut env_vars = BTreeMap::new();
        env_vars.insert(format!("{ENV_PREFIX}SEED"), "2".to_string());
        env_vars.insert(format!("{ENV_PREFIX}B_MAX"), "6".to_string());
        let env = Overlay::from_env(&env_vars).unwrap();
        let mut flags = Overlay::default();
        flags.set("seed", "3").unwrap();
        flags.input = Some(PathBuf::from("x.csv"));
        let cfg = resolve(flags, env, Some(file)).unwrap();
        assert_eq!(cfg.seed, 3); // flag wins
        assert_eq!(cfg.b_max, 6); // env over file
        assert_eq!(cfg.t1, 5); // file over default
        assert_eq!(cfg.f1, 0.7); // default
    }

    #[test]
    fn unknown_key_rejected() {
        let mut o = Overlay::default();
        assert!(o.set("frobnicate", "1").is_err());
    }

    #[test]
    fn missing_input_is_an_error() {
        assert!(resolve(Overlay::default(), Overlay::default(), None).is_err());
    }
}
