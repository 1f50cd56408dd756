//! Command-line surface for the batch mutual-information pipeline.
//!
//! Subcommands: calibrate, pair, matrix, triplets, verify, compare-pc. All
//! outputs land in the output directory with the resolved configuration
//! embedded; re-running a command from an output's embedded config reproduces
//! it bit-exactly.

mod config;
mod output;

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use infonet_core::baseline::pearson;
use infonet_core::calibrate::{
    determine_bstar, estimate_pair_mi, select_level, triplet_bstar, CalibrationReport,
};
use infonet_core::engine;
use infonet_core::extrapolate::{extrapolate_pair, Variate};
use infonet_core::ingest::{joint_sample, load_dataset, Dataset};
use infonet_core::{seed, Error};

use config::{resolve, Overlay, RunConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CALIBRATION: u8 = 3;

#[derive(Parser)]
#[command(name = "infonet", about = "Bias-corrected MI / multi-information estimation", version)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonFlags {
    /// Input delimited-text matrix.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Optional key=value config file (flags and INFONET_* env override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// rows (variables as rows) or columns.
    #[arg(long, global = true)]
    orientation: Option<String>,
    #[arg(long, global = true)]
    delimiter: Option<char>,
    #[arg(long, global = true)]
    missing_token: Option<String>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Smallest subsample fraction.
    #[arg(long, global = true)]
    f1: Option<f64>,
    /// Largest subsample fraction.
    #[arg(long, global = true)]
    f3: Option<f64>,
    /// Trials at the smallest fraction.
    #[arg(long, global = true)]
    t1: Option<usize>,
    #[arg(long, global = true)]
    include_full: Option<bool>,
    #[arg(long, global = true)]
    b_max: Option<usize>,
    #[arg(long, global = true)]
    tolerance_bits: Option<f64>,
    /// Pairs with smaller joint samples are skipped.
    #[arg(long, global = true)]
    min_joint_samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 = all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Shuffled probe pairs for calibration.
    #[arg(long, global = true)]
    probes: Option<usize>,
    /// Shuffled probe triplets for triplet calibration.
    #[arg(long, global = true)]
    probe_triplets: Option<usize>,
    #[arg(long, global = true)]
    triplet_budget: Option<usize>,
    /// Random non-specific tuples for baseline distributions.
    #[arg(long, global = true)]
    baseline_tuples: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Determine the critical quantization level b* from shuffled data.
    Calibrate {
        /// Also calibrate the triplet-level b*.
        #[arg(long)]
        triplet: bool,
    },
    /// Full extrapolation report for a single pair of variables.
    Pair {
        var_a: String,
        var_b: String,
        /// Level cap for the final selection; defaults to b_max.
        #[arg(long)]
        b_star: Option<usize>,
    },
    /// All-pairs MI matrix.
    Matrix {
        /// Group file ("label: name1,name2,...") for a sorted rendering.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Skip shuffle calibration and use this b*.
        #[arg(long)]
        b_star: Option<usize>,
    },
    /// All triplet informations inside each group, with summaries.
    Triplets {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        b_star: Option<usize>,
        #[arg(long)]
        triplet_b_star: Option<usize>,
    },
    /// Shuffle and subsample-stability verification runs.
    Verify {
        #[arg(long, default_value_t = 1000)]
        shuffled_pairs: usize,
        /// Joint-sample fraction for the stability re-estimate.
        #[arg(long, default_value_t = 2.0 / 3.0)]
        fraction: f64,
        #[arg(long)]
        b_star: Option<usize>,
    },
    /// MI versus Pearson correlation table for every estimated pair.
    ComparePc {
        #[arg(long)]
        b_star: Option<usize>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::CalibrationFailed | Error::BelowMinimumProbes { .. } | Error::BadBMax => {
            EXIT_CALIBRATION
        }
        Error::UnknownVariable(_)
        | Error::SelfPair
        | Error::BadScheduleFractions { .. }
        | Error::BadTrialCount(_)
        | Error::BadGroupFile { .. } => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn flags_overlay(c: &CommonFlags) -> Result<Overlay, String> {
    let mut o = Overlay {
        input: c.input.clone(),
        delimiter: c.delimiter,
        missing_token: c.missing_token.clone(),
        output_dir: c.output_dir.clone(),
        f1: c.f1,
        f3: c.f3,
        t1: c.t1,
        include_full: c.include_full,
        b_max: c.b_max,
        tolerance_bits: c.tolerance_bits,
        min_joint_samples: c.min_joint_samples,
        seed: c.seed,
        workers: c.workers,
        probe_pairs: c.probes,
        probe_triplets: c.probe_triplets,
        triplet_budget: c.triplet_budget,
        baseline_tuples: c.baseline_tuples,
        ..Overlay::default()
    };
    if let Some(orient) = &c.orientation {
        o.set("orientation", orient)?;
    }
    Ok(o)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version output is a success path
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let flags = match flags_overlay(&cli.common) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let env_vars: BTreeMap<String, String> = std::env::vars().collect();
    let env = match Overlay::from_env(&env_vars) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let file = match &cli.common.config {
        Some(path) => match Overlay::from_file(path) {
            Ok(f) => Some(f),
            Err(e) => return fail(EXIT_USAGE, e),
        },
        None => None,
    };
    let run = match resolve(flags, env, file) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_USAGE, e),
    };

    let ds = match load_input(&run) {
        Ok(ds) => ds,
        Err(e) => return fail(exit_code_for(&e), e),
    };

    let result = match &cli.cmd {
        Cmd::Calibrate { triplet } => cmd_calibrate(&run, &ds, *triplet),
        Cmd::Pair { var_a, var_b, b_star } => cmd_pair(&run, &ds, var_a, var_b, *b_star),
        Cmd::Matrix { groups, b_star } => cmd_matrix(&run, &ds, groups.as_deref(), *b_star),
        Cmd::Triplets { groups, b_star, triplet_b_star } => {
            cmd_triplets(&run, &ds, groups, *b_star, *triplet_b_star)
        }
        Cmd::Verify { shuffled_pairs, fraction, b_star } => {
            cmd_verify(&run, &ds, *shuffled_pairs, *fraction, *b_star)
        }
        Cmd::ComparePc { b_star } => cmd_compare_pc(&run, &ds, *b_star),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(exit_code_for(&e), e),
    }
}

fn load_input(run: &RunConfig) -> Result<Dataset, Error> {
    let file = std::fs::File::open(&run.input)?;
    load_dataset(BufReader::new(file), &run.load_options())
}

/// Use the override, or run the pairwise shuffle calibration.
fn pair_calibration(
    run: &RunConfig,
    ds: &Dataset,
    override_b: Option<usize>,
) -> Result<CalibrationReport, Error> {
    if let Some(b) = override_b {
        return Ok(CalibrationReport {
            per_level: BTreeMap::new(),
            b_star: Some(b),
            tolerance_bits: run.tolerance_bits,
        });
    }
    let cfg = run.batch();
    let sched = cfg.schedule()?;
    determine_bstar(ds, run.b_max, run.probe_pairs, &sched, run.seed, run.tolerance_bits)
}

fn triplet_calibration(
    run: &RunConfig,
    ds: &Dataset,
    override_b: Option<usize>,
) -> Result<CalibrationReport, Error> {
    if let Some(b) = override_b {
        return Ok(CalibrationReport {
            per_level: BTreeMap::new(),
            b_star: Some(b),
            tolerance_bits: run.tolerance_bits,
        });
    }
    let cfg = run.batch();
    let sched = cfg.schedule()?;
    triplet_bstar(ds, run.b_max, run.probe_triplets, &sched, run.seed, run.tolerance_bits)
}

#[derive(Serialize)]
struct CalibratePayload {
    pairwise: CalibrationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    triplet: Option<CalibrationReport>,
}

fn cmd_calibrate(run: &RunConfig, ds: &Dataset, with_triplet: bool) -> Result<(), Error> {
    let cfg = run.batch();
    let pairwise = cfg.with_pool(|| pair_calibration(run, ds, None))?;
    let triplet =
        if with_triplet { Some(cfg.with_pool(|| triplet_calibration(run, ds, None))?) } else { None };

    let mut text = output::config_header(run);
    text.push_str("# pairwise calibration\n");
    text.push_str(&pairwise.render());
    if let Some(t) = &triplet {
        text.push_str("# triplet calibration\n");
        text.push_str(&t.render());
    }
    output::write_text(&run.output_dir, "calibration.txt", &text)?;
    output::write_json(
        &run.output_dir,
        "calibration.json",
        run,
        &CalibratePayload { pairwise: pairwise.clone(), triplet },
    )?;
    // undefined b* is a calibration failure after reports are written
    pairwise.b_star()?;
    Ok(())
}

#[derive(Serialize)]
struct PairPayload {
    var_a: String,
    var_b: String,
    n_joint: usize,
    pearson: Option<f64>,
    estimate: infonet_core::calibrate::MiEstimate,
    /// Per-level curves including levels beyond the selection cap, for
    /// plotting intercept vs b.
    per_b_full: BTreeMap<usize, infonet_core::extrapolate::ExtrapolationResult>,
}

fn cmd_pair(
    run: &RunConfig,
    ds: &Dataset,
    var_a: &str,
    var_b: &str,
    b_star: Option<usize>,
) -> Result<(), Error> {
    let i = ds.index_of(var_a).ok_or_else(|| Error::UnknownVariable(var_a.to_string()))?;
    let j = ds.index_of(var_b).ok_or_else(|| Error::UnknownVariable(var_b.to_string()))?;
    if i == j {
        return Err(Error::SelfPair);
    }
    let cfg = run.batch();
    let sched = cfg.schedule()?;
    let js = joint_sample(ds, &[i, j])?;
    let cap = b_star.unwrap_or(run.b_max).min(run.b_max);

    // every level up to b_max for the intercept-vs-b curve, then select under
    // the cap
    let call_seed = seed::derive(run.seed, &[i as u64, j as u64]);
    let mut per_b_full = BTreeMap::new();
    for b in 2..=run.b_max {
        if sched.smallest_subsample(js.len()) < b {
            break;
        }
        let r = extrapolate_pair(
            &Variate::Continuous { values: &js.columns[0], levels: b },
            &Variate::Continuous { values: &js.columns[1], levels: b },
            &sched,
            seed::derive(call_seed, &[b as u64]),
        )?;
        per_b_full.insert(b, r);
    }
    let max_avail = *per_b_full.keys().max().ok_or(Error::SampleTooSmall {
        n: js.len(),
        smallest: sched.smallest_subsample(js.len()),
        needed: 2,
    })?;
    let selectable: BTreeMap<usize, _> = per_b_full
        .iter()
        .filter(|(&b, _)| b <= cap)
        .map(|(&b, r)| (b, r.clone()))
        .collect();
    let estimate = select_level(&selectable, cap.min(max_avail), js.len())?;
    let payload = PairPayload {
        var_a: var_a.to_string(),
        var_b: var_b.to_string(),
        n_joint: js.len(),
        pearson: pearson(&js.columns[0], &js.columns[1]).ok(),
        estimate,
        per_b_full,
    };
    output::write_json(&run.output_dir, &format!("pair_{var_a}_{var_b}.json"), run, &payload)?;
    Ok(())
}

fn parse_groups(path: &Path) -> Result<Vec<(String, Vec<String>)>, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, members) = line.split_once(':').ok_or(Error::BadGroupFile {
            line: ln + 1,
            reason: "expected \"label: name1,name2,...\"".to_string(),
        })?;
        let names: Vec<String> =
            members.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if names.is_empty() {
            return Err(Error::BadGroupFile { line: ln + 1, reason: "empty member list".into() });
        }
        out.push((label.trim().to_string(), names));
    }
    Ok(out)
}

fn matrix_csv(run: &RunConfig, m: &engine::MiMatrix) -> String {
    let mut text = output::config_header(run);
    text.push_str("name");
    for n in &m.names {
        text.push(',');
        text.push_str(n);
    }
    text.push('\n');
    for i in 0..m.n_vars() {
        text.push_str(&m.names[i]);
        for j in 0..m.n_vars() {
            text.push(',');
            if let Some(v) = m.value(i, j) {
                text.push_str(&v.to_string());
            }
        }
        text.push('\n');
    }
    text
}

#[derive(Serialize)]
struct MatrixSidecar<'a> {
    b_star: usize,
    calibration: &'a CalibrationReport,
    pairs: Vec<PairMeta>,
    skipped: &'a [((usize, usize), engine::SkipReason)],
}

#[derive(Serialize)]
struct PairMeta {
    i: usize,
    j: usize,
    value_bits: f64,
    chosen_b: usize,
    error_bar_bits: f64,
    n_joint: usize,
}

fn write_matrix_outputs(
    run: &RunConfig,
    m: &engine::MiMatrix,
    calib: &CalibrationReport,
) -> Result<(), Error> {
    output::write_text(&run.output_dir, "matrix.csv", &matrix_csv(run, m))?;
    let sidecar = MatrixSidecar {
        b_star: calib.b_star()?,
        calibration: calib,
        pairs: m
            .pairs
            .iter()
            .map(|(&(i, j), e)| PairMeta {
                i,
                j,
                value_bits: e.value_bits,
                chosen_b: e.chosen_b,
                error_bar_bits: e.error_bar_bits,
                n_joint: e.n_joint,
            })
            .collect(),
        skipped: &m.skipped,
    };
    output::write_json(&run.output_dir, "matrix.json", run, &sidecar)?;
    Ok(())
}

fn cmd_matrix(
    run: &RunConfig,
    ds: &Dataset,
    groups: Option<&Path>,
    b_star: Option<usize>,
) -> Result<(), Error> {
    let cfg = run.batch();
    let calib = cfg.with_pool(|| pair_calibration(run, ds, b_star))?;
    let m = engine::estimate_all_pairs(ds, &cfg, &calib)?;
    write_matrix_outputs(run, &m, &calib)?;
    if let Some(path) = groups {
        let labels = parse_groups(path)?;
        let sorted = engine::sorted_matrix(&m, &labels)?;
        let mut text = output::config_header(run);
        text.push_str(&format!("# threshold_bits: {}\n", sorted.threshold_bits));
        text.push_str("name,group");
        for &i in &sorted.order {
            text.push(',');
            text.push_str(&m.names[i]);
        }
        text.push('\n');
        for (pos, &i) in sorted.order.iter().enumerate() {
            text.push_str(&format!("{},{}", m.names[i], sorted.group_of[pos]));
            for v in &sorted.rendered[pos] {
                text.push(',');
                text.push_str(&v.to_string());
            }
            text.push('\n');
        }
        output::write_text(&run.output_dir, "matrix_sorted.csv", &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TripletsPayload {
    pairwise_b_star: usize,
    triplet_b_star: usize,
    groups: Vec<GroupPayload>,
    baseline_pair_values: Vec<f64>,
    baseline_triplet_values: Vec<f64>,
}

#[derive(Serialize)]
struct GroupPayload {
    label: String,
    members: Vec<String>,
    triplets: Vec<engine::GroupTriplet>,
    summary: engine::GroupSummary,
}

fn cmd_triplets(
    run: &RunConfig,
    ds: &Dataset,
    groups_path: &Path,
    b_star: Option<usize>,
    triplet_b_star: Option<usize>,
) -> Result<(), Error> {
    let labels = parse_groups(groups_path)?;
    let cfg = run.batch();
    let calib_pair = cfg.with_pool(|| pair_calibration(run, ds, b_star))?;
    let calib_tri = cfg.with_pool(|| triplet_calibration(run, ds, triplet_b_star))?;
    let (baseline_pairs, baseline_triplets) =
        engine::baseline_values(ds, &cfg, &calib_pair, &calib_tri, run.baseline_tuples)?;

    let mut groups = Vec::new();
    for (label, names) in &labels {
        let members: Vec<usize> = names
            .iter()
            .map(|n| ds.index_of(n).ok_or_else(|| Error::UnknownVariable(n.clone())))
            .collect::<Result<_, _>>()?;
        let triplets = engine::estimate_group_triplets(ds, &members, &cfg, &calib_tri)?;
        let triplet_values: Vec<f64> = triplets.iter().map(|t| t.estimate.mean_bits).collect();
        // within-group pair values through the same pipeline
        let sched = cfg.schedule()?;
        let b_pair = calib_pair.b_star()?;
        let mut pair_values = Vec::new();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let js = joint_sample(ds, &[i, j])?;
                if js.len() < cfg.min_joint_samples {
                    continue;
                }
                if let Ok(est) = estimate_pair_mi(
                    &js.columns[0],
                    &js.columns[1],
                    b_pair,
                    &sched,
                    seed::derive(cfg.seed, &[i as u64, j as u64]),
                ) {
                    pair_values.push(est.value_bits);
                }
            }
        }
        let summary = engine::group_summary(
            label,
            &members,
            &triplet_values,
            &pair_values,
            &baseline_triplets,
            &baseline_pairs,
        )?;
        groups.push(GroupPayload { label: label.clone(), members: names.clone(), triplets, summary });
    }
    let payload = TripletsPayload {
        pairwise_b_star: calib_pair.b_star()?,
        triplet_b_star: calib_tri.b_star()?,
        groups,
        baseline_pair_values: baseline_pairs,
        baseline_triplet_values: baseline_triplets,
    };
    output::write_json(&run.output_dir, "triplets.json", run, &payload)?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyPayload {
    shuffled: engine::ShuffleSummary,
    stability: engine::StabilitySummary,
    stability_fraction: f64,
    /// Difference histogram: (bin lower edge, count), 0.02-bit bins.
    difference_histogram: Vec<(f64, usize)>,
}

fn histogram(values: &[f64], bin: f64) -> Vec<(f64, usize)> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry((v / bin).floor() as i64).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k as f64 * bin, c)).collect()
}

fn cmd_verify(
    run: &RunConfig,
    ds: &Dataset,
    shuffled_pairs: usize,
    fraction: f64,
    b_star: Option<usize>,
) -> Result<(), Error> {
    let cfg = run.batch();
    let calib = cfg.with_pool(|| pair_calibration(run, ds, b_star))?;
    let shuffled = engine::verify_shuffled(ds, &cfg, &calib, shuffled_pairs)?;
    let m = engine::estimate_all_pairs(ds, &cfg, &calib)?;
    let stability = engine::verify_subsample_stability(ds, &cfg, &calib, &m, fraction)?;
    let payload = VerifyPayload {
        difference_histogram: histogram(&stability.differences, 0.02),
        shuffled,
        stability,
        stability_fraction: fraction,
    };
    output::write_json(&run.output_dir, "verify.json", run, &payload)?;
    Ok(())
}

fn cmd_compare_pc(run: &RunConfig, ds: &Dataset, b_star: Option<usize>) -> Result<(), Error> {
    let cfg = run.batch();
    let calib = cfg.with_pool(|| pair_calibration(run, ds, b_star))?;
    let m = engine::estimate_all_pairs(ds, &cfg, &calib)?;
    let points = engine::compare_pc(&m, ds)?;
    let mut text = output::config_header(run);
    text.push_str("var_a,var_b,pc,mi_bits,gaussian_mi_bits,n_joint\n");
    for p in &points {
        let pc = p.pc.map(|v| v.to_string()).unwrap_or_default();
        let gmi = p.gaussian_mi_bits.map(|v| v.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.names[p.pair.0], m.names[p.pair.1], pc, p.mi_bits, gmi, p.n_joint
        ));
    }
    output::write_text(&run.output_dir, "compare_pc.csv", &text)?;
    Ok(())
}
