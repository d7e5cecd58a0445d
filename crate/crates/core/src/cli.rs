//! The `fastds` command line.
//!
//! Exit codes: 0 success, 1 output failure, 2 input error, 3 non-convergence
//! under `--strict`, 64 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::aggregate::{AggregationConfig, Algorithm};
use crate::bench::{self, speedup_report, sweep_annotators, SimulationConfig, SweepConfig, SweepReport};
use crate::dataset::{Dataset, Format, GoldLabels};
use crate::error::{Error, Result};
use crate::multilabel::{aggregate_multilabel, MultiDataset};
use crate::online::OnlineState;
use crate::plot::plot_sweep;
use crate::report::{to_json_pretty, write_atomic, AggregateReport, Preprocessing, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable controlling log verbosity (`error`, `warn`, `info`,
/// `debug`, `trace`).
pub const LOG_ENV: &str = "FASTDS_LOG";

#[derive(Debug, Parser)]
#[command(name = "fastds", version, about = "Aggregate crowdsourced votes into consensus labels")]
pub struct Cli {
    /// Worker threads for per-question kernels. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate a votes file with one algorithm and write a JSON report.
    Aggregate(AggregateArgs),
    /// Write a planted-truth votes file and its gold labels.
    Simulate(SimulateArgs),
    /// Replay a votes file as a stream on top of an initial batch solution.
    Online(OnlineArgs),
    /// Sweep the number of annotators per question across algorithms.
    Sweep(SweepArgs),
    /// Aggregate a multi-label votes file into per-option decisions.
    Multilabel(MultilabelArgs),
    /// Draw SVG panels from a sweep CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmArgs {
    /// Marginal-change tolerance for convergence.
    #[arg(long = "tol", default_value_t = 1e-4)]
    pub tol: f64,
    /// Hybrid switch threshold.
    #[arg(long, default_value_t = 0.005)]
    pub gamma: f64,
    #[arg(long = "max-iters", default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Additive smoothing on confusion counts.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

impl EmArgs {
    fn config(&self, algorithm: Algorithm) -> AggregationConfig {
        AggregationConfig {
            algorithm,
            marginal_tolerance: self.tol,
            hybrid_gamma: self.gamma,
            max_iterations: self.max_iters,
            seed: self.seed,
            smoothing: self.alpha,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub algorithm: Algorithm,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
    /// Drop questions with fewer votes than this.
    #[arg(long = "min-annotators")]
    pub min_annotators: Option<usize>,
    /// Keep this many randomly chosen votes per question.
    #[arg(long)]
    pub subsample: Option<usize>,
    /// Remove this option (by its id in the input file) before aggregating.
    #[arg(long = "drop-class")]
    pub drop_class: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exit with status 3 if the algorithm does not converge.
    #[arg(long)]
    pub strict: bool,
    /// Record wall time in the report (makes reruns differ).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub questions: usize,
    #[arg(long)]
    pub annotators: usize,
    #[arg(long)]
    pub options: usize,
    #[arg(long = "votes-per-question")]
    pub votes_per_question: usize,
    /// Probability that an annotator answers correctly.
    #[arg(long)]
    pub accuracy: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "gold-out")]
    pub gold_out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OnlineArgs {
    /// Votes CSV in arrival order.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of leading questions solved in batch before streaming.
    #[arg(long)]
    pub initial: usize,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[command(flatten)]
    pub em: EmArgs,
    /// JSON-lines output; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mv,ds,fds,hybrid")]
    pub algorithms: Vec<Algorithm>,
    #[arg(long = "k-max")]
    pub k_max: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[command(flatten)]
    pub em: EmArgs,
    /// Drop questions with fewer votes than this before sweeping.
    #[arg(long = "min-annotators")]
    pub min_annotators: Option<usize>,
    #[arg(long = "drop-class")]
    pub drop_class: Option<String>,
    /// Tidy CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Directory for SVG panels.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Extra result rows (same CSV layout) to merge, e.g. external baselines.
    #[arg(long)]
    pub external: Vec<PathBuf>,
    /// Record wall times (makes reruns differ).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MultilabelArgs {
    /// `question,annotator,option,selected` CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub em: EmArgs,
    /// Decisions CSV (`question,option,selected`).
    #[arg(long)]
    pub output: PathBuf,
    /// JSON run report for the pooled binary task.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    /// Sweep CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dir: PathBuf,
}

/// Parses `std::env::args`, runs the command, and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_OUTPUT
            }
        }
    }
}

pub fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Online(args) => cmd_online(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Multilabel(args) => cmd_multilabel(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Loads votes and applies class removal, minimum-annotator filtering and
/// subsampling in that order. Gold, if given, is resolved against the file
/// as loaded and carried through each step.
fn load_prepared(
    input: &Path,
    format: Option<Format>,
    gold: Option<&Path>,
    drop_class: Option<&str>,
    min_annotators: Option<usize>,
    subsample: Option<(usize, u64)>,
) -> Result<(Dataset, Option<GoldLabels>, Preprocessing)> {
    let loaded = Dataset::load(input, format.unwrap_or_else(|| Format::from_path(input)))?;
    let mut gold = gold.map(|g| GoldLabels::load_csv(g, &loaded)).transpose()?;
    let mut pre = Preprocessing { loaded_questions: loaded.num_questions(), ..Default::default() };
    let mut d = loaded;
    if let Some(label) = drop_class {
        let option = d.option_index(label).ok_or_else(|| Error::UnknownOption(label.to_owned()))?;
        let (next, dropped) = d.remove_class_counted(option)?;
        if dropped > 0 {
            log::info!("{dropped} questions had only votes for option {label} and were dropped");
        }
        pre.dropped_class = Some(label.to_owned());
        pre.questions_dropped_with_class = dropped;
        gold = gold.map(|g| g.realign(&d, &next));
        d = next;
    }
    if let Some(t) = min_annotators {
        let next = d.filter_min_annotators(t)?;
        pre.min_annotators = Some(t);
        pre.questions_dropped_below_min = d.num_questions() - next.num_questions();
        gold = gold.map(|g| g.realign(&d, &next));
        d = next;
    }
    if let Some((k, seed)) = subsample {
        d = d.subsample_annotators(k, seed)?;
        pre.subsample = Some(k);
    }
    pre.questions = d.num_questions();
    pre.annotators = d.num_annotators();
    pre.options = d.num_options();
    pre.votes = d.num_votes();
    Ok((d, gold, pre))
}

pub fn cmd_aggregate(args: &AggregateArgs) -> Result<i32> {
    let cfg = args.em.config(args.algorithm);
    cfg.validate()?;
    let (d, gold, pre) = load_prepared(
        &args.input,
        args.format,
        args.gold.as_deref(),
        args.drop_class.as_deref(),
        args.min_annotators,
        args.subsample.map(|k| (k, args.em.seed)),
    )?;
    let mut manifest = RunManifest::new("aggregate", serde_json::to_value(args)?, args.em.seed).with_input(&args.input)?;
    if let Some(g) = &args.gold {
        manifest = manifest.with_input(g)?;
    }
    if let Some(o) = &args.output {
        manifest = manifest.with_output(o);
    }
    let (result, elapsed) = bench::timed(&d, &cfg)?;
    let seconds = args.timings.then_some(elapsed.as_secs_f64());
    let report = AggregateReport::new(manifest, &cfg, pre, &d, &result, gold.as_ref(), seconds)?;
    emit(args.output.as_deref(), &to_json_pretty(&report)?)?;
    if args.strict && !result.converged {
        eprintln!("not converged after {} iterations", result.iterations);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let cfg = SimulationConfig::diagonal(
        args.questions,
        args.annotators,
        args.options,
        args.votes_per_question,
        args.accuracy,
        args.seed,
    );
    let (d, gold) = bench::simulate(&cfg)?;
    write_atomic(&args.out, d.to_csv_string().as_bytes())?;
    write_atomic(&args.gold_out, gold.to_csv_string(&d).as_bytes())?;
    let manifest = RunManifest::new("simulate", serde_json::to_value(args)?, args.seed)
        .with_output(&args.out)
        .with_output(&args.gold_out);
    emit(None, &to_json_pretty(&json!({ "manifest": manifest, "simulation": cfg }))?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OnlineLine<'a> {
    question: &'a str,
    majority: &'a str,
    chosen: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    gold: Option<&'a str>,
}

pub fn cmd_online(args: &OnlineArgs) -> Result<i32> {
    let cfg = args.em.config(Algorithm::Fds);
    cfg.validate()?;
    let full = Dataset::load_csv(&args.input)?;
    if args.initial == 0 || args.initial >= full.num_questions() {
        return Err(Error::InvalidConfig(format!(
            "--initial must be in 1..{} for {} questions",
            full.num_questions(),
            full.num_questions()
        )));
    }
    let gold = args.gold.as_ref().map(|g| GoldLabels::load_csv(g, &full)).transpose()?;
    let mut state = OnlineState::init(&full.head(args.initial)?, &cfg)?;
    let mut out = String::new();
    for q in args.initial..full.num_questions() {
        let votes: Vec<(&str, usize)> = full.votes(q).map(|(a, l)| (full.annotator_name(a), l)).collect();
        let decision = state.ingest_question(full.question_name(q), &votes)?;
        let line = OnlineLine {
            question: full.question_name(q),
            majority: full.option_label(decision.majority),
            chosen: full.option_label(decision.chosen),
            gold: gold.as_ref().and_then(|g| g.get(q)).map(|l| full.option_label(l)),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    let mut manifest = RunManifest::new("online", serde_json::to_value(args)?, args.em.seed).with_input(&args.input)?;
    if let Some(g) = &args.gold {
        manifest = manifest.with_input(g)?;
    }
    if let Some(o) = &args.output {
        manifest = manifest.with_output(o);
    }
    let (accuracy, streamed_accuracy) = match &gold {
        Some(g) => {
            let all = bench::accuracy(state.labels(), g)?;
            let streamed = GoldLabels::new((0..g.num_questions()).map(|q| g.get(q).filter(|_| q >= args.initial)).collect());
            let streamed = (streamed.covered() > 0).then(|| bench::accuracy(state.labels(), &streamed)).transpose()?;
            (Some(all), streamed)
        }
        None => (None, None),
    };
    let summary = json!({
        "summary": {
            "manifest": manifest,
            "initial_questions": args.initial,
            "streamed_questions": state.questions_ingested(),
            "new_annotators": state.new_annotators(),
            "initial_iterations": state.initial_result().iterations,
            "initial_converged": state.initial_result().converged,
            "accuracy": accuracy,
            "streamed_accuracy": streamed_accuracy,
        }
    });
    out.push_str(&serde_json::to_string(&summary)?);
    out.push('\n');
    emit(args.output.as_deref(), &out)?;
    Ok(EXIT_OK)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let base = args.em.config(Algorithm::Fds);
    let (d, gold, pre) = load_prepared(
        &args.input,
        None,
        Some(&args.gold),
        args.drop_class.as_deref(),
        args.min_annotators,
        None,
    )?;
    let gold = gold.expect("gold path given");
    let cfg = SweepConfig {
        algorithms: args.algorithms.clone(),
        base,
        k_max: args.k_max,
        repeats: args.repeats,
        record_timing: args.timings,
    };
    let mut report = sweep_annotators(&d, &gold, &cfg)?;
    for path in &args.external {
        report.merge_external(path)?;
    }
    let json_path = args.json.clone().unwrap_or_else(|| args.out.with_extension("json"));
    let mut manifest = RunManifest::new("sweep", serde_json::to_value(args)?, args.em.seed)
        .with_input(&args.input)?
        .with_input(&args.gold)?;
    for path in &args.external {
        manifest = manifest.with_input(path)?;
    }
    manifest = manifest.with_output(&args.out).with_output(&json_path);
    let mut speedups = Vec::new();
    for baseline in [Algorithm::Ds, Algorithm::Hybrid] {
        if args.algorithms.contains(&baseline) && args.algorithms.contains(&Algorithm::Fds) {
            speedups.push(speedup_report(&report, baseline.name(), Algorithm::Fds.name())?);
        }
    }
    let doc = json!({
        "manifest": manifest,
        "preprocessing": pre,
        "speedups": speedups,
        "rows": report.rows,
        "cells": report.cells,
    });
    write_atomic(&args.out, report.to_csv_string().as_bytes())?;
    write_atomic(&json_path, to_json_pretty(&doc)?.as_bytes())?;
    if let Some(dir) = &args.plot {
        plot_sweep(&report, dir)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_multilabel(args: &MultilabelArgs) -> Result<i32> {
    let cfg = args.em.config(args.algorithm);
    let md = MultiDataset::load_csv(&args.input)?;
    let result = aggregate_multilabel(&md, &cfg)?;
    write_atomic(&args.output, result.to_csv_string(&md).as_bytes())?;
    if let Some(path) = &args.report {
        let manifest = RunManifest::new("multilabel", serde_json::to_value(args)?, args.em.seed)
            .with_input(&args.input)?
            .with_output(&args.output)
            .with_output(path);
        let binary = md.binarize();
        let pre = Preprocessing {
            loaded_questions: md.num_questions(),
            questions: binary.num_questions(),
            annotators: binary.num_annotators(),
            options: binary.num_options(),
            votes: binary.num_votes(),
            ..Default::default()
        };
        let report = AggregateReport::new(manifest, &cfg, pre, &binary, &result.binary, None, None)?;
        write_atomic(path, to_json_pretty(&report)?.as_bytes())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<i32> {
    let report = SweepReport::from_csv(&args.input)?;
    for path in plot_sweep(&report, &args.dir)? {
        println!("{}", path.display());
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn algorithms_parse_as_list() {
        let cli = Cli::try_parse_from([
            "fastds", "sweep", "--input", "v.csv", "--gold", "g.csv", "--algorithms", "ds,fds", "--k-max", "3",
            "--out", "s.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep(s) => assert_eq!(s.algorithms, vec![Algorithm::Ds, Algorithm::Fds]),
            other => panic!("parsed {other:?}"),
        }
        assert!(Cli::try_parse_from(["fastds", "aggregate", "--bogus"]).is_err());
    }
}
