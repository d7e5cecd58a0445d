//! Planted-truth simulation, evaluation metrics, and annotator sweeps.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, AggregationConfig, AggregationResult, Algorithm};
use crate::dataset::{column_indices, csv_parse_error, csv_reader, field, Dataset, GoldLabels};
use crate::error::{Error, Result};
use crate::multilabel::{Answer, MultiDataset};
use crate::seed::{self, Stream};

/// How simulated annotators err.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confusion {
    /// Every annotator answers correctly with this probability and spreads
    /// the remaining mass evenly over the other options.
    Diagonal(f64),
    /// One diagonal accuracy per annotator.
    PerAnnotator(Vec<f64>),
    /// Explicit `A x C x C` tables, `tables[a][truth][answer]`.
    Explicit(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub questions: usize,
    pub annotators: usize,
    pub options: usize,
    pub votes_per_question: usize,
    /// Class prior; uniform when `None`.
    pub prior: Option<Vec<f64>>,
    pub confusion: Confusion,
    pub seed: u64,
}

impl SimulationConfig {
    /// Uniform prior, one shared diagonal accuracy.
    pub fn diagonal(questions: usize, annotators: usize, options: usize, k: usize, accuracy: f64, seed: u64) -> Self {
        SimulationConfig {
            questions,
            annotators,
            options,
            votes_per_question: k,
            prior: None,
            confusion: Confusion::Diagonal(accuracy),
            seed,
        }
    }

    fn prior(&self) -> Vec<f64> {
        self.prior.clone().unwrap_or_else(|| vec![1.0 / self.options as f64; self.options])
    }

    /// Confusion tables expanded to `A x C x C`.
    pub fn tables(&self) -> Vec<Vec<Vec<f64>>> {
        let c = self.options;
        let diagonal = |p: f64| -> Vec<Vec<f64>> {
            let off = if c > 1 { (1.0 - p) / (c - 1) as f64 } else { 0.0 };
            (0..c).map(|t| (0..c).map(|l| if l == t { p } else { off }).collect()).collect()
        };
        match &self.confusion {
            Confusion::Diagonal(p) => vec![diagonal(*p); self.annotators],
            Confusion::PerAnnotator(ps) => ps.iter().map(|&p| diagonal(p)).collect(),
            Confusion::Explicit(tables) => tables.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.questions == 0 || self.annotators == 0 {
            return bad("questions and annotators must be positive".into());
        }
        if self.options < 2 {
            return bad("at least two options are required".into());
        }
        if self.votes_per_question == 0 || self.votes_per_question > self.annotators {
            return bad(format!(
                "votes per question {} not in 1..={}",
                self.votes_per_question, self.annotators
            ));
        }
        let is_distribution = |xs: &[f64]| {
            xs.len() == self.options
                && xs.iter().all(|x| (0.0..=1.0).contains(x))
                && (xs.iter().sum::<f64>() - 1.0).abs() <= 1e-9
        };
        if !is_distribution(&self.prior()) {
            return bad("prior must be a probability vector over the options".into());
        }
        if let Confusion::PerAnnotator(ps) = &self.confusion {
            if ps.len() != self.annotators {
                return bad("one accuracy per annotator is required".into());
            }
        }
        let tables = self.tables();
        if tables.len() != self.annotators
            || tables.iter().any(|t| t.len() != self.options || !t.iter().all(|row| is_distribution(row)))
        {
            return bad("confusion rows must be probability vectors over the options".into());
        }
        Ok(())
    }
}

/// Draws gold labels from the prior and votes from the confusion rows.
///
/// Each question is answered by `votes_per_question` distinct annotators,
/// listed in ascending id order.
pub fn simulate(cfg: &SimulationConfig) -> Result<(Dataset, GoldLabels)> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, Stream::Simulate);
    let prior = WeightedIndex::new(cfg.prior()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let rows = row_samplers(&cfg.tables())?;
    let mut gold = Vec::with_capacity(cfg.questions);
    let mut per_question = Vec::with_capacity(cfg.questions);
    for _ in 0..cfg.questions {
        let truth = prior.sample(&mut rng);
        let mut who = index::sample(&mut rng, cfg.annotators, cfg.votes_per_question).into_vec();
        who.sort_unstable();
        per_question.push(who.into_iter().map(|a| (a, rows[a][truth].sample(&mut rng))).collect());
        gold.push(truth);
    }
    let d = Dataset::from_dense(
        (0..cfg.questions).map(|q| format!("q{q}")).collect(),
        (0..cfg.annotators).map(|a| format!("a{a}")).collect(),
        (0..cfg.options).map(|c| c.to_string()).collect(),
        per_question,
    );
    // Drop annotators that were never drawn so ids stay dense.
    let compact = d.filter_min_annotators(1)?;
    Ok((compact, GoldLabels::complete(&gold)))
}

fn row_samplers(tables: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<WeightedIndex<f64>>>> {
    tables
        .iter()
        .map(|t| {
            t.iter()
                .map(|row| WeightedIndex::new(row).map_err(|e| Error::InvalidConfig(e.to_string())))
                .collect()
        })
        .collect()
}

/// Planted multi-label data: each (question, option) pair is correct with
/// probability `positive_rate`, and every annotator flips each pair
/// independently with probability `flip`.
pub fn simulate_multilabel(
    cfg: &SimulationConfig,
    positive_rate: f64,
    flip: f64,
) -> Result<(MultiDataset, Vec<Vec<bool>>)> {
    if !(0.0..=1.0).contains(&positive_rate) || !(0.0..=1.0).contains(&flip) {
        return Err(Error::InvalidConfig("rates must lie in [0, 1]".into()));
    }
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed, Stream::Simulate);
    let mut gold = Vec::with_capacity(cfg.questions);
    let mut answers = Vec::with_capacity(cfg.questions);
    for _ in 0..cfg.questions {
        let truth: Vec<bool> = (0..cfg.options).map(|_| rng.random_bool(positive_rate)).collect();
        let mut who = index::sample(&mut rng, cfg.annotators, cfg.votes_per_question).into_vec();
        who.sort_unstable();
        let list = who
            .into_iter()
            .map(|a| Answer {
                annotator: a,
                selected: (0..cfg.options).filter(|&c| truth[c] != rng.random_bool(flip)).collect(),
            })
            .collect();
        answers.push(list);
        gold.push(truth);
    }
    let md = MultiDataset::new(
        cfg.options,
        (0..cfg.questions).map(|q| format!("q{q}")).collect(),
        (0..cfg.annotators).map(|a| format!("a{a}")).collect(),
        answers,
    )?;
    Ok((md, gold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub negative_log_likelihood: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub converged: bool,
}

/// Fraction of gold-covered questions whose label matches.
pub fn accuracy(labels: &[usize], gold: &GoldLabels) -> Result<f64> {
    if gold.covered() == 0 {
        return Err(Error::EmptyGold);
    }
    if gold.num_questions() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "gold covers {} questions, result has {}",
            gold.num_questions(),
            labels.len()
        )));
    }
    let hits = gold.iter().filter(|&(q, l)| labels[q] == l).count();
    Ok(hits as f64 / gold.covered() as f64)
}

pub fn evaluate(result: &AggregationResult, gold: &GoldLabels, elapsed: Duration) -> Result<Metrics> {
    Ok(Metrics {
        accuracy: accuracy(&result.labels(), gold)?,
        negative_log_likelihood: result.negative_log_likelihood,
        iterations: result.iterations,
        seconds: elapsed.as_secs_f64(),
        converged: result.converged,
    })
}

/// Runs `cfg` and measures the aggregation call alone.
pub fn timed(d: &Dataset, cfg: &AggregationConfig) -> Result<(AggregationResult, Duration)> {
    let start = Instant::now();
    let result = aggregate(d, cfg)?;
    Ok((result, start.elapsed()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub algorithms: Vec<Algorithm>,
    /// Shared by every algorithm; `algorithm` is overridden per cell.
    pub base: AggregationConfig,
    pub k_max: usize,
    pub repeats: usize,
    /// When false, wall times are left out of the report so that reruns are
    /// byte-identical.
    pub record_timing: bool,
}

/// One (k, algorithm, repeat) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub algorithm: Algorithm,
    pub repeat: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub negative_log_likelihood: f64,
    pub iterations: usize,
    pub seconds: Option<f64>,
    pub converged: bool,
}

/// Means (and standard deviations over repeats) for one (k, algorithm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub algorithm: String,
    pub repeats: usize,
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub nll: f64,
    pub nll_std: f64,
    pub iterations: f64,
    pub iterations_std: f64,
    pub seconds: Option<f64>,
    pub seconds_std: Option<f64>,
    pub converged: bool,
    /// True for rows merged from a user-supplied results file.
    #[serde(default)]
    pub external: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

/// For `k = 1..=k_max`, subsamples `k` votes per question and runs every
/// algorithm on the same subsample with the same tie-breaking seed.
///
/// Repeat `r` uses seed `base.seed + r` for both the subsample and the
/// majority-vote ties.
pub fn sweep_annotators(d: &Dataset, gold: &GoldLabels, cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.k_max == 0 || cfg.repeats == 0 || cfg.algorithms.is_empty() {
        return Err(Error::InvalidConfig("k_max, repeats and algorithms must be non-empty".into()));
    }
    cfg.base.validate()?;
    let mut cells = Vec::new();
    for k in 1..=cfg.k_max {
        for repeat in 0..cfg.repeats {
            let seed = cfg.base.seed.wrapping_add(repeat as u64);
            let sub = d.subsample_annotators(k, seed)?;
            for &algorithm in &cfg.algorithms {
                let run_cfg = AggregationConfig { algorithm, seed, ..cfg.base.clone() };
                let (result, elapsed) = timed(&sub, &run_cfg)?;
                let m = evaluate(&result, gold, elapsed)?;
                log::debug!("k={k} repeat={repeat} {algorithm}: acc={} iters={}", m.accuracy, m.iterations);
                cells.push(SweepCell {
                    k,
                    algorithm,
                    repeat,
                    seed,
                    accuracy: m.accuracy,
                    negative_log_likelihood: m.negative_log_likelihood,
                    iterations: m.iterations,
                    seconds: cfg.record_timing.then_some(m.seconds),
                    converged: m.converged,
                });
            }
        }
    }
    let mut rows = Vec::new();
    for k in 1..=cfg.k_max {
        for &algorithm in &cfg.algorithms {
            let group: Vec<&SweepCell> = cells.iter().filter(|c| c.k == k && c.algorithm == algorithm).collect();
            rows.push(summarize(k, algorithm, &group));
        }
    }
    Ok(SweepReport { rows, cells })
}

fn mean_std(xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.into_iter().collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn summarize(k: usize, algorithm: Algorithm, group: &[&SweepCell]) -> SweepRow {
    let (accuracy, accuracy_std) = mean_std(group.iter().map(|c| c.accuracy));
    let (nll, nll_std) = mean_std(group.iter().map(|c| c.negative_log_likelihood));
    let (iterations, iterations_std) = mean_std(group.iter().map(|c| c.iterations as f64));
    let seconds: Option<Vec<f64>> = group.iter().map(|c| c.seconds).collect();
    let (seconds, seconds_std) = match seconds {
        Some(s) => {
            let (m, sd) = mean_std(s);
            (Some(m), Some(sd))
        }
        None => (None, None),
    };
    SweepRow {
        k,
        algorithm: algorithm.name().to_owned(),
        repeats: group.len(),
        accuracy,
        accuracy_std,
        nll,
        nll_std,
        iterations,
        iterations_std,
        seconds,
        seconds_std,
        converged: group.iter().all(|c| c.converged),
        external: false,
    }
}

pub const SWEEP_CSV_HEADER: [&str; 7] = ["k", "algorithm", "accuracy", "nll", "iterations", "seconds", "converged"];

impl SweepReport {
    pub fn row(&self, k: usize, algorithm: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.k == k && r.algorithm == algorithm)
    }

    pub fn algorithms(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.algorithm) {
                seen.push(r.algorithm.clone());
            }
        }
        seen
    }

    /// Tidy `k,algorithm,accuracy,nll,iterations,seconds,converged` rows.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SWEEP_CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.algorithm.clone(),
                r.accuracy.to_string(),
                r.nll.to_string(),
                r.iterations.to_string(),
                r.seconds.map(|s| s.to_string()).unwrap_or_default(),
                r.converged.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Parses rows in the tidy CSV layout. Cells are not recoverable.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<SweepReport> {
        let path = path.as_ref();
        let text = crate::error::read_input(path)?;
        let mut reader = csv_reader(&text);
        let columns = column_indices(path, &mut reader, &SWEEP_CSV_HEADER)?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_parse_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let get = |i: usize| field(path, &record, columns[i], line);
            let num = |i: usize| -> Result<f64> {
                let s = get(i)?;
                s.parse().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("`{s}` is not a number"),
                })
            };
            let seconds = match get(5)? {
                "" => None,
                _ => Some(num(5)?),
            };
            rows.push(SweepRow {
                k: num(0)? as usize,
                algorithm: get(1)?.to_owned(),
                repeats: 1,
                accuracy: num(2)?,
                accuracy_std: 0.0,
                nll: if get(3)?.is_empty() { f64::NAN } else { num(3)? },
                nll_std: 0.0,
                iterations: if get(4)?.is_empty() { f64::NAN } else { num(4)? },
                iterations_std: 0.0,
                seconds,
                seconds_std: seconds.map(|_| 0.0),
                converged: matches!(get(6)?, "true" | "1"),
                external: false,
            });
        }
        Ok(SweepReport { rows, cells: Vec::new() })
    }

    /// Appends rows from another tool's results (e.g. baselines that are
    /// not implemented here), keyed by the same `k` values.
    pub fn merge_external(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let other = SweepReport::from_csv(path)?;
        self.rows.extend(other.rows.into_iter().map(|r| SweepRow { external: true, ..r }));
        self.rows.sort_by_key(|r| r.k);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub baseline: String,
    pub target: String,
    /// Mean over k of baseline time / target time; absent without timings.
    pub time_ratio: Option<f64>,
    /// Mean over k of baseline iterations / target iterations.
    pub iteration_ratio: f64,
}

pub fn speedup_report(sweep: &SweepReport, baseline: &str, target: &str) -> Result<Speedup> {
    let by_k = |name: &str| -> Result<BTreeMap<usize, &SweepRow>> {
        let rows: BTreeMap<usize, &SweepRow> =
            sweep.rows.iter().filter(|r| r.algorithm == name).map(|r| (r.k, r)).collect();
        if rows.is_empty() {
            return Err(Error::MissingAlgorithm(name.to_owned()));
        }
        Ok(rows)
    };
    let base = by_k(baseline)?;
    let tgt = by_k(target)?;
    let pairs: Vec<(&SweepRow, &SweepRow)> =
        base.iter().filter_map(|(k, b)| tgt.get(k).map(|t| (*b, *t))).collect();
    if pairs.is_empty() {
        return Err(Error::MissingAlgorithm(format!("{baseline}/{target} share no k")));
    }
    let n = pairs.len() as f64;
    let iteration_ratio = pairs.iter().map(|(b, t)| b.iterations / t.iterations).sum::<f64>() / n;
    let time_ratio = pairs
        .iter()
        .map(|(b, t)| Some(b.seconds? / t.seconds?))
        .sum::<Option<f64>>()
        .map(|s| s / n);
    Ok(Speedup { baseline: baseline.to_owned(), target: target.to_owned(), time_ratio, iteration_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_annotators_echo_gold() {
        let (d, gold) = simulate(&SimulationConfig::diagonal(50, 4, 3, 3, 1.0, 5)).unwrap();
        for (q, g) in gold.iter() {
            assert!(d.votes(q).all(|(_, l)| l == g));
        }
        assert_eq!(d.num_votes(), 150);
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimulationConfig::diagonal(40, 6, 3, 4, 0.7, 3);
        assert_eq!(simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let other = SimulationConfig { seed: 4, ..cfg.clone() };
        assert_ne!(simulate(&cfg).unwrap().0, simulate(&other).unwrap().0);
    }

    #[test]
    fn uniform_confusion_agreement_is_chance() {
        let c = 4;
        let cfg = SimulationConfig::diagonal(5000, 10, c, 5, 1.0 / c as f64, 17);
        let (d, gold) = simulate(&cfg).unwrap();
        let n = d.num_votes() as f64;
        let agree = gold.iter().map(|(q, g)| d.votes(q).filter(|&(_, l)| l == g).count()).sum::<usize>() as f64;
        let p = 1.0 / c as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((agree - n * p).abs() <= 3.0 * sigma, "agree={agree} n={n}");
    }

    #[test]
    fn invalid_simulation_configs() {
        let ok = SimulationConfig::diagonal(10, 3, 2, 3, 0.8, 0);
        assert!(simulate(&SimulationConfig { votes_per_question: 4, ..ok.clone() }).is_err());
        assert!(simulate(&SimulationConfig { options: 1, ..ok.clone() }).is_err());
        assert!(simulate(&SimulationConfig { prior: Some(vec![0.5, 0.6]), ..ok.clone() }).is_err());
        assert!(simulate(&SimulationConfig { confusion: Confusion::Diagonal(1.2), ..ok }).is_err());
    }

    #[test]
    fn evaluate_fractions() {
        let d = Dataset::from_records(
            [("q0", "a", 0), ("q1", "a", 1), ("q2", "a", 1), ("q3", "a", 0), ("q4", "a", 1)],
            None,
        )
        .unwrap();
        let result = aggregate(&d, &AggregationConfig { algorithm: Algorithm::Mv, ..Default::default() }).unwrap();
        let gold = GoldLabels::new(vec![Some(0), Some(1), Some(0), Some(0), None]);
        let m = evaluate(&result, &gold, Duration::from_millis(3)).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.iterations, 1);
        let exact = GoldLabels::complete(&[0, 1, 1, 0, 1]);
        assert_eq!(evaluate(&result, &exact, Duration::ZERO).unwrap().accuracy, 1.0);
        assert!(matches!(
            evaluate(&result, &GoldLabels::new(vec![None; 5]), Duration::ZERO),
            Err(Error::EmptyGold)
        ));
    }

    fn small_sweep(k_max: usize, timing: bool) -> SweepReport {
        let (d, gold) = simulate(&SimulationConfig::diagonal(120, 8, 3, 5, 0.7, 21)).unwrap();
        let cfg = SweepConfig {
            algorithms: Algorithm::ALL.to_vec(),
            base: AggregationConfig { seed: 2, ..Default::default() },
            k_max,
            repeats: 2,
            record_timing: timing,
        };
        sweep_annotators(&d, &gold, &cfg).unwrap()
    }

    #[test]
    fn single_vote_sweep_agrees_across_methods() {
        let report = small_sweep(1, false);
        let accs: Vec<f64> = report.rows.iter().map(|r| r.accuracy).collect();
        assert_eq!(accs.len(), 4);
        assert!(accs.iter().all(|&a| a == accs[0]), "{accs:?}");
    }

    #[test]
    fn sweep_is_reproducible_and_speedup_is_defined() {
        let a = small_sweep(3, false);
        assert_eq!(a.to_csv_string(), small_sweep(3, false).to_csv_string());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&small_sweep(3, false)).unwrap());
        assert_eq!(a.rows.len(), 12);

        let same = speedup_report(&a, "ds", "ds").unwrap();
        assert_eq!(same.iteration_ratio, 1.0);
        assert_eq!(same.time_ratio, None);
        assert!(matches!(speedup_report(&a, "glad", "fds"), Err(Error::MissingAlgorithm(_))));

        let timed = small_sweep(2, true);
        assert_eq!(speedup_report(&timed, "fds", "fds").unwrap().time_ratio, Some(1.0));
    }

    #[test]
    fn sweep_csv_round_trip_and_external_merge() {
        let report = small_sweep(2, true);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, report.to_csv_string().as_bytes()).unwrap();
        let back = SweepReport::from_csv(f.path()).unwrap();
        assert_eq!(back.rows.len(), report.rows.len());
        assert_eq!(back.rows[3].accuracy, report.rows[3].accuracy);
        assert_eq!(back.rows[3].seconds, report.rows[3].seconds);

        let mut ext = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(
            &mut ext,
            b"k,algorithm,accuracy,nll,iterations,seconds,converged\n1,glad,0.5,,3,,true\n2,glad,0.6,,3,,true\n",
        )
        .unwrap();
        let mut merged = report.clone();
        merged.merge_external(ext.path()).unwrap();
        assert_eq!(merged.row(2, "glad").unwrap().accuracy, 0.6);
        assert!(merged.row(2, "glad").unwrap().external);
        assert!(merged.algorithms().contains(&"glad".to_string()));
    }

    #[test]
    fn multilabel_simulation_shapes() {
        let cfg = SimulationConfig::diagonal(30, 6, 4, 3, 0.5, 8);
        let (md, gold) = simulate_multilabel(&cfg, 0.3, 0.0).unwrap();
        assert_eq!(gold.len(), 30);
        for (q, truth) in gold.iter().enumerate() {
            for ans in md.answers(q) {
                let expected: std::collections::BTreeSet<usize> = (0..4).filter(|&c| truth[c]).collect();
                assert_eq!(ans.selected, expected);
            }
        }
    }
}
