//! Numerical kernels shared by every aggregator.
//!
//! Products over votes are evaluated as sums of logs, and each question's
//! posterior is normalised with log-sum-exp. A probability of zero becomes
//! `-inf` and is carried through rather than clamped.
//!
//! Per-question work runs on the rayon pool. Every cross-question sum is
//! taken sequentially in ascending question order, so results do not depend
//! on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Class marginals and per-annotator confusion tables.
///
/// `error_rate(a, c, l)` is the probability that annotator `a` answers `l`
/// when the true option is `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub class_marginals: Vec<f64>,
    error_rates: Vec<f64>,
    num_annotators: usize,
    num_options: usize,
}

impl Parameters {
    /// Uniform marginals and uniform confusion rows.
    pub fn uniform(num_annotators: usize, num_options: usize) -> Parameters {
        let u = 1.0 / num_options as f64;
        Parameters {
            class_marginals: vec![u; num_options],
            error_rates: vec![u; num_annotators * num_options * num_options],
            num_annotators,
            num_options,
        }
    }

    /// Builds parameters from explicit tables, `error_rates[a][c][l]`.
    pub fn from_tables(class_marginals: Vec<f64>, error_rates: &[Vec<Vec<f64>>]) -> Result<Parameters> {
        let c = class_marginals.len();
        let mut flat = Vec::with_capacity(error_rates.len() * c * c);
        for table in error_rates {
            if table.len() != c || table.iter().any(|row| row.len() != c) {
                return Err(Error::DimensionMismatch(format!("confusion table is not {c}x{c}")));
            }
            flat.extend(table.iter().flatten());
        }
        Ok(Parameters {
            class_marginals,
            error_rates: flat,
            num_annotators: error_rates.len(),
            num_options: c,
        })
    }

    pub fn num_annotators(&self) -> usize {
        self.num_annotators
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn error_rate(&self, annotator: usize, truth: usize, answer: usize) -> f64 {
        let c = self.num_options;
        self.error_rates[(annotator * c + truth) * c + answer]
    }

    /// Confusion row of `annotator` given true option `truth`.
    pub fn confusion_row(&self, annotator: usize, truth: usize) -> &[f64] {
        let c = self.num_options;
        let start = (annotator * c + truth) * c;
        &self.error_rates[start..start + c]
    }

    /// Flat `A x C x C` view of the confusion tables.
    pub fn error_rates(&self) -> &[f64] {
        &self.error_rates
    }

    /// Largest absolute change in any confusion entry. Annotators present in
    /// only one side are ignored.
    pub fn max_error_rate_delta(&self, other: &Parameters) -> f64 {
        self.error_rates
            .iter()
            .zip(&other.error_rates)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Checks the normalisation invariants to within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let sums_to_one = |xs: &[f64]| {
            xs.iter().all(|x| (0.0..=1.0).contains(x)) && (xs.iter().sum::<f64>() - 1.0).abs() <= tol
        };
        sums_to_one(&self.class_marginals)
            && self.error_rates.chunks(self.num_options).all(sums_to_one)
    }

    fn logs(&self) -> LogParameters {
        LogParameters {
            marginals: self.class_marginals.iter().map(|p| p.ln()).collect(),
            error_rates: self.error_rates.iter().map(|p| p.ln()).collect(),
            num_options: self.num_options,
        }
    }

    fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if self.num_options != d.num_options() || self.num_annotators < d.num_annotators() {
            return Err(Error::DimensionMismatch(format!(
                "parameters are for {} annotators / {} options, dataset has {} / {}",
                self.num_annotators,
                self.num_options,
                d.num_annotators(),
                d.num_options()
            )));
        }
        Ok(())
    }
}

struct LogParameters {
    marginals: Vec<f64>,
    error_rates: Vec<f64>,
    num_options: usize,
}

impl LogParameters {
    /// `out[c] = log p_c + sum over votes (a, l) of log pi[a][c][l]`.
    fn joint(&self, d: &Dataset, q: usize, out: &mut [f64]) {
        let c_count = self.num_options;
        out.copy_from_slice(&self.marginals);
        for (a, l) in d.votes(q) {
            let base = a * c_count * c_count + l;
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.error_rates[base + c * c_count];
            }
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hard,
    Soft,
}

/// Per-question beliefs over options, stored as a `Q x C` row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<f64>,
    num_options: usize,
    mode: Mode,
}

impl Assignment {
    /// A hard assignment with one-hot rows at `labels`.
    pub fn from_labels(labels: &[usize], num_options: usize) -> Assignment {
        let mut values = vec![0.0; labels.len() * num_options];
        for (q, &l) in labels.iter().enumerate() {
            values[q * num_options + l] = 1.0;
        }
        Assignment { values, num_options, mode: Mode::Hard }
    }

    /// A soft assignment from explicit rows. Rows are not renormalised.
    pub fn soft(rows: &[Vec<f64>]) -> Result<Assignment> {
        let num_options = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_options) {
            return Err(Error::DimensionMismatch("ragged assignment rows".into()));
        }
        Ok(Assignment { values: rows.concat(), num_options, mode: Mode::Soft })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_hard(&self) -> bool {
        self.mode == Mode::Hard
    }

    pub fn num_questions(&self) -> usize {
        self.values.len().checked_div(self.num_options).unwrap_or(0)
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn row(&self, q: usize) -> &[f64] {
        &self.values[q * self.num_options..(q + 1) * self.num_options]
    }

    /// Argmax of every row, lowest option id on exact ties.
    pub fn labels(&self) -> Vec<usize> {
        self.values.chunks(self.num_options).map(argmax).collect()
    }

    /// Class frequencies: the column means of the matrix.
    pub fn marginals(&self) -> Vec<f64> {
        let q = self.num_questions();
        let mut sums = vec![0.0; self.num_options];
        for row in self.values.chunks(self.num_options) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums.iter().map(|s| s / q as f64).collect()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.values.chunks(self.num_options).all(|row| {
            let ok = (row.iter().sum::<f64>() - 1.0).abs() <= tol && row.iter().all(|&v| v >= 0.0);
            ok && (self.mode == Mode::Soft || row.iter().filter(|&&v| v == 1.0).count() == 1)
        })
    }

    fn check_dataset(&self, d: &Dataset) -> Result<()> {
        if self.num_questions() != d.num_questions() || self.num_options != d.num_options() {
            return Err(Error::DimensionMismatch(format!(
                "assignment is {}x{}, dataset is {}x{}",
                self.num_questions(),
                self.num_options,
                d.num_questions(),
                d.num_options()
            )));
        }
        Ok(())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

/// Integer sufficient statistics of a hard assignment.
///
/// Counts can be updated one question at a time; turning them into
/// [`Parameters`] performs the same divisions as a full recount.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardCounts {
    class: Vec<u64>,
    confusion: Vec<u64>,
    num_options: usize,
}

impl HardCounts {
    pub fn new(num_annotators: usize, num_options: usize) -> HardCounts {
        HardCounts {
            class: vec![0; num_options],
            confusion: vec![0; num_annotators * num_options * num_options],
            num_options,
        }
    }

    pub fn from_labels(d: &Dataset, labels: &[usize]) -> HardCounts {
        let mut counts = HardCounts::new(d.num_annotators(), d.num_options());
        for (q, &c) in labels.iter().enumerate() {
            counts.add(d.votes(q), c);
        }
        counts
    }

    pub fn num_annotators(&self) -> usize {
        self.confusion.len() / (self.num_options * self.num_options)
    }

    pub fn grow_annotators(&mut self, num_annotators: usize) {
        let c = self.num_options;
        if num_annotators * c * c > self.confusion.len() {
            self.confusion.resize(num_annotators * c * c, 0);
        }
    }

    /// Adds a question with `votes` assigned to class `truth`.
    pub fn add(&mut self, votes: impl IntoIterator<Item = (usize, usize)>, truth: usize) {
        let c = self.num_options;
        self.class[truth] += 1;
        for (a, l) in votes {
            self.confusion[(a * c + truth) * c + l] += 1;
        }
    }

    pub fn remove(&mut self, votes: impl IntoIterator<Item = (usize, usize)>, truth: usize) {
        let c = self.num_options;
        self.class[truth] -= 1;
        for (a, l) in votes {
            self.confusion[(a * c + truth) * c + l] -= 1;
        }
    }

    pub fn parameters(&self, smoothing: f64) -> Parameters {
        let c = self.num_options;
        let total: u64 = self.class.iter().sum();
        let class_marginals = self.class.iter().map(|&n| n as f64 / total as f64).collect();
        let mut error_rates = Vec::with_capacity(self.confusion.len());
        for row in self.confusion.chunks(c) {
            let denom = row.iter().sum::<u64>() as f64;
            push_row(&mut error_rates, row.iter().map(|&n| n as f64), denom, smoothing, c);
        }
        Parameters { class_marginals, error_rates, num_annotators: self.num_annotators(), num_options: c }
    }
}

/// Appends `(n + alpha) / (denom + C alpha)`, or a uniform row when that
/// denominator is zero.
fn push_row(out: &mut Vec<f64>, counts: impl Iterator<Item = f64>, denom: f64, alpha: f64, c: usize) {
    let denom = denom + c as f64 * alpha;
    if denom > 0.0 {
        out.extend(counts.map(|n| (n + alpha) / denom));
    } else {
        out.extend(std::iter::repeat_n(1.0 / c as f64, c));
    }
}

/// Majority vote with uniformly random tie-breaking among the top options.
pub fn majority_vote(d: &Dataset, seed: u64) -> Assignment {
    let mut rng = seed::rng(seed, Stream::MajorityTies);
    let labels: Vec<usize> = (0..d.num_questions())
        .map(|q| majority_label(&d.tally(q), &mut rng))
        .collect();
    Assignment::from_labels(&labels, d.num_options())
}

/// Picks the most-voted option, drawing uniformly among ties. The generator
/// is only advanced when there is a tie.
pub fn majority_label(tally: &[usize], rng: &mut impl Rng) -> usize {
    let top = tally.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..tally.len()).filter(|&c| tally[c] == top).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

/// Maximum-likelihood class marginals and confusion tables given `t`.
///
/// Confusion rows with no supporting mass are set to the uniform row.
/// `smoothing` adds a pseudo-count to every confusion cell.
pub fn m_step(d: &Dataset, t: &Assignment, smoothing: f64) -> Result<Parameters> {
    t.check_dataset(d)?;
    if t.is_hard() {
        return Ok(HardCounts::from_labels(d, &t.labels()).parameters(smoothing));
    }
    let c_count = d.num_options();
    let q_count = d.num_questions();
    let mut class = vec![0.0; c_count];
    let mut confusion = vec![0.0; d.num_annotators() * c_count * c_count];
    for q in 0..q_count {
        let row = t.row(q);
        for (s, v) in class.iter_mut().zip(row) {
            *s += v;
        }
        for (a, l) in d.votes(q) {
            for (c, &w) in row.iter().enumerate() {
                confusion[(a * c_count + c) * c_count + l] += w;
            }
        }
    }
    let class_marginals = class.iter().map(|s| s / q_count as f64).collect();
    let mut error_rates = Vec::with_capacity(confusion.len());
    for row in confusion.chunks(c_count) {
        let denom = row.iter().sum::<f64>();
        push_row(&mut error_rates, row.iter().copied(), denom, smoothing, c_count);
    }
    Ok(Parameters {
        class_marginals,
        error_rates,
        num_annotators: d.num_annotators(),
        num_options: c_count,
    })
}

/// Posterior class probabilities for every question.
pub fn e_step_soft(d: &Dataset, params: &Parameters) -> Result<Assignment> {
    e_step_soft_counted(d, params).map(|(t, _)| t)
}

/// Like [`e_step_soft`], also returning how many rows had zero joint mass
/// for every class and were set to uniform.
pub fn e_step_soft_counted(d: &Dataset, params: &Parameters) -> Result<(Assignment, usize)> {
    params.check_dataset(d)?;
    let c_count = d.num_options();
    let logs = params.logs();
    let mut values = vec![0.0; d.num_questions() * c_count];
    let degenerate: usize = values
        .par_chunks_mut(c_count)
        .enumerate()
        .map(|(q, row)| {
            logs.joint(d, q, row);
            let norm = log_sum_exp(row);
            if norm == f64::NEG_INFINITY {
                row.fill(1.0 / c_count as f64);
                1
            } else {
                row.iter_mut().for_each(|x| *x = (*x - norm).exp());
                0
            }
        })
        .sum();
    Ok((Assignment { values, num_options: c_count, mode: Mode::Soft }, degenerate))
}

/// Hardens a soft assignment to its per-row argmax.
pub fn c_step(t: &Assignment) -> Assignment {
    let labels: Vec<usize> = t.values.par_chunks(t.num_options).map(argmax).collect();
    Assignment::from_labels(&labels, t.num_options)
}

/// Per-question log joint terms, computed in parallel.
fn joint_terms(d: &Dataset, params: &Parameters) -> Vec<f64> {
    let logs = params.logs();
    let c_count = d.num_options();
    let mut values = vec![0.0; d.num_questions() * c_count];
    values
        .par_chunks_mut(c_count)
        .enumerate()
        .for_each(|(q, row)| logs.joint(d, q, row));
    values
}

/// Observed-data log-likelihood (natural log), marginalised over classes.
pub fn log_likelihood(d: &Dataset, params: &Parameters) -> Result<f64> {
    params.check_dataset(d)?;
    let joint = joint_terms(d, params);
    Ok(joint.chunks(d.num_options()).map(log_sum_exp).sum())
}

/// Classification log-likelihood of a hard partition: the log of the joint
/// term of each question's assigned class, summed over questions.
pub fn cml_criterion(d: &Dataset, t: &Assignment, params: &Parameters) -> Result<f64> {
    if !t.is_hard() {
        return Err(Error::NotHard);
    }
    t.check_dataset(d)?;
    params.check_dataset(d)?;
    let joint = joint_terms(d, params);
    Ok(t.labels()
        .iter()
        .enumerate()
        .map(|(q, &c)| joint[q * d.num_options() + c])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ds(records: &[(&str, &str, usize)], c: Option<usize>) -> Dataset {
        Dataset::from_records(records.iter().copied(), c).unwrap()
    }

    fn single_vote_instance() -> (Dataset, Parameters) {
        let d = ds(&[("q0", "a0", 0)], Some(2));
        let params =
            Parameters::from_tables(vec![0.6, 0.4], &[vec![vec![0.9, 0.1], vec![0.2, 0.8]]]).unwrap();
        (d, params)
    }

    #[test]
    fn majority_vote_cases() {
        let d = ds(&[("q0", "a0", 1), ("q0", "a1", 1), ("q0", "a2", 1)], None);
        assert_eq!(majority_vote(&d, 0).labels(), vec![1]);

        let d = ds(&[("q0", "a0", 0), ("q0", "a1", 0), ("q0", "a2", 1), ("q0", "a3", 2)], None);
        assert_eq!(majority_vote(&d, 0).labels(), vec![0]);

        let d = ds(&[("q0", "a0", 0), ("q0", "a1", 1)], None);
        let picks: std::collections::HashSet<_> =
            (0..64).map(|s| majority_vote(&d, s).labels()[0]).collect();
        assert_eq!(picks.len(), 2);
        for s in 0..16 {
            assert_eq!(majority_vote(&d, s), majority_vote(&d, s));
        }
    }

    #[test]
    fn m_step_identity_when_annotator_agrees() {
        let d = ds(&[("q0", "a0", 0), ("q1", "a0", 1), ("q2", "a0", 1)], None);
        let t = Assignment::from_labels(&[0, 1, 1], 2);
        let p = m_step(&d, &t, 0.0).unwrap();
        assert_eq!(p.confusion_row(0, 0), &[1.0, 0.0]);
        assert_eq!(p.confusion_row(0, 1), &[0.0, 1.0]);
        assert_abs_diff_eq!(p.class_marginals[0], 1.0 / 3.0);
    }

    #[test]
    fn m_step_two_question_instance() {
        let d = ds(&[("q0", "a0", 0), ("q1", "a0", 0)], Some(2));
        let p = m_step(&d, &Assignment::from_labels(&[0, 1], 2), 0.0).unwrap();
        assert_eq!(p.error_rate(0, 0, 0), 1.0);
        assert_eq!(p.error_rate(0, 1, 0), 1.0);
        assert_eq!(p.class_marginals, vec![0.5, 0.5]);
    }

    #[test]
    fn m_step_unseen_class_row_is_uniform() {
        let d = ds(&[("q0", "a0", 0), ("q1", "a0", 1)], Some(3));
        let p = m_step(&d, &Assignment::from_labels(&[0, 1], 3), 0.0).unwrap();
        assert_eq!(p.confusion_row(0, 2), &[1.0 / 3.0; 3]);
        assert!(p.is_normalized(1e-12));
    }

    #[test]
    fn m_step_soft_matches_hard_on_one_hot_rows() {
        let d = ds(&[("q0", "a0", 0), ("q0", "a1", 1), ("q1", "a0", 1)], None);
        let hard = Assignment::from_labels(&[0, 1], 2);
        let soft = Assignment::soft(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m_step(&d, &hard, 0.5).unwrap(), m_step(&d, &soft, 0.5).unwrap());
    }

    #[test]
    fn m_step_dimension_mismatch() {
        let d = ds(&[("q0", "a0", 0), ("q1", "a0", 1)], None);
        assert!(matches!(
            m_step(&d, &Assignment::from_labels(&[0], 2), 0.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn e_step_cases() {
        let d = ds(&[("q0", "a0", 0), ("q0", "a1", 1), ("q1", "a0", 2)], None);
        let t = e_step_soft(&d, &Parameters::uniform(2, 3)).unwrap();
        for q in 0..2 {
            for &v in t.row(q) {
                assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
            }
        }

        let (d, params) = single_vote_instance();
        let t = e_step_soft(&d, &params).unwrap();
        assert_abs_diff_eq!(t.row(0)[0], 0.54 / 0.62, epsilon = 1e-12);
        assert_abs_diff_eq!(t.row(0)[0], 0.870968, epsilon = 1e-6);
        assert_abs_diff_eq!(t.row(0)[1], 0.129032, epsilon = 1e-6);

        let d = ds(&[("q0", "a0", 1), ("q0", "a1", 1)], None);
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let params = Parameters::from_tables(vec![0.5, 0.5], &[eye.clone(), eye]).unwrap();
        assert_eq!(e_step_soft(&d, &params).unwrap().row(0), &[0.0, 1.0]);
    }

    #[test]
    fn e_step_degenerate_row_is_uniform() {
        let d = ds(&[("q0", "a0", 0), ("q0", "a1", 1)], None);
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let params = Parameters::from_tables(vec![0.5, 0.5], &[eye.clone(), eye]).unwrap();
        let (t, degenerate) = e_step_soft_counted(&d, &params).unwrap();
        assert_eq!(degenerate, 1);
        assert_eq!(t.row(0), &[0.5, 0.5]);
        assert_eq!(log_likelihood(&d, &params).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn e_step_survives_many_votes() {
        let records: Vec<_> = (0..2000).map(|a| ("q0".to_string(), format!("a{a}"), 0)).collect();
        let d = Dataset::from_records(records, Some(2)).unwrap();
        let table = vec![vec![0.6, 0.4], vec![0.45, 0.55]];
        let params = Parameters::from_tables(vec![0.5, 0.5], &vec![table; 2000]).unwrap();
        let t = e_step_soft(&d, &params).unwrap();
        assert!(t.is_normalized(1e-12));
        assert!(t.row(0)[0] > 0.999);
        assert!(log_likelihood(&d, &params).unwrap().is_finite());
    }

    #[test]
    fn c_step_cases() {
        let t = Assignment::soft(&[vec![0.9, 0.1], vec![0.5, 0.5], vec![0.129032, 0.870968]]).unwrap();
        let h = c_step(&t);
        assert!(h.is_hard());
        assert_eq!(h.labels(), vec![0, 0, 1]);
    }

    #[test]
    fn likelihood_cases() {
        let d = ds(&[("q0", "a0", 1), ("q0", "a1", 1)], None);
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let params = Parameters::from_tables(vec![0.0, 1.0], &[eye.clone(), eye]).unwrap();
        assert_eq!(log_likelihood(&d, &params).unwrap(), 0.0);
        let t = Assignment::from_labels(&[1], 2);
        assert_eq!(cml_criterion(&d, &t, &params).unwrap(), 0.0);

        let (d, params) = single_vote_instance();
        let ll = log_likelihood(&d, &params).unwrap();
        assert_abs_diff_eq!(ll, 0.62f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ll, -0.478036, epsilon = 1e-6);
        let c2 = cml_criterion(&d, &Assignment::from_labels(&[0], 2), &params).unwrap();
        assert_abs_diff_eq!(c2, -0.616186, epsilon = 1e-6);
        assert!(c2 <= ll);
    }

    #[test]
    fn cml_requires_hard() {
        let (d, params) = single_vote_instance();
        let t = Assignment::soft(&[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(cml_criterion(&d, &t, &params), Err(Error::NotHard)));
    }

    #[test]
    fn hard_counts_incremental_matches_recount() {
        let d = ds(
            &[("q0", "a0", 0), ("q0", "a1", 1), ("q1", "a0", 1), ("q2", "a1", 0), ("q2", "a2", 0)],
            None,
        );
        let mut counts = HardCounts::from_labels(&d, &[0, 0, 1]);
        counts.remove(d.votes(1), 0);
        counts.add(d.votes(1), 1);
        assert_eq!(counts, HardCounts::from_labels(&d, &[0, 1, 1]));
        assert_eq!(
            counts.parameters(0.0),
            m_step(&d, &Assignment::from_labels(&[0, 1, 1], 2), 0.0).unwrap()
        );
    }
}
