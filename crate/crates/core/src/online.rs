//! Streaming aggregation on top of a batch Fast Dawid-Skene solution.
//!
//! Each new question goes through a fixed four-phase update:
//!
//! 1. majority vote on the new question alone,
//! 2. an M-step over everything seen so far,
//! 3. an E-step and C-step for the new question only,
//! 4. a final M-step so that new annotators are reflected in the parameters.
//!
//! Labels of earlier questions are never revisited. The M-steps are computed
//! from integer counts kept up to date one question at a time, which gives
//! the same parameters as recounting the whole dataset.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;

use crate::aggregate::{run_fds, AggregationConfig, AggregationResult};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{c_step, e_step_soft, majority_label, Assignment, HardCounts, Parameters};
use crate::seed::{self, Stream};

#[derive(Debug, Clone)]
pub struct OnlineState {
    dataset: Dataset,
    labels: Vec<usize>,
    counts: HardCounts,
    parameters: Parameters,
    config: AggregationConfig,
    annotator_index: HashMap<String, usize>,
    ties: ChaCha8Rng,
    initial: AggregationResult,
    questions_ingested: usize,
    new_annotators: usize,
}

/// Outcome of ingesting one question.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub question: usize,
    /// Majority-vote estimate used for the first M-step.
    pub majority: usize,
    /// Label after the single-question E-step.
    pub chosen: usize,
}

impl OnlineState {
    /// Runs batch Fast Dawid-Skene on `initial` and keeps the answer key.
    pub fn init(initial: &Dataset, cfg: &AggregationConfig) -> Result<OnlineState> {
        if initial.num_questions() == 0 {
            return Err(Error::EmptyDataset);
        }
        let result = run_fds(initial, cfg)?;
        let labels = result.labels();
        let counts = HardCounts::from_labels(initial, &labels);
        let parameters = counts.parameters(cfg.smoothing);
        let annotator_index = initial
            .annotator_names()
            .iter()
            .enumerate()
            .map(|(a, n)| (n.clone(), a))
            .collect();
        Ok(OnlineState {
            dataset: initial.clone(),
            labels,
            counts,
            parameters,
            config: cfg.clone(),
            annotator_index,
            ties: seed::rng(cfg.seed, Stream::OnlineTies),
            initial: result,
            questions_ingested: 0,
            new_annotators: 0,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Current answer key, one label per question seen so far.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn parameters(&self) -> &Parameters {
        &self.parameters
    }

    /// The batch result the stream started from.
    pub fn initial_result(&self) -> &AggregationResult {
        &self.initial
    }

    pub fn questions_ingested(&self) -> usize {
        self.questions_ingested
    }

    pub fn new_annotators(&self) -> usize {
        self.new_annotators
    }

    /// Incorporates one question answered by `votes` (annotator name,
    /// option id). Unknown annotators are added on the fly.
    pub fn ingest_question(&mut self, question: &str, votes: &[(&str, usize)]) -> Result<Decision> {
        if votes.is_empty() {
            return Err(Error::EmptyVotes);
        }
        let num_options = self.dataset.num_options();
        let mut fresh = Vec::new();
        let mut dense = Vec::with_capacity(votes.len());
        for &(name, option) in votes {
            if option >= num_options {
                return Err(Error::OptionOutOfRange { option, num_options, line: 0 });
            }
            let next_id = self.annotator_index.len();
            let a = *self.annotator_index.entry(name.to_owned()).or_insert_with(|| {
                fresh.push(name.to_owned());
                next_id
            });
            if dense.iter().any(|&(b, _)| b == a) {
                for name in &fresh {
                    self.annotator_index.remove(name);
                }
                return Err(Error::DuplicateVote {
                    question: question.to_owned(),
                    annotator: name.to_owned(),
                    line: 0,
                });
            }
            dense.push((a, option));
        }
        self.new_annotators += fresh.len();
        self.dataset.push_question(question.to_owned(), &dense, fresh);
        self.counts.grow_annotators(self.dataset.num_annotators());
        let q = self.dataset.num_questions() - 1;

        let mut tally = vec![0; num_options];
        for &(_, l) in &dense {
            tally[l] += 1;
        }
        let majority = majority_label(&tally, &mut self.ties);
        self.counts.add(dense.iter().copied(), majority);
        let provisional = self.counts.parameters(self.config.smoothing);

        let single = Dataset::single_question(&self.dataset, q);
        let chosen = c_step(&e_step_soft(&single, &provisional)?).labels()[0];
        self.counts.remove(dense.iter().copied(), majority);
        self.counts.add(dense.iter().copied(), chosen);
        self.parameters = self.counts.parameters(self.config.smoothing);

        self.labels.push(chosen);
        self.questions_ingested += 1;
        Ok(Decision { question: q, majority, chosen })
    }

    /// Current labels as a hard assignment over the accumulated dataset.
    pub fn assignment(&self) -> Assignment {
        Assignment::from_labels(&self.labels, self.dataset.num_options())
    }
}

impl Dataset {
    /// A one-question view of `d` that keeps all of its annotators.
    pub(crate) fn single_question(d: &Dataset, q: usize) -> Dataset {
        Dataset::from_dense(
            vec![d.question_name(q).to_owned()],
            d.annotator_names().to_vec(),
            d.option_labels().to_vec(),
            vec![d.votes(q).collect()],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::m_step;

    fn unanimous(n: usize) -> Dataset {
        let records = (0..n).flat_map(|q| (0..3).map(move |a| (format!("q{q}"), format!("a{a}"), q % 2)));
        Dataset::from_records(records, None).unwrap()
    }

    #[test]
    fn unanimous_stream() {
        let mut state = OnlineState::init(&unanimous(6), &AggregationConfig::default()).unwrap();
        assert_eq!(state.parameters().confusion_row(0, 0), &[1.0, 0.0]);
        let d = state.ingest_question("new", &[("a0", 1), ("a1", 1), ("a2", 1)]).unwrap();
        assert_eq!(d.chosen, 1);
        assert_eq!(state.labels().len(), 7);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let mut state = OnlineState::init(&unanimous(2), &AggregationConfig::default()).unwrap();
        assert!(matches!(state.ingest_question("x", &[]), Err(Error::EmptyVotes)));
        assert!(matches!(
            state.ingest_question("x", &[("a0", 0), ("a0", 1)]),
            Err(Error::DuplicateVote { .. })
        ));
        assert_eq!(state.dataset().num_questions(), 2);
    }

    #[test]
    fn new_annotator_gets_uniform_rows_for_unseen_classes() {
        let mut state = OnlineState::init(&unanimous(4), &AggregationConfig::default()).unwrap();
        state.ingest_question("n", &[("a0", 0), ("a1", 0), ("zed", 0)]).unwrap();
        assert_eq!(state.new_annotators(), 1);
        let zed = state.dataset().num_annotators() - 1;
        assert_eq!(state.parameters().confusion_row(zed, 0), &[1.0, 0.0]);
        assert_eq!(state.parameters().confusion_row(zed, 1), &[0.5, 0.5]);
    }

    #[test]
    fn parameters_match_a_trailing_full_m_step() {
        let mut state = OnlineState::init(&unanimous(5), &AggregationConfig::default()).unwrap();
        state.ingest_question("s0", &[("a0", 1), ("a1", 0), ("b", 1)]).unwrap();
        state.ingest_question("s1", &[("a2", 0), ("b", 0)]).unwrap();
        let recount = m_step(state.dataset(), &state.assignment(), 0.0).unwrap();
        assert_eq!(state.parameters(), &recount);
    }
}
