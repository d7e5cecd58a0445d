//! Questions with several correct options.
//!
//! Every (question, option) pair becomes its own binary question whose
//! label is "selected" or "not selected". All pairs are pooled into a single
//! binary task, so one set of annotator parameters covers every option.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::aggregate::{aggregate, AggregationConfig, AggregationResult};
use crate::dataset::{column_indices, csv_parse_error, csv_reader, declared_options, field, parse_option, Dataset};
use crate::error::{Error, Result};

/// Binary option id for a selected option.
pub const SELECTED: usize = 1;
/// Binary option id for an option left unselected.
pub const NOT_SELECTED: usize = 0;

/// One annotator's answer to one question: the set of options selected,
/// possibly empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub annotator: usize,
    pub selected: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiDataset {
    num_options: usize,
    question_names: Vec<String>,
    annotator_names: Vec<String>,
    answers: Vec<Vec<Answer>>,
}

impl MultiDataset {
    /// Builds from dense per-question answers.
    pub fn new(
        num_options: usize,
        question_names: Vec<String>,
        annotator_names: Vec<String>,
        answers: Vec<Vec<Answer>>,
    ) -> Result<MultiDataset> {
        if answers.len() != question_names.len() {
            return Err(Error::DimensionMismatch("one answer list per question".into()));
        }
        if answers.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (q, list) in answers.iter().enumerate() {
            let mut seen = HashSet::new();
            for answer in list {
                if answer.annotator >= annotator_names.len() {
                    return Err(Error::DimensionMismatch(format!("annotator {} out of range", answer.annotator)));
                }
                if let Some(&bad) = answer.selected.iter().find(|&&c| c >= num_options) {
                    return Err(Error::OptionOutOfRange { option: bad, num_options, line: 0 });
                }
                if !seen.insert(answer.annotator) {
                    return Err(Error::DuplicateVote {
                        question: question_names[q].clone(),
                        annotator: annotator_names[answer.annotator].clone(),
                        line: 0,
                    });
                }
            }
        }
        Ok(MultiDataset { num_options, question_names, annotator_names, answers })
    }

    pub fn num_questions(&self) -> usize {
        self.question_names.len()
    }

    pub fn num_annotators(&self) -> usize {
        self.annotator_names.len()
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn answers(&self, q: usize) -> &[Answer] {
        &self.answers[q]
    }

    pub fn question_names(&self) -> &[String] {
        &self.question_names
    }

    pub fn num_answer_events(&self) -> usize {
        self.answers.iter().map(Vec::len).sum()
    }

    /// Reads a `question,annotator,option,selected` CSV.
    ///
    /// An annotator has answered a question as soon as one row mentions the
    /// pair, so rows with `selected = 0` record an explicit "none of these".
    pub fn load_csv(path: impl AsRef<Path>) -> Result<MultiDataset> {
        let path = path.as_ref();
        let text = crate::error::read_input(path)?;
        let declared = declared_options(path, &text)?;
        let mut reader = csv_reader(&text);
        let columns = column_indices(path, &mut reader, &["question", "annotator", "option", "selected"])?;
        let mut questions: HashMap<String, usize> = HashMap::new();
        let mut annotators: HashMap<String, usize> = HashMap::new();
        let mut question_names = Vec::new();
        let mut annotator_names = Vec::new();
        let mut answers: Vec<Vec<Answer>> = Vec::new();
        let mut rows_seen = HashSet::new();
        let mut max_option = None;
        for record in reader.records() {
            let record = record.map_err(|e| csv_parse_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let qname = field(path, &record, columns[0], line)?;
            let aname = field(path, &record, columns[1], line)?;
            let option = parse_option(path, field(path, &record, columns[2], line)?, line)?;
            let selected = match field(path, &record, columns[3], line)? {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::Parse {
                        path: path.to_owned(),
                        line,
                        message: format!("selected must be 0 or 1, got `{other}`"),
                    })
                }
            };
            if let Some(c) = declared {
                if option >= c {
                    return Err(Error::OptionOutOfRange { option, num_options: c, line });
                }
            }
            max_option = max_option.max(Some(option));
            let q = *questions.entry(qname.to_owned()).or_insert_with(|| {
                question_names.push(qname.to_owned());
                answers.push(Vec::new());
                question_names.len() - 1
            });
            let a = *annotators.entry(aname.to_owned()).or_insert_with(|| {
                annotator_names.push(aname.to_owned());
                annotator_names.len() - 1
            });
            if !rows_seen.insert((q, a, option)) {
                return Err(Error::DuplicateVote { question: qname.to_owned(), annotator: aname.to_owned(), line });
            }
            let slot = match answers[q].iter().position(|ans| ans.annotator == a) {
                Some(i) => i,
                None => {
                    answers[q].push(Answer { annotator: a, selected: BTreeSet::new() });
                    answers[q].len() - 1
                }
            };
            if selected {
                answers[q][slot].selected.insert(option);
            }
        }
        let num_options = declared.or(max_option.map(|m| m + 1)).ok_or(Error::EmptyDataset)?;
        MultiDataset::new(num_options, question_names, annotator_names, answers)
    }

    /// Writes one row per (question, annotator, option).
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["question", "annotator", "option", "selected"]).expect("in-memory write");
        for (q, list) in self.answers.iter().enumerate() {
            for answer in list {
                for c in 0..self.num_options {
                    let flag = if answer.selected.contains(&c) { "1" } else { "0" };
                    w.write_record([
                        self.question_names[q].as_str(),
                        &self.annotator_names[answer.annotator],
                        &c.to_string(),
                        flag,
                    ])
                    .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// One binary question per (question, option) pair, at index
    /// `q * C + c`. Every annotator who answered `q` votes on each pair.
    pub fn binarize(&self) -> Dataset {
        let c_count = self.num_options;
        let mut names = Vec::with_capacity(self.num_questions() * c_count);
        let mut per_question = Vec::with_capacity(self.num_questions() * c_count);
        for (q, list) in self.answers.iter().enumerate() {
            for c in 0..c_count {
                names.push(format!("{}/{}", self.question_names[q], c));
                per_question.push(
                    list.iter()
                        .map(|ans| (ans.annotator, if ans.selected.contains(&c) { SELECTED } else { NOT_SELECTED }))
                        .collect(),
                );
            }
        }
        Dataset::from_dense(
            names,
            self.annotator_names.clone(),
            vec![NOT_SELECTED.to_string(), SELECTED.to_string()],
            per_question,
        )
    }

    /// Inverse of [`MultiDataset::binarize`] using this dataset's question
    /// and option frame.
    pub fn regroup(&self, binary: &Dataset) -> Result<MultiDataset> {
        let c_count = self.num_options;
        if binary.num_questions() != self.num_questions() * c_count || binary.num_options() != 2 {
            return Err(Error::DimensionMismatch("binary dataset does not match this frame".into()));
        }
        let mut answers = Vec::with_capacity(self.num_questions());
        for q in 0..self.num_questions() {
            let mut list: Vec<Answer> = binary
                .votes(q * c_count)
                .map(|(a, _)| Answer { annotator: a, selected: BTreeSet::new() })
                .collect();
            for c in 0..c_count {
                for (a, l) in binary.votes(q * c_count + c) {
                    let ans = list
                        .iter_mut()
                        .find(|ans| ans.annotator == a)
                        .ok_or_else(|| Error::DimensionMismatch("annotator missing from an option slice".into()))?;
                    if l == SELECTED {
                        ans.selected.insert(c);
                    }
                }
            }
            answers.push(list);
        }
        MultiDataset::new(
            c_count,
            self.question_names.clone(),
            binary.annotator_names().to_vec(),
            answers,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelResult {
    /// `decisions[q][c]` is true when option `c` is judged correct for `q`.
    pub decisions: Vec<Vec<bool>>,
    pub binary: AggregationResult,
}

impl MultiLabelResult {
    /// Fraction of (question, option) pairs matching `gold`.
    pub fn pair_accuracy(&self, gold: &[Vec<bool>]) -> Result<f64> {
        if gold.len() != self.decisions.len() {
            return Err(Error::DimensionMismatch("gold covers a different number of questions".into()));
        }
        let mut hits = 0usize;
        let mut total = 0usize;
        for (ours, theirs) in self.decisions.iter().zip(gold) {
            if ours.len() != theirs.len() {
                return Err(Error::DimensionMismatch("gold covers a different number of options".into()));
            }
            hits += ours.iter().zip(theirs).filter(|(a, b)| a == b).count();
            total += ours.len();
        }
        if total == 0 {
            return Err(Error::EmptyGold);
        }
        Ok(hits as f64 / total as f64)
    }

    /// `question,option,selected` rows for every pair.
    pub fn to_csv_string(&self, md: &MultiDataset) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["question", "option", "selected"]).expect("in-memory write");
        for (q, row) in self.decisions.iter().enumerate() {
            for (c, &sel) in row.iter().enumerate() {
                w.write_record([md.question_names[q].as_str(), &c.to_string(), if sel { "1" } else { "0" }])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Binarizes, aggregates the pooled binary task, and maps labels back.
pub fn aggregate_multilabel(md: &MultiDataset, cfg: &AggregationConfig) -> Result<MultiLabelResult> {
    let binary = md.binarize();
    let result = aggregate(&binary, cfg)?;
    let labels = result.labels();
    let decisions = labels
        .chunks(md.num_options)
        .map(|row| row.iter().map(|&l| l == SELECTED).collect())
        .collect();
    Ok(MultiLabelResult { decisions, binary: result })
}
