//! Vote tables, gold labels, and the preprocessing steps applied before
//! aggregation (minimum-annotator filtering, annotator subsampling and class
//! removal).
//!
//! Questions and annotators carry their original string ids in sidecar
//! tables; the estimation code only ever sees dense `0..n` indices. Option
//! ids in files are non-negative integers. Their original spelling is kept
//! as a label so gold files keep resolving after a class has been removed.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// An immutable table of single-choice votes.
///
/// Votes are stored grouped by question in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_options: usize,
    offsets: Vec<usize>,
    annotators: Vec<usize>,
    options: Vec<usize>,
    question_names: Vec<String>,
    annotator_names: Vec<String>,
    option_labels: Vec<String>,
}

impl Dataset {
    pub fn num_questions(&self) -> usize {
        self.question_names.len()
    }

    pub fn num_annotators(&self) -> usize {
        self.annotator_names.len()
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn num_votes(&self) -> usize {
        self.annotators.len()
    }

    /// `(annotator, option)` pairs for question `q`, in file order.
    pub fn votes(&self, q: usize) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        let range = self.offsets[q]..self.offsets[q + 1];
        self.annotators[range.clone()]
            .iter()
            .copied()
            .zip(self.options[range].iter().copied())
    }

    pub fn num_votes_on(&self, q: usize) -> usize {
        self.offsets[q + 1] - self.offsets[q]
    }

    /// Per-option vote tally for question `q`.
    pub fn tally(&self, q: usize) -> Vec<usize> {
        let mut counts = vec![0; self.num_options];
        for (_, l) in self.votes(q) {
            counts[l] += 1;
        }
        counts
    }

    pub fn question_name(&self, q: usize) -> &str {
        &self.question_names[q]
    }

    pub fn annotator_name(&self, a: usize) -> &str {
        &self.annotator_names[a]
    }

    pub fn option_label(&self, c: usize) -> &str {
        &self.option_labels[c]
    }

    pub fn question_names(&self) -> &[String] {
        &self.question_names
    }

    pub fn annotator_names(&self) -> &[String] {
        &self.annotator_names
    }

    pub fn option_labels(&self) -> &[String] {
        &self.option_labels
    }

    pub fn option_index(&self, label: &str) -> Option<usize> {
        self.option_labels.iter().position(|l| l == label)
    }

    /// Builds a dataset from `(question, annotator, option)` records.
    ///
    /// Ids are densified by first appearance. `num_options` overrides the
    /// inferred option count (`1 + max option`).
    pub fn from_records<Q, A>(
        records: impl IntoIterator<Item = (Q, A, usize)>,
        num_options: Option<usize>,
    ) -> Result<Dataset>
    where
        Q: AsRef<str>,
        A: AsRef<str>,
    {
        let mut builder = Builder::new(num_options);
        for (i, (q, a, c)) in records.into_iter().enumerate() {
            builder.push(q.as_ref(), a.as_ref(), c, i as u64 + 1)?;
        }
        builder.finish()
    }

    pub fn load(path: impl AsRef<Path>, format: Format) -> Result<Dataset> {
        let path = path.as_ref();
        match format {
            Format::Csv => Dataset::load_csv(path),
            Format::Json => Dataset::load_json(path),
        }
    }

    /// Reads a `question,annotator,option` CSV.
    ///
    /// A leading `# options: N` comment line declares the option count.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = crate::error::read_input(path)?;
        let declared = declared_options(path, &text)?;
        let mut builder = Builder::new(declared);
        let mut reader = csv_reader(&text);
        let columns = column_indices(path, &mut reader, &["question", "annotator", "option"])?;
        for record in reader.records() {
            let record = record.map_err(|e| csv_parse_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let q = field(path, &record, columns[0], line)?;
            let a = field(path, &record, columns[1], line)?;
            let c = parse_option(path, field(path, &record, columns[2], line)?, line)?;
            builder.push(q, a, c, line)?;
        }
        builder.finish()
    }

    /// Reads either a JSON array of `{question, annotator, option}` objects
    /// or an object `{"num_options": N, "votes": [...]}`.
    ///
    /// Error positions are 1-based record indices.
    pub fn load_json(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = crate::error::read_input(path)?;
        let doc: JsonVotes = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        let (declared, votes) = match doc {
            JsonVotes::Bare(votes) => (None, votes),
            JsonVotes::WithHeader { num_options, votes } => (num_options, votes),
        };
        let mut builder = Builder::new(declared);
        for (i, v) in votes.iter().enumerate() {
            builder.push(&v.question.to_string(), &v.annotator.to_string(), v.option, i as u64 + 1)?;
        }
        builder.finish()
    }

    /// Writes the dataset as CSV with dense option ids.
    ///
    /// Reloading the file yields an identical dataset when option labels are
    /// the dense ids themselves (always the case for freshly loaded data).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let max_seen = self.options.iter().copied().max().unwrap_or(0);
        if max_seen + 1 != self.num_options {
            out.push_str(&format!("# options: {}\n", self.num_options));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["question", "annotator", "option"]).expect("in-memory write");
        for q in 0..self.num_questions() {
            for (a, l) in self.votes(q) {
                w.write_record([
                    self.question_names[q].as_str(),
                    self.annotator_names[a].as_str(),
                    &l.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
        out
    }

    /// Keeps only questions with at least `threshold` votes.
    pub fn filter_min_annotators(&self, threshold: usize) -> Result<Dataset> {
        if threshold == 0 {
            return Err(Error::InvalidConfig("threshold must be at least 1".into()));
        }
        let kept = (0..self.num_questions())
            .filter(|&q| self.num_votes_on(q) >= threshold)
            .map(|q| (q, self.votes(q).collect::<Vec<_>>()));
        self.rebuild(kept, self.option_labels.clone(), self.num_options)
    }

    /// Keeps exactly `k` votes per question, chosen uniformly without
    /// replacement. Surviving votes keep their file order.
    pub fn subsample_annotators(&self, k: usize, seed: u64) -> Result<Dataset> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if let Some(q) = (0..self.num_questions()).find(|&q| self.num_votes_on(q) < k) {
            return Err(Error::InsufficientVotes {
                question: self.question_names[q].clone(),
                have: self.num_votes_on(q),
                need: k,
            });
        }
        let mut rng = seed::rng(seed, Stream::Subsample);
        let mut questions = Vec::with_capacity(self.num_questions());
        for q in 0..self.num_questions() {
            let votes: Vec<_> = self.votes(q).collect();
            let mut picked = index::sample(&mut rng, votes.len(), k).into_vec();
            picked.sort_unstable();
            questions.push((q, picked.into_iter().map(|i| votes[i]).collect()));
        }
        self.rebuild(questions, self.option_labels.clone(), self.num_options)
    }

    /// Drops every vote for `dead_option` and re-densifies the option ids.
    pub fn remove_class(&self, dead_option: usize) -> Result<Dataset> {
        self.remove_class_counted(dead_option).map(|(d, _)| d)
    }

    /// Like [`Dataset::remove_class`], also returning how many questions
    /// were dropped because every vote on them went to the removed class.
    pub fn remove_class_counted(&self, dead_option: usize) -> Result<(Dataset, usize)> {
        if dead_option >= self.num_options || self.num_options == 1 {
            return Err(Error::InvalidClass(dead_option));
        }
        let mut dropped = 0;
        let mut questions = Vec::with_capacity(self.num_questions());
        for q in 0..self.num_questions() {
            let votes: Vec<_> = self
                .votes(q)
                .filter(|&(_, l)| l != dead_option)
                .map(|(a, l)| (a, if l > dead_option { l - 1 } else { l }))
                .collect();
            if votes.is_empty() {
                dropped += 1;
            } else {
                questions.push((q, votes));
            }
        }
        let mut labels = self.option_labels.clone();
        labels.remove(dead_option);
        let d = self.rebuild(questions, labels, self.num_options - 1)?;
        Ok((d, dropped))
    }

    /// The first `n` questions, as used to seed a stream.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        let kept = (0..n.min(self.num_questions())).map(|q| (q, self.votes(q).collect::<Vec<_>>()));
        self.rebuild(kept, self.option_labels.clone(), self.num_options)
    }

    /// Rebuilds from a subset of this dataset's questions, re-densifying
    /// annotator ids in ascending old-id order.
    fn rebuild(
        &self,
        questions: impl IntoIterator<Item = (usize, Vec<(usize, usize)>)>,
        option_labels: Vec<String>,
        num_options: usize,
    ) -> Result<Dataset> {
        let questions: Vec<_> = questions.into_iter().collect();
        if questions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut used = vec![false; self.num_annotators()];
        for (_, votes) in &questions {
            for &(a, _) in votes {
                used[a] = true;
            }
        }
        let mut remap = vec![usize::MAX; used.len()];
        let mut annotator_names = Vec::new();
        for (old, _) in used.iter().enumerate().filter(|(_, u)| **u) {
            remap[old] = annotator_names.len();
            annotator_names.push(self.annotator_names[old].clone());
        }
        let mut d = Dataset {
            num_options,
            offsets: vec![0],
            annotators: Vec::new(),
            options: Vec::new(),
            question_names: Vec::with_capacity(questions.len()),
            annotator_names,
            option_labels,
        };
        for (q, votes) in questions {
            d.question_names.push(self.question_names[q].clone());
            for (a, l) in votes {
                d.annotators.push(remap[a]);
                d.options.push(l);
            }
            d.offsets.push(d.annotators.len());
        }
        Ok(d)
    }

    /// Builds a dataset from already-dense parts. Used by the simulator and
    /// the multi-label binarizer.
    pub(crate) fn from_dense(
        question_names: Vec<String>,
        annotator_names: Vec<String>,
        option_labels: Vec<String>,
        per_question: Vec<Vec<(usize, usize)>>,
    ) -> Dataset {
        debug_assert_eq!(question_names.len(), per_question.len());
        let mut offsets = Vec::with_capacity(per_question.len() + 1);
        offsets.push(0);
        let mut annotators = Vec::new();
        let mut options = Vec::new();
        for votes in per_question {
            for (a, l) in votes {
                debug_assert!(a < annotator_names.len() && l < option_labels.len());
                annotators.push(a);
                options.push(l);
            }
            offsets.push(annotators.len());
        }
        Dataset {
            num_options: option_labels.len(),
            offsets,
            annotators,
            options,
            question_names,
            annotator_names,
            option_labels,
        }
    }

    /// Appends one question. Annotator ids at or beyond the current count
    /// must be introduced through `new_annotators`, in order.
    pub(crate) fn push_question(
        &mut self,
        name: String,
        votes: &[(usize, usize)],
        new_annotators: impl IntoIterator<Item = String>,
    ) {
        self.annotator_names.extend(new_annotators);
        self.question_names.push(name);
        for &(a, l) in votes {
            debug_assert!(a < self.annotator_names.len() && l < self.num_options);
            self.annotators.push(a);
            self.options.push(l);
        }
        self.offsets.push(self.annotators.len());
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonVotes {
    Bare(Vec<JsonVote>),
    WithHeader {
        num_options: Option<usize>,
        votes: Vec<JsonVote>,
    },
}

#[derive(Deserialize)]
struct JsonVote {
    question: JsonId,
    annotator: JsonId,
    option: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonId {
    Text(String),
    Number(serde_json::Number),
}

impl std::fmt::Display for JsonId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JsonId::Text(s) => f.write_str(s),
            JsonId::Number(n) => write!(f, "{n}"),
        }
    }
}

struct Builder {
    declared: Option<usize>,
    questions: HashMap<String, usize>,
    annotators: HashMap<String, usize>,
    question_names: Vec<String>,
    annotator_names: Vec<String>,
    per_question: Vec<Vec<(usize, usize)>>,
    seen: HashSet<(usize, usize)>,
    max_option: Option<usize>,
}

impl Builder {
    fn new(declared: Option<usize>) -> Builder {
        Builder {
            declared,
            questions: HashMap::new(),
            annotators: HashMap::new(),
            question_names: Vec::new(),
            annotator_names: Vec::new(),
            per_question: Vec::new(),
            seen: HashSet::new(),
            max_option: None,
        }
    }

    fn push(&mut self, question: &str, annotator: &str, option: usize, line: u64) -> Result<()> {
        if let Some(c) = self.declared {
            if option >= c {
                return Err(Error::OptionOutOfRange { option, num_options: c, line });
            }
        }
        let q = intern(&mut self.questions, &mut self.question_names, question);
        let a = intern(&mut self.annotators, &mut self.annotator_names, annotator);
        if q == self.per_question.len() {
            self.per_question.push(Vec::new());
        }
        if !self.seen.insert((q, a)) {
            return Err(Error::DuplicateVote {
                question: question.to_owned(),
                annotator: annotator.to_owned(),
                line,
            });
        }
        self.per_question[q].push((a, option));
        self.max_option = self.max_option.max(Some(option));
        Ok(())
    }

    fn finish(self) -> Result<Dataset> {
        let Some(max_option) = self.max_option else {
            return Err(Error::EmptyDataset);
        };
        let num_options = self.declared.unwrap_or(max_option + 1);
        let labels = (0..num_options).map(|c| c.to_string()).collect();
        Ok(Dataset::from_dense(self.question_names, self.annotator_names, labels, self.per_question))
    }
}

fn intern(map: &mut HashMap<String, usize>, names: &mut Vec<String>, key: &str) -> usize {
    if let Some(&i) = map.get(key) {
        return i;
    }
    let i = names.len();
    map.insert(key.to_owned(), i);
    names.push(key.to_owned());
    i
}

/// Ground-truth labels for a subset of a dataset's questions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldLabels {
    labels: Vec<Option<usize>>,
}

impl GoldLabels {
    pub fn new(labels: Vec<Option<usize>>) -> GoldLabels {
        GoldLabels { labels }
    }

    pub fn complete(labels: &[usize]) -> GoldLabels {
        GoldLabels { labels: labels.iter().map(|&l| Some(l)).collect() }
    }

    pub fn get(&self, q: usize) -> Option<usize> {
        self.labels.get(q).copied().flatten()
    }

    pub fn num_questions(&self) -> usize {
        self.labels.len()
    }

    pub fn covered(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels.iter().enumerate().filter_map(|(q, l)| l.map(|l| (q, l)))
    }

    /// Reads a `question,label` CSV against `dataset`'s question names and
    /// option labels.
    pub fn load_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<GoldLabels> {
        let path = path.as_ref();
        let text = crate::error::read_input(path)?;
        let index: HashMap<&str, usize> = dataset
            .question_names()
            .iter()
            .enumerate()
            .map(|(q, n)| (n.as_str(), q))
            .collect();
        let mut labels = vec![None; dataset.num_questions()];
        let mut reader = csv_reader(&text);
        let columns = column_indices(path, &mut reader, &["question", "label"])?;
        for record in reader.records() {
            let record = record.map_err(|e| csv_parse_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            let name = field(path, &record, columns[0], line)?;
            let label = field(path, &record, columns[1], line)?;
            let q = *index.get(name).ok_or_else(|| Error::UnknownQuestion(name.to_owned()))?;
            let c = dataset
                .option_index(label)
                .ok_or_else(|| Error::UnknownOption(label.to_owned()))?;
            labels[q] = Some(c);
        }
        Ok(GoldLabels { labels })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
        fs::write(path, self.to_csv_string(dataset))?;
        Ok(())
    }

    pub fn to_csv_string(&self, dataset: &Dataset) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["question", "label"]).expect("in-memory write");
        for (q, l) in self.iter() {
            w.write_record([dataset.question_name(q), dataset.option_label(l)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Carries labels from `from`'s ids over to `to`'s ids by question name
    /// and option label. Questions or classes absent from `to` are dropped.
    pub fn realign(&self, from: &Dataset, to: &Dataset) -> GoldLabels {
        let index: HashMap<&str, usize> = from
            .question_names()
            .iter()
            .enumerate()
            .map(|(q, n)| (n.as_str(), q))
            .collect();
        let labels = to
            .question_names()
            .iter()
            .map(|name| {
                let old = self.get(*index.get(name.as_str())?)?;
                to.option_index(from.option_label(old))
            })
            .collect();
        GoldLabels { labels }
    }
}

pub(crate) fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub(crate) fn column_indices(
    path: &Path,
    reader: &mut csv::Reader<&[u8]>,
    names: &[&str],
) -> Result<Vec<usize>> {
    let headers = reader.headers().map_err(|e| csv_parse_error(path, e))?.clone();
    names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!("missing column `{name}` in header"),
            })
        })
        .collect()
}

pub(crate) fn field<'r>(
    path: &Path,
    record: &'r csv::StringRecord,
    column: usize,
    line: u64,
) -> Result<&'r str> {
    record.get(column).ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("missing field {}", column + 1),
    })
}

pub(crate) fn parse_option(path: &Path, text: &str, line: u64) -> Result<usize> {
    text.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        message: format!("option `{text}` is not a non-negative integer"),
    })
}

pub(crate) fn csv_parse_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { path: path.to_owned(), line, message: e.to_string() }
}

/// Parses an optional `# options: N` (or `# options=N`) line at the top.
pub(crate) fn declared_options(path: &Path, text: &str) -> Result<Option<usize>> {
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            break;
        };
        let comment = comment.trim();
        if let Some(rest) = comment.strip_prefix("options") {
            let value = rest.trim_start_matches([':', '=', ' ']).trim();
            return value.parse().map(Some).map_err(|_| Error::Parse {
                path: PathBuf::from(path),
                line: i as u64 + 1,
                message: format!("bad option count `{value}`"),
            });
        }
    }
    Ok(None)
}
