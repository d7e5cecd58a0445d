//! Batch aggregation drivers: majority vote, Dawid-Skene, Fast Dawid-Skene
//! and the Hybrid switch-over.
//!
//! Every EM driver starts from the seeded majority vote. An iteration is one
//! M-step followed by an E-step (and a C-step for the hard phases). After
//! each iteration the trace records the L1 change in class marginals, the
//! negative observed-data log-likelihood of the freshly estimated parameters
//! and, for hard phases, the classification log-likelihood of the new
//! partition under those parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{
    c_step, cml_criterion, e_step_soft_counted, log_likelihood, m_step, majority_vote, Assignment,
    Parameters,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mv,
    Ds,
    Fds,
    Hybrid,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mv, Algorithm::Ds, Algorithm::Fds, Algorithm::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mv => "mv",
            Algorithm::Ds => "ds",
            Algorithm::Fds => "fds",
            Algorithm::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub algorithm: Algorithm,
    /// Stop when the L1 change in class marginals falls below this.
    pub marginal_tolerance: f64,
    /// Hybrid switches from soft to hard iterations below this L1 change.
    pub hybrid_gamma: f64,
    pub max_iterations: usize,
    /// Seeds the majority-vote tie-breaking.
    pub seed: u64,
    /// Additive pseudo-count on every confusion cell.
    pub smoothing: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            algorithm: Algorithm::Fds,
            marginal_tolerance: 1e-4,
            hybrid_gamma: 0.005,
            max_iterations: 100,
            seed: 0,
            smoothing: 0.0,
        }
    }
}

impl AggregationConfig {
    pub fn with_algorithm(&self, algorithm: Algorithm) -> AggregationConfig {
        AggregationConfig { algorithm, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.marginal_tolerance) {
            return Err(Error::InvalidConfig(format!(
                "marginal tolerance {} not in (0, 1)",
                self.marginal_tolerance
            )));
        }
        if !open_unit(self.hybrid_gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} not in (0, 1)", self.hybrid_gamma)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be at least 1".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidConfig(format!("smoothing {} must be >= 0", self.smoothing)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Mv,
    Soft,
    Hard,
}

/// Bookkeeping for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub phase: Phase,
    /// L1 change in class marginals against the previous iteration.
    pub marginal_delta: Option<f64>,
    /// Largest absolute change in any confusion entry. Informational only.
    pub error_rate_delta: Option<f64>,
    pub negative_log_likelihood: f64,
    /// Classification log-likelihood of the hard partition, hard phases only.
    pub cml: Option<f64>,
    /// E-step rows with zero mass on every class.
    pub degenerate_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub algorithm: Algorithm,
    /// Hard labels; soft results are hardened by one terminal C-step.
    pub final_assignment: Assignment,
    /// Soft posteriors behind the final labels (Dawid-Skene only).
    pub posteriors: Option<Assignment>,
    pub parameters: Parameters,
    pub iterations: usize,
    pub converged: bool,
    /// Iteration after which the Hybrid moved to hard iterations.
    pub switch_iteration: Option<usize>,
    pub trace: Vec<TraceEntry>,
    /// Negative observed-data log-likelihood of `parameters`.
    pub negative_log_likelihood: f64,
    pub warnings: Vec<String>,
}

impl AggregationResult {
    pub fn labels(&self) -> Vec<usize> {
        self.final_assignment.labels()
    }

    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.warnings.push(message);
    }
}

/// Sum of absolute differences of two marginal vectors is below `tol`.
pub fn check_convergence(prev: &[f64], cur: &[f64], tol: f64) -> Result<bool> {
    Ok(marginal_delta(prev, cur)? < tol)
}

pub fn marginal_delta(prev: &[f64], cur: &[f64]) -> Result<f64> {
    if prev.len() != cur.len() {
        return Err(Error::DimensionMismatch(format!(
            "marginals of length {} and {}",
            prev.len(),
            cur.len()
        )));
    }
    Ok(prev.iter().zip(cur).map(|(a, b)| (a - b).abs()).sum())
}

/// Runs the algorithm selected in `cfg`.
pub fn aggregate(d: &Dataset, cfg: &AggregationConfig) -> Result<AggregationResult> {
    match cfg.algorithm {
        Algorithm::Mv => run_mv(d, cfg),
        Algorithm::Ds => run_ds(d, cfg),
        Algorithm::Fds => run_fds(d, cfg),
        Algorithm::Hybrid => run_hybrid(d, cfg),
    }
}

pub fn run_mv(d: &Dataset, cfg: &AggregationConfig) -> Result<AggregationResult> {
    cfg.validate()?;
    let t = majority_vote(d, cfg.seed);
    let parameters = m_step(d, &t, cfg.smoothing)?;
    let nll = -log_likelihood(d, &parameters)?;
    let trace = vec![TraceEntry {
        iteration: 1,
        phase: Phase::Mv,
        marginal_delta: None,
        error_rate_delta: None,
        negative_log_likelihood: nll,
        cml: Some(cml_criterion(d, &t, &parameters)?),
        degenerate_rows: 0,
    }];
    Ok(AggregationResult {
        algorithm: Algorithm::Mv,
        final_assignment: t,
        posteriors: None,
        parameters,
        iterations: 1,
        converged: true,
        switch_iteration: None,
        trace,
        negative_log_likelihood: nll,
        warnings: Vec::new(),
    })
}

pub fn run_fds(d: &Dataset, cfg: &AggregationConfig) -> Result<AggregationResult> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let start = majority_vote(d, cfg.seed);
    let hard = hard_phase(d, cfg, start, None, &mut trace, cfg.max_iterations)?;
    let mut result = finish(d, Algorithm::Fds, hard.assignment, None, hard.parameters, hard.converged, trace)?;
    if !result.converged {
        result.warn(format!("fds did not converge within {} iterations", cfg.max_iterations));
    }
    Ok(result)
}

pub fn run_ds(d: &Dataset, cfg: &AggregationConfig) -> Result<AggregationResult> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let start = majority_vote(d, cfg.seed);
    let soft = soft_phase(d, cfg, start, cfg.marginal_tolerance, &mut trace, cfg.max_iterations)?;
    let labels = c_step(&soft.posterior);
    let converged = soft.stopped_at.is_some();
    let mut result = finish(d, Algorithm::Ds, labels, Some(soft.posterior), soft.parameters, converged, trace)?;
    if !converged {
        result.warn(format!("ds did not converge within {} iterations", cfg.max_iterations));
    }
    Ok(result)
}

/// Soft iterations until the marginal change drops below `hybrid_gamma`,
/// then hard iterations to convergence. Both phases share the
/// `max_iterations` budget.
pub fn run_hybrid(d: &Dataset, cfg: &AggregationConfig) -> Result<AggregationResult> {
    cfg.validate()?;
    let mut trace = Vec::new();
    let start = majority_vote(d, cfg.seed);
    let soft = soft_phase(d, cfg, start, cfg.hybrid_gamma, &mut trace, cfg.max_iterations)?;
    let switched = soft.stopped_at.is_some();
    let switch_at = soft.stopped_at.unwrap_or(cfg.max_iterations);
    let hardened = c_step(&soft.posterior);
    let budget = cfg.max_iterations - switch_at;
    let (labels, parameters, converged) = if budget == 0 {
        (hardened, soft.parameters, false)
    } else {
        let hard = hard_phase(d, cfg, hardened, Some(soft.parameters), &mut trace, budget)?;
        (hard.assignment, hard.parameters, hard.converged)
    };
    let mut result = finish(d, Algorithm::Hybrid, labels, None, parameters, converged, trace)?;
    result.switch_iteration = Some(switch_at);
    if !switched {
        result.warn(format!(
            "hybrid soft phase reached {} iterations without the marginal change dropping below {}",
            cfg.max_iterations, cfg.hybrid_gamma
        ));
    }
    if !converged {
        result.warn(format!("hybrid did not converge within {} iterations", cfg.max_iterations));
    }
    Ok(result)
}

fn finish(
    d: &Dataset,
    algorithm: Algorithm,
    final_assignment: Assignment,
    posteriors: Option<Assignment>,
    parameters: Parameters,
    converged: bool,
    trace: Vec<TraceEntry>,
) -> Result<AggregationResult> {
    let negative_log_likelihood = -log_likelihood(d, &parameters)?;
    Ok(AggregationResult {
        algorithm,
        final_assignment,
        posteriors,
        parameters,
        iterations: trace.len(),
        converged,
        switch_iteration: None,
        trace,
        negative_log_likelihood,
        warnings: Vec::new(),
    })
}

struct SoftOutcome {
    posterior: Assignment,
    parameters: Parameters,
    /// Iteration at which the marginal change first fell below the threshold.
    stopped_at: Option<usize>,
}

/// Dawid-Skene iterations from `start`. The stop test needs a predecessor,
/// so it is first evaluated at the second iteration.
fn soft_phase(
    d: &Dataset,
    cfg: &AggregationConfig,
    start: Assignment,
    threshold: f64,
    trace: &mut Vec<TraceEntry>,
    budget: usize,
) -> Result<SoftOutcome> {
    let mut t = start;
    let mut prev: Option<Parameters> = None;
    for _ in 0..budget {
        let params = m_step(d, &t, cfg.smoothing)?;
        let (posterior, degenerate_rows) = e_step_soft_counted(d, &params)?;
        let marginal_delta = prev
            .as_ref()
            .map(|p| marginal_delta(&p.class_marginals, &params.class_marginals))
            .transpose()?;
        trace.push(TraceEntry {
            iteration: trace.len() + 1,
            phase: Phase::Soft,
            marginal_delta,
            error_rate_delta: prev.as_ref().map(|p| p.max_error_rate_delta(&params)),
            negative_log_likelihood: -log_likelihood(d, &params)?,
            cml: None,
            degenerate_rows,
        });
        t = posterior;
        prev = Some(params);
        if marginal_delta.is_some_and(|delta| delta < threshold) {
            return Ok(SoftOutcome { posterior: t, parameters: prev.unwrap(), stopped_at: Some(trace.len()) });
        }
    }
    let parameters = prev.expect("budget of at least one iteration");
    Ok(SoftOutcome { posterior: t, parameters, stopped_at: None })
}

struct HardOutcome {
    assignment: Assignment,
    parameters: Parameters,
    converged: bool,
}

/// Fast Dawid-Skene (M, E, C) iterations from the hard assignment `start`.
///
/// Stops when the marginal change against `prev` drops below the tolerance
/// or when the C-step reproduces the assignment it started from.
fn hard_phase(
    d: &Dataset,
    cfg: &AggregationConfig,
    start: Assignment,
    mut prev: Option<Parameters>,
    trace: &mut Vec<TraceEntry>,
    budget: usize,
) -> Result<HardOutcome> {
    debug_assert!(start.is_hard() && budget > 0);
    let mut t = start;
    for _ in 0..budget {
        let params = m_step(d, &t, cfg.smoothing)?;
        let (posterior, degenerate_rows) = e_step_soft_counted(d, &params)?;
        let next = c_step(&posterior);
        let marginal_delta = prev
            .as_ref()
            .map(|p| marginal_delta(&p.class_marginals, &params.class_marginals))
            .transpose()?;
        trace.push(TraceEntry {
            iteration: trace.len() + 1,
            phase: Phase::Hard,
            marginal_delta,
            error_rate_delta: prev.as_ref().map(|p| p.max_error_rate_delta(&params)),
            negative_log_likelihood: -log_likelihood(d, &params)?,
            cml: Some(cml_criterion(d, &next, &params)?),
            degenerate_rows,
        });
        let stable = next == t;
        let settled = marginal_delta.is_some_and(|delta| delta < cfg.marginal_tolerance);
        t = next;
        if stable || settled {
            return Ok(HardOutcome { assignment: t, parameters: params, converged: true });
        }
        prev = Some(params);
    }
    let parameters = prev.expect("budget of at least one iteration");
    Ok(HardOutcome { assignment: t, parameters, converged: false })
}
