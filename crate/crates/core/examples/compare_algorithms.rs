//! Planted data with a mix of reliable and unreliable annotators, where
//! modelling per-annotator confusion pays off over majority vote.

use fastds::bench::{accuracy, simulate, timed, Confusion, SimulationConfig};
use fastds::{AggregationConfig, Algorithm};

fn main() -> fastds::Result<()> {
    let annotators = 30;
    let accuracies = (0..annotators).map(|a| if a % 3 == 0 { 0.9 } else { 0.45 }).collect();
    let sim = SimulationConfig {
        questions: 3000,
        annotators,
        options: 4,
        votes_per_question: 5,
        prior: Some(vec![0.4, 0.3, 0.2, 0.1]),
        confusion: Confusion::PerAnnotator(accuracies),
        seed: 7,
    };
    let (d, gold) = simulate(&sim)?;

    println!("{:<7} {:>9} {:>6} {:>12} {:>9}", "alg", "accuracy", "iters", "nll", "ms");
    let cfg = AggregationConfig::default();
    for alg in Algorithm::ALL {
        let (r, elapsed) = timed(&d, &cfg.with_algorithm(alg))?;
        println!(
            "{:<7} {:>9.4} {:>6} {:>12.2} {:>9.1}",
            alg.name(),
            accuracy(&r.labels(), &gold)?,
            r.iterations,
            r.negative_log_likelihood,
            elapsed.as_secs_f64() * 1e3
        );
    }
    Ok(())
}
