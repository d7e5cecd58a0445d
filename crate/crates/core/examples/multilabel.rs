//! Questions where any subset of options may be correct. Each
//! (question, option) pair becomes a yes/no question in one pooled binary task.

use fastds::bench::{simulate_multilabel, SimulationConfig};
use fastds::multilabel::aggregate_multilabel;
use fastds::{AggregationConfig, Algorithm};

fn main() -> fastds::Result<()> {
    let sim = SimulationConfig::diagonal(400, 12, 6, 5, 0.8, 3);
    let (md, gold) = simulate_multilabel(&sim, 0.3, 0.2)?;
    println!(
        "{} questions x {} options, {} answer events",
        md.num_questions(),
        md.num_options(),
        md.num_answer_events()
    );

    let cfg = AggregationConfig::default();
    for alg in Algorithm::ALL {
        let r = aggregate_multilabel(&md, &cfg.with_algorithm(alg))?;
        println!("{:<7} pair accuracy {:.4}", alg.name(), r.pair_accuracy(&gold)?);
    }

    let r = aggregate_multilabel(&md, &cfg)?;
    print!("{}", r.to_csv_string(&md).lines().take(7).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
