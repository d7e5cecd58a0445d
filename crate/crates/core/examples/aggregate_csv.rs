//! Aggregate a votes file with every algorithm and score against gold.
//!
//! ```text
//! cargo run --example aggregate_csv -- [votes.csv] [gold.csv]
//! ```

use std::path::PathBuf;

use fastds::bench::accuracy;
use fastds::dataset::Format;
use fastds::{aggregate, AggregationConfig, Algorithm, Dataset, GoldLabels};

fn main() -> fastds::Result<()> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args_os().skip(1).map(PathBuf::from);
    let votes = args.next().unwrap_or_else(|| data.join("votes.csv"));
    let gold = args.next().or_else(|| Some(data.join("gold.csv")).filter(|p| p.exists()));

    let d = Dataset::load(&votes, Format::from_path(&votes))?;
    let gold = gold.map(|g| GoldLabels::load_csv(g, &d)).transpose()?;
    println!(
        "{}: {} questions, {} annotators, {} options, {} votes",
        votes.display(),
        d.num_questions(),
        d.num_annotators(),
        d.num_options(),
        d.num_votes()
    );

    let cfg = AggregationConfig::default();
    for alg in Algorithm::ALL {
        let r = aggregate(&d, &cfg.with_algorithm(alg))?;
        let acc = match &gold {
            Some(g) => format!("{:.4}", accuracy(&r.labels(), g)?),
            None => "-".into(),
        };
        println!(
            "{:<7} iterations {:>3}  converged {:<5}  nll {:>10.3}  accuracy {acc}",
            alg.name(),
            r.iterations,
            r.converged,
            r.negative_log_likelihood
        );
    }

    let fds = aggregate(&d, &cfg)?;
    for (q, label) in fds.labels().into_iter().enumerate().take(10) {
        println!("  {} -> {}", d.question_name(q), d.option_label(label));
    }
    Ok(())
}
