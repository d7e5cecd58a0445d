//! Accuracy, likelihood and iterations as the number of annotators per
//! question grows, with SVG panels written to a directory.
//!
//! ```text
//! cargo run --example annotator_sweep -- [plot-dir]
//! ```

use fastds::bench::{simulate, speedup_report, sweep_annotators, Confusion, SimulationConfig, SweepConfig};
use fastds::plot::plot_sweep;
use fastds::{AggregationConfig, Algorithm};

fn main() -> fastds::Result<()> {
    let accuracies = (0..20).map(|a| 0.35 + 0.03 * a as f64).collect();
    let sim = SimulationConfig {
        confusion: Confusion::PerAnnotator(accuracies),
        ..SimulationConfig::diagonal(1500, 20, 4, 9, 0.0, 11)
    };
    let (d, gold) = simulate(&sim)?;
    let cfg = SweepConfig {
        algorithms: Algorithm::ALL.to_vec(),
        base: AggregationConfig::default(),
        k_max: 9,
        repeats: 3,
        record_timing: true,
    };
    let report = sweep_annotators(&d, &gold, &cfg)?;
    print!("{}", report.to_csv_string());

    let s = speedup_report(&report, "ds", "fds")?;
    println!("ds/fds iteration ratio {:.2}, time ratio {:?}", s.iteration_ratio, s.time_ratio);

    let dir = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("fastds-sweep").display().to_string());
    for p in plot_sweep(&report, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
