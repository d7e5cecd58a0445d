//! Per-iteration trace of the Hybrid: soft iterations until the class
//! marginals settle below gamma, then hard iterations.

use fastds::aggregate::{run_hybrid, Phase};
use fastds::bench::{simulate, SimulationConfig};
use fastds::AggregationConfig;

fn main() -> fastds::Result<()> {
    let (d, _) = simulate(&SimulationConfig::diagonal(2000, 25, 3, 4, 0.65, 1))?;
    let cfg = AggregationConfig { hybrid_gamma: 0.01, ..AggregationConfig::default() };
    let r = run_hybrid(&d, &cfg)?;

    println!("iter phase  marginal-delta  pi-delta   -loglik      cml");
    for t in &r.trace {
        let phase = match t.phase {
            Phase::Mv => "mv",
            Phase::Soft => "soft",
            Phase::Hard => "hard",
        };
        let opt = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$e}"));
        println!(
            "{:>4} {:<6} {:>14} {:>9} {:>10.3} {:>12}",
            t.iteration,
            phase,
            opt(t.marginal_delta, 2),
            opt(t.error_rate_delta, 1),
            t.negative_log_likelihood,
            t.cml.map_or("-".into(), |c| format!("{c:.3}"))
        );
    }
    println!("switched after iteration {:?}, converged {}", r.switch_iteration, r.converged);
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
