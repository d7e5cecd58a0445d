//! Solve the first questions in batch, then label the rest one at a time
//! without revisiting earlier answers.

use fastds::aggregate::run_fds;
use fastds::bench::{accuracy, simulate, SimulationConfig};
use fastds::online::OnlineState;
use fastds::AggregationConfig;

fn main() -> fastds::Result<()> {
    let (d, gold) = simulate(&SimulationConfig::diagonal(800, 15, 2, 5, 0.8, 4))?;
    let cfg = AggregationConfig::default();
    let initial = 300;

    let mut state = OnlineState::init(&d.head(initial)?, &cfg)?;
    let mut overturned = 0;
    for q in initial..d.num_questions() {
        let votes: Vec<(&str, usize)> = d.votes(q).map(|(a, l)| (d.annotator_name(a), l)).collect();
        let decision = state.ingest_question(d.question_name(q), &votes)?;
        if decision.chosen != decision.majority {
            overturned += 1;
        }
    }

    let batch = run_fds(&d, &cfg)?;
    println!("streamed {} questions, {} majority votes overturned", state.questions_ingested(), overturned);
    println!("online accuracy {:.4}", accuracy(state.labels(), &gold)?);
    println!("batch  accuracy {:.4}", accuracy(&batch.labels(), &gold)?);
    Ok(())
}
