//! One Fast Dawid-Skene step by hand: majority vote, M-step, E-step and
//! C-step, checking that the classification likelihood does not drop.

use fastds::estimation::{c_step, cml_criterion, e_step_soft, log_likelihood, m_step, majority_vote};
use fastds::Dataset;

fn main() -> fastds::Result<()> {
    let records = [
        ("q1", "a", 0), ("q1", "b", 0), ("q1", "c", 1),
        ("q2", "a", 1), ("q2", "b", 1), ("q2", "c", 1),
        ("q3", "a", 0), ("q3", "b", 1), ("q3", "c", 1),
        ("q4", "a", 0), ("q4", "b", 0), ("q4", "c", 0),
        ("q5", "a", 1), ("q5", "b", 0),
    ];
    let d = Dataset::from_records(records, None)?;

    let t0 = majority_vote(&d, 0);
    let params = m_step(&d, &t0, 0.0)?;
    println!("class marginals {:?}", params.class_marginals);
    for a in 0..d.num_annotators() {
        println!("  {}: {:?} {:?}", d.annotator_name(a), params.confusion_row(a, 0), params.confusion_row(a, 1));
    }

    let soft = e_step_soft(&d, &params)?;
    let t1 = c_step(&soft);
    for q in 0..d.num_questions() {
        println!("{} posterior {:.3?} -> {}", d.question_name(q), soft.row(q), t1.labels()[q]);
    }

    println!("log-likelihood {:.4}", log_likelihood(&d, &params)?);
    println!("C2 before {:.4} after {:.4}", cml_criterion(&d, &t0, &params)?, cml_criterion(&d, &t1, &params)?);
    Ok(())
}
