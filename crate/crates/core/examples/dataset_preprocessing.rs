//! Class removal, minimum-annotator filtering and subsampling, with gold
//! labels carried along.

use fastds::bench::{simulate, SimulationConfig};
use fastds::Dataset;

fn describe(tag: &str, d: &Dataset) {
    println!(
        "{tag:<22} {:>5} questions {:>3} annotators {} options {:>6} votes",
        d.num_questions(),
        d.num_annotators(),
        d.num_options(),
        d.num_votes()
    );
}

fn main() -> fastds::Result<()> {
    let (d, gold) = simulate(&SimulationConfig::diagonal(500, 10, 3, 4, 0.9, 2))?;
    describe("loaded", &d);

    let (no_two, dropped) = d.remove_class_counted(2)?;
    describe("without option 2", &no_two);
    println!("  {dropped} questions had only votes for option 2");

    let filtered = no_two.filter_min_annotators(3)?;
    describe("at least 3 votes", &filtered);

    let sub = filtered.subsample_annotators(2, 0)?;
    describe("2 votes per question", &sub);

    let gold = gold.realign(&d, &sub);
    println!("gold still covers {} of {} questions", gold.covered(), sub.num_questions());

    let csv = sub.to_csv_string();
    print!("{}", csv.lines().take(5).map(|l| format!("  {l}\n")).collect::<String>());
    Ok(())
}
