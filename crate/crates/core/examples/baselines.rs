//! Majority and random baselines with per-type and per-hop breakdowns.
//!
//! ```bash
//! cargo run --example baselines
//! ```

use rgn::data::{random_baseline, synth_generate, MajorityBaseline, SyntheticSpec};
use rgn::eval::EvalReport;

fn main() -> rgn::Result<()> {
    let data = synth_generate(&SyntheticSpec {
        num_examples: 3000,
        seed: 1,
        ..SyntheticSpec::default()
    })?;
    let (train, test) = data.split_at(2000);

    let majority = MajorityBaseline::fit(train)?;
    let report = EvalReport::new(test, &vec![majority.label; test.len()], "majority")?;
    println!("majority ({}): {:.2}%", majority.label, report.overall.accuracy * 100.0);
    for (qt, acc) in &report.by_question_type {
        println!("  {qt:<12} {:.2}%", acc.accuracy * 100.0);
    }

    let random = random_baseline(test, 42)?;
    let report = EvalReport::new(test, &random.predictions, "random")?;
    println!("random: {:.2}%", report.overall.accuracy * 100.0);
    for (hops, acc) in &report.by_hops {
        println!("  hops={hops} {:.2}% of {}", acc.accuracy * 100.0, acc.total);
    }
    println!("confusion (gold x predicted): {:?}", report.confusion);
    Ok(())
}
