//! Generates oracle-labeled influence-graph questions and prints a few
//! together with the split statistics.
//!
//! ```bash
//! cargo run --example synthetic_task -- [seed]
//! ```

use rgn::data::{stats, synth_generate, FieldMap, SyntheticSpec};

fn main() -> rgn::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let spec = SyntheticSpec {
        num_examples: 300,
        num_entities: 5,
        max_hops: 3,
        seed,
        ..SyntheticSpec::default()
    };
    let data = synth_generate(&spec)?;
    for ex in data.iter().take(4) {
        println!("{}", ex.question);
        for step in &ex.paragraph {
            println!("    {step}");
        }
        println!(
            "    -> {} ({} hops)\n",
            ex.label.expect("synthetic data is labeled"),
            ex.hops.unwrap_or(0)
        );
    }
    println!("{}", serde_json::to_string_pretty(&stats(&data))?);
    println!("\nas a WIQA record:");
    println!("{}", FieldMap::default().to_record(&data[0]));
    Ok(())
}
