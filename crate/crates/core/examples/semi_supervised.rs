//! Accuracy as labels get scarcer. Unlabeled samples still shape the rules;
//! their classes are filled in when a labeled sample activates them.
//!
//! ```text
//! cargo run --release --example semi_supervised [hours]
//! ```

use egfc::pipeline::{self, RunConfig};
use egfc::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hours: u64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(1436);
    let series = generate(&SynthConfig::benchmark(hours * 60, 2))?.rate_series();
    let samples = pipeline::prepare_series(&series, &RunConfig::default())?.samples();

    println!("label fraction | acc (%)        | rules");
    for fraction in [1.0, 0.5, 0.2, 0.05] {
        let cfg = RunConfig {
            label_fraction: fraction,
            ..Default::default()
        };
        let (s, _) = pipeline::run_dataset(&samples, &cfg, None)?;
        println!(
            "{fraction:>14} | {:>6.2} ± {:<5.2} | {:.1}",
            100.0 * s.acc.mean,
            100.0 * s.acc.dev,
            s.rules.mean
        );
    }
    Ok(())
}
