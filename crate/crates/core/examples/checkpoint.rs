//! Stop a replay halfway, persist the rule base, and resume from disk.

use egfc::classifier::RuleBase;
use egfc::features::N_ATTRIBUTES;
use egfc::pipeline::{self, ReplayOptions, RunConfig};
use egfc::synth::{generate, SynthConfig};
use egfc::N_CLASSES;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = generate(&SynthConfig::benchmark(400 * 60, 4))?.rate_series();
    let samples = pipeline::prepare_series(&series, &RunConfig::default())?.samples();
    let (head, tail) = samples.split_at(samples.len() / 2);

    let mut model = RuleBase::new(N_ATTRIBUTES, N_CLASSES, Default::default())?;
    let first = pipeline::replay(head, &mut model, ReplayOptions::default())?;
    let path = std::env::temp_dir().join("egfc-example-checkpoint.json");
    model.save(&path)?;
    println!(
        "saved {} rules after {} steps to {} (acc so far {:.3})",
        model.len(),
        model.step(),
        path.display(),
        first.metrics.acc
    );

    let mut resumed = RuleBase::load(&path)?;
    let second = pipeline::replay(tail, &mut resumed, ReplayOptions::default())?;
    println!(
        "resumed at step {}, finished at {} with {} rules (acc on the second half {:.3})",
        model.step(),
        resumed.step(),
        resumed.len(),
        second.metrics.acc
    );
    std::fs::remove_file(&path)?;
    Ok(())
}
