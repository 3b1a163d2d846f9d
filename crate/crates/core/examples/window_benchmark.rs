//! Accuracy, rule count and replay time per window length on a synthetic
//! 1,436-hour log stream, five shuffled replays each.
//!
//! ```text
//! cargo run --release --example window_benchmark [hours] [seed]
//! ```

use egfc::ingest::{ingest_lines, DEFAULT_TIMESTAMP_FORMAT};
use egfc::pipeline::{self, RunConfig, DEFAULT_WINDOWS};
use egfc::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let hours: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1436);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1);

    let stream = generate(&SynthConfig::benchmark(hours * 60, seed))?;
    let (series, stats) = ingest_lines(stream.lines(), DEFAULT_TIMESTAMP_FORMAT);
    let series = series.ok_or("empty stream")?;
    println!(
        "{} lines over {} minutes, {} anomaly segments",
        stats.parsed,
        series.len(),
        stream.segments.len()
    );

    let mut rows = Vec::new();
    for window in DEFAULT_WINDOWS {
        let cfg = RunConfig {
            window_minutes: window,
            ..Default::default()
        };
        let ds = pipeline::prepare_series(&series, &cfg)?;
        let mut counts = [0usize; 4];
        for v in &ds.vectors {
            counts[v.label.map_or(0, |c| c.0 as usize - 1)] += 1;
        }
        println!("{window:>3} min: {} samples, class counts {counts:?}", ds.vectors.len());
        let (summary, _) = pipeline::run_dataset(&ds.samples(), &cfg, None)?;
        rows.push(summary);
    }
    print!("{}", pipeline::format_table(&rows));
    Ok(())
}
