//! Raw log lines to a labeled dataset: ingest, window, tag, featurize.
//!
//! ```text
//! cargo run --example log_pipeline [path/to/log]
//! ```
//!
//! Without a path a two-day synthetic log is used.

use std::fs::File;
use std::io::{self, BufReader, Write};

use egfc::pipeline::{self, RunConfig};
use egfc::synth::{generate, AnomalySegment, RateEffect, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig {
        window_minutes: 30,
        ..Default::default()
    };
    let (ds, stats) = match std::env::args().nth(1) {
        Some(path) => pipeline::prepare_log(BufReader::new(File::open(path)?), &cfg)?,
        None => {
            let stream = generate(&SynthConfig {
                seed: 3,
                duration_minutes: 48 * 60,
                anomaly_segments: vec![AnomalySegment {
                    start_minute: 30 * 60,
                    end_minute: 33 * 60,
                    severity: 4,
                    effect: RateEffect::Multiplier(3.0),
                }],
                ..Default::default()
            })?;
            let mut log = Vec::new();
            stream.write_log(&mut log)?;
            pipeline::prepare_log(log.as_slice(), &cfg)?
        }
    };
    println!(
        "{} lines read, {} parsed, {} skipped, {} late",
        stats.lines, stats.parsed, stats.skipped, stats.late_dropped
    );
    println!(
        "chart: mean {:.2} sigma {:.2} over {} windows",
        ds.chart.mean_of_means(),
        ds.chart.sigma(),
        ds.vectors.len()
    );
    for v in ds.vectors.iter().filter(|v| v.label.is_some_and(|c| c.0 > 1)) {
        println!("{} class {} raw {:.1?}", v.window_start, v.label.unwrap(), v.raw);
    }
    let mut out = io::stdout().lock();
    writeln!(out, "\nfirst rows of the dataset:")?;
    let mut csv = Vec::new();
    ds.write_csv(&mut csv)?;
    for line in String::from_utf8(csv)?.lines().take(4) {
        writeln!(out, "{line}")?;
    }
    Ok(())
}
