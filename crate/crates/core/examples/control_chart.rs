//! Tag window means against a control chart, fitted once (batch) or
//! maintained online (streaming).

use egfc::ChartModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> egfc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(100.0, 10.0).expect("valid parameters");
    let mut means: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
    means.extend([135.0, 62.0, 180.0]);

    let batch = ChartModel::fit(&means)?;
    println!(
        "batch chart: mean {:.2}, sigma {:.2}",
        batch.mean_of_means(),
        batch.sigma()
    );
    let mut counts = [0usize; 4];
    for &m in &means {
        counts[batch.tag(m).0 as usize - 1] += 1;
    }
    println!("class counts: {counts:?}");

    let mut online = ChartModel::streaming();
    for &m in &means[..means.len() - 3] {
        online.tag_then_update(m)?;
    }
    for &m in &means[means.len() - 3..] {
        println!(
            "mean {m:>6.1}: batch class {}, streaming class {}",
            batch.tag(m),
            online.tag_then_update(m)?
        );
    }
    Ok(())
}
