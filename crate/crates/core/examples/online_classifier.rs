//! Learn a drifting two-class stream one sample at a time and watch the rule
//! base grow, merge and forget.
//!
//! ```text
//! cargo run --example online_classifier
//! ```

use egfc::classifier::{Horizon, MetaParams, RuleBase};
use egfc::{ClassId, MetricsState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> egfc::Result<()> {
    let params = MetaParams {
        h_r: Horizon::Steps(150),
        ..Default::default()
    };
    let mut model = RuleBase::new(2, 2, params)?;
    let mut metrics = MetricsState::new(2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for k in 0..1200 {
        // class 2 drifts from the top right corner towards the centre
        let drift = (k as f64 / 1200.0) * 0.4;
        let (label, centre) = if rng.random_bool(0.5) {
            (ClassId(1), [0.2, 0.2])
        } else {
            (ClassId(2), [0.8 - drift, 0.8 - drift])
        };
        let x = [
            centre[0] + rng.random_range(-0.08..0.08),
            centre[1] + rng.random_range(-0.08..0.08),
        ];
        let r = model.learn_step(&x, Some(label))?;
        metrics.record(r.predicted, label, r.rule_count_after)?;
        if r.created_rule || r.merged || r.deleted_count > 0 || k % 300 == 299 {
            println!(
                "step {:>4}: rules {:>2} rho {:.3} acc {:.3}{}{}{}",
                r.step,
                r.rule_count_after,
                r.rho_after,
                metrics.acc(),
                if r.created_rule { "  +created" } else { "" },
                if r.merged { "  merged" } else { "" },
                if r.deleted_count > 0 { "  pruned" } else { "" },
            );
        }
    }
    for g in model.granules() {
        println!(
            "rule {:>3} class {:?} n={:<4} modal {:.3?}",
            g.id,
            g.label().map(|c| c.0),
            g.update_count(),
            g.modal().collect::<Vec<_>>()
        );
    }
    let p = model.classify(&[0.2, 0.2])?;
    println!("(0.2, 0.2) -> class {:?} at activation {:.3}", p.class.map(|c| c.0), p.activation);
    Ok(())
}
