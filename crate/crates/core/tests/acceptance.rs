//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use egfc::classifier::{Horizon, MetaParams, RuleBase, StepReport};
use egfc::features::{Sample, N_ATTRIBUTES};
use egfc::granule::{Granule, SIGMA_MAX, SIGMA_MIN};
use egfc::ingest::{ingest_lines, RateSeries, DEFAULT_TIMESTAMP_FORMAT};
use egfc::pipeline::{self, RunConfig, RunSummary};
use egfc::synth::{generate, SynthConfig};
use egfc::{ChartModel, ClassId, MetricsState, N_CLASSES};

const BENCH_HOURS: u64 = 1436;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn benchmark_series(seed: u64) -> RateSeries {
    let stream = generate(&SynthConfig::benchmark(BENCH_HOURS * 60, seed)).expect("valid benchmark config");
    let (series, stats) = ingest_lines(stream.lines(), DEFAULT_TIMESTAMP_FORMAT);
    assert_eq!(stats.skipped, 0);
    series.expect("non-empty stream")
}

fn benchmark_samples(series: &RateSeries, window: usize) -> Vec<Sample> {
    let cfg = RunConfig {
        window_minutes: window,
        ..Default::default()
    };
    pipeline::prepare_series(series, &cfg).expect("prepare").samples()
}

fn run(samples: &[Sample], cfg: &RunConfig) -> RunSummary {
    pipeline::run_dataset(samples, cfg, None).expect("run").0
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn recursions() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let band = MetaParams::default().band();
    let (mut worst_mean, mut worst_sigma, mut worst_acc, mut worst_cavg) = (0f64, 0f64, 0f64, 0f64);

    for _ in 0..10_000 {
        let len = rng.random_range(1..=64);
        let xs: Vec<[f64; 3]> = (0..len)
            .map(|_| {
                let scale = rng.random_range(0.01..1.0);
                [rng.random::<f64>(), rng.random::<f64>() * scale, 0.5 + rng.random::<f64>() * 1e-3]
            })
            .collect();

        let mut g = Granule::create(&xs[0], None, 1, band);
        for (k, x) in xs.iter().enumerate().skip(1) {
            g.absorb(x, k as u64 + 1, band).unwrap();
        }

        for j in 0..3 {
            let batch = xs.iter().map(|x| x[j]).sum::<f64>() / len as f64;
            worst_mean = worst_mean.max(rel_err(g.mfs()[j].modal, batch));

            // sigma^2 <- ((w - 1) sigma^2 + (x - mu_prev)^2) / w, then clamp
            let (mut mu, mut sigma) = (xs[0][j], SIGMA_MAX);
            for (k, x) in xs.iter().enumerate().skip(1) {
                let w = (k + 1) as f64;
                let d = x[j] - mu;
                sigma = (((w - 1.0) * sigma * sigma + d * d) / w).sqrt().clamp(SIGMA_MIN, SIGMA_MAX);
                mu += d / w;
            }
            worst_sigma = worst_sigma.max(rel_err(g.mfs()[j].dispersion, sigma));
        }

        let mut m = MetricsState::new(N_CLASSES);
        let (mut correct, mut rules_sum) = (0u64, 0u64);
        for _ in 0..len {
            let truth = ClassId(rng.random_range(1..=N_CLASSES));
            let pred = rng.random_bool(0.9).then(|| ClassId(rng.random_range(1..=N_CLASSES)));
            let rules = rng.random_range(1..50usize);
            correct += (pred == Some(truth)) as u64;
            rules_sum += rules as u64;
            m.record(pred, truth, rules).unwrap();
        }
        let h = len as f64;
        worst_acc = worst_acc.max((m.acc() - correct as f64 / h).abs());
        worst_cavg = worst_cavg.max(rel_err(m.c_avg(), rules_sum as f64 / h));
    }
    let secs = started.elapsed().as_secs_f64();
    let worst = worst_mean.max(worst_sigma).max(worst_acc).max(worst_cavg);
    check(
        worst <= 1e-12 && secs < 10.0,
        format!(
            "mean {worst_mean:.1e}, dispersion {worst_sigma:.1e}, acc {worst_acc:.1e}, c_avg {worst_cavg:.1e}, {secs:.2} s"
        ),
    )
}

fn chart_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let normal = Normal::new(50.0, 7.0).unwrap();
    let draws: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
    let chart = ChartModel::fit(&draws).unwrap();
    let mut counts = [0usize; 4];
    for &d in &draws {
        counts[chart.tag(d).0 as usize - 1] += 1;
    }
    let pct: Vec<f64> = counts.iter().map(|&c| 100.0 * c as f64 / draws.len() as f64).collect();
    let expected = [68.3, 27.1, 4.3, 0.3];
    let ok = pct.iter().zip(expected).all(|(p, e)| (p - e).abs() <= 0.5);
    check(ok, format!("{:.2}% / {:.2}% / {:.2}% / {:.2}%", pct[0], pct[1], pct[2], pct[3]))
}

fn invariants() -> Outcome {
    let h_r = 40;
    let params = MetaParams {
        h_r: Horizon::Steps(h_r),
        ..Default::default()
    };
    let mut model = RuleBase::new(N_ATTRIBUTES, N_CLASSES, params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.12).unwrap();
    let mut centres: Vec<[f64; N_ATTRIBUTES]> = (0..12).map(|_| rng.random()).collect();
    let classes: Vec<u32> = (0..12).map(|_| rng.random_range(1..=N_CLASSES)).collect();

    let mut labels_seen: HashMap<u64, ClassId> = HashMap::new();
    let mut violations = Vec::new();
    let (mut merges, mut deletions) = (0, 0);

    for k in 0..5_000 {
        if k % 500 == 499 {
            let moved = rng.random_range(0..centres.len());
            centres[moved] = rng.random();
        }
        let c = rng.random_range(0..centres.len());
        let x: Vec<f64> = centres[c].iter().map(|v| v + noise.sample(&mut rng)).collect();
        let y = rng.random_bool(0.8).then(|| ClassId(classes[c]));

        let before: HashMap<u64, (Option<ClassId>, u64)> = model
            .granules()
            .iter()
            .map(|g| (g.id, (g.label(), g.last_active_step())))
            .collect();
        let r = model.learn_step(&x, y).unwrap();
        let mut fail = |what: String| violations.push(format!("step {}: {what}", r.step));

        if !(0.01..=1.0).contains(&model.rho()) {
            fail(format!("rho {}", model.rho()));
        }
        if model.is_empty() {
            fail("empty rule base".into());
        }
        for g in model.granules() {
            if g.dispersions().any(|s| !(SIGMA_MIN..=SIGMA_MAX).contains(&s)) {
                fail(format!("rule {} dispersion out of band", g.id));
            }
            if let Some(l) = g.label() {
                if *labels_seen.entry(g.id).or_insert(l) != l {
                    fail(format!("rule {} changed label", g.id));
                }
            }
        }
        for id in &r.deleted_ids {
            deletions += 1;
            match before.get(id) {
                Some(&(_, last)) if r.step - last > h_r => {}
                _ => fail(format!("rule {id} deleted while active within h_r")),
            }
        }
        if let Some(ids) = r.merged_ids {
            merges += 1;
            let born = model
                .granules()
                .iter()
                .find(|g| !before.contains_key(&g.id) && !(r.created_rule && g.id == r.touched_id));
            let Some(born) = born else {
                fail("merge left no merged rule".into());
                continue;
            };
            for id in ids {
                // an unlabeled parent may have been tagged with y earlier in this step
                let ok = match before.get(&id) {
                    Some(&(l, _)) => l == born.label() || (l.is_none() && y.is_some() && y == born.label()),
                    None => y == born.label(),
                };
                if !ok {
                    fail(format!("merge of rule {id} across labels into {:?}", born.label()));
                }
            }
        }
    }
    let ok = violations.is_empty() && merges > 0 && deletions > 0;
    let mut detail = format!(
        "{} violations over 5000 steps ({merges} merges, {deletions} deletions, {} rules at end)",
        violations.len(),
        model.len()
    );
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    check(ok, detail)
}

fn end_to_end() -> Outcome {
    let series = benchmark_series(1);
    let samples = benchmark_samples(&series, 60);
    let s = run(&samples, &RunConfig::default());
    let worst_time = s.runs.iter().map(|r| r.wall_time_s).fold(0.0, f64::max);
    check(
        samples.len() == BENCH_HOURS as usize && s.runs.len() == 5 && s.acc.mean >= 0.85 && s.rules.mean <= 30.0 && worst_time <= 1.0,
        format!(
            "{} samples, acc {:.2}% ± {:.2}, rules {:.1}, slowest run {:.4} s",
            samples.len(),
            100.0 * s.acc.mean,
            100.0 * s.acc.dev,
            s.rules.mean,
            worst_time
        ),
    )
}

fn window_ordering() -> Outcome {
    let mut rows = Vec::new();
    for seed in 1..=5 {
        let series = benchmark_series(seed);
        let cfg = RunConfig::default();
        let a60 = run(&benchmark_samples(&series, 60), &cfg).acc.mean;
        let a5 = run(&benchmark_samples(&series, 5), &cfg).acc.mean;
        rows.push((a60, a5));
    }
    let m60 = rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64;
    let m5 = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
    let per_seed = rows.iter().all(|(a, b)| a >= b);
    check(
        m60 >= m5 && per_seed,
        format!(
            "60 min {:.2}% vs 5 min {:.2}% (per seed: {})",
            100.0 * m60,
            100.0 * m5,
            rows.iter()
                .map(|(a, b)| format!("{:.1}/{:.1}", 100.0 * a, 100.0 * b))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn merge_and_prune() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let jitter = Normal::new(0.0, 0.01).unwrap();
    let mut model = RuleBase::new(2, N_CLASSES, MetaParams::default()).unwrap();
    let n = 400;
    for k in 0..n {
        let c = if k % 2 == 0 { 0.40 } else { 0.44 };
        let x = [c + jitter.sample(&mut rng), 0.5 + jitter.sample(&mut rng)];
        model.learn_step(&x, Some(ClassId(1))).unwrap();
    }
    let compacted = model.len() < n / 10;

    let starve = |h_r: Horizon| {
        let params = MetaParams { h_r, ..Default::default() };
        let mut m = RuleBase::new(2, N_CLASSES, params).unwrap();
        let first = m.learn_step(&[0.0, 0.0], Some(ClassId(1))).unwrap().touched_id;
        let alive = |m: &RuleBase| m.granules().iter().any(|g| g.id == first);
        let mut trace = Vec::new();
        for _ in 0..=10 {
            m.learn_step(&[1.0, 1.0], Some(ClassId(2))).unwrap();
            trace.push(alive(&m));
        }
        trace
    };
    let finite = starve(Horizon::Steps(10));
    // starved after step 1; still alive at steps 2..=11, gone at step 12
    let deleted_on_time = finite[..9].iter().all(|&a| a) && !finite[10];
    let retained = starve(Horizon::Infinite).iter().all(|&a| a);

    check(
        compacted && deleted_on_time && retained,
        format!(
            "{} rules for {n} samples, starved rule deleted after h_r+1: {deleted_on_time}, kept with h_r=inf: {retained}",
            model.len()
        ),
    )
}

fn reports(model: &mut RuleBase, samples: &[Sample]) -> Vec<String> {
    samples
        .iter()
        .map(|s| {
            let r: StepReport = model.learn_step(&s.x, s.label).unwrap();
            serde_json::to_string(&r).unwrap()
        })
        .collect()
}

fn checkpoint_round_trip() -> Outcome {
    let series = benchmark_series(7);
    let mut samples = benchmark_samples(&series, 60);
    samples.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
    let params = MetaParams::default();
    let fresh = || RuleBase::new(N_ATTRIBUTES, N_CLASSES, params).unwrap();
    let whole = reports(&mut fresh(), &samples);

    let dir = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    for k in [1, 250, 717, 1435] {
        let mut first = fresh();
        let mut got = reports(&mut first, &samples[..k]);
        let path = dir.path().join(format!("ck{k}.json"));
        first.save(&path).unwrap();
        drop(first);
        let mut resumed = RuleBase::load(&path).unwrap();
        got.extend(reports(&mut resumed, &samples[k..]));
        if got != whole {
            mismatched.push(k);
        }
    }
    check(
        mismatched.is_empty(),
        format!("{} steps, resumed at k = 1, 250, 717, 1435, mismatches at {mismatched:?}", whole.len()),
    )
}

fn semi_supervised() -> Outcome {
    let series = benchmark_series(8);
    let samples = benchmark_samples(&series, 60);
    let cfg = RunConfig {
        label_fraction: 0.5,
        ..Default::default()
    };
    let s = run(&samples, &cfg);
    let fed = s.runs.iter().map(|r| r.labels_fed).sum::<u64>() as f64 / (s.runs.len() * samples.len()) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let mut model = RuleBase::new(N_ATTRIBUTES, N_CLASSES, cfg.meta).unwrap();
    let mut unlabeled_born = HashSet::new();
    let mut tagged_later = HashSet::new();
    for i in order {
        let y = samples[i].label.filter(|_| rng.random_bool(0.5));
        let r = model.learn_step(&samples[i].x, y).unwrap();
        if r.created_rule && y.is_none() {
            unlabeled_born.insert(r.touched_id);
        }
        for g in model.granules() {
            if g.label().is_some() && unlabeled_born.contains(&g.id) {
                tagged_later.insert(g.id);
            }
        }
    }
    check(
        s.acc.mean > 0.25 && !tagged_later.is_empty(),
        format!(
            "acc {:.2}% with {:.0}% labels fed, {} of {} unlabeled-born rules tagged",
            100.0 * s.acc.mean,
            100.0 * fed,
            tagged_later.len(),
            unlabeled_born.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("recursions match oracles", recursions),
        ("control chart calibration", chart_calibration),
        ("rule base invariants", invariants),
        ("end-to-end 60 min benchmark", end_to_end),
        ("60 min beats 5 min windows", window_ordering),
        ("merge compaction and pruning", merge_and_prune),
        ("checkpoint round trip", checkpoint_round_trip),
        ("half-labeled stream", semi_supervised),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("[{tag}] {}. {name}: {detail} ({secs:.1} s)", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
