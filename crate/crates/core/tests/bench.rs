use dualmark::attacks::{AlterMode, AttackKind};
use dualmark::bench::{curve_csv, run_bench, sweep, BenchConfig, CurvePoint, SweepPlan};
use dualmark::embed;

fn points(kind: AttackKind) -> Vec<CurvePoint> {
    let cfg = BenchConfig::default();
    let s = cfg.setup().unwrap();
    sweep(&s.base, &cfg.keys, &s.watermark, &s.config, &cfg.plan(kind)).unwrap()
}

#[test]
fn zero_fraction_is_a_round_trip() {
    let cfg = BenchConfig { n: 1000, ..BenchConfig::default() };
    let s = cfg.setup().unwrap();
    for kind in AttackKind::ALL {
        let plan = SweepPlan { fractions: vec![0.0], trials: 5, ..cfg.plan(kind) };
        if kind == AttackKind::Select {
            continue;
        }
        let p = sweep(&s.base, &cfg.keys, &s.watermark, &s.config, &plan).unwrap();
        assert_eq!(p[0].mean_rate, 100.0, "{kind}");
    }
    // keeping everything is the SELECT analogue
    let plan = SweepPlan { fractions: vec![1.0], trials: 5, ..cfg.plan(AttackKind::Select) };
    let p = sweep(&s.base, &cfg.keys, &s.watermark, &s.config, &plan).unwrap();
    assert_eq!(p[0].min_rate, 100.0);
}

#[test]
fn add_curve_is_flat() {
    let p = points(AttackKind::Add);
    assert_eq!(p.len(), 20);
    assert!(p.iter().all(|p| p.min_rate == 100.0), "{}", curve_csv(&p));
}

#[test]
fn delete_curve_does_not_rise() {
    let p = points(AttackKind::Delete);
    assert!(p[0].trials >= 50);
    for w in p.windows(2) {
        assert!(w[1].mean_rate <= w[0].mean_rate + 2.0, "{}", curve_csv(&p));
    }
    let last = p.last().unwrap();
    assert_eq!(last.fraction, 1.0);
    assert_eq!(last.mean_rate, 0.0);

    // every erased position is a mismatch, so the expected rate is
    // 100 * (1 - E[uncovered bits] / L) with exact hypergeometric misses
    let cfg = BenchConfig::default();
    let s = cfg.setup().unwrap();
    let n = s.base.len();
    let keep = n - (0.95 * n as f64).round() as usize;
    let key = s.base.key_index().unwrap();
    let mut marked = [0usize; 16];
    for t in s.base.tuples() {
        let v: u64 = t.cells[key].to_string().parse().unwrap();
        if v.is_multiple_of(5) {
            marked[(v / 5 % 16) as usize] += 1;
        }
    }
    let miss = |m: usize| (0..keep).map(|j| (n - m - j) as f64 / (n - j) as f64).product::<f64>();
    let (mean, var) = marked.iter().fold((0.0, 0.0), |(e, v), &m| {
        let q = miss(m);
        (e + q, v + q * (1.0 - q))
    });
    let expected = 100.0 * (1.0 - mean / 16.0);
    let se = 100.0 / 16.0 * (var / cfg.trials as f64).sqrt();
    let near = p.iter().find(|p| (p.fraction - 0.95).abs() < 1e-9).unwrap();
    assert!(
        (near.mean_rate - expected).abs() <= 3.0 * se,
        "observed {:.2}, expected {expected:.2} +- {:.2}",
        near.mean_rate,
        3.0 * se
    );
}

#[test]
fn select_curve_does_not_rise_as_selection_shrinks() {
    let p = points(AttackKind::Select);
    for w in p.windows(2) {
        assert!(w[0].mean_rate <= w[1].mean_rate + 2.0, "{}", curve_csv(&p));
    }
    assert_eq!(p.last().unwrap().min_rate, 100.0);
}

#[test]
fn numeric_alter_curve_is_flat_when_channel2_covers() {
    let cfg = BenchConfig::default();
    assert_eq!(cfg.alter_mode, AlterMode::Numeric);
    let s = cfg.setup().unwrap();
    let (_, stats) = embed(&s.base, &cfg.keys, &s.watermark, &s.config).unwrap();
    assert!(stats.channel2_carriers.iter().all(|&c| c > 0));
    let p = sweep(&s.base, &cfg.keys, &s.watermark, &s.config, &cfg.plan(AttackKind::Alter)).unwrap();
    assert!(p.iter().all(|p| p.min_rate == 100.0), "{}", curve_csv(&p));
}

#[test]
fn whole_bench_is_deterministic() {
    let cfg = BenchConfig {
        n: 1500,
        trials: 6,
        fractions: vec![0.2, 0.6, 0.9],
        master_seed: 7,
        ..BenchConfig::default()
    };
    let csv = |c: &BenchConfig| {
        run_bench(c).unwrap().into_iter().map(|(_, p)| curve_csv(&p)).collect::<Vec<_>>()
    };
    let a = csv(&cfg);
    assert_eq!(a, csv(&cfg));
    assert_eq!(a.len(), 4);
    let other = BenchConfig { master_seed: 8, ..cfg.clone() };
    assert_ne!(a, csv(&other));
}

#[test]
fn sweep_rejects_zero_trials() {
    let cfg = BenchConfig { n: 100, ..BenchConfig::default() };
    let s = cfg.setup().unwrap();
    let plan = SweepPlan { trials: 0, ..cfg.plan(AttackKind::Delete) };
    assert!(sweep(&s.base, &cfg.keys, &s.watermark, &s.config, &plan).is_err());
}
