//! Robustness sweeps: synthetic data, repeated seeded attacks per intensity,
//! and curve files (CSV, optional SVG).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::attacks::{AlterMode, AttackKind, AttackSpec, SplitMix64};
use crate::embed::embed;
use crate::error::{Error, Result};
use crate::extract::verify;
use crate::model::{Cell, Column, ColumnKind, Date, DateTime, Decimal, MarkConfig, Relation, SecretKeys, TimeValue, Tuple, WatermarkBits};

/// Shape of a synthetic table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub pk_column: String,
    pub numeric_columns: Vec<(String, u32)>,
    /// Inclusive value range for numeric columns, in whole units.
    pub value_range: (u64, u64),
    pub datetime_columns: Vec<String>,
    /// Inclusive year range for datetime columns.
    pub years: (u16, u16),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            pk_column: "id".into(),
            numeric_columns: vec![("amount".into(), 0), ("quantity".into(), 0)],
            value_range: (0, 100_000),
            datetime_columns: vec!["updated_at".into()],
            years: (2000, 2024),
        }
    }
}

impl DatasetSpec {
    pub fn mark_config(&self) -> Result<MarkConfig> {
        MarkConfig::new(
            self.pk_column.clone(),
            self.numeric_columns.clone(),
            self.datetime_columns.clone(),
        )
    }
}

/// Table with keys `1..=n` and uniformly drawn cells.
pub fn gen_dataset(n: usize, spec: &DatasetSpec, seed: u64) -> Result<Relation> {
    let mut columns = vec![Column::new(spec.pk_column.clone(), ColumnKind::Key)];
    columns.extend(
        spec.numeric_columns
            .iter()
            .map(|(name, scale)| Column::new(name.clone(), ColumnKind::Numeric { scale: *scale })),
    );
    columns.extend(
        spec.datetime_columns
            .iter()
            .map(|name| Column::new(name.clone(), ColumnKind::DateTime)),
    );
    let mut relation = Relation::new(columns)?;

    let (lo, hi) = spec.value_range;
    let (y0, y1) = spec.years;
    if lo > hi || y0 > y1 || y1 > 9999 {
        return Err(Error::Config("empty dataset value or year range".into()));
    }
    let scaled = |v: u64, d: u32| -> Result<u64> {
        10u64
            .checked_pow(d)
            .and_then(|f| v.checked_mul(f))
            .ok_or_else(|| Error::Config(format!("value range overflows at scale {d}")))
    };
    let bounds = spec
        .numeric_columns
        .iter()
        .map(|(_, d)| Ok((scaled(lo, *d)?, scaled(hi, *d)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = SplitMix64::new(seed);
    for i in 0..n {
        let mut cells = Vec::with_capacity(relation.columns().len());
        cells.push(Cell::Text((i + 1).to_string()));
        for ((_, d), (a, b)) in spec.numeric_columns.iter().zip(&bounds) {
            let units = a + rng.below(b - a + 1);
            cells.push(Cell::Number(Decimal::new(false, units, *d)));
        }
        for _ in &spec.datetime_columns {
            let year = y0 + rng.below(u64::from(y1 - y0) + 1) as u16;
            let month = 1 + rng.below(12) as u8;
            let day = 1 + rng.below(28) as u8;
            let time = TimeValue::new(rng.below(24) as u8, rng.below(60) as u8, rng.below(60) as u8);
            cells.push(Cell::DateTime(DateTime {
                date: Date::new(year, month, day).expect("day <= 28"),
                time: time.expect("drawn within range"),
            }));
        }
        relation.push(Tuple::new(cells))?;
    }
    Ok(relation)
}

/// Uniform random watermark of the given size.
pub fn random_watermark(width: usize, height: usize, seed: u64) -> Result<WatermarkBits> {
    let mut rng = SplitMix64::new(seed);
    let bits = (0..width * height).map(|_| rng.coin()).collect();
    WatermarkBits::new(width, height, bits)
}

/// Seed for one trial, independent of execution order.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    SplitMix64::mix(master ^ SplitMix64::mix(a.wrapping_mul(SplitMix64::GOLDEN) ^ b.rotate_left(32)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub attack: AttackKind,
    pub fraction: f64,
    pub trials: usize,
    pub mean_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: AttackKind,
    pub alter_mode: AlterMode,
    pub fractions: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial recovery rates at each fraction, in input order.
pub fn sweep_rates(
    base: &Relation,
    keys: &SecretKeys,
    wm: &WatermarkBits,
    config: &MarkConfig,
    plan: &SweepPlan,
) -> Result<Vec<Vec<f64>>> {
    if plan.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let (marked, _) = embed(base, keys, wm, config)?;
    plan.fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            (0..plan.trials)
                .into_par_iter()
                .map(|ti| {
                    let seed = derive_seed(plan.seed, fi as u64, ti as u64);
                    let spec = AttackSpec::new(plan.kind, fraction, seed).with_alter_mode(plan.alter_mode);
                    let attacked = spec.apply(&marked)?;
                    Ok(verify(&attacked, keys, config, wm)?.rate)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

pub fn sweep(
    base: &Relation,
    keys: &SecretKeys,
    wm: &WatermarkBits,
    config: &MarkConfig,
    plan: &SweepPlan,
) -> Result<Vec<CurvePoint>> {
    let rates = sweep_rates(base, keys, wm, config, plan)?;
    Ok(plan
        .fractions
        .iter()
        .zip(rates)
        .map(|(&fraction, rates)| CurvePoint {
            attack: plan.kind,
            fraction,
            trials: rates.len(),
            mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
            min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
            max_rate: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect())
}

pub const CURVE_HEADER: &str = "attack,fraction,trials,mean_rate,min_rate,max_rate";

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{:.2},{:.2}",
            p.attack, p.fraction, p.trials, p.mean_rate, p.min_rate, p.max_rate
        );
    }
    out
}

pub fn write_curve(points: &[CurvePoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config("no curve points to write".into()));
    }
    fs::write(path, curve_csv(points)).map_err(|e| Error::io(path, e))
}

/// Line chart of mean rate against fraction, with a min/max band.
pub fn curve_svg(points: &[CurvePoint]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 48.0;
    let x = |f: f64| PAD + f.clamp(0.0, 1.0) * (W - 2.0 * PAD);
    let y = |r: f64| H - PAD - r.clamp(0.0, 100.0) / 100.0 * (H - 2.0 * PAD);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<path d=\"M{PAD} {PAD} V{} H{}\" fill=\"none\" stroke=\"black\"/>",
        H - PAD,
        W - PAD
    );
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{tick}</text>",
            PAD - 4.0,
            y(tick) + 3.0
        );
    }
    let label = points.first().map_or("", |p| p.attack.name());
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-size=\"12\" text-anchor=\"middle\">{label}: recovery rate (%) vs fraction</text>",
        W / 2.0
    );
    let band: Vec<String> = points
        .iter()
        .map(|p| format!("{:.1},{:.1}", x(p.fraction), y(p.max_rate)))
        .chain(points.iter().rev().map(|p| format!("{:.1},{:.1}", x(p.fraction), y(p.min_rate))))
        .collect();
    let _ = writeln!(svg, "<polygon points=\"{}\" fill=\"#cfe0f3\"/>", band.join(" "));
    let line: Vec<String> = points
        .iter()
        .map(|p| format!("{:.1},{:.1}", x(p.fraction), y(p.mean_rate)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\"/>",
        line.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn write_curve_svg(points: &[CurvePoint], path: &Path) -> Result<()> {
    fs::write(path, curve_svg(points)).map_err(|e| Error::io(path, e))
}

/// Full robustness benchmark settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub keys: SecretKeys,
    pub width: usize,
    pub height: usize,
    pub fractions: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub alter_mode: AlterMode,
    pub dataset: DatasetSpec,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 5000,
            keys: SecretKeys::new(5, 10).expect("valid default keys"),
            width: 4,
            height: 4,
            fractions: (1..=20).map(|i| f64::from(i) / 20.0).collect(),
            trials: 50,
            master_seed: 42,
            alter_mode: AlterMode::Numeric,
            dataset: DatasetSpec::default(),
        }
    }
}

/// Marked-table ingredients shared by every sweep of a benchmark run.
#[derive(Debug, Clone)]
pub struct BenchSetup {
    pub base: Relation,
    pub watermark: WatermarkBits,
    pub config: MarkConfig,
}

impl BenchConfig {
    pub fn setup(&self) -> Result<BenchSetup> {
        Ok(BenchSetup {
            base: gen_dataset(self.n, &self.dataset, derive_seed(self.master_seed, u64::MAX, 0))?,
            watermark: random_watermark(self.width, self.height, derive_seed(self.master_seed, u64::MAX, 1))?,
            config: self.dataset.mark_config()?,
        })
    }

    pub fn plan(&self, kind: AttackKind) -> SweepPlan {
        let kind_index = AttackKind::ALL.iter().position(|k| *k == kind).unwrap_or(0);
        SweepPlan {
            kind,
            alter_mode: self.alter_mode,
            fractions: self.fractions.clone(),
            trials: self.trials,
            seed: derive_seed(self.master_seed, kind_index as u64, u64::MAX),
        }
    }
}

/// One curve per attack kind, in [`AttackKind::ALL`] order.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<(AttackKind, Vec<CurvePoint>)>> {
    let setup = config.setup()?;
    AttackKind::ALL
        .iter()
        .map(|&kind| {
            let points = sweep(&setup.base, &config.keys, &setup.watermark, &setup.config, &config.plan(kind))?;
            Ok((kind, points))
        })
        .collect()
}
