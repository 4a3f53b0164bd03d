//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification below threshold, 2 configuration
//! error, 3 I/O error, 4 table schema mismatch.

pub mod config;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::attacks::{AttackSpec, SplitMix64};
use crate::bench::{run_bench, write_curve, write_curve_svg, BenchConfig};
use crate::embed::embed;
use crate::error::{Error, ErrorClass, Result};
use crate::extract::{recover, verify};
use crate::model::{ensure_primary_key, SecretKeys, WatermarkBits};
use crate::pbm;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Io => EXIT_IO,
        ErrorClass::Schema => EXIT_SCHEMA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "dualmark", version, about = "Two-channel blind watermarking for CSV tables")]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for attacks, benchmarks and key generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed the watermark image into a table.
    Embed {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        watermark: Option<PathBuf>,
    },
    /// Score a suspect table against the owner's watermark.
    Verify {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        watermark: Option<PathBuf>,
        /// Minimum match rate in percent.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Recover the watermark from a table without the original, as PBM.
    Recover {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
    },
    /// Apply one seeded attack to a table.
    Attack {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Run the robustness sweeps and write one curve CSV per attack.
    Bench {
        #[arg(long)]
        report_dir: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Also write an SVG chart next to each CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Generate a fresh k1/k2 pair.
    Keygen {
        /// Write to this file (must not exist) instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Ctx<'a> {
    cfg: RunConfig,
    seed: Option<u64>,
    quiet: bool,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn say(&mut self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(self.out, "{}", msg.as_ref());
        }
    }

    fn seed(&self) -> Option<u64> {
        self.seed.or(self.cfg.seed)
    }
}

fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| Error::Config(format!("no {what} path given (flag or config `{what}`)")))
}

fn distinct_output(input: &Path, output: &Path) -> Result<()> {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => input == output,
    };
    if same {
        return Err(Error::Config("output path must differ from the input".into()));
    }
    Ok(())
}

/// Runs the CLI with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let cfg = match cli.config.as_deref().map(RunConfig::load).transpose() {
        Ok(cfg) => cfg.unwrap_or_default(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let mut ctx = Ctx {
        cfg,
        seed: cli.seed,
        quiet: cli.quiet,
        out,
    };
    let result = match cli.command {
        Command::Embed { input, output, watermark } => cmd_embed(&mut ctx, input, output, watermark, err),
        Command::Verify { input, watermark, threshold } => cmd_verify(&mut ctx, input, watermark, threshold),
        Command::Recover { input, output, width, height } => cmd_recover(&mut ctx, input, output, width, height),
        Command::Attack { input, output, kind, fraction, mode } => {
            cmd_attack(&mut ctx, input, output, kind, fraction, mode)
        }
        Command::Bench { report_dir, n, trials, svg } => cmd_bench(&mut ctx, report_dir, n, trials, svg),
        Command::Keygen { output } => cmd_keygen(&mut ctx, output),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_embed(
    ctx: &mut Ctx<'_>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    watermark: Option<PathBuf>,
    err: &mut dyn Write,
) -> Result<i32> {
    let input = required(input, &ctx.cfg.input, "input")?;
    let output = required(output, &ctx.cfg.output, "output")?;
    let wm_path = required(watermark, &ctx.cfg.watermark, "watermark")?;
    distinct_output(&input, &output)?;
    let mut mark = ctx.cfg.mark_config()?;
    let keys = ctx.cfg.keys()?;
    let wm = pbm::read(&wm_path)?;
    let mut relation = table::read_table(&input, &mark)?;

    let key_ok = relation.column_index(mark.pk_column()).is_some() && relation.has_valid_key();
    if !key_ok {
        if !ctx.cfg.auto_pk {
            return Err(Error::Schema(format!(
                "primary key `{}` is missing, null or duplicated and auto_pk is off",
                mark.pk_column()
            )));
        }
        relation = ensure_primary_key(relation, mark.pk_column());
        let name = relation.columns()[relation.key_index().expect("key added")].name.clone();
        ctx.say(format!("added key column `{name}` (use it as pk_column when verifying)"));
        mark = mark.with_pk_column(name);
    }

    let (marked, stats) = embed(&relation, &keys, &wm, &mark)?;
    table::write_table(&output, &marked)?;

    let covered1 = stats.channel1_carriers.iter().filter(|&&c| c > 0).count();
    let covered2 = stats.channel2_carriers.iter().filter(|&&c| c > 0).count();
    ctx.say(format!("tuples: {} ({} selected by k1)", marked.len(), stats.marked_tuples));
    ctx.say(format!("modified cells: {}", stats.modified_cells));
    ctx.say(format!(
        "channel 1: {} carriers, {}/{} bits covered",
        stats.channel1_carriers.iter().sum::<usize>(),
        covered1,
        wm.len()
    ));
    ctx.say(format!(
        "channel 2: {} carriers, {}/{} bits covered",
        stats.channel2_carriers.iter().sum::<usize>(),
        covered2,
        wm.len()
    ));
    let uncovered = stats.uncovered_bits();
    if !uncovered.is_empty() {
        let _ = writeln!(err, "warning: watermark bits without any carrier: {uncovered:?}");
    }
    ctx.say(format!("wrote {}", output.display()));
    Ok(EXIT_OK)
}

fn cmd_verify(
    ctx: &mut Ctx<'_>,
    input: Option<PathBuf>,
    watermark: Option<PathBuf>,
    threshold: Option<f64>,
) -> Result<i32> {
    let input = required(input, &ctx.cfg.input, "input")?;
    let wm_path = required(watermark, &ctx.cfg.watermark, "watermark")?;
    let threshold = threshold.unwrap_or(ctx.cfg.threshold);
    if !(0.0..=100.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} is outside 0..=100")));
    }
    let mark = ctx.cfg.mark_config()?;
    let keys = ctx.cfg.keys()?;
    let wm = pbm::read(&wm_path)?;
    let relation = table::read_table(&input, &mark)?;
    let report = verify(&relation, &keys, &mark, &wm)?;

    ctx.say(format!(
        "match: {}/{} ({:.2}%)",
        report.matchcount, report.totalcount, report.rate
    ));
    ctx.say(format!("channel 1 coverage: {}/{} bits", report.channel1_coverage(), report.len));
    ctx.say(format!("channel 2 coverage: {}/{} bits", report.channel2_coverage(), report.len));
    let present = report.rate >= threshold;
    ctx.say(format!(
        "verdict: {} (threshold {threshold:.2}%)",
        if present { "watermark present" } else { "watermark not found" }
    ));
    Ok(if present { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_recover(
    ctx: &mut Ctx<'_>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    width: Option<usize>,
    height: Option<usize>,
) -> Result<i32> {
    let input = required(input, &ctx.cfg.input, "input")?;
    let output = required(output, &ctx.cfg.recovered, "recovered")?;
    distinct_output(&input, &output)?;
    let (width, height) = match (width.or(ctx.cfg.width), height.or(ctx.cfg.height)) {
        (Some(w), Some(h)) => (w, h),
        _ => return Err(Error::Config("watermark width and height are required".into())),
    };
    let mark = ctx.cfg.mark_config()?;
    let keys = ctx.cfg.keys()?;
    let relation = table::read_table(&input, &mark)?;
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Error::Config("watermark dimensions overflow".into()))?;
    if len == 0 {
        return Err(Error::EmptyWatermark);
    }
    let bits = recover(&relation, &keys, &mark, len)?;
    let wm = WatermarkBits::new(width, height, bits)?;
    pbm::write(&output, &wm)?;
    ctx.say(format!("wrote {} ({}x{})", output.display(), width, height));
    Ok(EXIT_OK)
}

fn cmd_attack(
    ctx: &mut Ctx<'_>,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    kind: Option<String>,
    fraction: Option<f64>,
    mode: Option<String>,
) -> Result<i32> {
    let input = required(input, &ctx.cfg.input, "input")?;
    let output = required(output, &ctx.cfg.output, "output")?;
    distinct_output(&input, &output)?;
    let kind = match kind {
        Some(k) => k.parse()?,
        None => ctx.cfg.attack.ok_or_else(|| Error::Config("no attack kind given".into()))?,
    };
    let fraction = fraction
        .or(ctx.cfg.fraction)
        .ok_or_else(|| Error::Config("no attack fraction given".into()))?;
    let alter_mode = match mode {
        Some(m) => m.parse()?,
        None => ctx.cfg.alter_mode,
    };
    let mark = ctx.cfg.mark_config()?;
    let relation = table::read_table(&input, &mark)?;
    let spec = AttackSpec {
        kind,
        fraction,
        alter_mode,
        seed: ctx.seed().unwrap_or(0),
    };
    let attacked = spec.apply(&relation)?;
    table::write_table(&output, &attacked)?;
    let (before, after) = (relation.len() as i64, attacked.len() as i64);
    ctx.say(format!(
        "{kind} {fraction}: {before} -> {after} rows ({:+})",
        after - before
    ));
    Ok(EXIT_OK)
}

fn cmd_bench(
    ctx: &mut Ctx<'_>,
    report_dir: Option<PathBuf>,
    n: Option<usize>,
    trials: Option<usize>,
    svg: bool,
) -> Result<i32> {
    let cfg = &ctx.cfg;
    let mut bench = BenchConfig::default();
    if let Some(keys) = cfg.optional_keys()? {
        bench.keys = keys;
    }
    if let Some(n) = n.or(cfg.bench_n) {
        bench.n = n;
    }
    if let Some(t) = trials.or(cfg.bench_trials) {
        bench.trials = t;
    }
    if let Some(f) = &cfg.bench_fractions {
        bench.fractions = f.clone();
    }
    if let Some(m) = cfg.bench_alter_mode {
        bench.alter_mode = m;
    }
    match (cfg.width, cfg.height) {
        (Some(w), Some(h)) => (bench.width, bench.height) = (w, h),
        (None, None) => {}
        _ => return Err(Error::Config("set both width and height or neither".into())),
    }
    if let Some(seed) = ctx.seed() {
        bench.master_seed = seed;
    }
    let svg = svg || cfg.bench_svg;
    let dir = report_dir
        .or_else(|| cfg.report_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));
    if bench.fractions.is_empty() {
        return Err(Error::Config("bench_fractions is empty".into()));
    }

    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let curves = run_bench(&bench)?;
    for (kind, points) in &curves {
        let stem = format!("robustness_{}", kind.name().to_ascii_lowercase());
        let csv = dir.join(format!("{stem}.csv"));
        write_curve(points, &csv)?;
        if svg {
            write_curve_svg(points, &dir.join(format!("{stem}.svg")))?;
        }
        let worst = points.iter().map(|p| p.min_rate).fold(f64::INFINITY, f64::min);
        ctx.say(format!("{kind}: {} points, worst trial {worst:.2}% -> {}", points.len(), csv.display()));
    }
    Ok(EXIT_OK)
}

fn cmd_keygen(ctx: &mut Ctx<'_>, output: Option<PathBuf>) -> Result<i32> {
    let seed = ctx.seed().unwrap_or_else(entropy_seed);
    let mut rng = SplitMix64::new(seed);
    // k1 = 1 would mark every tuple
    let k1 = 2 + rng.below(30) as i64;
    let k2 = rng.below(16) as i64;
    let keys = SecretKeys::new(k1, k2)?;
    let text = format!("k1 = {}\nk2 = {}\n", keys.k1(), keys.k2());
    match output {
        Some(path) => {
            let mut f = std::fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            f.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))?;
            ctx.say(format!("wrote keys to {}", path.display()));
        }
        None => {
            let _ = ctx.out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

fn entropy_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    h.finish()
}

