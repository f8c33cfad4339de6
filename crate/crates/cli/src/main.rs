use std::fs;
use std::io::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tnumlab::bench::{run_bench, BenchConfig, Sampler};
use tnumlab::fixture::{self, FixtureRecord, Rhs};
use tnumlab::precision::{bitwidth_rows_to_csv, sweep_bitwidths, sweep_exhaustive, sweep_exhaustive_long};
use tnumlab::verify::{self, Mode};
use tnumlab::{OpId, Tnum, TnumError};

#[derive(Debug, Error)]
enum CliError {
    /// Bad flags or unparsable operands: exit 2.
    #[error("{0}")]
    Usage(String),
    /// A checked property failed: exit 1.
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<TnumError> for CliError {
    fn from(e: TnumError) -> CliError {
        match e {
            TnumError::TimerUnavailable(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "tnumlab", version, about = "Tristate-number operators and their verification, precision and timing harnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one operator to two tnums (or a tnum and a shift amount).
    Eval(EvalArgs),
    /// Check soundness, optimality or the supporting lemmas of operators.
    Verify(VerifyArgs),
    /// Compare the output precision of two operators over every input pair.
    Precision(PrecisionArgs),
    /// Time operators on random 64-bit tnum pairs.
    Bench(BenchArgs),
    /// Write random inputs with computed outputs as JSON records.
    Fixtures(FixtureArgs),
    /// Search for counterexamples to associativity, add/sub inversion and
    /// commutativity of multiplication.
    Counterexamples(CounterexampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    op: OpId,
    #[arg(long)]
    width: u32,
    /// Trit string (`x10`) or `v=<hex>,m=<hex>`.
    #[arg(long)]
    p: String,
    #[arg(long, conflicts_with = "shift")]
    q: Option<String>,
    /// Shift amount, for lshift/rshift/arsh.
    #[arg(long)]
    shift: Option<u32>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyMode {
    Exhaustive,
    Sample,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Soundness,
    Optimality,
    /// Carry/borrow lemmas (add, sub) or multiplication support lemmas.
    Lemmas,
    /// our_mul against our_mul_simplified and bitwise_mul against bitwise_mul_opt.
    StrengthReduction,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Operator name, or `all`.
    #[arg(long)]
    op: String,
    #[arg(long)]
    width: u32,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: VerifyMode,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "soundness")]
    check: Check,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checks a deliberately broken addition instead; must fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(clap::Args)]
struct PrecisionArgs {
    #[arg(long, default_value = "our_mul")]
    a: OpId,
    #[arg(long, default_value = "kern_mul")]
    b: OpId,
    #[arg(long, required_unless_present = "bitwidths", conflicts_with = "bitwidths")]
    width: Option<u32>,
    /// Inclusive range such as `5..8`, one row per width.
    #[arg(long, value_parser = parse_range)]
    bitwidths: Option<RangeInclusive<u32>>,
    /// Allow widths 9 and 10 (slow).
    #[arg(long)]
    long: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "kern_mul,bitwise_mul_opt,our_mul")]
    ops: Vec<OpId>,
    #[arg(long, default_value_t = 4_000_000)]
    pairs: usize,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "per-trit-uniform")]
    sampler: SamplerArg,
    /// Processor to pin the timing thread to.
    #[arg(long)]
    pin: Option<usize>,
    /// Per-pair minimums as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON; stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    PerTritUniform,
    UniformVmNormalized,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Sampler {
        match s {
            SamplerArg::PerTritUniform => Sampler::PerTritUniform,
            SamplerArg::UniformVmNormalized => Sampler::UniformVmNormalized,
        }
    }
}

#[derive(clap::Args)]
struct FixtureArgs {
    #[arg(long)]
    op: OpId,
    #[arg(long)]
    width: u32,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 4)]
    width: u32,
    /// Random attempts per property when enumeration finds nothing.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: u32 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("empty or invalid range {s:?}"));
    }
    Ok(lo..=hi)
}

/// Uses the given seed or draws one from the clock, and echoes it.
fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    eprintln!("seed: {seed}");
    seed
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports always serialize")
}

fn eval(args: EvalArgs) -> CliResult {
    let p = Tnum::parse(&args.p, args.width)?;
    let rhs = match (args.op.is_shift(), &args.q, args.shift) {
        (true, None, Some(k)) => Rhs::Shift(k),
        (false, Some(q), None) => Rhs::Tnum(Tnum::parse(q, args.width)?),
        (true, _, _) => return Err(CliError::Usage(format!("{} needs --shift", args.op))),
        (false, _, _) => return Err(CliError::Usage(format!("{} needs --q", args.op))),
    };
    let record = FixtureRecord::evaluate(args.op, p, rhs)?;
    let text = match args.format {
        Format::Json => to_json(&record),
        Format::Text => {
            let r = record.output()?;
            if args.p.trim_start().starts_with("v=") {
                r.to_hex_string()
            } else {
                r.to_string()
            }
        }
    };
    emit(None, &text)
}

fn verify_ops(spec: &str) -> CliResult<Vec<OpId>> {
    if spec == "all" {
        Ok(OpId::ALL.to_vec())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<OpId>().map_err(CliError::from))
            .collect()
    }
}

fn verify(args: VerifyArgs) -> CliResult {
    let ops = verify_ops(&args.op)?;
    let mode = match args.mode {
        VerifyMode::Exhaustive => Mode::Exhaustive,
        VerifyMode::Sample => Mode::Sampled {
            count: args.samples,
            seed: resolve_seed(args.seed),
        },
    };
    let mut failures = Vec::new();
    let mut reports = Vec::new();
    match args.check {
        Check::Soundness => {
            for op in ops {
                let rep = if args.inject_fault {
                    verify::check_soundness_of(
                        "add_without_carry_uncertainty",
                        broken_add,
                        OpId::Add.concrete(),
                        false,
                        args.width,
                        mode,
                    )?
                } else {
                    verify::check_soundness(op, args.width, mode)?
                };
                eprintln!(
                    "{}: {} pairs, {} member checks, {} violations",
                    rep.op, rep.pairs_checked, rep.member_checks, rep.violation_count
                );
                if !rep.is_sound() {
                    failures.push(rep.op.clone());
                }
                reports.push(serde_json::to_value(&rep).expect("serializable"));
                if args.inject_fault {
                    break;
                }
            }
        }
        Check::Optimality => {
            for op in ops {
                let rep = verify::check_optimality(op, args.width)?;
                eprintln!(
                    "{op}: {}/{} pairs optimal, {} strictly worse, {} unsound",
                    rep.equal_pairs, rep.pairs, rep.strictly_worse_pairs, rep.unsound_pairs
                );
                if !rep.is_optimal() {
                    failures.push(op.to_string());
                }
                reports.push(serde_json::to_value(&rep).expect("serializable"));
            }
        }
        Check::Lemmas => {
            for op in ops {
                let rep = match op {
                    OpId::Add => verify::check_add_lemmas(args.width)?,
                    OpId::Sub => verify::check_sub_lemmas(args.width)?,
                    op if op.is_multiplication() => {
                        let seed = args.seed.unwrap_or(0);
                        verify::check_mul_lemmas(args.width, args.samples, seed)?
                    }
                    _ => continue,
                };
                for l in &rep.lemmas {
                    eprintln!("{op} {}: {} checks, {} violations", l.lemma, l.checks, l.violations);
                }
                if !rep.holds() {
                    failures.push(op.to_string());
                }
                reports.push(serde_json::to_value(&rep).expect("serializable"));
            }
        }
        Check::StrengthReduction => {
            for (a, b) in [
                (OpId::OurMul, OpId::OurMulSimplified),
                (OpId::BitwiseMul, OpId::BitwiseMulOpt),
            ] {
                let rep = verify::check_equivalence(a, b, args.width, mode)?;
                eprintln!("{a} vs {b}: {} pairs, {} mismatches", rep.pairs_checked, rep.mismatch_count);
                if !rep.is_equivalent() {
                    failures.push(format!("{a}/{b}"));
                }
                reports.push(serde_json::to_value(&rep).expect("serializable"));
            }
        }
    }
    let text = if reports.len() == 1 {
        to_json(&reports[0])
    } else {
        to_json(&reports)
    };
    emit(args.out.as_deref(), &text)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("check failed for {}", failures.join(", "))))
    }
}

/// Addition that forgets the carry-propagated uncertainty.
fn broken_add(p: Tnum, q: Tnum) -> Tnum {
    let width = p.width();
    let limit = if width == 64 { u64::MAX } else { (1 << width) - 1 };
    let m = p.mask() | q.mask();
    let v = p.value().wrapping_add(q.value()) & limit & !m;
    Tnum::new(v, m, width).expect("value is masked")
}

fn precision(args: PrecisionArgs) -> CliResult {
    if let Some(range) = args.bitwidths {
        let rows = sweep_bitwidths(args.a, args.b, range, args.long)?;
        for r in &rows {
            eprintln!(
                "width {}: {:.4}% equal, {:.2}% of differing comparable, {:.2}% {} more precise",
                r.width, r.pct_equal, r.pct_differing_comparable, r.pct_a_more_precise, args.a
            );
        }
        if let Some(path) = &args.json {
            fs::write(path, to_json(&rows))?;
        }
        return emit(args.out.as_deref(), &bitwidth_rows_to_csv(args.a, args.b, &rows));
    }
    let width = args.width.expect("clap enforces --width or --bitwidths");
    let summary = if args.long {
        sweep_exhaustive_long(args.a, args.b, width)?
    } else {
        sweep_exhaustive(args.a, args.b, width)?
    };
    eprintln!(
        "width {width}: {} pairs, equal fraction {:.6}, {} more precise {}, {} more precise {}, {} incomparable",
        summary.total_pairs,
        summary.equal_fraction(),
        args.a,
        summary.a_more_precise,
        args.b,
        summary.b_more_precise,
        summary.incomparable
    );
    if let Some(path) = &args.json {
        fs::write(path, to_json(&summary))?;
    }
    emit(args.out.as_deref(), &summary.to_csv())
}

fn bench(args: BenchArgs) -> CliResult {
    let cfg = BenchConfig {
        ops: args.ops,
        n_pairs: args.pairs,
        trials: args.trials,
        seed: resolve_seed(args.seed),
        sampler: args.sampler.into(),
        pin_hint: args.pin,
    };
    cfg.validate()?;
    let report = run_bench(&cfg)?;
    eprintln!(
        "timer: {:?} ({}), resolution {} {}",
        report.timer, report.unit, report.timer_resolution, report.unit
    );
    eprintln!("input checksum: {:#018x}", report.input_checksum);
    for t in &report.timings {
        eprintln!(
            "{:<20} mean {:>9.1} p50 {:>6} p90 {:>6} p99 {:>6} {}",
            t.op.name(),
            t.mean_min,
            t.percentiles.p50,
            t.percentiles.p90,
            t.percentiles.p99,
            report.unit
        );
    }
    if let (Some(ours), Some(kern)) = (report.mean(OpId::OurMul), report.mean(OpId::KernMul)) {
        eprintln!(
            "our_mul/kern_mul mean ratio: {:.3} ({:.1}% faster; reference figure 33%)",
            ours / kern,
            100.0 * (1.0 - ours / kern)
        );
    }
    if let Some(path) = &args.out {
        fs::write(path, report.to_csv())?;
    }
    emit(args.json.as_deref(), &to_json(&report))
}

fn fixtures(args: FixtureArgs) -> CliResult {
    let seed = resolve_seed(args.seed);
    let records = fixture::generate(args.op, args.width, args.count, seed)?;
    emit(args.out.as_deref(), &fixture::to_json(&records))
}

fn counterexamples(args: CounterexampleArgs) -> CliResult {
    let seed = resolve_seed(args.seed);
    let search = verify::find_counterexamples(args.width, args.budget, seed)?;
    for c in &search.found {
        let operands: Vec<String> = c.operands.iter().map(Tnum::to_string).collect();
        eprintln!(
            "{}: ({}) -> {} vs {}",
            c.property,
            operands.join(", "),
            c.lhs,
            c.rhs
        );
    }
    for p in &search.not_found {
        eprintln!("{p}: none found");
    }
    emit(args.out.as_deref(), &to_json(&search))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Verify(a) => verify(a),
        Command::Precision(a) => precision(a),
        Command::Bench(a) => bench(a),
        Command::Fixtures(a) => fixtures(a),
        Command::Counterexamples(a) => counterexamples(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Failed(_) | CliError::Io(_) => 1,
            })
        }
    }
}
