//! Timing harness for the operators on random 64-bit tnum pairs.
//!
//! Each input pair is run `trials` times back to back and only the fastest
//! run is kept, which filters out interrupts and cache misses. Timing runs on
//! the calling thread only.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TnumError};
use crate::op::OpId;
use crate::tnum::{check_width, width_mask, Tnum};

/// Distribution of random tnums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Each trit is 0, 1 or unknown with probability 1/3, i.e. uniform over
    /// the `3^n` well-formed tnums.
    #[default]
    PerTritUniform,
    /// Value and mask drawn uniformly, then `value &= !mask`. Weights each
    /// tnum by `2^popcount(mask)`.
    UniformVmNormalized,
}

impl std::str::FromStr for Sampler {
    type Err = TnumError;

    fn from_str(s: &str) -> Result<Sampler> {
        match s {
            "per_trit_uniform" => Ok(Sampler::PerTritUniform),
            "uniform_vm_normalized" => Ok(Sampler::UniformVmNormalized),
            other => Err(TnumError::InvalidConfig(format!("unknown sampler {other:?}"))),
        }
    }
}

pub fn sample_tnum<R: Rng + ?Sized>(width: u32, sampler: Sampler, rng: &mut R) -> Result<Tnum> {
    check_width(width)?;
    Ok(sample_unchecked(width, sampler, rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(width: u32, sampler: Sampler, rng: &mut R) -> Tnum {
    match sampler {
        Sampler::PerTritUniform => {
            let (mut value, mut mask) = (0u64, 0u64);
            for bit in 0..width {
                match rng.gen_range(0u8..3) {
                    1 => value |= 1 << bit,
                    2 => mask |= 1 << bit,
                    _ => {}
                }
            }
            Tnum::from_parts(value, mask, width)
        }
        Sampler::UniformVmNormalized => {
            let limit = width_mask(width);
            let mask = rng.gen::<u64>() & limit;
            let value = rng.gen::<u64>() & limit & !mask;
            Tnum::from_parts(value, mask, width)
        }
    }
}

/// Deterministic pair stream for a seed.
pub fn sample_pairs(n: usize, width: u32, sampler: Sampler, seed: u64) -> Result<Vec<(Tnum, Tnum)>> {
    check_width(width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let p = sample_unchecked(width, sampler, &mut rng);
            let q = sample_unchecked(width, sampler, &mut rng);
            (p, q)
        })
        .collect())
}

/// FNV-1a over the value and mask words of a pair stream.
pub fn input_checksum(pairs: &[(Tnum, Tnum)]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for (p, q) in pairs {
        for word in [p.value(), p.mask(), q.value(), q.mask()] {
            for byte in word.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerKind {
    /// x86 time-stamp counter, in cycles.
    Tsc,
    /// `std::time::Instant`, in nanoseconds.
    Monotonic,
}

impl TimerKind {
    pub fn unit(self) -> &'static str {
        match self {
            TimerKind::Tsc => "cycles",
            TimerKind::Monotonic => "ns",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Timer {
    kind: TimerKind,
    origin: Instant,
}

#[cfg(target_arch = "x86_64")]
#[inline(always)]
fn read_tsc() -> u64 {
    use std::arch::x86_64::{_mm_lfence, _rdtsc};
    // SAFETY: lfence and rdtsc are available on every x86_64 processor.
    #[allow(unused_unsafe)]
    unsafe {
        _mm_lfence();
        let t = _rdtsc();
        _mm_lfence();
        t
    }
}

impl Timer {
    /// Prefers the time-stamp counter; falls back to the monotonic clock.
    pub fn detect() -> Result<Timer> {
        let origin = Instant::now();
        #[cfg(target_arch = "x86_64")]
        {
            let t0 = read_tsc();
            std::thread::sleep(Duration::from_millis(2));
            let t1 = read_tsc();
            if t1 > t0 {
                return Ok(Timer {
                    kind: TimerKind::Tsc,
                    origin,
                });
            }
        }
        let timer = Timer {
            kind: TimerKind::Monotonic,
            origin,
        };
        let t0 = timer.now();
        std::thread::sleep(Duration::from_millis(2));
        if timer.now() <= t0 {
            return Err(TnumError::TimerUnavailable(
                "monotonic clock did not advance".into(),
            ));
        }
        Ok(timer)
    }

    pub fn monotonic() -> Timer {
        Timer {
            kind: TimerKind::Monotonic,
            origin: Instant::now(),
        }
    }

    pub fn kind(&self) -> TimerKind {
        self.kind
    }

    #[inline(always)]
    pub fn now(&self) -> u64 {
        match self.kind {
            #[cfg(target_arch = "x86_64")]
            TimerKind::Tsc => read_tsc(),
            _ => self.origin.elapsed().as_nanos() as u64,
        }
    }

    /// Smallest nonzero difference between consecutive reads.
    pub fn resolution(&self) -> u64 {
        let mut best = u64::MAX;
        for _ in 0..1000 {
            let a = self.now();
            let mut b = self.now();
            while b == a {
                b = self.now();
            }
            best = best.min(b - a);
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub ops: Vec<OpId>,
    pub n_pairs: usize,
    pub trials: u32,
    pub seed: u64,
    pub sampler: Sampler,
    /// Processor to pin the timing thread to, where supported.
    pub pin_hint: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> BenchConfig {
        BenchConfig {
            ops: vec![OpId::KernMul, OpId::BitwiseMulOpt, OpId::OurMul],
            n_pairs: 4_000_000,
            trials: 10,
            seed: 0x5eed,
            sampler: Sampler::PerTritUniform,
            pin_hint: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(TnumError::InvalidConfig("n_pairs must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(TnumError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.ops.is_empty() {
            return Err(TnumError::InvalidConfig("no operators selected".into()));
        }
        if let Some(op) = self.ops.iter().find(|op| op.is_shift()) {
            return Err(TnumError::InvalidConfig(format!(
                "{op} takes a shift amount and cannot be timed on tnum pairs"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: u64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpTiming {
    pub op: OpId,
    pub samples: usize,
    pub mean_min: f64,
    pub min: u64,
    pub max: u64,
    pub percentiles: Percentiles,
    /// Fold of every benchmarked output; keeps the calls observable.
    pub output_checksum: u64,
    /// Outputs of the first audited pairs that disagreed with a re-run.
    pub audit_mismatches: usize,
    #[serde(skip)]
    pub minimums: Vec<u64>,
}

impl OpTiming {
    fn from_minimums(op: OpId, minimums: Vec<u64>, output_checksum: u64, audit_mismatches: usize) -> OpTiming {
        let mut sorted = minimums.clone();
        sorted.sort_unstable();
        let pick = |pct: usize| sorted[((sorted.len() - 1) * pct) / 100];
        let mean_min = minimums.iter().map(|&m| m as f64).sum::<f64>() / minimums.len() as f64;
        OpTiming {
            op,
            samples: minimums.len(),
            mean_min,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            percentiles: Percentiles {
                p10: pick(10),
                p50: pick(50),
                p90: pick(90),
                p99: pick(99),
            },
            output_checksum,
            audit_mismatches,
            minimums,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub timer: TimerKind,
    pub unit: String,
    pub timer_resolution: u64,
    pub input_checksum: u64,
    pub pinned: bool,
    pub audited_pairs: usize,
    pub timings: Vec<OpTiming>,
}

impl BenchReport {
    pub fn timing(&self, op: OpId) -> Option<&OpTiming> {
        self.timings.iter().find(|t| t.op == op)
    }

    pub fn mean(&self, op: OpId) -> Option<f64> {
        self.timing(op).map(|t| t.mean_min)
    }

    /// One row per operator and pair: `op,pair_index,min_<unit>`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("op,pair_index,min_{}\n", self.unit);
        for t in &self.timings {
            for (i, m) in t.minimums.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", t.op, i, m);
            }
        }
        out
    }
}

pub const AUDITED_PAIRS: usize = 1000;

#[cfg(target_os = "linux")]
fn pin_to(cpu: usize) -> bool {
    // SAFETY: cpu_set_t is plain data and is fully initialised by CPU_ZERO.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        if cpu >= libc::CPU_SETSIZE as usize {
            return false;
        }
        libc::CPU_SET(cpu, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to(_cpu: usize) -> bool {
    false
}

#[inline(never)]
fn time_op(timer: &Timer, op: OpId, pairs: &[(Tnum, Tnum)], trials: u32) -> (Vec<u64>, u64, Vec<Tnum>) {
    let mut minimums = Vec::with_capacity(pairs.len());
    let mut outputs = Vec::with_capacity(AUDITED_PAIRS.min(pairs.len()));
    let mut sink = 0u64;
    for &(p, q) in pairs {
        let mut best = u64::MAX;
        let mut r = p;
        for _ in 0..trials {
            let start = timer.now();
            r = black_box(op.eval(black_box(p), black_box(q)));
            let end = timer.now();
            best = best.min(end.saturating_sub(start));
        }
        sink = sink.rotate_left(7) ^ r.value() ^ r.mask().rotate_left(32);
        if outputs.len() < AUDITED_PAIRS {
            outputs.push(r);
        }
        minimums.push(best);
    }
    (minimums, black_box(sink), outputs)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_bench_with_timer(cfg, Timer::detect()?)
}

pub fn run_bench_with_timer(cfg: &BenchConfig, timer: Timer) -> Result<BenchReport> {
    cfg.validate()?;
    let pairs = sample_pairs(cfg.n_pairs, 64, cfg.sampler, cfg.seed)?;
    let pinned = cfg.pin_hint.map(pin_to).unwrap_or(false);
    let timer_resolution = timer.resolution();
    let timings = cfg
        .ops
        .iter()
        .map(|&op| {
            let (minimums, checksum, outputs) = time_op(&timer, op, &pairs, cfg.trials);
            let audit_mismatches = outputs
                .iter()
                .zip(&pairs)
                .filter(|(r, (p, q))| op.apply(*p, *q).ok() != Some(**r))
                .count();
            OpTiming::from_minimums(op, minimums, checksum, audit_mismatches)
        })
        .collect();
    Ok(BenchReport {
        config: cfg.clone(),
        timer: timer.kind(),
        unit: timer.kind().unit().to_string(),
        timer_resolution,
        input_checksum: input_checksum(&pairs),
        pinned,
        audited_pairs: AUDITED_PAIRS.min(pairs.len()),
        timings,
    })
}
