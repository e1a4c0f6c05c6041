//! Monte-Carlo experiments: NMSE and BER sweeps over the source power,
//! iteration counts, and the CSV artifacts they produce.

mod csv;
mod detect;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use csv::{csv_string, emit_csv, parse_csv};
pub use detect::{awgn_qpsk_errors, ml_detect, qpsk_modulate, MlDetector, ML_MAX_CANDIDATES};

use crate::conic::dump_program;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{complex_gaussian, db_to_linear, generate_channels, Mode, Network, SystemConfig, TransceiverDesign};
use crate::opt::{self, Settings};
use detect::{count_errors, random_bits};

/// Fraction of failed trials above which a sweep is reported as degraded.
pub const FAILURE_THRESHOLD: f64 = 0.05;

const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    IterativeOneWay,
    SimplifiedOneWay,
    IterativeTwoWay,
    SimplifiedTwoWay,
    Naf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::IterativeOneWay,
        Algorithm::SimplifiedOneWay,
        Algorithm::IterativeTwoWay,
        Algorithm::SimplifiedTwoWay,
        Algorithm::Naf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::IterativeOneWay => "iterative-oneway",
            Algorithm::SimplifiedOneWay => "simplified-oneway",
            Algorithm::IterativeTwoWay => "iterative-twoway",
            Algorithm::SimplifiedTwoWay => "simplified-twoway",
            Algorithm::Naf => "naf",
        }
    }

    /// Relaying mode the algorithm is restricted to; `None` for NAF.
    pub fn mode(self) -> Option<Mode> {
        match self {
            Algorithm::IterativeOneWay | Algorithm::SimplifiedOneWay => Some(Mode::OneWay),
            Algorithm::IterativeTwoWay | Algorithm::SimplifiedTwoWay => Some(Mode::TwoWay),
            Algorithm::Naf => None,
        }
    }

    /// Accepts full names and the short forms `iterative`, `simplified`,
    /// which resolve against `mode`.
    pub fn parse_for(name: &str, mode: Mode) -> Result<Self> {
        match (name.trim(), mode) {
            ("iterative", Mode::OneWay) => Ok(Algorithm::IterativeOneWay),
            ("iterative", Mode::TwoWay) => Ok(Algorithm::IterativeTwoWay),
            ("simplified", Mode::OneWay) => Ok(Algorithm::SimplifiedOneWay),
            ("simplified", Mode::TwoWay) => Ok(Algorithm::SimplifiedTwoWay),
            (other, _) => other.parse(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Mse,
    Ber,
    Convergence,
}

impl Experiment {
    pub fn metrics(self) -> &'static [Metric] {
        match self {
            Experiment::Mse => &[Metric::WorstNmse, Metric::AvgNmse],
            Experiment::Ber => &[Metric::BerPooled, Metric::BerWorst, Metric::WorstNmse],
            Experiment::Convergence => &[Metric::Iterations, Metric::IterationsMedian, Metric::WorstNmse],
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Experiment::Mse),
            "ber" => Ok(Experiment::Ber),
            "convergence" => Ok(Experiment::Convergence),
            _ => Err(Error::InvalidArgument(format!("unknown experiment '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    WorstNmse,
    AvgNmse,
    /// Bit errors over bits sent, pooled over users and trials.
    BerPooled,
    /// Per-trial worst-user BER, averaged over trials.
    BerWorst,
    Iterations,
    IterationsMedian,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::WorstNmse => "worst_nmse",
            Metric::AvgNmse => "avg_nmse",
            Metric::BerPooled => "ber_pooled",
            Metric::BerWorst => "ber_worst",
            Metric::Iterations => "iterations",
            Metric::IterationsMedian => "iterations_median",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Metric::WorstNmse,
            Metric::AvgNmse,
            Metric::BerPooled,
            Metric::BerWorst,
            Metric::Iterations,
            Metric::IterationsMedian,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown metric '{s}'")))
    }
}

/// Outcome of one (seed, source power, algorithm) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub p_s_db: f64,
    pub p_r_db: f64,
    /// Per receiver (`2K` entries in two-way mode).
    pub per_user_mse: Vec<f64>,
    pub worst_nmse: f64,
    pub avg_nmse: f64,
    /// Alternating passes, inner passes for the simplified design, 0 for NAF.
    pub iterations: usize,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub per_user_bit_errors: Vec<u64>,
    pub per_user_bits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub p_s_db: f64,
    pub message: String,
}

/// One CSV row: an aggregate over the successful trials of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p_s_db: f64,
    pub algorithm: Algorithm,
    pub metric: Metric,
    pub value: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub axis: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub trial_count: usize,
    pub config: SystemConfig,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

impl SweepResult {
    pub fn value(&self, p_s_db: f64, algorithm: Algorithm, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.p_s_db == p_s_db && r.algorithm == algorithm && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn records_for(&self, p_s_db: f64, algorithm: Algorithm) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.p_s_db == p_s_db && r.algorithm == algorithm)
    }

    pub fn failure_fraction(&self) -> f64 {
        let total = self.records.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }

    /// More than [`FAILURE_THRESHOLD`] of the trials failed.
    pub fn degraded(&self) -> bool {
        self.failure_fraction() > FAILURE_THRESHOLD
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub settings: Settings,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// When set, every conic program is written to this directory.
    pub dump_dir: Option<PathBuf>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { settings: Settings::default(), workers: 1, dump_dir: None }
    }
}

/// Runs one algorithm on one network. Returns the design and its
/// iteration count.
pub fn run_algorithm(algorithm: Algorithm, net: &Network, settings: &Settings) -> Result<(TransceiverDesign, usize)> {
    if let Some(mode) = algorithm.mode() {
        if mode != net.mode {
            return Err(Error::InvalidArgument(format!("{algorithm} cannot run in {} mode", net.mode)));
        }
    }
    match algorithm {
        Algorithm::Naf => Ok((crate::model::naf_for(net)?, 0)),
        Algorithm::IterativeOneWay | Algorithm::IterativeTwoWay => {
            let b = net.initial_precoders();
            let f = net.isotropic_relay(&b)?;
            let w = net.mmse_receivers(&b, &f)?;
            let (design, trace) = opt::iterate(net, &TransceiverDesign { b, f, w }, settings)?;
            Ok((design, trace.iters))
        }
        Algorithm::SimplifiedOneWay | Algorithm::SimplifiedTwoWay => {
            let out = opt::simplified_design(net, settings)?;
            Ok((out.design, out.inner_iters))
        }
    }
}

pub fn run_mse_sweep(
    cfg: &SystemConfig,
    algorithms: &[Algorithm],
    p_s_db: &[f64],
    trials: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<SweepResult> {
    run_sweep(Experiment::Mse, cfg, algorithms, p_s_db, trials, 0, base_seed, opts)
}

/// Each trial sends `bits_per_trial / (2 max N_b)` symbol vectors per
/// transmitter, so with equal stream counts every transmitter sends
/// `bits_per_trial` bits.
pub fn run_ber_sweep(
    cfg: &SystemConfig,
    algorithms: &[Algorithm],
    p_s_db: &[f64],
    trials: usize,
    bits_per_trial: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<SweepResult> {
    run_sweep(Experiment::Ber, cfg, algorithms, p_s_db, trials, bits_per_trial, base_seed, opts)
}

pub fn run_convergence(
    cfg: &SystemConfig,
    algorithms: &[Algorithm],
    p_s_db: &[f64],
    trials: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<SweepResult> {
    run_sweep(Experiment::Convergence, cfg, algorithms, p_s_db, trials, 0, base_seed, opts)
}

#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    experiment: Experiment,
    cfg: &SystemConfig,
    algorithms: &[Algorithm],
    p_s_db: &[f64],
    trials: usize,
    bits_per_trial: usize,
    base_seed: u64,
    opts: &SimOptions,
) -> Result<SweepResult> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut algs = algorithms.to_vec();
    algs.sort_by_key(|a| a.name());
    algs.dedup();
    if let Some(a) = algs.iter().find(|a| a.mode().is_some_and(|m| m != cfg.mode)) {
        return Err(Error::InvalidArgument(format!("{a} cannot run in {} mode", cfg.mode)));
    }
    if experiment == Experiment::Ber {
        check_bits(cfg, bits_per_trial)?;
    }
    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    }

    let (n_p, n_a) = (p_s_db.len(), algs.len());
    let jobs: Vec<(usize, usize, usize)> = (0..trials)
        .flat_map(|t| (0..n_p).flat_map(move |p| (0..n_a).map(move |a| (t, p, a))))
        .collect();
    let run = |&(t, p, a): &(usize, usize, usize)| -> std::result::Result<TrialRecord, TrialFailure> {
        let seed = base_seed.wrapping_add(t as u64);
        let job = Job { seed, p_index: p, p_s_db: p_s_db[p], algorithm: algs[a] };
        run_job(&job, experiment, cfg, bits_per_trial, opts).map_err(|e| TrialFailure {
            seed,
            algorithm: job.algorithm,
            p_s_db: job.p_s_db,
            message: e.to_string(),
        })
    };
    let outcomes: Vec<_> = if opts.workers == 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let mut rows = Vec::new();
    for &p in p_s_db {
        for &alg in &algs {
            let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.p_s_db == p && r.algorithm == alg).collect();
            let failed = failures.iter().filter(|f| f.p_s_db == p && f.algorithm == alg).count();
            for &metric in experiment.metrics() {
                rows.push(SweepRow {
                    p_s_db: p,
                    algorithm: alg,
                    metric,
                    value: round_sig(aggregate(metric, &ok)),
                    trials: ok.len(),
                    failures: failed,
                });
            }
        }
    }
    Ok(SweepResult {
        experiment,
        axis: p_s_db.to_vec(),
        rows,
        trial_count: trials,
        config: cfg.clone(),
        records,
        failures,
    })
}

fn check_bits(cfg: &SystemConfig, bits: usize) -> Result<()> {
    let block = 2 * (0..cfg.users()).map(|j| cfg.streams(j)).max().unwrap_or(1);
    if bits == 0 || bits % block != 0 {
        return Err(Error::InvalidArgument(format!(
            "bits per trial ({bits}) must be a positive multiple of 2 N_b = {block}"
        )));
    }
    Ok(())
}

/// Rounds to the 10 significant digits written to CSV, so parsed rows
/// compare equal to the in-memory ones.
fn round_sig(x: f64) -> f64 {
    format!("{x:.9e}").parse().unwrap_or(x)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn aggregate(metric: Metric, records: &[&TrialRecord]) -> f64 {
    match metric {
        Metric::WorstNmse => mean(records.iter().map(|r| r.worst_nmse)),
        Metric::AvgNmse => mean(records.iter().map(|r| r.avg_nmse)),
        Metric::BerPooled => {
            let e: u64 = records.iter().map(|r| r.bit_errors).sum();
            let n: u64 = records.iter().map(|r| r.bits_sent).sum();
            if n == 0 {
                f64::NAN
            } else {
                e as f64 / n as f64
            }
        }
        Metric::BerWorst => mean(records.iter().map(|r| {
            r.per_user_bit_errors
                .iter()
                .zip(&r.per_user_bits)
                .map(|(&e, &n)| e as f64 / n as f64)
                .fold(0.0, f64::max)
        })),
        Metric::Iterations => mean(records.iter().map(|r| r.iterations as f64)),
        Metric::IterationsMedian => {
            let mut v: Vec<usize> = records.iter().map(|r| r.iterations).collect();
            v.sort_unstable();
            match v.len() {
                0 => f64::NAN,
                n if n % 2 == 1 => v[n / 2] as f64,
                n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
            }
        }
    }
}

struct Job {
    seed: u64,
    p_index: usize,
    p_s_db: f64,
    algorithm: Algorithm,
}

fn dump_hook(dir: PathBuf, job: &Job) -> opt::DumpHook {
    let counter = AtomicUsize::new(0);
    let prefix = format!("seed{}_ps{}_{}", job.seed, job.p_s_db, job.algorithm);
    Arc::new(move |stage, prog| {
        let n = counter.fetch_add(1, Ordering::Relaxed);
        let path = dir.join(format!("{prefix}_{n:04}_{}.txt", stage.replace(' ', "-")));
        // Dumps are diagnostics; a failed write must not fail the trial.
        let _ = std::fs::write(path, dump_program(prog));
    })
}

fn run_job(job: &Job, experiment: Experiment, base: &SystemConfig, bits: usize, opts: &SimOptions) -> Result<TrialRecord> {
    let cfg = base.with_source_power(db_to_linear(job.p_s_db));
    let ch = generate_channels(&cfg, job.seed);
    let net = Network::new(&cfg, &ch)?;
    let mut settings = opts.settings.clone();
    if let Some(dir) = &opts.dump_dir {
        settings.dump = Some(dump_hook(dir.clone(), job));
    }
    let (design, iterations) = run_algorithm(job.algorithm, &net, &settings)?;
    if !net.is_feasible(&design, FEASIBILITY_TOL)? {
        return Err(Error::InvalidArgument(format!("{} returned a design violating the power budgets", job.algorithm)));
    }
    let users = net.users();
    let per_user_mse = (0..users)
        .map(|k| net.mse(&design.b, &design.f, &design.w[k], k))
        .collect::<Result<Vec<_>>>()?;
    let nb: Vec<f64> = (0..users).map(|k| net.streams[net.desired(k)] as f64).collect();
    let worst_nmse = per_user_mse.iter().zip(&nb).map(|(e, n)| e / n).fold(f64::NEG_INFINITY, f64::max);
    let avg_nmse = per_user_mse.iter().sum::<f64>() / nb.iter().sum::<f64>();
    let (per_user_bit_errors, per_user_bits) = if experiment == Experiment::Ber {
        let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
        rng.set_stream(1 + job.p_index as u64);
        simulate_bits(&net, &design, bits, &mut rng)?
    } else {
        (vec![0; users], vec![0; users])
    };
    Ok(TrialRecord {
        seed: job.seed,
        algorithm: job.algorithm,
        p_s_db: job.p_s_db,
        p_r_db: 10.0 * cfg.p_r.log10(),
        per_user_mse,
        worst_nmse,
        avg_nmse,
        iterations,
        bit_errors: per_user_bit_errors.iter().sum(),
        bits_sent: per_user_bits.iter().sum(),
        per_user_bit_errors,
        per_user_bits,
    })
}

/// Sends `bits / (2 max N_b)` QPSK vectors from every transmitter through
/// both hops with fresh noise and detects them at the intended receivers.
/// Returns per-receiver error and bit counts.
pub fn simulate_bits<R: Rng>(
    net: &Network,
    design: &TransceiverDesign,
    bits: usize,
    rng: &mut R,
) -> Result<(Vec<u64>, Vec<u64>)> {
    let users = net.users();
    let detectors = (0..users)
        .map(|k| {
            let (h, cov) = net.equivalent_link(&design.b, &design.f, k)?;
            MlDetector::new(&h, &cov, net.streams[net.desired(k)])
        })
        .collect::<Result<Vec<_>>>()?;
    let hb: Vec<CMatrix> = (0..users).map(|j| &net.uplinks[j] * &design.b[j]).collect();
    let rf: Vec<CMatrix> = (0..users).map(|k| &net.downlinks[k] * &design.f).collect();
    let blocks = bits / (2 * net.streams.iter().max().copied().unwrap_or(1));
    let mut errors = vec![0u64; users];
    let mut sent = vec![0u64; users];
    for _ in 0..blocks {
        let tx: Vec<Vec<bool>> = (0..users).map(|j| random_bits(rng, 2 * net.streams[j])).collect();
        let syms: Vec<CMatrix> = tx
            .iter()
            .map(|b| Ok(CMatrix::from_vec(b.len() / 2, 1, qpsk_modulate(b)?)))
            .collect::<Result<_>>()?;
        let mut yr = complex_gaussian(rng, net.n_r, 1, net.sigma2_r);
        for j in 0..users {
            yr += &hb[j] * &syms[j];
        }
        for k in 0..users {
            let mut input = yr.clone();
            if let Some(o) = net.own(k) {
                input -= &hb[o] * &syms[o];
            }
            let y = &rf[k] * input + complex_gaussian(rng, net.rx_antennas(k), 1, net.sigma2_d);
            let d = net.desired(k);
            let rx = detectors[k].detect(&y);
            errors[k] += count_errors(&tx[d], &rx);
            sent[k] += tx[d].len() as u64;
        }
    }
    Ok((errors, sent))
}
