//! C ABI for the relaynet library.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free` function. Every fallible call returns a [`RelaynetStatus`]; on
//! failure [`relaynet_last_error`] describes what went wrong on the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use relaynet::model::{db_to_linear, generate_channels, ChannelRealization, Mode, Network, SystemConfig, TransceiverDesign};
use relaynet::opt::Settings;
use relaynet::sim::{csv_string, run_algorithm, run_mse_sweep, Algorithm, SimOptions};
use relaynet::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaynetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    /// A conic subproblem did not reach an optimal solution.
    Solver = 5,
    /// Linear algebra or program construction failed.
    Numerical = 6,
    /// The library panicked; the handle arguments should be considered lost.
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaynetMode {
    OneWay = 0,
    TwoWay = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaynetAlgorithm {
    Iterative = 0,
    Simplified = 1,
    Naf = 2,
}

/// System parameters: antenna counts, streams, power budgets, noise.
pub struct RelaynetConfig {
    inner: SystemConfig,
}

/// One channel realization drawn for a configuration.
pub struct RelaynetChannels {
    inner: ChannelRealization,
}

/// A transceiver design together with its per-user MSE.
pub struct RelaynetDesign {
    design: TransceiverDesign,
    per_user_mse: Vec<f64>,
    worst_nmse: f64,
    iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RelaynetStatus {
    match e {
        Error::Config(_) | Error::Parse { .. } => RelaynetStatus::Config,
        Error::InvalidArgument(_) => RelaynetStatus::InvalidArgument,
        Error::Io { .. } => RelaynetStatus::Io,
        Error::Solver { .. } | Error::RelayPowerExhausted(_) | Error::Aborted { .. } => RelaynetStatus::Solver,
        Error::Linalg(_) | Error::Program(_) => RelaynetStatus::Numerical,
    }
}

struct Failure(RelaynetStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RelaynetStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RelaynetStatus::InvalidArgument, msg.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RelaynetStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            RelaynetStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RelaynetStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn algorithm_for(alg: RelaynetAlgorithm, mode: Mode) -> Algorithm {
    match (alg, mode) {
        (RelaynetAlgorithm::Iterative, Mode::OneWay) => Algorithm::IterativeOneWay,
        (RelaynetAlgorithm::Iterative, Mode::TwoWay) => Algorithm::IterativeTwoWay,
        (RelaynetAlgorithm::Simplified, Mode::OneWay) => Algorithm::SimplifiedOneWay,
        (RelaynetAlgorithm::Simplified, Mode::TwoWay) => Algorithm::SimplifiedTwoWay,
        (RelaynetAlgorithm::Naf, _) => Algorithm::Naf,
    }
}

/// Message of the last failed call on this thread, or an empty string after a
/// successful one. The pointer stays valid until the next library call on the
/// same thread.
#[no_mangle]
pub extern "C" fn relaynet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relaynet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a configuration with identical pairs. Powers are in dB; both noise
/// variances start at 1.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn relaynet_config_uniform(
    mode: RelaynetMode,
    pairs: usize,
    n_s: usize,
    n_r: usize,
    n_d: usize,
    n_b: usize,
    p_s_db: f64,
    p_r_db: f64,
    out: *mut *mut RelaynetConfig,
) -> RelaynetStatus {
    guard(|| {
        let mode = match mode {
            RelaynetMode::OneWay => Mode::OneWay,
            RelaynetMode::TwoWay => Mode::TwoWay,
        };
        let inner = SystemConfig::uniform(mode, pairs, n_s, n_r, n_d, n_b, db_to_linear(p_s_db), db_to_linear(p_r_db))?;
        store(out, RelaynetConfig { inner })
    })
}

/// Reads a configuration file in the `key = value` format used by the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_config_load(path: *const c_char, out: *mut *mut RelaynetConfig) -> RelaynetStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
        let inner = SystemConfig::from_file(Path::new(path))?;
        store(out, RelaynetConfig { inner })
    })
}

/// Sets every source budget to `p_s_db`.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn relaynet_config_set_source_power_db(cfg: *mut RelaynetConfig, p_s_db: f64) -> RelaynetStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "config")?;
        let next = cfg.inner.with_source_power(db_to_linear(p_s_db));
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// Sets the relay and destination noise variances.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn relaynet_config_set_noise(cfg: *mut RelaynetConfig, sigma2_r: f64, sigma2_d: f64) -> RelaynetStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "config")?;
        let mut next = cfg.inner.clone();
        next.sigma2_r = sigma2_r;
        next.sigma2_d = sigma2_d;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// Number of receiving users: K one-way, 2K two-way.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_config_users(cfg: *const RelaynetConfig, out: *mut usize) -> RelaynetStatus {
    guard(|| {
        let cfg = deref(cfg, "config")?;
        *deref_mut(out, "output pointer")? = cfg.inner.users();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relaynet_config_free(cfg: *mut RelaynetConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Draws Rayleigh channels for `cfg`; the same seed gives the same channels.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_channels_generate(
    cfg: *const RelaynetConfig,
    seed: u64,
    out: *mut *mut RelaynetChannels,
) -> RelaynetStatus {
    guard(|| {
        let cfg = deref(cfg, "config")?;
        cfg.inner.validate()?;
        store(out, RelaynetChannels { inner: generate_channels(&cfg.inner, seed) })
    })
}

/// # Safety
/// `ch` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relaynet_channels_free(ch: *mut RelaynetChannels) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Runs one design algorithm on one channel realization. The algorithm runs in
/// the configuration's mode.
///
/// # Safety
/// `cfg` and `ch` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_compute(
    cfg: *const RelaynetConfig,
    ch: *const RelaynetChannels,
    algorithm: RelaynetAlgorithm,
    out: *mut *mut RelaynetDesign,
) -> RelaynetStatus {
    guard(|| {
        let cfg = deref(cfg, "config")?;
        let ch = deref(ch, "channels")?;
        let net = Network::new(&cfg.inner, &ch.inner)?;
        let alg = algorithm_for(algorithm, net.mode);
        let (design, iterations) = run_algorithm(alg, &net, &Settings::default())?;
        let per_user_mse = net.per_user_mse(&design)?;
        let worst_nmse = per_user_mse
            .iter()
            .enumerate()
            .map(|(k, e)| e / net.streams[net.desired(k)] as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        store(out, RelaynetDesign { design, per_user_mse, worst_nmse, iterations })
    })
}

/// Copies the per-user MSE into `out`, which must hold at least as many
/// entries as there are users.
///
/// # Safety
/// `design` must be a live handle; `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_user_mse(design: *const RelaynetDesign, out: *mut f64, len: usize) -> RelaynetStatus {
    guard(|| {
        let d = deref(design, "design")?;
        let n = d.per_user_mse.len();
        if len < n {
            return Err(invalid(format!("buffer holds {len} values, design has {n} users")));
        }
        slice_mut(out, len, "output buffer")?[..n].copy_from_slice(&d.per_user_mse);
        Ok(())
    })
}

/// Largest per-user MSE divided by that user's stream count.
///
/// # Safety
/// `design` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_worst_nmse(design: *const RelaynetDesign, out: *mut f64) -> RelaynetStatus {
    guard(|| {
        *deref_mut(out, "output pointer")? = deref(design, "design")?.worst_nmse;
        Ok(())
    })
}

/// Alternating passes (iterative), inner rounds (simplified) or 0 (NAF).
///
/// # Safety
/// `design` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_iterations(design: *const RelaynetDesign, out: *mut usize) -> RelaynetStatus {
    guard(|| {
        *deref_mut(out, "output pointer")? = deref(design, "design")?.iterations;
        Ok(())
    })
}

/// Relay matrix shape.
///
/// # Safety
/// `design` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_relay_shape(
    design: *const RelaynetDesign,
    rows: *mut usize,
    cols: *mut usize,
) -> RelaynetStatus {
    guard(|| {
        let f = &deref(design, "design")?.design.f;
        *deref_mut(rows, "rows")? = f.nrows();
        *deref_mut(cols, "cols")? = f.ncols();
        Ok(())
    })
}

/// Copies the relay matrix in row-major order, real and imaginary parts in
/// separate buffers of `len >= rows * cols` entries.
///
/// # Safety
/// `design` must be a live handle; `re` and `im` must each point to `len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_relay_matrix(
    design: *const RelaynetDesign,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> RelaynetStatus {
    guard(|| {
        let f = &deref(design, "design")?.design.f;
        let n = f.nrows() * f.ncols();
        if len < n {
            return Err(invalid(format!("buffers hold {len} values, relay matrix has {n}")));
        }
        let re = slice_mut(re, len, "re")?;
        let im = slice_mut(im, len, "im")?;
        for r in 0..f.nrows() {
            for c in 0..f.ncols() {
                re[r * f.ncols() + c] = f[(r, c)].re;
                im[r * f.ncols() + c] = f[(r, c)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `design` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relaynet_design_free(design: *mut RelaynetDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Runs an NMSE sweep over `p_s_db` and returns the CSV text the CLI would
/// write. `workers` = 0 uses one thread per core. Free the string with
/// [`relaynet_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `algorithms` and `p_s_db` must point to
/// `n_algorithms` and `n_points` values; `out_csv` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn relaynet_sweep_mse_csv(
    cfg: *const RelaynetConfig,
    algorithms: *const RelaynetAlgorithm,
    n_algorithms: usize,
    p_s_db: *const f64,
    n_points: usize,
    trials: usize,
    seed: u64,
    workers: usize,
    out_csv: *mut *mut c_char,
) -> RelaynetStatus {
    guard(|| {
        let cfg = deref(cfg, "config")?;
        if out_csv.is_null() {
            return Err(null("output pointer"));
        }
        let mut algs: Vec<Algorithm> = slice(algorithms, n_algorithms, "algorithms")?
            .iter()
            .map(|&a| algorithm_for(a, cfg.inner.mode))
            .collect();
        if algs.is_empty() {
            return Err(invalid("no algorithms given"));
        }
        algs.dedup();
        let axis = slice(p_s_db, n_points, "p_s_db")?;
        let opts = SimOptions { workers, ..SimOptions::default() };
        let result = run_mse_sweep(&cfg.inner, &algs, axis, trials, seed, &opts)?;
        let text = CString::new(csv_string(&result)).map_err(|_| invalid("CSV contains NUL"))?;
        *out_csv = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn relaynet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
