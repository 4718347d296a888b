//! C ABI over `plurality-core`.
//!
//! Objects cross the boundary as opaque heap handles created by `*_new` /
//! `*_build` functions and released by the matching `*_free`. Every fallible
//! call returns a [`PlStatus`]; on failure the message is available from
//! [`pl_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plurality::analytics::pick_probabilities_3maj;
use plurality::oracle::ExactChain;
use plurality::sim::{rng_for, run_trial, Dynamics, TrialSpec};
use plurality::{classify, BiasStats, Configuration, Error, Rule3, TableRule};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    CapExceeded = 4,
    Singular = 5,
    BufferSize = 6,
    Panic = 7,
}

/// Opaque color-count vector.
pub struct PlConfiguration(Configuration);

/// Opaque 3-input rule.
pub struct PlRule(Rule3);

/// Opaque exact Markov chain.
pub struct PlChain(ExactChain);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PlBiasStats {
    pub m: u64,
    pub s: u64,
    pub alpha: f64,
    pub gamma: f64,
    /// Lowest-index color holding the maximum.
    pub plurality: u32,
    /// Number of colors tied at the maximum.
    pub majority_set_size: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PlClassification {
    pub clear_majority: bool,
    pub uniform: bool,
    pub in_m3: bool,
    /// Set when `uniform` is false.
    pub has_uniform_counterexample: bool,
    pub counterexample_colors: [u32; 3],
    pub counterexample_deltas: [u8; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PlTrialResult {
    pub converged: bool,
    /// Winning color, or -1 when not converged.
    pub winner: i64,
    pub rounds: u64,
    pub reached_majority: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::RuleParse { .. } => PlStatus::Parse,
        Error::KTooLarge { .. } | Error::EnumerationCap { .. } | Error::ChainCap { .. } => {
            PlStatus::CapExceeded
        }
        Error::Singular | Error::UnreachableAbsorption(_) => PlStatus::Singular,
        _ => PlStatus::InvalidArgument,
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), (PlStatus, String)>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside plurality".into());
            PlStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (PlStatus, String)>;
}

impl<T> IntoFfi<T> for Result<T, Error> {
    fn ffi(self) -> Result<T, (PlStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null() -> (PlStatus, String) {
    (PlStatus::NullPointer, "null pointer argument".into())
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, (PlStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn as_str<'a>(p: *const c_char) -> Result<&'a str, (PlStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PlStatus::InvalidArgument, "string is not UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (PlStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), (PlStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    if len != values.len() {
        return Err((
            PlStatus::BufferSize,
            format!("buffer holds {len} values, need {}", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, len);
    Ok(())
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn pl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `counts` points to `k` readable values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_configuration_new(
    counts: *const u64,
    k: usize,
    out: *mut *mut PlConfiguration,
) -> PlStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null());
        }
        let v = std::slice::from_raw_parts(counts, k).to_vec();
        let c = Configuration::new(v).ffi()?;
        write_out(out, Box::into_raw(Box::new(PlConfiguration(c))))
    })
}

/// # Safety
/// `c` is null or a handle from `pl_configuration_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_configuration_free(c: *mut PlConfiguration) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_configuration_k(c: *const PlConfiguration) -> usize {
    c.as_ref().map_or(0, |c| c.0.k())
}

/// # Safety
/// `c` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_configuration_n(c: *const PlConfiguration) -> u64 {
    c.as_ref().map_or(0, |c| c.0.n())
}

/// # Safety
/// `c` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_bias_stats(
    c: *const PlConfiguration,
    out: *mut PlBiasStats,
) -> PlStatus {
    guard(|| {
        let c = &as_ref(c)?.0;
        let b = BiasStats::of(c);
        write_out(
            out,
            PlBiasStats {
                m: b.m,
                s: b.s,
                alpha: b.alpha,
                gamma: b.gamma,
                plurality: c.plurality(),
                majority_set_size: b.majority_set.len() as u32,
            },
        )
    })
}

/// Per-node pick probabilities under 3-majority; `len` must equal `k`.
///
/// # Safety
/// `c` is a live handle; `out` has room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_pick_probabilities_3maj(
    c: *const PlConfiguration,
    out: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| copy_out(&pick_probabilities_3maj(&as_ref(c)?.0), out, len))
}

/// `3maj`, `3maj-first` or `median`.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_rule_builtin(name: *const c_char, out: *mut *mut PlRule) -> PlStatus {
    guard(|| {
        let name = as_str(name)?;
        let rule = Rule3::builtin(name)
            .ok_or_else(|| (PlStatus::InvalidArgument, format!("unknown rule {name:?}")))?;
        write_out(out, Box::into_raw(Box::new(PlRule(rule))))
    })
}

/// Parses a rule table in the text format (`k=<k>` then `a b c -> y` lines).
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_rule_parse(text: *const c_char, out: *mut *mut PlRule) -> PlStatus {
    guard(|| {
        let t = TableRule::parse(as_str(text)?).ffi()?;
        write_out(out, Box::into_raw(Box::new(PlRule(Rule3::Table(t)))))
    })
}

/// # Safety
/// `r` is null or a live rule handle.
#[no_mangle]
pub unsafe extern "C" fn pl_rule_free(r: *mut PlRule) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_classify(
    r: *const PlRule,
    k: usize,
    out: *mut PlClassification,
) -> PlStatus {
    guard(|| {
        let c = classify(&as_ref(r)?.0, k).ffi()?;
        let mut res = PlClassification {
            clear_majority: c.clear_majority,
            uniform: c.uniform,
            in_m3: c.in_m3,
            ..Default::default()
        };
        if let Some(cex) = c.uniform_counterexample {
            res.has_uniform_counterexample = true;
            res.counterexample_colors = cex.colors;
            res.counterexample_deltas = cex.deltas.as_array();
        }
        write_out(out, res)
    })
}

/// Runs one trial from `c` without adversary. `dynamics` is a built-in name
/// such as `3maj`, `median`, `voter` or `hmaj:5`.
///
/// # Safety
/// `c` is a live handle; `dynamics` is a NUL-terminated string; `out` is
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pl_run_trial(
    c: *const PlConfiguration,
    dynamics: *const c_char,
    max_rounds: u64,
    seed: u64,
    out: *mut PlTrialResult,
) -> PlStatus {
    guard(|| {
        let c = &as_ref(c)?.0;
        let d: Dynamics = as_str(dynamics)?.parse().ffi()?;
        let r = run_trial(c, &TrialSpec::new(d, max_rounds), &mut rng_for(seed)).ffi()?;
        write_out(
            out,
            PlTrialResult {
                converged: r.converged,
                winner: r.winner.map_or(-1, i64::from),
                rounds: r.rounds,
                reached_majority: r.reached_majority,
            },
        )
    })
}

/// # Safety
/// `dynamics` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_build(
    n: u64,
    k: usize,
    dynamics: *const c_char,
    out: *mut *mut PlChain,
) -> PlStatus {
    guard(|| {
        let d: Dynamics = as_str(dynamics)?.parse().ffi()?;
        let chain = ExactChain::build(n, k, &d).ffi()?;
        write_out(out, Box::into_raw(Box::new(PlChain(chain))))
    })
}

/// # Safety
/// `ch` is null or a live chain handle.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_free(ch: *mut PlChain) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `ch` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_state_count(ch: *const PlChain) -> usize {
    ch.as_ref().map_or(0, |c| c.0.states().len())
}

/// Index of the state with the given counts.
///
/// # Safety
/// `ch` is a live handle; `counts` points to `k` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_state_index(
    ch: *const PlChain,
    counts: *const u64,
    k: usize,
    out: *mut usize,
) -> PlStatus {
    guard(|| {
        let ch = &as_ref(ch)?.0;
        if counts.is_null() {
            return Err(null());
        }
        let idx = ch
            .state_index(std::slice::from_raw_parts(counts, k))
            .ffi()?;
        write_out(out, idx)
    })
}

fn state_in_range(ch: &ExactChain, state: usize) -> Result<(), (PlStatus, String)> {
    if state >= ch.states().len() {
        return Err((
            PlStatus::InvalidArgument,
            format!("state {state} out of range"),
        ));
    }
    Ok(())
}

/// Expected rounds to absorption from `state`.
///
/// # Safety
/// `ch` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_absorption_time(
    ch: *const PlChain,
    state: usize,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let ch = &as_ref(ch)?.0;
        state_in_range(ch, state)?;
        let times = ch.expected_absorption_time().ffi()?;
        write_out(out, times[state])
    })
}

/// Probability of ending monochromatic in each color, indexed by color;
/// `len` must equal `k`.
///
/// # Safety
/// `ch` is a live handle; `out` has room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_absorption_probabilities(
    ch: *const PlChain,
    state: usize,
    out: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| {
        let ch = &as_ref(ch)?.0;
        state_in_range(ch, state)?;
        let abs = ch.absorption_probabilities().ffi()?;
        let mut by_color = vec![0.0; ch.k()];
        for (p, color) in abs[state].iter().zip(ch.absorbing_colors()) {
            by_color[color as usize] = *p;
        }
        copy_out(&by_color, out, len)
    })
}
