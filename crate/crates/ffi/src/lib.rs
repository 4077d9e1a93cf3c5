//! C ABI over `rbc-core`.
//!
//! Every fallible call returns an [`RbcError`] code and leaves a message for
//! [`rbc_last_error`] on the calling thread. Handles are opaque and must be
//! released with their matching `_free` function; strings returned to the
//! caller are released with [`rbc_string_free`].

use rbc_core::bounds::cheat_success_bound_f64;
use rbc_core::cli::Config;
use rbc_core::costmodel::{site1_bits_per_round, site2_bits_per_round};
use rbc_core::protocol::{run_rbc1, run_rbc2, verify_session, ProtocolKind, SessionRun, SessionStatus, Transcript};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbcError {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Simulation = 4,
    Parse = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbcStatus {
    Sustained = 0,
    Unveiled = 1,
    Aborted = 2,
}

/// A finished session.
pub struct RbcSession {
    run: SessionRun,
}

/// A parsed transcript.
pub struct RbcTranscript {
    transcript: Transcript,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), (RbcError, String)>) -> RbcError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RbcError::Ok
        }
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            RbcError::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RbcError, String)> {
    if p.is_null() {
        return Err((RbcError::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (RbcError::InvalidUtf8, format!("{what}: {e}")))
}

fn null_out<T>(p: *mut T, what: &str) -> Result<(), (RbcError, String)> {
    if p.is_null() {
        Err((RbcError::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rbc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs a session described by `config` (flat `key = value` text, may be
/// empty for the defaults) with Alice committing `bit`.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rbc_session_run(config: *const c_char, bit: u8, out: *mut *mut RbcSession) -> RbcError {
    guard(|| {
        let text = read_str(config, "config")?;
        null_out(out, "out")?;
        if bit > 1 {
            return Err((RbcError::OutOfRange, format!("bit must be 0 or 1, got {bit}")));
        }
        let mut cfg = Config::default();
        cfg.apply_text(text, "config").map_err(|e| (RbcError::InvalidConfig, e.to_string()))?;
        let session = cfg.session().map_err(|e| (RbcError::InvalidConfig, e.to_string()))?;
        let run = match session.kind {
            ProtocolKind::Rbc1 => run_rbc1(&session, bit),
            ProtocolKind::Rbc2 => {
                let strategy = rbc_core::adversary::strategy_by_name(&session.strategy)
                    .ok_or_else(|| (RbcError::InvalidConfig, format!("strategy: unknown {:?}", session.strategy)))?;
                run_rbc2(&session, strategy.as_ref(), bit)
            }
        }
        .map_err(|e| (RbcError::Simulation, e.to_string()))?;
        *out = Box::into_raw(Box::new(RbcSession { run }));
        Ok(())
    })
}

/// # Safety
/// `session` must come from [`rbc_session_run`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn rbc_session_status(
    session: *const RbcSession,
    status: *mut RbcStatus,
    bit: *mut u8,
) -> RbcError {
    guard(|| {
        let s = session.as_ref().ok_or((RbcError::NullPointer, "session is null".to_string()))?;
        null_out(status, "status")?;
        let (st, b) = match &s.run.outcome.status {
            SessionStatus::Sustained => (RbcStatus::Sustained, 0),
            SessionStatus::Unveiled(b) => (RbcStatus::Unveiled, *b),
            SessionStatus::Aborted(_) => (RbcStatus::Aborted, 0),
        };
        *status = st;
        if !bit.is_null() {
            *bit = b;
        }
        Ok(())
    })
}

/// Transcript text of `session`; free it with [`rbc_string_free`].
///
/// # Safety
/// `session` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rbc_session_transcript(session: *const RbcSession, out: *mut *mut c_char) -> RbcError {
    guard(|| {
        let s = session.as_ref().ok_or((RbcError::NullPointer, "session is null".to_string()))?;
        null_out(out, "out")?;
        *out = to_c_string(s.run.transcript.to_text());
        Ok(())
    })
}

/// # Safety
/// `session` must come from [`rbc_session_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rbc_session_free(session: *mut RbcSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `text` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rbc_transcript_parse(text: *const c_char, out: *mut *mut RbcTranscript) -> RbcError {
    guard(|| {
        let text = read_str(text, "text")?;
        null_out(out, "out")?;
        let transcript = Transcript::parse(text).map_err(|e| (RbcError::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(RbcTranscript { transcript }));
        Ok(())
    })
}

/// Offline verification; `clean` is set to 1 when the transcript has no
/// causality violation, no failed check and no rejected unveiling.
///
/// # Safety
/// `transcript` must be live; output pointers writable, `bit` may be null.
#[no_mangle]
pub unsafe extern "C" fn rbc_transcript_verify(
    transcript: *const RbcTranscript,
    clean: *mut u8,
    status: *mut RbcStatus,
    bit: *mut u8,
) -> RbcError {
    guard(|| {
        let t = transcript.as_ref().ok_or((RbcError::NullPointer, "transcript is null".to_string()))?;
        null_out(clean, "clean")?;
        null_out(status, "status")?;
        let report = verify_session(&t.transcript);
        let (st, b) = match report.status() {
            SessionStatus::Sustained => (RbcStatus::Sustained, 0),
            SessionStatus::Unveiled(b) => (RbcStatus::Unveiled, b),
            SessionStatus::Aborted(_) => (RbcStatus::Aborted, 0),
        };
        *clean = u8::from(report.is_clean() && st != RbcStatus::Aborted);
        *status = st;
        if !bit.is_null() {
            *bit = b;
        }
        Ok(())
    })
}

/// # Safety
/// `transcript` must come from [`rbc_transcript_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn rbc_transcript_free(transcript: *mut RbcTranscript) {
    if !transcript.is_null() {
        drop(Box::from_raw(transcript));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn rbc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Success bound of the flip strategy for even `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rbc_cheat_bound(m: u64, out: *mut f64) -> RbcError {
    guard(|| {
        null_out(out, "out")?;
        *out = cheat_success_bound_f64(m).map_err(|e| (RbcError::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// Exact bits per round at each site.
///
/// # Safety
/// `site1` and `site2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rbc_round_bits(m: u64, digits: u64, site1: *mut u64, site2: *mut u64) -> RbcError {
    guard(|| {
        null_out(site1, "site1")?;
        null_out(site2, "site2")?;
        if m == 0 {
            return Err((RbcError::OutOfRange, "M must be at least 1".into()));
        }
        *site1 = site1_bits_per_round(m, digits);
        *site2 = site2_bits_per_round(m, digits);
        Ok(())
    })
}
