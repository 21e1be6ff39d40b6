//! C ABI over `dimlab`.
//!
//! Objects cross the boundary as opaque handles created by a constructor
//! and released by the matching `*_free`. Every fallible call returns a
//! [`DimlabStatus`]; on failure `dimlab_last_error()` describes it. Output
//! pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_rational::Rational64;

use dimlab::codec::{self, DecodeTrace};
use dimlab::complexity::ComplexityOracle;
use dimlab::dimension::{default_tail_start, geometric_grid, profile};
use dimlab::extractor::{extract, ExtractOverrides};
use dimlab::generators::GeneratorSpec;
use dimlab::seqcore::{read_seq_file, write_seq_file, BitSequence};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Generator = 4,
    Codec = 5,
    Dimension = 6,
    Extract = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// An exact ratio `numerator / denominator` with a positive denominator.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimlabRational {
    pub numerator: i64,
    pub denominator: i64,
}

impl From<Rational64> for DimlabRational {
    fn from(r: Rational64) -> Self {
        Self { numerator: *r.numer(), denominator: *r.denom() }
    }
}

impl DimlabRational {
    fn to_rational(self) -> Result<Rational64, Failure> {
        if self.denominator == 0 {
            return Err(fail(DimlabStatus::InvalidArgument, "zero denominator"));
        }
        Ok(Rational64::new(self.numerator, self.denominator))
    }
}

/// A finite bit sequence.
pub struct DimlabSequence(BitSequence);

/// A complexity estimator.
pub struct DimlabOracle(ComplexityOracle);

/// Per-block record lengths from a decode.
pub struct DimlabDecodeTrace(DecodeTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: DimlabStatus,
    message: String,
}

fn fail(status: DimlabStatus, message: impl Into<String>) -> Failure {
    Failure { status, message: message.into() }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guarded(f: impl FnOnce() -> Result<(), Failure>) -> DimlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DimlabStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.message);
            e.status
        }
        Err(_) => {
            set_error("internal panic");
            DimlabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(DimlabStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(DimlabStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DimlabStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(DimlabStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn oracle_or_default(o: *const DimlabOracle) -> ComplexityOracle {
    unsafe { o.as_ref() }.map(|o| o.0).unwrap_or_default()
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread, or null. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dimlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dimlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a sequence from `len` bytes, each 0 or 1.
///
/// # Safety
/// `bits` must point to `len` readable bytes (or be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_from_bits(
    bits: *const u8,
    len: usize,
    out: *mut *mut DimlabSequence,
) -> DimlabStatus {
    guarded(|| {
        let out = out_ptr(out, "out")?;
        let bytes: &[u8] = if len == 0 {
            &[]
        } else if bits.is_null() {
            return Err(fail(DimlabStatus::NullPointer, "bits is null"));
        } else {
            std::slice::from_raw_parts(bits, len)
        };
        let mut seq = BitSequence::with_capacity(len);
        for (k, &b) in bytes.iter().enumerate() {
            match b {
                0 | 1 => seq.push(b == 1),
                _ => return Err(fail(DimlabStatus::InvalidArgument, format!("byte {k} is {b}, expected 0 or 1"))),
            }
        }
        *out = boxed(DimlabSequence(seq));
        Ok(())
    })
}

/// Generates `n` bits from a JSON generator spec such as
/// `{"kind":"dilute","alpha":"1/2","seed":7}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_generate(
    spec_json: *const c_char,
    n: u64,
    out: *mut *mut DimlabSequence,
) -> DimlabStatus {
    guarded(|| {
        let out = out_ptr(out, "out")?;
        let spec: GeneratorSpec = serde_json::from_str(c_str(spec_json, "spec_json")?)
            .map_err(|e| fail(DimlabStatus::InvalidArgument, format!("generator spec: {e}")))?;
        let seq = spec.generate(n).map_err(|e| fail(DimlabStatus::Generator, e.to_string()))?;
        *out = boxed(DimlabSequence(seq));
        Ok(())
    })
}

/// Reads a `.seq` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_read(path: *const c_char, out: *mut *mut DimlabSequence) -> DimlabStatus {
    guarded(|| {
        let out = out_ptr(out, "out")?;
        let seq = read_seq_file(Path::new(c_str(path, "path")?)).map_err(|e| fail(DimlabStatus::Io, e.to_string()))?;
        *out = boxed(DimlabSequence(seq));
        Ok(())
    })
}

/// Writes a `.seq` file.
///
/// # Safety
/// `seq` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_write(seq: *const DimlabSequence, path: *const c_char) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let path = c_str(path, "path")?;
        write_seq_file(Path::new(path), seq.0.as_slice()).map_err(|e| fail(DimlabStatus::Io, format!("{path}: {e}")))
    })
}

/// Number of bits in `seq`; 0 for null.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_len(seq: *const DimlabSequence) -> u64 {
    seq.as_ref().map_or(0, |s| s.0.len() as u64)
}

/// Copies the bits of `seq` into `buf` as 0/1 bytes. Fails with
/// `BUFFER_TOO_SMALL` when `cap` is less than the length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_copy_bits(
    seq: *const DimlabSequence,
    buf: *mut u8,
    cap: usize,
) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let bits = seq.0.as_slice();
        if cap < bits.len() {
            return Err(fail(DimlabStatus::BufferTooSmall, format!("need {} bytes, have {cap}", bits.len())));
        }
        if bits.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(fail(DimlabStatus::NullPointer, "buf is null"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, bits.len());
        for (d, &b) in dst.iter_mut().zip(bits) {
            *d = b as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `seq` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dimlab_sequence_free(seq: *mut DimlabSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// The compressor proxy with default settings.
#[no_mangle]
pub extern "C" fn dimlab_oracle_proxy() -> *mut DimlabOracle {
    boxed(DimlabOracle(ComplexityOracle::proxy()))
}

/// Exact search over the toy machine, capped at `max_program_len` bits and
/// `budget` steps per query.
#[no_mangle]
pub extern "C" fn dimlab_oracle_exact(max_program_len: u64, budget: u64) -> *mut DimlabOracle {
    boxed(DimlabOracle(ComplexityOracle::exact(max_program_len, budget)))
}

/// # Safety
/// `oracle` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dimlab_oracle_free(oracle: *mut DimlabOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Complexity estimate of the first `n` bits of `seq`. A null `oracle`
/// selects the proxy. `confirmed` (optional) is set to 0 when the value
/// is only an upper bound.
///
/// # Safety
/// Handles must be live; `bits` must be writable; `confirmed` may be null.
#[no_mangle]
pub unsafe extern "C" fn dimlab_complexity(
    seq: *const DimlabSequence,
    n: u64,
    oracle: *const DimlabOracle,
    bits: *mut u64,
    confirmed: *mut u8,
) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let bits = out_ptr(bits, "bits")?;
        if n > seq.0.len() as u64 {
            return Err(fail(DimlabStatus::InvalidArgument, format!("n = {n} exceeds length {}", seq.0.len())));
        }
        let e = oracle_or_default(oracle).complexity(&seq.0.as_slice()[..n as usize]);
        *bits = e.bits;
        if let Some(c) = confirmed.as_mut() {
            *c = e.confirmed as u8;
        }
        Ok(())
    })
}

/// Tail minimum and maximum of `C(S[0..n]) / n` over the geometric grid
/// from `grid_start` with ratio `grid_ratio`, up to the sequence length.
/// A `tail_start` of 0 selects the default.
///
/// # Safety
/// Handles must be live; `dim_h` and `dim_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_profile(
    seq: *const DimlabSequence,
    oracle: *const DimlabOracle,
    grid_start: u64,
    grid_ratio: DimlabRational,
    tail_start: u64,
    dim_h: *mut DimlabRational,
    dim_p: *mut DimlabRational,
) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let dim_h = out_ptr(dim_h, "dim_h")?;
        let dim_p = out_ptr(dim_p, "dim_p")?;
        let ratio = grid_ratio.to_rational()?;
        if ratio <= Rational64::from_integer(1) {
            return Err(fail(DimlabStatus::InvalidArgument, "grid ratio must exceed 1"));
        }
        let n = seq.0.len() as u64;
        if n == 0 {
            return Err(fail(DimlabStatus::InvalidArgument, "empty sequence"));
        }
        let tail = if tail_start == 0 { default_tail_start(n) } else { tail_start };
        let pts = geometric_grid(grid_start, ratio, n, &[]);
        let p = profile(&seq.0, &pts, &oracle_or_default(oracle), Some(tail))
            .map_err(|e| fail(DimlabStatus::Dimension, e.to_string()))?;
        let (h, hi) = p.tail_bounds().map_err(|e| fail(DimlabStatus::Dimension, e.to_string()))?;
        *dim_h = h.into();
        *dim_p = hi.into();
        Ok(())
    })
}

/// Block-codes `seq` through the block holding bit `n - 1`. The sequence
/// must contain every bit of that block.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_encode(
    seq: *const DimlabSequence,
    n: u64,
    oracle: *const DimlabOracle,
    out: *mut *mut DimlabSequence,
) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let out = out_ptr(out, "out")?;
        let enc = codec::encode(&seq.0, n, &oracle_or_default(oracle)).map_err(|e| fail(DimlabStatus::Codec, e.to_string()))?;
        *out = boxed(DimlabSequence(enc.bits));
        Ok(())
    })
}

/// Decodes the first `n` bits from a record stream. `trace` is optional.
///
/// # Safety
/// Handles must be live; `out` must be writable; `trace` may be null.
#[no_mangle]
pub unsafe extern "C" fn dimlab_decode(
    records: *const DimlabSequence,
    n: u64,
    oracle: *const DimlabOracle,
    out: *mut *mut DimlabSequence,
    trace: *mut *mut DimlabDecodeTrace,
) -> DimlabStatus {
    guarded(|| {
        let records = deref(records, "records")?;
        let out = out_ptr(out, "out")?;
        let (bits, t) = codec::decode(&records.0, n, &oracle_or_default(oracle))
            .map_err(|e| fail(DimlabStatus::Codec, e.to_string()))?;
        *out = boxed(DimlabSequence(bits));
        if let Some(tr) = trace.as_mut() {
            *tr = boxed(DimlabDecodeTrace(t));
        }
        Ok(())
    })
}

/// Record-stream bits read before output bit `m - 1` was known; 0 for
/// `m = 0`.
///
/// # Safety
/// `trace` must be live and `usage` writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_decode_trace_usage(
    trace: *const DimlabDecodeTrace,
    m: u64,
    usage: *mut u64,
) -> DimlabStatus {
    guarded(|| {
        let t = deref(trace, "trace")?;
        let usage = out_ptr(usage, "usage")?;
        if m > t.0.horizon() {
            return Err(fail(DimlabStatus::InvalidArgument, format!("m = {m} beyond the {} decoded bits", t.0.horizon())));
        }
        *usage = t.0.usage(m);
        Ok(())
    })
}

/// Number of records in the trace.
///
/// # Safety
/// `trace` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn dimlab_decode_trace_blocks(trace: *const DimlabDecodeTrace) -> u64 {
    trace.as_ref().map_or(0, |t| t.0.blocks())
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dimlab_decode_trace_free(trace: *mut DimlabDecodeTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Runs the extractor on `seq` with loss `epsilon`, stopping once
/// `target_n` source bits are covered. `overrides_json` (optional) holds
/// parameter overrides; `report_json` (optional) receives the report,
/// released with `dimlab_string_free`.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dimlab_extract(
    seq: *const DimlabSequence,
    epsilon: DimlabRational,
    target_n: u64,
    oracle: *const DimlabOracle,
    overrides_json: *const c_char,
    out: *mut *mut DimlabSequence,
    report_json: *mut *mut c_char,
) -> DimlabStatus {
    guarded(|| {
        let seq = deref(seq, "seq")?;
        let out = out_ptr(out, "out")?;
        let eps = epsilon.to_rational()?;
        let overrides: ExtractOverrides = if overrides_json.is_null() {
            ExtractOverrides::default()
        } else {
            serde_json::from_str(c_str(overrides_json, "overrides_json")?)
                .map_err(|e| fail(DimlabStatus::InvalidArgument, format!("overrides: {e}")))?
        };
        let (r, report) = extract(&seq.0, eps, target_n, &oracle_or_default(oracle), &overrides)
            .map_err(|e| fail(DimlabStatus::Extract, e.to_string()))?;
        if let Some(rj) = report_json.as_mut() {
            let text = serde_json::to_string(&report).map_err(|e| fail(DimlabStatus::Extract, e.to_string()))?;
            *rj = CString::new(text).map_err(|e| fail(DimlabStatus::Extract, e.to_string()))?.into_raw();
        }
        *out = boxed(DimlabSequence(r));
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dimlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
