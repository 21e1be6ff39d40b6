use std::ffi::{CStr, CString};
use std::ptr;

use dimlab_ffi::*;

fn last_error() -> String {
    let p = dimlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(spec: &str, n: u64) -> *mut DimlabSequence {
    let spec = CString::new(spec).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { dimlab_sequence_generate(spec.as_ptr(), n, &mut out) }, DimlabStatus::Ok);
    out
}

fn bits_of(seq: *const DimlabSequence) -> Vec<u8> {
    let n = unsafe { dimlab_sequence_len(seq) } as usize;
    let mut buf = vec![9u8; n];
    assert_eq!(unsafe { dimlab_sequence_copy_bits(seq, buf.as_mut_ptr(), n) }, DimlabStatus::Ok);
    buf
}

#[test]
fn encode_decode_round_trip_with_trace() {
    let s = generate(r#"{"kind":"dilute","alpha":"1/2","seed":3}"#, 5050);
    let oracle = dimlab_oracle_proxy();
    unsafe {
        let mut enc = ptr::null_mut();
        assert_eq!(dimlab_encode(s, 5000, oracle, &mut enc), DimlabStatus::Ok);
        let mut dec = ptr::null_mut();
        let mut trace = ptr::null_mut();
        assert_eq!(dimlab_decode(enc, 5000, oracle, &mut dec, &mut trace), DimlabStatus::Ok);
        assert_eq!(bits_of(dec), bits_of(s)[..5000].to_vec());
        assert_eq!(dimlab_decode_trace_blocks(trace), 100);
        let mut u = 0;
        assert_eq!(dimlab_decode_trace_usage(trace, 5050, &mut u), DimlabStatus::Ok);
        assert_eq!(u, dimlab_sequence_len(enc));
        assert_eq!(dimlab_decode_trace_usage(trace, 0, &mut u), DimlabStatus::Ok);
        assert_eq!(u, 0);
        assert_eq!(dimlab_decode_trace_usage(trace, 5051, &mut u), DimlabStatus::InvalidArgument);
        dimlab_decode_trace_free(trace);
        dimlab_sequence_free(dec);
        dimlab_sequence_free(enc);
        dimlab_sequence_free(s);
        dimlab_oracle_free(oracle);
    }
}

#[test]
fn bits_and_files() {
    let raw = [1u8, 0, 1, 1, 0, 0, 0, 1, 1];
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.seq").to_str().unwrap()).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(dimlab_sequence_from_bits(raw.as_ptr(), raw.len(), &mut s), DimlabStatus::Ok);
        assert_eq!(dimlab_sequence_write(s, path.as_ptr()), DimlabStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(dimlab_sequence_read(path.as_ptr(), &mut t), DimlabStatus::Ok);
        assert_eq!(bits_of(t), raw);
        let mut small = [0u8; 4];
        assert_eq!(dimlab_sequence_copy_bits(t, small.as_mut_ptr(), 4), DimlabStatus::BufferTooSmall);
        dimlab_sequence_free(s);
        dimlab_sequence_free(t);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = [0u8, 2];
        assert_eq!(dimlab_sequence_from_bits(bad.as_ptr(), 2, &mut s), DimlabStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("byte 1"));

        assert_eq!(dimlab_sequence_from_bits(ptr::null(), 3, &mut s), DimlabStatus::NullPointer);
        assert_eq!(dimlab_sequence_from_bits(bad.as_ptr(), 0, ptr::null_mut()), DimlabStatus::NullPointer);

        let spec = CString::new(r#"{"kind":"nope"}"#).unwrap();
        assert_eq!(dimlab_sequence_generate(spec.as_ptr(), 10, &mut s), DimlabStatus::InvalidArgument);
        assert!(last_error().starts_with("generator spec"));

        let missing = CString::new("/nonexistent/dir/x.seq").unwrap();
        assert_eq!(dimlab_sequence_read(missing.as_ptr(), &mut s), DimlabStatus::Io);

        let short = generate(r#"{"kind":"zeros"}"#, 10);
        let mut enc = ptr::null_mut();
        assert_eq!(dimlab_encode(short, 12, ptr::null(), &mut enc), DimlabStatus::Codec);
        assert!(enc.is_null());
        let mut h = DimlabRational { numerator: 0, denominator: 1 };
        let mut p = h;
        let one = DimlabRational { numerator: 1, denominator: 1 };
        assert_eq!(dimlab_profile(short, ptr::null(), 1, one, 0, &mut h, &mut p), DimlabStatus::InvalidArgument);
        dimlab_sequence_free(short);
        // null frees are no-ops
        dimlab_sequence_free(ptr::null_mut());
        dimlab_oracle_free(ptr::null_mut());
        dimlab_string_free(ptr::null_mut());
    }
}

#[test]
fn complexity_and_profile() {
    let z = generate(r#"{"kind":"zeros"}"#, 20_000);
    let r = generate(r#"{"kind":"prng","seed":5}"#, 20_000);
    let exact = dimlab_oracle_exact(64, 1 << 20);
    unsafe {
        let (mut bits, mut conf) = (0u64, 9u8);
        assert_eq!(dimlab_complexity(z, 64, exact, &mut bits, &mut conf), DimlabStatus::Ok);
        assert!(bits < 32);
        assert_eq!(conf, 1);
        let ratio = DimlabRational { numerator: 13, denominator: 10 };
        let (mut h, mut p) = (DimlabRational { numerator: 0, denominator: 1 }, DimlabRational { numerator: 0, denominator: 1 });
        assert_eq!(dimlab_profile(z, ptr::null(), 64, ratio, 0, &mut h, &mut p), DimlabStatus::Ok);
        assert!(p.numerator * 20 <= p.denominator);
        assert_eq!(dimlab_profile(r, ptr::null(), 64, ratio, 0, &mut h, &mut p), DimlabStatus::Ok);
        assert!(h.numerator * 10 >= h.denominator * 9);
        dimlab_sequence_free(z);
        dimlab_sequence_free(r);
        dimlab_oracle_free(exact);
    }
}

#[test]
fn extract_returns_stream_and_report() {
    let s = generate(r#"{"kind":"dilute","alpha":"1/2","seed":7}"#, 20_000);
    let eps = DimlabRational { numerator: 1, denominator: 5 };
    unsafe {
        let mut out = ptr::null_mut();
        let mut report = ptr::null_mut();
        let st = dimlab_extract(s, eps, 18_000, ptr::null(), ptr::null(), &mut out, &mut report);
        assert_eq!(st, DimlabStatus::Ok, "{}", last_error());
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(json["r_prime_len"].as_u64(), Some(dimlab_sequence_len(out)));
        assert!(json["verification"]["violations"].as_array().unwrap().is_empty());
        dimlab_string_free(report);
        dimlab_sequence_free(out);

        let zeros = generate(r#"{"kind":"zeros"}"#, 20_000);
        assert_eq!(dimlab_extract(zeros, eps, 18_000, ptr::null(), ptr::null(), &mut out, ptr::null_mut()), DimlabStatus::Extract);
        let bad = CString::new(r#"{"bogus":1}"#).unwrap();
        assert_eq!(dimlab_extract(s, eps, 18_000, ptr::null(), bad.as_ptr(), &mut out, ptr::null_mut()), DimlabStatus::InvalidArgument);
        dimlab_sequence_free(zeros);
        dimlab_sequence_free(s);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(dimlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
