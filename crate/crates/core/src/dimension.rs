//! Finite-prefix dimension and compression-ratio estimates.
//!
//! A profile is a list of `(n, value)` samples, read as the quotient
//! `value / n`. For a dimension profile the value is `C(S[0..n])`; for a
//! ratio profile it is the query usage after `n` output bits. Tail
//! statistics take the min and max of the quotient over samples with
//! `n >= tail_start`.

use std::fmt::Write as _;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{ComplexityOracle, ProxyMeter};
use crate::ratio::{to_decimal, to_fraction};
use crate::seqcore::{PrefixOracle, SeqError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimError {
    #[error("no samples at or beyond tail start {0}")]
    EmptyTail(u64),
    #[error("sample points must be positive and strictly increasing")]
    BadSamplePoints,
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub n: u64,
    pub value: u64,
    /// False when `value` is only an upper bound.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub confirmed: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl Sample {
    pub fn new(n: u64, value: u64) -> Self {
        Self { n, value, confirmed: true }
    }

    pub fn ratio(&self) -> Rational64 {
        Rational64::new(self.value as i64, self.n as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub samples: Vec<Sample>,
    pub tail_start: u64,
}

/// Samples of `C(S[0..n]) / n`.
pub type DimensionProfile = Profile;
/// Samples of `usage(n) / n`.
pub type RatioProfile = Profile;

impl Profile {
    pub fn new(samples: Vec<Sample>, tail_start: u64) -> Result<Self, DimError> {
        if samples.iter().any(|s| s.n == 0) || samples.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(DimError::BadSamplePoints);
        }
        Ok(Self { samples, tail_start })
    }

    pub fn with_tail_start(&self, tail_start: u64) -> Self {
        Self { samples: self.samples.clone(), tail_start }
    }

    pub fn tail(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.n >= self.tail_start)
    }

    /// Tail minimum and maximum of the quotient.
    pub fn tail_bounds(&self) -> Result<(Rational64, Rational64), DimError> {
        let mut it = self.tail().map(Sample::ratio);
        let first = it.next().ok_or(DimError::EmptyTail(self.tail_start))?;
        Ok(it.fold((first, first), |(lo, hi), r| (lo.min(r), hi.max(r))))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,c,ratio\n");
        for s in &self.samples {
            writeln!(out, "{},{},{}", s.n, s.value, to_decimal(s.ratio(), 6)).unwrap();
        }
        out
    }

    /// CSV with the usage column named for reduction traces.
    pub fn to_usage_csv(&self) -> String {
        let mut out = String::from("n,usage,ratio\n");
        for s in &self.samples {
            writeln!(out, "{},{},{}", s.n, s.value, to_decimal(s.ratio(), 6)).unwrap();
        }
        out
    }
}

/// Estimated constructive Hausdorff dimension: the tail minimum.
pub fn dim_hat_h(p: &DimensionProfile) -> Result<Rational64, DimError> {
    Ok(p.tail_bounds()?.0)
}

/// Estimated constructive packing dimension: the tail maximum.
pub fn dim_hat_p(p: &DimensionProfile) -> Result<Rational64, DimError> {
    Ok(p.tail_bounds()?.1)
}

/// Estimated best- and worst-case compression ratios.
pub fn rho_hats(p: &RatioProfile) -> Result<(Rational64, Rational64), DimError> {
    p.tail_bounds()
}

/// Renders a pair of estimates for reports.
pub fn describe_pair(lo: Rational64, hi: Rational64) -> String {
    format!("{} ({}) .. {} ({})", to_decimal(lo, 6), to_fraction(lo), to_decimal(hi, 6), to_fraction(hi))
}

/// Default tail start for a horizon of `n` bits.
pub fn default_tail_start(n: u64) -> u64 {
    256u64.max(n.div_ceil(32))
}

/// Geometric grid `n0, ⌈n0·r⌉, ⌈n0·r²⌉ …` (each step at least +1), capped
/// at `n`, with `n` itself and every extra point in `[n0, n]` merged in.
pub fn geometric_grid(n0: u64, r: Rational64, n: u64, extra: &[u64]) -> Vec<u64> {
    assert!(r > Rational64::from_integer(1), "grid ratio must exceed 1");
    let (p, q) = (*r.numer() as u128, *r.denom() as u128);
    let mut pts = Vec::new();
    let mut cur = n0.max(1);
    while cur < n {
        pts.push(cur);
        let next = ((cur as u128 * p).div_ceil(q)) as u64;
        cur = next.max(cur + 1);
    }
    if n > 0 {
        pts.push(n);
    }
    pts.extend(extra.iter().copied().filter(|&e| e >= n0.max(1) && e <= n));
    pts.sort_unstable();
    pts.dedup();
    pts
}

pub fn default_grid_ratio() -> Rational64 {
    Rational64::new(13, 10)
}

/// Samples `C(S[0..n]) / n` at each requested point.
pub fn profile(
    s: &dyn PrefixOracle,
    points: &[u64],
    oracle: &ComplexityOracle,
    tail_start: Option<u64>,
) -> Result<DimensionProfile, DimError> {
    if points.contains(&0) || points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DimError::BadSamplePoints);
    }
    let last = points.last().copied().unwrap_or(0);
    let tail_start = tail_start.unwrap_or_else(|| default_tail_start(last));
    let prefix = s.prefix(last)?;
    let samples = match oracle {
        ComplexityOracle::DictionaryProxy(cfg) => {
            let mut meter = ProxyMeter::new(*cfg);
            let mut out = Vec::with_capacity(points.len());
            let mut next = points.iter().peekable();
            for (k, &b) in prefix.iter().enumerate() {
                meter.push(b);
                if next.peek() == Some(&&(k as u64 + 1)) {
                    next.next();
                    out.push(Sample::new(k as u64 + 1, meter.current()));
                }
            }
            out
        }
        ComplexityOracle::ExactToyMachine(_) => points
            .par_iter()
            .map(|&n| {
                let e = oracle.complexity(&prefix[..n as usize]);
                Sample { n, value: e.bits, confirmed: e.confirmed }
            })
            .collect(),
    };
    Profile::new(samples, tail_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{prng, zeros};
    use crate::seqcore::SeqOracle;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    fn prof(vals: &[(u64, u64)], tail: u64) -> Profile {
        Profile::new(vals.iter().map(|&(n, v)| Sample::new(n, v)).collect(), tail).unwrap()
    }

    #[test]
    fn tail_min_max() {
        let p = prof(&[(10, 3), (20, 12), (30, 12)], 10);
        assert_eq!(dim_hat_h(&p).unwrap(), r(3, 10));
        assert_eq!(dim_hat_p(&p).unwrap(), r(3, 5));
        let c = prof(&[(100, 37), (200, 74)], 1);
        assert_eq!((dim_hat_h(&c).unwrap(), dim_hat_p(&c).unwrap()), (r(37, 100), r(37, 100)));
        assert_eq!(dim_hat_h(&prof(&[(4, 2)], 4)).unwrap(), r(1, 2));
        assert_eq!(dim_hat_h(&prof(&[(4, 2)], 5)), Err(DimError::EmptyTail(5)));
    }

    #[test]
    fn rho_hats_of_simple_usage() {
        let id = prof(&(1..=50).map(|n| (n, n)).collect::<Vec<_>>(), 1);
        assert_eq!(rho_hats(&id).unwrap(), (r(1, 1), r(1, 1)));
        let half = prof(&(1..=1000u64).map(|n| (n, n.div_ceil(2))).collect::<Vec<_>>(), 500);
        let (lo, hi) = rho_hats(&half).unwrap();
        assert_eq!(lo, r(1, 2));
        assert!(hi - r(1, 2) <= r(1, 500));
    }

    #[test]
    fn csv_rendering() {
        let p = prof(&[(3, 1), (8, 8)], 1);
        assert_eq!(p.to_csv(), "n,c,ratio\n3,1,0.333333\n8,8,1.000000\n");
    }

    #[test]
    fn grid_shape() {
        let g = geometric_grid(256, r(13, 10), 1000, &[300, 5000]);
        assert_eq!(g, vec![256, 300, 333, 433, 563, 732, 952, 1000]);
        assert_eq!(geometric_grid(1, r(2, 1), 1, &[]), vec![1]);
        assert_eq!(default_tail_start(100_000), 3125);
        assert_eq!(default_tail_start(1000), 256);
    }

    #[test]
    fn proxy_profile_matches_pointwise_complexity() {
        let s = SeqOracle::new(prng(4, 3000));
        let o = ComplexityOracle::proxy();
        let pts = geometric_grid(10, r(3, 2), 3000, &[]);
        let p = profile(&s, &pts, &o, Some(1)).unwrap();
        for smp in &p.samples {
            assert_eq!(smp.value, o.complexity(&s.sequence()[..smp.n as usize]).bits);
        }
    }

    #[test]
    fn small_zeros_and_prng_profiles() {
        let o = ComplexityOracle::proxy();
        let pts: Vec<u64> = (10..=14).map(|e| 1u64 << e).collect();
        let z = profile(&SeqOracle::new(zeros(1 << 14)), &pts, &o, Some(1024)).unwrap();
        assert!(dim_hat_p(&z).unwrap() <= r(1, 20));
        let p = profile(&SeqOracle::new(prng(2, 1 << 14)), &pts, &o, Some(1024)).unwrap();
        assert!(dim_hat_h(&p).unwrap() >= r(9, 10));
        // finite proxies exceed 1 by at most the literal overhead
        for smp in &p.samples {
            assert!(smp.value <= smp.n + o.literal_overhead(smp.n));
        }
    }

    #[test]
    fn profile_errors() {
        let s = SeqOracle::new(zeros(100));
        let o = ComplexityOracle::proxy();
        assert!(matches!(profile(&s, &[10, 200], &o, None), Err(DimError::Seq(_))));
        assert_eq!(profile(&s, &[10, 10], &o, None), Err(DimError::BadSamplePoints));
    }

    proptest! {
        #[test]
        fn ordering_and_tail_monotonicity(vals in prop::collection::vec(0u64..500, 1..40), t1 in 1u64..40, t2 in 1u64..40) {
            let samples: Vec<Sample> = vals.iter().enumerate().map(|(k, &v)| Sample::new(k as u64 + 1, v)).collect();
            let (lo_t, hi_t) = (t1.min(t2), t1.max(t2));
            let a = Profile::new(samples.clone(), lo_t).unwrap();
            let b = Profile::new(samples, hi_t).unwrap();
            if let (Ok((ha, pa)), Ok((hb, pb))) = (a.tail_bounds(), b.tail_bounds()) {
                prop_assert!(ha <= pa);
                prop_assert!(hb >= ha);
                prop_assert!(pb <= pa);
            }
        }
    }
}
