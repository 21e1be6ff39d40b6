//! 32-bit binary arithmetic coder with underflow tracking.
//!
//! Probabilities are 16-bit fixed point: `p0` is the chance of a `0` bit
//! scaled by 2^16 and must lie in `1..=65535`. The decoder reads zeros past
//! the end of its input, which lets the encoder drop trailing zeros.

const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;
const TOP: u64 = (1 << 32) - 1;

#[inline]
fn split(low: u64, high: u64, p0: u16) -> u64 {
    debug_assert!(p0 > 0);
    let range = high - low + 1;
    low + ((range * p0 as u64) >> 16) - 1
}

/// Encoder state. Output goes to `out` when present; `emitted` counts bits
/// either way so the encoder doubles as a cost meter.
#[derive(Debug, Clone)]
pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    emitted: u64,
    out: Option<Vec<bool>>,
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self { low: 0, high: TOP, pending: 0, emitted: 0, out: Some(Vec::new()) }
    }

    /// An encoder that only counts output bits.
    pub fn counting() -> Self {
        Self { out: None, ..Self::new() }
    }

    fn emit(&mut self, bit: bool) {
        let n = 1 + self.pending;
        self.emitted += n;
        if let Some(out) = self.out.as_mut() {
            out.push(bit);
            out.extend(std::iter::repeat_n(!bit, self.pending as usize));
        }
        self.pending = 0;
    }

    pub fn encode(&mut self, bit: bool, p0: u16) {
        let s = split(self.low, self.high, p0);
        if bit {
            self.low = s + 1;
        } else {
            self.high = s;
        }
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Bits `finish` would append now.
    pub fn flush_len(&self) -> u64 {
        u64::from(self.pending > 0 || self.low > 0)
    }

    /// Total length of the finished code if encoding stopped here.
    pub fn prefix_cost(&self) -> u64 {
        self.emitted + self.flush_len()
    }

    /// Terminates the code. The value `HALF` always lies in the final
    /// interval, and with zero padding it needs only a single `1`.
    pub fn finish(mut self) -> Vec<bool> {
        if self.flush_len() > 0 {
            self.emitted += 1;
            if let Some(out) = self.out.as_mut() {
                out.push(true);
            }
        }
        self.out.unwrap_or_default()
    }
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone)]
pub struct ArithDecoder<'a> {
    input: &'a [bool],
    pos: usize,
    low: u64,
    high: u64,
    value: u64,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(input: &'a [bool]) -> Self {
        let mut d = Self { input, pos: 0, low: 0, high: TOP, value: 0 };
        for _ in 0..32 {
            d.value = (d.value << 1) | d.next_bit();
        }
        d
    }

    fn next_bit(&mut self) -> u64 {
        let b = self.input.get(self.pos).copied().unwrap_or(false);
        self.pos += 1;
        u64::from(b)
    }

    pub fn decode(&mut self, p0: u16) -> bool {
        let s = split(self.low, self.high, p0);
        let bit = self.value > s;
        if bit {
            self.low = s + 1;
        } else {
            self.high = s;
        }
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.next_bit();
        }
        bit
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roundtrip(bits: &[bool], probs: &[u16]) {
        let mut enc = ArithEncoder::new();
        let mut meter = ArithEncoder::counting();
        for (&b, &p) in bits.iter().zip(probs) {
            enc.encode(b, p);
            meter.encode(b, p);
        }
        let cost = meter.prefix_cost();
        let code = enc.finish();
        assert_eq!(code.len() as u64, cost);
        let mut dec = ArithDecoder::new(&code);
        let back: Vec<bool> = probs.iter().map(|&p| dec.decode(p)).collect();
        assert_eq!(back, bits);
    }

    #[test]
    fn empty_code_is_empty() {
        assert!(ArithEncoder::new().finish().is_empty());
    }

    #[test]
    fn skewed_model_compresses() {
        let bits = vec![false; 1000];
        let mut enc = ArithEncoder::new();
        for &b in &bits {
            enc.encode(b, 65000);
        }
        let code = enc.finish();
        // ideal cost is 1000 * -log2(65000/65536) ≈ 11.9 bits
        assert!(code.len() <= 16, "{}", code.len());
        let mut dec = ArithDecoder::new(&code);
        assert!((0..1000).all(|_| !dec.decode(65000)));
    }

    proptest! {
        #[test]
        fn arbitrary_streams_roundtrip(v in prop::collection::vec((any::<bool>(), 1u16..=65535), 0..600)) {
            let (bits, probs): (Vec<bool>, Vec<u16>) = v.into_iter().unzip();
            roundtrip(&bits, &probs);
        }

        #[test]
        fn extreme_probabilities_roundtrip(bits in prop::collection::vec(any::<bool>(), 0..300), lo in any::<bool>()) {
            let p = if lo { 1 } else { 65535 };
            roundtrip(&bits, &vec![p; bits.len()]);
        }
    }
}
