use std::sync::Arc;

use super::{BitSequence, SeqError};

/// Deterministic position-to-bit source with an optional horizon.
///
/// Reads at or past the horizon fail with [`SeqError::HorizonExceeded`].
pub trait PrefixOracle: Send + Sync {
    fn bit(&self, position: u64) -> Result<bool, SeqError>;

    fn horizon(&self) -> Option<u64>;

    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        if let Some(h) = self.horizon() {
            if n > h {
                return Err(SeqError::HorizonExceeded { position: n - 1, horizon: h });
            }
        }
        (0..n).map(|p| self.bit(p)).collect()
    }
}

impl<T: PrefixOracle + ?Sized> PrefixOracle for &T {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        (**self).bit(position)
    }
    fn horizon(&self) -> Option<u64> {
        (**self).horizon()
    }
    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        (**self).prefix(n)
    }
}

impl<T: PrefixOracle + ?Sized> PrefixOracle for Arc<T> {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        (**self).bit(position)
    }
    fn horizon(&self) -> Option<u64> {
        (**self).horizon()
    }
    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        (**self).prefix(n)
    }
}

impl PrefixOracle for [bool] {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        self.get(position as usize)
            .copied()
            .ok_or(SeqError::HorizonExceeded { position, horizon: self.len() as u64 })
    }
    fn horizon(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        if n > self.len() as u64 {
            return Err(SeqError::HorizonExceeded { position: n - 1, horizon: self.len() as u64 });
        }
        Ok(BitSequence::from(&self[..n as usize]))
    }
}

impl PrefixOracle for Vec<bool> {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        self.as_slice().bit(position)
    }
    fn horizon(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        self.as_slice().prefix(n)
    }
}

impl PrefixOracle for BitSequence {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        self.as_slice().bit(position)
    }
    fn horizon(&self) -> Option<u64> {
        Some(self.len() as u64)
    }
    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        self.as_slice().prefix(n)
    }
}

/// Oracle backed by a materialized finite sequence; horizon is its length.
#[derive(Debug, Clone)]
pub struct SeqOracle {
    seq: Arc<BitSequence>,
}

impl SeqOracle {
    pub fn new(seq: BitSequence) -> Self {
        Self { seq: Arc::new(seq) }
    }

    pub fn sequence(&self) -> &BitSequence {
        &self.seq
    }
}

impl From<BitSequence> for SeqOracle {
    fn from(seq: BitSequence) -> Self {
        Self::new(seq)
    }
}

impl PrefixOracle for SeqOracle {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        self.seq
            .get(position as usize)
            .copied()
            .ok_or(SeqError::HorizonExceeded { position, horizon: self.seq.len() as u64 })
    }

    fn horizon(&self) -> Option<u64> {
        Some(self.seq.len() as u64)
    }

    fn prefix(&self, n: u64) -> Result<BitSequence, SeqError> {
        let h = self.seq.len() as u64;
        if n > h {
            return Err(SeqError::HorizonExceeded { position: n - 1, horizon: h });
        }
        Ok(BitSequence::from(&self.seq[..n as usize]))
    }
}

/// Oracle computed by a pure function of position.
pub struct FnOracle<F> {
    f: F,
    horizon: Option<u64>,
}

impl<F: Fn(u64) -> bool + Send + Sync> FnOracle<F> {
    pub fn new(f: F, horizon: Option<u64>) -> Self {
        Self { f, horizon }
    }
}

impl<F: Fn(u64) -> bool + Send + Sync> PrefixOracle for FnOracle<F> {
    fn bit(&self, position: u64) -> Result<bool, SeqError> {
        match self.horizon {
            Some(h) if position >= h => Err(SeqError::HorizonExceeded { position, horizon: h }),
            _ => Ok((self.f)(position)),
        }
    }

    fn horizon(&self) -> Option<u64> {
        self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_is_enforced() {
        let o = SeqOracle::new(BitSequence::parse("101").unwrap());
        assert_eq!(o.bit(2), Ok(true));
        assert_eq!(o.bit(3), Err(SeqError::HorizonExceeded { position: 3, horizon: 3 }));
        assert!(o.prefix(4).is_err());
        assert_eq!(o.prefix(2).unwrap().to_bit_string(), "10");
    }

    #[test]
    fn fn_oracle_is_pure() {
        let o = FnOracle::new(|p| p % 3 == 0, Some(10));
        for p in 0..10 {
            assert_eq!(o.bit(p), o.bit(p));
        }
        assert!(o.bit(10).is_err());
        let unbounded = FnOracle::new(|_| true, None);
        assert_eq!(unbounded.bit(1 << 40), Ok(true));
    }
}
