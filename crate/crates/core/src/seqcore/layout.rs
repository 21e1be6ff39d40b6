//! Triangular block arithmetic: block `i` (1-indexed) has length `i` and
//! spans positions `[T(i-1), T(i))` with `T(i) = i(i+1)/2`.

use super::SeqError;

pub const fn triangular(i: u64) -> u64 {
    i * (i + 1) / 2
}

/// `(start, end)` of block `i`, end exclusive.
pub fn block_bounds(i: u64) -> Result<(u64, u64), SeqError> {
    if i == 0 {
        return Err(SeqError::ZeroBlockIndex);
    }
    Ok((triangular(i - 1), triangular(i)))
}

/// Result of [`block_containing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPosition {
    /// Number of complete blocks in the prefix `S[0..m-1]`.
    pub complete_blocks: u64,
    /// Block holding position `m`.
    pub block: u64,
}

/// Largest `k` with `T(k) <= m`, i.e. the number of complete blocks in a
/// prefix of length `m`.
fn complete_blocks(m: u64) -> u64 {
    // isqrt(2m) overshoots by at most one.
    let mut k = ((2 * m) as f64).sqrt() as u64;
    while triangular(k) > m {
        k -= 1;
    }
    while triangular(k + 1) <= m {
        k += 1;
    }
    k
}

pub fn block_containing(m: u64) -> BlockPosition {
    let k = complete_blocks(m);
    BlockPosition { complete_blocks: k, block: k + 1 }
}

/// Block index (1-based) of position `p`.
pub fn block_of_position(p: u64) -> u64 {
    complete_blocks(p) + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bounds_examples() {
        assert_eq!(block_bounds(1).unwrap(), (0, 1));
        assert_eq!(block_bounds(3).unwrap(), (3, 6));
        assert_eq!(block_bounds(10).unwrap(), (45, 55));
        assert_eq!(block_bounds(0), Err(SeqError::ZeroBlockIndex));
    }

    #[test]
    fn containing_examples() {
        assert_eq!(block_containing(0).complete_blocks, 0);
        assert_eq!(block_containing(1).complete_blocks, 1);
        assert_eq!(block_containing(6).complete_blocks, 3);
        assert_eq!(block_containing(50).complete_blocks, 9);
        assert_eq!(block_containing(50).block, 10);
        assert_eq!(block_of_position(0), 1);
        assert_eq!(block_of_position(2), 2);
        assert_eq!(block_of_position(3), 3);
    }

    #[test]
    fn blocks_tile_without_gaps() {
        let mut expected_start = 0;
        for i in 1..2000 {
            let (s, e) = block_bounds(i).unwrap();
            assert_eq!(s, expected_start);
            assert_eq!(e - s, i);
            for p in s..e {
                assert_eq!(block_of_position(p), i);
            }
            expected_start = e;
        }
    }

    proptest! {
        #[test]
        fn complete_block_count_is_tight(m in 1u64..10_000_000_000) {
            let k = block_containing(m).complete_blocks;
            prop_assert!(triangular(k) <= m);
            prop_assert!(triangular(k + 1) > m);
            prop_assert!((k + 1) as f64 <= 2.0 * ((m + 1) as f64).sqrt());
        }
    }
}
