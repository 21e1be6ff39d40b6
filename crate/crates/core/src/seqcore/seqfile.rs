//! `.seq` container: `"CDS1"`, u64 little-endian bit length, then
//! `ceil(len / 8)` payload bytes. Bit `j` of byte `b` holds `S[8b + j]`;
//! unused high bits of the final byte are zero.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{BitSequence, SeqError};

pub const SEQ_MAGIC: &[u8; 4] = b"CDS1";
const HEADER_LEN: usize = 12;

pub fn pack(seq: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + seq.len().div_ceil(8));
    out.extend_from_slice(SEQ_MAGIC);
    out.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    for chunk in seq.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (j, &b)| acc | ((b as u8) << j));
        out.push(byte);
    }
    out
}

pub fn unpack(bytes: &[u8]) -> Result<BitSequence, SeqError> {
    if bytes.len() < 4 || &bytes[..4] != SEQ_MAGIC {
        return Err(SeqError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(SeqError::TruncatedHeader(bytes.len()));
    }
    let len = u64::from_le_bytes(bytes[4..12].try_into().expect("8-byte slice"));
    let payload = &bytes[HEADER_LEN..];
    let available = payload.len() as u64 * 8;
    if len > available {
        return Err(SeqError::LengthExceedsPayload { declared: len, available });
    }
    let needed = len.div_ceil(8) as usize;
    if payload.len() > needed {
        return Err(SeqError::TrailingPayload { declared: len, extra: payload.len() - needed });
    }
    Ok((0..len as usize)
        .map(|p| (payload[p / 8] >> (p % 8)) & 1 == 1)
        .collect())
}

/// Writes via a temporary sibling file and rename.
pub fn write_seq_file(path: &Path, seq: &[bool]) -> std::io::Result<()> {
    write_atomic(path, &pack(seq))
}

#[derive(Debug, thiserror::Error)]
pub enum SeqFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: SeqError },
}

pub fn read_seq_file(path: &Path) -> Result<BitSequence, SeqFileError> {
    let shown = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| SeqFileError::Io { path: shown.clone(), source })?;
    unpack(&bytes).map_err(|source| SeqFileError::Format { path: shown, source })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_header_only() {
        let bytes = pack(&[]);
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..4], b"CDS1");
        assert_eq!(unpack(&bytes).unwrap().len(), 0);
    }

    #[test]
    fn four_bits_fit_one_byte() {
        let s = BitSequence::parse("1010").unwrap();
        let bytes = pack(&s);
        assert_eq!(bytes.len(), HEADER_LEN + 1);
        // S[0] in bit 0, high bits zero
        assert_eq!(bytes[12], 0b0000_0101);
        assert_eq!(unpack(&bytes).unwrap(), s);
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(unpack(b"XDS1\0\0\0\0\0\0\0\0"), Err(SeqError::BadMagic));
        assert_eq!(unpack(b"CDS1\0\0"), Err(SeqError::TruncatedHeader(6)));
        let mut bytes = pack(&BitSequence::zeros(20));
        bytes.pop();
        assert_eq!(
            unpack(&bytes),
            Err(SeqError::LengthExceedsPayload { declared: 20, available: 16 })
        );
        let mut bytes = pack(&BitSequence::zeros(8));
        bytes.push(0);
        assert!(matches!(unpack(&bytes), Err(SeqError::TrailingPayload { .. })));
    }

    #[test]
    fn large_sequence_round_trips() {
        let s = crate::generators::prng(0xfeed, 10_000);
        assert_eq!(unpack(&pack(&s)).unwrap(), s);
    }

    proptest! {
        #[test]
        fn round_trip(bits in proptest::collection::vec(any::<bool>(), 0..4096)) {
            let packed = pack(&bits);
            prop_assert_eq!(packed.len(), HEADER_LEN + bits.len().div_ceil(8));
            prop_assert_eq!(unpack(&packed).unwrap().into_vec(), bits);
        }
    }
}
