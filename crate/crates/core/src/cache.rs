//! MUT1 binary cache: `b"MUT1"`, n_max as u64 little-endian, then n_max
//! signed bytes holding μ(1)..μ(n_max). No padding, no trailer.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{MoebiusError, Result};
use crate::mu::{MuTable, Provenance};

pub const MAGIC: &[u8; 4] = b"MUT1";
pub const HEADER_LEN: usize = 12;

pub fn encode(table: &MuTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + table.n_max());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(table.n_max() as u64).to_le_bytes());
    out.extend(table.values().iter().map(|&v| v as u8));
    out
}

/// Parses a MUT1 image. `origin` only labels errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<MuTable> {
    let corrupt = |index: Option<u64>, detail: String| MoebiusError::CorruptCache {
        path: origin.to_path_buf(),
        index,
        detail,
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(corrupt(None, "missing MUT1 header".into()));
    }
    let n_max = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != n_max {
        return Err(corrupt(
            None,
            format!(
                "header declares {n_max} values, file holds {}",
                payload.len()
            ),
        ));
    }
    if let Some(pos) = payload.iter().position(|&b| !matches!(b as i8, -1..=1)) {
        return Err(corrupt(
            Some(pos as u64 + 1),
            format!(
                "byte {:#04x} for n = {} is not a trit",
                payload[pos],
                pos + 1
            ),
        ));
    }
    let values = payload.iter().map(|&b| b as i8).collect();
    MuTable::from_values(values, Provenance::Loaded).map_err(|e| corrupt(None, e.to_string()))
}

pub fn write_table(path: &Path, table: &MuTable) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| MoebiusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)
        .and_then(|_| w.write_all(&(table.n_max() as u64).to_le_bytes()))
        .and_then(|_| {
            // i8 -> u8 is a bit-level reinterpretation
            let bytes: Vec<u8> = table.values().iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)
        })
        .and_then(|_| w.flush())
        .map_err(|e| MoebiusError::io(path, e))
}

pub fn read_table(path: &Path) -> Result<MuTable> {
    let bytes = fs::read(path).map_err(|e| MoebiusError::io(path, e))?;
    decode(&bytes, path)
}

/// 64-bit FNV-1a over the value bytes.
pub fn checksum(values: &[i8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    values
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b as u8)).wrapping_mul(PRIME))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mu::build_mu_recursive;
    use proptest::prelude::*;

    #[test]
    fn layout_is_bit_exact() {
        let table = build_mu_recursive(6).unwrap();
        let bytes = encode(&table);
        assert_eq!(
            bytes,
            [b'M', b'U', b'T', b'1', 6, 0, 0, 0, 0, 0, 0, 0, 0x01, 0xff, 0xff, 0x00, 0xff, 0x01]
        );
    }

    #[test]
    fn rejects_bad_images() {
        let origin = Path::new("mem");
        assert!(decode(b"MUT0\x01\0\0\0\0\0\0\0\x01", origin).is_err());
        assert!(decode(b"MUT1\x02\0\0\0\0\0\0\0\x01", origin).is_err());
        assert!(decode(b"MUT1\x01\0\0\0\0\0\0\0\x05", origin).is_err());
        assert!(decode(b"MUT1", origin).is_err());
    }

    #[test]
    fn fnv1a_reference_vectors() {
        assert_eq!(checksum(&[]), 0xcbf2_9ce4_8422_2325);
        // FNV-1a 64 of "a"
        assert_eq!(checksum(&[b'a' as i8]), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.mut1");
        let table = build_mu_recursive(1000).unwrap();
        write_table(&path, &table).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 1012);
        let back = read_table(&path).unwrap();
        assert_eq!(back.values(), table.values());
        assert_eq!(back.provenance(), Provenance::Loaded);
        assert_eq!(fs::read(&path).unwrap(), encode(&table));
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(values in prop::collection::vec(-1i8..=1, 1..512)) {
            let table = MuTable::from_values(values, Provenance::Loaded).unwrap();
            let back = decode(&encode(&table), Path::new("mem")).unwrap();
            prop_assert_eq!(back.values(), table.values());
        }
    }
}
