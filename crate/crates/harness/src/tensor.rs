//! Raw tensor files: little-endian IEEE-754 doubles, row-major, no header.

use std::fs;
use std::path::Path;

use crate::error::{io_err, HarnessError, Result};

pub fn encode(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a byte buffer whose length must be a multiple of 8.
pub fn decode(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(HarnessError::Format(format!(
            "tensor byte length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Decodes and checks the element count against `shape`.
pub fn decode_shaped(bytes: &[u8], shape: &[usize]) -> Result<Vec<f64>> {
    let expected = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| HarnessError::Format(format!("shape {shape:?} overflows")))?;
    if bytes.len() != expected {
        return Err(HarnessError::Format(format!(
            "tensor has {} bytes, shape {shape:?} needs {expected}",
            bytes.len()
        )));
    }
    decode(bytes)
}

pub fn write(path: &Path, values: &[f64]) -> Result<()> {
    fs::write(path, encode(values)).map_err(io_err(path))
}

pub fn read(path: &Path, shape: &[usize]) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_shaped(&bytes, shape).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn little_endian_layout() {
        let b = encode(&[1.0, -2.5]);
        assert_eq!(&b[..8], &[0, 0, 0, 0, 0, 0, 0xf0, 0x3f]);
        assert_eq!(&b[8..], &(-2.5f64).to_le_bytes());
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(decode(&[0u8; 7]).is_err());
        assert!(decode_shaped(&[0u8; 16], &[3]).is_err());
        assert!(decode_shaped(&[0u8; 16], &[usize::MAX, 2]).is_err());
        assert_eq!(decode_shaped(&[0u8; 16], &[1, 2]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.f64");
        write(&p, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 24);
        assert_eq!(read(&p, &[3]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(read(&p, &[4]).is_err());
    }

    proptest! {
        #[test]
        fn bits_round_trip(v in proptest::collection::vec(any::<u64>(), 0..64)) {
            let vals: Vec<f64> = v.iter().map(|b| f64::from_bits(*b)).collect();
            let back = decode(&encode(&vals)).unwrap();
            prop_assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), v);
        }
    }
}
