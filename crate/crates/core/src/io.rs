//! Field file format: one JSON header line, a newline, then the raw
//! little-endian `f64` cell payload. Reload is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::field::GridField;
use crate::geometry::SpaceTimeBox;
use crate::{Error, Result};

/// Header line of a field file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    /// Spatial dimension.
    pub n: usize,
    /// Parabolic exponent carried with the field.
    pub p: f64,
    /// Cells per axis, time last.
    pub resolution: Vec<usize>,
    pub domain: DomainBounds,
    /// Element type tag; only "f64le" is defined.
    pub elem: String,
    /// Payload length in bytes.
    pub payload_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub const ELEM_F64LE: &str = "f64le";

/// Writes `field` (and its exponent `p`) to `path`.
pub fn save_field(path: &Path, field: &GridField<f64>, p: f64) -> Result<()> {
    let header = FieldHeader {
        n: field.resolution().len() - 1,
        p,
        resolution: field.resolution().to_vec(),
        domain: DomainBounds {
            lo: field.domain().lo.clone(),
            hi: field.domain().hi.clone(),
        },
        elem: ELEM_F64LE.to_string(),
        payload_len: field.values().len() * 8,
    };
    let mut w = BufWriter::new(File::create(path)?);
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    for &v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a field file; returns the field and the exponent `p` from its header.
pub fn load_field(path: &Path) -> Result<(GridField<f64>, f64)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = r.read(&mut byte)?;
        if got == 0 {
            return Err(Error::Format("missing header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 1 << 16 {
            return Err(Error::Format("header line too long".into()));
        }
    }
    let header: FieldHeader =
        serde_json::from_slice(&line).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.elem != ELEM_F64LE {
        return Err(Error::Format(format!("unknown element tag {:?}", header.elem)));
    }
    let cells: usize = header.resolution.iter().product();
    if header.payload_len != cells * 8 {
        return Err(Error::Format(format!(
            "payload length {} does not match {} cells",
            header.payload_len, cells
        )));
    }
    if header.resolution.len() != header.n + 1 {
        return Err(Error::Format("resolution length must be n + 1".into()));
    }
    let mut payload = vec![0u8; header.payload_len];
    r.read_exact(&mut payload)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let domain = SpaceTimeBox::new(header.domain.lo.clone(), header.domain.hi.clone())?;
    let field = GridField::new(domain, header.resolution.clone(), values)?;
    Ok((field, header.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Preset;

    #[test]
    fn round_trip_is_bit_exact() {
        let domain = SpaceTimeBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let f = GridField::generate(domain, vec![6, 9], &Preset::RandomCells, 17).unwrap();
        let dir = std::env::temp_dir().join("pjn-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.pjnf");
        save_field(&path, &f, 2.5).unwrap();
        let (g, p) = load_field(&path).unwrap();
        assert_eq!(p, 2.5);
        assert_eq!(f.values(), g.values());
        assert_eq!(f.resolution(), g.resolution());
        let bits_a: Vec<u64> = f.values().iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = g.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }

    #[test]
    fn malformed_header_is_rejected() {
        let dir = std::env::temp_dir().join("pjn-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("broken.pjnf");
        std::fs::write(&path, b"{ not json\n1234").unwrap();
        assert!(matches!(load_field(&path), Err(Error::Format(_))));
    }
}
