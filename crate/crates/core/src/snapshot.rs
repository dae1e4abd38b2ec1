//! Binary field snapshots.
//!
//! Layout (little-endian): `b"ACFB"`, version `u16`, `n: u8`, `m: u8`,
//! extents `u32` per axis, `h: f64`, origin `f64` per axis, `alpha: f64`,
//! `N: u16`, wells `N * m` `f64`, node values `f64`, the Dirichlet mask
//! packed LSB-first, and a trailing CRC32 of everything before it.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VectorField};

const MAGIC: &[u8; 4] = b"ACFB";
const VERSION: u16 = 1;

/// A field together with the potential parameters it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: VectorField,
    pub alpha: f64,
    pub wells: Vec<Vec<f64>>,
}

pub fn encode(s: &Snapshot) -> Result<Vec<u8>> {
    let f = &s.field;
    if s.wells.iter().any(|w| w.len() != f.m) {
        return Err(Error::InvalidArgument("well dimension differs from field m".into()));
    }
    let n = f.spec.n;
    let mut out = Vec::with_capacity(64 + 8 * f.values.len() + f.dirichlet.len() / 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(n as u8);
    out.push(f.m as u8);
    for &e in &f.spec.extents {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    out.extend_from_slice(&f.spec.h.to_le_bytes());
    for &o in &f.spec.origin {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&s.alpha.to_le_bytes());
    out.extend_from_slice(&(s.wells.len() as u16).to_le_bytes());
    for x in s.wells.iter().flatten() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut bits = vec![0u8; f.dirichlet.len().div_ceil(8)];
    for (k, _) in f.dirichlet.iter().enumerate().filter(|(_, &b)| b) {
        bits[k / 8] |= 1 << (k % 8);
    }
    out.extend_from_slice(&bits);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return Err(Error::FormatError {
                offset: self.buf.len() as u64,
                msg: format!("truncated: needed {} bytes at offset {}", len, self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn bad(offset: usize, msg: &str) -> Error {
    Error::FormatError {
        offset: offset as u64,
        msg: msg.to_string(),
    }
}

pub fn decode(buf: &[u8]) -> Result<Snapshot> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(bad(0, "bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(bad(4, &format!("unsupported version {version}")));
    }
    let n = r.u8()? as usize;
    let m = r.u8()? as usize;
    if !(1..=2).contains(&n) || m == 0 {
        return Err(bad(6, "invalid dimensions"));
    }
    let mut extents = Vec::with_capacity(n);
    for _ in 0..n {
        extents.push(r.u32()? as usize);
    }
    let h = r.f64()?;
    let mut origin = Vec::with_capacity(n);
    for _ in 0..n {
        origin.push(r.f64()?);
    }
    let spec_end = r.pos;
    let spec = GridSpec::new(extents, h, origin).map_err(|e| bad(spec_end, &e.to_string()))?;
    let alpha = r.f64()?;
    let nw = r.u16()? as usize;
    let mut wells = Vec::with_capacity(nw);
    for _ in 0..nw {
        let mut w = Vec::with_capacity(m);
        for _ in 0..m {
            w.push(r.f64()?);
        }
        wells.push(w);
    }
    let nodes = spec.num_nodes();
    let mut values = Vec::with_capacity(nodes * m);
    for _ in 0..nodes * m {
        values.push(r.f64()?);
    }
    let bits = r.take(nodes.div_ceil(8))?;
    let dirichlet = (0..nodes).map(|k| bits[k / 8] >> (k % 8) & 1 == 1).collect();
    let payload_end = r.pos;
    let crc = r.u32()?;
    if crc != crc32fast::hash(&buf[..payload_end]) {
        return Err(bad(payload_end, "checksum mismatch"));
    }
    if r.pos != buf.len() {
        return Err(bad(r.pos, "trailing bytes"));
    }
    Ok(Snapshot {
        field: VectorField {
            spec,
            m,
            values,
            dirichlet,
        },
        alpha,
        wells,
    })
}

pub fn save_snapshot(s: &Snapshot, path: &Path) -> Result<()> {
    let bytes = encode(s)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{init_field, InitMode};
    use crate::potential::Potential;

    fn sample() -> Snapshot {
        let p = Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap();
        let spec = GridSpec::centered(2, 13, 1.0).unwrap();
        let field = init_field(
            spec,
            &p,
            &InitMode::Random {
                seed: 1,
                boundary: None,
            },
        )
        .unwrap();
        Snapshot {
            field,
            alpha: 1.0,
            wells: p.wells_vec(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.acfb");
        save_snapshot(&s, &path).unwrap();
        let back = load_snapshot(&path).unwrap();
        assert_eq!(back.field.dirichlet, s.field.dirichlet);
        assert!(back
            .field
            .values
            .iter()
            .zip(&s.field.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, s);
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&sample()).unwrap();
        let cut = bytes.len() - 100;
        match decode(&bytes[..cut]) {
            Err(Error::FormatError { offset, .. }) => assert_eq!(offset, cut as u64),
            other => panic!("expected FormatError, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&sample()).unwrap();
        bytes[0] = b'X';
        match decode(&bytes) {
            Err(Error::FormatError { offset: 0, msg }) => assert_eq!(msg, "bad magic"),
            other => panic!("expected bad magic, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let mut bytes = encode(&sample()).unwrap();
        let k = bytes.len() / 2;
        bytes[k] ^= 0x10;
        assert!(matches!(decode(&bytes), Err(Error::FormatError { .. })));
    }
}
