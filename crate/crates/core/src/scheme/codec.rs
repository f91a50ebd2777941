//! Versioned little-endian containers for indices and token lists.
//!
//! Index layout: `b"OSSEIDX\0"`, `u16` version, parameter block, then `n`
//! polynomials of `sizemax + 2` field elements (8 bytes each).
//! Token layout: `b"OSSETOK\0"`, `u16` version, `u64` count, then
//! `(u64 point, u32 label)` records.

use std::io::{Read, Write};

use super::{Hashing, PolyCoeffs, SchemeError, SchemeParams, SearchIndex, Token};
use crate::corpus::DatasetStats;
use crate::field::Fp;

pub const INDEX_MAGIC: &[u8; 8] = b"OSSEIDX\0";
pub const TOKENS_MAGIC: &[u8; 8] = b"OSSETOK\0";
pub const FORMAT_VERSION: u16 = 1;

fn bad(msg: impl Into<String>) -> SchemeError {
    SchemeError::Codec(msg.into())
}

struct In<R>(R);

impl<R: Read> In<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], SchemeError> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| bad(format!("truncated input: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8, SchemeError> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, SchemeError> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32, SchemeError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, SchemeError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64, SchemeError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn fp(&mut self) -> Result<Fp, SchemeError> {
        let v = self.u64()?;
        Fp::from_canonical(v).ok_or_else(|| bad(format!("field element {v} not reduced")))
    }
    fn header(&mut self, magic: &[u8; 8]) -> Result<(), SchemeError> {
        if &self.bytes::<8>()? != magic {
            return Err(bad("bad magic bytes"));
        }
        let v = self.u16()?;
        if v != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {v}")));
        }
        Ok(())
    }
}

fn write_params<W: Write>(w: &mut W, p: &SchemeParams) -> std::io::Result<()> {
    w.write_all(&p.p.to_le_bytes())?;
    w.write_all(&p.q.to_le_bytes())?;
    w.write_all(&p.countermax.to_le_bytes())?;
    w.write_all(&p.label_space.to_le_bytes())?;
    w.write_all(&[match p.hashing {
        Hashing::Single => 0u8,
        Hashing::Dual => 1u8,
    }])?;
    w.write_all(&p.modulus.to_le_bytes())?;
    for v in [p.n, p.universe, p.sizemax, p.freqmax] {
        w.write_all(&v.to_le_bytes())?;
    }
    for k in p.hash_keys {
        w.write_all(&k.to_le_bytes())?;
    }
    Ok(())
}

fn read_params<R: Read>(r: &mut In<R>) -> Result<SchemeParams, SchemeError> {
    let p = r.f64()?;
    let q = r.f64()?;
    let countermax = r.u32()?;
    let label_space = r.u32()?;
    let hashing = match r.u8()? {
        0 => Hashing::Single,
        1 => Hashing::Dual,
        other => return Err(bad(format!("unknown hashing tag {other}"))),
    };
    let modulus = r.u64()?;
    if modulus != crate::field::MODULUS {
        return Err(bad(format!("unsupported modulus {modulus}")));
    }
    let (n, universe, sizemax, freqmax) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    let hash_keys = [r.u64()?, r.u64()?];
    let stats = DatasetStats {
        n: n as usize,
        freqmax: freqmax as usize,
        sizemax: sizemax as usize,
        universe_size: universe as usize,
    };
    SchemeParams::new(&stats, hashing, p, q, countermax, label_space, hash_keys)
}

pub fn write_index<W: Write>(index: &SearchIndex, mut w: W) -> Result<(), SchemeError> {
    w.write_all(INDEX_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_params(&mut w, index.params())?;
    for poly in index.polynomials() {
        for c in poly.coefficients() {
            w.write_all(&c.value().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_index<R: Read>(r: R) -> Result<SearchIndex, SchemeError> {
    let mut r = In(r);
    r.header(INDEX_MAGIC)?;
    let params = read_params(&mut r)?;
    let width = params.sizemax as usize + 2;
    let mut polys = Vec::with_capacity(params.n as usize);
    for _ in 0..params.n {
        let coeffs = (0..width).map(|_| r.fp()).collect::<Result<Vec<_>, _>>()?;
        polys.push(PolyCoeffs::from_coefficients(coeffs));
    }
    let stats = DatasetStats {
        n: params.n as usize,
        freqmax: params.freqmax as usize,
        sizemax: params.sizemax as usize,
        universe_size: params.universe as usize,
    };
    SearchIndex::from_parts(params, stats, polys)
}

pub fn write_tokens<W: Write>(tokens: &[Token], mut w: W) -> Result<(), SchemeError> {
    w.write_all(TOKENS_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(tokens.len() as u64).to_le_bytes())?;
    for t in tokens {
        w.write_all(&t.point.value().to_le_bytes())?;
        w.write_all(&t.label.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tokens<R: Read>(r: R) -> Result<Vec<Token>, SchemeError> {
    let mut r = In(r);
    r.header(TOKENS_MAGIC)?;
    let count = r.u64()?;
    let mut out = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        out.push(Token {
            point: r.fp()?,
            label: r.u32()?,
        });
    }
    Ok(out)
}
