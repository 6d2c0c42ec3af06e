//! Binary weight files.
//!
//! Layout, all little-endian: 8-byte magic, `u32` version, `u64` dimensions
//! `n_real, n_aux, m, k`, solver settings `tol: f64, max_sweeps: u64,
//! prob_clamp: f64, seed: u64`, then `S` (column-major), `v_⊤` and `v_rand`
//! as `f64`, and finally the SHA-256 of everything before it.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::layer::{LayerConfig, LayerState, SatLayer};
use crate::linalg::Matrix;
use crate::sdp::ClauseWeights;

pub const MAGIC: &[u8; 8] = b"SATNETW\0";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn encode(layer: &SatLayer) -> Vec<u8> {
    let cfg = layer.config();
    let st = layer.state();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [cfg.n_real, cfg.n_aux, cfg.m, cfg.k] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&cfg.tol.to_le_bytes());
    out.extend_from_slice(&(cfg.max_sweeps as u64).to_le_bytes());
    out.extend_from_slice(&cfg.prob_clamp.to_le_bytes());
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    for x in st.s.matrix().as_slice().iter().chain(&st.v_top).chain(st.v_rand.as_slice()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::CorruptFile(format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice has length N"))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.take::<8>(what).map(u64::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }

    fn f64s(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        (0..len).map(|_| self.f64(what)).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<SatLayer> {
    if bytes.len() < MAGIC.len() + 4 + DIGEST_LEN || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CorruptFile("missing magic header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::VersionMismatch { found: version, expected: VERSION });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 12 };
    let mut dim = |what: &str| -> Result<usize> {
        let d = r.u64(what)?;
        // no sane layer comes near this; guards the allocations below
        if d > 1 << 24 {
            return Err(Error::CorruptFile(format!("{what} = {d} is implausible")));
        }
        Ok(d as usize)
    };
    let (n_real, n_aux, m, k) = (dim("n_real")?, dim("n_aux")?, dim("m")?, dim("k")?);
    let tol = r.f64("tol")?;
    let max_sweeps = r.u64("max_sweeps")? as usize;
    let prob_clamp = r.f64("prob_clamp")?;
    let seed = r.u64("seed")?;

    let mut cfg = LayerConfig::new(n_real, n_aux, m)?.with_seed(seed).with_solver(tol, max_sweeps);
    cfg.prob_clamp = prob_clamp;
    if cfg.k != k {
        return Err(Error::CorruptFile(format!("stored rank {k} does not match {} for n = {}", cfg.k, n_real + n_aux)));
    }
    cfg.validate()?;
    let n = cfg.n_vars();
    let s = Matrix::from_col_major(m, n + 1, r.f64s(m * (n + 1), "S")?);
    let v_top = r.f64s(k, "v_top")?;
    let v_rand = Matrix::from_col_major(k, n, r.f64s(k * n, "v_rand")?);
    if r.pos != body.len() {
        return Err(Error::CorruptFile(format!("{} trailing bytes", body.len() - r.pos)));
    }
    SatLayer::from_parts(cfg, LayerState { s: ClauseWeights::from_matrix(s)?, v_top, v_rand })
}

pub fn save(layer: &SatLayer, path: &Path) -> Result<()> {
    fs::write(path, encode(layer))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SatLayer> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer() -> SatLayer {
        SatLayer::new(LayerConfig::new(3, 2, 5).unwrap().with_seed(4)).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let l = layer();
        let bytes = encode(&l);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.state(), l.state());
        assert_eq!(back.config(), l.config());
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn detects_corruption_and_version() {
        let bytes = encode(&layer());
        let mut flipped = bytes.clone();
        flipped[60] ^= 1;
        assert!(matches!(decode(&flipped), Err(Error::CorruptFile(_))));
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(decode(&v2), Err(Error::VersionMismatch { found: 2, expected: 1 })));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(Error::CorruptFile(_))));
        assert!(decode(b"nope").is_err());
    }
}
