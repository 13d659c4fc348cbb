//! Binary channel container.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "BCHX"  u32 version  u64 M  u64 N  u64 N_f
//! N_f × f64 frequencies (ascending)
//! N_f·N·M × (f32 re, f32 im), frequency-major, then n, then m
//! ```

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::{ChannelMatrix, FrequencyGrid};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BCHX";
pub const CONTAINER_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 3 * 8;

/// Encoded size in bytes of an `m × n × n_f` container.
pub fn container_len(m: usize, n: usize, n_f: usize) -> usize {
    HEADER_LEN + 8 * n_f + 8 * m * n * n_f
}

pub fn encode_channel(h: &ChannelMatrix) -> Vec<u8> {
    let (m, n, n_f) = (h.tx_len(), h.rx_len(), h.grid().len());
    let mut out = Vec::with_capacity(container_len(m, n, n_f));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    for d in [m, n, n_f] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for f in h.grid().freqs() {
        out.extend_from_slice(&f.to_le_bytes());
    }
    for z in h.data() {
        out.extend_from_slice(&(z.re as f32).to_le_bytes());
        out.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let end = self.pos + K;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Container(format!("truncated container while reading {what}")))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length is K"))
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.take::<8>(what)?);
        usize::try_from(v).map_err(|_| Error::Container(format!("{what} does not fit in memory")))
    }
}

pub fn decode_channel(buf: &[u8]) -> Result<ChannelMatrix> {
    let mut c = Cursor { buf, pos: 0 };
    if &c.take::<4>("magic")? != MAGIC {
        return Err(Error::Container("bad magic (expected \"BCHX\")".into()));
    }
    let version = u32::from_le_bytes(c.take::<4>("version")?);
    if version != CONTAINER_VERSION {
        return Err(Error::Container(format!(
            "unsupported container version {version} (expected {CONTAINER_VERSION})"
        )));
    }
    let m = c.u64("M")?;
    let n = c.u64("N")?;
    let n_f = c.u64("N_f")?;
    let expected = m
        .checked_mul(n)
        .and_then(|x| x.checked_mul(n_f))
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(HEADER_LEN + 8 * n_f))
        .ok_or_else(|| Error::Container("dimensions overflow".into()))?;
    if buf.len() < expected {
        return Err(Error::Container(format!(
            "truncated payload: {} of {expected} bytes",
            buf.len()
        )));
    }
    if buf.len() > expected {
        return Err(Error::Container(format!(
            "{} trailing bytes after payload",
            buf.len() - expected
        )));
    }
    let freqs = (0..n_f)
        .map(|_| c.take::<8>("frequencies").map(f64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let grid = FrequencyGrid::from_freqs(freqs).map_err(|e| Error::Container(e.to_string()))?;
    let data = buf[c.pos..]
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes(b[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(b[4..].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ChannelMatrix::from_data(m, n, grid, data).map_err(|e| Error::Container(e.to_string()))
}

pub fn save_channel(h: &ChannelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_channel(h))
        .map_err(|e| Error::io(path, e))
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelMatrix> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_channel(&buf)
}

/// Rounds every entry to single precision, the resolution the container stores.
pub fn quantize(h: &ChannelMatrix) -> ChannelMatrix {
    let mut q = h.clone();
    for z in q.data_mut() {
        *z = Complex64::new(z.re as f32 as f64, z.im as f32 as f64);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, n: usize, n_f: usize) -> ChannelMatrix {
        let grid = FrequencyGrid::linear(3e9, 4e9, n_f).unwrap();
        let data = (0..m * n * n_f)
            .map(|k| {
                Complex64::new(
                    (k as f64 * 0.37).sin() * 1e-3,
                    (k as f64 * 0.11).cos() * 1e-4,
                )
            })
            .collect();
        ChannelMatrix::from_data(m, n, grid, data).unwrap()
    }

    #[test]
    fn round_trip_is_exact_after_quantization() {
        let h = quantize(&sample(3, 4, 5));
        let back = decode_channel(&encode_channel(&h)).unwrap();
        assert_eq!(back, h);
        let dist: f64 = back
            .data()
            .iter()
            .zip(h.data())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn layout_is_frequency_then_rx_then_tx() {
        let h = sample(2, 3, 2);
        let buf = encode_channel(&h);
        assert_eq!(&buf[..4], b"BCHX");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), 3e9);
        // entry (m=1, n=2, i=1) sits at payload slot (1·3 + 2)·2 + 1
        let slot = 48 + 8 * ((3 + 2) * 2 + 1);
        let re = f32::from_le_bytes(buf[slot..slot + 4].try_into().unwrap());
        assert_eq!(re, h.get(1, 2, 1).re as f32);
    }

    #[test]
    fn size_arithmetic() {
        assert_eq!(
            container_len(51, 169, 1000),
            32 + 8 * 1000 + 51 * 169 * 1000 * 8
        );
        let h = sample(5, 7, 3);
        assert_eq!(encode_channel(&h).len(), container_len(5, 7, 3));
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = encode_channel(&sample(2, 2, 2));
        let good = buf.clone();
        buf[0] = b'X';
        assert!(decode_channel(&buf)
            .unwrap_err()
            .to_string()
            .contains("magic"));

        let mut buf = good.clone();
        buf[4] = 2;
        assert!(decode_channel(&buf)
            .unwrap_err()
            .to_string()
            .contains("version"));

        let err = decode_channel(&good[..good.len() - 3])
            .unwrap_err()
            .to_string();
        assert!(err.contains("truncated"), "{err}");
        assert!(decode_channel(&good[..20])
            .unwrap_err()
            .to_string()
            .contains("truncated"));

        let mut long = good.clone();
        long.push(0);
        assert!(decode_channel(&long).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.bchx");
        let h = quantize(&sample(4, 3, 6));
        save_channel(&h, &path).unwrap();
        assert_eq!(load_channel(&path).unwrap(), h);
    }
}
