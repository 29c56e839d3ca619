//! Binary network checkpoints.
//!
//! Layout (little endian): magic `RDNET\0\0\0`, `u32` version, `u32` length
//! of a JSON-encoded [`TrainConfig`] followed by its bytes, `u32` layer
//! count, then per layer `u32 in_dim`, `u32 out_dim`, weights and bias as
//! raw `f64` bit patterns. Round trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use super::{Dense, Network, TrainConfig};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RDNET\0\0\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub train: TrainConfig,
}

pub fn write_checkpoint<W: Write>(w: &mut W, ckpt: &Checkpoint) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let cfg = serde_json::to_vec(&ckpt.train).map_err(std::io::Error::other)?;
    w.write_all(&(cfg.len() as u32).to_le_bytes())?;
    w.write_all(&cfg)?;
    let layers = ckpt.network.layers();
    w.write_all(&(layers.len() as u32).to_le_bytes())?;
    for l in layers {
        w.write_all(&(l.in_dim as u32).to_le_bytes())?;
        w.write_all(&(l.out_dim as u32).to_le_bytes())?;
        for v in l.weights.iter().chain(&l.bias) {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated parameters: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a network checkpoint".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let cfg_len = read_u32(r)? as usize;
    let mut cfg = vec![0u8; cfg_len];
    r.read_exact(&mut cfg)
        .map_err(|e| Error::Checkpoint(format!("truncated config: {e}")))?;
    let train: TrainConfig = serde_json::from_slice(&cfg)?;
    let count = read_u32(r)? as usize;
    if count == 0 || count > 1024 {
        return Err(Error::Checkpoint(format!("implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let in_dim = read_u32(r)? as usize;
        let out_dim = read_u32(r)? as usize;
        let weights = read_f64s(r, in_dim * out_dim)?;
        let bias = read_f64s(r, out_dim)?;
        layers.push(Dense {
            in_dim,
            out_dim,
            weights,
            bias,
        });
    }
    Ok(Checkpoint {
        network: Network::from_layers(layers)?,
        train,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, ckpt).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Network::new(5, &[7, 3], 4, 11).unwrap();
        let ckpt = Checkpoint {
            network: net.clone(),
            train: TrainConfig::default(),
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &ckpt).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(back, ckpt);
        let x = Matrix::from_rows(&[[0.1, 0.7, 0.3, 0.99, 1.0 / 3.0]]).unwrap();
        let a = net.forward(&x).unwrap();
        let b = back.network.forward(&x).unwrap();
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn rejects_garbage_and_truncation() {
        assert!(read_checkpoint(&mut &b"nope"[..]).is_err());
        let ckpt = Checkpoint {
            network: Network::new(2, &[2], 2, 0).unwrap(),
            train: TrainConfig::default(),
        };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &ckpt).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_checkpoint(&mut buf.as_slice()),
            Err(Error::Checkpoint(_))
        ));
    }
}
