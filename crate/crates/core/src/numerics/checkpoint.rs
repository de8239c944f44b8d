//! Flat binary parameter checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes   "RLBDCKPT"
//! version    u32       CHECKPOINT_VERSION
//! records    u32       number of networks stored
//! per record:
//!   layers   u32       number of layer sizes
//!   sizes    u64 * layers
//!   extra    u64       number of trailing free parameters (e.g. log-std)
//!   params   f64 * (network parameter count), layer order: weights then biases
//!   extras   f64 * extra
//! ```

use std::io::{Read, Write};

use super::mlp::Mlp;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RLBDCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(w: &mut W, records: &[(&Mlp, &[f64])]) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (net, extra) in records {
        w.write_all(&(net.sizes().len() as u32).to_le_bytes())?;
        for &s in net.sizes() {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        w.write_all(&(extra.len() as u64).to_le_bytes())?;
        for v in net.params().iter().chain(extra.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Vec<(Mlp, Vec<f64>)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = read_u32(r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let n_sizes = read_u32(r)? as usize;
        if n_sizes > 64 {
            return Err(Error::Checkpoint(format!("implausible layer count {n_sizes}")));
        }
        let sizes = (0..n_sizes)
            .map(|_| read_u64(r).map(|s| s as usize))
            .collect::<Result<Vec<_>>>()?;
        let n_extra = read_u64(r)? as usize;
        let mut net = Mlp::zeros(&sizes).map_err(|e| Error::Checkpoint(e.to_string()))?;
        for p in net.params_mut() {
            *p = read_f64(r)?;
        }
        let extra = (0..n_extra).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        out.push((net, extra));
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = Rng::new(11);
        let a = Mlp::new(&[4, 8, 2], 0.01, &mut rng).unwrap();
        let b = Mlp::new(&[4, 3, 1], 1.0, &mut rng).unwrap();
        let extra = [-0.5, f64::MIN_POSITIVE, 1e300];
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[(&a, &extra), (&b, &[])]).unwrap();
        let got = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(got.len(), 2);
        let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(got[0].0.sizes(), a.sizes());
        assert_eq!(bits(got[0].0.params()), bits(a.params()));
        assert_eq!(bits(&got[0].1), bits(&extra));
        assert_eq!(bits(got[1].0.params()), bits(b.params()));
        assert!(got[1].1.is_empty());

        let mut again = Vec::new();
        write_checkpoint(&mut again, &[(&got[0].0, &got[0].1), (&got[1].0, &got[1].1)]).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(
            read_checkpoint(&mut &b"NOTACKPT\x01\0\0\0\0\0\0\0"[..]),
            Err(Error::Checkpoint(_))
        ));
        let net = Mlp::zeros(&[2, 2]).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[(&net, &[])]).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(&mut buf.as_slice()).is_err());
    }
}
