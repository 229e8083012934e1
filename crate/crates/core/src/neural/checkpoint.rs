//! Little-endian parameter checkpoints.
//!
//! Network block:
//!
//! | bytes          | field                                          |
//! |----------------|------------------------------------------------|
//! | 4              | magic `MLP1`                                   |
//! | 1              | scalar width in bytes (4 = f32, 8 = f64)       |
//! | 1              | output activation (0 identity, 1 relu, 2 tanh) |
//! | 2              | reserved, zero                                 |
//! | 4 (u32)        | layer count `L`                                |
//! | 4 × (L+1)      | widths, input first                            |
//! | width × params | per layer: weights row-major, then biases      |
//!
//! Agent file: magic `DDPG`, u32 network count (4), then the actor, critic,
//! target actor and target critic blocks in that order.

use crate::error::{Error, Result};
use crate::neural::mlp::{Activation, Mlp};
use crate::scalar::Scalar;

const MLP_MAGIC: &[u8; 4] = b"MLP1";
pub(crate) const AGENT_MAGIC: &[u8; 4] = b"DDPG";

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn take<'a>(input: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if input.len() < n {
        return Err(Error::Checkpoint(format!(
            "truncated: needed {n} bytes, {} left",
            input.len()
        )));
    }
    let (head, rest) = input.split_at(n);
    *input = rest;
    Ok(head)
}

pub(crate) fn take_u32(input: &mut &[u8]) -> Result<u32> {
    let b = take(input, 4)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

pub(crate) fn take_magic(input: &mut &[u8], magic: &[u8; 4]) -> Result<()> {
    if take(input, 4)? != magic {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    Ok(())
}

impl<T: Scalar> Mlp<T> {
    pub fn write_checkpoint(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MLP_MAGIC);
        out.push(T::BYTES as u8);
        out.push(self.output_activation().code());
        out.extend_from_slice(&[0, 0]);
        put_u32(out, self.layers() as u32);
        for &w in self.widths() {
            put_u32(out, w as u32);
        }
        for &p in self.params() {
            p.write_le(out);
        }
    }

    /// Parses one network block, advancing `input` past it.
    pub fn read_checkpoint(input: &mut &[u8]) -> Result<Self> {
        take_magic(input, MLP_MAGIC)?;
        let header = take(input, 4)?;
        if header[0] as usize != T::BYTES {
            return Err(Error::Checkpoint(format!(
                "scalar width {} does not match the requested type ({} bytes)",
                header[0],
                T::BYTES
            )));
        }
        let output = Activation::from_code(header[1])
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation code {}", header[1])))?;
        let layers = take_u32(input)? as usize;
        if layers == 0 || layers > 1024 {
            return Err(Error::Checkpoint(format!(
                "implausible layer count {layers}"
            )));
        }
        let widths = (0..=layers)
            .map(|_| take_u32(input).map(|w| w as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut net = Mlp::zeros(&widths, output).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let n = net.params().len();
        let raw = take(input, n * T::BYTES)?;
        for (p, chunk) in net.params_mut().iter_mut().zip(raw.chunks_exact(T::BYTES)) {
            *p = T::read_le(chunk);
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::<f64>::new(&[3, 5, 2], Activation::Tanh, 3e-3, &mut rng).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf);
        assert_eq!(buf.len(), 4 + 4 + 4 + 3 * 4 + (3 * 5 + 5 + 5 * 2 + 2) * 8);
        let mut input = buf.as_slice();
        let back = Mlp::<f64>::read_checkpoint(&mut input).unwrap();
        assert!(input.is_empty());
        assert_eq!(back.widths(), net.widths());
        assert!(back
            .params()
            .iter()
            .zip(net.params())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_wrong_width_and_truncation() {
        let net = Mlp::<f32>::zeros(&[2, 1], Activation::Identity).unwrap();
        let mut buf = Vec::new();
        net.write_checkpoint(&mut buf);
        assert!(Mlp::<f64>::read_checkpoint(&mut buf.as_slice()).is_err());
        let short = &buf[..buf.len() - 1];
        assert!(Mlp::<f32>::read_checkpoint(&mut &short[..]).is_err());
        assert!(Mlp::<f32>::read_checkpoint(&mut &b"XXXX"[..]).is_err());
    }
}
