//! Binary network checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    4 bytes  "TLNN"
//! version  u32      1
//! layers   u32
//! per layer: inputs u32, outputs u32, activation u8 (0 identity, 1 relu, 2 tanh)
//! params   f64 x N  layer by layer: weights row-major (outputs x inputs), then bias
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::nn::mlp::{Activation, LayerShape, Mlp};

const MAGIC: &[u8; 4] = b"TLNN";
const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(net: &Mlp, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.shapes().len() as u32).to_le_bytes())?;
    for s in net.shapes() {
        w.write_all(&(s.inputs as u32).to_le_bytes())?;
        w.write_all(&(s.outputs as u32).to_le_bytes())?;
        w.write_all(&[s.activation.code()])?;
    }
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_mlp<R: Read>(mut r: R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a network checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let layers = read_u32(&mut r)? as usize;
    if layers == 0 || layers > 64 {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {layers}"
        )));
    }
    let mut shapes = Vec::with_capacity(layers);
    for _ in 0..layers {
        let inputs = read_u32(&mut r)? as usize;
        let outputs = read_u32(&mut r)? as usize;
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let activation = Activation::from_code(code[0])
            .ok_or_else(|| Error::Checkpoint(format!("unknown activation {}", code[0])))?;
        if let Some(prev) = shapes.last().map(|s: &LayerShape| s.outputs) {
            if prev != inputs {
                return Err(Error::Checkpoint("layer widths do not chain".into()));
            }
        }
        shapes.push(LayerShape {
            inputs,
            outputs,
            activation,
        });
    }
    let mut net = Mlp::from_shapes(shapes);
    let mut b = [0u8; 8];
    for p in net.params_mut() {
        r.read_exact(&mut b)?;
        *p = f64::from_le_bytes(b);
    }
    if !net.all_finite() {
        return Err(Error::Checkpoint("non-finite parameters".into()));
    }
    Ok(net)
}

pub fn save_mlp(net: &Mlp, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_mlp(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_mlp(path: &std::path::Path) -> Result<Mlp> {
    let f = std::fs::File::open(path)?;
    read_mlp(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::random(
            &[5, 9, 3],
            Activation::Relu,
            Activation::Tanh,
            0.1,
            &mut rng,
        );
        let mut buf = Vec::new();
        write_mlp(&net, &mut buf).unwrap();
        let back = read_mlp(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let x = [0.1, 0.2, -0.3, 0.4, 2.0];
        let a = net.forward(&x).unwrap();
        let b = back.forward(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mlp(&b"NOPE0000"[..]).is_err());
        assert!(read_mlp(&b"TLNN"[..]).is_err());
    }
}
