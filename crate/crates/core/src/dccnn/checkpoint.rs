//! Parameter checkpoints.
//!
//! Little-endian layout: magic `CSNN-V1\0`, `u32` cascade count, then for every
//! tensor `u32` rank, `rank × u32` dims and an `f32` row-major payload.
//! Tensors appear cascade by cascade, layer by layer, weight before bias.
//! Weights are `(cout, cin, k, k)`, biases `(cout)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{NetworkArch, NetworkParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CSNN-V1\0";

pub fn write_checkpoint<W: Write>(params: &NetworkParams, mut out: W) -> Result<()> {
    let arch = params.arch();
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(arch.cascades as u32).to_le_bytes())?;
    let k = arch.kernel;
    for t in 0..arch.cascades {
        for (l, s) in params.slots(t).iter().enumerate() {
            for (dims, values) in [
                (vec![s.cout, s.cin, k, k], params.weight(t, l)),
                (vec![s.cout], params.bias(t, l)),
            ] {
                out.write_all(&(dims.len() as u32).to_le_bytes())?;
                for d in dims {
                    out.write_all(&(d as u32).to_le_bytes())?;
                }
                for &v in values {
                    out.write_all(&(v as f32).to_le_bytes())?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_checkpoint(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            offset: self.pos as u64,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail(format!("truncated: wanted {n} more bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

/// Parse a checkpoint. The layer count, channel width and kernel size are
/// inferred from the tensor shapes; `residual` is not stored in the file.
pub fn read_checkpoint<R: Read>(mut input: R, residual: bool, path: &Path) -> Result<NetworkParams> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut cur = Cursor { bytes: &bytes, pos: 0, path };
    if cur.take(8)? != CHECKPOINT_MAGIC {
        cur.pos = 0;
        return Err(cur.fail("bad magic, expected \"CSNN-V1\\0\""));
    }
    let cascades = cur.u32()?;
    let mut tensors: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    while cur.pos < bytes.len() {
        let rank = cur.u32()?;
        if rank == 0 || rank > 4 {
            return Err(cur.fail(format!("unsupported tensor rank {rank}")));
        }
        let dims = (0..rank).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        let n: usize = dims.iter().product();
        let payload = cur.take(n * 4)?;
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        tensors.push((dims, values));
    }
    if cascades == 0 || tensors.is_empty() || tensors.len() % (2 * cascades) != 0 {
        return Err(cur.fail(format!(
            "{} tensors cannot describe {cascades} cascades",
            tensors.len()
        )));
    }
    let conv_layers = tensors.len() / (2 * cascades);
    let first = &tensors[0].0;
    if first.len() != 4 {
        return Err(cur.fail("first tensor is not a convolution weight"));
    }
    let arch = NetworkArch {
        cascades,
        conv_layers,
        channels: if conv_layers == 1 { 2 } else { first[0] },
        kernel: first[2],
        residual,
    };
    let mut values = Vec::with_capacity(arch.parameter_count());
    let shapes = arch.layer_shapes();
    for (i, (dims, v)) in tensors.into_iter().enumerate() {
        let (cin, cout) = shapes[(i / 2) % conv_layers];
        let expected = if i % 2 == 0 {
            vec![cout, cin, arch.kernel, arch.kernel]
        } else {
            vec![cout]
        };
        if dims != expected {
            return Err(cur.fail(format!(
                "tensor {i} has shape {dims:?}, expected {expected:?}"
            )));
        }
        values.extend(v);
    }
    NetworkParams::from_values(arch, values)
}

pub fn load_checkpoint(path: impl AsRef<Path>, residual: bool) -> Result<NetworkParams> {
    let path = path.as_ref();
    read_checkpoint(BufReader::new(File::open(path)?), residual, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dccnn::init_params;

    #[test]
    fn round_trip_through_f32() {
        let arch = NetworkArch { cascades: 2, conv_layers: 3, channels: 4, kernel: 3, residual: true };
        let p = init_params(arch, 3).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        assert_eq!(&buf[..8], CHECKPOINT_MAGIC);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 2);
        let back = read_checkpoint(&buf[..], true, Path::new("mem")).unwrap();
        assert_eq!(back.arch(), &arch);
        for (a, b) in p.values().iter().zip(back.values()) {
            assert_eq!(*a as f32 as f64, *b);
        }
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_bad_files() {
        let arch = NetworkArch { cascades: 1, conv_layers: 2, channels: 3, kernel: 3, residual: true };
        let mut buf = Vec::new();
        write_checkpoint(&init_params(arch, 0).unwrap(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(&bad[..], true, Path::new("m")),
            Err(Error::Format { offset: 0, .. })
        ));
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_checkpoint(cut, true, Path::new("m")), Err(Error::Format { .. })));
    }
}
