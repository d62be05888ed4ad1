//! Binary model snapshots.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes   "PUFOCAL1"
//! n_dims     u32       number of layer widths (layers + 1)
//! dims       u32 * n_dims
//! seed       u64
//! estimator  u8        0 = uPU, 1 = nnPU, 2 = iFPU
//! loss       u8        0 = sigmoid, 1 = logistic, 2 = focal
//! gamma      f64       0 unless focal
//! clamp_eps  f64       0 unless focal
//! per layer  f64 * (out * in)   weights, row-major (out x in)
//!            f64 * out          biases
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Dense, ScorerParams};
use crate::error::{Error, Result};
use crate::loss::{FocalParams, LossKind};
use crate::risk::Estimator;

const MAGIC: &[u8; 8] = b"PUFOCAL1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub params: ScorerParams,
    pub seed: u64,
    pub estimator: Estimator,
    pub loss: LossKind,
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated: {e}")))?;
    Ok(buf)
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| Ok(f64::from_le_bytes(read_array(r)?))).collect()
}

impl Snapshot {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        let dims = self.params.layer_dims();
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for d in &dims {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&[self.estimator.code()])?;
        let (code, fp) = match self.loss {
            LossKind::Sigmoid => (0u8, None),
            LossKind::Logistic => (1, None),
            LossKind::Focal(fp) => (2, Some(fp)),
        };
        w.write_all(&[code])?;
        w.write_all(&fp.map_or(0.0, |f| f.gamma).to_le_bytes())?;
        w.write_all(&fp.map_or(0.0, |f| f.clamp_eps).to_le_bytes())?;
        for v in self.params.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Snapshot> {
        if &read_array::<8>(r)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let n_dims = u32::from_le_bytes(read_array(r)?) as usize;
        if !(2..=64).contains(&n_dims) {
            return Err(Error::Snapshot(format!("{n_dims} layer widths")));
        }
        let dims = (0..n_dims)
            .map(|_| Ok(u32::from_le_bytes(read_array(r)?) as usize))
            .collect::<Result<Vec<_>>>()?;
        let seed = u64::from_le_bytes(read_array(r)?);
        let [est] = read_array::<1>(r)?;
        let estimator = Estimator::from_code(est).ok_or_else(|| Error::Snapshot(format!("estimator code {est}")))?;
        let [loss_code] = read_array::<1>(r)?;
        let gamma = f64::from_le_bytes(read_array(r)?);
        let clamp_eps = f64::from_le_bytes(read_array(r)?);
        let loss = match loss_code {
            0 => LossKind::Sigmoid,
            1 => LossKind::Logistic,
            2 => LossKind::Focal(FocalParams { gamma, clamp_eps }),
            c => return Err(Error::Snapshot(format!("loss code {c}"))),
        };
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let weights = Array2::from_shape_vec((fan_out, fan_in), read_f64s(r, fan_in * fan_out)?)
                    .expect("length matches shape");
                let bias = Array1::from(read_f64s(r, fan_out)?);
                Ok(Dense { weights, bias })
            })
            .collect::<Result<Vec<_>>>()?;
        let params = ScorerParams::from_layers(layers).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(Snapshot {
            params,
            seed,
            estimator,
            loss,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Snapshot> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Snapshot::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_scorer;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(d in 1usize..6, h in 1usize..9, seed in any::<u64>(), gamma in 0.0f64..6.0, kind in 0u8..3) {
            let mut params = init_scorer(d, h, seed).unwrap();
            params.values_mut().enumerate().for_each(|(i, v)| *v += (i as f64).sin() * 1e-3);
            let loss = match kind {
                0 => LossKind::Sigmoid,
                1 => LossKind::Logistic,
                _ => LossKind::focal(gamma),
            };
            let snap = Snapshot { params, seed, estimator: Estimator::from_code(kind).unwrap(), loss };
            let mut buf = Vec::new();
            snap.write_to(&mut buf).unwrap();
            let back = Snapshot::read_from(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &snap);
            let bits = |s: &Snapshot| s.params.values().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&snap));
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(Snapshot::read_from(&mut &b"NOTAMODEL"[..]).is_err());
        let snap = Snapshot {
            params: init_scorer(2, 3, 1).unwrap(),
            seed: 1,
            estimator: Estimator::Ifpu,
            loss: LossKind::focal(3.0),
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(Snapshot::read_from(&mut buf.as_slice()), Err(Error::Snapshot(_))));
    }
}
