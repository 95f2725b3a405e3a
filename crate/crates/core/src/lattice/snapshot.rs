//! Binary snapshot of a sample: magic, header fields, then little-endian values.

use std::io::{Read, Write};

use super::{GffSample, FIELD_SCALE};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"TVSGFF01";

impl GffSample {
    /// Writes `n`, `seed`, the field scale, the boundary value, the bridge seed, the node count and
    /// the zero-boundary node values.
    pub fn write_snapshot<W: Write>(&self, mut w: W, seed: u64) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&seed.to_le_bytes())?;
        w.write_all(&FIELD_SCALE.to_le_bytes())?;
        w.write_all(&self.boundary_shift.to_le_bytes())?;
        w.write_all(&self.bridge_seed.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Returns the sample and the seed recorded with it.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Self, u64)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a field snapshot".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let seed = u64::from_le_bytes(next(&mut r)?);
        let scale = f64::from_le_bytes(next(&mut r)?);
        if scale != FIELD_SCALE {
            return Err(Error::Format(format!(
                "snapshot field scale {scale} differs from {FIELD_SCALE}"
            )));
        }
        let boundary_shift = f64::from_le_bytes(next(&mut r)?);
        let bridge_seed = u64::from_le_bytes(next(&mut r)?);
        let count = u64::from_le_bytes(next(&mut r)?) as usize;
        if count > 4 * (n + 1) * (n + 1) {
            return Err(Error::Format(format!("implausible node count {count} for n = {n}")));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(f64::from_le_bytes(next(&mut r)?));
        }
        Ok((
            GffSample {
                n,
                values,
                boundary_shift,
                bridge_seed,
            },
            seed,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::super::LatticeDomain;
    use super::*;
    use crate::rng::task_rng;

    #[test]
    fn round_trip() {
        let d = LatticeDomain::new(32).unwrap();
        let s = d.sample_gff(&mut task_rng(9, 1)).with_boundary_shift(0.25);
        let mut buf = Vec::new();
        s.write_snapshot(&mut buf, 9).unwrap();
        let (back, seed) = GffSample::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(seed, 9);
        assert_eq!(back, s);
        assert!(GffSample::read_snapshot(&buf[1..]).is_err());
    }
}
