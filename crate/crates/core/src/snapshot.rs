//! Little-endian binary snapshots of grid functions.
//!
//! Layout: magic `NLKG`, version `u32`, dim `u32`, n `u32`, L `f64`,
//! m `f64`, λ `f64`, kind `u8`, then row-major `f64` samples. Kind 1 stores
//! all of φ followed by all of π; kind 2 interleaves `re, im`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexProfile, PhaseSpacePoint, RealField};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"NLKG";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Real(RealField),
    Phase(PhaseSpacePoint),
    Complex(ComplexProfile),
}

impl Snapshot {
    pub fn kind(&self) -> u8 {
        match self {
            Snapshot::Real(_) => 0,
            Snapshot::Phase(_) => 1,
            Snapshot::Complex(_) => 2,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Snapshot::Real(f) => f.grid(),
            Snapshot::Phase(d) => d.grid(),
            Snapshot::Complex(z) => z.grid(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let g = self.grid();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(g.dim() as u32).to_le_bytes())?;
        w.write_all(&(g.n() as u32).to_le_bytes())?;
        w.write_all(&g.box_length().to_le_bytes())?;
        w.write_all(&g.mass().to_le_bytes())?;
        w.write_all(&g.coupling().to_le_bytes())?;
        w.write_all(&[self.kind()])?;
        let mut buf = Vec::with_capacity(8 * 2 * g.len());
        match self {
            Snapshot::Real(f) => f.values().iter().for_each(|v| buf.extend(v.to_le_bytes())),
            Snapshot::Phase(d) => d
                .phi
                .values()
                .iter()
                .chain(d.pi.values())
                .for_each(|v| buf.extend(v.to_le_bytes())),
            Snapshot::Complex(z) => z.values().iter().for_each(|c| {
                buf.extend(c.re.to_le_bytes());
                buf.extend(c.im.to_le_bytes());
            }),
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Snapshot> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let box_length = read_f64(&mut r)?;
        let mass = read_f64(&mut r)?;
        let coupling = read_f64(&mut r)?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let grid = Grid::new(dim, n, box_length, mass, coupling)?;
        let len = grid.len();
        let count = match kind[0] {
            0 => len,
            1 | 2 => 2 * len,
            k => return Err(Error::Format(format!("unknown kind {k}"))),
        };
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes)?;
        let samples: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(match kind[0] {
            0 => Snapshot::Real(RealField::new(&grid, samples)?),
            1 => {
                let pi = samples[len..].to_vec();
                let mut phi = samples;
                phi.truncate(len);
                Snapshot::Phase(PhaseSpacePoint::new(
                    RealField::new(&grid, phi)?,
                    RealField::new(&grid, pi)?,
                )?)
            }
            _ => Snapshot::Complex(ComplexProfile::new(
                &grid,
                samples.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
            )?),
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Snapshot> {
        let file = std::fs::File::open(path)?;
        Snapshot::read_from(std::io::BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let g = Grid::new(1, 8, 2.0, 1.0, 0.5).unwrap();
        let snap = Snapshot::Real(RealField::from_fn(&g, |x| x[0]));
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"NLKG");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2.0);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.5);
        assert_eq!(bytes[40], 0);
        assert_eq!(bytes.len(), 41 + 8 * 8);
        // First sample is x = 0.
        assert_eq!(f64::from_le_bytes(bytes[41..49].try_into().unwrap()), 0.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            Snapshot::read_from(&b"XXXX\x01\x00\x00\x00"[..]),
            Err(Error::Format(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip(seed in proptest::collection::vec(-1e3f64..1e3, 32), kind in 0u8..3) {
            let g = Grid::new(2, 8, 3.0, 0.7, 0.1).unwrap();
            let vals: Vec<f64> = (0..g.len()).map(|i| seed[i % 32] * (i as f64 + 1.0)).collect();
            let f = RealField::new(&g, vals.clone()).unwrap();
            let snap = match kind {
                0 => Snapshot::Real(f),
                1 => Snapshot::Phase(PhaseSpacePoint::new(f.clone(), f.scaled(-0.5)).unwrap()),
                _ => Snapshot::Complex(ComplexProfile::from_parts(&f, &f.scaled(2.0)).unwrap()),
            };
            let mut bytes = Vec::new();
            snap.write_to(&mut bytes).unwrap();
            let back = Snapshot::read_from(&bytes[..]).unwrap();
            prop_assert_eq!(back, snap);
        }
    }
}
