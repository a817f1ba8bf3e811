//! Homogeneous Poisson and fixed-count point processes on `T^d`.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig17;
use crate::geometry::{TorusPoint, MAX_DIM};

/// Identifies one reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_id: u64) -> Self {
        SeedSpec { master_seed, trial_id }
    }

    /// Seed of this trial's stream, a pure function of `(master_seed, trial_id)`.
    pub fn stream_seed(&self) -> u64 {
        splitmix64(self.master_seed ^ splitmix64(self.trial_id.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed())
    }

    /// A new master seed for an independent family of trials (one per sweep
    /// cell, say), derived from this one and a salt.
    pub fn derive(master_seed: u64, salt: u64) -> u64 {
        splitmix64(master_seed.rotate_left(17) ^ splitmix64(salt))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudMeta {
    /// Intensity `n` of the process (the point count for fixed-count clouds).
    pub n: f64,
    pub seed: u64,
    pub trial_id: u64,
}

/// An immutable finite sample on `T^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<TorusPoint>,
    meta: CloudMeta,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    n: f64,
    seed: u64,
    trial_id: u64,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<TorusPoint>, meta: CloudMeta) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
        }
        Ok(PointCloud { dim, points, meta })
    }

    /// Cloud from raw coordinate rows, wrapped onto the torus.
    pub fn from_coords(dim: usize, coords: &[Vec<f64>]) -> Result<Self> {
        let points = coords.iter().map(|c| TorusPoint::new(c)).collect::<Result<Vec<_>>>()?;
        let meta = CloudMeta { n: points.len() as f64, seed: 0, trial_id: 0 };
        PointCloud::new(dim, points, meta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn meta(&self) -> &CloudMeta {
        &self.meta
    }

    /// The cloud shifted by `v` (used by equivariance tests).
    pub fn translated(&self, v: &[f64]) -> PointCloud {
        PointCloud {
            dim: self.dim,
            points: self.points.iter().map(|p| p.translated(v)).collect(),
            meta: self.meta,
        }
    }

    /// JSONL: a header object, then one coordinate array per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            dim: self.dim,
            n: self.meta.n,
            seed: self.meta.seed,
            trial_id: self.meta.trial_id,
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for p in &self.points {
            let cells: Vec<String> = p.coords().iter().map(|&c| sig17(c)).collect();
            writeln!(w, "[{}]", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(Error::Parse("missing cloud header".into())),
        };
        let mut points = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let coords: Vec<f64> = serde_json::from_str(&line)?;
            if coords.len() != header.dim {
                return Err(Error::DimensionMismatch { expected: header.dim, found: coords.len() });
            }
            points.push(TorusPoint::new(&coords)?);
        }
        let meta = CloudMeta { n: header.n, seed: header.seed, trial_id: header.trial_id };
        PointCloud::new(header.dim, points, meta)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

fn uniform_points(rng: &mut impl Rng, count: usize, d: usize) -> Vec<TorusPoint> {
    let mut raw = [0.0; MAX_DIM];
    (0..count)
        .map(|_| {
            for c in raw.iter_mut().take(d) {
                *c = rng.random::<f64>();
            }
            TorusPoint::from_raw(raw, d)
        })
        .collect()
}

/// Homogeneous Poisson process of intensity `n` on the unit-volume torus.
pub fn sample_poisson(n: f64, d: usize, seed: SeedSpec) -> Result<PointCloud> {
    check_dim(d)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::config(format!("intensity must be positive, got {n}")));
    }
    let mut rng = seed.rng();
    let count = Poisson::new(n)
        .map_err(|e| Error::config(e.to_string()))?
        .sample(&mut rng) as usize;
    let points = uniform_points(&mut rng, count, d);
    PointCloud::new(d, points, CloudMeta { n, seed: seed.master_seed, trial_id: seed.trial_id })
}

/// Binomial process: exactly `count` i.i.d. uniform points.
pub fn sample_fixed(count: usize, d: usize, seed: SeedSpec) -> Result<PointCloud> {
    check_dim(d)?;
    let mut rng = seed.rng();
    let points = uniform_points(&mut rng, count, d);
    PointCloud::new(
        d,
        points,
        CloudMeta { n: count as f64, seed: seed.master_seed, trial_id: seed.trial_id },
    )
}
