use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of each side trimmed off the box before sampling.
pub const SAMPLE_SHRINK: f64 = 0.05;
/// Minimum distance kept from excluded hyperplanes.
pub const EXCLUSION_MARGIN: f64 = 1e-3;

/// A coordinate hyperplane `x[coord] = value` removed from the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub coord: usize,
    pub value: f64,
}

/// Open coordinate box minus a finite set of hyperplanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    bounds: Vec<(f64, f64)>,
    excluded: Vec<Hyperplane>,
}

impl ChartDomain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Dimension("chart of dimension zero".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Invalid(format!("empty interval ({lo}, {hi}) for coordinate {i}")));
            }
        }
        Ok(Self { bounds, excluded: Vec::new() })
    }

    /// The whole of R^dim.
    pub fn unbounded(dim: usize) -> Self {
        Self { bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim], excluded: Vec::new() }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    pub fn excluding(mut self, coord: usize, value: f64) -> Result<Self> {
        if coord >= self.dim() {
            return Err(Error::Dimension(format!("excluded coordinate {coord} in a {}-chart", self.dim())));
        }
        self.excluded.push(Hyperplane { coord, value });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn excluded(&self) -> &[Hyperplane] {
        &self.excluded
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| v > lo && v < hi)
            && self.excluded.iter().all(|h| x[h.coord] != h.value)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// `true` when the closed box `region` lies inside the domain.
    pub fn contains_region(&self, region: &[(f64, f64)]) -> bool {
        region.len() == self.dim()
            && region
                .iter()
                .zip(&self.bounds)
                .all(|(&(a, b), &(lo, hi))| a >= lo && b <= hi && a < b)
            && self
                .excluded
                .iter()
                .all(|h| !(region[h.coord].0 <= h.value && h.value <= region[h.coord].1))
    }

    /// Deterministic low-discrepancy points inside the box shrunk by
    /// [`SAMPLE_SHRINK`] per side, away from excluded hyperplanes.
    ///
    /// Uses a Halton sequence with a seeded Cranley-Patterson shift.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let dim = self.dim();
        if dim > PRIMES.len() {
            return Err(Error::Dimension(format!("sampling supports at most {} coordinates", PRIMES.len())));
        }
        let mut inner = Vec::with_capacity(dim);
        for &(lo, hi) in &self.bounds {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Invalid("cannot sample an unbounded chart".into()));
            }
            let pad = SAMPLE_SHRINK * (hi - lo);
            inner.push((lo + pad, hi - pad));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();

        let mut points = Vec::with_capacity(count);
        let mut index = 1u64;
        let limit = 1000 * (count as u64 + 1);
        while points.len() < count {
            if index > limit {
                return Err(Error::Invalid("excluded loci leave no room for sample points".into()));
            }
            let p: Vec<f64> = (0..dim)
                .map(|k| {
                    let u = (radical_inverse(index, PRIMES[k]) + shift[k]).fract();
                    inner[k].0 + u * (inner[k].1 - inner[k].0)
                })
                .collect();
            index += 1;
            if self
                .excluded
                .iter()
                .all(|h| (p[h.coord] - h.value).abs() > EXCLUSION_MARGIN)
            {
                points.push(p);
            }
        }
        Ok(points)
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}
