//! Sobol low-discrepancy sequence with Joe-Kuo direction numbers and an
//! optional random digital shift.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{SearchSpace, UnitVector};
use crate::{Error, Result};

const BITS: usize = 32;

/// Maximum supported dimension.
pub const MAX_DIMS: usize = 16;

// (degree s, coefficients a, initial m_1..m_s) for dimensions 2..=16, from
// new-joe-kuo-6.21201. Dimension 1 is the van der Corput sequence.
const JOE_KUO: [(u32, u32, &[u32]); MAX_DIMS - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = JOE_KUO[dim - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for i in 1..s {
            if (a >> (s - 1 - i)) & 1 == 1 {
                x ^= v[k - i];
            }
        }
        v[k] = x;
    }
    v
}

/// How raw sequence points are randomized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scramble {
    None,
    /// XOR every coordinate with a per-dimension random word drawn from the seed.
    DigitalShift(u64),
}

#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidArgument("sobol dimension must be >= 1".into()));
        }
        if dims > MAX_DIMS {
            return Err(Error::TooManyDimensions {
                max: MAX_DIMS,
                got: dims,
            });
        }
        Ok(Self {
            directions: (0..dims).map(direction_numbers).collect(),
        })
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// Raw integer point at `index` in Gray-code order (index 0 is the origin).
    pub fn point_bits(&self, index: u32) -> Vec<u32> {
        let gray = index ^ (index >> 1);
        self.directions
            .iter()
            .map(|v| {
                let mut x = 0u32;
                let mut g = gray;
                while g != 0 {
                    let k = g.trailing_zeros() as usize;
                    x ^= v[k];
                    g &= g - 1;
                }
                x
            })
            .collect()
    }

    /// `count` consecutive points starting at `start`, mapped to `[0, 1)`.
    pub fn points(&self, start: u32, count: usize, scramble: Scramble) -> Result<Vec<Vec<f64>>> {
        let end = start as u64 + count as u64;
        if end > u32::MAX as u64 {
            return Err(Error::InvalidArgument(format!(
                "sobol index range exceeds 2^32 ({end})"
            )));
        }
        let shifts: Vec<u32> = match scramble {
            Scramble::None => vec![0; self.dims()],
            Scramble::DigitalShift(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.dims()).map(|_| rng.next_u32()).collect()
            }
        };
        let scale = 1.0 / (1u64 << BITS) as f64;
        let mut out = Vec::with_capacity(count);
        let mut x = self.point_bits(start);
        for i in 0..count as u32 {
            let index = start + i;
            if i > 0 {
                // x(index) = x(index - 1) ^ v[c], c = trailing ones of index - 1
                let c = (index - 1).trailing_ones() as usize;
                for (xd, v) in x.iter_mut().zip(&self.directions) {
                    *xd ^= v[c];
                }
            }
            out.push(
                x.iter()
                    .zip(&shifts)
                    .map(|(&xd, &s)| (xd ^ s) as f64 * scale)
                    .collect(),
            );
        }
        Ok(out)
    }
}

/// Draws `count` configurations in the unit cube of `space`, skipping the
/// all-zeros point of the raw sequence and applying a seeded digital shift.
pub fn sobol_sample(space: &SearchSpace, count: usize, seed: u64) -> Result<Vec<UnitVector>> {
    sample_unit_cube(space.n(), count, Scramble::DigitalShift(seed))
}

pub fn sample_unit_cube(dims: usize, count: usize, scramble: Scramble) -> Result<Vec<UnitVector>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let sobol = Sobol::new(dims)?;
    Ok(sobol
        .points(1, count, scramble)?
        .into_iter()
        .map(|p| UnitVector::new(p).expect("sobol points lie in [0, 1)"))
        .collect())
}
