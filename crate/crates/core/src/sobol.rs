//! Sobol' sequence from the Joe–Kuo `new-joe-kuo-6` direction numbers.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const BITS: usize = 32;
const TABLE: &str = include_str!("../data/new-joe-kuo-6.1000.txt");

/// Direction numbers for dimensions `1..=MAX_DIM`, each as 32 left-aligned
/// integers.
struct Directions {
    v: Vec<[u32; BITS]>,
}

fn directions() -> &'static Directions {
    static DIRS: OnceLock<Directions> = OnceLock::new();
    DIRS.get_or_init(|| {
        let mut v = Vec::with_capacity(1000);
        // first dimension is the van der Corput sequence
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1u32 << (BITS - 1 - k);
        }
        v.push(first);
        for line in TABLE.lines().skip(1) {
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|f| f.parse().expect("direction table is well formed"))
                .collect();
            if fields.len() < 3 {
                continue;
            }
            let s = fields[1] as usize;
            let a = fields[2];
            let m = &fields[3..3 + s];
            let mut dir = [0u32; BITS];
            for k in 0..BITS {
                dir[k] = if k < s {
                    m[k] << (BITS - 1 - k)
                } else {
                    let mut x = dir[k - s] ^ (dir[k - s] >> s);
                    for j in 1..s {
                        if (a >> (s - 1 - j)) & 1 == 1 {
                            x ^= dir[k - j];
                        }
                    }
                    x
                };
            }
            v.push(dir);
        }
        Directions { v }
    })
}

/// Largest dimension supported by the bundled table.
pub fn max_dimension() -> usize {
    directions().v.len()
}

/// Unscrambled 32-bit Sobol' integer for `index` in dimension `dim` (0-based).
#[inline]
pub fn sobol_u32(index: u32, dim: usize) -> u32 {
    let dir = &directions().v[dim];
    let mut x = 0u32;
    let mut i = index;
    let mut k = 0;
    while i != 0 {
        if i & 1 == 1 {
            x ^= dir[k];
        }
        i >>= 1;
        k += 1;
    }
    x
}

/// First `n` points of a `p`-dimensional Sobol' sequence with a digital
/// shift: each coordinate's binary expansion is XOR-ed with `shifts[l]`.
///
/// The 32 Sobol' bits occupy the top of a 64-bit word so the shift also
/// randomizes the low-order bits; values are mapped to `[0,1)` at 53-bit
/// resolution. A zero shift gives the plain sequence.
pub fn shifted_points(n: usize, p: usize, shifts: &[u64]) -> Result<Vec<f64>> {
    if p > max_dimension() {
        return Err(Error::SobolDimension {
            requested: p,
            available: max_dimension(),
        });
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("Sobol' index exceeds 2^32"));
    }
    debug_assert_eq!(shifts.len(), p);
    let scale = 1.0 / (1u64 << 53) as f64;
    let mut out = Vec::with_capacity(n * p);
    for i in 0..n {
        for (l, &shift) in shifts.iter().enumerate() {
            let bits = ((sobol_u32(i as u32, l) as u64) << 32) ^ shift;
            out.push((bits >> 11) as f64 * scale);
        }
    }
    Ok(out)
}
