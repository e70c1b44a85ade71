use crate::error::{Error, Result};

/// Bits per axis; three axes fill 63 bits of the code.
pub const MORTON_BITS: u32 = 21;
const AXIS_MASK: u64 = (1 << MORTON_BITS) - 1;

/// Octree level plus interleaved cell index `x0 y0 z0 x1 y1 z1 ...` (x in the lowest bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MortonKey {
    pub level: u8,
    pub code: u64,
}

#[inline]
fn split3(v: u64) -> u64 {
    let mut x = v & AXIS_MASK;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn compact3(v: u64) -> u64 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & AXIS_MASK;
    x
}

/// Interleave without range checks; callers guarantee each index is below 2^21.
#[inline]
pub(crate) fn encode_unchecked(cell: [u64; 3]) -> u64 {
    split3(cell[0]) | split3(cell[1]) << 1 | split3(cell[2]) << 2
}

pub fn morton_encode(cell: [i64; 3], level: u8) -> Result<MortonKey> {
    if cell.iter().any(|&c| c < 0 || c > AXIS_MASK as i64) {
        return Err(Error::MortonRange { cell });
    }
    Ok(MortonKey {
        level,
        code: encode_unchecked([cell[0] as u64, cell[1] as u64, cell[2] as u64]),
    })
}

pub fn morton_decode(key: MortonKey) -> [u64; 3] {
    [compact3(key.code), compact3(key.code >> 1), compact3(key.code >> 2)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bit-by-bit reference interleave.
    fn interleave_naive(c: [u64; 3]) -> u64 {
        let mut code = 0;
        for bit in 0..MORTON_BITS {
            for (axis, v) in c.iter().enumerate() {
                code |= ((v >> bit) & 1) << (3 * bit + axis as u32);
            }
        }
        code
    }

    #[test]
    fn small_codes() {
        assert_eq!(morton_encode([0, 0, 0], 0).unwrap().code, 0);
        assert_eq!(morton_encode([1, 1, 1], 0).unwrap().code, 7);
        assert_eq!(morton_encode([1, 0, 0], 0).unwrap().code, 1);
        assert_eq!(morton_encode([0, 1, 0], 0).unwrap().code, 2);
        assert_eq!(morton_encode([0, 0, 1], 0).unwrap().code, 4);
        assert_eq!(morton_encode([2, 0, 0], 0).unwrap().code, 8);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(morton_encode([-1, 0, 0], 0).is_err());
        assert!(morton_encode([0, 1 << 21, 0], 0).is_err());
        assert!(morton_encode([0, 0, (1 << 21) - 1], 0).is_ok());
    }

    proptest! {
        #[test]
        fn round_trip(x in 0i64..(1 << 21), y in 0i64..(1 << 21), z in 0i64..(1 << 21), level in 0u8..8) {
            let key = morton_encode([x, y, z], level).unwrap();
            prop_assert_eq!(morton_decode(key), [x as u64, y as u64, z as u64]);
            prop_assert_eq!(key.code, interleave_naive([x as u64, y as u64, z as u64]));
            prop_assert!(key.code < 1 << 63);
        }
    }
}
