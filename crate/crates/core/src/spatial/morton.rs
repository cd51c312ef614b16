//! Z-order (Morton) surrogate keys over a quantized bounding frame.

use super::{QueryPoint, SpatialError};

pub const DEFAULT_BITS: u32 = 10;
pub const MAX_BITS: u32 = 21;

/// Bit-interleaved grid cell index: x bit `i` at position `3i`, y at
/// `3i+1`, z at `3i+2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonKey {
    pub code: u64,
    pub bits: u32,
}

fn spread(v: u32) -> u64 {
    let mut x = u64::from(v) & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

fn compact(v: u64) -> u32 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x | x >> 2) & 0x10c3_0c30_c30c_30c3;
    x = (x | x >> 4) & 0x100f_00f0_0f00_f00f;
    x = (x | x >> 8) & 0x001f_0000_ff00_00ff;
    x = (x | x >> 16) & 0x001f_0000_0000_ffff;
    x = (x | x >> 32) & 0x1f_ffff;
    x as u32
}

impl MortonKey {
    pub fn from_indices(idx: [u32; 3], bits: u32) -> Result<Self, SpatialError> {
        if bits == 0 || bits > MAX_BITS {
            return Err(SpatialError::InvalidBits(bits));
        }
        let mask = (1u32 << bits) - 1;
        let code = spread(idx[0] & mask) | spread(idx[1] & mask) << 1 | spread(idx[2] & mask) << 2;
        Ok(Self { code, bits })
    }

    pub fn indices(&self) -> [u32; 3] {
        [compact(self.code), compact(self.code >> 1), compact(self.code >> 2)]
    }

    /// Top `3·level` bits: the octant containing the cell at that depth.
    pub fn prefix(&self, level: u32) -> u64 {
        let level = level.min(self.bits);
        self.code >> (3 * (self.bits - level))
    }

    pub fn same_octant(&self, other: &MortonKey, level: u32) -> bool {
        self.bits == other.bits && self.prefix(level) == other.prefix(level)
    }
}

/// Quantization frame: a box split into `2^bits` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MortonGrid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub bits: u32,
}

impl MortonGrid {
    pub fn new(lo: [f64; 3], hi: [f64; 3], bits: u32) -> Result<Self, SpatialError> {
        if bits == 0 || bits > MAX_BITS {
            return Err(SpatialError::InvalidBits(bits));
        }
        Ok(Self { lo, hi, bits })
    }

    /// Frame around `[lo, hi]` grown by one cell width (1/2^bits of the
    /// extent) on every side, so points on the model boundary stay inside.
    pub fn covering(lo: [f64; 3], hi: [f64; 3], bits: u32) -> Result<Self, SpatialError> {
        let mut glo = lo;
        let mut ghi = hi;
        let cells = f64::from(1u32 << bits.min(MAX_BITS));
        for a in 0..3 {
            let extent = (hi[a] - lo[a]).max(f64::MIN_POSITIVE);
            let pad = extent / cells;
            glo[a] -= pad;
            ghi[a] += pad;
        }
        Self::new(glo, ghi, bits)
    }

    pub fn resolution(&self) -> u32 {
        1 << self.bits
    }

    /// Grid cell containing `p`; the upper face maps to the last cell.
    pub fn cell_of(&self, p: QueryPoint) -> Result<[u32; 3], SpatialError> {
        let c = p.coords();
        if !p.is_finite() {
            return Err(SpatialError::NonFinitePoint);
        }
        let n = self.resolution();
        let mut out = [0u32; 3];
        for a in 0..3 {
            if c[a] < self.lo[a] || c[a] > self.hi[a] {
                return Err(SpatialError::OutOfFrame(p.x, p.y, p.z));
            }
            let t = (c[a] - self.lo[a]) / (self.hi[a] - self.lo[a]);
            out[a] = ((t * f64::from(n)) as u32).min(n - 1);
        }
        Ok(out)
    }

    pub fn encode(&self, p: QueryPoint) -> Result<MortonKey, SpatialError> {
        MortonKey::from_indices(self.cell_of(p)?, self.bits)
    }

    pub fn decode(&self, k: MortonKey) -> [u32; 3] {
        k.indices()
    }

    /// Lower corner of a grid cell in model coordinates.
    pub fn cell_origin(&self, idx: [u32; 3]) -> [f64; 3] {
        let n = f64::from(self.resolution());
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = self.lo[a] + (self.hi[a] - self.lo[a]) * f64::from(idx[a]) / n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Oracle: interleave one bit at a time.
    fn interleave_slow(idx: [u32; 3], bits: u32) -> u64 {
        let mut code = 0u64;
        for i in 0..bits {
            for (axis, v) in idx.iter().enumerate() {
                code |= u64::from(v >> i & 1) << (3 * i + axis as u32);
            }
        }
        code
    }

    #[test]
    fn unit_indices() {
        let k = |i| MortonKey::from_indices(i, 1).unwrap().code;
        assert_eq!(k([0, 0, 0]), 0);
        assert_eq!(k([1, 0, 0]), 1);
        assert_eq!(k([0, 1, 0]), 2);
        assert_eq!(k([0, 0, 1]), 4);
        assert_eq!(k([1, 1, 1]), 7);
    }

    #[test]
    fn exhaustive_roundtrip_at_five_bits() {
        for x in 0..32 {
            for y in 0..32 {
                for z in 0..32 {
                    let k = MortonKey::from_indices([x, y, z], 5).unwrap();
                    assert_eq!(k.code, interleave_slow([x, y, z], 5));
                    assert_eq!(k.indices(), [x, y, z]);
                }
            }
        }
    }

    #[test]
    fn frame_edges() {
        let g = MortonGrid::covering([0.0; 3], [1.0; 3], 4).unwrap();
        assert!(g.encode(QueryPoint::new(1.0, 1.0, 1.0)).is_ok());
        assert!(g.encode(QueryPoint::new(0.0, 0.0, 0.0)).is_ok());
        assert_eq!(g.encode(QueryPoint::new(2.0, 0.0, 0.0)), Err(SpatialError::OutOfFrame(2.0, 0.0, 0.0)));
        assert_eq!(g.cell_of(QueryPoint::new(g.hi[0], g.hi[1], g.hi[2])).unwrap(), [15; 3]);
        assert_eq!(MortonGrid::new([0.0; 3], [1.0; 3], 22), Err(SpatialError::InvalidBits(22)));
    }

    proptest! {
        #[test]
        fn roundtrip_ten_bits(x in 0u32..1024, y in 0u32..1024, z in 0u32..1024) {
            let k = MortonKey::from_indices([x, y, z], DEFAULT_BITS).unwrap();
            prop_assert_eq!(k.code, interleave_slow([x, y, z], DEFAULT_BITS));
            prop_assert_eq!(k.indices(), [x, y, z]);
        }

        #[test]
        fn prefix_iff_same_octant(a in prop::array::uniform3(0u32..1024), b in prop::array::uniform3(0u32..1024), level in 0u32..=10) {
            let ka = MortonKey::from_indices(a, 10).unwrap();
            let kb = MortonKey::from_indices(b, 10).unwrap();
            let shift = 10 - level;
            let same = (0..3).all(|i| a[i] >> shift == b[i] >> shift);
            prop_assert_eq!(ka.same_octant(&kb, level), same);
        }
    }
}
