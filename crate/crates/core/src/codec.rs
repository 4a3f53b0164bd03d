//! Bit-level encodings shared by both channels.

use crate::error::{Error, Result};
use crate::model::{Decimal, WatermarkBits};

/// Outcome of reading one watermark position from one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelBit {
    Zero,
    One,
    /// No usable evidence: no carriers, a tied vote, or a key mismatch.
    Erased,
}

impl ChannelBit {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            ChannelBit::Zero => Some(false),
            ChannelBit::One => Some(true),
            ChannelBit::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        self == ChannelBit::Erased
    }

    /// True only for a definite bit equal to `bit`.
    pub fn matches(self, bit: bool) -> bool {
        self.as_bool() == Some(bit)
    }
}

impl From<bool> for ChannelBit {
    fn from(b: bool) -> Self {
        if b {
            ChannelBit::One
        } else {
            ChannelBit::Zero
        }
    }
}

/// Flattens a raster row-major.
pub fn image_to_bits(rows: &[Vec<bool>]) -> Result<WatermarkBits> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(Error::EmptyWatermark);
    }
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::RaggedRaster);
    }
    WatermarkBits::new(width, height, rows.concat())
}

pub fn bits_to_image(bits: &[bool], width: usize, height: usize) -> Result<Vec<Vec<bool>>> {
    let wm = WatermarkBits::new(width, height, bits.to_vec())?;
    Ok(wm.bits().chunks(width).map(<[bool]>::to_vec).collect())
}

impl WatermarkBits {
    pub fn to_image(&self) -> Vec<Vec<bool>> {
        self.bits().chunks(self.width()).map(<[bool]>::to_vec).collect()
    }
}

/// Watermark position carried by a selected tuple.
///
/// Depends on the key alone, so inserting or removing other tuples never
/// moves a tuple's bit.
pub fn bit_index(pk_int: u64, k1: u8, len: usize) -> usize {
    debug_assert!(k1 >= 1 && len >= 1);
    ((pk_int / u64::from(k1)) % len as u64) as usize
}

/// Seconds value for a channel-2 carrier: `k2` in the high four bits, the
/// watermark bit in the LSB.
pub fn encode_ss(bit: bool, k2: u8) -> u8 {
    debug_assert!(k2 <= 15);
    k2 * 2 + u8::from(bit)
}

/// Inverse of [`encode_ss`]; any seconds value whose high part is not `k2`
/// reads as erased.
pub fn decode_ss(ss: u8, k2: u8) -> ChannelBit {
    if ss / 2 == k2 {
        ChannelBit::from(ss % 2 == 1)
    } else {
        ChannelBit::Erased
    }
}

fn scaled_magnitude(value: f64, scale: u32) -> Result<(f64, f64)> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    let factor = 10f64.powi(scale as i32);
    let x = value.abs() * factor;
    // beyond 2^53 consecutive integers are no longer representable
    if x.round() > 9_007_199_254_740_992.0 {
        return Err(Error::OutOfRange { value, scale });
    }
    Ok((x, factor))
}

/// Replaces the lowest bit of `round(|value| * 10^scale)`.
///
/// On-grid values get the plain bit replacement. For values between grid
/// points the odd/even neighbour nearest to the exact scaled value is used,
/// which keeps the change within one unit at `scale`.
pub fn set_lsb(value: f64, scale: u32, bit: bool) -> Result<f64> {
    let (x, factor) = scaled_magnitude(value, scale)?;
    let m = x.round();
    let want = f64::from(u8::from(bit));
    let marked = if m % 2.0 == want {
        m
    } else {
        let literal = if bit { m + 1.0 } else { m - 1.0 };
        let other = if bit { m - 1.0 } else { m + 1.0 };
        if (literal - x).abs() <= 1.0 || other < 0.0 {
            literal
        } else {
            other
        }
    };
    let out = marked / factor;
    Ok(if value.is_sign_negative() { -out } else { out })
}

pub fn get_lsb(value: f64, scale: u32) -> Result<bool> {
    let (x, _) = scaled_magnitude(value, scale)?;
    Ok(x.round() % 2.0 == 1.0)
}

/// Scaled-integer counterparts used on table cells.
impl Decimal {
    pub fn lsb(&self) -> bool {
        self.units & 1 == 1
    }

    pub fn with_lsb(self, bit: bool) -> Decimal {
        Decimal {
            units: (self.units & !1) | u64::from(bit),
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raster_examples() {
        let wm = image_to_bits(&[vec![true]]).unwrap();
        assert_eq!((wm.bits(), wm.len()), (&[true][..], 1));
        let wm = image_to_bits(&[vec![true, false], vec![false, true]]).unwrap();
        assert_eq!(wm.bits(), &[true, false, false, true]);
        assert_eq!(bits_to_image(&[true, false], 2, 1).unwrap(), vec![vec![true, false]]);
        assert_eq!(bits_to_image(&[true], 1, 1).unwrap(), vec![vec![true]]);
    }

    #[test]
    fn raster_errors() {
        assert!(matches!(image_to_bits(&[]), Err(Error::EmptyWatermark)));
        assert!(matches!(image_to_bits(&[vec![]]), Err(Error::EmptyWatermark)));
        assert!(matches!(
            image_to_bits(&[vec![true, false], vec![true]]),
            Err(Error::RaggedRaster)
        ));
        assert!(bits_to_image(&[true, false, true], 2, 2).is_err());
    }

    #[test]
    fn bit_index_examples() {
        assert_eq!(bit_index(10, 5, 4), 2);
        assert_eq!(bit_index(0, 5, 4), 0);
        let mut counts = [0; 4];
        for pk in (0..=75).step_by(5) {
            counts[bit_index(pk, 5, 4)] += 1;
        }
        assert_eq!(counts, [4, 4, 4, 4]);
    }

    #[test]
    fn ss_examples() {
        assert_eq!(encode_ss(true, 10), 21);
        assert_eq!(encode_ss(false, 0), 0);
        assert_eq!(decode_ss(21, 10), ChannelBit::One);
        assert_eq!(decode_ss(20, 10), ChannelBit::Zero);
        assert_eq!(decode_ss(59, 10), ChannelBit::Erased);
    }

    #[test]
    fn ss_exhaustive() {
        for k2 in 0..=15u8 {
            for bit in [false, true] {
                let ss = encode_ss(bit, k2);
                assert!(ss <= 31);
                assert!(decode_ss(ss, k2).matches(bit));
                for wrong in (0..=15u8).filter(|&w| w != k2) {
                    assert_eq!(decode_ss(ss, wrong), ChannelBit::Erased);
                }
            }
        }
    }

    #[test]
    fn lsb_examples() {
        assert_eq!(set_lsb(12.0, 0, true).unwrap(), 13.0);
        assert_eq!(set_lsb(12.0, 0, false).unwrap(), 12.0);
        assert!((set_lsb(2.14, 2, true).unwrap() - 2.15).abs() < 1e-12);
        assert!(get_lsb(13.0, 0).unwrap());
        assert!(get_lsb(3.15, 2).unwrap());
        assert_eq!(set_lsb(-12.0, 0, true).unwrap(), -13.0);
        assert_eq!(set_lsb(13.0, 0, false).unwrap(), 12.0);
    }

    #[test]
    fn lsb_off_grid_stays_within_one_unit() {
        // round(11.6) = 12; plain replacement would give 13 (1.4 away)
        assert_eq!(set_lsb(11.6, 0, true).unwrap(), 11.0);
        assert_eq!(set_lsb(12.6, 0, false).unwrap(), 12.0);
        assert_eq!(set_lsb(0.2, 0, true).unwrap(), 1.0);
    }

    #[test]
    fn lsb_errors() {
        assert!(matches!(set_lsb(f64::NAN, 0, true), Err(Error::NonFinite(_))));
        assert!(matches!(get_lsb(f64::INFINITY, 0), Err(Error::NonFinite(_))));
        assert!(matches!(set_lsb(1e300, 0, true), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn decimal_lsb() {
        let d = Decimal::new(false, 314, 2);
        assert!(!d.lsb());
        assert_eq!(d.with_lsb(true).units, 315);
        assert_eq!(Decimal::new(true, 13, 0).with_lsb(false), Decimal::new(true, 12, 0));
    }
}
