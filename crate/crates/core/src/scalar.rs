//! Numeric abstractions the analyses are generic over.
//!
//! [`Scalar`] is the field distances and fitness scores are computed in
//! (`f64` during campaigns, `BigRational` for exact checks). [`UnsignedWord`]
//! is the fixed-width wrapping integer domain interval sets range over
//! (`U256` for storage values, narrow widths for exhaustive testing).

use std::fmt::Debug;
use std::hash::Hash;

use num_traits::{
    Bounded, CheckedAdd, CheckedSub, FromPrimitive, Num, One, ToPrimitive, WrappingAdd,
    WrappingNeg, WrappingSub, Zero,
};
use ruint::aliases::U256;

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("scalar type represents small integers")
    }

    /// Exact ratio `num / den`.
    ///
    /// # Panics
    /// If `den` is zero.
    fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_count(num) / Self::from_count(den)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}

pub trait UnsignedWord:
    Copy
    + Ord
    + Hash
    + Debug
    + Bounded
    + Zero
    + One
    + WrappingAdd
    + WrappingSub
    + WrappingNeg
    + CheckedAdd
    + CheckedSub
    + Send
    + Sync
    + 'static
{
    const BITS: u32;

    /// The most negative two's-complement value, `1 << (BITS - 1)`.
    fn sign_bit() -> Self;

    fn half(self) -> Self;

    /// `ceil(log2(self + 1))`, i.e. the bit length.
    fn bit_len(self) -> u32;
}

macro_rules! impl_primitive_word {
    ($($t:ty),*) => {$(
        impl UnsignedWord for $t {
            const BITS: u32 = <$t>::BITS;
            fn sign_bit() -> Self {
                1 << (<$t>::BITS - 1)
            }
            fn half(self) -> Self {
                self >> 1
            }
            fn bit_len(self) -> u32 {
                <$t>::BITS - self.leading_zeros()
            }
        }
    )*};
}

impl_primitive_word!(u8, u16, u32, u64, u128);

impl UnsignedWord for U256 {
    const BITS: u32 = 256;
    fn sign_bit() -> Self {
        U256::from(1) << 255
    }
    fn half(self) -> Self {
        self >> 1
    }
    fn bit_len(self) -> u32 {
        U256::bit_len(&self) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn exact_and_float_ratios_agree() {
        let r: BigRational = Scalar::ratio(8, 3);
        let f: f64 = Scalar::ratio(8, 3);
        assert!((r.as_f64() - f).abs() < 1e-15);
        assert_eq!(r * BigRational::from_count(3), BigRational::from_count(8));
    }

    #[test]
    fn bit_lengths() {
        assert_eq!(0u8.bit_len(), 0);
        assert_eq!(31u8.bit_len(), 5);
        assert_eq!(32u8.bit_len(), 6);
        assert_eq!(U256::MAX.bit_len(), 256);
        assert_eq!(<u8 as UnsignedWord>::sign_bit(), 0x80);
        assert_eq!(<U256 as UnsignedWord>::sign_bit().bit_len(), 256);
    }
}
