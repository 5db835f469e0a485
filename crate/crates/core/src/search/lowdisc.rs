//! Base-2 radical inverse (van der Corput) points with optional digit
//! scrambling.

use serde::{Deserialize, Serialize};

use crate::rng::Stream;

/// Number of base-2 digits carried by a point.
pub const DIGITS: u32 = 32;

/// Digit scrambling applied to the radical inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scramble {
    None,
    /// Per-depth digit flip: bit `d` of the mask flips digit `d + 1`.
    DigitFlip(u32),
}

impl Scramble {
    /// Draws a random flip mask from `rng`.
    pub fn seeded(rng: &mut Stream) -> Self {
        use rand::RngCore;
        Scramble::DigitFlip(rng.next_u32())
    }
}

/// Radical inverse of `index` in base 2, optionally scrambled.
///
/// Digit `d` (weight `2^-d`) of the result is bit `d - 1` of `index`. The
/// scrambled variant flips digit `d` when bit `d - 1` of the mask is set,
/// which preserves the stratification of every dyadic prefix.
///
/// `index` must be at least 1; index 0 would map to 0.
pub fn van_der_corput(index: u32, scramble: Scramble) -> f64 {
    debug_assert!(index >= 1, "radical inverse is defined for index >= 1");
    let mut digits = index.reverse_bits();
    if let Scramble::DigitFlip(mask) = scramble {
        digits ^= mask.reverse_bits();
    }
    digits as f64 / (1u64 << DIGITS) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: sum of b_i * 2^-(i+1) over the binary digits of n.
    fn radical_inverse_oracle(mut n: u64) -> f64 {
        let mut value = 0.0;
        let mut weight = 0.5;
        while n > 0 {
            if n & 1 == 1 {
                value += weight;
            }
            weight /= 2.0;
            n >>= 1;
        }
        value
    }

    #[test]
    fn first_points() {
        assert_eq!(van_der_corput(1, Scramble::None), 0.5);
        assert_eq!(van_der_corput(2, Scramble::None), 0.25);
        assert_eq!(van_der_corput(3, Scramble::None), 0.75);
        assert_eq!(van_der_corput(4, Scramble::None), 0.125);
    }

    #[test]
    fn matches_digit_sum_oracle() {
        for n in 1..5000u32 {
            assert_eq!(van_der_corput(n, Scramble::None), radical_inverse_oracle(n as u64));
        }
    }

    #[test]
    fn unscrambled_points_lie_in_open_interval() {
        for n in 1..2000u32 {
            let x = van_der_corput(n, Scramble::None);
            assert!(x > 0.0 && x < 1.0);
        }
    }

    #[test]
    fn scrambled_prefixes_stay_stratified() {
        let mut rng = Stream::new(17);
        for _ in 0..10 {
            let s = Scramble::seeded(&mut rng);
            for k in 1..=6u32 {
                let cells = 1usize << k;
                let mut hits = vec![0usize; cells];
                // Indices 0..2^k; index 0 is the all-zero digit string.
                for n in 0..cells as u32 {
                    let digits = n.reverse_bits()
                        ^ match s {
                            Scramble::DigitFlip(m) => m.reverse_bits(),
                            Scramble::None => 0,
                        };
                    let x = digits as f64 / (1u64 << DIGITS) as f64;
                    hits[(x * cells as f64) as usize] += 1;
                }
                assert!(hits.iter().all(|&h| h == 1));
            }
        }
    }

    #[test]
    fn scrambling_is_deterministic() {
        let a = Scramble::seeded(&mut Stream::new(3));
        let b = Scramble::seeded(&mut Stream::new(3));
        assert_eq!(a, b);
        assert_eq!(van_der_corput(5, a), van_der_corput(5, b));
    }
}
