//! Small shared helpers: seed derivation, number formatting, RNG construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent sub-seed from a base seed and a textual tag.
///
/// The mapping is platform independent, so seeds for grid cells, trees and
/// features never depend on scheduling.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Sub-seed for the `index`-th item (tree, feature, round) of a stream.
pub fn index_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer over (base, index)
    let mut z = base ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Formats `x` with `digits` significant digits in the style of C's `%g`.
///
/// With `keep_trailing_zeros` the output matches `%#.Ng` (e.g. `2.00000`);
/// otherwise trailing zeros and a dangling decimal point are removed.
pub fn format_significant(x: f64, digits: usize, keep_trailing_zeros: bool) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    // -0 renders as 0 so identical descriptors give identical bytes.
    let x = if x == 0.0 { 0.0 } else { x };

    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent formatting");
    let exp: i32 = exp.parse().expect("integer exponent");

    let mut out = if exp < -4 || exp >= digits as i32 {
        let mantissa = if keep_trailing_zeros {
            mantissa.to_string()
        } else {
            trim_zeros(mantissa)
        };
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let mut fixed = format!("{:.*}", decimals, x);
        if decimals == 0 && keep_trailing_zeros {
            fixed.push('.');
        }
        fixed
    };
    if !keep_trailing_zeros && !out.contains('e') {
        out = trim_zeros(&out);
    }
    out
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
