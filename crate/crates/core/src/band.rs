//! Time steps and band values.
//!
//! A stream is cut into chunks of `ell` units of weight; the time step `t`
//! counts completed chunks. An element inserted at step `t0` carries a band
//! value that grows roughly like `log2(t - t0)` and is promoted only when `t`
//! is a multiple of `2^v`.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("insertion time {t0} is after current time {t}")]
pub struct ClockError {
    pub t0: u64,
    pub t: u64,
}

/// Number of completed chunks after `total_weight` units of weight.
pub fn current_time(total_weight: u64, ell: u64) -> u64 {
    total_weight / ell
}

/// Time step assigned to an item arriving after `weight_before` units.
pub fn insertion_time(weight_before: u64, ell: u64) -> u64 {
    (weight_before + 1) / ell
}

/// Band value of an element inserted at `t0`, observed at `t`.
///
/// Constant time: only two candidate values of `alpha` can satisfy
/// `2^(a-1) + (t mod 2^(a-1)) <= t - t0 < 2^a + (t mod 2^a)`.
pub fn band_value(t0: u64, t: u64) -> Result<u32, ClockError> {
    if t0 > t {
        return Err(ClockError { t0, t });
    }
    Ok(band_unchecked(t0, t))
}

pub(crate) fn band_unchecked(t0: u64, t: u64) -> u32 {
    debug_assert!(t0 <= t);
    let d = t - t0;
    if d == 0 {
        return 0;
    }
    let lg = 63 - d.leading_zeros();
    let (d, t) = (d as u128, t as u128);
    for alpha in [lg, lg + 1] {
        if alpha == 0 {
            continue;
        }
        let lo_pow = 1u128 << (alpha - 1);
        let hi_pow = 1u128 << alpha;
        if lo_pow + (t % lo_pow) <= d && d < hi_pow + (t % hi_pow) {
            return alpha;
        }
    }
    unreachable!("band interval search failed for d={d}, t={t}")
}

/// Step-by-step simulation of the promotion rule. Reference for [`band_value`].
pub fn band_value_iterative(t0: u64, t: u64) -> Result<u32, ClockError> {
    if t0 > t {
        return Err(ClockError { t0, t });
    }
    let mut v = 0u32;
    for tau in t0 + 1..=t {
        if v >= 64 || tau % (1u64 << v) == 0 {
            v += 1;
        }
    }
    Ok(v)
}

/// Largest band value any element can hold at time `t`.
pub fn max_band(t: u64) -> u32 {
    if t == 0 {
        0
    } else {
        64 - t.leading_zeros()
    }
}
