//! Advantage distillation on b-bit blocks.
//!
//! Alice announces `m = x ⊕ (c,…,c)` for a random bit `c`; the block is
//! kept only when Bob's `m ⊕ y` is all zeros or all ones, in which case
//! both keep their first bit. On Bell-diagonal states the procedure acts as
//! a closed-form map on (λ₀..λ₃), implemented by [`ad_transform`].

use crate::bell::{
    bell_from_errors, lambda3_range, privacy_from_lambdas, BellDiagonal, ErrorPair,
};
use crate::error::{Error, Result};
use crate::search::{grid_golden_min, GridGolden};

/// One advantage-distillation round on a pair of blocks.
///
/// Returns `Some((x₁, y₁))` when the block is accepted.
pub fn ad_block_round(x_block: &[bool], y_block: &[bool], c: bool) -> Result<Option<(bool, bool)>> {
    if x_block.len() != y_block.len() {
        return Err(Error::LengthMismatch {
            x: x_block.len(),
            y: y_block.len(),
        });
    }
    if x_block.is_empty() {
        return Err(Error::BlockSize(0));
    }
    let mut pattern = x_block.iter().zip(y_block).map(|(&x, &y)| (x ^ c) ^ y);
    let first = pattern.next().expect("non-empty block");
    if pattern.all(|bit| bit == first) {
        Ok(Some((x_block[0], y_block[0])))
    } else {
        Ok(None)
    }
}

/// Probability that a block of `b` bits passes, `(1-e)^b + e^b`.
pub fn ad_success_probability(e_bit: f64, b: u32) -> Result<f64> {
    if b < 1 {
        return Err(Error::BlockSize(b));
    }
    let e = crate::bell::clamp_probability(e_bit)?;
    Ok(success_unchecked(e, b))
}

#[inline]
fn success_unchecked(e: f64, b: u32) -> f64 {
    let b = b as i32;
    (1.0 - e).powi(b) + e.powi(b)
}

/// Outcome of distilling a Bell-diagonal state with block size `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdResult {
    pub block_size: u32,
    pub p_succ: f64,
    pub state_after: BellDiagonal,
    pub e_bit_after: f64,
}

#[inline]
fn transformed_weights([l0, l1, l2, l3]: [f64; 4], b: u32) -> ([f64; 4], f64) {
    let b = b as i32;
    let even_sum = (l0 + l1).powi(b);
    let even_diff = (l0 - l1).powi(b);
    let odd_sum = (l2 + l3).powi(b);
    let odd_diff = (l2 - l3).powi(b);
    let p = even_sum + odd_sum;
    let den = 2.0 * p;
    (
        [
            (even_sum + even_diff) / den,
            (even_sum - even_diff) / den,
            (odd_sum + odd_diff) / den,
            (odd_sum - odd_diff) / den,
        ],
        p,
    )
}

/// Bell-diagonal image of `state` after advantage distillation with block
/// size `b`. `b = 1` is the identity.
pub fn ad_transform(state: &BellDiagonal, b: u32) -> Result<AdResult> {
    if b < 1 {
        return Err(Error::BlockSize(b));
    }
    if b == 1 {
        return Ok(AdResult {
            block_size: 1,
            p_succ: 1.0,
            state_after: *state,
            e_bit_after: state.e_bit(),
        });
    }
    let (weights, p_succ) = transformed_weights(state.lambdas(), b);
    if !(p_succ > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    // (λ₀−λ₁)^b cancels catastrophically when λ₀≈λ₁; clamp and renormalise.
    let state_after = BellDiagonal::renormalized(weights)?;
    Ok(AdResult {
        block_size: b,
        p_succ,
        state_after,
        e_bit_after: state_after.e_bit(),
    })
}

/// Privacy term of the distilled state for a given λ₃; allocation-free
/// fast path used inside the minimiser.
#[inline]
pub(crate) fn distilled_privacy(err: ErrorPair, lambda3: f64, b: u32) -> f64 {
    let l3 = lambda3;
    let lambdas = [1.0 - err.e_bit - err.e_ph + l3, err.e_ph - l3, err.e_bit - l3, l3];
    let lambdas = lambdas.map(|l| l.max(0.0));
    if b == 1 {
        return privacy_from_lambdas(lambdas);
    }
    let (w, p) = transformed_weights(lambdas, b);
    if !(p > 0.0) {
        return 0.0;
    }
    let w = w.map(|x| x.max(0.0));
    let sum: f64 = w.iter().sum();
    privacy_from_lambdas(w.map(|x| x / sum))
}

/// Worst case (over the eavesdropper's free parameter λ₃) of the privacy
/// term after distillation. Returns `(minimum, argmin λ₃)`.
pub fn worst_case_ad_privacy(err: ErrorPair, b: u32) -> Result<(f64, f64)> {
    worst_case_ad_privacy_with(err, b, GridGolden::default())
}

pub fn worst_case_ad_privacy_with(err: ErrorPair, b: u32, cfg: GridGolden) -> Result<(f64, f64)> {
    if b < 1 {
        return Err(Error::BlockSize(b));
    }
    let range = lambda3_range(err)?;
    Ok(grid_golden_min(
        |l3| distilled_privacy(err, l3, b),
        range.lo,
        range.hi,
        cfg,
    ))
}

/// Convenience: the full distilled state for the given errors and λ₃.
pub fn distill_errors(err: ErrorPair, lambda3: f64, b: u32) -> Result<AdResult> {
    ad_transform(&bell_from_errors(err, lambda3)?, b)
}
