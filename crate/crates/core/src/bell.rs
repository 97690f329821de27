//! Bell-diagonal states, binary entropy and the privacy term of the
//! one-way key rate.
//!
//! A Bell-diagonal state is fixed by four probabilities λ₀..λ₃. The bit
//! and phase error rates pin two linear combinations of them
//! (`λ₂+λ₃ = e_bit`, `λ₁+λ₃ = e_ph`), leaving λ₃ as the single free
//! parameter that an eavesdropper may choose.

use crate::error::{Error, Result};

/// Slack allowed on probabilities before they are treated as out of range.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Clamp `x` into [0, 1] when it is within [`PROB_TOLERANCE`] of the range.
pub fn clamp_probability(x: f64) -> Result<f64> {
    if !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    Ok(x.clamp(0.0, 1.0))
}

#[inline]
fn xlog2x(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        x * x.ln() * std::f64::consts::LOG2_E
    }
}

/// Shannon binary entropy in bits, `H(x) = -x log₂x - (1-x) log₂(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    let x = clamp_probability(x)?;
    Ok(entropy_unchecked(x))
}

/// Binary entropy for arguments already known to lie in [0, 1]; values
/// marginally outside are clamped.
#[inline]
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    -xlog2x(x) - xlog2x(1.0 - x)
}

/// Observed bit and phase error rates of one key stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub e_bit: f64,
    pub e_ph: f64,
}

impl ErrorPair {
    pub fn new(e_bit: f64, e_ph: f64) -> Result<Self> {
        Ok(Self {
            e_bit: clamp_probability(e_bit)?,
            e_ph: clamp_probability(e_ph)?,
        })
    }

    /// True when some Bell-diagonal state reproduces these error rates.
    pub fn is_feasible(&self) -> bool {
        self.e_bit + self.e_ph <= 1.0 + self.e_bit.min(self.e_ph) + PROB_TOLERANCE
    }
}

/// Closed interval of admissible λ₃ values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - PROB_TOLERANCE && x <= self.hi + PROB_TOLERANCE
    }
}

/// The λ₃ values for which [`bell_from_errors`] yields a valid state.
pub fn lambda3_range(err: ErrorPair) -> Result<Interval> {
    let lo = (err.e_bit + err.e_ph - 1.0).max(0.0);
    let hi = err.e_bit.min(err.e_ph);
    if lo > hi + PROB_TOLERANCE {
        return Err(Error::Infeasible {
            e_bit: err.e_bit,
            e_ph: err.e_ph,
        });
    }
    Ok(Interval { lo, hi: hi.max(lo) })
}

/// Probabilities of the four Bell states |Φ₀⟩..|Φ₃⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonal {
    lambda: [f64; 4],
}

impl BellDiagonal {
    /// Validates non-negativity and normalisation (within 1e-12). Tiny
    /// negative round-off is clamped to zero.
    pub fn new(lambda0: f64, lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let raw = [lambda0, lambda1, lambda2, lambda3];
        let mut lambda = [0.0; 4];
        for (dst, &v) in lambda.iter_mut().zip(&raw) {
            if v.is_nan() || v < -PROB_TOLERANCE {
                return Err(Error::InvalidState(format!("negative entry in {raw:?}")));
            }
            *dst = v.max(0.0);
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "entries of {raw:?} sum to {sum}"
            )));
        }
        Ok(Self { lambda })
    }

    /// Builds a state from arbitrary non-negative weights by clamping
    /// negatives to zero and renormalising.
    pub(crate) fn renormalized(weights: [f64; 4]) -> Result<Self> {
        let clamped = weights.map(|w| w.max(0.0));
        let sum: f64 = clamped.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidState(format!("weights {weights:?}")));
        }
        Ok(Self {
            lambda: clamped.map(|w| w / sum),
        })
    }

    pub const PERFECT: BellDiagonal = BellDiagonal {
        lambda: [1.0, 0.0, 0.0, 0.0],
    };

    pub fn lambdas(&self) -> [f64; 4] {
        self.lambda
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambda[i]
    }

    pub fn e_bit(&self) -> f64 {
        self.lambda[2] + self.lambda[3]
    }

    pub fn e_ph(&self) -> f64 {
        self.lambda[1] + self.lambda[3]
    }
}

/// The Bell-diagonal state with the given error rates and free parameter λ₃.
pub fn bell_from_errors(err: ErrorPair, lambda3: f64) -> Result<BellDiagonal> {
    let range = lambda3_range(err)?;
    if !range.contains(lambda3) {
        return Err(Error::LambdaOutOfRange {
            lambda3,
            lo: range.lo,
            hi: range.hi,
        });
    }
    let l3 = lambda3.clamp(range.lo, range.hi);
    let l2 = err.e_bit - l3;
    let l1 = err.e_ph - l3;
    let l0 = 1.0 - err.e_bit - err.e_ph + l3;
    BellDiagonal::new(l0, l1, l2, l3)
}

/// Privacy part of the one-way rate: `1 − S(A|E)`-style deficit
/// `1 − (λ₀+λ₁)H(λ₀/(λ₀+λ₁)) − (λ₂+λ₃)H(λ₂/(λ₂+λ₃))`.
/// Blocks of zero weight contribute nothing.
pub fn privacy_term(state: &BellDiagonal) -> f64 {
    privacy_from_lambdas(state.lambda)
}

#[inline]
pub(crate) fn privacy_from_lambdas([l0, l1, l2, l3]: [f64; 4]) -> f64 {
    let mut value = 1.0;
    let even = l0 + l1;
    if even > 0.0 {
        value -= even * entropy_unchecked(l0 / even);
    }
    let odd = l2 + l3;
    if odd > 0.0 {
        value -= odd * entropy_unchecked(l2 / odd);
    }
    value.clamp(0.0, 1.0)
}
