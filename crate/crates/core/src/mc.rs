//! Monte-Carlo oracles: block-level simulation of the distillation step
//! and round-level simulation of the detection events.
//!
//! Work is split into fixed-size shards; shard `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, so results do not depend on how shards are
//! scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bell::BellDiagonal;
use crate::channel::{intensity_table, Polarization, ProtocolParams};
use crate::error::{Error, Result};
use crate::events::click_probability;

/// Samples per shard.
const SHARD: u64 = 1 << 20;

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
    pub seed: u64,
}

impl McEstimate {
    fn binomial(hits: u64, n: u64, seed: u64) -> Self {
        let value = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let std_err = if n == 0 { 0.0 } else { (value * (1.0 - value) / n as f64).sqrt() };
        Self { value, std_err, n, seed }
    }
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Run `work(rng, count)` over shards and add up the integer tallies in
/// shard order.
fn sharded<const N: usize, F>(n: u64, seed: u64, work: F) -> [u64; N]
where
    F: Fn(&mut ChaCha8Rng, u64) -> [u64; N] + Sync,
{
    let shards = n.div_ceil(SHARD);
    let parts: Vec<[u64; N]> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let count = SHARD.min(n - k * SHARD);
            work(&mut shard_rng(seed, k), count)
        })
        .collect();
    parts.iter().fold([0; N], |mut acc, p| {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
        acc
    })
}

/// Empirical distillation statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdBlockEstimate {
    pub p_succ: McEstimate,
    /// Distilled Bell coefficients, conditional on acceptance.
    pub lambda: [McEstimate; 4],
    pub e_bit_after: McEstimate,
}

/// Simulate `n_blocks` blocks of `b` pairs drawn from `state`.
///
/// Each pair carries a bit-error and a phase-error indicator (λ₀: none,
/// λ₁: phase, λ₂: bit, λ₃: both). A block survives when its bit-error
/// indicators agree; the kept pair then has that common bit error and
/// the parity of the phase errors.
pub fn simulate_ad_blocks(state: &BellDiagonal, b: u32, n_blocks: u64, seed: u64) -> Result<AdBlockEstimate> {
    if b < 1 {
        return Err(Error::BlockSize(b));
    }
    if n_blocks == 0 {
        return Err(Error::Param {
            field: "n_blocks",
            constraint: "must be >= 1".into(),
        });
    }
    let l = state.lambdas();
    let cdf = [l[0], l[0] + l[1], l[0] + l[1] + l[2]];
    let draw = |rng: &mut ChaCha8Rng| -> (bool, bool) {
        let u: f64 = rng.gen();
        match cdf.iter().position(|&c| u < c) {
            Some(0) => (false, false),
            Some(1) => (false, true),
            Some(2) => (true, false),
            _ => (true, true),
        }
    };
    // tallies: accepted, then counts of the kept pair per Bell index
    let t = sharded::<5, _>(n_blocks, seed, |rng, count| {
        let mut t = [0u64; 5];
        for _ in 0..count {
            let (bit, mut phase) = draw(rng);
            let mut ok = true;
            for _ in 1..b {
                let (bi, ph) = draw(rng);
                ok &= bi == bit;
                phase ^= ph;
            }
            if ok {
                t[0] += 1;
                t[1 + 2 * bit as usize + phase as usize] += 1;
            }
        }
        t
    });
    let accepted = t[0];
    let lambda = [t[1], t[2], t[3], t[4]].map(|k| McEstimate::binomial(k, accepted, seed));
    Ok(AdBlockEstimate {
        p_succ: McEstimate::binomial(accepted, n_blocks, seed),
        lambda,
        e_bit_after: McEstimate::binomial(t[3] + t[4], accepted, seed),
    })
}

/// Empirical gains and bit error rates of X1, X2, X3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub gain: [McEstimate; 3],
    /// Average of the equal-bit and different-bit error rates.
    pub e_bit: [McEstimate; 3],
    /// Bit error rate per phase-bit class (equal, different).
    pub e_bit_class: [[McEstimate; 2]; 3],
}

/// Per-choice click probabilities for H1, H2, V1, V2, with the
/// probability that anything clicks at all.
#[derive(Debug, Clone, Copy)]
struct ChoiceModel {
    p: [f64; 4],
    /// `tail[k]`: probability that some detector among `k..4` clicks.
    tail: [f64; 4],
    different_bits: bool,
}

impl ChoiceModel {
    /// Click pattern (bit mask over H1, H2, V1, V2) conditional on at
    /// least one click: detector `k` fires with `p_k / tail_k` while no
    /// earlier one has, after which the rest are unconditioned.
    fn sample_given_click(&self, rng: &mut ChaCha8Rng) -> u8 {
        let mut mask = 0u8;
        let mut forced = true;
        for k in 0..4 {
            let prob = if forced { self.p[k] / self.tail[k] } else { self.p[k] };
            if rng.gen::<f64>() < prob {
                mask |= 1 << k;
                forced = false;
            }
        }
        mask
    }
}

const H1: u8 = 1;
const H2: u8 = 2;
const V1: u8 = 4;
const V2: u8 = 8;

/// Event class and sub-pattern (0 or 1) of a click mask.
fn classify(mask: u8) -> Option<(usize, usize)> {
    match mask {
        H1 => Some((0, 0)),
        H2 => Some((0, 1)),
        m if m == H1 | V1 => Some((1, 0)),
        m if m == H2 | V2 => Some((1, 1)),
        m if m == H1 | V2 => Some((2, 0)),
        m if m == H2 | V1 => Some((2, 1)),
        _ => None,
    }
}

/// Simulate `n_rounds` rounds with uniformly random polarizations and
/// phase bits for both parties and independent threshold detectors.
pub fn simulate_detection(params: &ProtocolParams, l_km: f64, n_rounds: u64, seed: u64) -> Result<DetectionEstimate> {
    params.validate()?;
    if n_rounds == 0 {
        return Err(Error::Param {
            field: "n_rounds",
            constraint: "must be >= 1".into(),
        });
    }
    let table = intensity_table(params, l_km);
    let mut models = Vec::with_capacity(16);
    for choice in 0..16u8 {
        let alice = Polarization::ALL[(choice & 1) as usize];
        let bob = Polarization::ALL[((choice >> 1) & 1) as usize];
        let (abit, bbit) = (choice & 4 != 0, choice & 8 != 0);
        let p = table.row(alice, bob, abit, bbit).map(|i| click_probability(i, params.eta_d, params.p_d));
        let mut tail = [0.0; 4];
        let mut none = 1.0;
        for k in (0..4).rev() {
            none *= 1.0 - p[k];
            tail[k] = 1.0 - none;
        }
        models.push(ChoiceModel { p, tail, different_bits: abit != bbit });
    }
    // tallies: [class][event][sub]
    let t = sharded::<12, _>(n_rounds, seed, |rng, count| {
        let mut t = [0u64; 12];
        for _ in 0..count {
            let word = rng.next_u64();
            let m = &models[(word & 15) as usize];
            let u = (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u >= m.tail[0] {
                continue;
            }
            if let Some((event, sub)) = classify(m.sample_given_click(rng)) {
                t[6 * m.different_bits as usize + 2 * event + sub] += 1;
            }
        }
        t
    });
    let mut gain = [McEstimate::binomial(0, 1, seed); 3];
    let mut e_bit = gain;
    let mut e_bit_class = [[gain[0]; 2]; 3];
    for event in 0..3 {
        let at = |class: usize, sub: usize| t[6 * class + 2 * event + sub];
        let total: u64 = (0..2).map(|c| at(c, 0) + at(c, 1)).sum();
        gain[event] = McEstimate::binomial(total, n_rounds, seed);
        // equal bits: the second pattern is wrong; different bits: the first
        let equal = McEstimate::binomial(at(0, 1), at(0, 0) + at(0, 1), seed);
        let different = McEstimate::binomial(at(1, 0), at(1, 0) + at(1, 1), seed);
        e_bit_class[event] = [equal, different];
        e_bit[event] = McEstimate {
            value: 0.5 * (equal.value + different.value),
            std_err: 0.5 * equal.std_err.hypot(different.std_err),
            n: equal.n + different.n,
            seed,
        };
    }
    Ok(DetectionEstimate { gain, e_bit, e_bit_class })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_state_always_survives() {
        for b in 1..5 {
            let est = simulate_ad_blocks(&BellDiagonal::PERFECT, b, 10_000, 1).unwrap();
            assert_eq!(est.p_succ.value, 1.0);
            assert_eq!(est.lambda[0].value, 1.0);
        }
    }

    #[test]
    fn success_rate_for_ten_percent_bit_errors() {
        let s = BellDiagonal::new(0.9, 0.0, 0.1, 0.0).unwrap();
        let est = simulate_ad_blocks(&s, 2, 1_000_000, 7).unwrap();
        assert!((est.p_succ.value - 0.82).abs() < 0.00116);
    }

    #[test]
    fn block_simulation_is_reproducible() {
        let s = BellDiagonal::new(0.9, 0.05, 0.05, 0.0).unwrap();
        let a = simulate_ad_blocks(&s, 3, 3 * SHARD + 17, 42).unwrap();
        let b = simulate_ad_blocks(&s, 3, 3 * SHARD + 17, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_ad_blocks(&s, 3, 3 * SHARD + 17, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = BellDiagonal::new(0.7, 0.1, 0.15, 0.05).unwrap();
        let n = 4 * SHARD + 5;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_ad_blocks(&s, 2, n, 9).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(simulate_ad_blocks(&BellDiagonal::PERFECT, 0, 10, 1).is_err());
        assert!(simulate_ad_blocks(&BellDiagonal::PERFECT, 1, 0, 1).is_err());
        assert!(simulate_detection(&ProtocolParams::default(), 10.0, 0, 1).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify(H1), Some((0, 0)));
        assert_eq!(classify(H2 | V2), Some((1, 1)));
        assert_eq!(classify(H2 | V1), Some((2, 1)));
        assert_eq!(classify(H1 | H2), None);
        assert_eq!(classify(V1), None);
        assert_eq!(classify(H1 | V1 | V2), None);
        assert_eq!(classify(0), None);
    }

    #[test]
    fn conditional_pattern_sampling_matches_independent_draws() {
        let m = {
            let p = [0.3, 0.05, 0.2, 0.01];
            let mut tail = [0.0; 4];
            let mut none = 1.0;
            for k in (0..4).rev() {
                none *= 1.0 - p[k];
                tail[k] = 1.0 - none;
            }
            ChoiceModel { p, tail, different_bits: false }
        };
        let mut rng = shard_rng(5, 0);
        let n = 400_000;
        let mut counts = [0u32; 16];
        for _ in 0..n {
            counts[m.sample_given_click(&mut rng) as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        for mask in 1..16usize {
            let mut p = 1.0;
            for k in 0..4 {
                p *= if mask & (1 << k) != 0 { m.p[k] } else { 1.0 - m.p[k] };
            }
            let want = p / m.tail[0];
            let got = counts[mask] as f64 / n as f64;
            let sigma = (want * (1.0 - want) / n as f64).sqrt();
            assert!((got - want).abs() < 4.5 * sigma + 1e-12, "{mask}: {got} {want}");
        }
    }
}
