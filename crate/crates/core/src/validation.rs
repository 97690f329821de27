//! Analytic-versus-Monte-Carlo comparison grid used by `verify` and the
//! acceptance suite.

use crate::bell::BellDiagonal;
use crate::channel::ProtocolParams;
use crate::distill::ad_transform;
use crate::error::Result;
use crate::events::{overall_stats, EventStats};
use crate::mc::{simulate_ad_blocks, simulate_detection};

/// One analytic value against its Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub analytic: f64,
    pub estimate: f64,
    /// Standard deviation of the estimator, computed from the analytic
    /// probabilities.
    pub sigma: f64,
}

impl Check {
    /// Deviation in units of `sigma`. A zero-variance check is either
    /// exact (0) or infinitely far off.
    pub fn z(&self) -> f64 {
        let d = (self.estimate - self.analytic).abs();
        if self.sigma > 0.0 {
            d / self.sigma
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Verdict over a set of checks: nothing beyond `hard_z`, and no more
/// beyond `soft_z` than chance allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub checks: usize,
    pub beyond_soft: usize,
    pub allowed_beyond_soft: usize,
    pub beyond_hard: usize,
    pub max_z: f64,
}

impl Verdict {
    pub const SOFT_Z: f64 = 3.0;
    pub const HARD_Z: f64 = 4.0;

    pub fn of(checks: &[Check]) -> Self {
        let zs: Vec<f64> = checks.iter().map(Check::z).collect();
        // two-sided normal tail beyond 3σ
        let p = 0.002_699_796_063_260_2;
        let n = checks.len() as f64;
        let allowed = (n * p + 3.0 * (n * p * (1.0 - p)).sqrt()).floor() as usize;
        Verdict {
            checks: checks.len(),
            beyond_soft: zs.iter().filter(|&&z| z > Self::SOFT_Z).count(),
            allowed_beyond_soft: allowed,
            beyond_hard: zs.iter().filter(|&&z| z > Self::HARD_Z).count(),
            max_z: zs.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn passed(&self) -> bool {
        self.beyond_hard == 0 && self.beyond_soft <= self.allowed_beyond_soft
    }
}

/// Distillation cases: a Bell-diagonal state and a block size.
pub fn ad_grid() -> Vec<([f64; 4], u32)> {
    vec![
        ([0.9, 0.05, 0.05, 0.0], 2),
        ([0.9, 0.0, 0.1, 0.0], 2),
        ([0.81, 0.09, 0.09, 0.01], 2),
        ([0.81, 0.09, 0.09, 0.01], 3),
        ([0.7, 0.1, 0.15, 0.05], 2),
        ([0.7, 0.1, 0.15, 0.05], 4),
        ([0.6, 0.2, 0.1, 0.1], 3),
        ([0.5, 0.3, 0.2, 0.0], 2),
        ([0.5, 0.3, 0.2, 0.0], 5),
        ([0.95, 0.02, 0.02, 0.01], 6),
        ([0.4, 0.3, 0.2, 0.1], 2),
        ([0.4, 0.3, 0.2, 0.1], 3),
        ([0.85, 0.0, 0.0, 0.15], 2),
        ([0.75, 0.2, 0.0, 0.05], 4),
        ([0.65, 0.05, 0.25, 0.05], 3),
        ([0.55, 0.15, 0.15, 0.15], 2),
        ([0.88, 0.07, 0.03, 0.02], 5),
        ([0.7, 0.0, 0.3, 0.0], 6),
        ([0.62, 0.18, 0.12, 0.08], 1),
        ([0.3, 0.25, 0.25, 0.2], 2),
    ]
}

/// Detection cases: (e_d, δ, μ, l_km).
pub fn detection_grid() -> Vec<(f64, f64, f64, f64)> {
    vec![
        (0.0, 0.0, 0.5, 0.0),
        (0.1, 0.0, 0.5, 100.0),
        (0.3, 0.0, 1.0, 20.0),
        (0.5, 0.0, 0.3, 50.0),
        (0.0, 0.25, 0.8, 0.0),
        (0.0, 0.15, 0.5, 30.0),
        (0.15, 0.2, 1.0, 60.0),
        (0.1, 0.1, 0.2, 10.0),
        (0.3, 0.0, 1.0, 150.0),
        (0.5, 0.1, 1.5, 80.0),
    ]
}

fn binomial_sigma(p: f64, n: f64) -> f64 {
    if n > 0.0 {
        (p * (1.0 - p) / n).sqrt()
    } else {
        0.0
    }
}

/// Checks for one distillation case.
pub fn ad_checks(lambda: [f64; 4], b: u32, n_blocks: u64, seed: u64) -> Result<Vec<Check>> {
    let state = BellDiagonal::new(lambda[0], lambda[1], lambda[2], lambda[3])?;
    let analytic = ad_transform(&state, b)?;
    let est = simulate_ad_blocks(&state, b, n_blocks, seed)?;
    let n = n_blocks as f64;
    let kept = n * analytic.p_succ;
    let tag = format!("ad lambda=({},{},{},{}) b={b}", lambda[0], lambda[1], lambda[2], lambda[3]);
    let mut out = vec![Check {
        label: format!("{tag} p_succ"),
        analytic: analytic.p_succ,
        estimate: est.p_succ.value,
        sigma: binomial_sigma(analytic.p_succ, n),
    }];
    let after = analytic.state_after.lambdas();
    for (k, (&a, e)) in after.iter().zip(&est.lambda).enumerate() {
        out.push(Check {
            label: format!("{tag} lambda{k}"),
            analytic: a,
            estimate: e.value,
            sigma: binomial_sigma(a, kept),
        });
    }
    out.push(Check {
        label: format!("{tag} e_bit_after"),
        analytic: analytic.e_bit_after,
        estimate: est.e_bit_after.value,
        sigma: binomial_sigma(analytic.e_bit_after, kept),
    });
    Ok(out)
}

/// Checks of gains and bit error rates against a given analytic model.
pub fn detection_checks_against(
    analytic: &EventStats,
    params: &ProtocolParams,
    l_km: f64,
    n_rounds: u64,
    seed: u64,
) -> Result<Vec<Check>> {
    let est = simulate_detection(params, l_km, n_rounds, seed)?;
    let n = n_rounds as f64;
    let tag = format!("det e_d={} delta={} mu={} l={l_km}", params.e_d, params.delta, params.mu);
    let mut out = Vec::new();
    for (i, name) in ["X1", "X2", "X3"].iter().enumerate() {
        let ev = analytic.events[i];
        out.push(Check {
            label: format!("{tag} Q_{name}"),
            analytic: ev.gain,
            estimate: est.gain[i].value,
            sigma: binomial_sigma(ev.gain, n),
        });
        // each phase-bit class carries half of the rounds
        let var: f64 = analytic.classes[i]
            .iter()
            .map(|c| binomial_sigma(c.e_bit, 0.5 * n * c.gain).powi(2))
            .sum();
        out.push(Check {
            label: format!("{tag} E_bit_{name}"),
            analytic: ev.e_bit,
            estimate: est.e_bit[i].value,
            sigma: 0.5 * var.sqrt(),
        });
    }
    Ok(out)
}

/// Checks for one detection case against the crate's own model.
pub fn detection_checks(params: &ProtocolParams, l_km: f64, n_rounds: u64, seed: u64) -> Result<Vec<Check>> {
    detection_checks_against(&overall_stats(params, l_km), params, l_km, n_rounds, seed)
}

/// Full validation grid. Every case gets its own seed derived from
/// `seed` so that cases are statistically independent.
pub fn run_validation(n_blocks: u64, n_rounds: u64, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (k, (lambda, b)) in ad_grid().into_iter().enumerate() {
        out.extend(ad_checks(lambda, b, n_blocks, case_seed(seed, k as u64))?);
    }
    for (k, (e_d, delta, mu, l)) in detection_grid().into_iter().enumerate() {
        let p = ProtocolParams { e_d, delta, mu, ..Default::default() };
        out.extend(detection_checks(&p, l, n_rounds, case_seed(seed, 1000 + k as u64))?);
    }
    Ok(out)
}

fn case_seed(seed: u64, case: u64) -> u64 {
    seed ^ case.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_checks() {
        let c = Check { label: String::new(), analytic: 0.0, estimate: 0.0, sigma: 0.0 };
        assert_eq!(c.z(), 0.0);
        let c = Check { estimate: 1e-9, ..c };
        assert_eq!(c.z(), f64::INFINITY);
    }

    #[test]
    fn verdict_allows_chance_exceedances_only() {
        let mk = |z: f64| Check { label: String::new(), analytic: 0.0, estimate: z, sigma: 1.0 };
        let mut checks: Vec<Check> = (0..180).map(|_| mk(0.5)).collect();
        assert!(Verdict::of(&checks).passed());
        checks[0] = mk(3.5);
        checks[1] = mk(3.2);
        assert!(Verdict::of(&checks).passed());
        checks[2] = mk(3.1);
        assert!(!Verdict::of(&checks).passed());
        checks.truncate(10);
        checks[0] = mk(4.01);
        assert!(!Verdict::of(&checks).passed());
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(ad_grid().len(), 20);
        assert_eq!(detection_grid().len(), 10);
    }
}
