//! Secret key rates with and without advantage distillation, their
//! optimisation over source intensity and block size, the repeaterless
//! (PLOB) bound and the maximum-distance search.

use crate::bell::{entropy_unchecked, lambda3_range, ErrorPair};
use crate::channel::ProtocolParams;
use crate::distill::{distilled_privacy, worst_case_ad_privacy_with};
use crate::error::{Error, Result};
use crate::events::{eve_information, overall_stats, EventStats, EventSummary, EveEta};
use crate::search::GridGolden;

/// How negative brackets are handled when summing the three event classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampMode {
    /// Each event class is clamped at zero before summing.
    #[default]
    PerEvent,
    /// Only the total is clamped.
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    pub clamp: ClampMode,
    pub eve_eta: EveEta,
    /// One block size for all event classes.
    pub homogeneous: bool,
    pub minimizer: GridGolden,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            clamp: ClampMode::PerEvent,
            eve_eta: EveEta::Arm,
            homogeneous: true,
            minimizer: GridGolden::default(),
        }
    }
}

fn finish(per_event: [f64; 3], clamp: ClampMode) -> f64 {
    match clamp {
        ClampMode::PerEvent => per_event.iter().map(|r| r.max(0.0)).sum(),
        ClampMode::Total => per_event.iter().sum::<f64>().max(0.0),
    }
}

fn original_event_rate(ev: &EventSummary, params: &ProtocolParams, i_e: f64) -> f64 {
    ev.gain
        * (1.0 - entropy_unchecked(ev.e_ph) - i_e - params.f * entropy_unchecked(ev.e_bit))
}

/// Key rate without distillation, summed over X1..X3.
pub fn original_key_rate(stats: &EventStats, params: &ProtocolParams, i_e: f64, clamp: ClampMode) -> f64 {
    finish(stats.events.map(|ev| original_event_rate(&ev, params, i_e)), clamp)
}

/// Block sizes used for the three event classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSizes {
    Homogeneous(u32),
    PerEvent([u32; 3]),
}

impl BlockSizes {
    fn get(&self, event: usize) -> u32 {
        match *self {
            BlockSizes::Homogeneous(b) => b,
            BlockSizes::PerEvent(bs) => bs[event],
        }
    }
}

/// Distilled rate with its per-event breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct AdRate {
    pub rate: f64,
    /// Unclamped contribution of each event class.
    pub per_event: [f64; 3],
    /// Event classes whose error pair admitted no Bell-diagonal state.
    pub infeasible: Vec<usize>,
}

/// Quantities of one event class shared by the exact rate and its bound.
struct AdEvent {
    err: ErrorPair,
    /// `Q·p_succ/b`
    scale: f64,
    /// `f·H(Ẽ_bit) + I_E`
    rest: f64,
}

fn ad_event(ev: &EventSummary, params: &ProtocolParams, i_e: f64, b: u32) -> Result<Option<AdEvent>> {
    if b < 1 {
        return Err(Error::BlockSize(b));
    }
    let err = match ErrorPair::new(ev.e_bit, ev.e_ph) {
        Ok(e) if e.is_feasible() => e,
        _ => return Ok(None),
    };
    let bi = b as i32;
    let p_succ = err.e_bit.powi(bi) + (1.0 - err.e_bit).powi(bi);
    let e_bit_after = err.e_bit.powi(bi) / p_succ;
    Ok(Some(AdEvent {
        err,
        scale: ev.gain * p_succ / b as f64,
        rest: params.f * entropy_unchecked(e_bit_after) + i_e,
    }))
}

impl AdEvent {
    fn rate(&self, b: u32, minimizer: GridGolden) -> Result<Option<f64>> {
        match worst_case_ad_privacy_with(self.err, b, minimizer) {
            Ok((privacy, _)) => Ok(Some(self.scale * (privacy - self.rest))),
            Err(Error::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Upper bound on [`AdEvent::rate`]: the privacy term at any fixed λ₃
    /// bounds its minimum from above.
    fn rate_bound(&self, b: u32) -> f64 {
        let Ok(range) = lambda3_range(self.err) else {
            return 0.0;
        };
        let independent = (self.err.e_bit * self.err.e_ph).clamp(range.lo, range.hi);
        let privacy = [range.lo, independent, range.hi]
            .into_iter()
            .map(|l3| distilled_privacy(self.err, l3, b))
            .fold(f64::INFINITY, f64::min);
        self.scale * (privacy - self.rest)
    }
}

/// Distilled rate of one event class (unclamped). `None` when the error
/// pair is infeasible.
fn ad_event_rate(
    ev: &EventSummary,
    params: &ProtocolParams,
    i_e: f64,
    b: u32,
    minimizer: GridGolden,
) -> Result<Option<f64>> {
    match ad_event(ev, params, i_e, b)? {
        Some(e) => e.rate(b, minimizer),
        None => Ok(None),
    }
}

/// Key rate with advantage distillation for the given block sizes.
pub fn ad_key_rate(
    stats: &EventStats,
    params: &ProtocolParams,
    i_e: f64,
    blocks: BlockSizes,
    opts: &RateOptions,
) -> Result<AdRate> {
    let mut per_event = [0.0; 3];
    let mut infeasible = Vec::new();
    for (i, ev) in stats.events.iter().enumerate() {
        match ad_event_rate(ev, params, i_e, blocks.get(i), opts.minimizer)? {
            Some(r) => per_event[i] = r,
            None => infeasible.push(i),
        }
    }
    Ok(AdRate {
        rate: finish(per_event, opts.clamp),
        per_event,
        infeasible,
    })
}

/// Logarithmically spaced intensity grid with one local zoom pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub zoom_points: usize,
}

impl Default for MuGrid {
    fn default() -> Self {
        Self {
            min: 0.005,
            max: 1.5,
            points: 60,
            zoom_points: 10,
        }
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

impl MuGrid {
    pub fn values(&self) -> Vec<f64> {
        log_space(self.min, self.max, self.points)
    }

    /// Single-point grid.
    pub fn fixed(mu: f64) -> Self {
        Self {
            min: mu,
            max: mu,
            points: 1,
            zoom_points: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |c: &str| Error::Param {
            field: "mu",
            constraint: c.to_string(),
        };
        if self.points == 0 {
            return Err(bad("grid needs at least one point"));
        }
        if !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() {
            return Err(bad("grid requires 0 < mu_min <= mu_max"));
        }
        Ok(())
    }
}

/// Optimum of one rate at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOptimum {
    pub rate: f64,
    pub mu: f64,
    /// Homogeneous block size (1 without distillation; with per-event
    /// block sizes, the X1 block size).
    pub b: u32,
    pub per_event_b: [u32; 3],
}

/// Best block size at one intensity, or `None` when nothing beats
/// `floor`. Candidates whose upper bound cannot exceed the running best are
/// skipped without running the λ₃ minimisation, which leaves the result
/// unchanged.
fn best_at_mu(
    params: &ProtocolParams,
    l_km: f64,
    mu: f64,
    use_ad: bool,
    b_range: &[u32],
    opts: &RateOptions,
    floor: f64,
) -> Result<Option<PointOptimum>> {
    let p = params.with_mu(mu);
    let stats = overall_stats(&p, l_km);
    let i_e = eve_information(mu, opts.eve_eta.eta(&p, l_km));
    if !use_ad {
        let rate = original_key_rate(&stats, &p, i_e, opts.clamp);
        return Ok((rate > floor).then_some(PointOptimum { rate, mu, b: 1, per_event_b: [1; 3] }));
    }
    if opts.homogeneous || opts.clamp == ClampMode::Total {
        let mut best: Option<PointOptimum> = None;
        for &b in b_range {
            let threshold = best.map_or(floor, |cur| cur.rate.max(floor));
            let events = stats
                .events
                .iter()
                .map(|ev| ad_event(ev, &p, i_e, b))
                .collect::<Result<Vec<_>>>()?;
            if threshold > f64::NEG_INFINITY {
                let bounds = [0, 1, 2].map(|i| events[i].as_ref().map_or(0.0, |e| e.rate_bound(b)));
                if finish(bounds, opts.clamp) <= threshold {
                    continue;
                }
            }
            let mut per_event = [0.0; 3];
            for (i, e) in events.iter().enumerate() {
                let Some(e) = e else { continue };
                // Per-event clamping discards non-positive terms anyway.
                if opts.clamp == ClampMode::PerEvent && e.rate_bound(b) <= 0.0 {
                    continue;
                }
                per_event[i] = e.rate(b, opts.minimizer)?.unwrap_or(0.0);
            }
            let rate = finish(per_event, opts.clamp);
            if rate > threshold {
                best = Some(PointOptimum { rate, mu, b, per_event_b: [b; 3] });
            }
        }
        Ok(best)
    } else {
        // Per-event clamping makes the sum separable across events.
        let mut per_event_b = [1u32; 3];
        let mut total = 0.0;
        for (i, ev) in stats.events.iter().enumerate() {
            let mut best = (f64::NEG_INFINITY, 1u32);
            for &b in b_range {
                let Some(e) = ad_event(ev, &p, i_e, b)? else {
                    if 0.0 > best.0 {
                        best = (0.0, b);
                    }
                    continue;
                };
                let bound = e.rate_bound(b).max(0.0);
                if bound <= best.0 {
                    continue;
                }
                let r = if bound <= 0.0 {
                    0.0
                } else {
                    e.rate(b, opts.minimizer)?.unwrap_or(0.0).max(0.0)
                };
                if r > best.0 {
                    best = (r, b);
                }
            }
            per_event_b[i] = best.1;
            total += best.0;
        }
        Ok((total > floor).then_some(PointOptimum { rate: total, mu, b: per_event_b[0], per_event_b }))
    }
}

/// Maximise the chosen rate over the intensity grid and, with
/// distillation, over block sizes `1..=b_max`. Ties go to the smaller
/// intensity and the smaller block size.
pub fn optimize_point(
    params: &ProtocolParams,
    l_km: f64,
    mu_grid: &MuGrid,
    use_ad: bool,
    opts: &RateOptions,
) -> Result<PointOptimum> {
    let b_range: Vec<u32> = (1..=params.b_max.max(1)).collect();
    optimize_point_over(params, l_km, mu_grid, use_ad, &b_range, opts)
}

/// As [`optimize_point`] with an explicit block-size set.
pub fn optimize_point_over(
    params: &ProtocolParams,
    l_km: f64,
    mu_grid: &MuGrid,
    use_ad: bool,
    b_range: &[u32],
    opts: &RateOptions,
) -> Result<PointOptimum> {
    mu_grid.validate()?;
    if b_range.is_empty() {
        return Err(Error::Param {
            field: "b_max",
            constraint: "block-size set is empty".into(),
        });
    }
    let grid = mu_grid.values();
    let mut best: Option<(usize, PointOptimum)> = None;
    for (k, &mu) in grid.iter().enumerate() {
        let floor = best.map_or(f64::NEG_INFINITY, |(_, cur)| cur.rate);
        if let Some(cand) = best_at_mu(params, l_km, mu, use_ad, b_range, opts, floor)? {
            best = Some((k, cand));
        }
    }
    let (k, mut best) = best.expect("grid is non-empty");
    if mu_grid.zoom_points > 0 && grid.len() > 1 && best.rate > 0.0 {
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let zoom = log_space(lo, hi, mu_grid.zoom_points + 2);
        for &mu in &zoom[1..zoom.len() - 1] {
            if let Some(cand) = best_at_mu(params, l_km, mu, use_ad, b_range, opts, best.rate)? {
                best = cand;
            }
        }
    }
    Ok(best)
}

/// Repeaterless secret-key capacity `−log₂(1 − η_AB)` with end-to-end
/// transmittance `η_AB = 10^(−α·l/10)`. Infinite at `l = 0`.
pub fn plob_bound(alpha_db_per_km: f64, l_km: f64) -> f64 {
    let eta = 10f64.powf(-alpha_db_per_km * l_km / 10.0);
    if eta >= 1.0 {
        return f64::INFINITY;
    }
    -(-eta).ln_1p() / std::f64::consts::LN_2
}

/// One row of a distance sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRatePoint {
    pub distance_km: f64,
    pub r_original: f64,
    pub r_ad: f64,
    pub b_opt: u32,
    pub mu_opt_original: f64,
    pub mu_opt_ad: f64,
    pub plob: f64,
}

/// Optimised original and distilled rates at one distance.
pub fn evaluate_point(
    params: &ProtocolParams,
    l_km: f64,
    mu_grid: &MuGrid,
    opts: &RateOptions,
) -> Result<KeyRatePoint> {
    let orig = optimize_point(params, l_km, mu_grid, false, opts)?;
    let ad = optimize_point(params, l_km, mu_grid, true, opts)?;
    Ok(KeyRatePoint {
        distance_km: l_km,
        r_original: orig.rate,
        r_ad: ad.rate,
        b_opt: ad.b,
        mu_opt_original: orig.mu,
        mu_opt_ad: ad.mu,
        plob: plob_bound(params.alpha_db_per_km, l_km),
    })
}

/// Settings of the maximum-distance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Rates at or below this count as zero.
    pub r_floor: f64,
    pub start_km: f64,
    pub step_km: f64,
    pub tolerance_km: f64,
    /// The coarse scan gives up beyond this distance.
    pub limit_km: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            r_floor: 1e-12,
            start_km: 1.0,
            step_km: 1.0,
            tolerance_km: 0.1,
            limit_km: 2000.0,
        }
    }
}

/// Endpoint of the positive-rate region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistance {
    pub distance_km: f64,
    pub b: u32,
    pub mu: f64,
    pub rate: f64,
}

/// Largest distance with optimised rate above the floor: coarse scan from
/// `start_km` in `step_km` increments, then bisection to `tolerance_km`.
pub fn max_distance(
    params: &ProtocolParams,
    use_ad: bool,
    mu_grid: &MuGrid,
    opts: &RateOptions,
    search: &SearchConfig,
) -> Result<MaxDistance> {
    let eval = |l: f64| optimize_point(params, l, mu_grid, use_ad, opts);
    let first = eval(search.start_km)?;
    if !(first.rate > search.r_floor) {
        return Err(Error::NoPositiveRate { at_km: search.start_km });
    }
    let mut good = (search.start_km, first);
    let mut bad = None;
    let mut l = search.start_km;
    while l < search.limit_km {
        l += search.step_km;
        let r = eval(l)?;
        if r.rate > search.r_floor {
            good = (l, r);
        } else {
            bad = Some(l);
            break;
        }
    }
    let Some(mut hi) = bad else {
        let (d, r) = good;
        return Ok(MaxDistance { distance_km: d, b: r.b, mu: r.mu, rate: r.rate });
    };
    while hi - good.0 > search.tolerance_km {
        let mid = 0.5 * (good.0 + hi);
        let r = eval(mid)?;
        if r.rate > search.r_floor {
            good = (mid, r);
        } else {
            hi = mid;
        }
    }
    let (d, r) = good;
    Ok(MaxDistance { distance_km: d, b: r.b, mu: r.mu, rate: r.rate })
}
