//! Threshold-detector statistics of the three retained event classes.
//!
//! * X1: exactly one of H1, H2 clicks.
//! * X2: exactly (H1, V1) or (H2, V2) click.
//! * X3: exactly (H1, V2) or (H2, V1) click.
//!
//! Each class is evaluated separately for equal (00) and different (01)
//! phase bits, averaging over the four polarization combinations, and the
//! overall figures are the ½/½ mixture of the two phase-bit classes.

use crate::channel::{arm_transmittance, intensity_table, Detector, IntensityTable, ProtocolParams};

use Detector::*;

/// `1 − (1 − p_d)·exp(−η_d·I)`
pub fn click_probability(intensity: f64, eta_d: f64, p_d: f64) -> f64 {
    p_d - (1.0 - p_d) * (-eta_d * intensity).exp_m1()
}

/// Probability of a click jointly with an even (resp. odd) photon number,
/// i.e. `e^{−I}[cosh I − (1−p_d) cosh((1−η_d) I)]` and the sinh twin,
/// written with `expm1` so that small intensities do not cancel.
#[derive(Debug, Clone, Copy)]
struct ParityClicks {
    even: f64,
    odd: f64,
}

fn parity_clicks(i: f64, eta_d: f64, p_d: f64) -> ParityClicks {
    let m2 = (-2.0 * i).exp_m1();
    let md = (-eta_d * i).exp_m1();
    let mr = (-(2.0 - eta_d) * i).exp_m1();
    let keep = 1.0 - p_d;
    ParityClicks {
        even: (p_d + 0.5 * m2 - 0.5 * keep * (md + mr)).max(0.0),
        odd: (-0.5 * m2 - 0.5 * keep * (md - mr)).max(0.0),
    }
}

/// Error rate from a numerator and gain, with the 0/0 case fixed at ½.
fn ratio_or_half(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Which detectors click in a retained event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickPattern {
    Single(Detector),
    Pair(Detector, Detector),
}

impl ClickPattern {
    pub fn label(&self) -> String {
        match self {
            ClickPattern::Single(d) => d.name().to_string(),
            ClickPattern::Pair(a, b) => format!("{}{}", a.name(), b.name()),
        }
    }
}

/// Gain and phase error of one detector pattern within a phase-bit class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubGain {
    pub pattern: ClickPattern,
    pub gain: f64,
    pub e_ph: f64,
}

/// One event class restricted to one phase-bit class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    /// The two detector patterns; the first is the one expected for
    /// equal phase bits on an ideal channel.
    pub sub: [SubGain; 2],
    pub gain: f64,
    pub e_ph: f64,
    pub e_bit: f64,
}

/// Gain and error rates of one event class after phase-class mixing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSummary {
    pub gain: f64,
    pub e_ph: f64,
    pub e_bit: f64,
}

/// Per-class statistics `[equal bits, different bits]`.
pub type EventClasses = [ClassStats; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct EventStats {
    /// X1, X2, X3.
    pub events: [EventSummary; 3],
    pub classes: [EventClasses; 3],
}

impl EventStats {
    pub fn from_classes(classes: [EventClasses; 3]) -> Self {
        let events = classes.map(|[c00, c01]| EventSummary {
            gain: 0.5 * c00.gain + 0.5 * c01.gain,
            e_ph: 0.5 * c00.e_ph + 0.5 * c01.e_ph,
            e_bit: 0.5 * c00.e_bit + 0.5 * c01.e_bit,
        });
        Self { events, classes }
    }
}

fn combine(sub: [SubGain; 2], different_bits: bool) -> ClassStats {
    let gain = sub[0].gain + sub[1].gain;
    let e_ph = ratio_or_half(sub[0].gain * sub[0].e_ph + sub[1].gain * sub[1].e_ph, gain);
    // The pattern expected on an ideal channel flips with the phase-bit
    // parity; a click on the other pattern is a bit error.
    let wrong = if different_bits { sub[0].gain } else { sub[1].gain };
    ClassStats {
        sub,
        gain,
        e_ph,
        e_bit: ratio_or_half(wrong, gain),
    }
}

fn single_sub(rows: &[[f64; 4]; 4], fire: Detector, params: &ProtocolParams) -> SubGain {
    let (eta_d, p_d) = (params.eta_d, params.p_d);
    let mut gain_sum = 0.0;
    let mut even_sum = 0.0;
    for row in rows {
        let dark_rest: f64 = Detector::ALL
            .iter()
            .filter(|&&d| d != fire)
            .map(|d| row[d.index()])
            .sum();
        let silent = (-eta_d * dark_rest).exp();
        let i = row[fire.index()];
        gain_sum += silent * click_probability(i, eta_d, p_d);
        even_sum += silent * parity_clicks(i, eta_d, p_d).even;
    }
    let prefactor = (1.0 - p_d).powi(3) / 4.0;
    SubGain {
        pattern: ClickPattern::Single(fire),
        gain: prefactor * gain_sum,
        e_ph: ratio_or_half(even_sum, gain_sum),
    }
}

fn pair_sub(rows: &[[f64; 4]; 4], h: Detector, v: Detector, params: &ProtocolParams) -> SubGain {
    let (eta_d, p_d) = (params.eta_d, params.p_d);
    let h_off = if h == H1 { H2 } else { H1 };
    let v_off = if v == V1 { V2 } else { V1 };
    let mut gain_sum = 0.0;
    let mut phase_sum = 0.0;
    for row in rows {
        let silent = (-eta_d * (row[h_off.index()] + row[v_off.index()])).exp();
        let (ih, iv) = (row[h.index()], row[v.index()]);
        gain_sum += silent * click_probability(ih, eta_d, p_d) * click_probability(iv, eta_d, p_d);
        let ph = parity_clicks(ih, eta_d, p_d);
        let pv = parity_clicks(iv, eta_d, p_d);
        phase_sum += silent * (2.0 * ph.odd * pv.even + pv.odd * ph.even + pv.even * ph.even);
    }
    let prefactor = (1.0 - p_d).powi(2) / 4.0;
    SubGain {
        pattern: ClickPattern::Pair(h, v),
        gain: prefactor * gain_sum,
        // Normalised as printed for this expression (its gain carries a
        // (1−p_d)²/2 prefactor against the (1−p_d)²/4 here), which keeps the
        // ratio within [0, 1].
        e_ph: ratio_or_half(phase_sum, 2.0 * gain_sum),
    }
}

fn per_class<F: Fn(&[[f64; 4]; 4]) -> [SubGain; 2]>(table: &IntensityTable, subs: F) -> EventClasses {
    [false, true].map(|different| combine(subs(&table.class_rows(different)), different))
}

/// X1 statistics: a lone click on H1 or H2.
pub fn x1_stats(table: &IntensityTable, params: &ProtocolParams) -> EventClasses {
    per_class(table, |rows| [single_sub(rows, H1, params), single_sub(rows, H2, params)])
}

/// X2 statistics: coincidences (H1, V1) and (H2, V2).
pub fn x2_stats(table: &IntensityTable, params: &ProtocolParams) -> EventClasses {
    per_class(table, |rows| [pair_sub(rows, H1, V1, params), pair_sub(rows, H2, V2, params)])
}

/// X3 statistics: coincidences (H1, V2) and (H2, V1), the X2 set with
/// V1 and V2 relabelled.
pub fn x3_stats(table: &IntensityTable, params: &ProtocolParams) -> EventClasses {
    per_class(table, |rows| [pair_sub(rows, H1, V2, params), pair_sub(rows, H2, V1, params)])
}

/// All three event classes at distance `l_km`.
pub fn overall_stats(params: &ProtocolParams, l_km: f64) -> EventStats {
    let table = intensity_table(params, l_km);
    EventStats::from_classes([
        x1_stats(&table, params),
        x2_stats(&table, params),
        x3_stats(&table, params),
    ])
}

/// Which transmittance enters the beam-splitting information bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EveEta {
    /// Arm transmittance only.
    #[default]
    Arm,
    /// Arm transmittance times detector efficiency.
    ArmEtaD,
}

impl EveEta {
    pub fn eta(self, params: &ProtocolParams, l_km: f64) -> f64 {
        let arm = arm_transmittance(params.alpha_db_per_km, l_km);
        match self {
            EveEta::Arm => arm,
            EveEta::ArmEtaD => arm * params.eta_d,
        }
    }
}

/// Upper bound on the eavesdropper's information from a beam-splitting
/// attack, `1 − (1/9)(e^{−2(1−η)μ} + 2e^{−(1−η)μ})²`.
pub fn eve_information(mu: f64, eta: f64) -> f64 {
    let x = (1.0 - eta) * mu;
    let s = (-2.0 * x).exp() + 2.0 * (-x).exp();
    (1.0 - s * s / 9.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dark_params() -> ProtocolParams {
        ProtocolParams { mu: 1e-300, ..Default::default() }
    }

    #[test]
    fn click_examples() {
        assert_eq!(click_probability(0.0, 0.145, 8e-8), 8e-8);
        assert!((click_probability(1e4, 1.0, 0.0) - 1.0).abs() < 1e-15);
        // mpmath: 0.13497777609104216...
        assert!((click_probability(1.0, 0.145, 8e-8) - 0.134_977_776_091_042_16).abs() < 1e-15);
    }

    #[test]
    fn parity_split_sums_to_click() {
        for &i in &[0.0, 1e-9, 1e-5, 0.01, 0.3, 2.0, 40.0] {
            let p = parity_clicks(i, 0.145, 8e-8);
            let c = click_probability(i, 0.145, 8e-8);
            // cancellation leaves a few ulps of the intensity itself
            assert!((p.even + p.odd - c).abs() <= 1e-15 * (c + i), "{i}");
        }
    }

    #[test]
    fn dark_counts_only() {
        let p = dark_params();
        let stats = overall_stats(&p, 0.0);
        let pd = p.p_d;
        let x1 = stats.classes[0][0];
        assert!((x1.sub[0].gain - (1.0 - pd).powi(3) * pd).abs() < 1e-22);
        assert_eq!(x1.e_bit, 0.5);
        let x2 = stats.classes[1][0];
        assert!((x2.sub[0].gain - (1.0 - pd).powi(2) * pd * pd).abs() < 1e-28);
        for e in stats.events {
            assert!((e.e_bit - 0.5).abs() < 1e-12);
        }
        assert_eq!(stats.events[1], stats.events[2]);
    }

    #[test]
    fn ideal_coincidences() {
        let p = ProtocolParams { mu: 0.5, p_d: 0.0, ..Default::default() };
        let table = intensity_table(&p, 0.0);
        let x2 = x2_stats(&table, &p);
        // equal bits: (++) and (−−) light H1,V1; H2,V2 stay dark
        assert!(x2[0].sub[0].gain > 0.0);
        assert_eq!(x2[0].sub[1].gain, 0.0);
        assert_eq!(x2[0].e_bit, 0.0);
        let x3 = x3_stats(&table, &p);
        assert!(x3[0].sub[0].gain > 0.0);
        assert_eq!(x3[0].sub[1].gain, 0.0);
        let x1 = x1_stats(&table, &p);
        assert_eq!(x1[0].e_bit, 0.0);
        assert_eq!(x1[1].e_bit, 0.0);
    }

    #[test]
    fn phase_classes_agree_without_mismatch() {
        let p = ProtocolParams { mu: 0.2, e_d: 0.3, ..Default::default() };
        let s = overall_stats(&p, 120.0);
        for ev in s.classes {
            assert!((ev[0].gain - ev[1].gain).abs() <= 1e-12 * ev[0].gain);
            assert!((ev[0].e_bit - ev[1].e_bit).abs() < 1e-12);
        }
    }

    #[test]
    fn eve_information_examples() {
        assert!(eve_information(0.3, 1.0).abs() < 1e-15);
        assert!(eve_information(0.0, 0.5).abs() < 1e-15);
        // mpmath: 0.12434307434199429...
        assert!((eve_information(0.1, 0.5) - 0.124_343_074_341_994_29).abs() < 1e-15);
    }

    #[test]
    fn eve_eta_convention() {
        let p = ProtocolParams::default();
        assert!((EveEta::Arm.eta(&p, 100.0) - 0.1).abs() < 1e-16);
        assert!((EveEta::ArmEtaD.eta(&p, 100.0) - 0.0145).abs() < 1e-16);
    }
}
