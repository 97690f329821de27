//! Optical model at the untrusted measurement station: polarization
//! misalignment, phase mismatch and fibre loss, reduced to the mean photon
//! number reaching each of the four threshold detectors.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Physical and protocol constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Fibre attenuation in dB/km.
    pub alpha_db_per_km: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Dark-count probability per detector per gate.
    pub p_d: f64,
    /// Error-correction inefficiency.
    pub f: f64,
    /// Polarization misalignment error rate.
    pub e_d: f64,
    /// Phase mismatch as a fraction of π.
    pub delta: f64,
    /// Mean photon number of the key-generating states.
    pub mu: f64,
    /// Largest advantage-distillation block size considered.
    pub b_max: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            eta_d: 0.145,
            p_d: 8e-8,
            f: 1.15,
            e_d: 0.0,
            delta: 0.0,
            mu: 0.1,
            b_max: 6,
        }
    }
}

fn check(ok: bool, field: &'static str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Param {
            field,
            constraint: constraint.to_string(),
        })
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        check(self.alpha_db_per_km >= 0.0, "alpha_db_per_km", "must be >= 0")?;
        check(self.eta_d > 0.0 && self.eta_d <= 1.0, "eta_d", "must lie in (0, 1]")?;
        check(self.p_d >= 0.0 && self.p_d < 1.0, "p_d", "must lie in [0, 1)")?;
        check(self.f >= 1.0, "f", "must be >= 1")?;
        check((0.0..=1.0).contains(&self.e_d), "e_d", "must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.delta), "delta", "must lie in [0, 1]")?;
        check(self.mu > 0.0 && self.mu.is_finite(), "mu", "must be > 0")?;
        check(self.b_max >= 1, "b_max", "must be >= 1")?;
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }
}

/// Rotation angle of each arm in the symmetric misalignment model,
/// `θ = arcsin √(e_d/2)`.
pub fn misalignment_angle(e_d: f64) -> f64 {
    (e_d.clamp(0.0, 1.0) / 2.0).sqrt().asin()
}

/// Transmittance of one arm, `10^(−α·l/20)`, with `l` the full
/// Alice–Bob distance (each arm spans half of it).
pub fn arm_transmittance(alpha_db_per_km: f64, l_km: f64) -> f64 {
    10f64.powf(-alpha_db_per_km * l_km / 20.0)
}

/// H/V amplitude factors of a diagonal state after rotation by θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationComponents {
    /// cos θ − sin θ
    pub a_minus: f64,
    /// cos θ + sin θ
    pub a_plus: f64,
}

impl RotationComponents {
    pub fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            a_minus: c - s,
            a_plus: c + s,
        }
    }

    /// (H, V) amplitudes of the rotated |+⟩ or |−⟩ state, up to 1/√2.
    pub fn amplitudes(&self, pol: Polarization) -> (f64, f64) {
        match pol {
            Polarization::Plus => (self.a_minus, self.a_plus),
            Polarization::Minus => (self.a_plus, -self.a_minus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Plus,
    Minus,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::Plus, Polarization::Minus];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    H1,
    H2,
    V1,
    V2,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::H1, Detector::H2, Detector::V1, Detector::V2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Detector::H1 => "H1",
            Detector::H2 => "H2",
            Detector::V1 => "V1",
            Detector::V2 => "V2",
        }
    }
}

/// Mean photon number at every detector for every combination of
/// polarizations and phase bits.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityTable {
    // [alice_pol][bob_pol][alice_bit][bob_bit][detector]
    entries: [[[[[f64; 4]; 2]; 2]; 2]; 2],
    mu_eta: f64,
    delta: f64,
}

impl IntensityTable {
    pub fn get(
        &self,
        alice: Polarization,
        bob: Polarization,
        alice_bit: bool,
        bob_bit: bool,
        detector: Detector,
    ) -> f64 {
        self.row(alice, bob, alice_bit, bob_bit)[detector.index()]
    }

    /// Intensities at (H1, H2, V1, V2).
    pub fn row(&self, alice: Polarization, bob: Polarization, alice_bit: bool, bob_bit: bool) -> [f64; 4] {
        self.entries[alice.index()][bob.index()][alice_bit as usize][bob_bit as usize]
    }

    /// The four polarization combinations (++, +−, −+, −−) for one phase-bit
    /// class: `false` for equal bits (00), `true` for different bits (01).
    pub fn class_rows(&self, different_bits: bool) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (k, (a, b)) in POL_PAIRS.iter().enumerate() {
            out[k] = self.row(*a, *b, false, different_bits);
        }
        out
    }

    /// `μη`, the mean photon number each arm delivers to the station.
    pub fn mu_eta(&self) -> f64 {
        self.mu_eta
    }

    /// Relative phase between the two fields at the beam splitter.
    pub fn interference_phase(&self, alice_bit: bool, bob_bit: bool) -> f64 {
        interference_phase(self.delta, alice_bit, bob_bit)
    }
}

/// Polarization combinations in the order ++, +−, −+, −−.
pub const POL_PAIRS: [(Polarization, Polarization); 4] = [
    (Polarization::Plus, Polarization::Plus),
    (Polarization::Plus, Polarization::Minus),
    (Polarization::Minus, Polarization::Plus),
    (Polarization::Minus, Polarization::Minus),
];

pub fn interference_phase(delta: f64, alice_bit: bool, bob_bit: bool) -> f64 {
    PI * delta + if alice_bit ^ bob_bit { PI } else { 0.0 }
}

/// Detector intensities at distance `l_km` (symmetric misalignment).
pub fn intensity_table(params: &ProtocolParams, l_km: f64) -> IntensityTable {
    let rot = RotationComponents::new(misalignment_angle(params.e_d));
    let mu_eta = params.mu * arm_transmittance(params.alpha_db_per_km, l_km);
    let quarter = mu_eta / 4.0;
    let mut entries = [[[[[0.0; 4]; 2]; 2]; 2]; 2];
    for alice in Polarization::ALL {
        let (ha, va) = rot.amplitudes(alice);
        for bob in Polarization::ALL {
            let (hb, vb) = rot.amplitudes(bob);
            for alice_bit in [false, true] {
                for bob_bit in [false, true] {
                    let cos_phi = interference_phase(params.delta, alice_bit, bob_bit).cos();
                    let h_common = ha * ha + hb * hb;
                    let h_cross = 2.0 * cos_phi * ha * hb;
                    let v_common = va * va + vb * vb;
                    let v_cross = 2.0 * cos_phi * va * vb;
                    entries[alice.index()][bob.index()][alice_bit as usize][bob_bit as usize] = [
                        (quarter * (h_common + h_cross)).max(0.0),
                        (quarter * (h_common - h_cross)).max(0.0),
                        (quarter * (v_common + v_cross)).max(0.0),
                        (quarter * (v_common - v_cross)).max(0.0),
                    ];
                }
            }
        }
    }
    IntensityTable {
        entries,
        mu_eta,
        delta: params.delta,
    }
}
