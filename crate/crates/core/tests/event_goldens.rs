// Digits are copied verbatim from a 40-digit reference computation.
#![allow(clippy::excessive_precision)]

//! Event statistics against an independent 40-digit transcription of the
//! detection model.

use iniqkd_core::channel::ProtocolParams;
use iniqkd_core::events::overall_stats;

struct Case {
    e_d: f64,
    delta: f64,
    mu: f64,
    l_km: f64,
    /// (gain, e_ph, e_bit) for X1, X2, X3
    want: [[f64; 3]; 3],
}

const CASES: &[Case] = &[
    Case {
        e_d: 0.0,
        delta: 0.0,
        mu: 0.1,
        l_km: 50.0,
        want: [
            [0.0045540347515793234, 0.028519809304375468, 1.740647373647078e-5],
            [1.0465152643433634e-5, 0.041966334433805261, 1.740647373647078e-5],
            [1.0465152643433634e-5, 0.041966334433805261, 1.740647373647078e-5],
        ],
    },
    Case {
        e_d: 0.3,
        delta: 0.0,
        mu: 0.2,
        l_km: 100.0,
        want: [
            [0.0028881071510041769, 0.020445062616464836, 0.074917122141780267],
            [3.1225681227469275e-6, 0.022484632770488421, 0.17098934601055224],
            [3.1225666540991216e-6, 0.022578239261737347, 0.030185566772402156],
        ],
    },
    Case {
        e_d: 0.15,
        delta: 0.2,
        mu: 0.05,
        l_km: 200.0,
        want: [
            [7.2651803801757537e-5, 0.002616183690547099, 0.12665012124848612],
            [2.2748826941382633e-9, 0.0043611969841517974, 0.16135649368128194],
            [2.2748826939405341e-9, 0.004361216748557876, 0.10193385615154445],
        ],
    },
    Case {
        e_d: 0.0,
        delta: 0.25,
        mu: 0.5,
        l_km: 0.0,
        want: [
            [0.064454152457045929, 0.24338152225772287, 0.14325323926735447],
            [0.0024012901929988917, 0.30583771801009785, 0.14325323926735447],
            [0.0024012901929988917, 0.30583771801009785, 0.14325323926735447],
        ],
    },
    Case {
        e_d: 0.5,
        delta: 0.1,
        mu: 1.0,
        l_km: 20.0,
        want: [
            [0.080353093863251981, 0.33063727200232305, 0.13745479765044686],
            [0.0023202120983027123, 0.30690956577674032, 0.30451221135253377],
            [0.0023193944838187592, 0.32948772832649567, 0.11525221481041082],
        ],
    },
];

#[test]
fn overall_statistics_match_reference() {
    for c in CASES {
        let p = ProtocolParams {
            e_d: c.e_d,
            delta: c.delta,
            mu: c.mu,
            ..Default::default()
        };
        let stats = overall_stats(&p, c.l_km);
        for (event, want) in stats.events.iter().zip(&c.want) {
            let got = [event.gain, event.e_ph, event.e_bit];
            for (g, w) in got.iter().zip(want) {
                let rel = ((g - w) / w).abs();
                assert!(rel < 1e-11, "e_d={} delta={} mu={} l={}: {g} vs {w}", c.e_d, c.delta, c.mu, c.l_km);
            }
        }
    }
}
