use iniqkd_core::sweep::{run_max_distance, sweep_points, SweepConfig};

#[test]
fn sweep_and_endpoint_search_agree() {
    let config = SweepConfig::preset("ed30").unwrap();
    let rows = sweep_points(&config).unwrap();
    for use_ad in [false, true] {
        let last = rows
            .iter()
            .filter(|p| if use_ad { p.r_ad } else { p.r_original } > config.r_floor)
            .map(|p| p.distance_km)
            .fold(f64::NEG_INFINITY, f64::max);
        let md = run_max_distance(&config, use_ad).unwrap();
        assert!(
            (md.distance_km - last).abs() <= config.l_step_km,
            "use_ad={use_ad}: sweep {last} vs search {}",
            md.distance_km
        );
    }
}

#[test]
fn rates_are_finite_and_non_increasing() {
    let rows = sweep_points(&SweepConfig::preset("d20ed15").unwrap()).unwrap();
    for p in &rows {
        for r in [p.r_original, p.r_ad] {
            assert!(r.is_finite() && r >= 0.0);
        }
        assert!(p.b_opt >= 1);
    }
    for w in rows.windows(2) {
        assert!(w[1].r_original <= w[0].r_original + 1e-12);
        assert!(w[1].r_ad <= w[0].r_ad + 1e-12);
    }
}
