use psi_core::casm::{residual_strength_analytic, simulate_undrained_triaxial, TriaxialConfig};
use psi_core::cavity::{
    normalized_effective_resistance, total_limit_pressure, CavityGeometry, CavityInput,
};
use psi_core::fixtures::{load_fixtures, SIGMA_V0_EFF};
use psi_core::inversion::{
    cq_factor, effective_resistance_for_method, interpret_profile, invert_psi, CptuRecord, Method,
    RHO_ROUGH,
};
use psi_core::material::{initialize_in_situ, state_parameter};

#[test]
fn simulated_residual_matches_critical_state_closed_form() {
    let fx = load_fixtures().unwrap();
    for row in &fx.materials {
        let mat = row.to_material();
        let init = initialize_in_situ(&mat, SIGMA_V0_EFF).unwrap();
        let psi = state_parameter(&init, &mat);
        let res = simulate_undrained_triaxial(&mat, &init, &TriaxialConfig::default()).unwrap();
        let analytic = residual_strength_analytic(init.p_eff, psi, &mat);
        assert!(
            (res.su_res - analytic).abs() <= 0.01 * analytic,
            "{}: {} vs {analytic}",
            row.material,
            res.su_res
        );
    }
}

#[test]
fn profile_agrees_with_row_by_row_inversion() {
    let fx = load_fixtures().unwrap();
    for series in [
        "reference",
        "lambda",
        "plastic_ratio",
        "friction",
        "poisson",
    ] {
        let rows: Vec<_> = fx.cptu.iter().filter(|r| r.series == series).collect();
        let cfg = fx.interpret_config(rows[0], 1.0).unwrap();
        let records: Vec<CptuRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| CptuRecord {
                depth: i as f64,
                ..fx.synthetic_record(r).unwrap()
            })
            .collect();
        let profile = interpret_profile(&records, &cfg, &Method::ALL).unwrap();
        for (rec, out) in records.iter().zip(&profile) {
            for m in Method::ALL {
                let direct = effective_resistance_for_method(m, rec, &cfg)
                    .and_then(|q| invert_psi(q, &cfg.params(m)?))
                    .ok();
                assert_eq!(out.psi(m), direct, "{series} depth {} {m}", rec.depth);
            }
        }
    }
}

#[test]
fn beta_round_trip_over_smooth_series() {
    let fx = load_fixtures().unwrap();
    let mut worst: f64 = 0.0;
    for row in fx.smooth_rows() {
        let rec = CptuRecord {
            u1: None,
            ..fx.synthetic_record(row).unwrap()
        };
        let cfg = fx.interpret_config(row, 1.0).unwrap();
        let q = effective_resistance_for_method(Method::ThisWork, &rec, &cfg).unwrap();
        let psi = invert_psi(q, &cfg.params(Method::ThisWork).unwrap()).unwrap();
        worst = worst.max((psi - row.psi_0).abs());
    }
    assert!(worst < 0.06, "worst beta round-trip error {worst}");
}

#[test]
fn cone_factor_shifts_psi_by_lambda_ln_cq() {
    let fx = load_fixtures().unwrap();
    for row in fx.cptu.iter().filter(|r| r.series == "rough") {
        let rec = fx.synthetic_record(row).unwrap();
        let mat = fx.series_material(&row.series, &row.material).unwrap();
        let c_q = cq_factor(RHO_ROUGH, mat.m_tc()).unwrap();
        let psi = |c: f64| {
            let cfg = fx.interpret_config(row, c).unwrap();
            let q = effective_resistance_for_method(Method::ThisWork, &rec, &cfg).unwrap();
            invert_psi(q, &cfg.params(Method::ThisWork).unwrap()).unwrap()
        };
        let shift = psi(c_q) - psi(1.0);
        assert!(
            (shift - mat.lambda * c_q.ln()).abs() < 1e-12,
            "{}",
            row.material
        );
    }
}

#[test]
fn cavity_total_and_effective_paths_agree() {
    let fx = load_fixtures().unwrap();
    for row in &fx.cptu {
        let mat = fx.series_material(&row.series, &row.material).unwrap();
        let init = initialize_in_situ(&mat, SIGMA_V0_EFF).unwrap();
        let input = CavityInput::for_material(&mat, init.p_eff, row.psi_0, 0.0);
        for geom in [CavityGeometry::Spherical, CavityGeometry::Cylindrical] {
            let r = total_limit_pressure(&input, &mat, geom).unwrap();
            let direct = normalized_effective_resistance(row.psi_0, &mat, geom);
            assert!((r.q_eff_bar - direct).abs() < 1e-12);
            assert!((r.q_bar_p * (1.0 - r.b_bar_q) + 1.0 - direct).abs() < 1e-12);
            assert!(r.sigma_c >= r.sigma_c_eff && r.u_c >= 0.0);
        }
    }
}
