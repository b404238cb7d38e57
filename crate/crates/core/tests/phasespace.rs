use qdkerr::{
    dynamics::kerr_propagate,
    observables::DensityMatrix,
    phasespace::{carpet, negativity_volume, squeezing_zones, wigner, wigner_at, Axis, PhaseSpaceGrid},
    states::{coherent_state, squeezed_vacuum_state},
    FieldState, Frame, JointState, ModelParams, TruncationPolicy, C64,
};

fn kerr_carpet(s: &FieldState, p: &ModelParams, times: &[f64], x: &Axis) -> PhaseSpaceGrid {
    let traj: Vec<JointState> = times
        .iter()
        .map(|&t| JointState::from_field(&kerr_propagate(s, p, t, Frame::Lab), t, Frame::Lab))
        .collect();
    carpet(&traj, x)
}

fn linspace(stop: f64, rows: usize) -> Vec<f64> {
    (0..=rows).map(|i| stop * i as f64 / rows as f64).collect()
}

fn row_mean(c: &PhaseSpaceGrid, row: usize) -> f64 {
    let h = c.x.step();
    c.x_values()
        .iter()
        .zip(c.values.row(row))
        .map(|(x, v)| x * v * h)
        .sum()
}

#[test]
fn free_coherent_packet_oscillates_rigidly() {
    let s = coherent_state(C64::new(2.0, 0.0), &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.0, 0.0, 0.0);
    let times = linspace(4.0 * std::f64::consts::PI, 64);
    let c = kerr_carpet(&s, &p, &times, &Axis::default());
    for (i, t) in times.iter().enumerate() {
        assert!((row_mean(&c, i) - 2.0 * 2f64.sqrt() * t.cos()).abs() < 1e-9);
    }
    let zones = squeezing_zones(&c, 0.9);
    assert!(zones.zones.is_empty());
    for (_, sigma) in zones.sigma_x {
        assert!((sigma - 0.5f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn coherent_kerr_carpet_revives_and_focuses_at_half_period() {
    let s = coherent_state(C64::new(2.0, 0.0), &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.0, 0.1, 0.0);
    let period = p.kerr_period().unwrap();
    let c = kerr_carpet(&s, &p, &linspace(period, 512), &Axis::default());
    let last = c.rows.len() - 1;
    for (a, b) in c.values.row(0).iter().zip(c.values.row(last)) {
        assert!((a - b).abs() < 1e-6);
    }
    let report = squeezing_zones(&c, 0.4);
    let near_half: Vec<_> = report
        .zones
        .iter()
        .filter(|z| (z.t / period - 0.5).abs() < 0.02)
        .collect();
    assert!(near_half.len() >= 5, "{} zones near T/2", near_half.len());
    assert!(report.zones.windows(2).all(|w| w[0].t <= w[1].t));
}

#[test]
fn squeezed_carpet_is_even_and_never_narrower_than_initial_packet() {
    let s = squeezed_vacuum_state(4.0, &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.0, 0.125, 0.0);
    let period = p.kerr_period().unwrap();
    // wide enough for the anti-squeezed orientation (σ = 2√2)
    let x = Axis::new(-16.0, 16.0, 641);
    let c = kerr_carpet(&s, &p, &linspace(period, 2048), &x);
    for row in c.values.rows() {
        let v = row.to_vec();
        for j in 0..v.len() / 2 {
            assert!((v[j] - v[v.len() - 1 - j]).abs() < 1e-12);
        }
    }
    for integral in c.row_integrals() {
        assert!((integral - 1.0).abs() < 1e-6);
    }
    // the dominant peak is narrowest at t = 0 and at its lab-frame returns
    let report = squeezing_zones(&c, 1.0);
    assert!(report.zones.is_empty(), "{:?}", report.zones.first());
    assert!((report.initial_width - 2.0 * (2f64.ln() / 32.0).sqrt() * 2f64.sqrt()).abs() < 1e-3);
}

#[test]
fn free_wigner_rotates_rigidly() {
    let s = coherent_state(C64::new(1.5, 0.5), &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.3, 0.0, 0.0);
    let t = 0.9;
    let rho0 = DensityMatrix::pure(&s);
    let rho_t = DensityMatrix::pure(&kerr_propagate(&s, &p, t, Frame::Lab));
    let axis = Axis::new(-5.0, 5.0, 41);
    let w = wigner(&rho_t, &axis, &axis);
    let (c, sn) = ((p.omega * t).cos(), (p.omega * t).sin());
    for (i, pv) in axis.values().iter().enumerate() {
        for (j, xv) in axis.values().iter().enumerate() {
            let back = wigner_at(&rho0, c * xv - sn * pv, sn * xv + c * pv);
            assert!((w.values[[i, j]] - back).abs() < 1e-3);
        }
    }
}

#[test]
fn squeezed_kerr_state_at_eighth_period_has_negative_regions() {
    let s = squeezed_vacuum_state(4.0, &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.0, 0.12, 0.0);
    let t = p.kerr_period().unwrap() / 8.0;
    let rho = DensityMatrix::pure(&kerr_propagate(&s, &p, t, Frame::Rotating));
    let axis = Axis::new(-12.0, 12.0, 241);
    let w = wigner(&rho, &axis, &axis);
    assert!((w.integral() - 1.0).abs() < 1e-4, "{}", w.integral());
    assert!(negativity_volume(&w) > 0.01, "{}", negativity_volume(&w));
}

#[test]
fn grid_json_has_schema_and_shape() {
    let s = coherent_state(C64::new(1.0, 0.0), &TruncationPolicy::default()).unwrap();
    let p = ModelParams::resonant(1.0, 0.1, 0.0);
    let c = kerr_carpet(&s, &p, &[0.0, 1.0, 2.0], &Axis::new(-4.0, 4.0, 9));
    let v: serde_json::Value = serde_json::from_str(&c.to_json(&serde_json::json!({"k": 1}))).unwrap();
    assert_eq!(v["schema"], "qdkerr.grid/1");
    assert_eq!(v["row_axis"], "t");
    assert_eq!(v["values"].as_array().unwrap().len(), 3);
    assert_eq!(v["values"][0].as_array().unwrap().len(), 9);
    assert_eq!(v["meta"]["k"], 1);
}
