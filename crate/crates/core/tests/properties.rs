//! Invariants of the spectra over randomly drawn stable parameter sets.

use polaritron::langevin::{build_drift_matrix, eigensolve, weak_coupling_approx};
use polaritron::model::units::{hz, khz};
use polaritron::model::{Mode, PhysicalParams};
use polaritron::spectra::{
    analyze_sidebands, coldest_angle, heterodyne_spectrum, mechanical_spectrum, occupation, sum_rule_check,
    FrequencyGrid, SidebandOptions,
};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn grid() -> FrequencyGrid {
    FrequencyGrid::symmetric(khz(400.0), hz(50.0)).unwrap()
}

/// Red-detuned points around the reference operating point with baths broad
/// enough to resolve on a 50 Hz grid.
fn params() -> impl Strategy<Value = PhysicalParams> {
    (-260.0f64..-60.0, 5.0f64..40.0, 0.0f64..20.0, 0.2f64..2.0, 1e2f64..1e5, 0.0f64..10.0)
        .prop_map(|(delta, gx, gy, gm, n_th, gn)| PhysicalParams {
            delta: khz(delta),
            g_x: khz(gx),
            g_y: khz(gy),
            gamma_mx: khz(gm),
            gamma_my: khz(gm),
            n_th_x: n_th,
            n_th_y: n_th,
            gamma_nx: khz(gn),
            gamma_ny: khz(0.5 * gn),
            ..Default::default()
        })
        .prop_filter("stable", |p| eigensolve(&build_drift_matrix(p)).map(|s| s.is_stable()).unwrap_or(false))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn commutator_sum_rule(p in params(), deg in 0.0f64..180.0) {
        let g = FrequencyGrid::symmetric(khz(2000.0), hz(50.0)).unwrap();
        let r = sum_rule_check(&p, deg.to_radians(), &g).unwrap();
        prop_assert!(r.abs() < 1e-2, "{r}");
    }

    #[test]
    fn orthogonal_pair_conserves_total(p in params(), deg in 0.0f64..180.0) {
        let g = grid();
        let th = deg.to_radians();
        let total = occupation(&p, 0.0, &g).unwrap() + occupation(&p, FRAC_PI_2, &g).unwrap();
        let rotated = occupation(&p, th, &g).unwrap() + occupation(&p, th + FRAC_PI_2, &g).unwrap();
        prop_assert!((rotated / total - 1.0).abs() < 1e-9, "{rotated} vs {total}");
    }

    #[test]
    fn spectra_are_physical(p in params()) {
        let g = grid();
        let het = heterodyne_spectrum(&p, &g).unwrap();
        let floor = 1.0 - p.eta;
        prop_assert!(het.values.iter().all(|&v| v >= floor - 1e-9));
        let (bb, bdb) = mechanical_spectrum(&p, 0.3, &g).unwrap();
        prop_assert!(bb.values.iter().all(|&v| v >= -1e-9 * bb.peak().1));
        prop_assert!(bdb.values.iter().all(|&v| v >= -1e-9 * bdb.peak().1));
    }

    #[test]
    fn far_detuned_heterodyne_is_shot_noise(p in params(), heat in 0.1f64..10.0) {
        // thermal decoherence n̄ Γ_m up to 2π × 10 kHz, the range of a room-temperature bath
        let n_th = khz(heat) / p.gamma_mx;
        let p = PhysicalParams { n_th_x: n_th, n_th_y: n_th, ..p };
        let g = FrequencyGrid::symmetric(khz(1500.0), hz(500.0)).unwrap();
        let het = heterodyne_spectrum(&p, &g).unwrap();
        let freqs = eigensolve(&build_drift_matrix(&p)).unwrap().frequencies();
        let clear = |w: f64| freqs.iter().all(|f| (w - f).abs() >= 5.0 * p.kappa && (w + f).abs() >= 5.0 * p.kappa);
        for (w, v) in g.points().zip(&het.values) {
            if clear(w) {
                prop_assert!((v - 1.0).abs() < 0.02, "{} kHz: {v}", w / khz(1.0));
            }
        }
    }

    #[test]
    fn weak_coupling_limit(delta in -260.0f64..-20.0, frac in 0.001f64..1.0) {
        let mut p = PhysicalParams { delta: khz(delta), g_y: 0.0, ..Default::default() };
        p.g_x = frac * p.kappa / 40.0;
        let approx = weak_coupling_approx(&p, Mode::X);
        let sol = eigensolve(&build_drift_matrix(&p)).unwrap();
        let x = sol.pairs.iter().max_by(|a, b| a.composition.x.total_cmp(&b.composition.x)).unwrap();
        prop_assert!((x.frequency() - approx.omega_eff).abs() < 1e-3 * p.omega_x0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn closed_form_coldest_angle_beats_scan(p in params()) {
        let g = FrequencyGrid::symmetric(khz(400.0), hz(200.0)).unwrap();
        let ca = coldest_angle(&p, &g).unwrap();
        let mut best = (0.0, f64::INFINITY);
        for deg in -90..90 {
            let th = (deg as f64).to_radians();
            let n = occupation(&p, th, &g).unwrap();
            prop_assert!(n >= ca.n_min * (1.0 - 1e-9));
            if n < best.1 {
                best = (th, n);
            }
        }
        let sep = (ca.theta - best.0).abs().to_degrees();
        let sep = sep.min(180.0 - sep);
        // a nearly isotropic ellipse leaves the minimum ill-defined
        let contrast = (ca.n_max - ca.n_min) / ca.n_max;
        prop_assert!(sep <= 1.0 || contrast < 1e-3, "{} vs {}", ca.theta.to_degrees(), best.0.to_degrees());
    }

    #[test]
    fn weak_probe_reads_bath_occupation(n_th in 0.5f64..20.0, delta_off in -5.0f64..5.0) {
        // the optical damping is three orders below the bath coupling
        let mut p = PhysicalParams {
            g_x: hz(200.0),
            g_y: 0.0,
            gamma_mx: hz(500.0),
            n_th_x: n_th,
            gamma_nx: 0.0,
            gamma_ny: 0.0,
            ..Default::default()
        };
        p.delta = -p.omega_x0 + khz(delta_off);
        let a = analyze_sidebands(&p, &FrequencyGrid::default(), &SidebandOptions::default()).unwrap();
        prop_assert!((a.inferred_n / n_th - 1.0).abs() < 0.05, "{} vs {n_th}", a.inferred_n);
    }
}
