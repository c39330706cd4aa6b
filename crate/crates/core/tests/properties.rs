//! Property tests for the structural invariants: operator identities,
//! projection behavior, norm algebra, quadrature consistency, and
//! persistence round-trips over randomized inputs.

mod support;

use proptest::prelude::*;

use nsv_core::delay::DelaySpec;
use nsv_core::forcing::Forcing;
use nsv_core::io;
use nsv_core::spectral::{
    apply_stokes, convection, leray_project, trilinear_b, Grid, ModeSeed, Space, SpectralField,
};
use nsv_core::stepper::{Scheme, Stepper};
use nsv_core::PhysicalParams;

const REL_TOL: f64 = 1e-12;

fn grids() -> impl Strategy<Value = Grid> {
    prop_oneof![
        Just(Grid::new(2, 4, 2.0 * std::f64::consts::PI).unwrap()),
        Just(Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap()),
        Just(Grid::new(2, 16, 5.0).unwrap()),
        Just(Grid::new(3, 4, 2.0 * std::f64::consts::PI).unwrap()),
        Just(Grid::new(3, 8, 3.0).unwrap()),
    ]
}

fn fields() -> impl Strategy<Value = SpectralField> {
    (grids(), any::<u64>(), 0.05f64..1.0, 0.5f64..2.5)
        .prop_map(|(grid, seed, amp, decay)| SpectralField::random(grid, seed, amp, decay))
}

fn field_triples() -> impl Strategy<Value = (SpectralField, SpectralField, SpectralField)> {
    (grids(), any::<u64>(), 0.05f64..1.0).prop_map(|(grid, seed, amp)| {
        (
            SpectralField::random(grid, seed, amp, 1.0),
            SpectralField::random(grid, seed.wrapping_add(1), amp, 1.5),
            SpectralField::random(grid, seed.wrapping_add(2), amp, 2.0),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn convection_pairing_vanishes_on_its_second_argument((u, v, _w) in field_triples()) {
        let scale = u.norm_sq(Space::V).sqrt() * v.norm_sq(Space::V) + 1e-300;
        let b_uvv = trilinear_b(&u, &v, &v).unwrap();
        prop_assert!(b_uvv.abs() <= REL_TOL * scale, "b(u,v,v) = {b_uvv:e}, scale {scale:e}");
    }

    #[test]
    fn convection_pairing_is_antisymmetric((u, v, w) in field_triples()) {
        let buvw = trilinear_b(&u, &v, &w).unwrap();
        let buwv = trilinear_b(&u, &w, &v).unwrap();
        let scale = u.norm_sq(Space::V).sqrt()
            * v.norm_sq(Space::V).sqrt()
            * w.norm_sq(Space::V).sqrt()
            + 1e-300;
        prop_assert!(
            (buvw + buwv).abs() <= REL_TOL * scale,
            "b(u,v,w) + b(u,w,v) = {:e}",
            buvw + buwv
        );
    }

    #[test]
    fn projection_removes_divergence_and_is_idempotent((u, v, _w) in field_triples()) {
        // The raw product is not solenoidal; its projection must be, and
        // projecting twice must change nothing.
        let raw = convection(&u, &v).unwrap();
        let once = leray_project(&raw);
        prop_assert!(once.divergence_linf() <= 1e-12 * (1.0 + once.max_abs()));
        let twice = leray_project(&once);
        let drift = once
            .coeffs()
            .iter()
            .zip(twice.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        prop_assert!(drift <= 1e-15 * (1.0 + once.max_abs()), "projection drift {drift:e}");
    }

    #[test]
    fn random_fields_are_solenoidal_and_reproducible(
        grid in grids(),
        seed in any::<u64>(),
        amp in 0.05f64..1.0,
    ) {
        let a = SpectralField::random(grid, seed, amp, 1.2);
        let b = SpectralField::random(grid, seed, amp, 1.2);
        prop_assert_eq!(a.coeffs(), b.coeffs());
        prop_assert!(a.is_finite());
        prop_assert!(a.divergence_linf() <= 1e-12 * (1.0 + a.max_abs()));
    }

    #[test]
    fn stokes_operator_links_the_norm_ladder(u in fields()) {
        let au = apply_stokes(&u);
        let pair = u.inner(Space::H, &au);
        let v_sq = u.norm_sq(Space::V);
        prop_assert!((pair - v_sq).abs() <= REL_TOL * v_sq.max(1e-300));
        let da_sq = u.norm_sq(Space::DA);
        let au_h = au.norm_sq(Space::H);
        prop_assert!((da_sq - au_h).abs() <= REL_TOL * da_sq.max(1e-300));
    }

    #[test]
    fn norms_scale_quadratically(u in fields(), c in -3.0f64..3.0) {
        let scaled = u.scaled(c);
        for space in [Space::H, Space::V, Space::DA, Space::VDual] {
            let lhs = scaled.norm_sq(space);
            let rhs = c * c * u.norm_sq(space);
            prop_assert!((lhs - rhs).abs() <= REL_TOL * rhs.abs().max(1e-300));
        }
    }

    #[test]
    fn single_modes_follow_the_spectral_weights(
        k1 in -2i64..=2,
        k2 in 1i64..=2,
        re in 0.1f64..1.0,
    ) {
        let grid = Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let u = SpectralField::from_modes(
            grid,
            &[ModeSeed { k: [k1, k2, 0], comp: 0, re, im: 0.3 }],
        )
        .unwrap();
        let ksq = (k1 * k1 + k2 * k2) as f64; // lambda1 = 1 on the 2*pi box
        let h = u.norm_sq(Space::H);
        prop_assert!(h > 0.0);
        prop_assert!((u.norm_sq(Space::V) - ksq * h).abs() <= REL_TOL * ksq * h);
        prop_assert!((u.norm_sq(Space::DA) - ksq * ksq * h).abs() <= REL_TOL * ksq * ksq * h);
        prop_assert!((u.norm_sq(Space::VDual) - h / ksq).abs() <= REL_TOL * h / ksq);
    }

    #[test]
    fn encode_and_decode_are_inverse(grid in grids()) {
        for idx in 0..grid.mode_count() {
            let k = grid.decode_mode(idx);
            prop_assert_eq!(grid.encode_mode(&k).unwrap(), idx);
        }
        let km = grid.kmax();
        prop_assert!(grid.encode_mode(&[km + 1, 0, 0]).is_err());
    }

    #[test]
    fn constant_history_energy_matches_the_closed_form(
        seed in any::<u64>(),
        amp in 0.05f64..0.5,
    ) {
        let grid = Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        let params = PhysicalParams::on_grid(1.0, 1.0, 0.25, grid).unwrap();
        let stepper = Stepper::new(
            params,
            Forcing::zero(grid),
            DelaySpec::none(),
            Scheme::Euler,
        )
        .unwrap();
        let u0 = SpectralField::random(grid, seed, amp, 1.0);
        let state = stepper
            .initial_state(u0.clone(), 0.0, 0.0625, |_| u0.clone())
            .unwrap();
        // Constant history: E_V^2 = ||grad u||^2 (1 + h).
        let expected = u0.norm_sq(Space::V) * (1.0 + params.h);
        let got = state.ev2_norm_sq();
        prop_assert!((got - expected).abs() <= REL_TOL * expected.max(1e-300));
    }
}

proptest! {
    // IO round-trips touch the filesystem; keep the case count small.
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn field_snapshots_round_trip_bitwise(
        grid in grids(),
        seed in any::<u64>(),
        time in -100.0f64..100.0,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        let u = SpectralField::random(grid, seed, 0.4, 1.0);
        io::save_field(&path, &u, time).unwrap();
        let (back, t_back) = io::load_field(&path).unwrap();
        prop_assert_eq!(t_back.to_bits(), time.to_bits());
        prop_assert_eq!(back.grid(), grid);
        for (a, b) in u.coeffs().iter().zip(back.coeffs()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}

// ---------------------------------------------------------------------------
// Non-randomized structural checks that complement the proptest blocks.

#[test]
fn quadrature_helpers_agree_in_the_unweighted_limit() {
    let grid = Grid::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
    let params = PhysicalParams::on_grid(1.0, 1.0, 0.25, grid).unwrap();
    let mut stepper = Stepper::new(
        params,
        Forcing::zero(grid),
        DelaySpec::none(),
        Scheme::Cnab2,
    )
    .unwrap();
    let u0 = SpectralField::random(grid, 5, 0.2, 1.0);
    let mut state = stepper.initial_state(u0.clone(), 0.0, 0.0625, |_| u0.clone()).unwrap();
    let record = stepper.evolve(&mut state, 64).unwrap();
    let n = record.len() - 1;
    let plain = record.trapz(&record.v_sq, 0, n);
    let weighted_zero_limit = record.sigma_trapz(&record.v_sq, 1e-14, 0, n);
    assert!(
        (plain - weighted_zero_limit).abs() <= 1e-9 * plain.abs(),
        "trapz {plain} vs sigma_trapz(0) {weighted_zero_limit}"
    );
    let top = record.window_max(&record.v_sq, 0, n);
    assert!(record.v_sq.iter().all(|&x| x <= top));
}
