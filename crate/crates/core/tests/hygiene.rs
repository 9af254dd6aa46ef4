use awi_core::lindblad::{
    evolve, evolve_observed, hygiene, liouvillian_residual, steady_state, DensityMatrix4, IntegratorControl,
};
use awi_core::scheme::dimensionless_preset;
use awi_core::mcwf::{run_trajectory_observed, TrajectoryConfig};
use awi_core::{ComplexMatrix4, Level, SchemeParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SchemeParams> {
    (
        (0.0..5.0f64, 0.0..100.0f64, 0.0..50.0f64),
        (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64),
        (0.1..5.0f64, 0.0..20.0f64, 0.0..20.0f64, 0.01..5.0f64),
    )
        .prop_map(|((op, os, ow), (dp, ds, dw), (g21, g32, g34, l))| SchemeParams {
            omega_p: op,
            omega_s: os,
            omega_w: ow,
            delta_p: dp,
            delta_s: ds,
            delta_w: dw,
            gamma_21: g21,
            gamma_32: g32,
            gamma_34: g34,
            lambda_pump: l,
        })
}

fn state() -> impl Strategy<Value = DensityMatrix4> {
    proptest::collection::vec(-1.0..1.0f64, 32).prop_map(|v| {
        let a = ComplexMatrix4::from_fn(|r, c| Complex64::new(v[2 * (4 * r + c)], v[2 * (4 * r + c) + 1]));
        let m = a * a.adjoint();
        let tr = m.trace();
        DensityMatrix4::new(m / tr).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn evolution_preserves_density_matrix(p in params(), rho in state()) {
        let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
        evolve_observed(&rho, &p, 3.0, &IntegratorControl::default(), |_, r| {
            let (t, h, m) = hygiene(r);
            worst = (worst.0.max(t), worst.1.max(h), worst.2.min(m));
        }).unwrap();
        prop_assert!(worst.0 < 1e-9, "trace drift {}", worst.0);
        prop_assert!(worst.1 < 1e-10, "hermiticity {}", worst.1);
        prop_assert!(worst.2 > -1e-10, "population {}", worst.2);
    }

    #[test]
    fn steady_state_is_stationary(p in params()) {
        let rho = steady_state(&p).unwrap();
        prop_assert!(liouvillian_residual(&rho, &p) < 1e-10);
        let (t, h, m) = hygiene(&rho);
        prop_assert!(t < 1e-9 && h < 1e-10 && m > -1e-10);
    }

    #[test]
    fn trajectory_states_stay_normalized(p in params(), seed in any::<u64>()) {
        let cfg = TrajectoryConfig { initial_level: Level::Three, ..TrajectoryConfig::for_params(&p, 0.5, seed) };
        let mut worst = 0.0f64;
        run_trajectory_observed(&p, &cfg, |_, psi| worst = worst.max((psi.norm() - 1.0).abs())).unwrap();
        prop_assert!(worst < 1e-12, "{}", worst);
    }
}

fn max_entry_diff(a: &DensityMatrix4, b: &DensityMatrix4) -> f64 {
    (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn long_evolution_reaches_steady_state() {
    let p = dimensionless_preset();
    let control = IntegratorControl::default();
    let rho_ss = steady_state(&p).unwrap();
    // slowest Liouvillian decay is about 0.2, so t = 150 leaves e^-30
    let late = evolve(&DensityMatrix4::pure_level(Level::Two), &p, 150.0, &control).unwrap();
    assert!(max_entry_diff(&late, &rho_ss) < 1e-6);
    let held = evolve(&rho_ss, &p, 50.0, &control).unwrap();
    assert!(max_entry_diff(&held, &rho_ss) < 1e-8);
}

#[test]
fn trace_holds_over_long_horizon() {
    let p = dimensionless_preset();
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    evolve_observed(&DensityMatrix4::pure_level(Level::One), &p, 1000.0, &IntegratorControl::default(), |_, r| {
        let (t, h, m) = hygiene(r);
        worst = (worst.0.max(t), worst.1.max(h), worst.2.min(m));
    })
    .unwrap();
    assert!(worst.0 < 1e-9 && worst.1 < 1e-10 && worst.2 > -1e-10, "{worst:?}");
}
