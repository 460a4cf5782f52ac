use fblab_core::littlewood_paley::build_partition;
use fblab_core::random::{random_field, random_solenoidal, Spectrum, Support};
use fblab_core::solvers::{scaling_check, Nonlinearity, Solver, SolverConfig, System};
use fblab_core::spectral::{divergence_residual, GridSpec};
use fblab_core::timeseries::TimeGrid;
use proptest::prelude::*;

fn quick(system: System) -> SolverConfig {
    let mut c = SolverConfig::new(system, 16);
    c.times = TimeGrid::geometric(1.0, 24, 1.15).unwrap();
    c.c_fit = Some(0.01);
    c
}

#[test]
fn bilinear_in_each_argument() {
    let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
    for system in [System::NavierStokes, System::KellerSegel] {
        let op = Nonlinearity::new(system, &part, false).unwrap();
        let (u, v) = match system {
            System::NavierStokes => (
                random_solenoidal(part.grid, Support::new(1.0, 6.0), Spectrum::Flat, 1).unwrap(),
                random_solenoidal(part.grid, Support::new(1.0, 6.0), Spectrum::Flat, 2).unwrap(),
            ),
            System::KellerSegel => (
                random_field(part.grid, 1, Support::new(1.0, 6.0), Spectrum::Flat, 1),
                random_field(part.grid, 1, Support::new(1.0, 6.0), Spectrum::Flat, 2),
            ),
        };
        let base = op.eval(&u, &v).unwrap();
        for a in [-1.0, 0.5, 3.0] {
            for b in [-1.0, 0.5, 3.0] {
                let scaled = op.eval(&u.scaled(a), &v.scaled(b)).unwrap();
                let err = scaled.sub(&base.scaled(a * b)).unwrap().l2_norm();
                assert!(err <= 1e-12 * (a * b).abs() * base.l2_norm(), "{system:?} a={a} b={b}");
            }
        }
    }
}

#[test]
fn ns_run_stays_solenoidal_and_mean_free() {
    let s = Solver::new(quick(System::NavierStokes)).unwrap();
    let u0 = random_solenoidal(s.grid, Support::new(1.0, 6.0), Spectrum::Flat, 11).unwrap();
    let y = s.free_part(&u0, None).unwrap();
    let u0 = u0.scaled(0.3 * s.eta(0.01) / s.space.norm(&y).unwrap());
    let out = s.solve(&u0, None).unwrap();
    assert!(out.record.certified && out.record.passes, "{:?}", out.record.verdicts);
    for snap in &out.solution.snapshots {
        assert!(divergence_residual(snap) <= 1e-10);
        assert_eq!(snap.zero_mode(), 0.0);
    }
}

#[test]
fn ks_run_keeps_zero_mode() {
    let s = Solver::new(quick(System::KellerSegel)).unwrap();
    let u0 = random_field(s.grid, 1, Support::new(1.0, 6.0), Spectrum::PowerLaw(-1.0), 12);
    let y = s.free_part(&u0, None).unwrap();
    let u0 = u0.scaled(0.3 * s.eta(0.01) / s.space.norm(&y).unwrap());
    let out = s.solve(&u0, None).unwrap();
    assert!(out.record.passes, "{:?}", out.record.verdicts);
    assert!(out.solution.snapshots.iter().all(|u| u.zero_mode() == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn critical_norms_are_scale_invariant(seed in any::<u64>(), k in 1u32..3, p in 2.0f64..6.0, ks in any::<bool>()) {
        let part = build_partition(GridSpec::cube(32).unwrap()).unwrap();
        let system = if ks { System::KellerSegel } else { System::NavierStokes };
        let u = random_field(part.grid, system.components(), Support::new(1.5, 2.9), Spectrum::Flat, seed);
        let r = scaling_check(system, 2f64.powi(k as i32), &u, p, &part).unwrap();
        prop_assert!(r.passes, "{}", r.relative_difference);
    }
}
