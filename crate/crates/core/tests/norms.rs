use fblab_core::exponents::{make_smooth_exponent, ExponentField, ExponentRecipe, Profile, Regularity};
use fblab_core::heat::heat_propagate;
use fblab_core::littlewood_paley::build_partition;
use fblab_core::norms::{
    chemin_lerner_norm, fourier_besov_norm, modular, variable_fourier_besov_norm, variable_lebesgue_norm,
    Integrability, LUXEMBURG_TOL,
};
use fblab_core::random::{random_field, Spectrum, Support};
use fblab_core::spectral::{inverse_transform, GridSpec};
use fblab_core::timeseries::TimeGrid;
use proptest::prelude::*;

fn exponent(which: usize, grid: GridSpec) -> ExponentField {
    let (base, amplitude, profile) = [
        (3.0, 1.0, Profile::Trig),
        (4.0, 1.0, Profile::Bump),
        (2.5, 0.5, Profile::Step),
    ][which];
    ExponentField::from_recipe(
        ExponentRecipe::Profiled {
            base,
            amplitude,
            profile,
        },
        grid,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bisection_certificate(seed in any::<u64>(), which in 0usize..3) {
        let g = GridSpec::cube(8).unwrap();
        let p = exponent(which, g);
        let f = inverse_transform(&random_field(g, 1, Support::new(1.0, 3.0), Spectrum::Flat, seed));
        let lam = variable_lebesgue_norm(&f, &Integrability::Variable(p.clone())).unwrap().value;
        let above = modular(&f.scaled(1.0 / (lam * (1.0 + 2.0 * LUXEMBURG_TOL))), &p).unwrap();
        let below = modular(&f.scaled(1.0 / (lam * (1.0 - 2.0 * LUXEMBURG_TOL))), &p).unwrap();
        prop_assert!(above <= 1.0 && below >= 1.0, "{above} {below}");
    }

    #[test]
    fn every_norm_is_homogeneous(seed in any::<u64>(), k in 0usize..3, neg in any::<bool>()) {
        let c = [1e-3, 1.0, 1e3][k] * if neg { -1.0 } else { 1.0 };
        let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
        let g = part.grid;
        let u = random_field(g, 1, Support::new(1.0, 7.0), Spectrum::Flat, seed);
        let p = Integrability::Variable(make_smooth_exponent(3.0, 1.0, Profile::Trig, g).unwrap());
        let s = Regularity::profiled(0.5, 0.25, Profile::Bump, g);
        let times = TimeGrid::geometric(1.0, 8, 1.3).unwrap();
        let norms = |u: &fblab_core::spectral::SpectralField| -> Vec<f64> {
            let flow = heat_propagate(u, &times).unwrap();
            vec![
                variable_lebesgue_norm(&inverse_transform(u), &p).unwrap().value,
                fourier_besov_norm(u, 0.5, 3.0, 2.0, &part).unwrap().value,
                variable_fourier_besov_norm(u, &s, &p, &Integrability::Constant(1.0), &part).unwrap().value,
                chemin_lerner_norm(&flow, 2.0, &s, &p, 1.0, &part).unwrap().value,
            ]
        };
        for (a, b) in norms(&u.scaled(c)).into_iter().zip(norms(&u)) {
            prop_assert!((a - c.abs() * b).abs() <= 1e-8 * c.abs() * b, "{a} vs {}", c.abs() * b);
        }
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
        let g = part.grid;
        let u = random_field(g, 1, Support::new(1.0, 7.0), Spectrum::Flat, seed);
        let v = random_field(g, 1, Support::new(1.0, 7.0), Spectrum::PowerLaw(-2.0), !seed);
        let p = Integrability::Variable(make_smooth_exponent(4.0, 1.0, Profile::Bump, g).unwrap());
        let s = Regularity::Constant(1.0);
        let r = Integrability::Constant(2.0);
        let n = |f: &fblab_core::spectral::SpectralField| variable_fourier_besov_norm(f, &s, &p, &r, &part).unwrap().value;
        let (a, b, ab) = (n(&u), n(&v), n(&u.add(&v).unwrap()));
        prop_assert!(ab <= a + b + 1e-8 * (a + b));
    }
}

#[test]
fn variable_r_matches_constant_r_when_constant() {
    let part = build_partition(GridSpec::cube(16).unwrap()).unwrap();
    let u = random_field(part.grid, 1, Support::new(1.0, 7.0), Spectrum::Flat, 9);
    let p = Integrability::Constant(3.0);
    let s = Regularity::Constant(0.0);
    let a = variable_fourier_besov_norm(&u, &s, &p, &Integrability::Constant(2.0), &part)
        .unwrap()
        .value;
    let b = fourier_besov_norm(&u, 0.0, 3.0, 2.0, &part).unwrap().value;
    assert!((a - b).abs() <= 1e-12 * b);
}
