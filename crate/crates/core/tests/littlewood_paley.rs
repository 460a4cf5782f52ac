use fblab_core::littlewood_paley::{
    build_partition, build_partition_with_order, paraproduct_split, DyadicDecomposition,
};
use fblab_core::random::{random_field, Spectrum, Support};
use fblab_core::spectral::{grid_product, GridSpec};
use proptest::prelude::*;

#[test]
fn paraproduct_pieces_add_up_to_the_product() {
    let part = build_partition(GridSpec::cube(32).unwrap()).unwrap();
    let (lo, hi) = part.covered_band();
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let u = random_field(part.grid, 1, Support::new(lo, hi), Spectrum::Flat, t);
        let v = random_field(part.grid, 1, Support::new(lo, hi), Spectrum::PowerLaw(-1.0), t + 1000);
        let split = paraproduct_split(&u, &v, &part).unwrap();
        let uv = grid_product(&u, &v).unwrap();
        worst = worst.max(split.sum().sub(&uv).unwrap().l2_norm() / uv.l2_norm());
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn blocks_reconstruct_the_band() {
    let part = build_partition(GridSpec::cube(32).unwrap()).unwrap();
    let f = random_field(part.grid, 2, Support::new(0.5, 16.0), Spectrum::Flat, 3);
    let dec = DyadicDecomposition::new(&f, &part).unwrap();
    // the partition only sums to one on the covered band
    let band = part.restrict_to_band(&f);
    let rec = part.restrict_to_band(&dec.reconstruct());
    assert!(rec.sub(&band).unwrap().l2_norm() <= 1e-13 * band.l2_norm());
}

#[test]
fn j_range_follows_grid() {
    for (n, jmax) in [(16, 2), (32, 3), (64, 4)] {
        let p = build_partition(GridSpec::cube(n).unwrap()).unwrap();
        assert_eq!((p.j_min, p.j_max), (0, jmax));
    }
    assert!(build_partition_with_order(GridSpec::cube(16).unwrap(), 2).is_err());
}

proptest! {
    #[test]
    fn unity_at_random_radii(t in 0.0f64..1.0, order in 3u32..7) {
        let p = build_partition_with_order(GridSpec::new(64, 1).unwrap(), order).unwrap();
        let (lo, hi) = p.covered_band();
        let r = lo + t * (hi - lo);
        let s: f64 = p.range().map(|j| p.phi(r * 2f64.powi(-j))).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }
}
