use idslab_core::ids::{bc_gap, finite_volume_ids, uniform_grid};
use idslab_core::potential::truncate;
use idslab_core::{BoundaryCondition, BoxSpec, CouplingDist, EnsembleSpec, MagneticField, Profile, Sampler};
use proptest::prelude::*;

fn alloy(a: f64) -> EnsembleSpec {
    EnsembleSpec::Alloy { profile: Profile::unit_cube(), coupling: CouplingDist::Uniform { low: -a, high: a } }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dirichlet_never_exceeds_neumann(seed in any::<u64>(), side in 2usize..6, b in -2.0f64..2.0, a in 0.0f64..3.0) {
        let bx = BoxSpec::cube(2, side, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let grid = uniform_grid(-4.0, 8.0, 49).unwrap();
        let t = bc_gap(&alloy(a.max(1e-3)), &[bx], &MagneticField::planar(2, b).unwrap(), &grid, 3, seed, 0.1).unwrap();
        prop_assert_eq!(t.total_sandwich_violations(), 0);
    }

    #[test]
    fn estimates_are_monotone_and_bounded(seed in any::<u64>(), side in 1usize..6) {
        let bx = BoxSpec::cube(2, side, 0.5, BoundaryCondition::Neumann).unwrap();
        let grid = uniform_grid(-5.0, 20.0, 30).unwrap();
        let est = finite_volume_ids(&alloy(2.0), &bx, &MagneticField::planar(2, 0.4).unwrap(), &grid, 3, seed).unwrap();
        prop_assert!(est.is_monotone());
        let max = bx.n_sites() as f64 / bx.volume();
        prop_assert!(est.values.iter().all(|&v| (0.0..=max).contains(&v)));
    }

    #[test]
    fn truncation_bounds_every_site(seed in any::<u64>(), n in 0.1f64..3.0) {
        let bx = BoxSpec::cube(2, 4, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let s = Sampler::new(&alloy(3.0), &bx).unwrap().sample(seed).unwrap();
        let cut = truncate(&s, n).unwrap();
        for (v, c) in s.values.iter().zip(&cut.values) {
            let expected = if v.abs() < n { *v } else { 0.0 };
            prop_assert_eq!(*c, expected);
        }
    }
}

#[test]
fn reruns_are_identical() {
    let bx = BoxSpec::cube(2, 4, 1.0, BoundaryCondition::Dirichlet).unwrap();
    let grid = uniform_grid(-3.0, 7.0, 21).unwrap();
    let f = MagneticField::planar(2, 0.5).unwrap();
    let a = finite_volume_ids(&alloy(1.0), &bx, &f, &grid, 8, 99).unwrap();
    let b = finite_volume_ids(&alloy(1.0), &bx, &f, &grid, 8, 99).unwrap();
    assert_eq!(a, b);
}
