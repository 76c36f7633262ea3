mod common;

use proptest::prelude::*;

use spflow::fixtures::{self, winding_factor};
use spflow::maslov;
use spflow::matfun;
use spflow::oddflow::{self, CylinderFamily};
use spflow::oracle;
use spflow::relindex::{self, ProjectionPair};
use spflow::specflow::{self, FlowConfig, Route};
use spflow::{AElement, AlgebraShape, CMatrix, HermPath};

fn flow(p: &HermPath) -> Vec<i64> {
    specflow::spectral_flow(p, Route::Winding, &FlowConfig::default()).unwrap().value.components
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn jacobi_agrees_with_library_eigensolver(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = common::rng(seed);
        let h = fixtures::random_hermitian(&mut r, n, 2.0);
        let mut want = matfun::eig_hermitian(&h).unwrap().values;
        want.sort_by(f64::total_cmp);
        let got = oracle::jacobi_eigenvalues(&h);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn det_winding_of_a_winding_loop(seed in any::<u64>(), n in 1usize..=3, w in -3i64..=3) {
        let mut r = common::rng(seed);
        let samples = 64;
        let base = fixtures::random_unitary_loop(&mut r, n, samples, 0.4);
        let loop_: Vec<CMatrix> = base
            .into_iter()
            .enumerate()
            .map(|(j, u)| u * winding_factor(n, w, std::f64::consts::TAU * j as f64 / samples as f64))
            .collect();
        prop_assert_eq!(matfun::det_phase_winding(&loop_, 1e-12).unwrap(), w);
    }

    #[test]
    fn stabilizing_by_a_positive_constant_keeps_the_flow(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let shape = common::shape(&mut r, true);
        let p = common::valid_path(&mut r, &shape, 1, 24);
        let one = HermPath::constant(&AElement::scalar(&shape, 1, 1.0), 24).unwrap();
        prop_assert_eq!(flow(&specflow::direct_sum(&p, &one).unwrap()), flow(&p));
    }

    #[test]
    fn relative_index_is_antisymmetric(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let shape = common::shape(&mut r, true);
        let p = fixtures::random_projection_element(&mut r, &shape, 1);
        let q = fixtures::random_projection_element(&mut r, &shape, 1);
        let pq = ProjectionPair::new(p, q).unwrap();
        let a = relindex::rel_index_fredholm(&pq).unwrap();
        let b = relindex::rel_index_fredholm(&pq.swap()).unwrap();
        prop_assert_eq!(a.neg(), b);
    }

    #[test]
    fn maslov_of_a_constant_transverse_pair_vanishes(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let shape = common::shape(&mut r, true);
        let [a, b, _] = common::transverse_triple(&mut r, &shape, 1);
        let lp = maslov::LagrangianPath::from_fn(fixtures::uniform_grid(8), |_| (a.clone(), b.clone())).unwrap();
        prop_assert!(maslov::maslov_pair(&lp, 1e-6).unwrap().value.is_zero());
    }

    #[test]
    fn chern_number_of_a_constant_family_vanishes(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = common::rng(seed);
        let p = fixtures::random_projection(&mut r, n, 1);
        let v = matfun::eig_hermitian(&p).unwrap().frame_where(|x| x > 0.5);
        let grid = 8;
        let fam = CylinderFamily {
            projections: vec![vec![p.clone(); grid + 1]; grid],
            bottom: vec![v.clone(); grid],
            top: vec![v; grid],
        };
        prop_assert_eq!(oddflow::bott_beta_cylinder(&fam).unwrap(), 0);
    }
}

#[test]
fn shape_generator_respects_desk_scale() {
    let mut r = common::rng(5);
    for _ in 0..50 {
        let s: AlgebraShape = common::shape(&mut r, true);
        assert!(s.blocks.iter().all(|b| b.dim <= 3));
    }
}
