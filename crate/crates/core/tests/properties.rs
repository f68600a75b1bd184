use std::f64::consts::PI;

use proptest::prelude::*;

use phasenls::fields::{dealias, translate};
use phasenls::integrator::step_rk4;
use phasenls::presets::{gaussian, random_smooth};
use phasenls::twobody::{correlation_defect, product_state};
use phasenls::units::{energy_scale_forms, UnitsCard};
use phasenls::{Grid, KnTerm, Model, ModelSpec, NonlinearTerms};

// Coarse on purpose: roundoff in the terms grows like k_max^(4k).
fn circle() -> Grid {
    Grid::one_d(16, 2.0 * PI).unwrap()
}

fn scale(t: &NonlinearTerms) -> f64 {
    t.h_r.max_abs().max(t.h_i.max_abs()).max(1.0)
}

fn kn_spec() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (-0.3..0.3f64).prop_map(ModelSpec::smpe),
        ((1u32..=3), (1u32..=3), (-0.1..0.1f64)).prop_map(|(k, n, c)| ModelSpec::general_kn(vec![KnTerm::new(k, n, c).unwrap()])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn terms_are_homogeneous(seed in 0u64..1000, lambda in 0.1..20.0f64, alpha in -PI..PI, spec in kn_spec()) {
        let model = Model::new(spec, circle()).unwrap();
        let psi = random_smooth(circle(), seed, 4).unwrap();
        let a = model.nonlinear_terms(&psi).unwrap();
        let b = model.nonlinear_terms(&psi.rescaled(lambda, alpha).unwrap()).unwrap();
        prop_assert!(a.max_deviation(&b).unwrap() / scale(&a) < 1e-11);
    }

    #[test]
    fn smpe_is_conjugation_even(seed in 0u64..1000, c in -0.3..0.3f64) {
        let model = Model::new(ModelSpec::smpe(c), circle()).unwrap();
        let psi = random_smooth(circle(), seed, 4).unwrap();
        let a = model.nonlinear_terms(&psi).unwrap();
        let b = model.nonlinear_terms(&psi.conj()).unwrap();
        let s = scale(&a);
        prop_assert!(a.h_r.minus(&b.h_r).unwrap().max_abs() / s < 1e-12);
        prop_assert!(a.h_i.plus(&b.h_i).unwrap().max_abs() / s < 1e-12);
    }

    #[test]
    fn terms_commute_with_grid_shifts(seed in 0u64..1000, cells in 0usize..16, spec in kn_spec()) {
        let grid = circle();
        let model = Model::new(spec, grid).unwrap();
        let psi = random_smooth(grid, seed, 4).unwrap();
        let shift = [cells as f64 * grid.dx()];
        let moved = phasenls::WaveFunction::new(translate(psi.field(), &shift).unwrap()).unwrap();
        let a = model.nonlinear_terms(&psi).unwrap();
        let b = model.nonlinear_terms(&moved).unwrap();
        let a_moved = NonlinearTerms { h_r: translate(&a.h_r, &shift).unwrap(), h_i: translate(&a.h_i, &shift).unwrap() };
        prop_assert!(a_moved.max_deviation(&b).unwrap() / scale(&a) < 1e-10);
    }

    #[test]
    fn rk4_step_keeps_the_norm(seed in 0u64..1000, c in -0.05..0.05f64) {
        let grid = Grid::one_d(64, 20.0).unwrap();
        let model = Model::new(ModelSpec::smpe(c), grid).unwrap();
        let psi = random_smooth(grid, seed, 3).unwrap();
        let next = step_rk4(&psi, &model, 1e-3).unwrap();
        prop_assert!((next.norm() - psi.norm()).abs() < 1e-9);
    }

    #[test]
    fn products_are_uncorrelated(s1 in 0.6..1.5f64, s2 in 0.6..1.5f64, b1 in -0.3..0.3f64, k in -1.0..1.0f64) {
        let g1 = Grid::one_d(64, 20.0).unwrap();
        let state = product_state(&gaussian(g1, -1.0, s1, k, b1, 0.0).unwrap(), &gaussian(g1, 1.0, s2, 0.0, 0.1, 0.01).unwrap()).unwrap();
        prop_assert!(correlation_defect(&state).unwrap() < 1e-12);
    }

    #[test]
    fn dealias_is_a_projection(seed in 0u64..1000) {
        let psi = random_smooth(Grid::one_d(64, 2.0 * PI).unwrap(), seed, 30).unwrap();
        let once = dealias(psi.field());
        let twice = dealias(&once);
        prop_assert!(once.l2_distance(&twice).unwrap() < 1e-14);
    }

    #[test]
    fn energy_scale_forms_agree(l_exp in -15.0..3.0f64, m_exp in -31.0..2.0f64, k in 1u32..=3, n in 1u32..=3) {
        prop_assume!(k * n > 1);
        let card = UnitsCard::new(1.054571817e-34, 10f64.powf(m_exp), 2.99792458e8, 10f64.powf(l_exp), 1.0).unwrap();
        let (a, b) = energy_scale_forms(&card, k, n).unwrap();
        prop_assert!(((a - b) / b).abs() < 1e-10);
    }
}
