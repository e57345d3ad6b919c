use bvlab_core::corpus::manufactured_systems;
use bvlab_core::elliptic::{Coefficients, RealEllipticSystem};
use bvlab_core::pipeline::{bv_residual, derive, identity_residuals, spectral_unknown};
use bvlab_core::{ComplexField, Domain, Expr};
use proptest::prelude::*;

const SWEEP: [usize; 4] = [33, 65, 129, 257];

fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn identities_hold_on_expression_corpus() {
    for case in manufactured_systems().unwrap() {
        let d = derive(&case.system).unwrap();
        for (name, r) in identity_residuals(&d, 32).unwrap() {
            assert!(r <= 1e-12, "{}: {name} = {r:e}", case.name);
        }
    }
}

#[test]
fn manufactured_closure() {
    for case in manufactured_systems().unwrap() {
        let (r1, r2) = case.system.residual(&case.u, &case.v).unwrap();
        assert!(r1.max_abs(32).max(r2.max_abs(32)) <= 1e-12, "{}", case.name);
    }
}

#[test]
fn manufactured_closure_on_grids_is_second_order() {
    for case in manufactured_systems().unwrap() {
        let errors: Vec<f64> = SWEEP
            .iter()
            .map(|&n| {
                let g = case.on_grid(n).unwrap();
                let (r1, r2) = g.system.residual(&g.u, &g.v).unwrap();
                r1.max_abs_interior(32).max(r2.max_abs_interior(32))
            })
            .collect();
        for r in rates(&errors) {
            assert!((1.7..=2.3).contains(&r), "{}: {errors:?}", case.name);
        }
    }
}

#[test]
fn grid_pipeline_converges_at_second_order() {
    for case in manufactured_systems().unwrap() {
        let mut transport = Vec::new();
        let mut end_to_end = Vec::new();
        for &n in &SWEEP {
            let g = case.on_grid(n).unwrap();
            let d = derive(&g.system).unwrap();
            let res = identity_residuals(&d, 32).unwrap();
            for (name, r) in &res {
                if *name != "transport" {
                    assert!(*r <= 1e-12, "{}: {name} = {r:e}", case.name);
                }
            }
            transport.push(res.iter().find(|(n, _)| *n == "transport").unwrap().1);
            let w = spectral_unknown(&g.system, &d.structure, &g.u, &g.v);
            end_to_end.push(bv_residual(&d.bv, &w).unwrap().max_abs_interior(32));
        }
        // constant principal parts have exactly zero transport
        if transport[0] > 1e-12 {
            for r in rates(&transport) {
                assert!((1.7..=2.3).contains(&r), "{} transport: {transport:?}", case.name);
            }
        }
        for r in rates(&end_to_end) {
            assert!((1.7..=2.3).contains(&r), "{} residual: {end_to_end:?}", case.name);
        }
    }
}

fn square() -> Domain {
    Domain::rectangle(-0.5, 0.5, -0.5, 0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identities_hold_for_random_variable_systems(
        a11 in 1.0f64..2.0, s11 in -0.5f64..0.5,
        a12 in -0.5f64..0.5, s12 in -0.5f64..0.5,
        a21 in -0.5f64..0.5, s21 in -0.5f64..0.5,
        a22 in 1.0f64..2.0, s22 in -0.5f64..0.5,
        lower in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let d = square();
        let f = |e: Expr| ComplexField::expr(e, d.clone());
        let (x, y) = (Expr::x(), Expr::y());
        let coeffs = Coefficients::principal(
            f(Expr::real(a11) + x.clone() * s11),
            f(Expr::real(a12) + (y.clone() * s12).exp() - 1.0),
            f(Expr::real(a21) + x.clone() * y.clone() * s21),
            f(Expr::real(a22) + y.powi(2) * s22),
        )
        .with_lower(f(Expr::real(lower[0])), f(x.clone() * lower[1]), f(y.clone() * lower[2]), f(Expr::real(lower[3])));
        let sys = RealEllipticSystem::homogeneous(coeffs, d.clone()).unwrap();
        let der = derive(&sys).unwrap();
        for (name, r) in identity_residuals(&der, 16).unwrap() {
            prop_assert!(r <= 1e-12, "{} = {:e}", name, r);
        }
    }
}
