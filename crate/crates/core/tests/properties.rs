use std::f64::consts::PI;

use manin_core::coherent::{coherent_coefficients, evolve_state, kernel, radius_of_convergence, coherent_norm_sq};
use manin_core::measure::{verify_resolution_identity, PhaseSpaceGrid, RadialDensity};
use manin_core::symbols::{lower_symbol, quantize_cs, PolynomialSymbol};
use manin_core::toeplitz::{annihilation_matrix, toeplitz_matrix};
use manin_core::{sesquilinear_form, ManinElement, Model, QParam, WeightSequence};
use num_complex::Complex64;
use proptest::prelude::*;

fn cplx(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

fn q_annulus(lo: f64, hi: f64) -> impl Strategy<Value = QParam> {
    (lo..hi, -PI..PI).prop_map(|(r, a)| QParam::new(Complex64::from_polar(r, a)).unwrap())
}

fn element(q: QParam, max_deg: u32) -> impl Strategy<Value = ManinElement> {
    prop::collection::vec((0..=max_deg, 0..=max_deg, cplx(2.0)), 1..4).prop_map(move |ts| {
        ts.into_iter().fold(ManinElement::zero(q), |acc, (i, j, c)| {
            acc.add(&ManinElement::monomial(q, i, j, c)).unwrap()
        })
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn triple() -> impl Strategy<Value = (ManinElement, ManinElement, ManinElement)> {
    q_annulus(0.5, 2.0).prop_flat_map(|q| (element(q, 3), element(q, 3), element(q, 3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_is_associative((a, b, c) in triple()) {
        let left = a.normal_order_product(&b).unwrap().normal_order_product(&c).unwrap();
        let right = a.normal_order_product(&b.normal_order_product(&c).unwrap()).unwrap();
        for (m, v) in left.terms() {
            prop_assert!(close(v, right.coefficient(m), 1e-10));
        }
        for (m, v) in right.terms() {
            prop_assert!(close(v, left.coefficient(m), 1e-10));
        }
    }

    #[test]
    fn form_is_sesquilinear((a, b, c) in triple(), s in cplx(2.0)) {
        let w = WeightSequence::factorial();
        let lhs = sesquilinear_form(&a.scale(s).add(&b).unwrap(), &c, &w).unwrap();
        let rhs = s.conj() * sesquilinear_form(&a, &c, &w).unwrap() + sesquilinear_form(&b, &c, &w).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10));
        let lhs = sesquilinear_form(&c, &a.scale(s), &w).unwrap();
        prop_assert!(close(lhs, s * sesquilinear_form(&c, &a, &w).unwrap(), 1e-10));
    }

    #[test]
    fn projection_is_idempotent((a, _, _) in triple()) {
        let w = WeightSequence::power_factorial(0.7).unwrap();
        let p = a.project(&w).unwrap();
        let pp = p.project(&w).unwrap();
        prop_assert!(p.is_holomorphic());
        for (m, v) in p.terms() {
            prop_assert!(close(v, pp.coefficient(m), 1e-12));
        }
    }

    #[test]
    fn toeplitz_map_is_linear((a, b, _) in triple(), s in cplx(2.0)) {
        let m = Model::new(WeightSequence::factorial(), a.q());
        let lhs = toeplitz_matrix(&a.scale(s).add(&b).unwrap(), &m, 8).unwrap();
        let rhs = toeplitz_matrix(&a, &m, 8).unwrap().scale(s)
            .add(&toeplitz_matrix(&b, &m, 8).unwrap()).unwrap();
        let scale = lhs.entries().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * scale);
    }

    #[test]
    fn lower_symbol_respects_adjoints(l in cplx(1.5), q in q_annulus(0.5, 1.0)) {
        let m = Model::new(WeightSequence::factorial(), q);
        let a = annihilation_matrix(&m, 60).unwrap();
        let s = lower_symbol(&a, l, &m, true, 1e-15).unwrap().value;
        let t = lower_symbol(&a.adjoint(), l, &m, true, 1e-15).unwrap().value;
        prop_assert!(close(t, s.conj(), 1e-10));
        let h = a.add(&a.adjoint()).unwrap();
        let v = lower_symbol(&h, l, &m, true, 1e-15).unwrap().value;
        prop_assert!(v.im.abs() <= 1e-10 * (1.0 + v.re.abs()));
    }

    #[test]
    fn cauchy_schwarz_is_strict(l in cplx(2.0), mu in cplx(2.0), q in q_annulus(0.6, 1.0)) {
        prop_assume!((l - mu).norm() > 1e-3);
        let m = Model::new(WeightSequence::factorial(), q);
        let k = kernel(mu, l, &m, 1e-15).unwrap().norm_sqr();
        let bound = coherent_norm_sq(l, &m, 1e-15).unwrap() * coherent_norm_sq(mu, &m, 1e-15).unwrap();
        prop_assert!(k < bound);
    }

    #[test]
    fn evolution_preserves_norm(l in cplx(2.5), t in -20.0..20.0f64, q in q_annulus(0.5, 1.0)) {
        let m = Model::new(WeightSequence::factorial(), q);
        let s = coherent_coefficients(l, &m, 1e-14).unwrap();
        let e = evolve_state(&s, t);
        let n0: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = e.coeffs().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((n0 - n1).abs() <= 1e-12 * n0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quantization_commutes_with_adjoint(a in cplx(1.0), b in cplx(1.0), c in cplx(1.0)) {
        let f = PolynomialSymbol::constant(a)
            .add(&PolynomialSymbol::lambda().scale(b))
            .add(&PolynomialSymbol::abs_sq().scale(c));
        let m = Model::segal_bargmann();
        let grid = PhaseSpaceGrid::new(RadialDensity::Exponential.gauss_rule(14).unwrap(), 31).unwrap();
        let lhs = quantize_cs(&f.conj(), &grid, &m, 10).unwrap();
        let rhs = quantize_cs(&f, &grid, &m, 10).unwrap().adjoint();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }

    #[test]
    fn gram_matrix_ignores_grid_rotation(offset in 0.0..(2.0 * PI)) {
        let quad = RadialDensity::Exponential.gauss_rule(10).unwrap();
        let g = PhaseSpaceGrid::with_offset(quad, 21, offset).unwrap();
        let r = verify_resolution_identity(&g, &Model::segal_bargmann(), 8).unwrap();
        prop_assert!(r.max_deviation < 1e-9);
    }

    #[test]
    fn radius_scales_with_constant_weight(c in 0.25..4.0f64) {
        let one = radius_of_convergence(&Model::new(WeightSequence::constant(1.0).unwrap(), QParam::one()), 300, 1e6).unwrap();
        let scaled = radius_of_convergence(&Model::new(WeightSequence::constant(c).unwrap(), QParam::one()), 300, 1e6).unwrap();
        // w -> c w scales R by c^{1/2} only through w_n^{1/n}, which tends to 1
        prop_assert!((scaled.value.as_f64() - one.value.as_f64()).abs() < 2e-2);
    }
}
