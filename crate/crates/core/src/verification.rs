//! The acceptance suite: twelve end-to-end checks, each against an
//! independent route to the same number. Shared by the test target and the
//! `verify` subcommand.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{ManinElement, ManinMonomial};
use crate::coherent::{
    coefficients_by_recursion, coherent_coefficients, coherent_norm_sq, cs_transform,
    eigen_residual, evolve, evolve_state, kernel, polar_grid, radius_of_convergence,
    RadiusValue,
};
use crate::error::Result;
use crate::measure::{
    norm_divergence_witness, verify_density_moments, verify_moments, verify_resolution_identity,
    MeasureRegistry, PhaseSpaceGrid, RadialDensity,
};
use crate::model::{Model, QParam};
use crate::numeric::linear_fit;
use crate::paragrassmann::{pg_structure_report, ParagrassmannConfig};
use crate::symbols::{
    lower_symbol, quantize_cs, quantize_cs_norm_bound, secondary_toeplitz, PolynomialSymbol,
};
use crate::toeplitz::{
    adjoint_annihilation_matrix, annihilation_matrix, identity_matrix, toeplitz_matrix,
    TruncatedOperator,
};
use crate::weights::WeightSequence;

/// Result of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation, or a 0/1 flag for classification checks.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} measured={:.3e} threshold={:.1e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

/// Accumulates sub-checks of one criterion as `(value, limit)` pairs.
struct Tally {
    id: u8,
    name: &'static str,
    worst_ratio: f64,
    measured: f64,
    threshold: f64,
    ok: bool,
    notes: Vec<String>,
}

impl Tally {
    fn new(id: u8, name: &'static str) -> Self {
        Tally {
            id,
            name,
            worst_ratio: -1.0,
            measured: 0.0,
            threshold: 0.0,
            ok: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, value: f64, limit: f64) {
        let pass = value <= limit;
        let ratio = if limit > 0.0 { value / limit } else if value > 0.0 { f64::INFINITY } else { 0.0 };
        if !(ratio <= self.worst_ratio) || self.worst_ratio < 0.0 {
            self.worst_ratio = ratio;
            self.measured = value;
            self.threshold = limit;
        }
        if !pass {
            self.ok = false;
            self.notes.push(format!("{label}: {value:.3e} > {limit:.1e}"));
        }
    }

    fn flag(&mut self, label: &str, cond: bool) {
        self.check(label, if cond { 0.0 } else { 1.0 }, 0.0);
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self) -> CriterionOutcome {
        CriterionOutcome {
            id: self.id,
            name: self.name,
            passed: self.ok,
            measured: self.measured,
            threshold: self.threshold,
            detail: self.notes.join("; "),
        }
    }
}

fn run(id: u8, name: &'static str, body: impl FnOnce(&mut Tally) -> Result<()>) -> CriterionOutcome {
    let mut t = Tally::new(id, name);
    if let Err(e) = body(&mut t) {
        t.ok = false;
        t.note(format!("error: {e}"));
    }
    t.finish()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn factorial_model(q: QParam) -> Model {
    Model::new(WeightSequence::factorial(), q)
}

fn sb_grid(order: usize, angles: usize) -> Result<PhaseSpaceGrid> {
    PhaseSpaceGrid::new(RadialDensity::Exponential.gauss_rule(order)?, angles)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Coherent-state eigen-identity on the truncation.
pub fn criterion_1() -> CriterionOutcome {
    run(1, "coherent eigen-identity", |t| {
        let qs = [QParam::one(), QParam::new(c(0.0, 1.0))?, QParam::unimodular(PI / 5.0)];
        let lambdas = [c(0.5, 0.0), c(1.0, 1.0), c(3.0, 0.0)];
        for q in qs {
            let m = factorial_model(q);
            for l in lambdas {
                let s = coherent_coefficients(l, &m, 1e-14)?;
                let r = eigen_residual(&s, &m)?;
                t.check(&format!("q={} λ={l}", q.value()), r.residual, 1e-10);
                t.check("leakage within edge bound", r.leakage, r.leakage_bound * (1.0 + 1e-9));
            }
        }
        Ok(())
    })
}

/// Radius estimates for the three reference theories.
pub fn criterion_2() -> CriterionOutcome {
    run(2, "radius reproduction", |t| {
        let unit = Model::new(WeightSequence::constant(1.0)?, QParam::one());
        let r = radius_of_convergence(&unit, 400, 1e6)?;
        t.check("constant/q=1 |R-1|", (r.value.as_f64() - 1.0).abs(), 1e-2);
        t.flag("constant/q=1 not extreme", !r.extreme);
        let sb = radius_of_convergence(&Model::segal_bargmann(), 400, 1e6)?;
        t.flag("factorial/|q|=1 infinite", sb.value.is_infinite());
        let rot = radius_of_convergence(&factorial_model(QParam::unimodular(1.0)), 400, 1e6)?;
        t.flag("factorial/q=e^i infinite", rot.value.is_infinite());
        let ex = Model::new(WeightSequence::constant(1.0)?, QParam::real(2.0)?);
        let r = radius_of_convergence(&ex, 400, 1e6)?;
        t.flag("constant/|q|=2 zero", r.value == RadiusValue::Finite(0.0));
        t.flag("constant/|q|=2 extreme", r.extreme);
        // cross-check: the norm series already diverges at λ = 0.01
        t.flag(
            "constant/|q|=2 diverges at 0.01",
            coherent_norm_sq(c(0.01, 0.0), &ex, 1e-12).is_err(),
        );
        Ok(())
    })
}

/// Closed-form density: moments by adaptive integration, normalization by its Gauss rule.
pub fn criterion_3() -> CriterionOutcome {
    run(3, "closed-form measure", |t| {
        let m = Model::segal_bargmann();
        let d = verify_density_moments(RadialDensity::Exponential, &m, 20)?;
        t.check("density moments j<=20", d.max_deviation, 1e-9);
        let quad = RadialDensity::Exponential.gauss_rule(12)?;
        let v = verify_moments(&quad, &m, 10)?;
        t.check("order-12 normalization n<=10", v.max_deviation, 1e-8);
        Ok(())
    })
}

/// Gram reconstruction on basis vectors.
pub fn criterion_4() -> CriterionOutcome {
    run(4, "resolution of identity", |t| {
        let grid = sb_grid(12, 25)?;
        let g = verify_resolution_identity(&grid, &Model::segal_bargmann(), 10)?;
        t.check("max |G - I|", g.max_deviation, 1e-8);
        let shifted = PhaseSpaceGrid::with_offset(grid.quad.clone(), 25, 0.37)?;
        let g2 = verify_resolution_identity(&shifted, &Model::segal_bargmann(), 10)?;
        t.check("max |G - I| rotated grid", g2.max_deviation, 1e-8);
        Ok(())
    })
}

/// Partial sums of `∫ ‖φ_λ‖² dρ` grow by one per term.
pub fn criterion_5() -> CriterionOutcome {
    run(5, "divergence identity", |t| {
        let quad = RadialDensity::Exponential.gauss_rule(12)?;
        let s = norm_divergence_witness(&quad, &Model::segal_bargmann(), 20)?;
        let worst = s
            .iter()
            .enumerate()
            .map(|(n, v)| (v - (n as f64 + 1.0)).abs())
            .fold(0.0, f64::max);
        t.check("|S_N - (N+1)|", worst, 1e-6);
        let xs: Vec<f64> = (0..s.len()).map(|n| n as f64).collect();
        let (slope, _) = linear_fit(&xs, &s);
        t.check("|slope - 1|", (slope - 1.0).abs(), 1e-6);
        Ok(())
    })
}

fn operator_for_grid(
    build: impl Fn(usize) -> Result<TruncatedOperator>,
    points: &[Complex64],
    model: &Model,
    tol: f64,
) -> Result<TruncatedOperator> {
    let mut need = 1;
    for &p in points {
        need = need.max(coherent_coefficients(p, model, tol)?.len());
    }
    build(need + 1)
}

/// Lower symbols of `T_θ̄` and its adjoint.
pub fn criterion_6() -> CriterionOutcome {
    run(6, "lower symbols", |t| {
        let tol = 1e-15;
        let configs: Vec<(&str, Model, f64)> = vec![
            ("factorial q=1", Model::segal_bargmann(), 2.0),
            ("factorial q=e^{i pi/5}", factorial_model(QParam::unimodular(PI / 5.0)), 2.0),
            ("constant q=1", Model::new(WeightSequence::constant(1.0)?, QParam::one()), 0.8),
            (
                "power-factorial s=0.5 q=0.9i",
                Model::new(WeightSequence::power_factorial(0.5)?, QParam::new(c(0.0, 0.9))?),
                1.5,
            ),
            (
                "gaussian-factorial q=2",
                Model::new(WeightSequence::gaussian_factorial(2.0)?, QParam::real(2.0)?),
                2.0,
            ),
        ];
        for (label, m, r_max) in &configs {
            let pts = polar_grid(*r_max, 5, 10);
            let a = operator_for_grid(|n| annihilation_matrix(m, n), &pts, m, tol)?;
            let mut worst: f64 = 0.0;
            for &p in &pts {
                let s = lower_symbol(&a, p, m, true, tol)?;
                worst = worst.max((s.value - p).norm());
            }
            t.check(&format!("(T_tb)^flat {label}"), worst, 1e-10);
        }
        let adj_configs: Vec<(&str, Model)> = vec![
            ("q=1", Model::segal_bargmann()),
            ("q=2", Model::new(WeightSequence::gaussian_factorial(2.0)?, QParam::real(2.0)?)),
            ("q=1/3", factorial_model(QParam::real(1.0 / 3.0)?)),
        ];
        for (label, m) in &adj_configs {
            let pts = polar_grid(1.5, 3, 8);
            let a = operator_for_grid(|n| adjoint_annihilation_matrix(m, n), &pts, m, tol)?;
            let mut worst: f64 = 0.0;
            for &p in &pts {
                let s = lower_symbol(&a, p, m, false, tol)?;
                let want = p.conj() * coherent_norm_sq(p, m, tol)?;
                worst = worst.max(rel(s.value, want));
            }
            t.check(&format!("(T_tb*)^sharp {label}"), worst, 1e-9);
        }
        Ok(())
    })
}

/// Coherent state quantization reproduces `T_θ̄`, its adjoint and the identity.
pub fn criterion_7() -> CriterionOutcome {
    run(7, "upper symbols", |t| {
        let n = 12;
        let grid = sb_grid(16, 2 * (15 + 1) + 1)?;
        for (label, m) in [
            ("q=1", Model::segal_bargmann()),
            ("q=e^{i pi/5}", factorial_model(QParam::unimodular(PI / 5.0))),
        ] {
            let lam = quantize_cs(&PolynomialSymbol::lambda(), &grid, &m, n)?;
            t.check(
                &format!("Q_cs(L) vs T_tb {label}"),
                lam.max_abs_diff(&annihilation_matrix(&m, n)?),
                1e-8,
            );
            let lamc = quantize_cs(&PolynomialSymbol::lambda_conj(), &grid, &m, n)?;
            t.check(
                &format!("Q_cs(Lc) vs T_tb* {label}"),
                lamc.max_abs_diff(&adjoint_annihilation_matrix(&m, n)?),
                1e-8,
            );
            let one = quantize_cs(&PolynomialSymbol::constant(c(1.0, 0.0)), &grid, &m, n)?;
            t.check(
                &format!("Q_cs(1) vs I {label}"),
                one.max_abs_diff(&identity_matrix(&m, n)),
                1e-10,
            );
        }
        let m = Model::segal_bargmann();
        let f = PolynomialSymbol::lambda();
        let op = quantize_cs(&f, &grid, &m, 15)?;
        let bound = quantize_cs_norm_bound(&f, &grid, &m)?;
        let norm = op.operator_norm();
        t.check("||Q_cs f|| - ||f||_1", (norm - bound).max(0.0), 0.0);
        t.note(format!("||Q_cs(L)||={norm:.4} ||L||_1~{bound:.3e}"));
        Ok(())
    })
}

/// Coherent state transform, orthonormality of basis images, kernel identities.
pub fn criterion_8() -> CriterionOutcome {
    run(8, "transform and kernel", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tol = 1e-16;
        for q in [QParam::one(), QParam::unimodular(PI / 5.0), QParam::real(0.6)?] {
            let m = factorial_model(q);
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let l = random_disk(&mut rng, 1.8);
                for j in 0..=10usize {
                    let mut psi = vec![c(0.0, 0.0); j + 1];
                    psi[j] = c(1.0, 0.0);
                    let got = cs_transform(&psi, l, &m)?;
                    let tri = (j * (j + 1) / 2) as i32;
                    let want = q.value().conj().powi(tri) * l.conj().powi(j as i32)
                        / m.weights.value(j as i64)?.sqrt();
                    worst = worst.max((got - want).norm() / want.norm().max(1e-300));
                }
            }
            t.check(&format!("C(phi_j) closed form q={}", q.value()), worst, 1e-12);
        }

        // orthonormality of C(φ_j) in L²(ρ)
        let m = Model::segal_bargmann();
        let grid = sb_grid(12, 25)?;
        let pts = grid.points();
        let mut images = vec![vec![c(0.0, 0.0); pts.len()]; 11];
        for (j, row) in images.iter_mut().enumerate() {
            let mut psi = vec![c(0.0, 0.0); j + 1];
            psi[j] = c(1.0, 0.0);
            for (k, (l, _)) in pts.iter().enumerate() {
                row[k] = cs_transform(&psi, *l, &m)?;
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..=10 {
            for k in 0..=10 {
                let ip: Complex64 = pts
                    .iter()
                    .enumerate()
                    .map(|(p, (_, w))| *w * images[j][p].conj() * images[k][p])
                    .sum();
                let want = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).norm());
            }
        }
        t.check("orthonormal images j<=10", worst, 1e-8);

        // C φ_λ (μ) = K(μ, λ), K(λ, λ) = ‖φ_λ‖²
        let mut worst_c: f64 = 0.0;
        let mut worst_d: f64 = 0.0;
        for q in [QParam::one(), QParam::new(c(0.3, 0.8))?] {
            let m = factorial_model(q);
            for _ in 0..10 {
                let l = random_disk(&mut rng, 2.0);
                let mu = random_disk(&mut rng, 2.0);
                let state = coherent_coefficients(l, &m, tol)?;
                let got = cs_transform(&state.coeffs(), mu, &m)?;
                let k = kernel(mu, l, &m, tol)?;
                worst_c = worst_c.max(rel(got, k));
                let kll = kernel(l, l, &m, tol)?;
                worst_d = worst_d.max(rel(kll, c(coherent_norm_sq(l, &m, tol)?, 0.0)));
            }
        }
        t.check("C(phi_lambda)(mu) = K(mu,lambda)", worst_c, 1e-10);
        t.check("K(l,l) = ||phi_l||^2", worst_d, 1e-12);

        // e^{μ*λ} at |q| = 1
        let mut worst_e: f64 = 0.0;
        for q in [QParam::one(), QParam::unimodular(2.0)] {
            let m = factorial_model(q);
            for _ in 0..20 {
                let l = random_disk(&mut rng, 2.5);
                let mu = random_disk(&mut rng, 2.5);
                let k = kernel(mu, l, &m, tol)?;
                worst_e = worst_e.max(rel(k, (mu.conj() * l).exp()));
            }
        }
        t.check("K = exp(conj(mu) lambda)", worst_e, 1e-10);
        Ok(())
    })
}

/// Secondary Toeplitz operators `S_1` and `S_{λ*}`.
pub fn criterion_9() -> CriterionOutcome {
    run(9, "secondary quantization", |t| {
        let n = 10;
        let registry = MeasureRegistry::with_builtins();
        let cases: Vec<(&str, Model)> = vec![
            ("factorial q=1", Model::segal_bargmann()),
            ("factorial q=e^{i pi/5}", factorial_model(QParam::unimodular(PI / 5.0))),
            (
                "gaussian-factorial q=2",
                Model::new(WeightSequence::gaussian_factorial(2.0)?, QParam::real(2.0)?),
            ),
            ("constant q=1 (moment-solved)", Model::new(WeightSequence::constant(1.0)?, QParam::one())),
        ];
        for (label, m) in &cases {
            let quad = registry.build("auto", m, 14)?;
            let grid = PhaseSpaceGrid::new(quad, 2 * (n + 1) + 1)?;
            let one = secondary_toeplitz(&PolynomialSymbol::constant(c(1.0, 0.0)), &grid, m, n)?;
            t.check(&format!("S_1 = I {label}"), one.max_abs_diff(&identity_matrix(m, n)), 1e-8);
            let s = secondary_toeplitz(&PolynomialSymbol::lambda_conj(), &grid, m, n)?;
            // S_{λ*} e_k = (q*)^{-(k+1)} (w_{k+1}/w_k)^{1/2} e_{k+1}
            let qc = QParam::new(m.q.value().conj())?;
            let mut worst: f64 = 0.0;
            for j in 0..=n {
                for k in 0..=n {
                    let want = if j == k + 1 {
                        let ln = 0.5 * (m.weights.ln(j as i64)? - m.weights.ln(k as i64)?);
                        qc.scaled_pow(-(j as i64), ln)
                    } else {
                        c(0.0, 0.0)
                    };
                    worst = worst.max((s.get(j, k) - want).norm() / want.norm().max(1.0));
                }
            }
            t.check(&format!("S_Lc closed form {label}"), worst, 1e-8);
            if m.q.is_real() {
                t.check(
                    &format!("S_Lc = T_tb* {label}"),
                    s.max_abs_diff(&adjoint_annihilation_matrix(m, n)?),
                    1e-8,
                );
            }
        }
        Ok(())
    })
}

/// `e^{-itN}` on coherent vectors.
pub fn criterion_10() -> CriterionOutcome {
    run(10, "time evolution", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let models = [
            Model::segal_bargmann(),
            factorial_model(QParam::unimodular(PI / 5.0)),
            Model::new(WeightSequence::power_factorial(0.7)?, QParam::new(c(0.5, -0.6))?),
        ];
        let mut worst: f64 = 0.0;
        let mut worst_norm: f64 = 0.0;
        let mut worst_lambda: f64 = 0.0;
        for k in 0..20 {
            let m = &models[k % models.len()];
            let l = random_disk(&mut rng, 2.5);
            let time = rng.gen_range(-10.0..10.0);
            let s = coherent_coefficients(l, m, 1e-14)?;
            let e = evolve_state(&s, time);
            let r = coherent_coefficients(evolve(l, time), m, 1e-14)?;
            worst_lambda = worst_lambda.max((e.lambda - r.lambda).norm());
            if e.len() != r.len() {
                t.check("cutoff agreement", 1.0, 0.0);
                continue;
            }
            let scale = (0..s.len()).map(|n| s.coeff(n).norm()).fold(0.0, f64::max).max(1.0);
            for n in 0..e.len() {
                worst = worst.max((e.coeff(n) - r.coeff(n)).norm() / scale);
            }
            let n_e: f64 = e.coeffs().iter().map(|z| z.norm_sqr()).sum();
            let n_s: f64 = s.coeffs().iter().map(|z| z.norm_sqr()).sum();
            worst_norm = worst_norm.max((n_e - n_s).abs() / n_s);
        }
        t.check("componentwise", worst, 1e-12);
        t.check("norm preserved", worst_norm, 1e-12);
        t.check("eigenvalue tag", worst_lambda, 1e-12);
        Ok(())
    })
}

/// Nilpotent Jordan structure of the paragrassmann annihilation operator.
pub fn criterion_11() -> CriterionOutcome {
    run(11, "paragrassmann", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in [2usize, 3, 5] {
            let w: Vec<f64> = (0..l).map(|_| rng.gen_range(0.2..5.0)).collect();
            let cfg = ParagrassmannConfig::new(l, w, QParam::new(c(0.4, 1.3))?)?;
            let r = pg_structure_report(&cfg)?;
            t.flag(&format!("l={l} nilpotency index"), r.nilpotency_index == l);
            t.flag(&format!("l={l} single eigenvalue 0"), r.eigenvalues == vec![[0.0, 0.0]]);
            t.flag(&format!("l={l} geometric multiplicity 1"), r.eigenvector_count == 1);
            t.flag(&format!("l={l} extreme"), r.extreme);
            t.check(&format!("l={l} Jordan similarity"), r.jordan_similarity_error, 1e-12);
        }
        Ok(())
    })
}

/// Rewrites the word `θ^i θ̄^j θ^k θ̄^l` by adjacent swaps `θ̄θ → q^{-1} θθ̄`.
/// Returns the normal-ordered exponents and the accumulated power of `q`.
pub fn swap_rewrite_oracle(i: u32, j: u32, k: u32, l: u32) -> (u32, u32, i64) {
    let mut word: Vec<bool> = Vec::new(); // true = θ̄
    word.extend(std::iter::repeat(false).take(i as usize));
    word.extend(std::iter::repeat(true).take(j as usize));
    word.extend(std::iter::repeat(false).take(k as usize));
    word.extend(std::iter::repeat(true).take(l as usize));
    let mut e = 0i64;
    loop {
        let pos = word.windows(2).position(|p| p[0] && !p[1]);
        match pos {
            Some(p) => {
                word.swap(p, p + 1);
                e -= 1;
            }
            None => break,
        }
    }
    let a = word.iter().filter(|b| !**b).count() as u32;
    (a, word.len() as u32 - a, e)
}

/// Matrix of `T_g` computed entirely in the algebra: column `n` is `P(g · φ_n)`.
pub fn toeplitz_via_algebra(g: &ManinElement, model: &Model, cutoff: usize) -> Result<Vec<Vec<Complex64>>> {
    let dim = cutoff + 1;
    let mut out = vec![vec![c(0.0, 0.0); dim]; dim];
    for n in 0..dim {
        let phi = ManinElement::basis_vector(model.q, n as u32, &model.weights)?;
        let image = g.normal_order_product(&phi)?.project(&model.weights)?;
        for (mono, coeff) in image.terms() {
            let row = mono.i as usize;
            if row < dim {
                // θ^m = w_m^{1/2} φ_m
                out[row][n] += coeff * (0.5 * model.weights.ln(row as i64)?).exp();
            }
        }
    }
    Ok(out)
}

fn random_disk(rng: &mut ChaCha8Rng, r_max: f64) -> Complex64 {
    let r = r_max * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
}

fn random_annulus_q(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Result<QParam> {
    QParam::new(Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(-PI..PI)))
}

/// Oracle suites: normal ordering, Toeplitz matrices, coefficient recursion.
pub fn criterion_12() -> CriterionOutcome {
    run(12, "oracle suites", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut worst: f64 = 0.0;
        let mut exps_ok = true;
        for _ in 0..200 {
            let q = random_annulus_q(&mut rng, 0.5, 2.0)?;
            let (i, j, k, l) = (
                rng.gen_range(0..=8),
                rng.gen_range(0..=8),
                rng.gen_range(0..=8),
                rng.gen_range(0..=8),
            );
            let a = ManinElement::monomial(q, i, j, c(1.0, 0.0));
            let b = ManinElement::monomial(q, k, l, c(1.0, 0.0));
            let p = a.normal_order_product(&b)?;
            let (oi, oj, oe) = swap_rewrite_oracle(i, j, k, l);
            let raw: Vec<_> = p.raw_terms().collect();
            exps_ok &= raw.len() == 1
                && raw[0].0 == ManinMonomial::new(oi, oj)
                && raw[0].1.len() == 1
                && raw[0].1.contains_key(&oe);
            let want = q.pow(oe);
            worst = worst.max(rel(p.coefficient(ManinMonomial::new(oi, oj)), want));
        }
        t.flag("normal ordering exponents exact", exps_ok);
        t.check("normal ordering values", worst, 1e-12);

        let mut worst_t: f64 = 0.0;
        let models = [
            factorial_model(random_annulus_q(&mut rng, 0.5, 2.0)?),
            Model::new(WeightSequence::power_factorial(0.6)?, random_annulus_q(&mut rng, 0.5, 2.0)?),
            Model::new(
                WeightSequence::explicit((0..20).map(|_| rng.gen_range(0.5..3.0)).collect())?,
                random_annulus_q(&mut rng, 0.5, 2.0)?,
            ),
        ];
        for m in &models {
            for i in 0..=4u32 {
                for j in 0..=4u32 {
                    let g = ManinElement::monomial(m.q, i, j, c(1.0, 0.0));
                    let fast = toeplitz_matrix(&g, m, 12)?;
                    let slow = toeplitz_via_algebra(&g, m, 12)?;
                    for (r, row) in slow.iter().enumerate() {
                        for (col, v) in row.iter().enumerate() {
                            let d = (fast.get(r, col) - v).norm() / v.norm().max(1e-300);
                            if v.norm() == 0.0 {
                                worst_t = worst_t.max(fast.get(r, col).norm());
                            } else {
                                worst_t = worst_t.max(d);
                            }
                        }
                    }
                }
            }
        }
        t.check("toeplitz vs P(g phi_n)", worst_t, 1e-12);

        let mut worst_c: f64 = 0.0;
        for _ in 0..50 {
            let (w, q_hi) = match rng.gen_range(0..4) {
                0 => (WeightSequence::factorial(), 1.0),
                1 => (WeightSequence::power_factorial(rng.gen_range(0.5..1.5))?, 1.0),
                2 => (WeightSequence::constant(rng.gen_range(0.5..4.0))?, 0.95),
                _ => {
                    let b = rng.gen_range(1.0..2.0);
                    (WeightSequence::gaussian_factorial(b)?, b)
                }
            };
            let q = random_annulus_q(&mut rng, 0.5, q_hi)?;
            let m = Model::new(w, q);
            let l = random_disk(&mut rng, 2.0);
            let s = coherent_coefficients(l, &m, 1e-12)?;
            let rec = coefficients_by_recursion(l, &m, s.cutoff())?;
            for (n, r) in rec.iter().enumerate() {
                let a = s.coeff(n);
                if a.norm() > 0.0 {
                    worst_c = worst_c.max(rel(*r, a));
                }
            }
        }
        t.check("closed form vs recursion", worst_c, 1e-12);
        Ok(())
    })
}

/// Runs every criterion in order.
pub fn run_acceptance_suite() -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
        criterion_12(),
    ]
}
