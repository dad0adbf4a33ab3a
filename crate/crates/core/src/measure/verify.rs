//! Numerical certificates for a radial rule: moment normalization, Gram
//! reconstruction on basis vectors, and the divergence of `∫ ‖φ_λ‖² dρ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{PhaseSpaceGrid, RadialDensity, RadialQuadrature};
use crate::coherent::coherent_window;
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    /// `|π Σ μ_k t_k^n |q|^{n(n+1)} / w_n − 1|` for `n = 0..=n_max`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
}

/// Checks the normalization `π ∫ t^n |q|^{n(n+1)} w_n^{-1} dρ = 1` for `n ≤ n_max`.
pub fn verify_moments(quad: &RadialQuadrature, model: &Model, n_max: usize) -> Result<MomentReport> {
    let deviations = (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            let ln = PI.ln() + quad.ln_moment(n) + nf * (nf + 1.0) * model.q.ln_abs()
                - model.weights.ln(n as i64)?;
            Ok(ln.exp_m1().abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(MomentReport {
        deviations,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMomentReport {
    /// Relative mismatch of `∫ ρ(r) r^{2j+1} dr` against `|q|^{-j(j+1)} w_j / 2π`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub function_evaluations: u64,
}

/// Integrates `ρ(r) r^{2j+1}` adaptively on `[0, ∞)` for `j ≤ j_max`.
pub fn verify_density_moments(
    density: RadialDensity,
    model: &Model,
    j_max: usize,
) -> Result<DensityMomentReport> {
    let mut deviations = Vec::with_capacity(j_max + 1);
    let mut evals = 0u64;
    for j in 0..=j_max {
        let jf = j as f64;
        let target = (-jf * (jf + 1.0) * model.q.ln_abs() + model.weights.ln(j as i64)?).exp() / (2.0 * PI);
        // integrand peaks at r = sqrt(j + 1/2) and is below e^{-100} relative past +10
        let r_end = (jf + 0.5).sqrt() + 10.0;
        let pieces = (r_end / 0.5).ceil() as usize;
        let h = r_end / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
            let out = quadrature::double_exponential::integrate(
                |r| density.eval_r(r) * r.powi(2 * j as i32 + 1),
                a,
                b,
                1e-14 * target / pieces as f64,
            );
            evals += out.num_function_evaluations as u64;
            total += out.integral;
        }
        deviations.push((total / target - 1.0).abs());
    }
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(DensityMomentReport {
        deviations,
        max_deviation,
        function_evaluations: evals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramReport {
    /// `max |G − I|` over `j, k ≤ M`.
    pub max_deviation: f64,
    pub max_off_diagonal: f64,
    /// `G[j][j] − 1`.
    pub diagonal_error: Vec<f64>,
}

/// Rebuilds `G[j][k] = ∫ ⟨φ_j, φ_λ⟩⟨φ_λ, φ_k⟩ dρ` on the grid and compares with `I`.
pub fn verify_resolution_identity(grid: &PhaseSpaceGrid, model: &Model, basis: usize) -> Result<GramReport> {
    grid.require(basis, basis, "gram reconstruction")?;
    let dim = basis + 1;
    let mut g = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (lambda, weight) in grid.points() {
        let a = coherent_window(lambda, model, basis)?;
        for j in 0..dim {
            for k in 0..dim {
                g[(j, k)] += weight * a[j] * a[k].conj();
            }
        }
    }
    let mut max_deviation: f64 = 0.0;
    let mut max_off: f64 = 0.0;
    let mut diagonal_error = Vec::with_capacity(dim);
    for j in 0..dim {
        for k in 0..dim {
            let want = if j == k { 1.0 } else { 0.0 };
            let d = (g[(j, k)] - want).norm();
            max_deviation = max_deviation.max(d);
            if j == k {
                diagonal_error.push(g[(j, k)].re - 1.0);
            } else {
                max_off = max_off.max(d);
            }
        }
    }
    Ok(GramReport {
        max_deviation,
        max_off_diagonal: max_off,
        diagonal_error,
    })
}

/// Partial sums `Σ_{n≤N} ∫ |λ|^{2n} |q|^{n(n+1)} w_n^{-1} dρ`; each term is 1, so the
/// sums grow like `N + 1`.
pub fn norm_divergence_witness(quad: &RadialQuadrature, model: &Model, n_terms: usize) -> Result<Vec<f64>> {
    if quad.exact_degree() < n_terms {
        return Err(Error::InsufficientQuadrature {
            what: "divergence witness",
            needed: (n_terms + 1).div_ceil(2),
            have: quad.order,
        });
    }
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n_terms + 1);
    for n in 0..=n_terms {
        let nf = n as f64;
        let ln = PI.ln() + quad.ln_moment(n) + nf * (nf + 1.0) * model.q.ln_abs()
            - model.weights.ln(n as i64)?;
        acc += ln.exp();
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QParam;
    use crate::weights::WeightSequence;

    #[test]
    fn closed_form_normalization() {
        let quad = RadialDensity::Exponential.gauss_rule(12).unwrap();
        let r = verify_moments(&quad, &Model::segal_bargmann(), 10).unwrap();
        assert!(r.max_deviation < 1e-8, "{r:?}");
        assert!(r.deviations[0] < 1e-14);
    }

    #[test]
    fn corrupted_mass_detected() {
        let mut quad = RadialDensity::Exponential.gauss_rule(6).unwrap();
        for m in quad.masses.iter_mut() {
            *m *= 1.01;
        }
        let r = verify_moments(&quad, &Model::segal_bargmann(), 5).unwrap();
        assert!((r.max_deviation - 1e-2).abs() < 1e-6);
    }

    #[test]
    fn density_moments_adaptive() {
        let r = verify_density_moments(RadialDensity::Exponential, &Model::segal_bargmann(), 20).unwrap();
        assert!(r.max_deviation < 1e-9, "{r:?}");
    }

    #[test]
    fn gram_is_identity() {
        let quad = RadialDensity::Exponential.gauss_rule(12).unwrap();
        let grid = PhaseSpaceGrid::new(quad, 25).unwrap();
        let r = verify_resolution_identity(&grid, &Model::segal_bargmann(), 10).unwrap();
        assert!(r.max_deviation < 1e-8, "{r:?}");
    }

    #[test]
    fn gram_needs_enough_angles() {
        let quad = RadialDensity::Exponential.gauss_rule(12).unwrap();
        let grid = PhaseSpaceGrid::new(quad, 20).unwrap();
        assert!(matches!(
            verify_resolution_identity(&grid, &Model::segal_bargmann(), 10),
            Err(Error::InsufficientQuadrature { .. })
        ));
    }

    #[test]
    fn gram_for_atomic_measure() {
        let model = Model::new(WeightSequence::constant(1.0).unwrap(), QParam::one());
        let quad = super::super::MeasureRegistry::with_builtins().build("moments", &model, 6).unwrap();
        let grid = PhaseSpaceGrid::new(quad, 13).unwrap();
        let r = verify_resolution_identity(&grid, &model, 6).unwrap();
        assert!(r.max_deviation < 1e-12, "{r:?}");
    }

    #[test]
    fn divergence_partial_sums() {
        let quad = RadialDensity::Exponential.gauss_rule(12).unwrap();
        let s = norm_divergence_witness(&quad, &Model::segal_bargmann(), 20).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((s[9] - 10.0).abs() < 1e-6);
    }
}
