//! Gauss rules from raw moments: Chebyshev's algorithm in exact rational
//! arithmetic on the (rounded) moments, then Golub–Welsch on the Jacobi matrix.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{golub_welsch, MomentSequence, Provenance, RadialQuadrature};
use crate::error::{Error, Result};

/// Highest order attempted in double precision.
pub const MAX_ORDER: usize = 20;
/// Relative moment mismatch tolerated after de-scaling.
const RESIDUAL_TOL: f64 = 1e-8;

/// Order-`M` rule matching `m_0..m_{2M-1}`.
///
/// A vanishing Hankel determinant at step `k` means the moments come from a
/// `k`-atom measure; that atomic rule is returned. Negative determinants or
/// nodes below zero mean no positive measure on `[0, ∞)` has these moments.
pub fn gauss_quadrature_from_moments(m: &MomentSequence, order: usize) -> Result<RadialQuadrature> {
    if order == 0 {
        return Err(Error::Config("quadrature order must be positive".into()));
    }
    if m.len() < 2 * order {
        return Err(Error::Config(format!(
            "order {order} needs {} moments, got {}",
            2 * order,
            m.len()
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh {
            requested: order,
            achievable: largest_passing(m, MAX_ORDER + 1),
        });
    }
    match solve(m, order) {
        Err(Error::OrderTooHigh { .. }) => Err(Error::OrderTooHigh {
            requested: order,
            achievable: largest_passing(m, order),
        }),
        other => other,
    }
}

fn largest_passing(m: &MomentSequence, below: usize) -> usize {
    (1..below).rev().find(|&k| solve(m, k).is_ok()).unwrap_or(0)
}

fn too_high(order: usize) -> Error {
    Error::OrderTooHigh {
        requested: order,
        achievable: 0,
    }
}

fn rational(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

fn solve(m: &MomentSequence, order: usize) -> Result<RadialQuadrature> {
    let ln_m0 = m.ln_moments[0];
    let ln_s = m.ln_moments[1] - ln_m0;
    let count = 2 * order;
    let mut mu = Vec::with_capacity(count);
    for j in 0..count {
        let v = (m.ln_moments[j] - ln_m0 - j as f64 * ln_s).exp();
        if !v.is_finite() || v <= 0.0 {
            return Err(too_high(order));
        }
        mu.push(rational(v).ok_or_else(|| too_high(order))?);
    }

    let zero = BigRational::zero();
    let (alpha, beta) = chebyshev(&mu, order, &zero)?;
    let alpha_f: Vec<f64> = alpha.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
    let beta_f: Vec<f64> = beta.iter().map(|b| b.to_f64().unwrap_or(f64::NAN)).collect();
    if alpha_f.iter().chain(&beta_f).any(|v| !v.is_finite()) {
        return Err(too_high(order));
    }

    let (mut nodes, _) = golub_welsch(&alpha_f, &beta_f[1..], 1.0);
    for t in nodes.iter_mut() {
        *t = newton_polish(*t, &alpha_f, &beta_f);
    }
    let scale_t = nodes.iter().cloned().fold(1.0f64, |a, b| a.max(b.abs()));
    if nodes.iter().any(|t| *t < -1e-12 * scale_t) {
        return Err(Error::IndefiniteHankel { order: nodes.len() });
    }
    let masses: Vec<f64> = nodes
        .iter()
        .map(|t| christoffel(t.max(0.0), &alpha_f, &beta_f))
        .collect();
    if masses.iter().any(|w| !(*w > 0.0)) {
        return Err(too_high(order));
    }

    let s = ln_s.exp();
    let m0 = ln_m0.exp();
    let quad = RadialQuadrature {
        nodes: nodes.iter().map(|t| t.max(0.0) * s).collect(),
        masses: masses.iter().map(|w| w * m0).collect(),
        order,
        provenance: Provenance::MomentSolved,
    };
    for j in 0..count {
        let dev = (quad.ln_moment(j) - m.ln_moments[j]).exp_m1().abs();
        if !(dev <= RESIDUAL_TOL) {
            return Err(too_high(order));
        }
    }
    Ok(quad)
}

/// Recurrence coefficients `α_0..α_{n-1}`, `β_0..β_{n-1}` (`β_0 = μ_0`), where `n ≤ order`
/// is cut short when a Hankel determinant vanishes.
fn chebyshev(
    mu: &[BigRational],
    order: usize,
    zero: &BigRational,
) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    let len = mu.len();
    let mut alpha = vec![&mu[1] / &mu[0]];
    let mut beta = vec![mu[0].clone()];
    let mut prev2 = vec![zero.clone(); len];
    let mut prev = mu.to_vec();
    for k in 1..order {
        let mut row = vec![zero.clone(); len];
        for l in k..(len - k) {
            row[l] = &prev[l + 1] - &alpha[k - 1] * &prev[l] - &beta[k - 1] * &prev2[l];
        }
        if row[k].is_zero() {
            break;
        }
        if row[k].is_negative() {
            return Err(Error::IndefiniteHankel { order: k });
        }
        alpha.push(&row[k + 1] / &row[k] - &prev[k] / &prev[k - 1]);
        beta.push(&row[k] / &prev[k - 1]);
        prev2 = prev;
        prev = row;
    }
    Ok((alpha, beta))
}

/// `(p_n(t), p_n'(t))` for the monic orthogonal polynomial of degree `n = alpha.len()`.
fn monic_eval(t: f64, alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let (mut p0, mut p1) = (0.0, 1.0);
    let (mut d0, mut d1) = (0.0, 0.0);
    for k in 0..alpha.len() {
        let b = if k == 0 { 0.0 } else { beta[k] };
        let p2 = (t - alpha[k]) * p1 - b * p0;
        let d2 = p1 + (t - alpha[k]) * d1 - b * d0;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

fn newton_polish(t0: f64, alpha: &[f64], beta: &[f64]) -> f64 {
    let mut t = t0;
    for _ in 0..3 {
        let (p, d) = monic_eval(t, alpha, beta);
        if d == 0.0 || !p.is_finite() || !d.is_finite() {
            break;
        }
        let step = p / d;
        if !(step.abs() < 1e-6 * t.abs().max(1.0)) {
            break;
        }
        t -= step;
    }
    t
}

/// `1 / Σ_k p̃_k(t)²` with `p̃_k` orthonormal; `β_0` is the total mass.
fn christoffel(t: f64, alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let mut prev = 0.0;
    let mut cur = 1.0 / beta[0].sqrt();
    let mut sum = cur * cur;
    for k in 0..n - 1 {
        let b_k = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let next = ((t - alpha[k]) * cur - b_k * prev) / beta[k + 1].sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    1.0 / sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::RadialDensity;
    use crate::model::{Model, QParam};
    use crate::weights::WeightSequence;
    use std::f64::consts::PI;

    /// Laguerre `L_n` from its explicit coefficients.
    fn laguerre(n: usize, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * binom * x.powi(k as i32) / fact;
        }
        sum
    }

    /// Roots of `L_n` by sign scan plus bisection, weights `x / ((n+1)² L_{n+1}(x)²)`.
    fn laguerre_oracle(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut roots = Vec::new();
        let h = 1e-3;
        let mut x = 0.0;
        while roots.len() < n {
            let (a, b) = (x, x + h);
            if laguerre(n, a).signum() != laguerre(n, b).signum() {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if laguerre(n, lo).signum() == laguerre(n, mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x = b;
        }
        let w = roots
            .iter()
            .map(|r| r / (((n + 1) as f64).powi(2) * laguerre(n + 1, *r).powi(2)))
            .collect();
        (roots, w)
    }

    #[test]
    fn factorial_order_five_is_gauss_laguerre() {
        let m = MomentSequence::from_model(&Model::segal_bargmann(), 10).unwrap();
        let q = gauss_quadrature_from_moments(&m, 5).unwrap();
        let (roots, w) = laguerre_oracle(5);
        for k in 0..5 {
            assert!((q.nodes[k] - roots[k]).abs() < 1e-9 * roots[k].max(1.0), "{k}");
            assert!((q.masses[k] - w[k] / PI).abs() < 1e-9 * w[k] / PI, "{k}");
        }
    }

    #[test]
    fn moment_rule_agrees_with_closed_form_rule() {
        let m = MomentSequence::from_model(&Model::segal_bargmann(), 16).unwrap();
        let a = gauss_quadrature_from_moments(&m, 8).unwrap();
        let b = RadialDensity::Exponential.gauss_rule(8).unwrap();
        for k in 0..8 {
            assert!((a.nodes[k] - b.nodes[k]).abs() < 1e-8 * b.nodes[k].max(1.0));
        }
    }

    #[test]
    fn order_one_rule() {
        let model = Model::new(WeightSequence::power_factorial(0.5).unwrap(), QParam::real(0.8).unwrap());
        let m = MomentSequence::from_model(&model, 2).unwrap();
        let q = gauss_quadrature_from_moments(&m, 1).unwrap();
        assert_eq!(q.nodes.len(), 1);
        assert!((q.nodes[0] - m.value(1) / m.value(0)).abs() < 1e-14 * q.nodes[0]);
        assert!((q.masses[0] - m.value(0)).abs() < 1e-15);
    }

    #[test]
    fn constant_weights_give_unit_atom() {
        let model = Model::new(WeightSequence::constant(1.0).unwrap(), QParam::one());
        for order in [1, 3, 7] {
            let m = MomentSequence::from_model(&model, 2 * order).unwrap();
            let q = gauss_quadrature_from_moments(&m, order).unwrap();
            assert_eq!(q.nodes, vec![1.0]);
            assert!((q.masses[0] - 1.0 / PI).abs() < 1e-16);
            for j in 0..2 * order {
                assert!((q.ln_moment(j) - m.ln_moments[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn indefinite_moments_rejected() {
        // m_2 < m_1² / m_0 violates Cauchy–Schwarz
        let m = MomentSequence::from_ln(vec![0.0, 1f64.ln(), 0.5f64.ln(), 0.0]).unwrap();
        assert!(matches!(
            gauss_quadrature_from_moments(&m, 2),
            Err(Error::IndefiniteHankel { order: 1 })
        ));
    }

    #[test]
    fn order_cap() {
        let m = MomentSequence::from_model(&Model::segal_bargmann(), 44).unwrap();
        match gauss_quadrature_from_moments(&m, 22) {
            Err(Error::OrderTooHigh { requested, achievable }) => {
                assert_eq!(requested, 22);
                assert!(achievable >= 8 && achievable <= MAX_ORDER);
            }
            other => panic!("{other:?}"),
        }
    }
}
