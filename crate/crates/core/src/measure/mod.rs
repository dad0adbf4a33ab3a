//! Radial measures for the resolution of the identity, in `t = r²` coordinates.
//!
//! A rule `{(t_k, μ_k)}` stands in for `ρ(√t) dt`; the moment targets are
//! `∫ ρ(√t) t^j dt = |q|^{-j(j+1)} w_j / π`. Atomic rules are accepted: every
//! downstream computation only sees moments.

mod moments;
mod verify;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::numeric::{ln_factorial, log_sum_exp};

pub use moments::{gauss_quadrature_from_moments, MAX_ORDER};
pub use verify::{
    norm_divergence_witness, verify_density_moments, verify_moments, verify_resolution_identity,
    DensityMomentReport, GramReport, MomentReport,
};

/// Known closed-form radial densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialDensity {
    /// `ρ(√t) = e^{-t} / π` on `[0, ∞)`.
    Exponential,
}

impl RadialDensity {
    /// `ρ(√t)`.
    pub fn eval_t(&self, t: f64) -> f64 {
        match self {
            RadialDensity::Exponential => (-t).exp() / PI,
        }
    }

    /// `ρ(r)`.
    pub fn eval_r(&self, r: f64) -> f64 {
        self.eval_t(r * r)
    }

    /// `ln ∫ ρ(√t) t^j dt`.
    pub fn ln_moment(&self, j: usize) -> f64 {
        match self {
            RadialDensity::Exponential => ln_factorial(j as u64) - PI.ln(),
        }
    }

    /// Gauss rule of the given order built from the density's own three-term recurrence.
    pub fn gauss_rule(&self, order: usize) -> Result<RadialQuadrature> {
        if order == 0 {
            return Err(Error::Config("quadrature order must be positive".into()));
        }
        match self {
            RadialDensity::Exponential => {
                // Laguerre: α_k = 2k + 1, β_k = k²
                let alpha: Vec<f64> = (0..order).map(|k| 2.0 * k as f64 + 1.0).collect();
                let beta: Vec<f64> = (1..order).map(|k| (k * k) as f64).collect();
                let (nodes, masses) = golub_welsch(&alpha, &beta, 1.0 / PI);
                Ok(RadialQuadrature {
                    nodes,
                    masses,
                    order,
                    provenance: Provenance::ClosedForm,
                })
            }
        }
    }
}

impl fmt::Display for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialDensity::Exponential => f.write_str("exp(-t)/pi"),
        }
    }
}

/// Closed-form density for the model, if one is tabulated.
pub fn closed_form_density(model: &Model) -> Option<RadialDensity> {
    model.weights.closed_form_density(model.q.abs())
}

/// Nodes and weights of the Jacobi matrix with diagonal `alpha` and off-diagonal `sqrt(beta)`.
pub(crate) fn golub_welsch(alpha: &[f64], beta: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let m = alpha.len();
    let jac = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i].sqrt()
        } else if j + 1 == i {
            beta[j].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    MomentSolved,
}

/// Positive rule on `[0, R_w²]` in `t = r²`. `order` is the `M` for which moments
/// `0..2M-1` are matched; atomic solutions may carry fewer than `M` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialQuadrature {
    pub nodes: Vec<f64>,
    pub masses: Vec<f64>,
    pub order: usize,
    pub provenance: Provenance,
}

impl RadialQuadrature {
    /// Highest power of `t` integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.masses).map(|(t, m)| m * f(*t)).sum()
    }

    /// `ln Σ μ_k t_k^j`.
    pub fn ln_moment(&self, j: usize) -> f64 {
        log_sum_exp(
            self.nodes
                .iter()
                .zip(&self.masses)
                .map(|(t, m)| m.ln() + if j == 0 { 0.0 } else { j as f64 * t.ln() }),
        )
    }
}

/// Target moments `m_j = |q|^{-j(j+1)} w_j / π`, stored as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSequence {
    pub ln_moments: Vec<f64>,
    /// `s = m_1 / m_0`, the `t`-rescaling applied before solving.
    pub scale: f64,
}

impl MomentSequence {
    /// Moments `m_0..m_{count-1}` of the model.
    pub fn from_model(model: &Model, count: usize) -> Result<Self> {
        let ln_moments = (0..count)
            .map(|j| {
                let jf = j as f64;
                Ok(-jf * (jf + 1.0) * model.q.ln_abs() + model.weights.ln(j as i64)? - PI.ln())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ln(ln_moments)
    }

    pub fn from_ln(ln_moments: Vec<f64>) -> Result<Self> {
        if ln_moments.is_empty() || ln_moments.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("moments must be finite and positive".into()));
        }
        let scale = if ln_moments.len() > 1 {
            (ln_moments[1] - ln_moments[0]).exp()
        } else {
            1.0
        };
        Ok(MomentSequence { ln_moments, scale })
    }

    pub fn len(&self) -> usize {
        self.ln_moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_moments.is_empty()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.ln_moments[j].exp()
    }
}

/// A way of producing a radial rule for a model.
pub trait MeasureStrategy: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, model: &Model, order: usize) -> Result<RadialQuadrature>;
}

#[derive(Debug)]
struct ClosedFormStrategy;

impl MeasureStrategy for ClosedFormStrategy {
    fn name(&self) -> &'static str {
        "closed-form"
    }
    fn build(&self, model: &Model, order: usize) -> Result<RadialQuadrature> {
        let density = closed_form_density(model).ok_or_else(|| {
            Error::Config(format!(
                "no closed-form density for weights {} at |q| = {}",
                model.weights.label(),
                model.q.abs()
            ))
        })?;
        density.gauss_rule(order)
    }
}

#[derive(Debug)]
struct MomentStrategy;

impl MeasureStrategy for MomentStrategy {
    fn name(&self) -> &'static str {
        "moments"
    }
    fn build(&self, model: &Model, order: usize) -> Result<RadialQuadrature> {
        let m = MomentSequence::from_model(model, 2 * order)?;
        gauss_quadrature_from_moments(&m, order)
    }
}

#[derive(Debug)]
struct AutoStrategy;

impl MeasureStrategy for AutoStrategy {
    fn name(&self) -> &'static str {
        "auto"
    }
    fn build(&self, model: &Model, order: usize) -> Result<RadialQuadrature> {
        match closed_form_density(model) {
            Some(d) => d.gauss_rule(order),
            None => MomentStrategy.build(model, order),
        }
    }
}

/// Name-keyed table of measure strategies.
#[derive(Debug, Clone)]
pub struct MeasureRegistry {
    entries: BTreeMap<&'static str, Arc<dyn MeasureStrategy>>,
}

impl MeasureRegistry {
    pub fn empty() -> Self {
        MeasureRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        for s in [
            Arc::new(ClosedFormStrategy) as Arc<dyn MeasureStrategy>,
            Arc::new(MomentStrategy),
            Arc::new(AutoStrategy),
        ] {
            r.register(s).expect("builtin names are distinct");
        }
        r
    }

    pub fn register(&mut self, s: Arc<dyn MeasureStrategy>) -> Result<()> {
        let name = s.name();
        if self.entries.contains_key(name) {
            return Err(Error::Config(format!("measure strategy '{name}' already registered")));
        }
        self.entries.insert(name, s);
        Ok(())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MeasureStrategy>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "measure",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn build(&self, name: &str, model: &Model, order: usize) -> Result<RadialQuadrature> {
        self.get(name)?.build(model, order)
    }
}

/// Rule `{(t_k, μ_k)}` crossed with `A` uniform angles: `∫ F dρ ≈ Σ π μ_k / A · F(√t_k e^{iθ_a})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub quad: RadialQuadrature,
    pub angles: usize,
    pub offset: f64,
}

impl PhaseSpaceGrid {
    pub fn new(quad: RadialQuadrature, angles: usize) -> Result<Self> {
        Self::with_offset(quad, angles, 0.0)
    }

    pub fn with_offset(quad: RadialQuadrature, angles: usize, offset: f64) -> Result<Self> {
        if angles == 0 {
            return Err(Error::Config("angular points must be positive".into()));
        }
        Ok(PhaseSpaceGrid {
            quad,
            angles,
            offset,
        })
    }

    /// `(λ, weight)` pairs.
    pub fn points(&self) -> Vec<(Complex64, f64)> {
        let mut out = Vec::with_capacity(self.quad.nodes.len() * self.angles);
        for (t, m) in self.quad.nodes.iter().zip(&self.quad.masses) {
            let r = t.max(0.0).sqrt();
            let w = PI * m / self.angles as f64;
            for a in 0..self.angles {
                let th = 2.0 * PI * a as f64 / self.angles as f64 + self.offset;
                out.push((Complex64::from_polar(r, th), w));
            }
        }
        out
    }

    /// Fails unless polynomials of radial degree `degree` (in `t`) and angular
    /// frequency up to `freq` are integrated exactly.
    pub fn require(&self, degree: usize, freq: usize, what: &'static str) -> Result<()> {
        if self.quad.exact_degree() < degree {
            return Err(Error::InsufficientQuadrature {
                what,
                needed: (degree + 1).div_ceil(2),
                have: self.quad.order,
            });
        }
        if self.angles < 2 * freq + 1 {
            return Err(Error::InsufficientQuadrature {
                what,
                needed: 2 * freq + 1,
                have: self.angles,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QParam;
    use crate::weights::WeightSequence;

    #[test]
    fn closed_form_table() {
        assert_eq!(closed_form_density(&Model::segal_bargmann()), Some(RadialDensity::Exponential));
        let rot = Model::new(WeightSequence::factorial(), QParam::unimodular(1.0));
        assert_eq!(closed_form_density(&rot), Some(RadialDensity::Exponential));
        let c = Model::new(WeightSequence::constant(1.0).unwrap(), QParam::one());
        assert_eq!(closed_form_density(&c), None);
        let e = Model::new(WeightSequence::explicit(vec![1.0, 2.0, 5.0]).unwrap(), QParam::one());
        assert_eq!(closed_form_density(&e), None);
    }

    #[test]
    fn laguerre_rule_moments() {
        let q = RadialDensity::Exponential.gauss_rule(12).unwrap();
        for j in 0..24 {
            let got = q.ln_moment(j);
            let want = RadialDensity::Exponential.ln_moment(j);
            assert!((got - want).abs() < 1e-11, "j={j}: {got} vs {want}");
        }
        assert!(q.masses.iter().all(|m| *m > 0.0));
    }

    #[test]
    fn registry_lookup() {
        let r = MeasureRegistry::with_builtins();
        assert_eq!(r.names(), vec!["auto", "closed-form", "moments"]);
        let err = r.get("nope").unwrap_err();
        assert!(err.to_string().contains("closed-form"));
        let c = Model::new(WeightSequence::constant(1.0).unwrap(), QParam::one());
        assert!(r.build("closed-form", &c, 4).is_err());
        let q = r.build("auto", &c, 4).unwrap();
        assert_eq!(q.provenance, Provenance::MomentSolved);
    }

    #[test]
    fn quadrature_json_shape() {
        let q = RadialDensity::Exponential.gauss_rule(2).unwrap();
        let v = serde_json::to_value(&q).unwrap();
        assert_eq!(v["order"], 2);
        assert_eq!(v["provenance"], "closed-form");
        assert_eq!(v["nodes"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn grid_weights_sum_to_mass() {
        let q = RadialDensity::Exponential.gauss_rule(5).unwrap();
        let g = PhaseSpaceGrid::new(q, 7).unwrap();
        let total: f64 = g.points().iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
