//! The nilpotent case: `θ^l = θ̄^l = 0`, weights `w_0..w_{l-1}` and `w_n = 0` beyond.
//!
//! Convention: here the symbol multiplies from the right, `T_g φ = P(φ g)`, so the
//! annihilation matrix carries no power of `q`. The main Toeplitz module
//! multiplies from the left.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QParam;
use crate::toeplitz::{OperatorMeta, TruncatedOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagrassmannConfig {
    pub l: usize,
    pub weights: Vec<f64>,
    pub q: QParam,
}

impl ParagrassmannConfig {
    pub fn new(l: usize, weights: Vec<f64>, q: QParam) -> Result<Self> {
        let cfg = ParagrassmannConfig { l, weights, q };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit weights.
    pub fn uniform(l: usize, q: QParam) -> Result<Self> {
        Self::new(l, vec![1.0; l], q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::Config(format!("nilpotency order must be at least 2, got {}", self.l)));
        }
        if self.weights.len() != self.l {
            return Err(Error::Config(format!(
                "need exactly {} weights, got {}",
                self.l,
                self.weights.len()
            )));
        }
        for (index, &value) in self.weights.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(())
    }
}

/// `T_θ̄ θ^j = (w_j / w_{j-1})^{1/2} θ^{j-1}`, `T_θ̄ 1 = 0`.
pub fn pg_annihilation(cfg: &ParagrassmannConfig) -> Result<TruncatedOperator> {
    cfg.validate()?;
    let l = cfg.l;
    let w = &cfg.weights;
    let m = DMatrix::from_fn(l, l, |r, c| {
        if c == r + 1 {
            Complex64::new((w[c] / w[r]).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    TruncatedOperator::new(
        m,
        OperatorMeta {
            symbol: "T_tb (right multiplication)".into(),
            weights: format!("paragrassmann l={l}"),
            q: cfg.q.into(),
            exact: true,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub l: usize,
    /// Smallest `k` with `T^k = 0` exactly.
    pub nilpotency_index: usize,
    /// Distinct eigenvalues.
    pub eigenvalues: Vec<[f64; 2]>,
    pub algebraic_multiplicity: usize,
    /// Dimension of the kernel.
    pub eigenvector_count: usize,
    pub phase_space: Vec<[f64; 2]>,
    pub extreme: bool,
    /// `max |D⁻¹ T D − J_l|` for the diagonal `D` built from the superdiagonal.
    pub jordan_similarity_error: f64,
}

pub fn pg_structure_report(cfg: &ParagrassmannConfig) -> Result<StructureReport> {
    let t = pg_annihilation(cfg)?;
    let l = cfg.l;
    let m = t.entries();
    let zero = Complex64::new(0.0, 0.0);

    let mut power = DMatrix::identity(l, l);
    let mut nilpotency_index = 0;
    for k in 1..=l {
        power = &power * m;
        if power.iter().all(|z| *z == zero) {
            nilpotency_index = k;
            break;
        }
    }

    // upper triangular: eigenvalues are the diagonal entries
    let mut eigs: Vec<[f64; 2]> = Vec::new();
    for i in 0..l {
        let d = m[(i, i)];
        if !eigs.iter().any(|e| e[0] == d.re && e[1] == d.im) {
            eigs.push([d.re, d.im]);
        }
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|s| **s > 1e-12 * smax.max(1.0)).count();

    let mut d = vec![1.0; l];
    for j in 1..l {
        d[j] = d[j - 1] / m[(j - 1, j)].re;
    }
    let mut err: f64 = 0.0;
    for r in 0..l {
        for c in 0..l {
            let conj = m[(r, c)] * d[c] / d[r];
            let jordan = if c == r + 1 { 1.0 } else { 0.0 };
            err = err.max((conj - jordan).norm());
        }
    }

    Ok(StructureReport {
        l,
        nilpotency_index,
        eigenvalues: eigs,
        algebraic_multiplicity: l,
        eigenvector_count: l - rank,
        phase_space: vec![[0.0, 0.0]],
        extreme: true,
        jordan_similarity_error: err,
    })
}

/// Relative residual `‖Tψ − λψ‖ / ‖ψ‖` of the best candidate eigenvector for `λ`:
/// the recursion fixes `ψ` up to scale and only the last row can fail.
pub fn pg_eigen_residual(cfg: &ParagrassmannConfig, lambda: Complex64) -> Result<f64> {
    let t = pg_annihilation(cfg)?;
    let l = cfg.l;
    let mut psi = nalgebra::DVector::from_element(l, Complex64::new(0.0, 0.0));
    psi[0] = Complex64::new(1.0, 0.0);
    for n in 0..l - 1 {
        psi[n + 1] = lambda * psi[n] / t.get(n, n + 1);
    }
    let r = t.apply(&psi) - psi.map(|z| z * lambda);
    Ok(r.norm() / psi.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(w: Vec<f64>) -> ParagrassmannConfig {
        ParagrassmannConfig::new(w.len(), w, QParam::real(3.0).unwrap()).unwrap()
    }

    #[test]
    fn two_by_two() {
        let t = pg_annihilation(&cfg(vec![1.0, 1.0])).unwrap();
        assert_eq!(t.get(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(t.entries().iter().filter(|z| z.norm() != 0.0).count(), 1);
    }

    #[test]
    fn ratio_table() {
        let t = pg_annihilation(&cfg(vec![1.0, 1.0, 2.0])).unwrap();
        assert_eq!(t.get(0, 1).re, 1.0);
        assert!((t.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        for r in 0..3 {
            assert_eq!(t.get(r, 0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn q_independent() {
        let a = pg_annihilation(&ParagrassmannConfig::uniform(4, QParam::real(2.0).unwrap()).unwrap()).unwrap();
        let b = pg_annihilation(&ParagrassmannConfig::uniform(4, QParam::unimodular(1.0)).unwrap()).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn structure_l4() {
        let r = pg_structure_report(&cfg(vec![1.0, 3.0, 0.5, 7.0])).unwrap();
        assert_eq!(r.nilpotency_index, 4);
        assert_eq!(r.eigenvalues, vec![[0.0, 0.0]]);
        assert_eq!(r.eigenvector_count, 1);
        assert!(r.extreme);
        assert!(r.jordan_similarity_error < 1e-12);
    }

    #[test]
    fn only_zero_is_an_eigenvalue() {
        let c = cfg(vec![1.0, 2.0, 6.0]);
        assert_eq!(pg_eigen_residual(&c, Complex64::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(pg_eigen_residual(&c, Complex64::new(0.1, 0.0)).unwrap() > 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ParagrassmannConfig::new(1, vec![1.0], QParam::one()).is_err());
        assert!(ParagrassmannConfig::new(2, vec![1.0, -1.0], QParam::one()).is_err());
        assert!(ParagrassmannConfig::new(3, vec![1.0, 1.0], QParam::one()).is_err());
    }
}
