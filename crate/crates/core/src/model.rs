//! The deformation parameter `q` and the `(weights, q)` pair that fixes a theory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::from_log_polar;
use crate::weights::WeightSequence;

/// Non-zero complex deformation parameter of the relation `θθ̄ = q θ̄θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct QParam {
    value: Complex64,
}

impl QParam {
    pub fn new(value: Complex64) -> Result<Self> {
        if value.re == 0.0 && value.im == 0.0 {
            return Err(Error::ZeroQ);
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Config(format!("q must be finite, got {value}")));
        }
        Ok(QParam { value })
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0))
    }

    /// `q = e^{i angle}`.
    pub fn unimodular(angle: f64) -> Self {
        QParam {
            value: Complex64::from_polar(1.0, angle),
        }
    }

    pub fn one() -> Self {
        QParam {
            value: Complex64::new(1.0, 0.0),
        }
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }

    pub fn ln_abs(&self) -> f64 {
        self.value.norm().ln()
    }

    pub fn arg(&self) -> f64 {
        self.value.arg()
    }

    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }

    /// `q^e`. Small exponents use repeated multiplication so that values like
    /// `i^3` stay exact; large ones go through log-polar form.
    pub fn pow(&self, e: i64) -> Complex64 {
        if e.unsigned_abs() <= 64 {
            let p = self.value.powi(e as i32);
            if p.re.is_finite() && p.im.is_finite() && p.norm() > 0.0 {
                return p;
            }
        }
        let (ln, ph) = self.pow_log_polar(e);
        from_log_polar(ln, ph)
    }

    /// `exp(ln_scale) · q^e`, exact for small exponents and overflow-free for large ones.
    pub fn scaled_pow(&self, e: i64, ln_scale: f64) -> Complex64 {
        if e.unsigned_abs() <= 64 && ln_scale.abs() < 600.0 {
            let p = self.value.powi(e as i32);
            let s = ln_scale.exp();
            let v = p * s;
            if v.re.is_finite() && v.im.is_finite() && p.norm() > 0.0 && p.norm() < 1e300 {
                return v;
            }
        }
        let (ln, ph) = self.pow_log_polar(e);
        from_log_polar(ln + ln_scale, ph)
    }

    /// `(ln|q^e|, arg q^e)` without materializing `q^e`.
    pub fn pow_log_polar(&self, e: i64) -> (f64, f64) {
        let ef = e as f64;
        (ef * self.ln_abs(), ef * self.arg())
    }
}

impl TryFrom<[f64; 2]> for QParam {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        QParam::new(Complex64::new(v[0], v[1]))
    }
}

impl From<QParam> for [f64; 2] {
    fn from(q: QParam) -> Self {
        [q.value.re, q.value.im]
    }
}

/// A concrete theory: weights plus deformation parameter.
#[derive(Debug, Clone)]
pub struct Model {
    pub weights: WeightSequence,
    pub q: QParam,
}

impl Model {
    pub fn new(weights: WeightSequence, q: QParam) -> Self {
        Model { weights, q }
    }

    /// Factorial weights with `q = 1`: the Segal–Bargmann case.
    pub fn segal_bargmann() -> Self {
        Model::new(WeightSequence::factorial(), QParam::one())
    }

    /// `ln` of `|q|^{n(n+1)} / w_n`, the n-th term of `‖φ_λ‖²` at `|λ| = 1`.
    pub fn ln_norm_term(&self, n: usize) -> Result<f64> {
        let nf = n as f64;
        Ok(nf * (nf + 1.0) * self.q.ln_abs() - self.weights.ln(n as i64)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_q_rejected() {
        assert_eq!(QParam::new(Complex64::new(0.0, 0.0)), Err(Error::ZeroQ));
        assert!(QParam::new(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn small_powers_are_exact() {
        let q = QParam::new(Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(q.pow(3), Complex64::new(0.0, -1.0));
        assert_eq!(q.pow(-1), Complex64::new(0.0, -1.0));
        assert_eq!(q.pow(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn large_powers_use_log_polar() {
        let q = QParam::real(2.0).unwrap();
        let p = q.pow(-2000);
        assert_eq!(p, Complex64::new(0.0, 0.0));
        let (ln, ph) = q.pow_log_polar(-2000);
        assert!((ln + 2000.0 * 2f64.ln()).abs() < 1e-10);
        assert_eq!(ph, 0.0);
    }

    #[test]
    fn serde_as_pair() {
        let q: QParam = serde_json::from_str("[0.5, -1.0]").unwrap();
        assert_eq!(q.value(), Complex64::new(0.5, -1.0));
        assert!(serde_json::from_str::<QParam>("[0.0, 0.0]").is_err());
    }
}
