//! Exact arithmetic in the Manin plane `θθ̄ = q θ̄θ`.
//!
//! Elements are kept in normal order (θ powers left of θ̄ powers). Each
//! coefficient is a finite Laurent polynomial in the concrete `q` of the
//! element: `Σ_e c_e q^e` with integer `e`. Products only shift integer
//! exponents, so no power of `q` is ever rounded or overflowed until the
//! caller asks for a number with [`ManinElement::coefficient`].
//!
//! Only exact zeros are pruned.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QParam;
use crate::weights::WeightSequence;

/// `θ^i θ̄^j`. Ordered lexicographically on `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ManinMonomial {
    pub i: u32,
    pub j: u32,
}

impl ManinMonomial {
    pub const ONE: ManinMonomial = ManinMonomial { i: 0, j: 0 };

    pub fn new(i: u32, j: u32) -> Self {
        ManinMonomial { i, j }
    }

    /// `θ^i θ̄^j · θ^k θ̄^l = q^{-jk} θ^{i+k} θ̄^{j+l}`, returned as `(monomial, q exponent)`.
    pub fn mul(self, rhs: ManinMonomial) -> Result<(ManinMonomial, i64)> {
        let i = self.i.checked_add(rhs.i).ok_or(Error::ExponentOverflow)?;
        let j = self.j.checked_add(rhs.j).ok_or(Error::ExponentOverflow)?;
        let e = (self.j as i64)
            .checked_mul(rhs.i as i64)
            .ok_or(Error::ExponentOverflow)?;
        Ok((ManinMonomial { i, j }, -e))
    }

    /// Holomorphic degree change `i - j`.
    pub fn degree_shift(self) -> i64 {
        self.i as i64 - self.j as i64
    }
}

/// Laurent polynomial in `q` with complex coefficients, exponent → coefficient.
type QPoly = BTreeMap<i64, Complex64>;

fn add_into(poly: &mut QPoly, e: i64, c: Complex64) {
    if c == Complex64::new(0.0, 0.0) {
        return;
    }
    let slot = poly.entry(e).or_insert(Complex64::new(0.0, 0.0));
    *slot += c;
    if *slot == Complex64::new(0.0, 0.0) {
        poly.remove(&e);
    }
}

fn eval_poly(poly: &QPoly, q: &QParam) -> Complex64 {
    poly.iter().map(|(&e, &c)| c * q.pow(e)).sum()
}

/// Finite combination of normal-ordered monomials for a fixed `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManinElement {
    q: QParam,
    terms: BTreeMap<ManinMonomial, QPoly>,
}

impl ManinElement {
    pub fn zero(q: QParam) -> Self {
        ManinElement {
            q,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(q: QParam) -> Self {
        Self::monomial(q, 0, 0, Complex64::new(1.0, 0.0))
    }

    pub fn monomial(q: QParam, i: u32, j: u32, coeff: Complex64) -> Self {
        Self::monomial_q(q, i, j, coeff, 0)
    }

    /// `coeff · q^e · θ^i θ̄^j`.
    pub fn monomial_q(q: QParam, i: u32, j: u32, coeff: Complex64, e: i64) -> Self {
        let mut out = Self::zero(q);
        let mut poly = QPoly::new();
        add_into(&mut poly, e, coeff);
        if !poly.is_empty() {
            out.terms.insert(ManinMonomial::new(i, j), poly);
        }
        out
    }

    pub fn theta(q: QParam) -> Self {
        Self::monomial(q, 1, 0, Complex64::new(1.0, 0.0))
    }

    pub fn theta_bar(q: QParam) -> Self {
        Self::monomial(q, 0, 1, Complex64::new(1.0, 0.0))
    }

    /// The basis vector `φ_n = w_n^{-1/2} θ^n`.
    pub fn basis_vector(q: QParam, n: u32, w: &WeightSequence) -> Result<Self> {
        let scale = (-0.5 * w.ln(n as i64)?).exp();
        Ok(Self::monomial(q, n, 0, Complex64::new(scale, 0.0)))
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomials with their exact `q`-exponent expansions.
    pub fn raw_terms(&self) -> impl Iterator<Item = (ManinMonomial, &BTreeMap<i64, Complex64>)> {
        self.terms.iter().map(|(m, p)| (*m, p))
    }

    /// Monomials with numerically evaluated coefficients, in lexicographic order.
    pub fn terms(&self) -> Vec<(ManinMonomial, Complex64)> {
        self.terms
            .iter()
            .map(|(m, p)| (*m, eval_poly(p, &self.q)))
            .collect()
    }

    pub fn coefficient(&self, m: ManinMonomial) -> Complex64 {
        self.terms
            .get(&m)
            .map_or(Complex64::new(0.0, 0.0), |p| eval_poly(p, &self.q))
    }

    fn check_q(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(Error::Config(
                "cannot combine Manin elements with different q".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_q(other)?;
        let mut out = self.clone();
        for (m, poly) in &other.terms {
            let slot = out.terms.entry(*m).or_default();
            for (&e, &c) in poly {
                add_into(slot, e, c);
            }
            if slot.is_empty() {
                out.terms.remove(m);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.q);
        for (m, poly) in &self.terms {
            let mut p = QPoly::new();
            for (&e, &c) in poly {
                add_into(&mut p, e, c * s);
            }
            if !p.is_empty() {
                out.terms.insert(*m, p);
            }
        }
        out
    }

    /// Algebra product, returned in normal order.
    pub fn normal_order_product(&self, other: &Self) -> Result<Self> {
        self.check_q(other)?;
        let mut out = Self::zero(self.q);
        for (ma, pa) in &self.terms {
            for (mb, pb) in &other.terms {
                let (m, shift) = ma.mul(*mb)?;
                let slot = out.terms.entry(m).or_default();
                for (&ea, &ca) in pa {
                    for (&eb, &cb) in pb {
                        let e = ea
                            .checked_add(eb)
                            .and_then(|s| s.checked_add(shift))
                            .ok_or(Error::ExponentOverflow)?;
                        add_into(slot, e, ca * cb);
                    }
                }
                if slot.is_empty() {
                    out.terms.remove(&m);
                }
            }
        }
        Ok(out)
    }

    /// Projection `P` onto the holomorphic subalgebra:
    /// `P(θ^i θ̄^j) = (w_i / w_{i-j}) θ^{i-j}` for `i ≥ j`, zero otherwise.
    pub fn project(&self, w: &WeightSequence) -> Result<Self> {
        let mut out = Self::zero(self.q);
        for (m, poly) in &self.terms {
            if m.i < m.j {
                continue;
            }
            let k = m.i - m.j;
            let ratio = (w.ln(m.i as i64)? - w.ln(k as i64)?).exp();
            let target = ManinMonomial::new(k, 0);
            let slot = out.terms.entry(target).or_default();
            for (&e, &c) in poly {
                add_into(slot, e, c * ratio);
            }
            if slot.is_empty() {
                out.terms.remove(&target);
            }
        }
        Ok(out)
    }

    /// Whether the element lies in the holomorphic subalgebra `C[θ]`.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(|m| m.j == 0)
    }

    /// Record form `{i, j, re, im}` with q-powers evaluated.
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms()
            .into_iter()
            .map(|(m, c)| TermRecord {
                i: m.i,
                j: m.j,
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn from_records(q: QParam, records: &[TermRecord]) -> Result<Self> {
        records.iter().try_fold(Self::zero(q), |acc, r| {
            acc.add(&Self::monomial(q, r.i, r.j, Complex64::new(r.re, r.im)))
        })
    }

    /// Parses a sum of terms like `(1,-0.5) th^2 tb + 3 tb^2 - th`.
    /// Factors are multiplied in the order written, so `tb th` is reordered.
    pub fn parse(q: QParam, s: &str) -> Result<Self> {
        let mut out = Self::zero(q);
        for term in crate::symbols::split_terms(s)? {
            let (coeff, factors) = crate::symbols::parse_term_head(&term)?;
            let mut acc = Self::monomial(q, 0, 0, coeff);
            for f in factors {
                let (name, pow) = crate::symbols::parse_power(&f)?;
                let factor = match name.as_str() {
                    "th" => Self::monomial(q, pow, 0, Complex64::new(1.0, 0.0)),
                    "tb" => Self::monomial(q, 0, pow, Complex64::new(1.0, 0.0)),
                    other => return Err(Error::Parse(format!("unknown factor '{other}'"))),
                };
                acc = acc.normal_order_product(&factor)?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }
}

impl fmt::Display for ManinElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms()
            .into_iter()
            .map(|(m, c)| format!("({},{}) th^{} tb^{}", c.re, c.im, m.i, m.j))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Serialized term of a [`ManinElement`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub i: u32,
    pub j: u32,
    pub re: f64,
    pub im: f64,
}

/// The sesquilinear form `⟨θ^i θ̄^j, θ^k θ̄^l⟩ = w_{i+l} δ_{i-j, k-l}`,
/// antilinear in the first slot.
pub fn sesquilinear_form(a: &ManinElement, b: &ManinElement, w: &WeightSequence) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            if ma.degree_shift() != mb.degree_shift() {
                continue;
            }
            let idx = ma.i as i64 + mb.j as i64;
            acc += ca.conj() * cb * w.value(idx)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn q2() -> QParam {
        QParam::new(c(0.7, 0.4)).unwrap()
    }

    #[test]
    fn theta_bar_times_theta() {
        let q = q2();
        let p = ManinElement::theta_bar(q)
            .normal_order_product(&ManinElement::theta(q))
            .unwrap();
        let (m, poly) = p.raw_terms().next().unwrap();
        assert_eq!(m, ManinMonomial::new(1, 1));
        assert_eq!(poly.iter().collect::<Vec<_>>(), vec![(&-1, &c(1.0, 0.0))]);
    }

    #[test]
    fn worked_product_example() {
        // (θ²θ̄)(θθ̄) = q^{-1} θ³θ̄²
        let q = q2();
        let a = ManinElement::monomial(q, 2, 1, c(1.0, 0.0));
        let b = ManinElement::monomial(q, 1, 1, c(1.0, 0.0));
        let p = a.normal_order_product(&b).unwrap();
        let (m, poly) = p.raw_terms().next().unwrap();
        assert_eq!(m, ManinMonomial::new(3, 2));
        assert_eq!(poly.keys().copied().collect::<Vec<_>>(), vec![-1]);
    }

    #[test]
    fn unit_law() {
        let q = q2();
        let a = ManinElement::monomial(q, 3, 5, c(0.3, -2.0));
        let one = ManinElement::one(q);
        assert_eq!(a.normal_order_product(&one).unwrap(), a);
        assert_eq!(one.normal_order_product(&a).unwrap(), a);
    }

    #[test]
    fn exponent_overflow_detected() {
        let q = q2();
        let a = ManinElement::monomial(q, u32::MAX, 0, c(1.0, 0.0));
        let b = ManinElement::theta(q);
        assert_eq!(a.normal_order_product(&b), Err(Error::ExponentOverflow));
    }

    #[test]
    fn form_examples() {
        let w = WeightSequence::explicit(vec![1.0, 2.0, 3.0, 5.0, 7.0, 11.0]).unwrap();
        let q = q2();
        let t2 = ManinElement::monomial(q, 2, 0, c(1.0, 0.0));
        assert_eq!(sesquilinear_form(&t2, &t2, &w).unwrap(), c(3.0, 0.0));
        // ⟨θ²θ̄, θ³θ̄²⟩ = w_4
        let a = ManinElement::monomial(q, 2, 1, c(1.0, 0.0));
        let b = ManinElement::monomial(q, 3, 2, c(1.0, 0.0));
        assert_eq!(sesquilinear_form(&a, &b, &w).unwrap(), c(7.0, 0.0));
        let t = ManinElement::theta(q);
        let tb = ManinElement::theta_bar(q);
        assert_eq!(sesquilinear_form(&t, &tb, &w).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn form_agrees_with_index_enumeration() {
        // brute force: enumerate all (i,j,k,l) ≤ 3 and compare with the delta rule
        let w = WeightSequence::factorial();
        let q = q2();
        for i in 0..4u32 {
            for j in 0..4u32 {
                for k in 0..4u32 {
                    for l in 0..4u32 {
                        let a = ManinElement::monomial(q, i, j, c(1.0, 0.0));
                        let b = ManinElement::monomial(q, k, l, c(1.0, 0.0));
                        let got = sesquilinear_form(&a, &b, &w).unwrap();
                        let want = if i as i32 - j as i32 == k as i32 - l as i32 {
                            (1..=(i + l)).product::<u32>() as f64
                        } else {
                            0.0
                        };
                        assert!((got.re - want).abs() < 1e-12 && got.im == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn projection_examples() {
        let q = q2();
        let w = WeightSequence::factorial();
        let p = ManinElement::monomial(q, 3, 1, c(1.0, 0.0)).project(&w).unwrap();
        let terms = p.terms();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, ManinMonomial::new(2, 0));
        assert!((terms[0].1 - c(3.0, 0.0)).norm() < 1e-13);
        assert!(ManinElement::theta_bar(q).project(&w).unwrap().is_zero());
        let t4 = ManinElement::monomial(q, 4, 0, c(2.0, 1.0));
        assert_eq!(t4.project(&w).unwrap(), t4);
    }

    #[test]
    fn projection_matches_one_term_sum() {
        // P(x) = Σ_k w_k^{-1} ⟨θ^k, x⟩ θ^k, evaluated directly from the form
        let q = q2();
        let w = WeightSequence::factorial();
        let x = ManinElement::monomial(q, 5, 2, c(1.0, -1.0));
        let p = x.project(&w).unwrap();
        for k in 0..8u32 {
            let tk = ManinElement::monomial(q, k, 0, c(1.0, 0.0));
            let want = sesquilinear_form(&tk, &x, &w).unwrap() / w.value(k as i64).unwrap();
            let got = p.coefficient(ManinMonomial::new(k, 0));
            assert!((got - want).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn parse_and_records() {
        let q = QParam::one();
        let g = ManinElement::parse(q, "(0.5,1) th^2 tb + tb - 2 th").unwrap();
        let recs = g.to_records();
        assert_eq!(recs.len(), 3);
        let back = ManinElement::from_records(q, &recs).unwrap();
        assert_eq!(back.terms(), g.terms());
        assert!(ManinElement::parse(q, "th^2 xx").is_err());
    }
}
