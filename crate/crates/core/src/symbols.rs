//! Lower symbols, coherent state quantization `Q_cs` and the secondary
//! Toeplitz operators `S_f`, plus the small term grammar shared with the
//! Manin-symbol parser.
//!
//! Grammar: terms joined by `+`/`-`; each term is an optional coefficient
//! (`2.5`, `(re,im)`) followed by factors `name^k` separated by spaces or `*`.
//! Manin symbols use `th`, `tb`; phase-space symbols use `L`, `Lc`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::coherent::{coherent_coefficients, coherent_norm_sq, coherent_window};
use crate::error::{Error, Result};
use crate::measure::PhaseSpaceGrid;
use crate::model::Model;
use crate::toeplitz::{OperatorMeta, TruncatedOperator};

/// Splits at top-level `+`/`-`, keeping each sign with the term that follows.
pub fn split_terms(s: &str) -> Result<Vec<String>> {
    let mut terms = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    let mut prev: Option<char> = None;
    let mut prev2: Option<char> = None;
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced ')' in '{s}'")));
                }
            }
            _ => {}
        }
        let exponent_sign = matches!(prev, Some('e' | 'E'))
            && prev2.is_some_and(|c| c.is_ascii_digit() || c == '.');
        if (ch == '+' || ch == '-') && depth == 0 && !exponent_sign && !cur.trim().is_empty() {
            terms.push(cur.trim().to_string());
            cur.clear();
        }
        cur.push(ch);
        if !ch.is_whitespace() {
            prev2 = prev;
            prev = Some(ch);
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced '(' in '{s}'")));
    }
    if !cur.trim().is_empty() {
        terms.push(cur.trim().to_string());
    }
    if terms.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(terms)
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number '{}'", s.trim())))
}

/// Reads the sign and coefficient of a term; returns it with the remaining factors.
pub fn parse_term_head(term: &str) -> Result<(Complex64, Vec<String>)> {
    let mut rest = term.trim();
    let mut sign = 1.0;
    while let Some(r) = rest.strip_prefix(['+', '-']) {
        if rest.starts_with('-') {
            sign = -sign;
        }
        rest = r.trim_start();
    }
    let mut coeff = Complex64::new(sign, 0.0);
    if let Some(r) = rest.strip_prefix('(') {
        let close = r
            .find(')')
            .ok_or_else(|| Error::Parse(format!("missing ')' in '{term}'")))?;
        let inner = &r[..close];
        let (re, im) = inner
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("complex coefficient needs 're,im': '{inner}'")))?;
        coeff *= Complex64::new(parse_number(re)?, parse_number(im)?);
        rest = &r[close + 1..];
    } else if rest.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        let mut end = 0;
        let bytes: Vec<char> = rest.chars().collect();
        while end < bytes.len() {
            let c = bytes[end];
            let exp_sign = (c == '+' || c == '-') && end > 0 && matches!(bytes[end - 1], 'e' | 'E');
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        let num: String = bytes[..end].iter().collect();
        coeff *= parse_number(&num)?;
        rest = &rest[num.len()..];
    }
    let factors = rest
        .split(|c: char| c.is_whitespace() || c == '*')
        .filter(|f| !f.is_empty())
        .map(str::to_string)
        .collect();
    Ok((coeff, factors))
}

/// `"th^3"` → `("th", 3)`, `"tb"` → `("tb", 1)`.
pub fn parse_power(factor: &str) -> Result<(String, u32)> {
    match factor.split_once('^') {
        None => Ok((factor.to_string(), 1)),
        Some((name, p)) => {
            let pow = p
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad exponent in '{factor}'")))?;
            Ok((name.trim().to_string(), pow))
        }
    }
}

/// Finite sum `Σ c_{a,b} λ^a λ*^b` on phase space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialSymbol {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl PolynomialSymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(a: u32, b: u32, c: Complex64) -> Self {
        let mut s = Self::zero();
        s.add_term(a, b, c);
        s
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `f(λ) = λ`.
    pub fn lambda() -> Self {
        Self::monomial(1, 0, Complex64::new(1.0, 0.0))
    }

    /// `f(λ) = λ*`.
    pub fn lambda_conj() -> Self {
        Self::monomial(0, 1, Complex64::new(1.0, 0.0))
    }

    /// `f(λ) = |λ|²`.
    pub fn abs_sq() -> Self {
        Self::monomial(1, 1, Complex64::new(1.0, 0.0))
    }

    fn add_term(&mut self, a: u32, b: u32, c: Complex64) {
        let e = self.terms.entry((a, b)).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if *e == Complex64::new(0.0, 0.0) {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((a, b), c) in other.terms() {
            out.add_term(a, b, c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            out.add_term(a, b, c * s);
        }
        out
    }

    /// `f*`: `(a, b) ↦ (b, a)` with conjugated coefficients.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            out.add_term(b, a, c.conj());
        }
        out
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.terms()
            .map(|((a, b), c)| c * lambda.powu(a) * lambda.conj().powu(b))
            .sum()
    }

    /// Largest `max(a, b)`: how far one term can shift the degree.
    pub fn reach(&self) -> usize {
        self.terms().map(|((a, b), _)| a.max(b) as usize).max().unwrap_or(0)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Self::zero();
        for term in split_terms(s)? {
            let (coeff, factors) = parse_term_head(&term)?;
            let (mut a, mut b) = (0u32, 0u32);
            for f in factors {
                let (name, pow) = parse_power(&f)?;
                let slot = match name.as_str() {
                    "L" => &mut a,
                    "Lc" => &mut b,
                    other => return Err(Error::Parse(format!("unknown phase-space factor '{other}'"))),
                };
                *slot = slot
                    .checked_add(pow)
                    .ok_or_else(|| Error::Parse("exponent too large".into()))?;
            }
            out.add_term(a, b, coeff);
        }
        Ok(out)
    }
}

impl fmt::Display for PolynomialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|((a, b), c)| {
                let mut s = format!("({},{})", c.re, c.im);
                if a > 0 {
                    s.push_str(&format!(" L^{a}"));
                }
                if b > 0 {
                    s.push_str(&format!(" Lc^{b}"));
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Value of a lower symbol with the truncation it was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerSymbol {
    pub value: Complex64,
    /// `tail_bound / norm_sq` of the coherent vector used.
    pub tail_fraction: f64,
    pub coherent_cutoff: usize,
}

/// `⟨φ_λ, A φ_λ⟩`, divided by `⟨φ_λ, φ_λ⟩` when `normalized`.
///
/// The coherent vector is cut at tolerance `tol`; its cutoff must sit strictly inside
/// `A`'s window so that one step of band reach is still represented.
pub fn lower_symbol(
    a: &TruncatedOperator,
    lambda: Complex64,
    model: &Model,
    normalized: bool,
    tol: f64,
) -> Result<LowerSymbol> {
    let state = coherent_coefficients(lambda, model, tol)?;
    if state.len() >= a.dim() {
        return Err(Error::WindowTooSmall {
            dim: a.dim(),
            needed: state.len() + 1,
        });
    }
    let (scaled, shift) = state.scaled();
    let mut psi = nalgebra::DVector::from_element(a.dim(), Complex64::new(0.0, 0.0));
    psi.rows_mut(0, state.len()).copy_from(&scaled);
    let quad = psi.dotc(&a.apply(&psi));
    let value = if normalized {
        quad / psi.norm_squared()
    } else {
        quad * (2.0 * shift).exp()
    };
    Ok(LowerSymbol {
        value,
        tail_fraction: state.tail_bound / state.norm_sq,
        coherent_cutoff: state.cutoff(),
    })
}

/// Complex values of some function over a set of phase-space points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolValueGrid {
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
}

impl SymbolValueGrid {
    pub fn pairs(&self) -> Vec<(Complex64, Complex64)> {
        self.points.iter().cloned().zip(self.values.iter().cloned()).collect()
    }
}

/// Lower symbol of `A` over `points`.
pub fn lower_symbol_grid(
    a: &TruncatedOperator,
    points: &[Complex64],
    model: &Model,
    normalized: bool,
    tol: f64,
) -> Result<SymbolValueGrid> {
    let values = points
        .iter()
        .map(|&p| lower_symbol(a, p, model, normalized, tol).map(|s| s.value))
        .collect::<Result<_>>()?;
    Ok(SymbolValueGrid {
        points: points.to_vec(),
        values,
    })
}

fn symbol_meta(model: &Model, what: &str, f: &PolynomialSymbol) -> OperatorMeta {
    OperatorMeta {
        symbol: format!("{what}[{f}]"),
        weights: model.weights.label(),
        q: model.q.into(),
        exact: true,
    }
}

/// `Σ_points weight · f(λ) · u(λ)_k · conj(u(λ)_n)` with `u(λ) = (a_0(λ)..a_N(λ))`.
fn coherent_sandwich(
    f: &PolynomialSymbol,
    grid: &PhaseSpaceGrid,
    model: &Model,
    cutoff: usize,
    what: &'static str,
) -> Result<DMatrix<Complex64>> {
    let reach = cutoff + f.reach();
    grid.require(reach, reach, what)?;
    let dim = cutoff + 1;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    if f.is_zero() {
        return Ok(m);
    }
    for (lambda, weight) in grid.points() {
        let fv = f.eval(lambda) * weight;
        if fv == Complex64::new(0.0, 0.0) {
            continue;
        }
        let u = coherent_window(lambda, model, cutoff)?;
        for k in 0..dim {
            let left = fv * u[k];
            for n in 0..dim {
                m[(k, n)] += left * u[n].conj();
            }
        }
    }
    Ok(m)
}

/// Matrix of `Q_cs(f) = ∫ f(λ) |φ_λ⟩⟨φ_λ| dρ` on `φ_0..φ_N`.
pub fn quantize_cs(
    f: &PolynomialSymbol,
    grid: &PhaseSpaceGrid,
    model: &Model,
    cutoff: usize,
) -> Result<TruncatedOperator> {
    let m = coherent_sandwich(f, grid, model, cutoff, "coherent state quantization")?;
    TruncatedOperator::new(m, symbol_meta(model, "Q_cs", f))
}

/// Grid estimate of `‖f‖₁ = ∫ |f(λ)| ‖φ_λ‖² dρ`.
pub fn quantize_cs_norm_bound(f: &PolynomialSymbol, grid: &PhaseSpaceGrid, model: &Model) -> Result<f64> {
    let mut acc = 0.0;
    for (lambda, weight) in grid.points() {
        let fv = f.eval(lambda).norm();
        if fv == 0.0 {
            continue;
        }
        acc += weight * fv * coherent_norm_sq(lambda, model, 1e-15)?;
    }
    Ok(acc)
}

/// Matrix of `S_f` in the basis `e_k(λ) = (q*)^{k(k+1)/2} w_k^{-1/2} λ*^k`:
/// entry `(j, k) = ∫ conj(e_j) f e_k dρ`.
pub fn secondary_toeplitz(
    f: &PolynomialSymbol,
    grid: &PhaseSpaceGrid,
    model: &Model,
    cutoff: usize,
) -> Result<TruncatedOperator> {
    let reach = cutoff + f.reach();
    grid.require(reach, reach, "secondary toeplitz operator")?;
    let dim = cutoff + 1;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (lambda, weight) in grid.points() {
        let fv = f.eval(lambda) * weight;
        if fv == Complex64::new(0.0, 0.0) {
            continue;
        }
        let e: Vec<Complex64> = coherent_window(lambda, model, cutoff)?
            .into_iter()
            .map(|z| z.conj())
            .collect();
        for j in 0..dim {
            let left = e[j].conj() * fv;
            for k in 0..dim {
                m[(j, k)] += left * e[k];
            }
        }
    }
    TruncatedOperator::new(m, symbol_meta(model, "S", f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::RadialDensity;
    use crate::model::QParam;
    use crate::toeplitz::{
        adjoint_annihilation_matrix, annihilation_matrix, identity_matrix, number_matrix,
    };
    use crate::weights::WeightSequence;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn term_splitting() {
        assert_eq!(split_terms("th^2 tb - 3 tb + (1,-2) th").unwrap(), vec![
            "th^2 tb",
            "- 3 tb",
            "+ (1,-2) th"
        ]);
        assert_eq!(split_terms("1e-3 L - Lc").unwrap(), vec!["1e-3 L", "- Lc"]);
        assert_eq!(split_terms("-L").unwrap(), vec!["-L"]);
        assert!(split_terms("(1,2").is_err());
    }

    #[test]
    fn term_heads() {
        let (co, f) = parse_term_head("- 2.5*th^2 tb").unwrap();
        assert_eq!(co, c(-2.5, 0.0));
        assert_eq!(f, vec!["th^2", "tb"]);
        let (co, f) = parse_term_head("(0,1) L").unwrap();
        assert_eq!(co, c(0.0, 1.0));
        assert_eq!(f, vec!["L"]);
        let (co, f) = parse_term_head("1e-3").unwrap();
        assert_eq!(co, c(1e-3, 0.0));
        assert!(f.is_empty());
        assert_eq!(parse_power("tb^12").unwrap(), ("tb".to_string(), 12));
        assert!(parse_power("tb^x").is_err());
    }

    #[test]
    fn polynomial_parse_and_conj() {
        let f = PolynomialSymbol::parse("2 L Lc^2 - (0,1) Lc").unwrap();
        let l = c(0.3, -0.8);
        let want = 2.0 * l * l.conj() * l.conj() - c(0.0, 1.0) * l.conj();
        assert!((f.eval(l) - want).norm() < 1e-15);
        assert!((f.conj().eval(l) - want.conj()).norm() < 1e-15);
        assert_eq!(f.reach(), 2);
        assert!(PolynomialSymbol::parse("L - L").unwrap().is_zero());
    }

    fn sb_grid(order: usize, angles: usize) -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(RadialDensity::Exponential.gauss_rule(order).unwrap(), angles).unwrap()
    }

    #[test]
    fn lower_symbol_examples() {
        let m = Model::segal_bargmann();
        let l = c(0.7, 0.4);
        let t = annihilation_matrix(&m, 60).unwrap();
        let s = lower_symbol(&t, l, &m, true, 1e-15).unwrap();
        assert!((s.value - l).norm() < 1e-12);
        let id = identity_matrix(&m, 60);
        assert!((lower_symbol(&id, l, &m, true, 1e-15).unwrap().value - 1.0).norm() < 1e-14);
        let n = number_matrix(60);
        let v = lower_symbol(&n, l, &m, true, 1e-15).unwrap().value;
        assert!((v - l.norm_sqr()).norm() < 1e-12);
    }

    #[test]
    fn lower_symbol_window_check() {
        let m = Model::segal_bargmann();
        let t = annihilation_matrix(&m, 5).unwrap();
        assert!(matches!(
            lower_symbol(&t, c(2.0, 0.0), &m, true, 1e-14),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn adjoint_lower_symbol_real_q() {
        let q = QParam::real(0.5).unwrap();
        let m = Model::new(WeightSequence::factorial(), q);
        let l = c(1.1, -0.3);
        let a = adjoint_annihilation_matrix(&m, 80).unwrap();
        let s = lower_symbol(&a, l, &m, false, 1e-15).unwrap();
        let want = l.conj() * coherent_norm_sq(l, &m, 1e-15).unwrap();
        assert!((s.value - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn qcs_identity_and_annihilation() {
        let m = Model::segal_bargmann();
        let g = sb_grid(16, 2 * 14 + 1);
        let one = quantize_cs(&PolynomialSymbol::constant(c(1.0, 0.0)), &g, &m, 12).unwrap();
        assert!(one.max_abs_diff(&identity_matrix(&m, 12)) < 1e-10);
        let lam = quantize_cs(&PolynomialSymbol::lambda(), &g, &m, 12).unwrap();
        assert!(lam.max_abs_diff(&annihilation_matrix(&m, 12).unwrap()) < 1e-8);
        let lamc = quantize_cs(&PolynomialSymbol::lambda_conj(), &g, &m, 12).unwrap();
        assert!(lamc.max_abs_diff(&lam.adjoint()) < 1e-10);
    }

    #[test]
    fn qcs_insufficient_grid() {
        let m = Model::segal_bargmann();
        let g = sb_grid(4, 9);
        assert!(matches!(
            quantize_cs(&PolynomialSymbol::lambda(), &g, &m, 12),
            Err(Error::InsufficientQuadrature { .. })
        ));
    }

    #[test]
    fn norm_bound_homogeneous() {
        let m = Model::segal_bargmann();
        let g = sb_grid(10, 21);
        let f = PolynomialSymbol::lambda();
        let b1 = quantize_cs_norm_bound(&f, &g, &m).unwrap();
        let b2 = quantize_cs_norm_bound(&f.scale(c(2.0, 0.0)), &g, &m).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12 * b2);
        assert_eq!(quantize_cs_norm_bound(&PolynomialSymbol::zero(), &g, &m).unwrap(), 0.0);
    }

    #[test]
    fn secondary_abs_sq_is_diagonal() {
        let q = QParam::unimodular(0.9);
        let m = Model::new(WeightSequence::factorial(), q);
        let g = sb_grid(12, 2 * 11 + 1);
        let s = secondary_toeplitz(&PolynomialSymbol::abs_sq(), &g, &m, 10).unwrap();
        for j in 0..=10usize {
            for k in 0..=10usize {
                let want = if j == k { (k + 1) as f64 } else { 0.0 };
                assert!((s.get(j, k) - want).norm() < 1e-8 * (1.0 + want), "{j},{k}");
            }
        }
    }
}
