//! Truncated matrices of Toeplitz operators in the orthonormal basis `φ_n`,
//! plus the boundedness, compactness and domain tests for `T_θ̄`.
//!
//! Column `n` of `T_{θ^i θ̄^j}` holds
//! `q^{-jn} w_{n+i} / (w_n w_{n+i-j})^{1/2}` in row `n + i - j`.
//! Entries whose row would leave the `0..=N` window are dropped and the
//! operator's `exact` flag is cleared.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::algebra::ManinElement;
use crate::error::{Error, Result};
use crate::model::{Model, QParam};

/// Descriptive metadata carried with every truncated operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorMeta {
    pub symbol: String,
    pub weights: String,
    pub q: [f64; 2],
    /// `true` when no matrix entry was dropped at the window edge.
    pub exact: bool,
}

/// Dense `(N+1) × (N+1)` complex matrix, rows and columns indexed by `φ_0..φ_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    entries: DMatrix<Complex64>,
    pub meta: OperatorMeta,
}

impl TruncatedOperator {
    pub fn new(entries: DMatrix<Complex64>, meta: OperatorMeta) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Config("operator matrix must be square and non-empty".into()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config(format!(
                "operator '{}' has non-finite entries",
                meta.symbol
            )));
        }
        Ok(TruncatedOperator { entries, meta })
    }

    pub fn identity(dim: usize, meta: OperatorMeta) -> Self {
        TruncatedOperator {
            entries: DMatrix::identity(dim, dim),
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// The cutoff `N`; the window is `φ_0..=φ_N`.
    pub fn cutoff(&self) -> usize {
        self.dim() - 1
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn is_exact(&self) -> bool {
        self.meta.exact
    }

    pub fn adjoint(&self) -> Self {
        TruncatedOperator {
            entries: self.entries.adjoint(),
            meta: OperatorMeta {
                symbol: format!("({})*", self.meta.symbol),
                ..self.meta.clone()
            },
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.entries * v
    }

    /// `self · rhs`, both truncated to the same window.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(TruncatedOperator {
            entries: &self.entries * &rhs.entries,
            meta: OperatorMeta {
                symbol: format!("{} . {}", self.meta.symbol, rhs.meta.symbol),
                exact: self.meta.exact && rhs.meta.exact,
                ..self.meta.clone()
            },
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(TruncatedOperator {
            entries: &self.entries + &rhs.entries,
            meta: OperatorMeta {
                symbol: format!("{} + {}", self.meta.symbol, rhs.meta.symbol),
                exact: self.meta.exact && rhs.meta.exact,
                ..self.meta.clone()
            },
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        TruncatedOperator {
            entries: self.entries.map(|z| z * s),
            meta: self.meta.clone(),
        }
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim() != rhs.dim() {
            return Err(Error::Config(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                rhs.dim()
            )));
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Spectral norm (largest singular value) of the truncation.
    pub fn operator_norm(&self) -> f64 {
        self.entries
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Row-major CSV, one `"re,im"` cell per entry.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.entries[(r, c)];
                    format!("{},{}", z.re, z.im)
                })
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl Serialize for TruncatedOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|r| {
                (0..self.dim())
                    .map(|c| {
                        let z = self.entries[(r, c)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        let mut st = s.serialize_struct("TruncatedOperator", 3)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("entries", &rows)?;
        st.serialize_field("meta", &self.meta)?;
        st.end()
    }
}

fn meta_for(model: &Model, symbol: impl Into<String>, exact: bool) -> OperatorMeta {
    OperatorMeta {
        symbol: symbol.into(),
        weights: model.weights.label(),
        q: model.q.into(),
        exact,
    }
}

/// Matrix of `T_g` on the window `φ_0..=φ_N`.
pub fn toeplitz_matrix(g: &ManinElement, model: &Model, cutoff: usize) -> Result<TruncatedOperator> {
    if g.q() != model.q {
        return Err(Error::Config("symbol and model use different q".into()));
    }
    let dim = cutoff + 1;
    let w = &model.weights;
    let mut entries = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let mut exact = true;
    for (m, poly) in g.raw_terms() {
        let (i, j) = (m.i as i64, m.j as i64);
        for n in 0..dim as i64 {
            let row = n + i - j;
            if row < 0 {
                continue;
            }
            if row > cutoff as i64 {
                exact = false;
                continue;
            }
            let ln_mag = w.ln(n + i)? - 0.5 * (w.ln(n)? + w.ln(row)?);
            let mut z = Complex64::new(0.0, 0.0);
            for (&e, &c) in poly {
                let total = e.checked_sub(j * n).ok_or(Error::ExponentOverflow)?;
                z += c * model.q.scaled_pow(total, ln_mag);
            }
            entries[(row as usize, n as usize)] += z;
        }
    }
    TruncatedOperator::new(entries, meta_for(model, g.to_string(), exact))
}

/// `T_θ̄`: `φ_n ↦ q^{-n} (w_n / w_{n-1})^{1/2} φ_{n-1}`.
pub fn annihilation_matrix(model: &Model, cutoff: usize) -> Result<TruncatedOperator> {
    let mut op = toeplitz_matrix(&ManinElement::theta_bar(model.q), model, cutoff)?;
    op.meta.symbol = "T_tb".into();
    Ok(op)
}

/// `T_θ`: `φ_n ↦ (w_{n+1} / w_n)^{1/2} φ_{n+1}`, no `q` dependence.
pub fn creation_matrix(model: &Model, cutoff: usize) -> Result<TruncatedOperator> {
    let mut op = toeplitz_matrix(&ManinElement::theta(model.q), model, cutoff)?;
    op.meta.symbol = "T_th".into();
    Ok(op)
}

/// `(T_θ̄)*`: `φ_n ↦ (q^*)^{-(n+1)} (w_{n+1} / w_n)^{1/2} φ_{n+1}`.
pub fn adjoint_annihilation_matrix(model: &Model, cutoff: usize) -> Result<TruncatedOperator> {
    let dim = cutoff + 1;
    let qc = QParam::new(model.q.value().conj())?;
    let w = &model.weights;
    let mut entries = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for n in 0..cutoff {
        let ln_mag = 0.5 * (w.ln(n as i64 + 1)? - w.ln(n as i64)?);
        entries[(n + 1, n)] = qc.scaled_pow(-(n as i64 + 1), ln_mag);
    }
    TruncatedOperator::new(entries, meta_for(model, "(T_tb)*", false))
}

/// Number operator `N φ_n = n φ_n`.
pub fn number_matrix(cutoff: usize) -> TruncatedOperator {
    let dim = cutoff + 1;
    let entries = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(r as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    TruncatedOperator {
        entries,
        meta: OperatorMeta {
            symbol: "N".into(),
            weights: "any".into(),
            q: [1.0, 0.0],
            exact: true,
        },
    }
}

pub fn identity_matrix(model: &Model, cutoff: usize) -> TruncatedOperator {
    TruncatedOperator::identity(cutoff + 1, meta_for(model, "I", true))
}

/// Three-valued outcome for limit questions a finite computation cannot always settle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

/// Classification of `T_θ̄` from the ratio sequence `|q|^{-2n} w_n / w_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub ratio_sequence: Vec<f64>,
    pub bounded: Verdict,
    pub compact: Verdict,
    /// `sup_n` of the ratio sequence over the horizon; square root gives `‖T_θ̄‖`.
    pub sup_estimate: Option<f64>,
}

const BOUNDEDNESS_CAP: f64 = 1e9;

/// Inspects the ratio sequence for `n = 1..=horizon`, trend window = last 25 %.
pub fn boundedness_report(model: &Model, horizon: usize) -> Result<BoundednessReport> {
    if horizon < 10 {
        return Err(Error::Config("boundedness horizon must be at least 10".into()));
    }
    let w = &model.weights;
    let ln_ratios: Vec<f64> = (1..=horizon as i64)
        .map(|n| Ok(-2.0 * n as f64 * model.q.ln_abs() + w.ln(n)? - w.ln(n - 1)?))
        .collect::<Result<_>>()?;
    let win_len = (horizon / 4).max(3);
    let window = &ln_ratios[horizon - win_len..];
    let ln_cap = BOUNDEDNESS_CAP.ln();
    let exceeds_cap = ln_ratios.iter().any(|&v| v > ln_cap);
    let increasing = window.windows(2).all(|p| p[1] > p[0]);
    let non_increasing = window.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    let slope = loglog_slope(horizon - win_len + 1, window);

    let bounded = if increasing && (exceeds_cap || slope > 0.1) {
        Verdict::No
    } else if !exceeds_cap && non_increasing {
        Verdict::Yes
    } else {
        Verdict::Inconclusive
    };

    let ln_sup = ln_ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = *window.last().unwrap();
    let flat = window.iter().all(|v| (v - last).abs() < 1e-9);
    let compact = match bounded {
        Verdict::No => Verdict::No,
        Verdict::Inconclusive => Verdict::Inconclusive,
        Verdict::Yes => {
            if last - ln_sup < (1e-12f64).ln() || slope <= -0.5 {
                Verdict::Yes
            } else if flat {
                Verdict::No
            } else {
                Verdict::Inconclusive
            }
        }
    };
    Ok(BoundednessReport {
        ratio_sequence: ln_ratios.iter().map(|v| v.exp()).collect(),
        bounded,
        compact,
        sup_estimate: (bounded == Verdict::Yes).then(|| ln_sup.exp()),
    })
}

/// Slope of `ln r_n` against `ln n` over a window starting at index `first_n`.
fn loglog_slope(first_n: usize, ln_values: &[f64]) -> f64 {
    let xs: Vec<f64> = (0..ln_values.len())
        .map(|k| ((first_n + k) as f64).ln())
        .collect();
    if ln_values.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    crate::numeric::linear_fit(&xs, ln_values).0
}

/// Coefficients `a_n` of a vector `Σ a_n φ_n` whose domain membership is tested.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    /// Finitely supported vector.
    Finite(Vec<Complex64>),
    /// Coherent state coefficients `λ^n q^{n(n+1)/2} w_n^{-1/2}`.
    Coherent { lambda: Complex64 },
    /// `a_n = (n+1)^{-p}`.
    InversePower { exponent: f64 },
    /// `a_n = r^n`.
    Geometric { ratio: f64 },
}

impl CoefficientSource {
    fn ln_abs(&self, n: usize, model: &Model) -> Result<f64> {
        let nf = n as f64;
        Ok(match self {
            CoefficientSource::Finite(v) => v.get(n).map_or(f64::NEG_INFINITY, |z| z.norm().ln()),
            CoefficientSource::Coherent { lambda } => {
                if lambda.norm() == 0.0 {
                    if n == 0 {
                        -0.5 * model.weights.ln(0)?
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    nf * lambda.norm().ln() + 0.5 * nf * (nf + 1.0) * model.q.ln_abs()
                        - 0.5 * model.weights.ln(n as i64)?
                }
            }
            CoefficientSource::InversePower { exponent } => -exponent * (nf + 1.0).ln(),
            CoefficientSource::Geometric { ratio } => nf * ratio.abs().ln(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainVerdict {
    InDomain,
    NotInDomain,
    Inconclusive,
}

/// Convergence verdict for a positive series given by its log-terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SeriesVerdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Ratio test, then comparison with the harmonic series, then Raabe's test,
/// all on the last quarter of the supplied log-terms (indexed from `first_n`).
pub(crate) fn classify_series(first_n: usize, ln_terms: &[f64]) -> SeriesVerdict {
    let len = ln_terms.len();
    let win_len = (len / 4).max(4).min(len);
    let start = len - win_len;
    let window = &ln_terms[start..];
    if window.iter().all(|v| *v == f64::NEG_INFINITY) {
        return SeriesVerdict::Converges;
    }
    if window.iter().any(|v| !v.is_finite()) {
        return SeriesVerdict::Inconclusive;
    }
    let diffs: Vec<f64> = window.windows(2).map(|p| p[1] - p[0]).collect();
    let max_d = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_d = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
    if max_d < -1e-3 {
        return SeriesVerdict::Converges;
    }
    if min_d >= 0.0 {
        return SeriesVerdict::Diverges;
    }
    // n·u_n not decaying ⇒ terms dominate c/n
    let h_first = window[0] + ((first_n + start) as f64).ln();
    let h_last = window[win_len - 1] + ((first_n + len - 1) as f64).ln();
    if h_last >= h_first - 1e-9 {
        return SeriesVerdict::Diverges;
    }
    let tail = diffs.len().min(8);
    let raabe: f64 = diffs[diffs.len() - tail..]
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let n = (first_n + len - 1 - tail + k) as f64;
            n * ((-d).exp() - 1.0)
        })
        .sum::<f64>()
        / tail as f64;
    if raabe > 1.05 {
        SeriesVerdict::Converges
    } else if raabe < 0.95 {
        SeriesVerdict::Diverges
    } else {
        SeriesVerdict::Inconclusive
    }
}

/// Decides whether `Σ a_n φ_n` lies in `D(T_θ̄)`, i.e. whether both
/// `Σ |a_n|²` and `Σ |a_n|² |q|^{-2n} w_n / w_{n-1}` converge.
pub fn domain_membership(source: &CoefficientSource, model: &Model, horizon: usize) -> Result<DomainVerdict> {
    if let CoefficientSource::Finite(_) = source {
        return Ok(DomainVerdict::InDomain);
    }
    if horizon < 16 {
        return Err(Error::Config("domain horizon must be at least 16".into()));
    }
    let w = &model.weights;
    let mut h_terms = Vec::with_capacity(horizon);
    let mut d_terms = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let la = source.ln_abs(n, model)?;
        h_terms.push(2.0 * la);
        let extra = -2.0 * n as f64 * model.q.ln_abs() + w.ln(n as i64)? - w.ln(n as i64 - 1)?;
        d_terms.push(2.0 * la + extra);
    }
    let verdicts = [classify_series(1, &h_terms), classify_series(1, &d_terms)];
    Ok(if verdicts.contains(&SeriesVerdict::Diverges) {
        DomainVerdict::NotInDomain
    } else if verdicts.iter().all(|v| *v == SeriesVerdict::Converges) {
        DomainVerdict::InDomain
    } else {
        DomainVerdict::Inconclusive
    })
}
