//! Coherent states `φ_λ = Σ a_n φ_n` with `a_n = λ^n q^{n(n+1)/2} w_n^{-1/2}`,
//! the phase-space radius, reproducing kernel and coherent state transform.
//!
//! Coefficients are kept as `(ln|a_n|, arg a_n)`; `|q|^{n(n+1)/2}` leaves the
//! double range long before the series stops mattering.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::numeric::{from_log_polar, linear_fit, log_sum_exp};
use crate::toeplitz::{annihilation_matrix, classify_series, SeriesVerdict};

/// Hard cap on the truncation index chosen for a coherent vector.
pub const N_MAX: usize = 4096;
/// Number of upcoming term ratios inspected before a tail bound is trusted.
const LOOKAHEAD: usize = 16;
/// Consecutive non-decreasing ratios ≥ 1 needed to call the norm series divergent.
const DIVERGENCE_RUN: usize = 64;

const NORM_SERIES: &str = "norm series sum |lambda|^(2n) |q|^(n(n+1)) / w_n";

/// Truncated `φ_λ` in log-polar storage, with a certified tail bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentStateVector {
    pub lambda: Complex64,
    ln_abs: Vec<f64>,
    phase: Vec<f64>,
    /// Bound on `Σ_{n>N} |a_n|²`.
    pub tail_bound: f64,
    /// `Σ_{n≤N} |a_n|²`.
    pub norm_sq: f64,
}

impl CoherentStateVector {
    pub fn cutoff(&self) -> usize {
        self.ln_abs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.ln_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_abs.is_empty()
    }

    pub fn ln_abs(&self, n: usize) -> f64 {
        self.ln_abs[n]
    }

    pub fn phase(&self, n: usize) -> f64 {
        self.phase[n]
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        from_log_polar(self.ln_abs[n], self.phase[n])
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        (0..self.len()).map(|n| self.coeff(n)).collect()
    }

    /// Coefficients divided by `exp(shift)` with `shift = max ln|a_n|`.
    pub fn scaled(&self) -> (DVector<Complex64>, f64) {
        let shift = self.ln_abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = DVector::from_fn(self.len(), |n, _| {
            from_log_polar(self.ln_abs[n] - shift, self.phase[n])
        });
        (v, shift)
    }

    /// Coefficient vector padded or cut to `dim` entries.
    pub fn to_window(&self, dim: usize) -> DVector<Complex64> {
        DVector::from_fn(dim, |n, _| {
            if n < self.len() {
                self.coeff(n)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

impl Serialize for CoherentStateVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let coeffs: Vec<[f64; 2]> = self
            .ln_abs
            .iter()
            .zip(&self.phase)
            .map(|(l, p)| [*l, *p])
            .collect();
        let mut st = s.serialize_struct("CoherentStateVector", 5)?;
        st.serialize_field("lambda", &[self.lambda.re, self.lambda.im])?;
        st.serialize_field("coeffs_log_polar", &coeffs)?;
        st.serialize_field("cutoff", &self.cutoff())?;
        st.serialize_field("tail_bound", &self.tail_bound)?;
        st.serialize_field("norm_sq", &self.norm_sq)?;
        st.end()
    }
}

/// Where the modulus series `Σ x^n |q|^{n(n+1)} / w_n` was cut.
#[derive(Debug, Clone)]
struct Truncation {
    ln_terms: Vec<f64>,
    ln_sum: f64,
    tail_bound_rel: f64,
}

fn ln_series_term(model: &Model, ln_x: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let lead = if n == 0 { 0.0 } else { nf * ln_x };
    Ok(lead + nf * (nf + 1.0) * model.q.ln_abs() - model.weights.ln(n as i64)?)
}

/// Picks `N` so that the tail of `Σ x^n |q|^{n(n+1)} / w_n` beyond `N` is at most `tol` of
/// the partial sum. `x` is `|λ|²` for norms and `|μ||λ|` for kernels.
fn truncate_series(model: &Model, x: f64, modulus: f64, tol: f64) -> Result<Truncation> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !x.is_finite() {
        return Err(Error::Config("non-finite coherent parameter".into()));
    }
    let first = ln_series_term(model, 0.0, 0)?;
    if x == 0.0 {
        return Ok(Truncation {
            ln_terms: vec![first],
            ln_sum: first,
            tail_bound_rel: 0.0,
        });
    }
    let ln_x = x.ln();
    let horizon = model.weights.horizon();
    let last_index = horizon.map_or(N_MAX + LOOKAHEAD, |h| h.min(N_MAX + LOOKAHEAD));
    let mut ln_terms = vec![first];
    let mut run = 0usize;
    let mut prev_ratio = f64::NEG_INFINITY;
    let term = |n: usize| ln_series_term(model, ln_x, n);

    // ln_terms[k] for k ≤ n is known; we extend lazily
    let mut n = 0usize;
    loop {
        let reach = (n + 1 + LOOKAHEAD).min(last_index);
        while ln_terms.len() <= reach {
            let k = ln_terms.len();
            ln_terms.push(term(k)?);
        }
        // divergence: ratio t_{n+1}/t_n ≥ 1 and not decreasing, over a long run
        let ratio = ln_terms[n + 1] - ln_terms[n];
        if ratio >= 0.0 && ratio >= prev_ratio - 1e-12 {
            run += 1;
        } else {
            run = 0;
        }
        prev_ratio = ratio;
        if run >= DIVERGENCE_RUN {
            return Err(Error::OutsidePhaseSpace {
                series: NORM_SERIES,
                modulus,
            });
        }

        let ln_partial = log_sum_exp(ln_terms[..=n].iter().cloned());
        let ratios: Vec<f64> = ln_terms[n + 1..=reach]
            .windows(2)
            .map(|p| p[1] - p[0])
            .collect();
        if !ratios.is_empty() {
            let r_max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let settled = ratios.windows(2).all(|p| p[1] <= p[0] + 1e-12);
            let at_table_end = horizon.is_some_and(|h| reach >= h);
            if r_max < 0.0 && (settled || at_table_end) {
                let ln_tail = ln_terms[n + 1] - (-(r_max.exp_m1())).ln();
                let rel = (ln_tail - ln_partial).exp();
                if rel <= tol {
                    ln_terms.truncate(n + 1);
                    return Ok(Truncation {
                        ln_terms,
                        ln_sum: ln_partial,
                        tail_bound_rel: rel,
                    });
                }
            }
        }
        n += 1;
        if n + 1 >= last_index {
            return Err(Error::ToleranceUnreachable { tol, max_terms: n });
        }
    }
}

/// `ln|a_n|` and `arg a_n` from the closed form.
pub fn coefficient_log_polar(lambda: Complex64, model: &Model, n: usize) -> Result<(f64, f64)> {
    if lambda.norm() == 0.0 && n > 0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let nf = n as f64;
    let tri = (n as i64) * (n as i64 + 1) / 2;
    let lead = if n == 0 { 0.0 } else { nf * lambda.norm().ln() };
    let (ln_q, arg_q) = model.q.pow_log_polar(tri);
    let ln = lead + ln_q - 0.5 * model.weights.ln(n as i64)?;
    let phase = if n == 0 { 0.0 } else { nf * lambda.arg() } + arg_q;
    Ok((ln, phase))
}

/// Builds `φ_λ` truncated so that the dropped tail is at most `tol · norm_sq`.
pub fn coherent_coefficients(lambda: Complex64, model: &Model, tol: f64) -> Result<CoherentStateVector> {
    let tr = truncate_series(model, lambda.norm_sqr(), lambda.norm(), tol)?;
    let cutoff = tr.ln_terms.len() - 1;
    let mut ln_abs = Vec::with_capacity(cutoff + 1);
    let mut phase = Vec::with_capacity(cutoff + 1);
    for n in 0..=cutoff {
        let (l, p) = coefficient_log_polar(lambda, model, n)?;
        ln_abs.push(l);
        phase.push(p);
    }
    let norm_sq = tr.ln_sum.exp();
    Ok(CoherentStateVector {
        lambda,
        ln_abs,
        phase,
        tail_bound: tr.tail_bound_rel * norm_sq,
        norm_sq,
    })
}

/// Builds `φ_λ` on the fixed window `φ_0..φ_N`, with no tail certification.
pub fn coherent_window(lambda: Complex64, model: &Model, cutoff: usize) -> Result<Vec<Complex64>> {
    (0..=cutoff)
        .map(|n| coefficient_log_polar(lambda, model, n).map(|(l, p)| from_log_polar(l, p)))
        .collect()
}

/// Iterates `a_{n+1} = λ q^{n+1} (w_n / w_{n+1})^{1/2} a_n` from `a_0 = w_0^{-1/2}`.
pub fn coefficients_by_recursion(lambda: Complex64, model: &Model, cutoff: usize) -> Result<Vec<Complex64>> {
    let w = &model.weights;
    let mut out = Vec::with_capacity(cutoff + 1);
    let mut a = Complex64::new((-0.5 * w.ln(0)?).exp(), 0.0);
    out.push(a);
    for n in 0..cutoff {
        let ratio = (0.5 * (w.ln(n as i64)? - w.ln(n as i64 + 1)?)).exp();
        a = a * lambda * model.q.pow(n as i64 + 1) * ratio;
        out.push(a);
    }
    Ok(out)
}

/// `‖φ_λ‖² = Σ |λ|^{2n} |q|^{n(n+1)} / w_n`, summed to relative tolerance `tol`.
pub fn coherent_norm_sq(lambda: Complex64, model: &Model, tol: f64) -> Result<f64> {
    Ok(ln_coherent_norm_sq(lambda, model, tol)?.exp())
}

pub fn ln_coherent_norm_sq(lambda: Complex64, model: &Model, tol: f64) -> Result<f64> {
    let tr = truncate_series(model, lambda.norm_sqr(), lambda.norm(), tol)?;
    Ok(tr.ln_sum)
}

/// Fails with an out-of-phase-space error unless the norm series converges at `λ`.
pub fn check_phase_space(lambda: Complex64, model: &Model) -> Result<()> {
    truncate_series(model, lambda.norm_sqr(), lambda.norm(), 1e-15).map(|_| ())
}

/// Residual of the eigen-equation on the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResidual {
    /// `‖(T_θ̄ψ − λψ)_{0..N−1}‖ / ‖ψ‖`.
    pub residual: f64,
    /// `|λ a_N| / ‖ψ‖`: the row-N term that needs `a_{N+1}` to cancel.
    pub leakage: f64,
    /// `C (tail_bound / norm_sq)^{1/2}` with `C = |q|^{-(N+1)} (w_{N+1}/w_N)^{1/2}`,
    /// the band entry at the window edge; bounds `leakage`.
    pub leakage_bound: f64,
}

pub fn eigen_residual(state: &CoherentStateVector, model: &Model) -> Result<EigenResidual> {
    let (psi, _) = state.scaled();
    let norm = psi.norm();
    let cutoff = state.cutoff();
    let n1 = cutoff as i64 + 1;
    let edge = if model.weights.covers(n1 as usize) {
        (-(n1 as f64) * model.q.ln_abs() + 0.5 * (model.weights.ln(n1)? - model.weights.ln(n1 - 1)?)).exp()
    } else {
        f64::INFINITY
    };
    let leakage_bound = if state.tail_bound == 0.0 {
        0.0
    } else {
        edge * (state.tail_bound / state.norm_sq).sqrt()
    };
    if cutoff == 0 {
        // only a_0 survives and T_θ̄ φ_0 = 0
        return Ok(EigenResidual {
            residual: 0.0,
            leakage: (state.lambda * psi[0]).norm() / norm,
            leakage_bound,
        });
    }
    let t = annihilation_matrix(model, cutoff)?;
    let diff = t.apply(&psi) - psi.map(|z| z * state.lambda);
    let inner: f64 = diff.rows(0, cutoff).norm();
    Ok(EigenResidual {
        residual: inner / norm,
        leakage: diff[cutoff].norm() / norm,
        leakage_bound,
    })
}

/// `λ e^{-it}`.
pub fn evolve(lambda: Complex64, t: f64) -> Complex64 {
    lambda * Complex64::from_polar(1.0, -t)
}

/// Applies `e^{-itN}` coefficientwise and re-tags the eigenvalue.
pub fn evolve_state(state: &CoherentStateVector, t: f64) -> CoherentStateVector {
    let phase = state
        .phase
        .iter()
        .enumerate()
        .map(|(n, p)| p - t * n as f64)
        .collect();
    CoherentStateVector {
        lambda: evolve(state.lambda, t),
        phase,
        ..state.clone()
    }
}

/// `⟨φ_λ, ψ⟩ = Σ_k conj(a_k(λ)) c_k` for a finitely supported `ψ = Σ c_k φ_k`.
pub fn cs_transform(psi: &[Complex64], lambda: Complex64, model: &Model) -> Result<Complex64> {
    check_phase_space(lambda, model)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, c) in psi.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (l, p) = coefficient_log_polar(lambda, model, k)?;
        acc += from_log_polar(l, -p) * c;
    }
    Ok(acc)
}

/// `K(μ, λ) = ⟨φ_μ, φ_λ⟩ = Σ conj(μ)^n λ^n |q|^{n(n+1)} / w_n`.
pub fn kernel(mu: Complex64, lambda: Complex64, model: &Model, tol: f64) -> Result<Complex64> {
    check_phase_space(mu, model)?;
    check_phase_space(lambda, model)?;
    let x = mu.norm() * lambda.norm();
    let tr = truncate_series(model, x, x.sqrt(), tol)?;
    let dphi = lambda.arg() - mu.arg();
    let shift = tr.ln_sum;
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, lt) in tr.ln_terms.iter().enumerate() {
        acc += from_log_polar(lt - shift, n as f64 * dphi);
    }
    Ok(acc * shift.exp())
}

/// Radius value: a finite estimate or the `+∞` marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusValue {
    Finite(f64),
    Infinite,
}

impl RadiusValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            RadiusValue::Finite(v) => *v,
            RadiusValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RadiusValue::Infinite)
    }
}

impl Serialize for RadiusValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RadiusValue::Finite(v) => s.serialize_f64(*v),
            RadiusValue::Infinite => s.serialize_str("infinity"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryVerdict {
    Converges,
    Diverges,
    Inconclusive,
    /// No boundary circle: the radius is infinite.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusSample {
    pub n: u64,
    /// `r_n = (|q|^{-(n+1)} w_n^{1/n})^{1/2}`.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub value: RadiusValue,
    /// Spread of the samples in the tail window.
    pub uncertainty: f64,
    /// Whether the tail window is monotone.
    pub monotone_tail: bool,
    pub samples: Vec<RadiusSample>,
    pub boundary_verdict: BoundaryVerdict,
    pub extreme: bool,
}

/// Largest index sampled for rules defined at every `n`.
const RADIUS_SAMPLE_LIMIT: f64 = 1e14;
const ZERO_FLOOR: f64 = 1e-6;
const BOUNDARY_TERMS: usize = 10_000;

/// Sample indices: every index of a finite table, or a geometric ladder up to 1e14.
fn radius_indices(model: &Model, horizon: usize) -> Vec<u64> {
    match model.weights.horizon() {
        Some(h) if h >= 1 => {
            let h = h as u64;
            if h as usize <= horizon {
                (1..=h).collect()
            } else {
                let mut v: Vec<u64> = (0..horizon)
                    .map(|k| 1 + (k as u64 * (h - 1)) / (horizon as u64 - 1))
                    .collect();
                v.dedup();
                v
            }
        }
        Some(_) => vec![],
        None => {
            let top = RADIUS_SAMPLE_LIMIT.ln();
            let mut v: Vec<u64> = (0..horizon)
                .map(|k| (top * k as f64 / (horizon - 1) as f64).exp().round() as u64)
                .collect();
            v.dedup();
            v
        }
    }
}

/// Estimates `R_w = liminf r_n` and classifies the boundary circle.
pub fn radius_of_convergence(model: &Model, horizon: usize, cap: f64) -> Result<RadiusEstimate> {
    if horizon < 20 {
        return Err(Error::Config("radius horizon must be at least 20".into()));
    }
    if !(cap > 1.0) {
        return Err(Error::Config("radius cap must exceed 1".into()));
    }
    let idx = radius_indices(model, horizon);
    if idx.len() < 4 {
        return Err(Error::Config("weight table too short to estimate a radius".into()));
    }
    let mut ln_r = Vec::with_capacity(idx.len());
    for &n in &idx {
        let nf = n as f64;
        ln_r.push(0.5 * (-(nf + 1.0) * model.q.ln_abs() + model.weights.ln(n as i64)? / nf));
    }
    let samples: Vec<RadiusSample> = idx
        .iter()
        .zip(&ln_r)
        .map(|(n, l)| RadiusSample { n: *n, r: l.exp() })
        .collect();

    let len = ln_r.len();
    let run = len.min(50);
    let last_run = &ln_r[len - run..];
    let inc_run = last_run.windows(2).all(|p| p[1] > p[0]);
    let dec_run = last_run.windows(2).all(|p| p[1] < p[0]);
    let win_len = (len / 4).max(5).min(len);
    let window = &ln_r[len - win_len..];
    let win_idx = &idx[len - win_len..];
    let increasing = window.windows(2).all(|p| p[1] > p[0]);
    let decreasing = window.windows(2).all(|p| p[1] < p[0]);
    let slope = {
        let xs: Vec<f64> = win_idx.iter().map(|n| (*n as f64).ln()).collect();
        linear_fit(&xs, window).0
    };

    let ln_min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let ln_max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (value, uncertainty) = if inc_run && last_run.iter().all(|v| *v > cap.ln()) {
        (RadiusValue::Infinite, f64::INFINITY)
    } else if increasing && slope >= 0.05 {
        (RadiusValue::Infinite, f64::INFINITY)
    } else if dec_run && last_run.iter().all(|v| *v < ZERO_FLOOR.ln()) {
        (RadiusValue::Finite(0.0), ln_max.exp())
    } else {
        (RadiusValue::Finite(ln_min.exp()), ln_max.exp() - ln_min.exp())
    };

    let boundary_verdict = match value {
        RadiusValue::Infinite => BoundaryVerdict::NotApplicable,
        RadiusValue::Finite(r) if r == 0.0 => BoundaryVerdict::Converges,
        RadiusValue::Finite(r) => boundary_series_verdict(model, r)?,
    };
    Ok(RadiusEstimate {
        extreme: value == RadiusValue::Finite(0.0),
        value,
        uncertainty,
        monotone_tail: increasing || decreasing,
        samples,
        boundary_verdict,
    })
}

/// Raabe-style classification of the norm series on `|λ| = r`.
fn boundary_series_verdict(model: &Model, r: f64) -> Result<BoundaryVerdict> {
    let terms_avail = model.weights.horizon().unwrap_or(BOUNDARY_TERMS).min(BOUNDARY_TERMS);
    if terms_avail < 16 {
        return Ok(BoundaryVerdict::Inconclusive);
    }
    let ln_x = 2.0 * r.ln();
    let terms: Vec<f64> = (1..=terms_avail)
        .map(|n| ln_series_term(model, ln_x, n))
        .collect::<Result<_>>()?;
    Ok(match classify_series(1, &terms) {
        SeriesVerdict::Converges => BoundaryVerdict::Converges,
        SeriesVerdict::Diverges => BoundaryVerdict::Diverges,
        SeriesVerdict::Inconclusive => BoundaryVerdict::Inconclusive,
    })
}

/// Evaluates `f` at every grid point, keeping the point alongside its value.
pub fn sweep<F>(points: &[Complex64], mut f: F) -> Result<Vec<(Complex64, Complex64)>>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    points.iter().map(|&p| f(p).map(|v| (p, v))).collect()
}

/// Polar grid of `rings × spokes` points with radii evenly spaced in `(0, r_max]`.
pub fn polar_grid(r_max: f64, rings: usize, spokes: usize) -> Vec<Complex64> {
    let mut pts = Vec::with_capacity(rings * spokes);
    for a in 1..=rings {
        let r = r_max * a as f64 / rings as f64;
        for b in 0..spokes {
            let th = 2.0 * std::f64::consts::PI * b as f64 / spokes as f64;
            pts.push(Complex64::from_polar(r, th));
        }
    }
    pts
}
