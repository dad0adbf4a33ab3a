//! Weight sequences `w_n > 0` and the registry of named weight rules.
//!
//! Every inner product in the theory is fixed by the weights, so the rule is
//! the main runtime knob. Rules are trait objects registered by name; the
//! command line and config files select them with a [`WeightSpec`].
//!
//! Rules report `ln w_n` rather than `w_n` so that fast-growing sequences
//! (for example `b^{n(n+1)} n!`) never overflow.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::RadialDensity;
use crate::numeric::ln_factorial;

/// Serialized form of a weight sequence: `{kind, params, table?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

impl WeightSpec {
    pub fn named(kind: &str) -> Self {
        WeightSpec {
            kind: kind.to_string(),
            params: BTreeMap::new(),
            table: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parses the compact command-line form.
    ///
    /// `factorial`, `constant:c=4`, `power-factorial:s=0.5`,
    /// `gaussian-factorial:base=2`, `explicit:1,1,2,6`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r.trim())),
            None => (s, None),
        };
        if kind.is_empty() {
            return Err(Error::Parse("empty weight kind".into()));
        }
        let mut spec = WeightSpec::named(kind);
        let Some(rest) = rest else { return Ok(spec) };
        if kind == "explicit" {
            let table = rest
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad weight '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            spec.table = Some(table);
            return Ok(spec);
        }
        for kv in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value for '{}'", k.trim())))?;
            spec.params.insert(k.trim().to_string(), v);
        }
        Ok(spec)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// A rule producing the weights `w_n`.
pub trait WeightRule: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn table(&self) -> Option<&[f64]> {
        None
    }

    /// Largest materializable index, or `None` when the rule is defined for all `n`.
    fn horizon(&self) -> Option<usize> {
        None
    }

    /// `ln w_n`; only called for `n` within the horizon.
    fn ln_weight(&self, n: usize) -> f64;

    /// `w_n` itself; rules with exact values override the `exp(ln w_n)` default.
    fn weight(&self, n: usize) -> f64 {
        self.ln_weight(n).exp()
    }

    /// Density in `t = r^2` solving the radial moment problem in closed form, if known.
    fn closed_form_density(&self, _q_abs: f64) -> Option<RadialDensity> {
        None
    }
}

#[derive(Debug)]
struct Factorial;

impl WeightRule for Factorial {
    fn kind(&self) -> &'static str {
        "factorial"
    }
    fn ln_weight(&self, n: usize) -> f64 {
        ln_factorial(n as u64)
    }
    fn weight(&self, n: usize) -> f64 {
        if n <= 170 {
            (2..=n).fold(1.0, |acc, k| acc * k as f64)
        } else {
            f64::INFINITY
        }
    }
    fn closed_form_density(&self, q_abs: f64) -> Option<RadialDensity> {
        ((q_abs - 1.0).abs() <= 4.0 * f64::EPSILON).then_some(RadialDensity::Exponential)
    }
}

#[derive(Debug)]
struct Constant {
    c: f64,
}

impl WeightRule for Constant {
    fn kind(&self) -> &'static str {
        "constant"
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("c".to_string(), self.c)])
    }
    fn ln_weight(&self, _n: usize) -> f64 {
        self.c.ln()
    }
    fn weight(&self, _n: usize) -> f64 {
        self.c
    }
}

/// `w_n = (n!)^s`.
#[derive(Debug)]
struct PowerFactorial {
    s: f64,
}

impl WeightRule for PowerFactorial {
    fn kind(&self) -> &'static str {
        "power-factorial"
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("s".to_string(), self.s)])
    }
    fn ln_weight(&self, n: usize) -> f64 {
        self.s * ln_factorial(n as u64)
    }
    fn closed_form_density(&self, q_abs: f64) -> Option<RadialDensity> {
        ((self.s - 1.0).abs() <= f64::EPSILON && (q_abs - 1.0).abs() <= 4.0 * f64::EPSILON)
            .then_some(RadialDensity::Exponential)
    }
}

/// `w_n = base^{n(n+1)} n!`; with `|q| = base` this cancels the `|q|^{n(n+1)}`
/// growth and gives Segal–Bargmann behaviour for any `|q|`.
#[derive(Debug)]
struct GaussianFactorial {
    base: f64,
}

impl WeightRule for GaussianFactorial {
    fn kind(&self) -> &'static str {
        "gaussian-factorial"
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("base".to_string(), self.base)])
    }
    fn ln_weight(&self, n: usize) -> f64 {
        let n_f = n as f64;
        n_f * (n_f + 1.0) * self.base.ln() + ln_factorial(n as u64)
    }
    fn closed_form_density(&self, q_abs: f64) -> Option<RadialDensity> {
        ((q_abs - self.base).abs() <= 4.0 * f64::EPSILON * self.base)
            .then_some(RadialDensity::Exponential)
    }
}

#[derive(Debug)]
struct Explicit {
    table: Vec<f64>,
}

impl WeightRule for Explicit {
    fn kind(&self) -> &'static str {
        "explicit"
    }
    fn table(&self) -> Option<&[f64]> {
        Some(&self.table)
    }
    fn horizon(&self) -> Option<usize> {
        Some(self.table.len() - 1)
    }
    fn ln_weight(&self, n: usize) -> f64 {
        self.table[n].ln()
    }
    fn weight(&self, n: usize) -> f64 {
        self.table[n]
    }
}

fn positive_param(spec: &WeightSpec, key: &str, default: f64) -> Result<f64> {
    let v = spec.param(key, default);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!(
            "weight rule '{}' needs {key} > 0, got {v}",
            spec.kind
        )))
    }
}

fn build_factorial(_: &WeightSpec) -> Result<Arc<dyn WeightRule>> {
    Ok(Arc::new(Factorial))
}

fn build_constant(spec: &WeightSpec) -> Result<Arc<dyn WeightRule>> {
    Ok(Arc::new(Constant {
        c: positive_param(spec, "c", 1.0)?,
    }))
}

fn build_power_factorial(spec: &WeightSpec) -> Result<Arc<dyn WeightRule>> {
    let s = spec.param("s", 1.0);
    if !s.is_finite() {
        return Err(Error::Config("power-factorial exponent must be finite".into()));
    }
    Ok(Arc::new(PowerFactorial { s }))
}

fn build_gaussian_factorial(spec: &WeightSpec) -> Result<Arc<dyn WeightRule>> {
    Ok(Arc::new(GaussianFactorial {
        base: positive_param(spec, "base", 1.0)?,
    }))
}

fn build_explicit(spec: &WeightSpec) -> Result<Arc<dyn WeightRule>> {
    let table = spec
        .table
        .clone()
        .ok_or_else(|| Error::Config("explicit weights need a table".into()))?;
    if table.is_empty() {
        return Err(Error::Config("explicit weight table is empty".into()));
    }
    if let Some((index, &value)) = table
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonPositiveWeight { index, value });
    }
    Ok(Arc::new(Explicit { table }))
}

pub type WeightFactory = fn(&WeightSpec) -> Result<Arc<dyn WeightRule>>;

/// Name → constructor map for weight rules.
#[derive(Clone)]
pub struct WeightRegistry {
    factories: BTreeMap<String, WeightFactory>,
}

impl WeightRegistry {
    pub fn empty() -> Self {
        WeightRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [(&str, WeightFactory); 5] = [
            ("factorial", build_factorial),
            ("constant", build_constant),
            ("power-factorial", build_power_factorial),
            ("gaussian-factorial", build_gaussian_factorial),
            ("explicit", build_explicit),
        ];
        for (name, f) in builtins {
            r.factories.insert(name.to_string(), f);
        }
        r
    }

    /// Registers a rule; names must be unique.
    pub fn register(&mut self, name: &str, factory: WeightFactory) -> Result<()> {
        if self.factories.contains_key(name) {
            return Err(Error::Config(format!(
                "weight rule '{name}' is already registered"
            )));
        }
        self.factories.insert(name.to_string(), factory);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &WeightSpec) -> Result<WeightSequence> {
        let factory = self
            .factories
            .get(&spec.kind)
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "weight rule",
                name: spec.kind.clone(),
                known: self.names().join(", "),
            })?;
        let rule = factory(spec)?;
        Ok(WeightSequence { rule })
    }
}

impl Default for WeightRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// A validated weight sequence. Cheap to clone and shareable across threads.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    rule: Arc<dyn WeightRule>,
}

impl WeightSequence {
    pub fn from_rule(rule: Arc<dyn WeightRule>) -> Self {
        WeightSequence { rule }
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        WeightRegistry::with_builtins().build(spec)
    }

    pub fn factorial() -> Self {
        Self::from_rule(Arc::new(Factorial))
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::named("constant").with_param("c", c))
    }

    pub fn power_factorial(s: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::named("power-factorial").with_param("s", s))
    }

    pub fn gaussian_factorial(base: f64) -> Result<Self> {
        Self::from_spec(&WeightSpec::named("gaussian-factorial").with_param("base", base))
    }

    pub fn explicit(table: Vec<f64>) -> Result<Self> {
        Self::from_spec(&WeightSpec {
            kind: "explicit".into(),
            params: BTreeMap::new(),
            table: Some(table),
        })
    }

    pub fn kind(&self) -> &'static str {
        self.rule.kind()
    }

    pub fn horizon(&self) -> Option<usize> {
        self.rule.horizon()
    }

    pub fn spec(&self) -> WeightSpec {
        WeightSpec {
            kind: self.rule.kind().to_string(),
            params: self.rule.params(),
            table: self.rule.table().map(<[f64]>::to_vec),
        }
    }

    pub fn closed_form_density(&self, q_abs: f64) -> Option<RadialDensity> {
        self.rule.closed_form_density(q_abs)
    }

    /// `ln w_m`, with the convention `w_m = 1` for `m < 0`.
    pub fn ln(&self, m: i64) -> Result<f64> {
        if m < 0 {
            return Ok(0.0);
        }
        let n = m as usize;
        if let Some(h) = self.rule.horizon() {
            if n > h {
                return Err(Error::WeightBeyondHorizon {
                    index: n,
                    horizon: h,
                });
            }
        }
        Ok(self.rule.ln_weight(n))
    }

    /// `w_m`; may be `inf` for rules whose weights leave the f64 range.
    pub fn value(&self, m: i64) -> Result<f64> {
        if m < 0 {
            return Ok(1.0);
        }
        self.ln(m)?;
        Ok(self.rule.weight(m as usize))
    }

    /// Whether index `n` can be materialized.
    pub fn covers(&self, n: usize) -> bool {
        self.rule.horizon().map_or(true, |h| n <= h)
    }

    /// Label used in operator metadata.
    pub fn label(&self) -> String {
        let params = self.rule.params();
        if params.is_empty() {
            self.kind().to_string()
        } else {
            let p: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{}:{}", self.kind(), p.join(","))
        }
    }
}

impl Serialize for WeightSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec().serialize(s)
    }
}
