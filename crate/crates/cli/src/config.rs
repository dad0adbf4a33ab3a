use std::io::Read;
use std::path::{Path, PathBuf};

use manin_core::{Error, Model, QParam, WeightSequence, WeightSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Polar sample grid for λ: `rings` radii up to `r_max`, `spokes` angles each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_max: f64,
    pub rings: usize,
    pub spokes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            r_max: 2.0,
            rings: 5,
            spokes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: WeightSpec,
    pub q: [f64; 2],
    pub cutoff: usize,
    pub tol: f64,
    pub order: usize,
    pub angles: usize,
    pub strategy: String,
    pub horizon: usize,
    pub grid: GridSpec,
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    /// Manin-plane expression, e.g. `tb` or `2 th^2 tb`.
    pub operator: String,
    /// Phase-space expression, e.g. `L` or `(1,2) L Lc`.
    pub symbol: String,
    pub l: usize,
    pub pg_weights: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: WeightSpec::named("factorial"),
            q: [1.0, 0.0],
            cutoff: 20,
            tol: 1e-14,
            order: 12,
            angles: 25,
            strategy: "auto".into(),
            horizon: 400,
            grid: GridSpec::default(),
            lambda: [0.5, 0.0],
            mu: [0.3, 0.2],
            operator: "tb".into(),
            symbol: "L".into(),
            l: 3,
            pg_weights: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Io(e.to_string()))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        };
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        for (name, v) in [
            ("cutoff", self.cutoff),
            ("order", self.order),
            ("angles", self.angles),
            ("l", self.l),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.grid.rings == 0 || self.grid.spokes == 0 || !(self.grid.r_max > 0.0) {
            return Err(Error::Config("grid needs positive r_max, rings and spokes".into()));
        }
        self.q_param()?;
        Ok(())
    }

    pub fn q_param(&self) -> Result<QParam, Error> {
        QParam::new(Complex64::new(self.q[0], self.q[1]))
    }

    pub fn model(&self) -> Result<Model, Error> {
        Ok(Model::new(WeightSequence::from_spec(&self.weights)?, self.q_param()?))
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda[0], self.lambda[1])
    }

    pub fn mu(&self) -> Complex64 {
        Complex64::new(self.mu[0], self.mu[1])
    }
}

/// `"re,im"` or a bare real.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err(format!("expected 're,im', got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("1.5"), Ok([1.5, 0.0]));
        assert_eq!(parse_pair("0, -2"), Ok([0.0, -2.0]));
        assert!(parse_pair("1,2,3").is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"q":[2,0],"weights":{"kind":"constant"}}"#).unwrap();
        assert_eq!(c.q, [2.0, 0.0]);
        assert_eq!(c.cutoff, 20);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn zero_q_rejected() {
        let c = RunConfig {
            q: [0.0, 0.0],
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
