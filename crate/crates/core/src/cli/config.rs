use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::flows::{LatticeSystem, ReductionSign};
use crate::laurent::MatrixLaurentSeries;
use crate::lax::{default_z_samples, FlowId};
use crate::linalg::CMat;
use crate::samples::random_symbol;

/// A configuration problem, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// One symbol coefficient `γ^(k)`, entries in row-major order.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub k: i64,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub biorthonormality: f64,
    pub recursions: f64,
    pub duality: f64,
    pub lax_two_path: f64,
    pub eigenvalue: f64,
    /// Residual below which a zero-curvature check passes without a ratio test.
    pub zero_curvature_floor: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub flow_scalar: f64,
    pub flow_matrix: f64,
    pub step_improvement: f64,
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            biorthonormality: 1e-10,
            recursions: 1e-10,
            duality: 1e-10,
            lax_two_path: 1e-8,
            eigenvalue: 1e-9,
            zero_curvature_floor: 1e-13,
            ratio_lo: 0.15,
            ratio_hi: 0.35,
            flow_scalar: 1e-6,
            flow_matrix: 1e-5,
            step_improvement: 8.0,
            hermitian: 1e-8,
        }
    }
}

impl Tolerances {
    /// Multiply every absolute tolerance by `s` (ratio bands are left alone).
    pub fn scaled(&self, s: f64) -> Tolerances {
        Tolerances {
            biorthonormality: self.biorthonormality * s,
            recursions: self.recursions * s,
            duality: self.duality * s,
            lax_two_path: self.lax_two_path * s,
            eigenvalue: self.eigenvalue * s,
            zero_curvature_floor: self.zero_curvature_floor * s,
            flow_scalar: self.flow_scalar * s,
            flow_matrix: self.flow_matrix * s,
            hermitian: self.hermitian * s,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let abs = [
            ("biorthonormality", self.biorthonormality),
            ("recursions", self.recursions),
            ("duality", self.duality),
            ("lax_two_path", self.lax_two_path),
            ("eigenvalue", self.eigenvalue),
            ("zero_curvature_floor", self.zero_curvature_floor),
            ("flow_scalar", self.flow_scalar),
            ("flow_matrix", self.flow_matrix),
            ("step_improvement", self.step_improvement),
            ("hermitian", self.hermitian),
        ];
        for (name, v) in abs {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be > 0"));
            }
        }
        if !(self.ratio_lo > 0.0 && self.ratio_lo < self.ratio_hi) {
            return bad("tolerances.ratio_lo must be positive and below ratio_hi");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroCurvatureSettings {
    pub eps: f64,
    pub site: usize,
    pub flows: Vec<FlowId>,
}

impl Default for ZeroCurvatureSettings {
    fn default() -> Self {
        ZeroCurvatureSettings {
            eps: 1e-4,
            site: 1,
            flows: vec![FlowId::T1, FlowId::S1, FlowId::Tau],
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryChoice {
    Zero,
    Oracle,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSettings {
    /// Defaults to `scalar` for `n = 1` and `left` otherwise.
    pub system: Option<LatticeSystem>,
    pub tau_end: f64,
    pub step: f64,
    pub sites: usize,
    pub buffer: usize,
    pub boundary: BoundaryChoice,
    pub record_every: usize,
    pub sign: ReductionSign,
    /// Initial `x_k = amplitude · I` for the Hermitian check.
    pub amplitude: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            system: None,
            tau_end: 0.1,
            step: 1e-3,
            sites: 16,
            buffer: 6,
            boundary: BoundaryChoice::Zero,
            record_every: 10,
            sign: ReductionSign::Minus,
            amplitude: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub count: usize,
    pub sizes: Vec<usize>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            count: 20,
            sizes: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Optional declared band `[lo, hi]`; every term must lie inside it.
    #[serde(default)]
    pub band: Option<[i64; 2]>,
    #[serde(default)]
    pub symbol: Vec<Term>,
    /// Use a seeded random well-conditioned symbol instead of `symbol`.
    #[serde(default)]
    pub random_symbol: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    /// `[re, im]` pairs.
    #[serde(default)]
    pub z_samples: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub zero_curvature: ZeroCurvatureSettings,
    #[serde(default)]
    pub flow: FlowSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
}

fn default_n_max() -> usize {
    10
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return bad("n must be >= 1");
        }
        if self.n_max < 3 {
            return bad("n_max must be >= 3");
        }
        if self.random_symbol == !self.symbol.is_empty() {
            return bad("symbol: give either symbol terms or random_symbol = true");
        }
        let nn = self.n * self.n;
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.symbol {
            if !seen.insert(t.k) {
                return bad(format!("symbol: exponent {} given twice", t.k));
            }
            if t.re.len() != nn {
                return bad(format!("symbol[k={}].re needs {nn} entries", t.k));
            }
            if let Some(im) = &t.im {
                if im.len() != nn {
                    return bad(format!("symbol[k={}].im needs {nn} entries", t.k));
                }
            }
            if let Some([lo, hi]) = self.band {
                if t.k < lo || t.k > hi {
                    return bad(format!("symbol[k={}] lies outside band [{lo}, {hi}]", t.k));
                }
            }
        }
        if let Some([lo, hi]) = self.band {
            if lo > 0 || hi < 0 {
                return bad("band must contain exponent 0");
            }
        }
        self.tolerances.validate()?;
        let zc = &self.zero_curvature;
        if !(zc.eps > 0.0 && zc.eps.is_finite()) {
            return bad("zero_curvature.eps must be > 0");
        }
        if zc.flows.is_empty() {
            return bad("zero_curvature.flows must not be empty");
        }
        let f = &self.flow;
        if !(f.step > 0.0 && f.step.is_finite()) {
            return bad("flow.step must be > 0");
        }
        if !(f.tau_end >= 0.0 && f.tau_end.is_finite()) {
            return bad("flow.tau_end must be >= 0");
        }
        if f.sites < f.buffer + 2 {
            return bad("flow.sites must exceed flow.buffer by at least 2");
        }
        if f.record_every == 0 {
            return bad("flow.record_every must be >= 1");
        }
        if f.system == Some(LatticeSystem::Scalar) && self.n != 1 {
            return bad("flow.system = scalar needs n = 1");
        }
        if self.sweep.sizes.contains(&0) {
            return bad("sweep.sizes entries must be >= 1");
        }
        if let Some(zs) = &self.z_samples {
            if zs.is_empty() || zs.iter().any(|z| z[0] == 0.0 && z[1] == 0.0) {
                return bad("z_samples must be non-empty and nonzero");
            }
        }
        Ok(())
    }

    pub fn symbol(&self) -> MatrixLaurentSeries {
        if self.random_symbol {
            return random_symbol(self.n, self.seed);
        }
        let n = self.n;
        let terms: Vec<(i64, CMat)> = self
            .symbol
            .iter()
            .map(|t| {
                let im = t.im.clone().unwrap_or_else(|| vec![0.0; n * n]);
                let m = CMat::from_fn(n, n, |i, j| Complex64::new(t.re[i * n + j], im[i * n + j]));
                (t.k, m)
            })
            .collect();
        MatrixLaurentSeries::from_terms(n, &terms).expect("validated block sizes")
    }

    pub fn z_samples(&self) -> Vec<Complex64> {
        match &self.z_samples {
            Some(zs) => zs.iter().map(|z| Complex64::new(z[0], z[1])).collect(),
            None => default_z_samples(),
        }
    }

    pub fn system(&self) -> LatticeSystem {
        self.flow.system.unwrap_or(if self.n == 1 {
            LatticeSystem::Scalar
        } else {
            LatticeSystem::Left
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"
n = 1
n_max = 4
[[symbol]]
k = 0
re = [1.0]
[[symbol]]
k = 1
re = [0.2]
[[symbol]]
k = -1
re = [0.2]
"#;

    #[test]
    fn parses_scalar_symbol() {
        let cfg = RunConfig::from_toml(SCALAR).unwrap();
        let g = cfg.symbol();
        assert_eq!(g.band(), (-1, 1));
        assert_eq!(g.coeff(1)[(0, 0)], Complex64::new(0.2, 0.0));
        assert_eq!(cfg.z_samples().len(), 4);
        assert_eq!(cfg.system(), LatticeSystem::Scalar);
    }

    #[test]
    fn rejects_zero_block_size() {
        let e = RunConfig::from_toml(&SCALAR.replace("n = 1", "n = 0")).unwrap_err();
        assert!(e.0.contains("n must be"), "{e}");
    }

    #[test]
    fn rejects_wrong_entry_count_and_band() {
        let e = RunConfig::from_toml(&SCALAR.replace("re = [0.2]\n[[symbol]]\nk = -1", "re = [0.2, 1.0]\n[[symbol]]\nk = -1"))
            .unwrap_err();
        assert!(e.0.contains("symbol[k=1].re"), "{e}");
        let e = RunConfig::from_toml(&SCALAR.replace("n_max = 4", "n_max = 4\nband = [0, 1]")).unwrap_err();
        assert!(e.0.contains("outside band"), "{e}");
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(RunConfig::from_toml(&format!("{SCALAR}\n[flow]\nstpe = 1.0\n")).is_err());
    }

    #[test]
    fn tolerance_scaling_leaves_ratio_band() {
        let t = Tolerances::default().scaled(10.0);
        assert_eq!(t.recursions, 1e-9);
        assert_eq!(t.ratio_lo, 0.15);
    }
}
