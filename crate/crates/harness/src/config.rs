//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::Path;

use ksgd::estimator::AlgorithmKind;
use ksgd::kernels::kernel_sup_sq;
use ksgd::theory::Setting;

use crate::error::{HarnessError, Result};

const KEYS: [&str; 10] = [
    "kernel_order_m",
    "target_index_k",
    "noise_sigma",
    "algorithm",
    "setting",
    "gamma0",
    "n_max",
    "n_checkpoints",
    "replicates",
    "master_seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel_order_m: u32,
    pub target_index_k: usize,
    pub noise_sigma: f64,
    pub algorithm: AlgorithmKind,
    pub setting: Setting,
    /// `None` means `1 / R^2`.
    pub gamma0: Option<f64>,
    pub n_max: usize,
    pub n_checkpoints: usize,
    pub replicates: usize,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel_order_m: 1,
            target_index_k: 2,
            noise_sigma: 0.1,
            algorithm: AlgorithmKind::Ours,
            setting: Setting::FiniteHorizon,
            gamma0: None,
            n_max: 3162,
            n_checkpoints: 20,
            replicates: 15,
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses the flat format. Blank lines and `#` comments are skipped;
    /// keys missing from the text keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(HarnessError::Config(format!(
                    "line {}: unknown key `{key}`",
                    lineno + 1
                )));
            }
            if seen.contains(&key) {
                return Err(HarnessError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            seen.push(key);
            cfg.set(key, value)
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<V: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<V, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        match key {
            "kernel_order_m" => self.kernel_order_m = num(key, value)?,
            "target_index_k" => self.target_index_k = num(key, value)?,
            "noise_sigma" => self.noise_sigma = num(key, value)?,
            "algorithm" => {
                self.algorithm = value.parse().map_err(|e: ksgd::Error| e.to_string())?
            }
            "setting" => self.setting = value.parse().map_err(|e: ksgd::Error| e.to_string())?,
            "gamma0" => {
                self.gamma0 = if value == "default" {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "n_max" => self.n_max = num(key, value)?,
            "n_checkpoints" => self.n_checkpoints = num(key, value)?,
            "replicates" => self.replicates = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            _ => unreachable!("keys are checked before dispatch"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if !(1..=4).contains(&self.kernel_order_m) {
            return bad(format!(
                "kernel_order_m must be in 1..=4, got {}",
                self.kernel_order_m
            ));
        }
        if !(1..=8).contains(&self.target_index_k) {
            return bad(format!(
                "target_index_k must be in 1..=8, got {}",
                self.target_index_k
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        if let Some(g) = self.gamma0 {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("gamma0 must be positive, got {g}"));
            }
        }
        if self.n_max < 1 {
            return bad("n_max must be >= 1".into());
        }
        if self.n_checkpoints < 1 {
            return bad("n_checkpoints must be >= 1".into());
        }
        if self.replicates < 1 {
            return bad("replicates must be >= 1".into());
        }
        Ok(())
    }

    /// Eigenvalue decay exponent `2m`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.kernel_order_m as f64
    }

    /// Coefficient-decay parameter `2k`.
    pub fn delta(&self) -> f64 {
        2.0 * self.target_index_k as f64
    }

    pub fn r(&self) -> f64 {
        ksgd::theory::r_from_delta(self.alpha(), self.delta())
    }

    /// `R^2 = sup_x K(x, x)`.
    pub fn r_sq(&self) -> f64 {
        kernel_sup_sq(self.kernel_order_m).expect("order validated")
    }

    pub fn effective_gamma0(&self) -> f64 {
        self.gamma0.unwrap_or(1.0 / self.r_sq())
    }

    pub fn problem(&self) -> ksgd::ProblemConstants {
        ksgd::ProblemConstants {
            alpha: self.alpha(),
            r: self.r(),
            r_sq: self.r_sq(),
        }
    }

    /// Digest of the fields that determine the data streams. Algorithm and
    /// step settings are left out so every algorithm sees the same samples.
    pub fn data_digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325_u64;
        for b in (self.target_index_k as u64)
            .to_le_bytes()
            .into_iter()
            .chain(self.noise_sigma.to_bits().to_le_bytes())
        {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel_order_m = {}", self.kernel_order_m)?;
        writeln!(f, "target_index_k = {}", self.target_index_k)?;
        writeln!(f, "noise_sigma = {:e}", self.noise_sigma)?;
        writeln!(f, "algorithm = {}", self.algorithm)?;
        writeln!(f, "setting = {}", self.setting)?;
        match self.gamma0 {
            Some(g) => writeln!(f, "gamma0 = {g:e}")?,
            None => writeln!(f, "gamma0 = default")?,
        }
        writeln!(f, "n_max = {}", self.n_max)?;
        writeln!(f, "n_checkpoints = {}", self.n_checkpoints)?;
        writeln!(f, "replicates = {}", self.replicates)?;
        writeln!(f, "master_seed = {}", self.master_seed)
    }
}
