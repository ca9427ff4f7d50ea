//! JSON configuration files.

use std::path::Path;

use bssvol_core::{Error, HybridConfig, KernelSpec, Result, VolatilityConfig};
use serde::{Deserialize, Serialize};

/// Input to `bssvol simulate`. Without `vol` the volatility is σ ≡ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub kernel: KernelSpec,
    pub hybrid: HybridConfig,
    #[serde(default)]
    pub vol: Option<VolatilityConfig>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.hybrid.validate()?;
        if let Some(v) = &self.vol {
            v.validate()?;
        }
        Ok(())
    }
}

fn default_tau_n_values() -> Vec<usize> {
    vec![100, 1000, 25_000]
}

fn default_num_lags() -> usize {
    10
}

fn default_level() -> f64 {
    0.05
}

fn default_seconds_per_unit() -> f64 {
    25_000.0
}

/// Monte Carlo study over `m_paths` simulated paths, each subsampled by
/// every factor in `frequencies`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub m_paths: usize,
    /// Observations per unit time at the finest grid.
    pub n: usize,
    pub t_end: f64,
    pub kernel: KernelSpec,
    pub vol: VolatilityConfig,
    pub kappa: usize,
    pub big_n: usize,
    /// Subsampling factors relative to the finest grid.
    pub frequencies: Vec<usize>,
    pub p: f64,
    pub seed: u64,
    /// Sample sizes N for the scale-factor experiment.
    #[serde(default = "default_tau_n_values")]
    pub tau_n_values: Vec<usize>,
    /// Lags used by the autocorrelation fit.
    #[serde(default = "default_num_lags")]
    pub num_lags: usize,
    /// Confidence-interval level a for (1 − a) intervals.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Seconds represented by one unit of time, used only for labels.
    #[serde(default = "default_seconds_per_unit")]
    pub seconds_per_unit: f64,
}

impl StudyConfig {
    /// 200 paths of 25000 steps on [0, 1], gamma kernel (α = −0.2, λ = 1),
    /// θ = 2, β = 0.125, frequencies 1s to 30m.
    pub fn desk() -> Self {
        StudyConfig {
            m_paths: 200,
            n: 25_000,
            t_end: 1.0,
            kernel: KernelSpec::Gamma {
                alpha: -0.2,
                lambda: 1.0,
            },
            vol: VolatilityConfig {
                theta: 2.0,
                beta: 0.125,
            },
            kappa: 3,
            big_n: 125_000,
            frequencies: vec![1, 5, 30, 60, 300, 1800],
            p: 2.0,
            seed: 20_240_601,
            tau_n_values: default_tau_n_values(),
            num_lags: default_num_lags(),
            level: default_level(),
            seconds_per_unit: default_seconds_per_unit(),
        }
    }

    /// 50 paths of 5000 steps (5s spacing) with frequencies 5s to 30m.
    pub fn smoke() -> Self {
        StudyConfig {
            m_paths: 50,
            n: 5_000,
            big_n: 25_000,
            frequencies: vec![1, 6, 12, 60, 360],
            tau_n_values: vec![100, 1000, 5000],
            ..Self::desk()
        }
    }

    pub fn hybrid(&self) -> Result<HybridConfig> {
        HybridConfig::new(self.big_n, self.n, self.t_end, self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_paths < 1 {
            return Err(Error::Argument("m_paths must be at least 1".into()));
        }
        self.kernel.validate()?;
        self.vol.validate()?;
        let steps = self.hybrid()?.steps()?;
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::Argument(format!("p must be positive, got {}", self.p)));
        }
        if self.frequencies.is_empty() {
            return Err(Error::Argument("at least one frequency is required".into()));
        }
        for &f in &self.frequencies {
            if f < 1 || steps / f < self.num_lags + 2 {
                return Err(Error::Argument(format!(
                    "frequency factor {f} leaves fewer than {} increments of {steps}",
                    self.num_lags + 2
                )));
            }
        }
        if self.num_lags < 2 {
            return Err(Error::Argument("num_lags must be at least 2".into()));
        }
        if let Some(&bad) = self.tau_n_values.iter().find(|&&v| v < 2 || v > steps) {
            return Err(Error::Argument(format!("tau sample size {bad} outside 2..={steps}")));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Argument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if !(self.seconds_per_unit > 0.0) {
            return Err(Error::Argument("seconds_per_unit must be positive".into()));
        }
        Ok(())
    }

    /// Presentation label of a subsampling factor, e.g. "1s", "5m".
    pub fn label(&self, factor: usize) -> String {
        frequency_label(factor as f64 * self.seconds_per_unit / self.n as f64)
    }
}

/// "30s", "5m", "2h"; fractional seconds keep three decimals.
pub fn frequency_label(seconds: f64) -> String {
    let r = seconds.round();
    if (seconds - r).abs() > 1e-9 * seconds.max(1.0) || r < 1.0 {
        return format!("{seconds:.3}s");
    }
    let s = r as u64;
    if s % 3600 == 0 {
        format!("{}h", s / 3600)
    } else if s % 60 == 0 {
        format!("{}m", s / 60)
    } else {
        format!("{s}s")
    }
}

/// Read and parse a JSON file; parse failures are argument errors.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Argument(format!("invalid config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_label() {
        let d = StudyConfig::desk();
        d.validate().unwrap();
        let labels: Vec<String> = d.frequencies.iter().map(|&f| d.label(f)).collect();
        assert_eq!(labels, ["1s", "5s", "30s", "1m", "5m", "30m"]);
        let s = StudyConfig::smoke();
        s.validate().unwrap();
        let labels: Vec<String> = s.frequencies.iter().map(|&f| s.label(f)).collect();
        assert_eq!(labels, ["5s", "30s", "1m", "5m", "30m"]);
        assert_eq!(frequency_label(0.5), "0.500s");
        assert_eq!(frequency_label(7200.0), "2h");
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kernel":{"kernel":"gamma","alpha":-0.2,"lambda":1.0},
            "hybrid":{"n":1000,"t_end":1.0,"big_n":5000},"vol":{"theta":2.0,"beta":0.125}}"#;
        let c: SimulationConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.hybrid.kappa, 3);
        assert_eq!(
            c.kernel,
            KernelSpec::Gamma {
                alpha: -0.2,
                lambda: 1.0
            }
        );
        c.validate().unwrap();
        let back: SimulationConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let s: StudyConfig = serde_json::from_str(&serde_json::to_string(&StudyConfig::desk()).unwrap()).unwrap();
        assert_eq!(s, StudyConfig::desk());
        assert!(serde_json::from_str::<SimulationConfig>(
            r#"{"kernel":{"kernel":"gamma","alpha":0.1,"lambda":1},"hybrid":{"n":10,"t_end":1,"big_n":50},"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn rejects_bad_study() {
        let mut c = StudyConfig::smoke();
        c.frequencies.push(1000);
        assert!(c.validate().is_err());
        let c = StudyConfig {
            m_paths: 0,
            ..StudyConfig::smoke()
        };
        assert!(c.validate().is_err());
        let c = StudyConfig {
            tau_n_values: vec![10_000],
            ..StudyConfig::smoke()
        };
        assert!(c.validate().is_err());
    }
}
