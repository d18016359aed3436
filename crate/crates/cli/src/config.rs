//! Experiment configuration: a flat key=value file plus flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sqla::io::Manifest;

use crate::CliError;

#[derive(Debug, Clone)]
pub enum MatrixSource {
    File(PathBuf),
    Synthetic {
        rows: usize,
        cols: usize,
        spectrum: Vec<f64>,
        noise: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub pipeline: String,
    pub source: MatrixSource,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
    pub oracle: bool,
    /// Oracle verification only runs when the dimension is at most this.
    pub oracle_limit: usize,
    pub out_dir: PathBuf,
    /// Pipeline parameters (eps, delta, sigma, eta, gamma, r, c, ...).
    pub params: BTreeMap<String, f64>,
    /// Calibration constants map (multipliers on sketch/sample formulas).
    pub constants: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let manifest =
            sqla::io::read_manifest(path).map_err(|e| CliError::validation(e.to_string()))?;
        Self::from_manifest(&manifest)
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self, CliError> {
        let pipeline = m
            .get("pipeline")
            .cloned()
            .ok_or_else(|| CliError::validation("missing key: pipeline"))?;
        let get_f = |key: &str| -> Option<f64> { m.get(key).and_then(|v| v.parse().ok()) };
        let get_u = |key: &str| -> Option<usize> { m.get(key).and_then(|v| v.parse().ok()) };

        let source = match m.get("matrix").map(String::as_str) {
            Some("synthetic") | None => {
                let rows = get_u("rows").unwrap_or(200);
                let cols = get_u("cols").unwrap_or(rows);
                let spectrum = match m.get("spectrum") {
                    Some(list) => list
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<Vec<f64>, _>>()
                        .map_err(|e| CliError::validation(format!("spectrum: {e}")))?,
                    None => {
                        let rank = get_u("rank").unwrap_or(4);
                        let smin = get_f("sigma_min").unwrap_or(1.0);
                        let smax = get_f("sigma_max").unwrap_or(2.0);
                        geometric_spectrum(rank, smin, smax)
                    }
                };
                MatrixSource::Synthetic {
                    rows,
                    cols,
                    spectrum,
                    noise: get_f("noise").unwrap_or(0.0),
                }
            }
            Some(path) => MatrixSource::File(PathBuf::from(path)),
        };

        let trials = get_u("trials").unwrap_or(1).max(1);
        let mut params = BTreeMap::new();
        let mut constants = BTreeMap::new();
        for (k, v) in m {
            if let Ok(x) = v.parse::<f64>() {
                if let Some(name) = k.strip_prefix("constant_") {
                    constants.insert(name.to_string(), x);
                } else {
                    params.insert(k.clone(), x);
                }
            }
        }
        let eps = params.get("eps").copied().unwrap_or(0.2);
        let delta = params.get("delta").copied().unwrap_or(0.1);
        if !(0.0 < eps && eps <= 1.0) || !(0.0 < delta && delta <= 1.0) {
            return Err(CliError::validation("eps and delta must lie in (0, 1]"));
        }
        Ok(Self {
            pipeline,
            source,
            trials,
            seed: m.get("seed").and_then(|v| v.parse().ok()).unwrap_or(0),
            jobs: get_u("jobs").unwrap_or(1).max(1),
            oracle: m.get("oracle").map(String::as_str) != Some("off"),
            oracle_limit: get_u("oracle_limit").unwrap_or(600),
            out_dir: PathBuf::from(
                m.get("out").cloned().unwrap_or_else(|| "sqla-out".into()),
            ),
            params,
            constants,
        })
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn param_usize(&self, key: &str, default: usize) -> usize {
        self.params
            .get(key)
            .map(|&v| v as usize)
            .unwrap_or(default)
    }

    pub fn constant(&self, key: &str, default: f64) -> f64 {
        self.constants.get(key).copied().unwrap_or(default)
    }
}

pub fn geometric_spectrum(rank: usize, sigma_min: f64, sigma_max: f64) -> Vec<f64> {
    if rank <= 1 {
        return vec![sigma_max];
    }
    (0..rank)
        .map(|i| {
            let t = i as f64 / (rank - 1) as f64;
            sigma_max * (sigma_min / sigma_max).powf(t)
        })
        .collect()
}
