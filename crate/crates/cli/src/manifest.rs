//! Run manifests: what to simulate, over which parameter grid, and where the
//! results go.

use noisegate::channels::{ChannelKind, ChannelSpec};
use noisegate::montecarlo::EnsembleConfig;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("sweep axis {name}: bounds not ordered ({min} > {max})")]
    UnorderedBounds { name: String, min: f64, max: f64 },
    #[error("sweep axis {0}: needs at least one step")]
    NoSteps(String),
    #[error("unknown sweep axis {0} for this scenario")]
    UnknownAxis(String),
    #[error("channel: {0}")]
    Channel(#[from] noisegate::channels::ChannelError),
    #[error("spin chain needs n ≥ 2, got {0}")]
    ChainTooShort(usize),
    #[error("Monte Carlo columns are limited to chains with n ≤ 12 (state dimension 2^(n+1)); got n = {0}")]
    ChainTooLongForMc(usize),
    #[error("gaussian profile needs one covariance per channel component ({expected}), got {got}")]
    BadCovariances { expected: usize, got: usize },
    #[error("trajectory count must be ≥ 1")]
    NoTrajectories,
    #[error("non-positive dt: {0}")]
    NonPositiveDt(f64),
    #[error("circuit file {path}: {message}")]
    CircuitFile { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Cnot,
    SpinChain,
    CircuitFile(PathBuf),
}

impl ScenarioKind {
    pub fn name(&self) -> &str {
        match self {
            ScenarioKind::Cnot => "cnot",
            ScenarioKind::SpinChain => "spinchain",
            ScenarioKind::CircuitFile(_) => "custom",
        }
    }
}

/// One swept parameter: `steps` evenly spaced values over [min, max]
/// (a single step pins the value at `min`).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(name: &str, min: f64, max: f64, steps: usize) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            steps,
        }
    }

    fn validate(&self) -> Result<(), ManifestError> {
        if self.min > self.max {
            return Err(ManifestError::UnorderedBounds {
                name: self.name.clone(),
                min: self.min,
                max: self.max,
            });
        }
        if self.steps == 0 {
            return Err(ManifestError::NoSteps(self.name.clone()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }
}

/// How couplings vary along the chain.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingProfile {
    /// Every qubit carries the manifest's coupling constants.
    Uniform,
    /// γ_α⁽ⁱ⁾ = peak_i · exp(−(α − center)² / (2·cov_i)); the manifest's
    /// coupling constants are the peaks.
    Gaussian { center: f64, covariances: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario: ScenarioKind,
    pub channel: ChannelSpec,
    /// Second coupling constant for the CNOT target qubit; defaults to the
    /// channel's constant.
    pub cnot_gamma2: Option<f64>,
    /// Chain parameter n (n+1 qubits) for the spin-chain scenario.
    pub chain_len: usize,
    pub sweeps: Vec<SweepAxis>,
    pub profile: CouplingProfile,
    pub ensemble: EnsembleConfig,
    pub with_mc: bool,
    pub qubit0_noise: bool,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunManifest {
    pub fn new(scenario: ScenarioKind, channel: ChannelSpec) -> Self {
        let sweeps = match &scenario {
            ScenarioKind::Cnot => vec![SweepAxis::new("T", 0.0, 2.0, 21)],
            ScenarioKind::SpinChain => vec![
                SweepAxis::new("lambda", 0.0, 1.0, 21),
                SweepAxis::new("time", 0.0, 4.0, 41),
            ],
            ScenarioKind::CircuitFile(_) => vec![],
        };
        Self {
            scenario,
            channel,
            cnot_gamma2: None,
            chain_len: 4,
            sweeps,
            profile: CouplingProfile::Uniform,
            ensemble: EnsembleConfig::new(20_000, 1),
            with_mc: true,
            qubit0_noise: true,
            output: None,
            format: OutputFormat::Csv,
        }
    }

    /// Depolarizing surface over a 100-qubit chain: unit swap intervals,
    /// couplings on a Gaussian profile centered at qubit 50 with covariance
    /// ratio 1:2:3 (peaks and absolute covariances are manifest inputs; the
    /// defaults below are this crate's documented choice).
    pub fn figure3() -> Self {
        let channel =
            ChannelSpec::new(ChannelKind::Depolarizing, vec![0.02, 0.02, 0.02]).unwrap();
        let mut m = Self::new(ScenarioKind::SpinChain, channel);
        m.chain_len = 100;
        m.sweeps = vec![
            SweepAxis::new("lambda", 0.0, 1.0, 21),
            SweepAxis::new("time", 0.0, 100.0, 101),
        ];
        m.profile = CouplingProfile::Gaussian {
            center: 50.0,
            covariances: vec![100.0, 200.0, 300.0],
        };
        m.with_mc = false;
        m.qubit0_noise = false;
        m
    }

    /// Generalized-amplitude-damping surface over a 100-qubit chain with
    /// uniform couplings at ratio γ⁽¹⁾:γ⁽²⁾ = 3:1.
    pub fn figure4() -> Self {
        let channel =
            ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.06, 0.02]).unwrap();
        let mut m = Self::new(ScenarioKind::SpinChain, channel);
        m.chain_len = 100;
        m.sweeps = vec![
            SweepAxis::new("lambda", 0.0, 1.0, 21),
            SweepAxis::new("time", 0.0, 100.0, 101),
        ];
        m.with_mc = false;
        m.qubit0_noise = false;
        m
    }

    pub fn axis(&self, name: &str) -> Option<&SweepAxis> {
        self.sweeps.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        self.channel.validate()?;
        for axis in &self.sweeps {
            axis.validate()?;
            let known: &[&str] = match self.scenario {
                ScenarioKind::Cnot => &["T"],
                ScenarioKind::SpinChain => &["lambda", "time"],
                ScenarioKind::CircuitFile(_) => &[],
            };
            if !known.contains(&axis.name.as_str()) {
                return Err(ManifestError::UnknownAxis(axis.name.clone()));
            }
        }
        if self.ensemble.n_trajectories == 0 {
            return Err(ManifestError::NoTrajectories);
        }
        if self.ensemble.dt <= 0.0 {
            return Err(ManifestError::NonPositiveDt(self.ensemble.dt));
        }
        if let ScenarioKind::SpinChain = self.scenario {
            if self.chain_len < 2 {
                return Err(ManifestError::ChainTooShort(self.chain_len));
            }
            if self.with_mc && self.chain_len > 12 {
                return Err(ManifestError::ChainTooLongForMc(self.chain_len));
            }
            if let CouplingProfile::Gaussian { covariances, .. } = &self.profile {
                let expected = self.channel.kind.gamma_count();
                if covariances.len() != expected {
                    return Err(ManifestError::BadCovariances {
                        expected,
                        got: covariances.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Coupling constants of qubit `alpha` under the manifest's profile.
    pub fn qubit_gammas(&self, alpha: usize) -> Vec<f64> {
        match &self.profile {
            CouplingProfile::Uniform => self.channel.gammas.clone(),
            CouplingProfile::Gaussian {
                center,
                covariances,
            } => self
                .channel
                .gammas
                .iter()
                .zip(covariances)
                .map(|(&peak, &cov)| {
                    let d = alpha as f64 - center;
                    peak * (-d * d / (2.0 * cov)).exp()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_are_inclusive_grid() {
        let a = SweepAxis::new("T", 0.0, 2.0, 5);
        assert_eq!(a.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(SweepAxis::new("T", 1.5, 9.0, 1).values(), vec![1.5]);
    }

    #[test]
    fn manifest_validation_paths() {
        let ch = ChannelSpec::new(ChannelKind::BitFlip, vec![0.1]).unwrap();
        let mut m = RunManifest::new(ScenarioKind::Cnot, ch.clone());
        assert!(m.validate().is_ok());

        m.sweeps[0].min = 3.0;
        assert!(matches!(
            m.validate(),
            Err(ManifestError::UnorderedBounds { .. })
        ));

        let mut m = RunManifest::new(ScenarioKind::SpinChain, ch.clone());
        m.chain_len = 20;
        assert!(matches!(
            m.validate(),
            Err(ManifestError::ChainTooLongForMc(20))
        ));
        m.with_mc = false;
        assert!(m.validate().is_ok());

        let mut m = RunManifest::new(ScenarioKind::SpinChain, ch);
        m.sweeps.push(SweepAxis::new("T", 0.0, 1.0, 2));
        assert!(matches!(m.validate(), Err(ManifestError::UnknownAxis(_))));
    }

    #[test]
    fn gaussian_profile_peaks_at_center() {
        let m = RunManifest::figure3();
        let mid = m.qubit_gammas(50);
        let edge = m.qubit_gammas(0);
        assert!((mid[0] - 0.02).abs() < 1e-15);
        assert!(edge[0] < mid[0]);
        // Wider covariance decays slower away from the center.
        assert!(edge[2] > edge[0]);
    }
}
