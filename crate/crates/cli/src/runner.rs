//! Scenario execution: builds circuits from the manifest, evaluates the
//! analytic fidelity column where a closed form applies, runs the Monte
//! Carlo column where requested, and assembles the result table.

use crate::manifest::{CouplingProfile, ManifestError, OutputFormat, RunManifest, ScenarioKind};
use crate::output::ResultTable;
use noisegate::analytic::{
    contraction_fidelity, fidelity_chain_amplitude_damping, fidelity_chain_depolarizing,
    fidelity_chain_flip, fidelity_chain_gen_amp_damping, fidelity_cnot_bitflip,
    EntangledPairCoeffs,
};
use noisegate::channels::{second_moments, ChannelKind, ChannelSpec, SecondMoments};
use noisegate::circuit::{build_cnot_scenario, build_spinchain_scenario, CircuitIR, SpinChainParams};
use noisegate::montecarlo::estimate_fidelity;
use noisegate::qstate::StateVector;
use noisegate::C64;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid manifest: {0}")]
    InvalidManifest(#[from] ManifestError),
    #[error("trajectory failure: {0}")]
    Trajectory(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Process exit code the spec assigns this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::InvalidManifest(_) => 2,
            RunError::Trajectory(_) | RunError::Io(_) => 3,
        }
    }
}

fn trajectory_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Trajectory(e.to_string())
}

/// Aggregate Γ⁽ᵐ⁾(t) along the transmitted path for unit swap intervals:
/// the walked qubit sits on qubit α during (α−1, α).
fn path_gamma(manifest: &RunManifest, component: usize, t: f64) -> f64 {
    let n = manifest.chain_len;
    let mut acc = 0.0;
    for alpha in 1..=n {
        let overlap = (t - (alpha - 1) as f64).clamp(0.0, 1.0);
        if overlap <= 0.0 {
            break;
        }
        acc += manifest.qubit_gammas(alpha)[component] * overlap;
    }
    acc
}

/// Moments of the transmitted qubit's composed gate up to time t (unit
/// intervals), for channels whose fidelity has no aggregate-Γ closed form
/// under non-uniform couplings.
fn path_moments(manifest: &RunManifest, t: f64) -> Result<SecondMoments, RunError> {
    let n = manifest.chain_len;
    let mut composed = SecondMoments::identity_gate(0.0);
    for alpha in 1..=n {
        let overlap = (t - (alpha - 1) as f64).clamp(0.0, 1.0);
        if overlap <= 0.0 {
            break;
        }
        let spec = ChannelSpec::new(manifest.channel.kind, manifest.qubit_gammas(alpha))
            .map_err(ManifestError::Channel)?;
        let sm = second_moments(&spec, overlap).map_err(ManifestError::Channel)?;
        composed = composed.compose(&sm);
    }
    Ok(composed)
}

/// Closed-form chain fidelity at partial protocol time t.
fn chain_analytic(
    manifest: &RunManifest,
    pair: &EntangledPairCoeffs,
    t: f64,
) -> Result<f64, RunError> {
    let kind = manifest.channel.kind;
    let value = match kind {
        ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip => {
            fidelity_chain_flip(kind, pair, path_gamma(manifest, 0, t)).map_err(trajectory_err)?
        }
        ChannelKind::AmplitudeDamping => {
            fidelity_chain_amplitude_damping(pair, path_gamma(manifest, 0, t))
                .map_err(trajectory_err)?
        }
        ChannelKind::Depolarizing => {
            let g = [
                path_gamma(manifest, 0, t),
                path_gamma(manifest, 1, t),
                path_gamma(manifest, 2, t),
            ];
            fidelity_chain_depolarizing(pair, g[0] + g[1], g[0] + g[2], g[1] + g[2])
                .map_err(trajectory_err)?
        }
        ChannelKind::GeneralizedAmplitudeDamping => match manifest.profile {
            CouplingProfile::Uniform => fidelity_chain_gen_amp_damping(
                pair,
                manifest.channel.gammas[0],
                manifest.channel.gammas[1],
                t.min(manifest.chain_len as f64),
            )
            .map_err(trajectory_err)?,
            CouplingProfile::Gaussian { .. } => {
                contraction_fidelity(pair, &path_moments(manifest, t)?)
            }
        },
    };
    Ok(value)
}

fn spinchain_mc(
    manifest: &RunManifest,
    lambda: f64,
) -> Result<(f64, f64), RunError> {
    let n = manifest.chain_len;
    let pair = EntangledPairCoeffs::lambda_pair(lambda).map_err(trajectory_err)?;
    let params = SpinChainParams {
        n,
        kind: manifest.channel.kind,
        couplings: (0..=n).map(|q| manifest.qubit_gammas(q)).collect(),
        times: (0..=n).map(|k| k as f64).collect(),
        pair: pair.amplitudes(),
        bulk: None,
        qubit0_noise: manifest.qubit0_noise,
    };
    let scenario = build_spinchain_scenario(&params).map_err(trajectory_err)?;
    let est = estimate_fidelity(
        &scenario.circuit,
        &scenario.input,
        &scenario.target_pair,
        &[0, n],
        &manifest.ensemble,
    )
    .map_err(trajectory_err)?;
    Ok((est.value, est.std_error))
}

fn run_cnot(manifest: &RunManifest) -> Result<ResultTable, RunError> {
    let axis = manifest
        .axis("T")
        .cloned()
        .unwrap_or_else(|| crate::manifest::SweepAxis::new("T", 0.0, 2.0, 21));
    let g1 = manifest.channel.gammas[0];
    let g2 = manifest.cnot_gamma2.unwrap_or(g1);
    let kind = manifest.channel.kind;
    let input = StateVector::zero_state(2);
    let mut rows = Vec::new();
    for t in axis.values() {
        let analytic = if kind == ChannelKind::BitFlip {
            Some(fidelity_cnot_bitflip(g1, g2, (t, t)).map_err(trajectory_err)?)
        } else {
            None
        };
        let (mc, mc_se) = if manifest.with_mc {
            let circuit =
                build_cnot_scenario(g1, g2, kind, 0.0, t, 2.0 * t).map_err(trajectory_err)?;
            let est = estimate_fidelity(&circuit, &input, &input, &[0, 1], &manifest.ensemble)
                .map_err(trajectory_err)?;
            (Some(est.value), Some(est.std_error))
        } else {
            (None, None)
        };
        rows.push(vec![Some(t), analytic, mc, mc_se]);
    }
    Ok(ResultTable {
        scenario: manifest.scenario.name().to_string(),
        channel: manifest.channel.clone(),
        seed: manifest.ensemble.master_seed,
        columns: vec!["T", "analytic_fidelity", "mc_fidelity", "mc_std_error"],
        rows,
    })
}

fn run_spinchain(manifest: &RunManifest) -> Result<ResultTable, RunError> {
    let lambda_axis = manifest
        .axis("lambda")
        .cloned()
        .unwrap_or_else(|| crate::manifest::SweepAxis::new("lambda", 0.0, 1.0, 21));
    let time_axis = manifest.axis("time").cloned().unwrap_or_else(|| {
        crate::manifest::SweepAxis::new("time", 0.0, manifest.chain_len as f64, manifest.chain_len + 1)
    });
    let protocol_end = manifest.chain_len as f64;
    let mut rows = Vec::new();
    for lambda in lambda_axis.values() {
        let pair = EntangledPairCoeffs::lambda_pair(lambda).map_err(trajectory_err)?;
        // The Monte Carlo column exists only at the end of the full protocol.
        let mc_at_end = if manifest.with_mc {
            Some(spinchain_mc(manifest, lambda)?)
        } else {
            None
        };
        for t in time_axis.values() {
            let analytic = chain_analytic(manifest, &pair, t)?;
            let at_end = (t - protocol_end).abs() < 1e-9;
            let (mc, mc_se) = match (&mc_at_end, at_end) {
                (Some((v, se)), true) => (Some(*v), Some(*se)),
                _ => (None, None),
            };
            rows.push(vec![Some(lambda), Some(t), Some(analytic), mc, mc_se]);
        }
    }
    Ok(ResultTable {
        scenario: manifest.scenario.name().to_string(),
        channel: manifest.channel.clone(),
        seed: manifest.ensemble.master_seed,
        columns: vec![
            "lambda",
            "time",
            "analytic_fidelity",
            "mc_fidelity",
            "mc_std_error",
        ],
        rows,
    })
}

fn run_circuit_file(manifest: &RunManifest, path: &std::path::Path) -> Result<ResultTable, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| ManifestError::CircuitFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let circuit = CircuitIR::from_json(&text).map_err(|e| ManifestError::CircuitFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    circuit.validate().map_err(|e| ManifestError::CircuitFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let input = StateVector::zero_state(circuit.n_qubits);
    // Protocol fidelity against the same circuit with all noise removed.
    let ideal = noisegate::circuit::run_trajectory(&circuit.without_noise(), &input, 0, 0, manifest.ensemble.dt)
        .map_err(trajectory_err)?;
    let mut target = ideal;
    let norm = target.norm_sq().sqrt();
    target.scale(C64::new(1.0 / norm, 0.0));
    let keep: Vec<usize> = (0..circuit.n_qubits).collect();
    let est = estimate_fidelity(&circuit, &input, &target, &keep, &manifest.ensemble)
        .map_err(trajectory_err)?;
    Ok(ResultTable {
        scenario: manifest.scenario.name().to_string(),
        channel: manifest.channel.clone(),
        seed: manifest.ensemble.master_seed,
        columns: vec!["mc_fidelity", "mc_std_error"],
        rows: vec![vec![Some(est.value), Some(est.std_error)]],
    })
}

/// Outcome of one scenario run: the table plus timing for the on-screen
/// summary (timing never enters the output files, which stay byte-stable).
#[derive(Debug)]
pub struct RunOutcome {
    pub table: ResultTable,
    pub wall_seconds: f64,
    pub written_to: Option<std::path::PathBuf>,
}

pub fn run_scenario(manifest: &RunManifest) -> Result<RunOutcome, RunError> {
    manifest.validate()?;
    let start = Instant::now();
    let table = match &manifest.scenario {
        ScenarioKind::Cnot => run_cnot(manifest)?,
        ScenarioKind::SpinChain => run_spinchain(manifest)?,
        ScenarioKind::CircuitFile(path) => run_circuit_file(manifest, path)?,
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut written_to = None;
    if let Some(path) = &manifest.output {
        let rendered = match manifest.format {
            OutputFormat::Csv => table.to_csv(),
            OutputFormat::Json => table.to_json(),
        };
        std::fs::write(path, rendered)?;
        written_to = Some(path.clone());
    }
    Ok(RunOutcome {
        table,
        wall_seconds,
        written_to,
    })
}
