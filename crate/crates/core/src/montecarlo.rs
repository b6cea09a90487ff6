//! Ensemble engine: runs trajectories in parallel and accumulates density
//! matrices and fidelities with standard errors.
//!
//! Determinism contract: trajectory i always draws from streams keyed by i,
//! partial results are produced per fixed-size chunk of the trajectory range
//! and folded in chunk order, so the estimate is bitwise identical for any
//! worker count.

use crate::circuit::{run_trajectory, CircuitError, CircuitIR};
use crate::qstate::{DensityMatrix, QStateError, StateVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("ensemble needs at least one trajectory")]
    NoTrajectories,
    #[error("non-positive dt: {0}")]
    NonPositiveDt(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    QState(#[from] QStateError),
}

/// Sampling plan for one ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Step size for channels sampled by path integration.
    pub dt: f64,
    /// Worker count hint; 0 means use the global thread pool as-is.
    pub n_workers_hint: usize,
}

impl EnsembleConfig {
    pub fn new(n_trajectories: usize, master_seed: u64) -> Self {
        Self {
            n_trajectories,
            master_seed,
            dt: 0.01,
            n_workers_hint: 0,
        }
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        if self.n_trajectories == 0 {
            return Err(MonteCarloError::NoTrajectories);
        }
        if self.dt <= 0.0 {
            return Err(MonteCarloError::NonPositiveDt(self.dt));
        }
        Ok(())
    }
}

/// Scalar Monte Carlo estimate with its standard error (sample SD / √n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Mean reduced density matrix with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub mean: DensityMatrix,
    /// Standard error of each entry, row-major: sample SD of the complex
    /// entry (deviations measured in modulus) over √n.
    pub entry_std_errors: Vec<f64>,
    pub n: usize,
}

impl DensityEstimate {
    /// Aggregate standard error of the whole matrix in the Frobenius sense;
    /// an upper-bound scale for trace-distance fluctuations.
    pub fn frobenius_std_error(&self) -> f64 {
        self.entry_std_errors
            .iter()
            .map(|e| e * e)
            .sum::<f64>()
            .sqrt()
    }
}

const CHUNK: usize = 256;

fn install_pool<T: Send>(hint: usize, job: impl FnOnce() -> T + Send) -> T {
    if hint == 0 {
        job()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(hint)
            .build()
            .expect("thread pool");
        pool.install(job)
    }
}

struct DmPartial {
    sum: Vec<C64>,
    sum_sq_dev: Vec<f64>,
    fidelity_sum: f64,
    fidelity_sumsq: f64,
}

/// Ensemble average of the reduced trajectory projector
/// Tr_complement |ψ_traj⟩⟨ψ_traj| over `keep`, with per-entry standard
/// errors. Trajectory states stay unnormalized and carry uniform weight.
pub fn estimate_density_matrix(
    circuit: &CircuitIR,
    input: &StateVector,
    keep: &[usize],
    cfg: &EnsembleConfig,
) -> Result<DensityEstimate, MonteCarloError> {
    let (est, _) = estimate_reduced(circuit, input, keep, None, cfg)?;
    Ok(est)
}

/// Mean and standard error of the per-trajectory fidelity
/// ⟨target| Tr_complement |ψ_traj⟩⟨ψ_traj| |target⟩. Averaging this scalar
/// directly is algebraically identical to evaluating the mean density
/// matrix against the target.
pub fn estimate_fidelity(
    circuit: &CircuitIR,
    input: &StateVector,
    target: &StateVector,
    keep: &[usize],
    cfg: &EnsembleConfig,
) -> Result<Estimate, MonteCarloError> {
    let nsq = target.norm_sq();
    if (nsq - 1.0).abs() > 1e-10 {
        return Err(MonteCarloError::QState(QStateError::UnnormalizedTarget(
            nsq,
        )));
    }
    let (_, est) = estimate_reduced(circuit, input, keep, Some(target), cfg)?;
    Ok(est.expect("fidelity requested"))
}

fn estimate_reduced(
    circuit: &CircuitIR,
    input: &StateVector,
    keep: &[usize],
    target: Option<&StateVector>,
    cfg: &EnsembleConfig,
) -> Result<(DensityEstimate, Option<Estimate>), MonteCarloError> {
    cfg.validate()?;
    circuit.validate()?;
    // Probe one trajectory up front so per-chunk errors cannot differ by
    // worker count, and to learn the reduced dimension.
    let probe = run_trajectory(circuit, input, cfg.master_seed, 0, cfg.dt)?;
    let reduced_probe = DensityMatrix::from_pure(&probe).partial_trace(keep)?;
    let rdim = reduced_probe.dim();
    let reduced_qubits = reduced_probe.n_qubits();
    if let Some(t) = target {
        if t.dim() != rdim {
            return Err(MonteCarloError::QState(QStateError::DimensionMismatch {
                left: rdim,
                right: t.dim(),
            }));
        }
    }

    let n = cfg.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Result<Vec<DmPartial>, MonteCarloError> = install_pool(cfg.n_workers_hint, || {
        (0..n_chunks)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK;
                let hi = ((ci + 1) * CHUNK).min(n);
                let mut part = DmPartial {
                    sum: vec![C64::new(0.0, 0.0); rdim * rdim],
                    sum_sq_dev: vec![0.0; rdim * rdim],
                    fidelity_sum: 0.0,
                    fidelity_sumsq: 0.0,
                };
                for traj in lo..hi {
                    let psi =
                        run_trajectory(circuit, input, cfg.master_seed, traj as u64, cfg.dt)?;
                    let reduced = DensityMatrix::from_pure(&psi).partial_trace(keep)?;
                    for (i, &z) in reduced.entries().iter().enumerate() {
                        part.sum[i] += z;
                        part.sum_sq_dev[i] += z.norm_sqr();
                    }
                    if let Some(t) = target {
                        let f = reduced.fidelity_pure(t)?;
                        part.fidelity_sum += f;
                        part.fidelity_sumsq += f * f;
                    }
                }
                Ok(part)
            })
            .collect()
    });
    let partials = partials?;

    let mut sum = vec![C64::new(0.0, 0.0); rdim * rdim];
    let mut sumsq = vec![0.0f64; rdim * rdim];
    let mut fsum = 0.0;
    let mut fsumsq = 0.0;
    for p in &partials {
        for i in 0..rdim * rdim {
            sum[i] += p.sum[i];
            sumsq[i] += p.sum_sq_dev[i];
        }
        fsum += p.fidelity_sum;
        fsumsq += p.fidelity_sumsq;
    }

    let nf = n as f64;
    let mean_entries: Vec<C64> = sum.iter().map(|z| z / nf).collect();
    let entry_std_errors: Vec<f64> = mean_entries
        .iter()
        .zip(&sumsq)
        .map(|(m, &sq)| {
            if n < 2 {
                return 0.0;
            }
            // E|z−z̄|² = E|z|² − |z̄|², rescaled to the unbiased n−1 form.
            let var = ((sq / nf - m.norm_sqr()) * nf / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        })
        .collect();
    let mean = DensityMatrix::from_entries(reduced_qubits, mean_entries)
        .expect("reduced dimensions are consistent");
    let dm_est = DensityEstimate {
        mean,
        entry_std_errors,
        n,
    };

    let fid = target.map(|_| {
        let value = fsum / nf;
        let var = if n < 2 {
            0.0
        } else {
            ((fsumsq / nf - value * value) * nf / (nf - 1.0)).max(0.0)
        };
        Estimate {
            value,
            std_error: (var / nf).sqrt(),
            n,
        }
    });
    Ok((dm_est, fid))
}

/// Mean and standard error of the trajectory norm² — Property 2 in ensemble
/// form: E[‖ψ_T‖²] equals the input norm² for every trace-preserving spec.
pub fn estimate_mean_norm_sq(
    circuit: &CircuitIR,
    input: &StateVector,
    cfg: &EnsembleConfig,
) -> Result<Estimate, MonteCarloError> {
    cfg.validate()?;
    circuit.validate()?;
    let n = cfg.n_trajectories;
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Result<Vec<(f64, f64)>, MonteCarloError> = install_pool(cfg.n_workers_hint, || {
        (0..n_chunks)
            .into_par_iter()
            .map(|ci| {
                let lo = ci * CHUNK;
                let hi = ((ci + 1) * CHUNK).min(n);
                let mut s = 0.0;
                let mut sq = 0.0;
                for traj in lo..hi {
                    let psi =
                        run_trajectory(circuit, input, cfg.master_seed, traj as u64, cfg.dt)?;
                    let v = psi.norm_sq();
                    s += v;
                    sq += v * v;
                }
                Ok((s, sq))
            })
            .collect()
    });
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (s, sq) in partials? {
        sum += s;
        sumsq += sq;
    }
    let nf = n as f64;
    let value = sum / nf;
    let var = if n < 2 {
        0.0
    } else {
        ((sumsq / nf - value * value) * nf / (nf - 1.0)).max(0.0)
    };
    Ok(Estimate {
        value,
        std_error: (var / nf).sqrt(),
        n,
    })
}
