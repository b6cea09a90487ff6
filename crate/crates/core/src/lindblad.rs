//! Density-matrix reference evolution: an RK4 integrator for the Lindblad
//! master equation and the explicit single-qubit solutions used as oracles.

use crate::channels::{ChannelError, ChannelKind, ChannelSpec};
use crate::qstate::DensityMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LindbladError {
    #[error("non-positive dt: {0}")]
    NonPositiveDt(f64),
    #[error("negative evolution time: {0}")]
    NegativeTime(f64),
    #[error("hamiltonian is not Hermitian (residual {0:.3e})")]
    NonHermitianHamiltonian(f64),
    #[error("negative gamma: {0}")]
    NegativeGamma(f64),
    #[error("operator size {got} does not match dim {dim}")]
    BadOperatorSize { got: usize, dim: usize },
    #[error("state dimension {state} does not match spec dimension {dim}")]
    StateDimMismatch { state: usize, dim: usize },
    #[error("closed-form solution unsupported for {0:?}")]
    UnsupportedKind(ChannelKind),
    #[error("closed-form solution needs a 2×2 input, got dimension {0}")]
    BadInputDim(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// One dissipator term γ (LρL† − ½{L†L, ρ}).
#[derive(Debug, Clone)]
pub struct DissipatorTerm {
    pub operator: Vec<C64>,
    pub gamma: f64,
}

/// Master-equation specification dρ/dt = −i[H,ρ] + Σ_κ γ_κ(L_κ ρ L_κ† − ½{L_κ†L_κ, ρ})
/// with ħ = 1.
#[derive(Debug, Clone)]
pub struct LindbladSpec {
    dim: usize,
    hamiltonian: Vec<C64>,
    dissipators: Vec<DissipatorTerm>,
}

impl LindbladSpec {
    pub fn new(
        dim: usize,
        hamiltonian: Vec<C64>,
        dissipators: Vec<DissipatorTerm>,
    ) -> Result<Self, LindbladError> {
        if hamiltonian.len() != dim * dim {
            return Err(LindbladError::BadOperatorSize {
                got: hamiltonian.len(),
                dim,
            });
        }
        let mut herm = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                herm = herm.max((hamiltonian[r * dim + c] - hamiltonian[c * dim + r].conj()).norm());
            }
        }
        if herm > 1e-10 {
            return Err(LindbladError::NonHermitianHamiltonian(herm));
        }
        for term in &dissipators {
            if term.operator.len() != dim * dim {
                return Err(LindbladError::BadOperatorSize {
                    got: term.operator.len(),
                    dim,
                });
            }
            if term.gamma < 0.0 {
                return Err(LindbladError::NegativeGamma(term.gamma));
            }
        }
        Ok(Self {
            dim,
            hamiltonian,
            dissipators,
        })
    }

    /// Single-qubit spec for a decoherence channel (H = 0).
    pub fn from_channel(spec: &ChannelSpec) -> Result<Self, LindbladError> {
        spec.validate()?;
        let sde = spec.sde_spec();
        let dissipators = sde
            .noise_terms()
            .iter()
            .map(|t| DissipatorTerm {
                operator: t.operator.clone(),
                gamma: t.gamma,
            })
            .collect();
        Self::new(2, vec![C64::new(0.0, 0.0); 4], dissipators)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_gamma(&self) -> f64 {
        self.dissipators.iter().map(|t| t.gamma).fold(0.0, f64::max)
    }

    /// dt with γ·dt ≤ 0.01 and at least 100 steps over the run.
    pub fn default_dt(&self, total_time: f64) -> f64 {
        let by_gamma = if self.max_gamma() > 0.0 {
            0.01 / self.max_gamma()
        } else {
            f64::INFINITY
        };
        by_gamma.min(total_time / 100.0)
    }

    fn rhs(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let mm = |a: &[C64], b: &[C64], out: &mut [C64]| {
            for r in 0..d {
                for c in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..d {
                        acc += a[r * d + k] * b[k * d + c];
                    }
                    out[r * d + c] = acc;
                }
            }
        };
        let mut t1 = vec![C64::new(0.0, 0.0); d * d];
        let mut t2 = vec![C64::new(0.0, 0.0); d * d];
        // −i[H, ρ]
        mm(&self.hamiltonian, rho, &mut t1);
        mm(rho, &self.hamiltonian, &mut t2);
        let minus_i = C64::new(0.0, -1.0);
        for i in 0..d * d {
            out[i] = minus_i * (t1[i] - t2[i]);
        }
        let mut ldag = vec![C64::new(0.0, 0.0); d * d];
        let mut ldagl = vec![C64::new(0.0, 0.0); d * d];
        for term in &self.dissipators {
            if term.gamma == 0.0 {
                continue;
            }
            for r in 0..d {
                for c in 0..d {
                    ldag[r * d + c] = term.operator[c * d + r].conj();
                }
            }
            // γ L ρ L†
            mm(&term.operator, rho, &mut t1);
            mm(&t1, &ldag, &mut t2);
            for i in 0..d * d {
                out[i] += term.gamma * t2[i];
            }
            // −(γ/2) {L†L, ρ}
            mm(&ldag, &term.operator, &mut ldagl);
            mm(&ldagl, rho, &mut t1);
            mm(rho, &ldagl, &mut t2);
            let w = -0.5 * term.gamma;
            for i in 0..d * d {
                out[i] += w * (t1[i] + t2[i]);
            }
        }
    }
}

/// Classical fourth-order Runge–Kutta integration of the master equation
/// over time `total_time` with step `dt` (the last step is shortened to land
/// exactly on `total_time`). The right-hand side is linear, so non-Hermitian
/// inputs (basis operators for moment extraction) propagate correctly too.
pub fn rk4_evolve(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    total_time: f64,
    dt: f64,
) -> Result<DensityMatrix, LindbladError> {
    if dt <= 0.0 {
        return Err(LindbladError::NonPositiveDt(dt));
    }
    if total_time < 0.0 {
        return Err(LindbladError::NegativeTime(total_time));
    }
    if rho0.dim() != spec.dim {
        return Err(LindbladError::StateDimMismatch {
            state: rho0.dim(),
            dim: spec.dim,
        });
    }
    let d = spec.dim;
    let sz = d * d;
    let mut rho = rho0.entries().to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); sz];
    let mut k2 = vec![C64::new(0.0, 0.0); sz];
    let mut k3 = vec![C64::new(0.0, 0.0); sz];
    let mut k4 = vec![C64::new(0.0, 0.0); sz];
    let mut tmp = vec![C64::new(0.0, 0.0); sz];

    let mut remaining = total_time;
    while remaining > 0.0 {
        let h = dt.min(remaining);
        spec.rhs(&rho, &mut k1);
        for i in 0..sz {
            tmp[i] = rho[i] + 0.5 * h * k1[i];
        }
        spec.rhs(&tmp, &mut k2);
        for i in 0..sz {
            tmp[i] = rho[i] + 0.5 * h * k2[i];
        }
        spec.rhs(&tmp, &mut k3);
        for i in 0..sz {
            tmp[i] = rho[i] + h * k3[i];
        }
        spec.rhs(&tmp, &mut k4);
        let w = h / 6.0;
        for i in 0..sz {
            rho[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        remaining -= h;
    }
    DensityMatrix::from_entries(rho0.n_qubits(), rho).map_err(|_| LindbladError::BadInputDim(d))
}

/// Evaluate the explicit master-equation solutions for the depolarizing and
/// generalized-amplitude-damping channels, extended from pure-state initial
/// data to arbitrary 2×2 operators by linearity.
pub fn closed_form_rho(
    spec: &ChannelSpec,
    rho0: &DensityMatrix,
    total_time: f64,
) -> Result<DensityMatrix, LindbladError> {
    if rho0.dim() != 2 {
        return Err(LindbladError::BadInputDim(rho0.dim()));
    }
    if total_time < 0.0 {
        return Err(LindbladError::NegativeTime(total_time));
    }
    spec.validate()?;
    let r00 = rho0.entry(0, 0);
    let r01 = rho0.entry(0, 1);
    let r10 = rho0.entry(1, 0);
    let r11 = rho0.entry(1, 1);
    let mut out = DensityMatrix::zeros(1);
    match spec.kind {
        ChannelKind::Depolarizing => {
            let (g1, g2, g3) = (spec.gammas[0], spec.gammas[1], spec.gammas[2]);
            let e12 = (-2.0 * total_time * (g1 + g2)).exp();
            let e13 = (-2.0 * total_time * (g1 + g3)).exp();
            let e23 = (-2.0 * total_time * (g2 + g3)).exp();
            out.set_entry(0, 0, 0.5 * (r00 * (1.0 + e12) + r11 * (1.0 - e12)));
            out.set_entry(1, 1, 0.5 * (r00 * (1.0 - e12) + r11 * (1.0 + e12)));
            out.set_entry(0, 1, 0.5 * (r01 * (e13 + e23) + r10 * (e23 - e13)));
            out.set_entry(1, 0, 0.5 * (r10 * (e13 + e23) + r01 * (e23 - e13)));
        }
        ChannelKind::GeneralizedAmplitudeDamping => {
            let (g1, g2) = (spec.gammas[0], spec.gammas[1]);
            let big = g1 + g2;
            if big == 0.0 {
                return Ok(rho0.clone());
            }
            let e = (-big * total_time).exp();
            let eh = (-0.5 * big * total_time).exp();
            out.set_entry(0, 0, r00 * ((g1 + g2 * e) / big) + r11 * (g1 * (1.0 - e) / big));
            out.set_entry(1, 1, r00 * (g2 * (1.0 - e) / big) + r11 * ((g2 + g1 * e) / big));
            out.set_entry(0, 1, r01 * eh);
            out.set_entry(1, 0, r10 * eh);
        }
        other => return Err(LindbladError::UnsupportedKind(other)),
    }
    Ok(out)
}
