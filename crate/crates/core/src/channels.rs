//! The decoherence channel catalog.
//!
//! Each channel is a single-qubit Lindblad family. Four of them (the three
//! flips and amplitude damping) have explicitly solvable noise gates that we
//! sample in closed form; depolarizing and generalized amplitude damping are
//! sampled by path integration. All six carry an exact table of second
//! moments E[n⁽ⁱʲ⁾ n⁽ᵏˡ⁾*] of the gate entries, which is all that quantum
//! averages ever consume.

use crate::qstate::{DensityMatrix, GateMatrix};
use crate::stochastic::{
    self, euler_maruyama_columns, NoiseTerm, SdeSpec, StochasticError, StreamKey, TimeGrid,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{kind:?} takes {expected} coupling constant(s), got {got}")]
    GammaCount {
        kind: ChannelKind,
        expected: usize,
        got: usize,
    },
    #[error("negative coupling constant {0}")]
    NegativeGamma(f64),
    #[error("negative interval length {0}")]
    NegativeInterval(f64),
    #[error("operation requires a flip channel, got {0:?}")]
    NotFlipKind(ChannelKind),
    #[error("basis images are not consistent with a linear gate channel (residual {0:.3e})")]
    InconsistentImages(f64),
    #[error("basis image must be a single-qubit operator, got dimension {0}")]
    BadImageDim(usize),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
    AmplitudeDamping,
    Depolarizing,
    GeneralizedAmplitudeDamping,
}

impl ChannelKind {
    /// Number of coupling constants (= independent Wiener processes).
    pub fn gamma_count(self) -> usize {
        match self {
            ChannelKind::Depolarizing => 3,
            ChannelKind::GeneralizedAmplitudeDamping => 2,
            _ => 1,
        }
    }

    pub fn is_flip(self) -> bool {
        matches!(
            self,
            ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip
        )
    }

    /// True when the channel's noise gate has a closed-form sampler; the
    /// remaining kinds are sampled by path integration.
    pub fn has_closed_form_sampler(self) -> bool {
        self.is_flip() || self == ChannelKind::AmplitudeDamping
    }
}

/// A channel kind plus its coupling constants: one γ for the elementary
/// kinds, (γ⁽¹⁾,γ⁽²⁾,γ⁽³⁾) for σx,σy,σz under depolarizing, and
/// (γ⁽¹⁾,γ⁽²⁾) for σ⁻,σ⁺ under generalized amplitude damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub gammas: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, gammas: Vec<f64>) -> Result<Self, ChannelError> {
        let expected = kind.gamma_count();
        if gammas.len() != expected {
            return Err(ChannelError::GammaCount {
                kind,
                expected,
                got: gammas.len(),
            });
        }
        if let Some(&g) = gammas.iter().find(|&&g| g < 0.0) {
            return Err(ChannelError::NegativeGamma(g));
        }
        Ok(Self { kind, gammas })
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        Self::new(self.kind, self.gammas.clone()).map(|_| ())
    }

    /// The SDE specification driving this channel's trajectories (H = 0).
    pub fn sde_spec(&self) -> SdeSpec {
        let zero_h = vec![C64::new(0.0, 0.0); 4];
        let term = |op: GateMatrix, gamma: f64| NoiseTerm {
            operator: op.entries().to_vec(),
            gamma,
        };
        let terms = match self.kind {
            ChannelKind::BitFlip => vec![term(GateMatrix::pauli_x(), self.gammas[0])],
            ChannelKind::PhaseFlip => vec![term(GateMatrix::pauli_z(), self.gammas[0])],
            ChannelKind::BitPhaseFlip => vec![term(GateMatrix::pauli_y(), self.gammas[0])],
            ChannelKind::AmplitudeDamping => {
                vec![term(GateMatrix::sigma_minus(), self.gammas[0])]
            }
            ChannelKind::Depolarizing => vec![
                term(GateMatrix::pauli_x(), self.gammas[0]),
                term(GateMatrix::pauli_y(), self.gammas[1]),
                term(GateMatrix::pauli_z(), self.gammas[2]),
            ],
            ChannelKind::GeneralizedAmplitudeDamping => vec![
                term(GateMatrix::sigma_minus(), self.gammas[0]),
                term(GateMatrix::sigma_plus(), self.gammas[1]),
            ],
        };
        SdeSpec::new(2, zero_h, terms).expect("channel SDE specs are valid by construction")
    }
}

/// A sampled 2×2 noise gate realizing one noise history over an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGateSample {
    pub matrix: GateMatrix,
    pub interval: (f64, f64),
}

/// The 16 quadratic averages E[n⁽ⁱʲ⁾ n⁽ᵏˡ⁾*] of a noise gate's entries over
/// one interval. Indexed as `get(i, j, k, l)` with n⁽ⁱʲ⁾ the (row i, col j)
/// entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoments {
    m: [[[[C64; 2]; 2]; 2]; 2],
    pub duration: f64,
}

impl SecondMoments {
    pub fn zero(duration: f64) -> Self {
        Self {
            m: [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2],
            duration,
        }
    }

    /// Moments of the identity gate (zero-length interval).
    pub fn identity_gate(duration: f64) -> Self {
        let mut sm = Self::zero(duration);
        let one = C64::new(1.0, 0.0);
        sm.set(0, 0, 0, 0, one);
        sm.set(1, 1, 1, 1, one);
        sm.set(0, 0, 1, 1, one);
        sm.set(1, 1, 0, 0, one);
        sm
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.m[i][j][k][l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: C64) {
        self.m[i][j][k][l] = v;
    }

    /// Max violation of the Hermitian pairing m[i][j][k][l] = m[k][l][i][j]*.
    pub fn hermitian_pairing_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        worst = worst
                            .max((self.m[i][j][k][l] - self.m[k][l][i][j].conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Max violation of the trace-preservation identity
    /// Σ_i m[i][j][i][j'] = δ_{j,j'}, the noise-gate form of mean-trace
    /// preservation.
    pub fn trace_identity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..2 {
            for jp in 0..2 {
                let s: C64 = (0..2).map(|i| self.m[i][j][i][jp]).sum();
                let target = if j == jp { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Moments of the composed gate N₂N₁ from independent factors
    /// (`self` = earlier interval, `later` = later interval):
    /// E[(N₂N₁)⁽ⁱʲ⁾ (N₂N₁)⁽ᵏˡ⁾*] = Σ_{s,t} E[n₂⁽ⁱˢ⁾n₂⁽ᵏᵗ⁾*]·E[n₁⁽ˢʲ⁾n₁⁽ᵗˡ⁾*].
    pub fn compose(&self, later: &SecondMoments) -> SecondMoments {
        let mut out = SecondMoments::zero(self.duration + later.duration);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for s in 0..2 {
                            for t in 0..2 {
                                acc += later.m[i][s][k][t] * self.m[s][j][t][l];
                            }
                        }
                        out.m[i][j][k][l] = acc;
                    }
                }
            }
        }
        out
    }
}

/// Sample a flip-channel noise gate exp(i√γ σ_κ ΔW) with ΔW ~ Normal(0, t−t0).
pub fn sample_flip_gate(
    kind: ChannelKind,
    gamma: f64,
    key: &StreamKey,
    t0: f64,
    t: f64,
) -> Result<NoiseGateSample, ChannelError> {
    if !kind.is_flip() {
        return Err(ChannelError::NotFlipKind(kind));
    }
    let phi = stochastic::flip_angle(key, gamma, t0, t)?;
    Ok(NoiseGateSample {
        matrix: flip_gate_matrix(kind, phi),
        interval: (t0, t),
    })
}

/// The flip gates written out: cos(φ)·I + i·sin(φ)·σ_κ.
pub(crate) fn flip_gate_matrix(kind: ChannelKind, phi: f64) -> GateMatrix {
    let (c, s) = (phi.cos(), phi.sin());
    match kind {
        ChannelKind::BitFlip => GateMatrix::from_2x2([
            [C64::new(c, 0.0), C64::new(0.0, s)],
            [C64::new(0.0, s), C64::new(c, 0.0)],
        ]),
        ChannelKind::PhaseFlip => GateMatrix::from_2x2([
            [C64::new(c, s), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(c, -s)],
        ]),
        ChannelKind::BitPhaseFlip => GateMatrix::from_2x2([
            [C64::new(c, 0.0), C64::new(s, 0.0)],
            [C64::new(-s, 0.0), C64::new(c, 0.0)],
        ]),
        _ => unreachable!("flip kinds only"),
    }
}

/// Sample the amplitude-damping noise gate [[1, iφ], [0, e^(−γ(t−t0)/2)]]
/// with φ drawn from its exact Gaussian law.
pub fn sample_amplitude_damping_gate(
    gamma: f64,
    key: &StreamKey,
    t0: f64,
    t: f64,
) -> Result<NoiseGateSample, ChannelError> {
    if gamma < 0.0 {
        return Err(ChannelError::NegativeGamma(gamma));
    }
    if t < t0 {
        return Err(ChannelError::NegativeInterval(t - t0));
    }
    let phi = stochastic::sample_ito_exponential_integral(key, gamma, t0, t)?;
    let d = (-0.5 * gamma * (t - t0)).exp();
    let matrix = GateMatrix::from_2x2([
        [C64::new(1.0, 0.0), C64::new(0.0, phi)],
        [C64::new(0.0, 0.0), C64::new(d, 0.0)],
    ]);
    Ok(NoiseGateSample {
        matrix,
        interval: (t0, t),
    })
}

/// Sample a noise gate by Euler–Maruyama integration of the channel SDE on
/// the two basis columns (which share one noise realization — the gate is
/// linear, so the columns determine it). Used for the kinds without a
/// closed-form gate.
pub fn sample_sde_gate(
    spec: &ChannelSpec,
    keys: &[StreamKey],
    t0: f64,
    t: f64,
    dt: f64,
) -> Result<NoiseGateSample, ChannelError> {
    if t < t0 {
        return Err(ChannelError::NegativeInterval(t - t0));
    }
    if t == t0 {
        return Ok(NoiseGateSample {
            matrix: GateMatrix::identity(2),
            interval: (t0, t),
        });
    }
    let n_steps = ((t - t0) / dt).ceil().max(1.0) as usize;
    let grid = TimeGrid::new(t0, t, n_steps)?;
    let sde = spec.sde_spec();
    let mut columns = vec![
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    ];
    let base = stochastic::interval_counter(t0, t);
    euler_maruyama_columns(&sde, &mut columns, &grid, keys, base)?;
    let matrix = GateMatrix::from_2x2([
        [columns[0][0], columns[1][0]],
        [columns[0][1], columns[1][1]],
    ]);
    Ok(NoiseGateSample {
        matrix,
        interval: (t0, t),
    })
}

/// Exact second-moment table of a channel's noise gate over an interval of
/// length `duration`.
///
/// The values come from the explicit gate forms (flip kinds, amplitude
/// damping) or from coefficient comparison against the master-equation
/// solution (depolarizing, generalized amplitude damping). For generalized
/// amplitude damping the off-diagonal moments E[|n⁰¹|²] and E[|n¹⁰|²] carry
/// a factor (1 − e^(−ΓT)); see [`gen_amp_damping_moments_printed`] for the
/// inconsistent variant that circulates in print.
pub fn second_moments(spec: &ChannelSpec, duration: f64) -> Result<SecondMoments, ChannelError> {
    if duration < 0.0 {
        return Err(ChannelError::NegativeInterval(duration));
    }
    spec.validate()?;
    let re = |x: f64| C64::new(x, 0.0);
    let mut sm = SecondMoments::zero(duration);
    match spec.kind {
        ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip => {
            let gt = spec.gammas[0] * duration;
            let p = 0.5 * (1.0 + (-2.0 * gt).exp());
            let pbar = 1.0 - p;
            match spec.kind {
                // N = [[cosφ, i sinφ], [i sinφ, cosφ]]
                ChannelKind::BitFlip => {
                    for (i, k) in [(0, 0), (1, 1)] {
                        sm.set(i, i, k, k, re(p));
                    }
                    sm.set(0, 0, 1, 1, re(p));
                    sm.set(1, 1, 0, 0, re(p));
                    sm.set(0, 1, 0, 1, re(pbar));
                    sm.set(1, 0, 1, 0, re(pbar));
                    sm.set(0, 1, 1, 0, re(pbar));
                    sm.set(1, 0, 0, 1, re(pbar));
                }
                // N = diag(e^{iφ}, e^{−iφ}); E[e^{±2iφ}] = e^{−2γT}.
                ChannelKind::PhaseFlip => {
                    let e = (-2.0 * gt).exp();
                    sm.set(0, 0, 0, 0, re(1.0));
                    sm.set(1, 1, 1, 1, re(1.0));
                    sm.set(0, 0, 1, 1, re(e));
                    sm.set(1, 1, 0, 0, re(e));
                }
                // N = [[cosφ, sinφ], [−sinφ, cosφ]]
                ChannelKind::BitPhaseFlip => {
                    for (i, k) in [(0, 0), (1, 1)] {
                        sm.set(i, i, k, k, re(p));
                    }
                    sm.set(0, 0, 1, 1, re(p));
                    sm.set(1, 1, 0, 0, re(p));
                    sm.set(0, 1, 0, 1, re(pbar));
                    sm.set(1, 0, 1, 0, re(pbar));
                    sm.set(0, 1, 1, 0, re(-pbar));
                    sm.set(1, 0, 0, 1, re(-pbar));
                }
                _ => unreachable!(),
            }
        }
        ChannelKind::AmplitudeDamping => {
            return second_moments(
                &ChannelSpec::new(
                    ChannelKind::GeneralizedAmplitudeDamping,
                    vec![spec.gammas[0], 0.0],
                )
                .expect("valid"),
                duration,
            );
        }
        ChannelKind::Depolarizing => {
            let (g1, g2, g3) = (spec.gammas[0], spec.gammas[1], spec.gammas[2]);
            let e12 = (-2.0 * duration * (g1 + g2)).exp();
            let e13 = (-2.0 * duration * (g1 + g3)).exp();
            let e23 = (-2.0 * duration * (g2 + g3)).exp();
            sm.set(0, 0, 0, 0, re(0.5 * (1.0 + e12)));
            sm.set(1, 1, 1, 1, re(0.5 * (1.0 + e12)));
            sm.set(0, 1, 0, 1, re(0.5 * (1.0 - e12)));
            sm.set(1, 0, 1, 0, re(0.5 * (1.0 - e12)));
            sm.set(0, 0, 1, 1, re(0.5 * (e13 + e23)));
            sm.set(1, 1, 0, 0, re(0.5 * (e13 + e23)));
            sm.set(0, 1, 1, 0, re(0.5 * (e23 - e13)));
            sm.set(1, 0, 0, 1, re(0.5 * (e23 - e13)));
        }
        ChannelKind::GeneralizedAmplitudeDamping => {
            let (g1, g2) = (spec.gammas[0], spec.gammas[1]);
            let big = g1 + g2;
            if big == 0.0 || duration == 0.0 {
                return Ok(SecondMoments::identity_gate(duration));
            }
            let e = (-big * duration).exp();
            let eh = (-0.5 * big * duration).exp();
            sm.set(0, 0, 0, 0, re((g1 + g2 * e) / big));
            sm.set(1, 1, 1, 1, re((g2 + g1 * e) / big));
            sm.set(0, 0, 1, 1, re(eh));
            sm.set(1, 1, 0, 0, re(eh));
            sm.set(0, 1, 0, 1, re(g1 * (1.0 - e) / big));
            sm.set(1, 0, 1, 0, re(g2 * (1.0 - e) / big));
        }
    }
    Ok(sm)
}

/// The generalized-amplitude-damping off-diagonal moments as printed in the
/// source derivation: E[|n⁰¹|²] = (γ⁽¹⁾/Γ)e^(−ΓT), E[|n¹⁰|²] = (γ⁽²⁾/Γ)e^(−ΓT).
///
/// These violate the trace-preservation identity (by ≈0.13 at ΓT = 1 with
/// equal couplings) and contradict the coefficient comparison of the same
/// derivation's ρ₀₀/ρ₁₁ solutions; they are retained only as a regression
/// fixture. [`second_moments`] carries the corrected (1 − e^(−ΓT)) values.
pub fn gen_amp_damping_moments_printed(g1: f64, g2: f64, duration: f64) -> SecondMoments {
    let spec = ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![g1, g2])
        .expect("valid gammas");
    let mut sm = second_moments(&spec, duration).expect("valid");
    let big = g1 + g2;
    if big > 0.0 && duration > 0.0 {
        let e = (-big * duration).exp();
        sm.set(0, 1, 0, 1, C64::new(g1 / big * e, 0.0));
        sm.set(1, 0, 1, 0, C64::new(g2 / big * e, 0.0));
    }
    sm
}

/// Recover the second moments from the channel's action on the four basis
/// operators: `images[x]` is the propagated |i⟩⟨k| with x = 2i + k. The
/// identification is m[j][i][l][k] = ⟨j| Φ(|i⟩⟨k|) |l⟩.
///
/// Errors if the images cannot come from an E[N·N†] channel: the image of
/// |1⟩⟨0| must be the adjoint image of |0⟩⟨1|, and Hermitian inputs must map
/// to Hermitian outputs (residual tolerance 1e-8).
pub fn moments_from_master_solution(
    images: &[DensityMatrix; 4],
) -> Result<SecondMoments, ChannelError> {
    for img in images {
        if img.dim() != 2 {
            return Err(ChannelError::BadImageDim(img.dim()));
        }
    }
    let mut residual = images[0].hermiticity_residual();
    residual = residual.max(images[3].hermiticity_residual());
    for j in 0..2 {
        for l in 0..2 {
            // Φ(|1⟩⟨0|) = Φ(|0⟩⟨1|)†
            residual = residual.max((images[2].entry(j, l) - images[1].entry(l, j).conj()).norm());
        }
    }
    if residual > 1e-8 {
        return Err(ChannelError::InconsistentImages(residual));
    }
    let mut sm = SecondMoments::zero(0.0);
    for i in 0..2 {
        for k in 0..2 {
            let img = &images[2 * i + k];
            for j in 0..2 {
                for l in 0..2 {
                    sm.set(j, i, l, k, img.entry(j, l));
                }
            }
        }
    }
    Ok(sm)
}

/// Empirical second moments of a set of sampled gates, with per-entry
/// standard errors (of real and imaginary parts combined in quadrature).
/// Test/validation helper for checking samplers against the exact tables.
pub fn empirical_second_moments(samples: &[NoiseGateSample]) -> (SecondMoments, SecondMoments) {
    let n = samples.len().max(1) as f64;
    let mut mean = SecondMoments::zero(0.0);
    let mut se = SecondMoments::zero(0.0);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut sum = C64::new(0.0, 0.0);
                    let mut sumsq_re = 0.0;
                    let mut sumsq_im = 0.0;
                    for s in samples {
                        let v = s.matrix.entry(i, j) * s.matrix.entry(k, l).conj();
                        sum += v;
                        sumsq_re += v.re * v.re;
                        sumsq_im += v.im * v.im;
                    }
                    let m = sum / n;
                    let var_re = (sumsq_re / n - m.re * m.re).max(0.0);
                    let var_im = (sumsq_im / n - m.im * m.im).max(0.0);
                    mean.set(i, j, k, l, m);
                    se.set(
                        i,
                        j,
                        k,
                        l,
                        C64::new((var_re / n).sqrt(), (var_im / n).sqrt()),
                    );
                }
            }
        }
    }
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(traj: u64) -> StreamKey {
        StreamKey::new(99, traj, 0, 0)
    }

    #[test]
    fn channel_spec_gamma_count_enforced() {
        assert!(ChannelSpec::new(ChannelKind::BitFlip, vec![0.1]).is_ok());
        assert!(ChannelSpec::new(ChannelKind::BitFlip, vec![0.1, 0.2]).is_err());
        assert!(ChannelSpec::new(ChannelKind::Depolarizing, vec![0.1]).is_err());
        assert!(ChannelSpec::new(ChannelKind::Depolarizing, vec![0.1, 0.2, 0.3]).is_ok());
        assert!(
            ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.1, -0.2]).is_err()
        );
    }

    #[test]
    fn flip_gate_zero_interval_is_identity() {
        let s = sample_flip_gate(ChannelKind::BitFlip, 0.4, &key(0), 1.0, 1.0).unwrap();
        assert!(s.matrix.entries()[0].re == 1.0 && s.matrix.entries()[3].re == 1.0);
        assert!(s.matrix.entries()[1].norm() == 0.0);
    }

    #[test]
    fn flip_gate_rejects_non_flip_kind() {
        assert!(matches!(
            sample_flip_gate(ChannelKind::AmplitudeDamping, 0.4, &key(0), 0.0, 1.0),
            Err(ChannelError::NotFlipKind(_))
        ));
    }

    #[test]
    fn flip_gates_are_unitary() {
        for kind in [
            ChannelKind::BitFlip,
            ChannelKind::PhaseFlip,
            ChannelKind::BitPhaseFlip,
        ] {
            for traj in 0..50 {
                let s = sample_flip_gate(kind, 0.7, &key(traj), 0.0, 2.0).unwrap();
                assert!(s.matrix.unitarity_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn bit_flip_cos_squared_matches_p() {
        // E[cos²(√γ ΔW)] = p(T) = (1 + e^{−2γT})/2 ≈ 0.90936 at γT = 0.1.
        let n = 200_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for traj in 0..n {
            let s = sample_flip_gate(ChannelKind::BitFlip, 0.1, &key(traj), 0.0, 1.0).unwrap();
            let c2 = s.matrix.entry(0, 0).norm_sqr();
            sum += c2;
            sumsq += c2 * c2;
        }
        let mean = sum / n as f64;
        let se = ((sumsq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        let p = 0.5 * (1.0 + (-0.2f64).exp());
        assert!((mean - p).abs() < 3.0 * se + 1e-5, "mean {mean} vs p {p}");
    }

    #[test]
    fn amplitude_damping_gate_edges() {
        let s = sample_amplitude_damping_gate(0.5, &key(0), 2.0, 2.0).unwrap();
        assert_eq!(s.matrix, GateMatrix::identity(2));
        let s = sample_amplitude_damping_gate(0.0, &key(0), 0.0, 3.0).unwrap();
        assert_eq!(s.matrix, GateMatrix::identity(2));
        assert!(sample_amplitude_damping_gate(0.5, &key(0), 1.0, 0.0).is_err());
    }

    #[test]
    fn amplitude_damping_offdiagonal_variance() {
        // E[|n⁰¹|²] = 1 − e^{−1} at γ(t−t0) = 1.
        let n = 200_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for traj in 0..n {
            let s = sample_amplitude_damping_gate(1.0, &key(traj), 0.0, 1.0).unwrap();
            let v = s.matrix.entry(0, 1).norm_sqr();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sumsq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        let expect = 1.0 - (-1.0f64).exp();
        assert!((mean - expect).abs() < 3.0 * se + 1e-5, "{mean} vs {expect}");
    }

    #[test]
    fn identity_moments_at_zero_duration() {
        for kind in [
            ChannelKind::BitFlip,
            ChannelKind::PhaseFlip,
            ChannelKind::BitPhaseFlip,
            ChannelKind::AmplitudeDamping,
        ] {
            let spec = ChannelSpec::new(kind, vec![0.3]).unwrap();
            let sm = second_moments(&spec, 0.0).unwrap();
            assert_eq!(sm, SecondMoments::identity_gate(0.0), "{kind:?}");
        }
        let depo = ChannelSpec::new(ChannelKind::Depolarizing, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(
            second_moments(&depo, 0.0).unwrap(),
            SecondMoments::identity_gate(0.0)
        );
        let gad =
            ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.1, 0.2]).unwrap();
        assert_eq!(
            second_moments(&gad, 0.0).unwrap(),
            SecondMoments::identity_gate(0.0)
        );
    }

    #[test]
    fn bit_flip_moments_reference_values() {
        // γT = 0.1: E[|n⁰⁰|²] = (1+e^{−0.2})/2, E[|n⁰¹|²] = (1−e^{−0.2})/2.
        let spec = ChannelSpec::new(ChannelKind::BitFlip, vec![0.1]).unwrap();
        let sm = second_moments(&spec, 1.0).unwrap();
        let p = 0.5 * (1.0 + (-0.2f64).exp());
        assert!((sm.get(0, 0, 0, 0).re - p).abs() < 1e-15);
        assert!((sm.get(0, 1, 0, 1).re - (1.0 - p)).abs() < 1e-15);
        assert!(sm.get(0, 0, 0, 1).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_reduces_to_each_flip_table() {
        let g = 0.17;
        let t = 1.3;
        let cases = [
            (vec![g, 0.0, 0.0], ChannelKind::BitFlip),
            (vec![0.0, g, 0.0], ChannelKind::BitPhaseFlip),
            (vec![0.0, 0.0, g], ChannelKind::PhaseFlip),
        ];
        for (gammas, flip) in cases {
            let depo = ChannelSpec::new(ChannelKind::Depolarizing, gammas).unwrap();
            let flip_spec = ChannelSpec::new(flip, vec![g]).unwrap();
            let a = second_moments(&depo, t).unwrap();
            let b = second_moments(&flip_spec, t).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            assert!(
                                (a.get(i, j, k, l) - b.get(i, j, k, l)).norm() < 1e-14,
                                "{flip:?} ({i}{j},{k}{l})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn all_tables_satisfy_trace_identity_and_pairing() {
        let specs = [
            ChannelSpec::new(ChannelKind::BitFlip, vec![0.21]).unwrap(),
            ChannelSpec::new(ChannelKind::PhaseFlip, vec![0.13]).unwrap(),
            ChannelSpec::new(ChannelKind::BitPhaseFlip, vec![0.34]).unwrap(),
            ChannelSpec::new(ChannelKind::AmplitudeDamping, vec![0.55]).unwrap(),
            ChannelSpec::new(ChannelKind::Depolarizing, vec![0.1, 0.25, 0.4]).unwrap(),
            ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.3, 0.12]).unwrap(),
        ];
        for spec in &specs {
            for t in [0.0, 0.05, 0.7, 2.5] {
                let sm = second_moments(spec, t).unwrap();
                assert!(
                    sm.trace_identity_residual() < 1e-10,
                    "{:?} T={t}: {}",
                    spec.kind,
                    sm.trace_identity_residual()
                );
                assert!(sm.hermitian_pairing_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn printed_gad_offdiagonals_break_trace_identity() {
        let sm = gen_amp_damping_moments_printed(0.5, 0.5, 1.0);
        let residual = sm.trace_identity_residual();
        assert!(residual > 0.1, "residual {residual} should exceed 0.1");
    }

    #[test]
    fn flip_moments_depend_only_on_gamma_times_t() {
        let a = second_moments(&ChannelSpec::new(ChannelKind::BitFlip, vec![0.4]).unwrap(), 0.5)
            .unwrap();
        let b = second_moments(&ChannelSpec::new(ChannelKind::BitFlip, vec![0.1]).unwrap(), 2.0)
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert!((a.get(i, j, k, l) - b.get(i, j, k, l)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn semigroup_composition_amplitude_damping() {
        for (kind, gammas) in [
            (ChannelKind::AmplitudeDamping, vec![0.37]),
            (ChannelKind::GeneralizedAmplitudeDamping, vec![0.37, 0.11]),
        ] {
            let spec = ChannelSpec::new(kind, gammas).unwrap();
            let first = second_moments(&spec, 0.6).unwrap();
            let second = second_moments(&spec, 0.9).unwrap();
            let composed = first.compose(&second);
            let direct = second_moments(&spec, 1.5).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            assert!(
                                (composed.get(i, j, k, l) - direct.get(i, j, k, l)).norm() < 1e-10,
                                "{kind:?} ({i}{j},{k}{l})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn master_solution_identity_channel() {
        let mut images: Vec<DensityMatrix> = Vec::new();
        for i in 0..2 {
            for k in 0..2 {
                let mut dm = DensityMatrix::zeros(1);
                dm.set_entry(i, k, C64::new(1.0, 0.0));
                images.push(dm);
            }
        }
        let images: [DensityMatrix; 4] = images.try_into().unwrap();
        let sm = moments_from_master_solution(&images).unwrap();
        let id = SecondMoments::identity_gate(0.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert!((sm.get(i, j, k, l) - id.get(i, j, k, l)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn master_solution_rejects_inconsistent_images() {
        let mut images: Vec<DensityMatrix> = Vec::new();
        for i in 0..2 {
            for k in 0..2 {
                let mut dm = DensityMatrix::zeros(1);
                dm.set_entry(i, k, C64::new(1.0, 0.0));
                images.push(dm);
            }
        }
        // Corrupt the |1⟩⟨0| image so it is no longer the adjoint of |0⟩⟨1|.
        images[2].set_entry(0, 0, C64::new(0.5, 0.0));
        let images: [DensityMatrix; 4] = images.try_into().unwrap();
        assert!(matches!(
            moments_from_master_solution(&images),
            Err(ChannelError::InconsistentImages(_))
        ));
    }

    #[test]
    fn sde_gate_zero_interval_is_identity() {
        let spec = ChannelSpec::new(ChannelKind::Depolarizing, vec![0.1, 0.1, 0.1]).unwrap();
        let keys: Vec<StreamKey> = (0..3).map(|c| StreamKey::new(1, 0, 0, c)).collect();
        let s = sample_sde_gate(&spec, &keys, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(s.matrix, GateMatrix::identity(2));
    }
}
