//! Closed-form protocol fidelities.
//!
//! Where the transmitted qubit accumulates its noise into a single composed
//! gate N̄ with entries (ā, b̄; c̄, d̄), the overlap with the ideal pair state
//! is ⟨ψ|ψ̄⟩ = A·ā + B·b̄ + B*·c̄ + (1−A)·d̄, so every fidelity here is a
//! quadratic form in the channel's second moments. The explicit formulas and
//! the moment-table contraction are kept as two separate routes and tested
//! against each other.

use crate::channels::{ChannelError, ChannelKind, SecondMoments};
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    #[error("pair coefficients have norm² = {0}, expected 1 within 1e-10")]
    UnnormalizedPair(f64),
    #[error("negative parameter {0}")]
    NegativeParameter(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Coefficients a₀₀, a₀₁, a₁₀, a₁₁ of the normalized entangled pair, with
/// the derived weights A = |a₀₀|² + |a₁₀|² and B = a₀₀*a₀₁ + a₁₀*a₁₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledPairCoeffs {
    a: [C64; 4],
}

impl EntangledPairCoeffs {
    pub fn new(a: [C64; 4]) -> Result<Self, AnalyticError> {
        let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(AnalyticError::UnnormalizedPair(norm));
        }
        Ok(Self { a })
    }

    /// √λ|01⟩ + √(1−λ)|10⟩ — the one-parameter family of the figure scans.
    pub fn lambda_pair(lambda: f64) -> Result<Self, AnalyticError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(AnalyticError::NegativeParameter(lambda));
        }
        Self::new([
            C64::new(0.0, 0.0),
            C64::new(lambda.sqrt(), 0.0),
            C64::new((1.0 - lambda).sqrt(), 0.0),
            C64::new(0.0, 0.0),
        ])
    }

    pub fn bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new([
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
        ])
        .expect("Bell pair is normalized")
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.a
    }

    /// A = |a₀₀|² + |a₁₀|², the weight of the transmitted qubit's |0⟩ part.
    pub fn weight_a(&self) -> f64 {
        self.a[0].norm_sqr() + self.a[2].norm_sqr()
    }

    /// B = a₀₀* a₀₁ + a₁₀* a₁₁.
    pub fn weight_b(&self) -> C64 {
        self.a[0].conj() * self.a[1] + self.a[2].conj() * self.a[3]
    }
}

/// Per-segment couplings γ_α (one value per channel component) and interval
/// lengths along the transmitted qubit's path; exposes the aggregate decay
/// exponents Γ⁽ᵐ⁾ = Σ_α γ_α⁽ᵐ⁾ (t_α − t_(α−1)) the chain formulas consume.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCouplings {
    segments: Vec<(Vec<f64>, f64)>,
}

impl ChainCouplings {
    pub fn new(segments: Vec<(Vec<f64>, f64)>) -> Result<Self, AnalyticError> {
        for (gammas, len) in &segments {
            if *len < 0.0 {
                return Err(AnalyticError::NegativeParameter(*len));
            }
            if let Some(&g) = gammas.iter().find(|&&g| g < 0.0) {
                return Err(AnalyticError::NegativeParameter(g));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(Vec<f64>, f64)] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|(_, len)| len).sum()
    }

    /// Γ⁽ᵐ⁾ for component m.
    pub fn big_gamma(&self, m: usize) -> f64 {
        self.segments
            .iter()
            .map(|(g, len)| g.get(m).copied().unwrap_or(0.0) * len)
            .sum()
    }

    /// Γ⁽ᵐ'ⁿ⁾ = Γ⁽ᵐ⁾ + Γ⁽ⁿ⁾.
    pub fn big_gamma_pair(&self, m: usize, n: usize) -> f64 {
        self.big_gamma(m) + self.big_gamma(n)
    }
}

fn p_of(gamma: f64, delta: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * gamma * delta).exp())
}

/// Fidelity of the noisy CNOT protocol on |0,0⟩ under independent bit-flip
/// noise: four products of p/p̄ factors over the two intervals. With equal
/// couplings and equal intervals this reduces to 4p³ − 5p² + 2p.
pub fn fidelity_cnot_bitflip(
    gamma1: f64,
    gamma2: f64,
    intervals: (f64, f64),
) -> Result<f64, AnalyticError> {
    let (d1, d2) = intervals;
    for v in [gamma1, gamma2, d1, d2] {
        if v < 0.0 {
            return Err(AnalyticError::NegativeParameter(v));
        }
    }
    let p1a = p_of(gamma1, d1);
    let p2a = p_of(gamma2, d1);
    let p1b = p_of(gamma1, d2);
    let p2b = p_of(gamma2, d2);
    let (q1a, q2a, q1b, q2b) = (1.0 - p1a, 1.0 - p2a, 1.0 - p1b, 1.0 - p2b);
    Ok(p1a * p2a * p1b * p2b
        + q1a * p2a * q1b * q2b
        + p1a * q2a * p1b * q2b
        + q1a * q2a * q1b * p2b)
}

/// F = [A + (1−A)e^(−Γ/2)]² + |B|²(1 − e^(−Γ)) for amplitude damping along
/// the chain, Γ = Σ γ_α(t_α − t_(α−1)).
pub fn fidelity_chain_amplitude_damping(
    pair: &EntangledPairCoeffs,
    big_gamma: f64,
) -> Result<f64, AnalyticError> {
    if big_gamma < 0.0 {
        return Err(AnalyticError::NegativeParameter(big_gamma));
    }
    let a = pair.weight_a();
    let b2 = pair.weight_b().norm_sqr();
    let eh = (-0.5 * big_gamma).exp();
    let base = a + (1.0 - a) * eh;
    Ok(base * base + b2 * (1.0 - (-big_gamma).exp()))
}

/// F = (1 + g²)/2 + (1 − g²)/2 · e^(−2Γ) for the flip channels, with
/// g = 2·Re B (bit flip), 2A − 1 (phase flip), 2·Im B (bit-phase flip).
pub fn fidelity_chain_flip(
    kind: ChannelKind,
    pair: &EntangledPairCoeffs,
    big_gamma: f64,
) -> Result<f64, AnalyticError> {
    if big_gamma < 0.0 {
        return Err(AnalyticError::NegativeParameter(big_gamma));
    }
    let g = match kind {
        ChannelKind::BitFlip => 2.0 * pair.weight_b().re,
        ChannelKind::PhaseFlip => 2.0 * pair.weight_a() - 1.0,
        ChannelKind::BitPhaseFlip => 2.0 * pair.weight_b().im,
        other => return Err(AnalyticError::Channel(ChannelError::NotFlipKind(other))),
    };
    let g2 = g * g;
    Ok(0.5 * (1.0 + g2) + 0.5 * (1.0 - g2) * (-2.0 * big_gamma).exp())
}

/// The four-term depolarizing chain fidelity in the aggregates
/// Γ⁽ᵐ'ⁿ⁾ = Σ_α (γ_α⁽ᵐ⁾ + γ_α⁽ⁿ⁾)(t_α − t_(α−1)).
pub fn fidelity_chain_depolarizing(
    pair: &EntangledPairCoeffs,
    gamma12: f64,
    gamma13: f64,
    gamma23: f64,
) -> Result<f64, AnalyticError> {
    for v in [gamma12, gamma13, gamma23] {
        if v < 0.0 {
            return Err(AnalyticError::NegativeParameter(v));
        }
    }
    let a = pair.weight_a();
    let b = pair.weight_b();
    let e12 = (-2.0 * gamma12).exp();
    let e13 = (-2.0 * gamma13).exp();
    let e23 = (-2.0 * gamma23).exp();
    Ok(0.5 * (a * a + (1.0 - a) * (1.0 - a)) * (1.0 + e12)
        + a * (1.0 - a) * (e23 + e13)
        + b.norm_sqr() * (1.0 - e12)
        + (b * b).re * (e23 - e13))
}

/// The generalized-amplitude-damping chain fidelity for uniform couplings
/// (γ⁽¹⁾, γ⁽²⁾) across the chain, Γ = γ⁽¹⁾ + γ⁽²⁾, over `total_time`.
/// Reduces to the amplitude-damping formula at γ⁽²⁾ = 0.
pub fn fidelity_chain_gen_amp_damping(
    pair: &EntangledPairCoeffs,
    gamma1: f64,
    gamma2: f64,
    total_time: f64,
) -> Result<f64, AnalyticError> {
    for v in [gamma1, gamma2, total_time] {
        if v < 0.0 {
            return Err(AnalyticError::NegativeParameter(v));
        }
    }
    let big = gamma1 + gamma2;
    if big == 0.0 {
        return Ok(1.0);
    }
    let a = pair.weight_a();
    let b2 = pair.weight_b().norm_sqr();
    let (r1, r2) = (gamma1 / big, gamma2 / big);
    let e = (-big * total_time).exp();
    let eh = (-0.5 * big * total_time).exp();
    Ok((a * a * r1 + (1.0 - a) * (1.0 - a) * r2 + b2)
        + (a * a * r2 + (1.0 - a) * (1.0 - a) * r1 - b2) * e
        + 2.0 * a * (1.0 - a) * eh)
}

/// E|A·n̄⁰⁰ + B·n̄⁰¹ + B*·n̄¹⁰ + (1−A)·n̄¹¹|² expanded through a second-moment
/// table: the moment-contraction route to every chain fidelity. The weights
/// index as w₀₀ = A, w₀₁ = B, w₁₀ = B*, w₁₁ = 1−A.
pub fn contraction_fidelity(pair: &EntangledPairCoeffs, moments: &SecondMoments) -> f64 {
    let a = pair.weight_a();
    let b = pair.weight_b();
    let w = [
        [C64::new(a, 0.0), b],
        [b.conj(), C64::new(1.0 - a, 0.0)],
    ];
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    acc += w[i][j] * w[k][l].conj() * moments.get(i, j, k, l);
                }
            }
        }
    }
    acc.re
}
