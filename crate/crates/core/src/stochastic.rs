//! Reproducible random sampling for linear stochastic Schrödinger equations.
//!
//! All randomness is counter-based: a [`StreamKey`] plus a draw index maps
//! through a splitmix64-style hash to a Gaussian variate, so any sample can
//! be regenerated in isolation, trajectories are independent of thread
//! scheduling, and streams with distinct keys are statistically independent.

use crate::qstate::StateVector;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StochasticError {
    #[error("negative dt: {0}")]
    NegativeDt(f64),
    #[error("negative gamma: {0}")]
    NegativeGamma(f64),
    #[error("reversed interval: t = {t} < t0 = {t0}")]
    ReversedInterval { t0: f64, t: f64 },
    #[error("time grid end {t_end} precedes start {t_start}")]
    BadGrid { t_start: f64, t_end: f64 },
    #[error("time grid needs at least one step")]
    EmptyGrid,
    #[error("hamiltonian is not Hermitian (residual {0:.3e})")]
    NonHermitianHamiltonian(f64),
    #[error("operator size {got} does not match dim {dim}")]
    BadOperatorSize { got: usize, dim: usize },
    #[error("state dimension {state} does not match SDE dimension {dim}")]
    StateDimMismatch { state: usize, dim: usize },
    #[error("got {keys} stream keys for {terms} noise terms")]
    KeyCountMismatch { keys: usize, terms: usize },
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw domains keep structurally different uses of one key from ever
/// touching the same counters.
pub(crate) mod domain {
    pub const WIENER: u64 = 0x01;
    pub const ITO: u64 = 0x02;
    pub const FLIP: u64 = 0x03;
}

/// Identifies one independent noise stream: a Wiener process attached to one
/// channel component of one qubit in one trajectory. Distinct keys yield
/// independent streams; the same key always reproduces the same samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub trajectory: u64,
    pub qubit: u64,
    pub channel_component: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, trajectory: u64, qubit: u64, channel_component: u64) -> Self {
        Self {
            master_seed,
            trajectory,
            qubit,
            channel_component,
        }
    }

    fn seed(&self, dom: u64) -> u64 {
        let mut s = mix64(self.master_seed ^ 0x6E6F_6973_6567_6174);
        s = mix64(s.wrapping_add(self.trajectory.wrapping_mul(0xA24B_AED4_963E_E407)));
        s = mix64(s.wrapping_add(self.qubit.wrapping_mul(0x9FB2_1C65_1E98_DF25)));
        s = mix64(s.wrapping_add(self.channel_component.wrapping_mul(0xD6E8_FEB8_6659_FD93)));
        mix64(s.wrapping_add(dom))
    }

    fn uniform(&self, dom: u64, index: u64) -> f64 {
        let bits = mix64(self.seed(dom).wrapping_add(GOLDEN.wrapping_mul(index)));
        // 53 significand bits shifted into (0, 1), endpoints excluded.
        ((bits >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal variate at the given counter (Box–Muller, cosine
    /// branch; one variate per counter for random access).
    pub(crate) fn normal(&self, dom: u64, index: u64) -> f64 {
        let u1 = self.uniform(dom, index.wrapping_mul(2));
        let u2 = self.uniform(dom, index.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Collapses a time interval to a substream counter so that draws attached
/// to disjoint intervals of the same stream are independent.
pub(crate) fn interval_counter(t0: f64, t1: f64) -> u64 {
    mix64(mix64(t0.to_bits() ^ 0x5AFE_5AFE_5AFE_5AFE).wrapping_add(t1.to_bits()))
}

/// Wiener increment W(t+dt) − W(t) ~ Normal(0, dt), deterministic given
/// (key, step_index).
pub fn sample_wiener_increment(
    key: &StreamKey,
    step_index: u64,
    dt: f64,
) -> Result<f64, StochasticError> {
    if dt < 0.0 {
        return Err(StochasticError::NegativeDt(dt));
    }
    Ok(dt.sqrt() * key.normal(domain::WIENER, step_index))
}

/// Draw of φ = √γ ∫ₜ₀ᵗ e^(−γ(s−t0)/2) dW_s from its exact Gaussian law.
///
/// By the Itô isometry, Var(φ) = γ ∫ₜ₀ᵗ e^(−γ(s−t0)) ds = 1 − e^(−γ(t−t0)).
/// The integrand is anchored at t0 so that the law depends only on the
/// interval length and composes across adjacent intervals.
pub fn sample_ito_exponential_integral(
    key: &StreamKey,
    gamma: f64,
    t0: f64,
    t: f64,
) -> Result<f64, StochasticError> {
    if gamma < 0.0 {
        return Err(StochasticError::NegativeGamma(gamma));
    }
    if t < t0 {
        return Err(StochasticError::ReversedInterval { t0, t });
    }
    let var = 1.0 - (-gamma * (t - t0)).exp();
    if var <= 0.0 {
        return Ok(0.0);
    }
    Ok(var.sqrt() * key.normal(domain::ITO, interval_counter(t0, t)))
}

/// Gaussian rotation angle √γ·ΔW over an interval, drawn on the FLIP domain
/// with an interval-derived counter (one draw per noise segment).
pub(crate) fn flip_angle(
    key: &StreamKey,
    gamma: f64,
    t0: f64,
    t: f64,
) -> Result<f64, StochasticError> {
    if gamma < 0.0 {
        return Err(StochasticError::NegativeGamma(gamma));
    }
    if t < t0 {
        return Err(StochasticError::ReversedInterval { t0, t });
    }
    Ok((gamma * (t - t0)).sqrt() * key.normal(domain::FLIP, interval_counter(t0, t)))
}

/// Uniform time discretization of (t_start, t_end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self, StochasticError> {
        if t_end < t_start {
            return Err(StochasticError::BadGrid { t_start, t_end });
        }
        if n_steps == 0 {
            return Err(StochasticError::EmptyGrid);
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }
}

/// One Lindblad noise term: operator L and coupling constant γ ≥ 0.
#[derive(Debug, Clone)]
pub struct NoiseTerm {
    pub operator: Vec<C64>,
    pub gamma: f64,
}

/// Specification of the linear SDE
/// d|ψ⟩ = [−iH dt + Σ_κ (i√γ_κ L_κ dW_κ − (γ_κ/2) L_κ†L_κ dt)] |ψ⟩
/// in units with ħ = 1.
#[derive(Debug, Clone)]
pub struct SdeSpec {
    dim: usize,
    hamiltonian: Vec<C64>,
    noise_terms: Vec<NoiseTerm>,
}

impl SdeSpec {
    pub fn new(
        dim: usize,
        hamiltonian: Vec<C64>,
        noise_terms: Vec<NoiseTerm>,
    ) -> Result<Self, StochasticError> {
        if hamiltonian.len() != dim * dim {
            return Err(StochasticError::BadOperatorSize {
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
            return Err(StochasticError::NonHermitianHamiltonian(herm));
        }
        for term in &noise_terms {
            if term.operator.len() != dim * dim {
                return Err(StochasticError::BadOperatorSize {
                    got: term.operator.len(),
                    dim,
                });
            }
            if term.gamma < 0.0 {
                return Err(StochasticError::NegativeGamma(term.gamma));
            }
        }
        Ok(Self {
            dim,
            hamiltonian,
            noise_terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_terms(&self) -> &[NoiseTerm] {
        &self.noise_terms
    }

    /// Largest coupling constant, used for default step-size selection.
    pub fn max_gamma(&self) -> f64 {
        self.noise_terms.iter().map(|t| t.gamma).fold(0.0, f64::max)
    }
}

fn matvec(m: &[C64], v: &[C64], dim: usize, out: &mut [C64]) {
    for r in 0..dim {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..dim {
            acc += m[r * dim + c] * v[c];
        }
        out[r] = acc;
    }
}

/// Precompiled Euler–Maruyama stepper for one SDE spec over one grid: the
/// drift and diffusion operators are assembled once and reused across
/// trajectories, which matters in large ensembles.
pub struct SdePropagator {
    dim: usize,
    n_steps: usize,
    sqrt_dt: f64,
    n_terms: usize,
    /// D = −iH·dt − Σ_κ (γ_κ/2) L_κ†L_κ·dt.
    drift: Vec<C64>,
    /// B_κ = i√γ_κ L_κ, concatenated.
    diffusion: Vec<Vec<C64>>,
}

impl SdePropagator {
    pub fn new(spec: &SdeSpec, grid: &TimeGrid) -> Self {
        let dim = spec.dim;
        let dt = grid.dt();
        let mut drift = vec![C64::new(0.0, 0.0); dim * dim];
        let minus_i_dt = C64::new(0.0, -dt);
        for (d, h) in drift.iter_mut().zip(&spec.hamiltonian) {
            *d = minus_i_dt * h;
        }
        for term in &spec.noise_terms {
            let w = -0.5 * term.gamma * dt;
            for r in 0..dim {
                for c in 0..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..dim {
                        acc += term.operator[k * dim + r].conj() * term.operator[k * dim + c];
                    }
                    drift[r * dim + c] += w * acc;
                }
            }
        }
        let diffusion: Vec<Vec<C64>> = spec
            .noise_terms
            .iter()
            .map(|term| {
                let f = C64::new(0.0, term.gamma.sqrt());
                term.operator.iter().map(|&x| f * x).collect()
            })
            .collect();
        Self {
            dim,
            n_steps: grid.n_steps,
            sqrt_dt: dt.sqrt(),
            n_terms: spec.noise_terms.len(),
            drift,
            diffusion,
        }
    }

    /// Advance one or more column vectors through the grid, all sharing the
    /// same noise realization. `counter_base` offsets the Wiener counters so
    /// disjoint intervals sampled under one key stay independent.
    pub fn propagate(
        &self,
        columns: &mut [Vec<C64>],
        keys: &[StreamKey],
        counter_base: u64,
    ) -> Result<(), StochasticError> {
        if keys.len() != self.n_terms {
            return Err(StochasticError::KeyCountMismatch {
                keys: keys.len(),
                terms: self.n_terms,
            });
        }
        let dim = self.dim;
        for col in columns.iter() {
            if col.len() != dim {
                return Err(StochasticError::StateDimMismatch {
                    state: col.len(),
                    dim,
                });
            }
        }
        let mut scratch = vec![C64::new(0.0, 0.0); dim];
        let mut delta = vec![C64::new(0.0, 0.0); dim];
        let mut dws = vec![0.0f64; self.n_terms];
        for step in 0..self.n_steps {
            let ctr = counter_base.wrapping_add(step as u64);
            for (dw, k) in dws.iter_mut().zip(keys) {
                *dw = self.sqrt_dt * k.normal(domain::WIENER, ctr);
            }
            for col in columns.iter_mut() {
                matvec(&self.drift, col, dim, &mut delta);
                for (b, &dw) in self.diffusion.iter().zip(&dws) {
                    matvec(b, col, dim, &mut scratch);
                    for (d, s) in delta.iter_mut().zip(&scratch) {
                        *d += dw * s;
                    }
                }
                for (x, d) in col.iter_mut().zip(&delta) {
                    *x += d;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn euler_maruyama_columns(
    spec: &SdeSpec,
    columns: &mut [Vec<C64>],
    grid: &TimeGrid,
    keys: &[StreamKey],
    counter_base: u64,
) -> Result<(), StochasticError> {
    SdePropagator::new(spec, grid).propagate(columns, keys, counter_base)
}

/// Euler–Maruyama integration of the linear SDE from `psi0` over `grid`,
/// one stream key per noise term. The result is left unnormalized.
pub fn integrate_sde(
    spec: &SdeSpec,
    psi0: &StateVector,
    grid: &TimeGrid,
    keys: &[StreamKey],
) -> Result<StateVector, StochasticError> {
    if psi0.dim() != spec.dim {
        return Err(StochasticError::StateDimMismatch {
            state: psi0.dim(),
            dim: spec.dim,
        });
    }
    let mut columns = vec![psi0.amplitudes().to_vec()];
    euler_maruyama_columns(spec, &mut columns, grid, keys, 0)?;
    let amps = columns.pop().expect("one column");
    Ok(StateVector::from_amplitudes(psi0.n_qubits(), amps).expect("dims preserved"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(traj: u64) -> StreamKey {
        StreamKey::new(42, traj, 0, 0)
    }

    #[test]
    fn wiener_zero_dt_is_zero() {
        assert_eq!(sample_wiener_increment(&key(0), 7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn wiener_negative_dt_errors() {
        assert!(sample_wiener_increment(&key(0), 0, -1.0).is_err());
    }

    #[test]
    fn wiener_is_deterministic() {
        let a = sample_wiener_increment(&key(3), 11, 0.5).unwrap();
        let b = sample_wiener_increment(&key(3), 11, 0.5).unwrap();
        assert_eq!(a, b);
        let c = sample_wiener_increment(&key(3), 12, 0.5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn wiener_moments_match_normal_law() {
        // 10^6 draws at dt = 0.5: mean within 0.003 (≈3σ), variance within 0.005.
        let n = 1_000_000u64;
        let k = key(0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let w = sample_wiener_increment(&k, i, 0.5).unwrap();
            sum += w;
            sumsq += w * w;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.003, "mean {mean}");
        assert!((var - 0.5).abs() < 0.005, "var {var}");
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let ka = StreamKey::new(42, 0, 0, 0);
        let kb = StreamKey::new(42, 0, 0, 1);
        let n = 100_000u64;
        let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let a = ka.normal(domain::WIENER, i);
            let b = kb.normal(domain::WIENER, i);
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        let corr = sab / (saa.sqrt() * sbb.sqrt());
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn disjoint_ranges_of_one_stream_are_uncorrelated() {
        let k = key(9);
        let n = 100_000u64;
        let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let a = k.normal(domain::WIENER, i);
            let b = k.normal(domain::WIENER, i + n);
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        let corr = sab / (saa.sqrt() * sbb.sqrt());
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn ito_integral_edge_cases() {
        assert_eq!(
            sample_ito_exponential_integral(&key(0), 0.7, 1.0, 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            sample_ito_exponential_integral(&key(0), 0.0, 0.0, 5.0).unwrap(),
            0.0
        );
        assert!(sample_ito_exponential_integral(&key(0), 0.7, 1.0, 0.5).is_err());
        assert!(sample_ito_exponential_integral(&key(0), -0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn ito_integral_variance_matches_isometry() {
        // γ(t−t0) = 1 ⇒ Var = 1 − e^{-1} ≈ 0.6321, tested at 3σ over 10^6 draws.
        let n = 1_000_000u64;
        let mut sumsq = 0.0;
        for traj in 0..n {
            let k = key(traj);
            let phi = sample_ito_exponential_integral(&k, 1.0, 0.0, 1.0).unwrap();
            sumsq += phi * phi;
        }
        let var = sumsq / n as f64;
        let expect = 1.0 - (-1.0f64).exp();
        // Var estimator SD for a Gaussian is var·√(2/n).
        let sigma = expect * (2.0 / n as f64).sqrt();
        assert!(
            (var - expect).abs() < 3.0 * sigma + 1e-4,
            "var {var} vs {expect}"
        );
    }

    #[test]
    fn ito_integral_matches_path_discretized_oracle() {
        // Brute-force Riemann–Itô sum over a fine grid as an independent
        // route to the same variance.
        let gamma = 0.8f64;
        let (t0, t1) = (0.3, 1.7);
        let n_paths = 20_000u64;
        let n_steps = 400u64;
        let dt = (t1 - t0) / n_steps as f64;
        let mut sumsq = 0.0;
        for traj in 0..n_paths {
            let k = StreamKey::new(7, traj, 0, 0);
            let mut phi = 0.0;
            for s in 0..n_steps {
                let tau = s as f64 * dt;
                let dw = sample_wiener_increment(&k, s, dt).unwrap();
                phi += gamma.sqrt() * (-0.5 * gamma * tau).exp() * dw;
            }
            sumsq += phi * phi;
        }
        let var = sumsq / n_paths as f64;
        let expect = 1.0 - (-gamma * (t1 - t0)).exp();
        let sigma = expect * (2.0 / n_paths as f64).sqrt();
        assert!(
            (var - expect).abs() < 3.0 * sigma + 2e-3,
            "var {var} vs {expect}"
        );
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(1.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = TimeGrid::new(0.0, 2.0, 100).unwrap();
        assert!((g.dt() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn sde_spec_validation() {
        let sx = vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let not_herm = vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.0),
        ];
        assert!(SdeSpec::new(2, not_herm, vec![]).is_err());
        assert!(SdeSpec::new(
            2,
            sx.clone(),
            vec![NoiseTerm {
                operator: sx,
                gamma: -1.0
            }]
        )
        .is_err());
    }

    #[test]
    fn sde_trivial_spec_is_identity() {
        let zero_h = vec![C64::new(0.0, 0.0); 4];
        let spec = SdeSpec::new(2, zero_h, vec![]).unwrap();
        let psi0 = StateVector::zero_state(1);
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let out = integrate_sde(&spec, &psi0, &grid, &[]).unwrap();
        assert_eq!(out, psi0);
    }

    #[test]
    fn sde_determinism_is_bitwise() {
        let sx = vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let spec = SdeSpec::new(
            2,
            vec![C64::new(0.0, 0.0); 4],
            vec![NoiseTerm {
                operator: sx,
                gamma: 0.3,
            }],
        )
        .unwrap();
        let psi0 = StateVector::zero_state(1);
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let k = [StreamKey::new(5, 17, 2, 0)];
        let a = integrate_sde(&spec, &psi0, &grid, &k).unwrap();
        let b = integrate_sde(&spec, &psi0, &grid, &k).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sde_key_count_mismatch_errors() {
        let sx = vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let spec = SdeSpec::new(
            2,
            vec![C64::new(0.0, 0.0); 4],
            vec![NoiseTerm {
                operator: sx,
                gamma: 0.3,
            }],
        )
        .unwrap();
        let psi0 = StateVector::zero_state(1);
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert!(matches!(
            integrate_sde(&spec, &psi0, &grid, &[]),
            Err(StochasticError::KeyCountMismatch { .. })
        ));
    }
}
