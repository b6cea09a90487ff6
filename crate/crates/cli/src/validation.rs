//! The desk-scale validation suite: every oracle-equivalence and property
//! check, each reporting its measured deviation against a pinned tolerance.
//!
//! Statistical checks are seed-dependent but gated at 3 standard errors, so
//! a seed override shifts the noise without flipping the verdicts. The
//! `printed_gad_erratum` hook swaps the generalized-amplitude-damping moment
//! table for the variant that circulates in print; the trace-preservation
//! check then fails, which is the point of the hook.

use noisegate::analytic::{
    contraction_fidelity, fidelity_chain_amplitude_damping, fidelity_chain_flip,
    fidelity_cnot_bitflip, EntangledPairCoeffs,
};
use noisegate::channels::{
    empirical_second_moments, gen_amp_damping_moments_printed, moments_from_master_solution,
    sample_amplitude_damping_gate, sample_flip_gate, second_moments, ChannelKind, ChannelSpec,
    NoiseGateSample, SecondMoments,
};
use noisegate::circuit::{
    build_cnot_scenario, build_spinchain_scenario, effective_pair_trajectory, CircuitIR,
    NoiseSegment, SpinChainParams,
};
use noisegate::lindblad::{closed_form_rho, rk4_evolve, LindbladSpec};
use noisegate::montecarlo::{
    estimate_density_matrix, estimate_fidelity, estimate_mean_norm_sq, EnsembleConfig,
};
use noisegate::qstate::{trace_distance, DensityMatrix, GateMatrix, StateVector};
use noisegate::stochastic::{
    integrate_sde, sample_ito_exponential_integral, sample_wiener_increment, NoiseTerm,
    SdePropagator, SdeSpec, StreamKey, TimeGrid,
};
use noisegate::C64;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Pass when measured ≤ threshold.
    AtMost,
    /// Pass when measured ≥ threshold (documented-violation checks).
    AtLeast,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub gate: Gate,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name,
            measured,
            threshold,
            gate: Gate::AtMost,
        }
    }

    fn at_least(name: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            name,
            measured,
            threshold,
            gate: Gate::AtLeast,
        }
    }

    pub fn passed(&self) -> bool {
        match self.gate {
            Gate::AtMost => self.measured <= self.threshold,
            Gate::AtLeast => self.measured >= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let rel = match self.gate {
            Gate::AtMost => "<=",
            Gate::AtLeast => ">=",
        };
        write!(
            f,
            "{verdict} {:<42} measured {:>12.5e} (required {rel} {:.3e})",
            self.name, self.measured, self.threshold
        )
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        writeln!(
            f,
            "{} checks, {} failed",
            self.checks.len(),
            self.failures()
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub seed: u64,
    pub printed_gad_erratum: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            seed: 0xDECA_F0FF,
            printed_gad_erratum: false,
        }
    }
}

fn normal(seed: u64, stream: u64, index: u64) -> f64 {
    sample_wiener_increment(&StreamKey::new(seed, stream, 0, 0), index, 1.0).unwrap()
}

fn random_state(seed: u64, stream: u64, n_qubits: usize) -> StateVector {
    let dim = 1usize << n_qubits;
    let amps: Vec<C64> = (0..dim)
        .map(|i| {
            C64::new(
                normal(seed, stream, 2 * i as u64),
                normal(seed, stream, 2 * i as u64 + 1),
            )
        })
        .collect();
    StateVector::from_amplitudes(n_qubits, amps).unwrap()
}

fn probe_state() -> StateVector {
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let phase = C64::new(0.4f64.cos(), 0.4f64.sin());
    StateVector::from_amplitudes(1, vec![C64::new(c, 0.0), phase * s]).unwrap()
}

fn generic_pair() -> EntangledPairCoeffs {
    EntangledPairCoeffs::new([
        C64::new(0.5, 0.1),
        C64::new(0.3, -0.2),
        C64::new(0.1, 0.6),
        C64::new(0.2, 0.2f64.sqrt()),
    ])
    .unwrap()
}

fn single_segment_circuit(channel: ChannelSpec, t_end: f64) -> CircuitIR {
    CircuitIR {
        n_qubits: 1,
        events: vec![],
        segments: vec![NoiseSegment {
            qubit: 0,
            channel,
            t_a: 0.0,
            t_b: t_end,
        }],
        t_start: 0.0,
        t_end,
    }
}

fn all_channel_specs(scale: f64) -> Vec<ChannelSpec> {
    vec![
        ChannelSpec::new(ChannelKind::BitFlip, vec![scale]).unwrap(),
        ChannelSpec::new(ChannelKind::PhaseFlip, vec![scale]).unwrap(),
        ChannelSpec::new(ChannelKind::BitPhaseFlip, vec![scale]).unwrap(),
        ChannelSpec::new(ChannelKind::AmplitudeDamping, vec![scale]).unwrap(),
        ChannelSpec::new(ChannelKind::Depolarizing, vec![scale, 0.7 * scale, 0.4 * scale])
            .unwrap(),
        ChannelSpec::new(
            ChannelKind::GeneralizedAmplitudeDamping,
            vec![scale, scale / 3.0],
        )
        .unwrap(),
    ]
}

fn moments_max_diff(a: &SecondMoments, b: &SecondMoments) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    worst = worst.max((a.get(i, j, k, l) - b.get(i, j, k, l)).norm());
                }
            }
        }
    }
    worst
}

fn check_gate_linearity(seed: u64) -> Check {
    let mut worst = 0.0f64;
    for trial in 0..40u64 {
        let u = random_state(seed, 10 + trial, 3);
        let v = random_state(seed, 100 + trial, 3);
        let g = GateMatrix::from_2x2([
            [
                C64::new(normal(seed, 200 + trial, 0), normal(seed, 200 + trial, 1)),
                C64::new(normal(seed, 200 + trial, 2), normal(seed, 200 + trial, 3)),
            ],
            [
                C64::new(normal(seed, 200 + trial, 4), normal(seed, 200 + trial, 5)),
                C64::new(normal(seed, 200 + trial, 6), normal(seed, 200 + trial, 7)),
            ],
        ]);
        let alpha = C64::new(0.6, -0.3);
        let beta = C64::new(-0.2, 0.8);
        let target = (trial % 3) as usize;
        let mut combo = StateVector::from_amplitudes(
            3,
            u.amplitudes()
                .iter()
                .zip(v.amplitudes())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        combo.apply_one_qubit_gate(&g, target).unwrap();
        let mut gu = u.clone();
        gu.apply_one_qubit_gate(&g, target).unwrap();
        let mut gv = v.clone();
        gv.apply_one_qubit_gate(&g, target).unwrap();
        for i in 0..combo.dim() {
            let expect = alpha * gu.amplitudes()[i] + beta * gv.amplitudes()[i];
            worst = worst.max((combo.amplitudes()[i] - expect).norm());
        }
    }
    Check::at_most("qstate/gate-linearity", worst, 1e-11)
}

fn check_unitary_norm(seed: u64) -> Check {
    let mut worst = 0.0f64;
    for trial in 0..40u64 {
        let psi = random_state(seed, 300 + trial, 3);
        let theta = normal(seed, 400 + trial, 0);
        let phi = normal(seed, 400 + trial, 1);
        let (c, s) = (theta.cos(), theta.sin());
        let eip = C64::new(phi.cos(), phi.sin());
        let u = GateMatrix::from_2x2([
            [C64::new(c, 0.0), eip * s],
            [-eip.conj() * s, C64::new(c, 0.0)],
        ]);
        let before = psi.norm_sq();
        let mut after = psi.clone();
        after.apply_one_qubit_gate(&u, (trial % 3) as usize).unwrap();
        worst = worst.max((after.norm_sq() - before).abs() / (1.0 + before));
    }
    Check::at_most("qstate/unitary-norm-preservation", worst, 1e-12)
}

fn check_partial_trace(seed: u64) -> Check {
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let psi = random_state(seed, 500 + trial, 3);
        let dm = DensityMatrix::from_pure(&psi);
        let full = dm.partial_trace(&[0, 1, 2]).unwrap();
        worst = worst.max(full.max_abs_diff(&dm));
        for keep in [vec![0], vec![1, 2], vec![0, 2]] {
            let red = dm.partial_trace(&keep).unwrap();
            worst = worst.max((red.trace() - dm.trace()).norm() / (1.0 + dm.trace().norm()));
        }
    }
    Check::at_most("qstate/partial-trace-identities", worst, 1e-12)
}

fn check_wiener_moments(seed: u64) -> (Check, Check) {
    let k = StreamKey::new(seed, 0, 7, 0);
    let n = 1_000_000u64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for i in 0..n {
        let w = sample_wiener_increment(&k, i, 0.5).unwrap();
        sum += w;
        sumsq += w * w;
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    (
        Check::at_most("stochastic/wiener-mean", mean.abs(), 0.003),
        Check::at_most("stochastic/wiener-variance", (var - 0.5).abs(), 0.005),
    )
}

fn check_stream_independence(seed: u64) -> Check {
    let ka = StreamKey::new(seed, 1, 0, 0);
    let kb = StreamKey::new(seed, 1, 0, 1);
    let n = 100_000u64;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let a = sample_wiener_increment(&ka, i, 1.0).unwrap();
        let b = sample_wiener_increment(&kb, i, 1.0).unwrap();
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    let corr = (sab / (saa.sqrt() * sbb.sqrt())).abs();
    Check::at_most("stochastic/stream-independence", corr, 0.01)
}

fn check_ito_variance(seed: u64) -> Check {
    let n = 300_000u64;
    let sumsq: f64 = (0..n)
        .into_par_iter()
        .map(|traj| {
            let k = StreamKey::new(seed, traj, 0, 0);
            let phi = sample_ito_exponential_integral(&k, 1.0, 0.0, 1.0).unwrap();
            phi * phi
        })
        .sum();
    let var = sumsq / n as f64;
    let expect = 1.0 - (-1.0f64).exp();
    let sigma = expect * (2.0 / n as f64).sqrt();
    Check::at_most(
        "stochastic/ito-integral-variance",
        (var - expect).abs() / (3.0 * sigma + 1e-4),
        1.0,
    )
}

fn check_sde_determinism(seed: u64) -> Check {
    let spec = SdeSpec::new(
        2,
        vec![C64::new(0.0, 0.0); 4],
        vec![NoiseTerm {
            operator: GateMatrix::pauli_x().entries().to_vec(),
            gamma: 0.3,
        }],
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
    let keys = [StreamKey::new(seed, 17, 2, 0)];
    let psi0 = StateVector::zero_state(1);
    let a = integrate_sde(&spec, &psi0, &grid, &keys).unwrap();
    let b = integrate_sde(&spec, &psi0, &grid, &keys).unwrap();
    let diff = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Check::at_most("stochastic/sde-bitwise-determinism", diff, 0.0)
}

fn check_samplers_vs_tables(seed: u64) -> Vec<Check> {
    let cases = [
        (ChannelKind::BitFlip, 0.1, 1.0, "channels/sampler-table-bitflip"),
        (ChannelKind::PhaseFlip, 0.25, 1.2, "channels/sampler-table-phaseflip"),
        (
            ChannelKind::BitPhaseFlip,
            0.4,
            0.6,
            "channels/sampler-table-bitphaseflip",
        ),
        (
            ChannelKind::AmplitudeDamping,
            0.8,
            1.25,
            "channels/sampler-table-amplitudedamping",
        ),
    ];
    cases
        .iter()
        .map(|&(kind, gamma, duration, name)| {
            let samples: Vec<NoiseGateSample> = (0..30_000u64)
                .map(|traj| {
                    let key = StreamKey::new(seed ^ 0xABCD, traj, 0, 0);
                    match kind {
                        ChannelKind::AmplitudeDamping => {
                            sample_amplitude_damping_gate(gamma, &key, 0.0, duration).unwrap()
                        }
                        _ => sample_flip_gate(kind, gamma, &key, 0.0, duration).unwrap(),
                    }
                })
                .collect();
            let (mean, se) = empirical_second_moments(&samples);
            let table =
                second_moments(&ChannelSpec::new(kind, vec![gamma]).unwrap(), duration).unwrap();
            let mut worst = 0.0f64;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            let m = mean.get(i, j, k, l);
                            let t = table.get(i, j, k, l);
                            let s = se.get(i, j, k, l);
                            worst = worst
                                .max((m.re - t.re).abs() / (3.0 * s.re + 1e-6))
                                .max((m.im - t.im).abs() / (3.0 * s.im + 1e-6));
                        }
                    }
                }
            }
            Check::at_most(name, worst, 1.0)
        })
        .collect()
}

fn check_trace_identity(printed_gad: bool) -> Check {
    let mut worst = 0.0f64;
    for spec in all_channel_specs(0.5) {
        for t in [0.0, 0.4, 1.0, 2.0] {
            let sm = if printed_gad && spec.kind == ChannelKind::GeneralizedAmplitudeDamping {
                gen_amp_damping_moments_printed(spec.gammas[0], spec.gammas[1], t)
            } else {
                second_moments(&spec, t).unwrap()
            };
            worst = worst.max(sm.trace_identity_residual());
            worst = worst.max(sm.hermitian_pairing_residual());
        }
    }
    Check::at_most("channels/moment-trace-identity", worst, 1e-10)
}

fn check_printed_erratum_margin() -> Check {
    let sm = gen_amp_damping_moments_printed(0.5, 0.5, 1.0);
    Check::at_least(
        "channels/printed-gad-violation-margin",
        sm.trace_identity_residual(),
        0.1,
    )
}

fn check_semigroup() -> Check {
    let mut worst = 0.0f64;
    for (kind, gammas) in [
        (ChannelKind::AmplitudeDamping, vec![0.37]),
        (ChannelKind::GeneralizedAmplitudeDamping, vec![0.37, 0.11]),
    ] {
        let spec = ChannelSpec::new(kind, gammas).unwrap();
        let first = second_moments(&spec, 0.6).unwrap();
        let second = second_moments(&spec, 0.9).unwrap();
        let direct = second_moments(&spec, 1.5).unwrap();
        worst = worst.max(moments_max_diff(&first.compose(&second), &direct));
    }
    Check::at_most("channels/semigroup-composition", worst, 1e-10)
}

fn basis_images<F: Fn(&DensityMatrix) -> DensityMatrix>(propagate: F) -> [DensityMatrix; 4] {
    let mut images = Vec::new();
    for i in 0..2 {
        for k in 0..2 {
            let mut dm = DensityMatrix::zeros(1);
            dm.set_entry(i, k, C64::new(1.0, 0.0));
            images.push(propagate(&dm));
        }
    }
    images.try_into().unwrap()
}

fn check_depolarizing_extraction() -> Check {
    let spec = ChannelSpec::new(ChannelKind::Depolarizing, vec![0.12, 0.31, 0.07]).unwrap();
    let images = basis_images(|dm| closed_form_rho(&spec, dm, 0.9).unwrap());
    let extracted = moments_from_master_solution(&images).unwrap();
    let table = second_moments(&spec, 0.9).unwrap();
    Check::at_most(
        "channels/depolarizing-extraction",
        moments_max_diff(&extracted, &table),
        1e-10,
    )
}

fn check_gad_rk4_extraction() -> Check {
    let spec =
        ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.6, 0.4]).unwrap();
    let lspec = LindbladSpec::from_channel(&spec).unwrap();
    let images = basis_images(|dm| rk4_evolve(&lspec, dm, 1.0, 1e-3).unwrap());
    let extracted = moments_from_master_solution(&images).unwrap();
    let table = second_moments(&spec, 1.0).unwrap();
    Check::at_most(
        "channels/gad-rk4-extraction-corrected",
        moments_max_diff(&extracted, &table),
        1e-7,
    )
}

fn check_closed_form_vs_rk4(seed: u64) -> Check {
    let specs = [
        ChannelSpec::new(ChannelKind::Depolarizing, vec![0.25, 0.1, 0.4]).unwrap(),
        ChannelSpec::new(ChannelKind::GeneralizedAmplitudeDamping, vec![0.5, 0.2]).unwrap(),
    ];
    let mut worst = 0.0f64;
    for spec in &specs {
        let lspec = LindbladSpec::from_channel(spec).unwrap();
        for trial in 0..100u64 {
            let psi = random_state(seed, 600 + trial, 1);
            let mut rho0 = DensityMatrix::from_pure(&psi);
            rho0.scale(1.0 / rho0.trace().re.max(1e-9));
            let t = 0.02 + 1.98 * (trial as f64 / 99.0);
            let exact = closed_form_rho(spec, &rho0, t).unwrap();
            let rk4 = rk4_evolve(&lspec, &rho0, t, lspec.default_dt(t)).unwrap();
            worst = worst.max(exact.max_abs_diff(&rk4));
        }
    }
    Check::at_most("lindblad/closed-form-vs-rk4", worst, 1e-7)
}

fn check_unraveling(seed: u64) -> Vec<Check> {
    let names = [
        "unraveling/bitflip",
        "unraveling/phaseflip",
        "unraveling/bitphaseflip",
        "unraveling/amplitudedamping",
        "unraveling/depolarizing",
        "unraveling/genampdamping",
    ];
    let psi0 = probe_state();
    let rho0 = DensityMatrix::from_pure(&psi0);
    all_channel_specs(0.5)
        .into_iter()
        .zip(names)
        .map(|(spec, name)| {
            let mut cfg = EnsembleConfig::new(20_000, seed ^ 0x5151);
            cfg.dt = 0.005 / spec.gammas.iter().cloned().fold(0.1, f64::max);
            let circuit = single_segment_circuit(spec.clone(), 1.0);
            let est = estimate_density_matrix(&circuit, &psi0, &[0], &cfg).unwrap();
            let lspec = LindbladSpec::from_channel(&spec).unwrap();
            let reference = rk4_evolve(&lspec, &rho0, 1.0, lspec.default_dt(1.0)).unwrap();
            let dist = trace_distance(&est.mean, &reference).unwrap();
            let gate = 3.0 * est.frobenius_std_error() + 1e-6;
            Check::at_most(name, dist / gate, 1.0)
        })
        .collect()
}

fn check_cnot_vs_formula(seed: u64) -> Check {
    let (g1, g2, t) = (0.1, 0.1, 1.0);
    let circuit = build_cnot_scenario(g1, g2, ChannelKind::BitFlip, 0.0, t, 2.0 * t).unwrap();
    let input = StateVector::zero_state(2);
    let cfg = EnsembleConfig::new(20_000, seed ^ 0xC407);
    let est = estimate_fidelity(&circuit, &input, &input, &[0, 1], &cfg).unwrap();
    let expect = fidelity_cnot_bitflip(g1, g2, (t, t)).unwrap();
    Check::at_most(
        "circuit/cnot-vs-formula",
        (est.value - expect).abs() / (3.0 * est.std_error + 1e-9),
        1.0,
    )
}

fn check_chain_formulas(seed: u64) -> Vec<Check> {
    let bell = EntangledPairCoeffs::bell();
    let mut checks = Vec::new();

    let params = SpinChainParams::uniform(4, ChannelKind::AmplitudeDamping, vec![0.2], bell.amplitudes());
    let scenario = build_spinchain_scenario(&params).unwrap();
    let cfg = EnsembleConfig::new(20_000, seed ^ 0xA11A);
    let est = estimate_fidelity(
        &scenario.circuit,
        &scenario.input,
        &scenario.target_pair,
        &[0, 4],
        &cfg,
    )
    .unwrap();
    let expect = fidelity_chain_amplitude_damping(&bell, 0.8).unwrap();
    checks.push(Check::at_most(
        "circuit/chain-vs-f-amda",
        (est.value - expect).abs() / (3.0 * est.std_error + 1e-9),
        1.0,
    ));

    for (kind, name) in [
        (ChannelKind::BitFlip, "circuit/chain-vs-f-bitflip"),
        (ChannelKind::PhaseFlip, "circuit/chain-vs-f-phaseflip"),
        (ChannelKind::BitPhaseFlip, "circuit/chain-vs-f-bitphaseflip"),
    ] {
        let params = SpinChainParams::uniform(3, kind, vec![0.15], bell.amplitudes());
        let scenario = build_spinchain_scenario(&params).unwrap();
        let cfg = EnsembleConfig::new(20_000, seed ^ kind as u64);
        let est = estimate_fidelity(
            &scenario.circuit,
            &scenario.input,
            &scenario.target_pair,
            &[0, 3],
            &cfg,
        )
        .unwrap();
        let expect = fidelity_chain_flip(kind, &bell, 0.45).unwrap();
        checks.push(Check::at_most(
            name,
            (est.value - expect).abs() / (3.0 * est.std_error + 1e-9),
            1.0,
        ));
    }
    checks
}

fn check_independence_correlations(seed: u64) -> Check {
    let ch = ChannelSpec::new(ChannelKind::BitFlip, vec![0.5]).unwrap();
    let n = 10_000u64;
    let mut cq = (0.0, 0.0, 0.0);
    let mut ci = (0.0, 0.0, 0.0);
    for traj in 0..n {
        let a = noisegate::circuit::sample_segment_gate(&ch, 0, 0.0, 1.0, seed, traj, 0.01)
            .unwrap()
            .matrix
            .entry(0, 1)
            .im;
        let b = noisegate::circuit::sample_segment_gate(&ch, 1, 0.0, 1.0, seed, traj, 0.01)
            .unwrap()
            .matrix
            .entry(0, 1)
            .im;
        let c = noisegate::circuit::sample_segment_gate(&ch, 0, 1.0, 2.0, seed, traj, 0.01)
            .unwrap()
            .matrix
            .entry(0, 1)
            .im;
        cq.0 += a * b;
        cq.1 += a * a;
        cq.2 += b * b;
        ci.0 += a * c;
        ci.1 += a * a;
        ci.2 += c * c;
    }
    let rq = (cq.0 / (cq.1.sqrt() * cq.2.sqrt())).abs();
    let ri = (ci.0 / (ci.1.sqrt() * ci.2.sqrt())).abs();
    Check::at_most("circuit/noise-independence", rq.max(ri), 0.03)
}

fn check_effective_gate(seed: u64, n: usize) -> Check {
    let mut params =
        SpinChainParams::uniform(n, ChannelKind::AmplitudeDamping, vec![0.25], EntangledPairCoeffs::bell().amplitudes());
    params.qubit0_noise = true;
    let scenario = build_spinchain_scenario(&params).unwrap();
    let n_traj = 20_000usize;
    let cfg = EnsembleConfig::new(n_traj, seed ^ 0xEFFE);
    let full = estimate_density_matrix(&scenario.circuit, &scenario.input, &[0, n], &cfg).unwrap();

    let mut reduced_acc = DensityMatrix::zeros(2);
    let mut sumsq = vec![0.0f64; 16];
    for traj in 0..n_traj as u64 {
        let psi = effective_pair_trajectory(&params, seed ^ 0xFEEF, traj, 0.01).unwrap();
        reduced_acc.accumulate_outer(&psi, 1.0).unwrap();
        for (i, z) in DensityMatrix::from_pure(&psi).entries().iter().enumerate() {
            sumsq[i] += z.norm_sqr();
        }
    }
    reduced_acc.scale(1.0 / n_traj as f64);
    let nf = n_traj as f64;
    let se_eff: f64 = reduced_acc
        .entries()
        .iter()
        .zip(&sumsq)
        .map(|(m, &sq)| (sq / nf - m.norm_sqr()).max(0.0) / nf)
        .sum::<f64>()
        .sqrt();
    let dist = trace_distance(&full.mean, &reduced_acc).unwrap();
    let gate = 3.0 * (full.frobenius_std_error().powi(2) + se_eff.powi(2)).sqrt() + 1e-6;
    Check::at_most("circuit/effective-gate-equivalence", dist / gate, 1.0)
}

fn check_mean_trace(seed: u64) -> Check {
    let mut worst = 0.0f64;
    let circuit = build_cnot_scenario(0.4, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
    let est = estimate_mean_norm_sq(
        &circuit,
        &StateVector::zero_state(2),
        &EnsembleConfig::new(20_000, seed ^ 0x7777),
    )
    .unwrap();
    worst = worst.max((est.value - 1.0).abs() / (3.0 * est.std_error + 1e-9));

    for spec in all_channel_specs(0.4) {
        let mut cfg = EnsembleConfig::new(10_000, seed ^ 0x8888);
        cfg.dt = 0.005 / 0.4;
        let circuit = single_segment_circuit(spec, 1.0);
        let est = estimate_mean_norm_sq(&circuit, &probe_state(), &cfg).unwrap();
        // SDE-sampled kinds carry an O(dt) weak bias on the mean norm.
        worst = worst.max((est.value - 1.0).abs() / (3.0 * est.std_error + 2e-3));
    }
    Check::at_most("montecarlo/mean-trace-preservation", worst, 1.0)
}

fn check_worker_determinism(seed: u64) -> Check {
    let circuit = build_cnot_scenario(0.2, 0.3, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
    let input = StateVector::zero_state(2);
    let mut cfg = EnsembleConfig::new(600, seed ^ 0x9999);
    cfg.n_workers_hint = 1;
    let a = estimate_density_matrix(&circuit, &input, &[0], &cfg).unwrap();
    cfg.n_workers_hint = 4;
    let b = estimate_density_matrix(&circuit, &input, &[0], &cfg).unwrap();
    let diff = a
        .mean
        .entries()
        .iter()
        .zip(b.mean.entries())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Check::at_most("montecarlo/worker-count-determinism", diff, 0.0)
}

fn check_contraction_identity() -> Check {
    let pair = generic_pair();
    let mut worst = 0.0f64;
    for (kind, gammas) in [
        (ChannelKind::BitFlip, vec![0.3]),
        (ChannelKind::PhaseFlip, vec![0.3]),
        (ChannelKind::BitPhaseFlip, vec![0.3]),
        (ChannelKind::AmplitudeDamping, vec![0.3]),
    ] {
        let spec = ChannelSpec::new(kind, gammas).unwrap();
        let sm = second_moments(&spec, 1.7).unwrap();
        let f_contr = contraction_fidelity(&pair, &sm);
        let f_formula = match kind {
            ChannelKind::AmplitudeDamping => {
                fidelity_chain_amplitude_damping(&pair, 0.3 * 1.7).unwrap()
            }
            _ => fidelity_chain_flip(kind, &pair, 0.3 * 1.7).unwrap(),
        };
        worst = worst.max((f_contr - f_formula).abs());
    }
    Check::at_most("analytic/moment-contraction-identity", worst, 1e-10)
}

/// Weak-convergence ratio for the bit-flip spec: ensemble moment error at dt
/// versus dt/2 after quadratic subtraction of the Monte Carlo noise.
pub fn weak_convergence_ratio(seed: u64, n_traj: u64) -> f64 {
    let gamma = 0.5;
    let spec = SdeSpec::new(
        2,
        vec![C64::new(0.0, 0.0); 4],
        vec![NoiseTerm {
            operator: GateMatrix::pauli_x().entries().to_vec(),
            gamma,
        }],
    )
    .unwrap();
    let exact = 0.5 * (1.0 + (-2.0 * gamma).exp());
    let arm = |n_steps: usize, salt: u64| -> (f64, f64) {
        let grid = TimeGrid::new(0.0, 1.0, n_steps).unwrap();
        let prop = SdePropagator::new(&spec, &grid);
        let (sum, sumsq) = (0..n_traj)
            .into_par_iter()
            .map(|traj| {
                let keys = [StreamKey::new(seed ^ salt, traj, 0, 0)];
                let mut cols = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];
                prop.propagate(&mut cols, &keys, 0).unwrap();
                let f = cols[0][0].norm_sqr();
                (f, f * f)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = n_traj as f64;
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    };
    let (mean_c, se_c) = arm(5, 0x11);
    let (mean_f, se_f) = arm(10, 0x22);
    let err = |mean: f64, se: f64| -> f64 {
        let raw = (mean - exact).abs();
        (raw * raw - se * se).max(1e-30).sqrt()
    };
    err(mean_c, se_c) / err(mean_f, se_f)
}

fn check_weak_convergence(seed: u64) -> Check {
    let ratio = weak_convergence_ratio(seed, 4_000_000);
    Check::at_most("stochastic/weak-convergence-order-1", (ratio - 2.0).abs(), 0.5)
}

fn check_output_stability(seed: u64) -> Check {
    use crate::manifest::{RunManifest, ScenarioKind, SweepAxis};
    let ch = ChannelSpec::new(ChannelKind::BitFlip, vec![0.2]).unwrap();
    let mut m = RunManifest::new(ScenarioKind::Cnot, ch);
    m.ensemble = EnsembleConfig::new(500, seed);
    m.sweeps = vec![SweepAxis::new("T", 0.0, 1.0, 3)];
    let a = crate::runner::run_scenario(&m).unwrap();
    let b = crate::runner::run_scenario(&m).unwrap();
    let same_csv = a.table.to_csv() == b.table.to_csv();
    let same_json = a.table.to_json() == b.table.to_json();
    Check::at_most(
        "output/byte-stability",
        if same_csv && same_json { 0.0 } else { 1.0 },
        0.0,
    )
}

pub fn run_validation(opts: &ValidationOptions) -> ValidationReport {
    let seed = opts.seed;
    let mut checks = Vec::new();
    checks.push(check_gate_linearity(seed));
    checks.push(check_unitary_norm(seed));
    checks.push(check_partial_trace(seed));
    let (wm, wv) = check_wiener_moments(seed);
    checks.push(wm);
    checks.push(wv);
    checks.push(check_stream_independence(seed));
    checks.push(check_ito_variance(seed));
    checks.push(check_sde_determinism(seed));
    checks.extend(check_samplers_vs_tables(seed));
    checks.push(check_trace_identity(opts.printed_gad_erratum));
    checks.push(check_printed_erratum_margin());
    checks.push(check_semigroup());
    checks.push(check_depolarizing_extraction());
    checks.push(check_gad_rk4_extraction());
    checks.push(check_closed_form_vs_rk4(seed));
    checks.extend(check_unraveling(seed));
    checks.push(check_cnot_vs_formula(seed));
    checks.extend(check_chain_formulas(seed));
    checks.push(check_independence_correlations(seed));
    checks.push(check_effective_gate(seed, 4));
    checks.push(check_mean_trace(seed));
    checks.push(check_worker_determinism(seed));
    checks.push(check_contraction_identity());
    checks.push(check_weak_convergence(seed));
    checks.push(check_output_stability(seed));
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validation_passes() {
        let report = run_validation(&ValidationOptions::default());
        assert!(report.all_passed(), "\n{report}");
    }

    #[test]
    fn erratum_hook_fails_trace_identity() {
        let opts = ValidationOptions {
            printed_gad_erratum: true,
            ..Default::default()
        };
        let report = run_validation(&opts);
        assert!(!report.all_passed());
        let failing: Vec<&Check> = report.checks.iter().filter(|c| !c.passed()).collect();
        assert_eq!(failing.len(), 1);
        assert_eq!(failing[0].name, "channels/moment-trace-identity");
        assert!(failing[0].measured > 0.1);
    }
}
