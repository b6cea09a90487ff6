//! Timed circuit representation and trajectory execution.
//!
//! A circuit is a set of instantaneous unitary events plus per-qubit noise
//! segments over explicit time intervals. Each trajectory samples one noise
//! gate per segment and applies everything in global time order. Segments on
//! different qubits, and segments over disjoint intervals, draw from
//! independent streams.

use crate::channels::{
    sample_amplitude_damping_gate, sample_flip_gate, sample_sde_gate, ChannelError, ChannelKind,
    ChannelSpec, NoiseGateSample,
};
use crate::qstate::{GateMatrix, QStateError, StateVector};
use crate::stochastic::{StochasticError, StreamKey};
use num_complex::Complex64 as C64;
use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("events are not sorted by time")]
    UnsortedEvents,
    #[error("time {t} outside circuit window [{t_start}, {t_end}]")]
    TimeOutOfWindow { t: f64, t_start: f64, t_end: f64 },
    #[error("non-finite time in circuit")]
    NonFiniteTime,
    #[error("noise segment with t_b = {t_b} < t_a = {t_a}")]
    ReversedSegment { t_a: f64, t_b: f64 },
    #[error("overlapping noise segments on qubit {0}")]
    OverlappingSegments(usize),
    #[error("gate expects {expected} operand(s), got {got}")]
    BadOperandCount { expected: usize, got: usize },
    #[error("duplicate operand {0}")]
    DuplicateOperand(usize),
    #[error("operand {index} out of range for {n_qubits} qubits")]
    OperandOutOfRange { index: usize, n_qubits: usize },
    #[error("input state has {got} qubits, circuit has {expected}")]
    InputQubitMismatch { got: usize, expected: usize },
    #[error("non-positive dt: {0}")]
    NonPositiveDt(f64),
    #[error("cannot compose an empty gate sequence")]
    EmptyComposition,
    #[error("scenario times must be ordered")]
    UnorderedTimes,
    #[error("spin chain needs n ≥ 2, got {0}")]
    ChainTooShort(usize),
    #[error("expected {expected} entries in {what}, got {got}")]
    BadLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("input coefficients have norm² = {0}, expected 1 within 1e-10")]
    UnnormalizedCoefficients(f64),
    #[error(transparent)]
    QState(#[from] QStateError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
}

/// Named unitary or an explicit matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Cnot,
    Swap,
    Matrix(GateMatrix),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::X | GateKind::Y | GateKind::Z | GateKind::H => 1,
            GateKind::Cnot | GateKind::Swap => 2,
            GateKind::Matrix(m) => {
                if m.dim() == 2 {
                    1
                } else {
                    2
                }
            }
        }
    }

    pub fn matrix(&self) -> GateMatrix {
        match self {
            GateKind::X => GateMatrix::pauli_x(),
            GateKind::Y => GateMatrix::pauli_y(),
            GateKind::Z => GateMatrix::pauli_z(),
            GateKind::H => GateMatrix::hadamard(),
            GateKind::Cnot => GateMatrix::cnot(),
            GateKind::Swap => GateMatrix::swap(),
            GateKind::Matrix(m) => m.clone(),
        }
    }

    fn name(&self) -> Option<&'static str> {
        match self {
            GateKind::X => Some("X"),
            GateKind::Y => Some("Y"),
            GateKind::Z => Some("Z"),
            GateKind::H => Some("H"),
            GateKind::Cnot => Some("CNOT"),
            GateKind::Swap => Some("SWAP"),
            GateKind::Matrix(_) => None,
        }
    }
}

// Wire format: named gates are bare strings ("CNOT"); explicit matrices are
// {"matrix": [[[re, im], ...], ...]} row-major.
impl Serialize for GateKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.name() {
            Some(name) => serializer.serialize_str(name),
            None => {
                let GateKind::Matrix(m) = self else { unreachable!() };
                let d = m.dim();
                let rows: Vec<Vec<[f64; 2]>> = (0..d)
                    .map(|r| (0..d).map(|c| [m.entry(r, c).re, m.entry(r, c).im]).collect())
                    .collect();
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("matrix", &rows)?;
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for GateKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct KindVisitor;

        impl<'de> Visitor<'de> for KindVisitor {
            type Value = GateKind;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a gate name or {\"matrix\": [[..]]}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<GateKind, E> {
                match v {
                    "X" => Ok(GateKind::X),
                    "Y" => Ok(GateKind::Y),
                    "Z" => Ok(GateKind::Z),
                    "H" => Ok(GateKind::H),
                    "CNOT" => Ok(GateKind::Cnot),
                    "SWAP" => Ok(GateKind::Swap),
                    other => Err(E::unknown_variant(
                        other,
                        &["X", "Y", "Z", "H", "CNOT", "SWAP"],
                    )),
                }
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<GateKind, A::Error> {
                let key: String = map
                    .next_key()?
                    .ok_or_else(|| de::Error::custom("expected a \"matrix\" key"))?;
                if key != "matrix" {
                    return Err(de::Error::unknown_field(&key, &["matrix"]));
                }
                let rows: Vec<Vec<[f64; 2]>> = map.next_value()?;
                let d = rows.len();
                if (d != 2 && d != 4) || rows.iter().any(|r| r.len() != d) {
                    return Err(de::Error::custom("matrix must be square, 2×2 or 4×4"));
                }
                let entries: Vec<C64> = rows
                    .iter()
                    .flat_map(|r| r.iter().map(|&[re, im]| C64::new(re, im)))
                    .collect();
                GateMatrix::new(d, entries)
                    .map(GateKind::Matrix)
                    .map_err(|e| de::Error::custom(e.to_string()))
            }
        }

        deserializer.deserialize_any(KindVisitor)
    }
}

/// Instantaneous unitary applied at one point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateEvent {
    #[serde(rename = "t")]
    pub time: f64,
    pub kind: GateKind,
    pub operands: Vec<usize>,
}

/// Noise of one channel acting on one qubit over (t_a, t_b).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSegment {
    pub qubit: usize,
    pub channel: ChannelSpec,
    pub t_a: f64,
    pub t_b: f64,
}

/// Timed circuit: gate events plus noise segments over [t_start, t_end].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub events: Vec<GateEvent>,
    pub segments: Vec<NoiseSegment>,
    pub t_start: f64,
    pub t_end: f64,
}

impl CircuitIR {
    pub fn validate(&self) -> Result<(), CircuitError> {
        if !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(CircuitError::NonFiniteTime);
        }
        let in_window = |t: f64| -> Result<(), CircuitError> {
            if !t.is_finite() {
                return Err(CircuitError::NonFiniteTime);
            }
            if t < self.t_start - 1e-12 || t > self.t_end + 1e-12 {
                return Err(CircuitError::TimeOutOfWindow {
                    t,
                    t_start: self.t_start,
                    t_end: self.t_end,
                });
            }
            Ok(())
        };
        let mut prev = f64::NEG_INFINITY;
        for ev in &self.events {
            in_window(ev.time)?;
            if ev.time < prev {
                return Err(CircuitError::UnsortedEvents);
            }
            prev = ev.time;
            let expected = ev.kind.arity();
            if ev.operands.len() != expected {
                return Err(CircuitError::BadOperandCount {
                    expected,
                    got: ev.operands.len(),
                });
            }
            for &q in &ev.operands {
                if q >= self.n_qubits {
                    return Err(CircuitError::OperandOutOfRange {
                        index: q,
                        n_qubits: self.n_qubits,
                    });
                }
            }
            if expected == 2 && ev.operands[0] == ev.operands[1] {
                return Err(CircuitError::DuplicateOperand(ev.operands[0]));
            }
        }
        let mut per_qubit: Vec<Vec<(f64, f64)>> = vec![Vec::new(); self.n_qubits];
        for seg in &self.segments {
            if seg.qubit >= self.n_qubits {
                return Err(CircuitError::OperandOutOfRange {
                    index: seg.qubit,
                    n_qubits: self.n_qubits,
                });
            }
            if seg.t_b < seg.t_a {
                return Err(CircuitError::ReversedSegment {
                    t_a: seg.t_a,
                    t_b: seg.t_b,
                });
            }
            in_window(seg.t_a)?;
            in_window(seg.t_b)?;
            seg.channel.validate()?;
            per_qubit[seg.qubit].push((seg.t_a, seg.t_b));
        }
        for (qubit, mut ivals) in per_qubit.into_iter().enumerate() {
            ivals.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in ivals.windows(2) {
                if w[1].0 < w[0].1 - 1e-12 {
                    return Err(CircuitError::OverlappingSegments(qubit));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Copy with every coupling constant set to zero (the noiseless circuit).
    pub fn without_noise(&self) -> CircuitIR {
        let mut c = self.clone();
        for seg in &mut c.segments {
            for g in &mut seg.channel.gammas {
                *g = 0.0;
            }
        }
        c
    }
}

/// Sample the noise gate of one segment. Closed-form samplers where they
/// exist; Euler–Maruyama basis-column integration otherwise (`dt` applies
/// only to the latter).
pub fn sample_segment_gate(
    channel: &ChannelSpec,
    qubit: usize,
    t_a: f64,
    t_b: f64,
    master_seed: u64,
    trajectory: u64,
    dt: f64,
) -> Result<NoiseGateSample, CircuitError> {
    let key = |component: u64| StreamKey::new(master_seed, trajectory, qubit as u64, component);
    let sample = match channel.kind {
        ChannelKind::BitFlip | ChannelKind::PhaseFlip | ChannelKind::BitPhaseFlip => {
            sample_flip_gate(channel.kind, channel.gammas[0], &key(0), t_a, t_b)?
        }
        ChannelKind::AmplitudeDamping => {
            sample_amplitude_damping_gate(channel.gammas[0], &key(0), t_a, t_b)?
        }
        ChannelKind::Depolarizing | ChannelKind::GeneralizedAmplitudeDamping => {
            let keys: Vec<StreamKey> = (0..channel.kind.gamma_count() as u64).map(key).collect();
            sample_sde_gate(channel, &keys, t_a, t_b, dt)?
        }
    };
    Ok(sample)
}

/// Run one trajectory: unitary events and sampled noise gates applied in
/// global time order. At equal times a segment ending there executes before
/// a gate event; events at equal times keep list order. The returned state
/// is unnormalized.
pub fn run_trajectory(
    circuit: &CircuitIR,
    input: &StateVector,
    master_seed: u64,
    trajectory: u64,
    dt: f64,
) -> Result<StateVector, CircuitError> {
    circuit.validate()?;
    if input.n_qubits() != circuit.n_qubits {
        return Err(CircuitError::InputQubitMismatch {
            got: input.n_qubits(),
            expected: circuit.n_qubits,
        });
    }
    if dt <= 0.0 {
        return Err(CircuitError::NonPositiveDt(dt));
    }

    // (time, class, list index): segment endings sort before gate events at
    // equal times; ties within a class keep list order.
    let mut actions: Vec<(f64, u8, usize)> = Vec::with_capacity(
        circuit.segments.len() + circuit.events.len(),
    );
    for (i, seg) in circuit.segments.iter().enumerate() {
        actions.push((seg.t_b, 0, i));
    }
    for (i, ev) in circuit.events.iter().enumerate() {
        actions.push((ev.time, 1, i));
    }
    actions.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut state = input.clone();
    for (_, class, idx) in actions {
        if class == 0 {
            let seg = &circuit.segments[idx];
            let sample = sample_segment_gate(
                &seg.channel,
                seg.qubit,
                seg.t_a,
                seg.t_b,
                master_seed,
                trajectory,
                dt,
            )?;
            state.apply_one_qubit_gate(&sample.matrix, seg.qubit)?;
        } else {
            let ev = &circuit.events[idx];
            let m = ev.kind.matrix();
            if m.dim() == 2 {
                state.apply_one_qubit_gate(&m, ev.operands[0])?;
            } else {
                state.apply_two_qubit_gate(&m, ev.operands[0], ev.operands[1])?;
            }
        }
    }
    Ok(state)
}

/// Collapse a time-contiguous sequence of noise gates on one qubit into the
/// single accumulated gate N̄ = N_n ⋯ N_2 N_1 (later gates multiply from the
/// left).
pub fn compose_chain_gate(segments: &[NoiseGateSample]) -> Result<NoiseGateSample, CircuitError> {
    let first = segments.first().ok_or(CircuitError::EmptyComposition)?;
    let mut matrix = first.matrix.clone();
    for s in &segments[1..] {
        matrix = s.matrix.matmul(&matrix)?;
    }
    Ok(NoiseGateSample {
        matrix,
        interval: (first.interval.0, segments.last().unwrap().interval.1),
    })
}

/// Two qubits under independent noise before and after a CNOT: segments on
/// both qubits over (t1, t2) and (t2, t3), the gate at t2 (control qubit 0).
/// `gamma1` couples qubit 0 (control), `gamma2` qubit 1 (target).
pub fn build_cnot_scenario(
    gamma1: f64,
    gamma2: f64,
    kind: ChannelKind,
    t1: f64,
    t2: f64,
    t3: f64,
) -> Result<CircuitIR, CircuitError> {
    if !(t1 <= t2 && t2 <= t3) {
        return Err(CircuitError::UnorderedTimes);
    }
    let ch = |g: f64| ChannelSpec::new(kind, vec![g]);
    let circuit = CircuitIR {
        n_qubits: 2,
        events: vec![GateEvent {
            time: t2,
            kind: GateKind::Cnot,
            operands: vec![0, 1],
        }],
        segments: vec![
            NoiseSegment {
                qubit: 0,
                channel: ch(gamma1)?,
                t_a: t1,
                t_b: t2,
            },
            NoiseSegment {
                qubit: 1,
                channel: ch(gamma2)?,
                t_a: t1,
                t_b: t2,
            },
            NoiseSegment {
                qubit: 0,
                channel: ch(gamma1)?,
                t_a: t2,
                t_b: t3,
            },
            NoiseSegment {
                qubit: 1,
                channel: ch(gamma2)?,
                t_a: t2,
                t_b: t3,
            },
        ],
        t_start: t1,
        t_end: t3,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Parameters of the entangled-pair transmission protocol: a chain of n+1
/// qubits with the pair on (0, 1), swaps at t_1 … t_(n−1) walking qubit 1's
/// state to qubit n, and per-qubit noise cut at the swap boundaries.
#[derive(Debug, Clone)]
pub struct SpinChainParams {
    pub n: usize,
    pub kind: ChannelKind,
    /// Coupling constants per qubit 0..=n; each entry has the channel's arity.
    pub couplings: Vec<Vec<f64>>,
    /// Boundary times t_0 < t_1 < … < t_n (length n+1).
    pub times: Vec<f64>,
    /// Pair coefficients a₀₀, a₀₁, a₁₀, a₁₁ (normalized).
    pub pair: [C64; 4],
    /// Bulk state over qubits 2..=n (length 2^(n−1), normalized);
    /// defaults to |0…0⟩.
    pub bulk: Option<Vec<C64>>,
    /// Include the noise gate on the stationary qubit 0. The analytic chain
    /// fidelities neglect it, so comparisons against them switch it off.
    pub qubit0_noise: bool,
}

impl SpinChainParams {
    /// Uniform couplings and unit intervals: t_k = k for k = 0..=n.
    pub fn uniform(n: usize, kind: ChannelKind, gammas: Vec<f64>, pair: [C64; 4]) -> Self {
        Self {
            n,
            kind,
            couplings: vec![gammas; n + 1],
            times: (0..=n).map(|k| k as f64).collect(),
            pair,
            bulk: None,
            qubit0_noise: false,
        }
    }

    fn validate(&self) -> Result<(), CircuitError> {
        if self.n < 2 {
            return Err(CircuitError::ChainTooShort(self.n));
        }
        if self.couplings.len() != self.n + 1 {
            return Err(CircuitError::BadLength {
                what: "couplings",
                expected: self.n + 1,
                got: self.couplings.len(),
            });
        }
        let arity = self.kind.gamma_count();
        for g in &self.couplings {
            if g.len() != arity {
                return Err(CircuitError::BadLength {
                    what: "per-qubit gammas",
                    expected: arity,
                    got: g.len(),
                });
            }
        }
        if self.times.len() != self.n + 1 {
            return Err(CircuitError::BadLength {
                what: "times",
                expected: self.n + 1,
                got: self.times.len(),
            });
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CircuitError::UnorderedTimes);
        }
        let pair_norm: f64 = self.pair.iter().map(|a| a.norm_sqr()).sum();
        if (pair_norm - 1.0).abs() > 1e-10 {
            return Err(CircuitError::UnnormalizedCoefficients(pair_norm));
        }
        if let Some(bulk) = &self.bulk {
            let expected = 1usize << (self.n - 1);
            if bulk.len() != expected {
                return Err(CircuitError::BadLength {
                    what: "bulk coefficients",
                    expected,
                    got: bulk.len(),
                });
            }
            let norm: f64 = bulk.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(CircuitError::UnnormalizedCoefficients(norm));
            }
        }
        Ok(())
    }

    pub fn pair_state(&self) -> StateVector {
        StateVector::from_amplitudes(2, self.pair.to_vec()).expect("pair has 4 amplitudes")
    }

    fn bulk_state(&self) -> StateVector {
        match &self.bulk {
            Some(b) => StateVector::from_amplitudes(self.n - 1, b.clone())
                .expect("validated length"),
            None => StateVector::zero_state(self.n - 1),
        }
    }

    pub fn input_state(&self) -> StateVector {
        self.pair_state().tensor(&self.bulk_state())
    }

    fn channel_for(&self, qubit: usize) -> Result<ChannelSpec, ChannelError> {
        ChannelSpec::new(self.kind, self.couplings[qubit].clone())
    }
}

/// A built spin-chain scenario: the circuit, its full input state, and the
/// pair state that doubles as the fidelity target on qubits (0, n).
#[derive(Debug, Clone)]
pub struct SpinChainScenario {
    pub circuit: CircuitIR,
    pub input: StateVector,
    pub target_pair: StateVector,
}

/// Build the transmission circuit of [`SpinChainParams`]. The state of qubit
/// 1 is walked to qubit n by swaps at t_1 … t_(n−1); qubit q's noise is cut
/// into segments (t_0, t_(q−1)), (t_(q−1), t_q), (t_q, t_n) matching the
/// independence structure the chain analysis relies on.
pub fn build_spinchain_scenario(
    params: &SpinChainParams,
) -> Result<SpinChainScenario, CircuitError> {
    params.validate()?;
    let n = params.n;
    let t = &params.times;
    let mut events = Vec::new();
    for k in 1..n {
        events.push(GateEvent {
            time: t[k],
            kind: GateKind::Swap,
            operands: vec![k, k + 1],
        });
    }
    let mut segments = Vec::new();
    if params.qubit0_noise {
        segments.push(NoiseSegment {
            qubit: 0,
            channel: params.channel_for(0)?,
            t_a: t[0],
            t_b: t[n],
        });
    }
    for q in 1..=n {
        let channel = params.channel_for(q)?;
        if q >= 2 {
            segments.push(NoiseSegment {
                qubit: q,
                channel: channel.clone(),
                t_a: t[0],
                t_b: t[q - 1],
            });
        }
        segments.push(NoiseSegment {
            qubit: q,
            channel: channel.clone(),
            t_a: t[q - 1],
            t_b: t[q],
        });
        if q <= n - 1 {
            segments.push(NoiseSegment {
                qubit: q,
                channel,
                t_a: t[q],
                t_b: t[n],
            });
        }
    }
    let circuit = CircuitIR {
        n_qubits: n + 1,
        events,
        segments,
        t_start: t[0],
        t_end: t[n],
    };
    circuit.validate()?;
    Ok(SpinChainScenario {
        circuit,
        input: params.input_state(),
        target_pair: params.pair_state(),
    })
}

/// One trajectory of the dimensionally reduced protocol: the transmitted
/// qubit's segments along the chain are sampled and collapsed through
/// [`compose_chain_gate`] into a single gate N̄ acting on the two-qubit pair
/// state (with qubit 0's gate alongside when enabled). Averaging outer
/// products of these states reproduces the full circuit's reduced density
/// matrix over qubits (0, n) at two-qubit cost.
pub fn effective_pair_trajectory(
    params: &SpinChainParams,
    master_seed: u64,
    trajectory: u64,
    dt: f64,
) -> Result<StateVector, CircuitError> {
    params.validate()?;
    if dt <= 0.0 {
        return Err(CircuitError::NonPositiveDt(dt));
    }
    let t = &params.times;
    let mut path = Vec::with_capacity(params.n);
    for alpha in 1..=params.n {
        let channel = params.channel_for(alpha)?;
        path.push(sample_segment_gate(
            &channel,
            alpha,
            t[alpha - 1],
            t[alpha],
            master_seed,
            trajectory,
            dt,
        )?);
    }
    let nbar = compose_chain_gate(&path)?;
    let mut state = params.pair_state();
    state.apply_one_qubit_gate(&nbar.matrix, 1)?;
    if params.qubit0_noise {
        let channel = params.channel_for(0)?;
        let n0 = sample_segment_gate(&channel, 0, t[0], t[params.n], master_seed, trajectory, dt)?;
        state.apply_one_qubit_gate(&n0.matrix, 0)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_pair() -> [C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
        ]
    }

    #[test]
    fn json_round_trip_preserves_circuit() {
        let circuit = build_cnot_scenario(0.1, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        let text = circuit.to_json();
        for field in ["n_qubits", "\"t\"", "kind", "operands", "qubit", "channel", "gammas", "t_a", "t_b"] {
            assert!(text.contains(field), "missing {field} in {text}");
        }
        let parsed = CircuitIR::from_json(&text).unwrap();
        assert_eq!(parsed, circuit);
    }

    #[test]
    fn json_explicit_matrix_round_trip() {
        let ev = GateEvent {
            time: 0.5,
            kind: GateKind::Matrix(GateMatrix::hadamard()),
            operands: vec![0],
        };
        let circuit = CircuitIR {
            n_qubits: 1,
            events: vec![ev],
            segments: vec![],
            t_start: 0.0,
            t_end: 1.0,
        };
        let parsed = CircuitIR::from_json(&circuit.to_json()).unwrap();
        assert_eq!(parsed, circuit);
    }

    #[test]
    fn validate_rejects_malformed_circuits() {
        let mut c = build_cnot_scenario(0.1, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        c.events.push(GateEvent {
            time: 0.5,
            kind: GateKind::X,
            operands: vec![0],
        });
        assert!(matches!(c.validate(), Err(CircuitError::UnsortedEvents)));

        let mut c = build_cnot_scenario(0.1, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        c.events[0].operands = vec![0];
        assert!(matches!(
            c.validate(),
            Err(CircuitError::BadOperandCount { .. })
        ));

        let mut c = build_cnot_scenario(0.1, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        c.segments[2].t_a = 0.5; // overlaps the (0,1) segment on qubit 0
        assert!(matches!(
            c.validate(),
            Err(CircuitError::OverlappingSegments(0))
        ));
    }

    #[test]
    fn noiseless_cnot_is_deterministic() {
        let circuit = build_cnot_scenario(0.0, 0.0, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        let input = StateVector::basis_state(2, 0b10);
        let out = run_trajectory(&circuit, &input, 1, 0, 0.01).unwrap();
        assert!((out.amplitudes()[0b11] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_gamma_equals_noiseless_run_bitwise() {
        let noisy = build_cnot_scenario(0.3, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        let zeroed = noisy.without_noise();
        let input = StateVector::basis_state(2, 0b01);
        let a = run_trajectory(&zeroed, &input, 7, 3, 0.01).unwrap();
        let mut expect = input.clone();
        expect
            .apply_two_qubit_gate(&GateMatrix::cnot(), 0, 1)
            .unwrap();
        assert_eq!(a, expect);
    }

    #[test]
    fn run_trajectory_is_deterministic() {
        let circuit = build_cnot_scenario(0.3, 0.2, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        let input = StateVector::zero_state(2);
        let a = run_trajectory(&circuit, &input, 11, 4, 0.01).unwrap();
        let b = run_trajectory(&circuit, &input, 11, 4, 0.01).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&circuit, &input, 11, 5, 0.01).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cnot_scenario_structure() {
        let c = build_cnot_scenario(0.1, 0.1, ChannelKind::BitFlip, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(c.segments.len(), 4);
        assert_eq!(c.events.len(), 1);
        assert!(build_cnot_scenario(0.1, 0.1, ChannelKind::BitFlip, 1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn compose_chain_gate_basics() {
        let id = NoiseGateSample {
            matrix: GateMatrix::identity(2),
            interval: (0.0, 1.0),
        };
        let composed = compose_chain_gate(&[id.clone(), id.clone()]).unwrap();
        assert_eq!(composed.matrix, GateMatrix::identity(2));
        assert_eq!(composed.interval, (0.0, 1.0));

        let single = NoiseGateSample {
            matrix: GateMatrix::pauli_x(),
            interval: (0.0, 0.5),
        };
        assert_eq!(
            compose_chain_gate(&[single.clone()]).unwrap().matrix,
            single.matrix
        );
        assert!(matches!(
            compose_chain_gate(&[]),
            Err(CircuitError::EmptyComposition)
        ));
    }

    #[test]
    fn composed_amplitude_damping_corner_is_deterministic() {
        // The (1,1) entry of the composed gate is ∏ e^{−γ_k Δ_k / 2} = e^{−Γ/2}
        // for any noise realization.
        let gammas = [0.3, 0.1, 0.5];
        let mut samples = Vec::new();
        let mut big_gamma = 0.0;
        for (k, &g) in gammas.iter().enumerate() {
            let key = StreamKey::new(5, 9, k as u64, 0);
            let (t0, t1) = (k as f64, k as f64 + 1.0);
            samples.push(
                crate::channels::sample_amplitude_damping_gate(g, &key, t0, t1).unwrap(),
            );
            big_gamma += g;
        }
        let composed = compose_chain_gate(&samples).unwrap();
        let expect = (-0.5 * big_gamma).exp();
        assert!((composed.matrix.entry(1, 1).re - expect).abs() < 1e-12);
        assert!(composed.matrix.entry(1, 0).norm() < 1e-15);
        assert!((composed.matrix.entry(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_chain_transfers_the_pair() {
        let mut params = SpinChainParams::uniform(2, ChannelKind::BitFlip, vec![0.0], bell_pair());
        params.qubit0_noise = true;
        let scenario = build_spinchain_scenario(&params).unwrap();
        let out = run_trajectory(&scenario.circuit, &scenario.input, 3, 0, 0.01).unwrap();
        // Qubits (0, 2) should hold the Bell pair, qubit 1 should hold |0⟩.
        let dm = crate::qstate::DensityMatrix::from_pure(&out);
        let red = dm.partial_trace(&[0, 2]).unwrap();
        let target = crate::qstate::DensityMatrix::from_pure(&scenario.target_pair);
        assert!(red.max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn chain_structure_counts() {
        let params = SpinChainParams::uniform(4, ChannelKind::BitFlip, vec![0.2], bell_pair());
        let scenario = build_spinchain_scenario(&params).unwrap();
        assert_eq!(scenario.circuit.n_qubits, 5);
        // Swaps at t_1..t_3.
        assert_eq!(scenario.circuit.events.len(), 3);
        // Interior qubits 2..=3 carry 3 segments, chain ends 1 and 4 carry 2,
        // qubit 0 is off.
        assert_eq!(scenario.circuit.segments.len(), 10);
    }

    #[test]
    fn chain_rejects_bad_parameters() {
        let mut p = SpinChainParams::uniform(1, ChannelKind::BitFlip, vec![0.1], bell_pair());
        assert!(matches!(
            build_spinchain_scenario(&p),
            Err(CircuitError::ChainTooShort(1))
        ));
        p = SpinChainParams::uniform(3, ChannelKind::BitFlip, vec![0.1], bell_pair());
        p.times = vec![0.0, 1.0, 1.0, 2.0];
        assert!(matches!(
            build_spinchain_scenario(&p),
            Err(CircuitError::UnorderedTimes)
        ));
        let mut unnorm = bell_pair();
        unnorm[0] = C64::new(1.0, 0.0);
        p = SpinChainParams::uniform(3, ChannelKind::BitFlip, vec![0.1], unnorm);
        assert!(matches!(
            build_spinchain_scenario(&p),
            Err(CircuitError::UnnormalizedCoefficients(_))
        ));
    }

    #[test]
    fn effective_pair_noiseless_is_exact() {
        let params = SpinChainParams::uniform(3, ChannelKind::BitFlip, vec![0.0], bell_pair());
        let out = effective_pair_trajectory(&params, 1, 0, 0.01).unwrap();
        assert_eq!(out, params.pair_state());
    }
}
