//! Trajectory-based simulation of Markovian decoherence in quantum circuits.
//!
//! Environmental noise is unraveled into a *linear* stochastic Schrödinger
//! equation, so each noise realization acts on a pure state as an ordinary
//! (generally non-unitary) 2×2 gate. Averaging outer products over many
//! trajectories recovers the Lindblad density matrix, while the quadratic
//! averages of the gate entries (second moments) give closed-form channel
//! fidelities that serve as cross-checking oracles.
//!
//! Module map:
//! - [`qstate`]: multi-qubit state vectors, density matrices, gate kernels,
//!   partial trace, fidelity and trace distance.
//! - [`stochastic`]: reproducible counter-based random streams, the exact
//!   Gaussian law of the damping Itô integral, Euler–Maruyama integration.
//! - [`channels`]: the channel catalog — gate samplers and second-moment
//!   tables for six decoherence channels.
//! - [`lindblad`]: RK4 master-equation reference evolution and closed-form
//!   density-matrix solutions.
//! - [`circuit`]: timed circuit IR, trajectory execution, chain-gate
//!   composition, scenario builders.
//! - [`analytic`]: closed-form protocol fidelities.
//! - [`montecarlo`]: deterministic parallel ensemble estimation.

pub mod analytic;
pub mod channels;
pub mod circuit;
pub mod lindblad;
pub mod montecarlo;
pub mod qstate;
pub mod stochastic;

pub use num_complex::Complex64 as C64;
