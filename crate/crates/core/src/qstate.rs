//! Complex linear algebra for multi-qubit pure states and density matrices.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis-state
//! index, so `|i0 i1 … i(n-1)⟩` maps to the integer `i0 i1 … i(n-1)` read in
//! binary. Trajectory states are deliberately left unnormalized; the ensemble
//! average restores the physical normalization.

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QStateError {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("two-qubit gate requires distinct qubits (got {0})")]
    EqualIndices(usize),
    #[error("empty keep set in partial trace")]
    EmptyKeepSet,
    #[error("duplicate qubit {0} in keep set")]
    DuplicateKeep(usize),
    #[error("target state norm² = {0}, expected 1 within 1e-10")]
    UnnormalizedTarget(f64),
    #[error("gate dimension {0} is not 2 or 4")]
    BadGateDim(usize),
    #[error("amplitude vector length {len} is not 2^{n_qubits}")]
    BadAmpLength { len: usize, n_qubits: usize },
    #[error("negative weight {0} in outer accumulation")]
    NegativeWeight(f64),
}

/// A 2×2 or 4×4 complex matrix, stored row-major. Noise gates are generally
/// non-unitary, so no structure is assumed beyond finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl GateMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self, QStateError> {
        if dim != 2 && dim != 4 {
            return Err(QStateError::BadGateDim(dim));
        }
        if entries.len() != dim * dim {
            return Err(QStateError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Matrix product `self * rhs` (both must share the same dimension).
    pub fn matmul(&self, rhs: &GateMatrix) -> Result<GateMatrix, QStateError> {
        if self.dim != rhs.dim {
            return Err(QStateError::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * rhs.entries[k * d + j];
                }
            }
        }
        Ok(GateMatrix { dim: d, entries: out })
    }

    /// Max entrywise deviation of `self† self` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.entries[k * d + i].conj() * self.entries[k * d + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    pub fn pauli_x() -> Self {
        Self::from_2x2([
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
    }

    pub fn pauli_y() -> Self {
        Self::from_2x2([
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
    }

    pub fn pauli_z() -> Self {
        Self::from_2x2([
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ])
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_2x2([
            [C64::new(h, 0.0), C64::new(h, 0.0)],
            [C64::new(h, 0.0), C64::new(-h, 0.0)],
        ])
    }

    /// Lowering operator |0⟩⟨1|.
    pub fn sigma_minus() -> Self {
        Self::from_2x2([
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
    }

    /// Raising operator |1⟩⟨0|.
    pub fn sigma_plus() -> Self {
        Self::from_2x2([
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
    }

    /// CNOT on the ordered pair (control, target) = (q_hi, q_lo).
    pub fn cnot() -> Self {
        let mut m = Self::identity(4);
        m.entries[2 * 4 + 2] = C64::new(0.0, 0.0);
        m.entries[2 * 4 + 3] = C64::new(1.0, 0.0);
        m.entries[3 * 4 + 3] = C64::new(0.0, 0.0);
        m.entries[3 * 4 + 2] = C64::new(1.0, 0.0);
        m
    }

    pub fn swap() -> Self {
        let mut m = Self::identity(4);
        m.entries[1 * 4 + 1] = C64::new(0.0, 0.0);
        m.entries[1 * 4 + 2] = C64::new(1.0, 0.0);
        m.entries[2 * 4 + 2] = C64::new(0.0, 0.0);
        m.entries[2 * 4 + 1] = C64::new(1.0, 0.0);
        m
    }

    pub fn from_2x2(rows: [[C64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            entries: vec![rows[0][0], rows[0][1], rows[1][0], rows[1][1]],
        }
    }
}

/// Pure (possibly unnormalized) state of `n_qubits` qubits: 2^n complex
/// amplitudes indexed with qubit 0 as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    /// Computational basis state with the given index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits >= 1, "state needs at least one qubit");
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self, QStateError> {
        if n_qubits == 0 || amps.len() != 1usize << n_qubits {
            return Err(QStateError::BadAmpLength {
                len: amps.len(),
                n_qubits,
            });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64, QStateError> {
        if self.dim() != other.dim() {
            return Err(QStateError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product `self ⊗ rhs`; `self`'s qubits become the leading ones.
    pub fn tensor(&self, rhs: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * rhs.dim());
        for a in &self.amps {
            for b in &rhs.amps {
                amps.push(a * b);
            }
        }
        StateVector {
            n_qubits: self.n_qubits + rhs.n_qubits,
            amps,
        }
    }

    pub fn scale(&mut self, c: C64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    fn bit_mask(&self, qubit: usize) -> Result<usize, QStateError> {
        if qubit >= self.n_qubits {
            return Err(QStateError::IndexOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(1usize << (self.n_qubits - 1 - qubit))
    }

    /// Apply a 2×2 gate to `target`, leaving all other qubits untouched.
    ///
    /// Strided in-place traversal over 2^(n-1) index pairs; no tensor-product
    /// matrix is ever materialized, so the cost is linear in the state size.
    pub fn apply_one_qubit_gate(
        &mut self,
        g: &GateMatrix,
        target: usize,
    ) -> Result<(), QStateError> {
        if g.dim() != 2 {
            return Err(QStateError::BadGateDim(g.dim()));
        }
        let mask = self.bit_mask(target)?;
        let (g00, g01, g10, g11) = (g.entry(0, 0), g.entry(0, 1), g.entry(1, 0), g.entry(1, 1));
        let half = self.amps.len() / 2;
        let low = mask - 1;
        for k in 0..half {
            let i0 = ((k & !low) << 1) | (k & low);
            let i1 = i0 | mask;
            let a = self.amps[i0];
            let b = self.amps[i1];
            self.amps[i0] = g00 * a + g01 * b;
            self.amps[i1] = g10 * a + g11 * b;
        }
        Ok(())
    }

    /// Apply a 4×4 gate to the ordered qubit pair (`q_hi`, `q_lo`), with
    /// `q_hi` the leftmost factor of the 4-dimensional basis ordering.
    pub fn apply_two_qubit_gate(
        &mut self,
        g: &GateMatrix,
        q_hi: usize,
        q_lo: usize,
    ) -> Result<(), QStateError> {
        if g.dim() != 4 {
            return Err(QStateError::BadGateDim(g.dim()));
        }
        if q_hi == q_lo {
            return Err(QStateError::EqualIndices(q_hi));
        }
        let m_hi = self.bit_mask(q_hi)?;
        let m_lo = self.bit_mask(q_lo)?;
        for i in 0..self.amps.len() {
            if i & m_hi != 0 || i & m_lo != 0 {
                continue;
            }
            let idx = [i, i | m_lo, i | m_hi, i | m_hi | m_lo];
            let old = [
                self.amps[idx[0]],
                self.amps[idx[1]],
                self.amps[idx[2]],
                self.amps[idx[3]],
            ];
            for (r, &target) in idx.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (c, &o) in old.iter().enumerate() {
                    acc += g.entry(r, c) * o;
                }
                self.amps[target] = acc;
            }
        }
        Ok(())
    }
}

/// Square complex matrix over `n_qubits` qubits. Physical density matrices
/// are Hermitian with real trace; those invariants are verified by the test
/// suite rather than enforced per operation, because the moment-extraction
/// workflow legitimately propagates non-Hermitian basis operators |i⟩⟨k|.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "density matrix needs at least one qubit");
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_entries(n_qubits: usize, entries: Vec<C64>) -> Result<Self, QStateError> {
        let dim = 1usize << n_qubits;
        if n_qubits == 0 || entries.len() != dim * dim {
            return Err(QStateError::BadAmpLength {
                len: entries.len(),
                n_qubits,
            });
        }
        Ok(Self { n_qubits, entries })
    }

    /// |ψ⟩⟨ψ| for a (possibly unnormalized) state.
    pub fn from_pure(psi: &StateVector) -> Self {
        let mut dm = Self::zeros(psi.n_qubits());
        dm.accumulate_outer(psi, 1.0).expect("dims match");
        dm
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, v: C64) {
        let d = self.dim();
        self.entries[row * d + col] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.entries[i * d + i]).sum()
    }

    /// self += weight · |state⟩⟨state|.
    pub fn accumulate_outer(
        &mut self,
        state: &StateVector,
        weight: f64,
    ) -> Result<(), QStateError> {
        if state.dim() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        if weight < 0.0 {
            return Err(QStateError::NegativeWeight(weight));
        }
        if weight == 0.0 {
            return Ok(());
        }
        let d = self.dim();
        for r in 0..d {
            let wr = state.amps[r] * weight;
            for c in 0..d {
                self.entries[r * d + c] += wr * state.amps[c].conj();
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for e in &mut self.entries {
            *e *= c;
        }
    }

    pub fn add_assign(&mut self, other: &DensityMatrix) -> Result<(), QStateError> {
        if self.dim() != other.dim() {
            return Err(QStateError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b;
        }
        Ok(())
    }

    /// Reduced matrix over `keep` (ascending original order); the complement
    /// is traced out. Trace is preserved.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix, QStateError> {
        if keep.is_empty() {
            return Err(QStateError::EmptyKeepSet);
        }
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        for w in kept.windows(2) {
            if w[0] == w[1] {
                return Err(QStateError::DuplicateKeep(w[0]));
            }
        }
        for &q in &kept {
            if q >= self.n_qubits {
                return Err(QStateError::IndexOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        let traced: Vec<usize> = (0..self.n_qubits).filter(|q| !kept.contains(q)).collect();
        let n_k = kept.len();
        let n_t = traced.len();
        // Bit position of qubit q in a full index.
        let pos = |q: usize| self.n_qubits - 1 - q;
        let compose = |r: usize, e: usize| -> usize {
            let mut full = 0usize;
            for (b, &q) in kept.iter().enumerate() {
                if r & (1 << (n_k - 1 - b)) != 0 {
                    full |= 1 << pos(q);
                }
            }
            for (b, &q) in traced.iter().enumerate() {
                if e & (1 << (n_t - 1 - b)) != 0 {
                    full |= 1 << pos(q);
                }
            }
            full
        };
        let rdim = 1usize << n_k;
        let mut out = vec![C64::new(0.0, 0.0); rdim * rdim];
        let full_dim = self.dim();
        for r in 0..rdim {
            for c in 0..rdim {
                let mut acc = C64::new(0.0, 0.0);
                for e in 0..(1usize << n_t) {
                    let fr = compose(r, e);
                    let fc = compose(c, e);
                    acc += self.entries[fr * full_dim + fc];
                }
                out[r * rdim + c] = acc;
            }
        }
        Ok(DensityMatrix {
            n_qubits: n_k,
            entries: out,
        })
    }

    /// Tr[ρ |target⟩⟨target|] = ⟨target|ρ|target⟩, clamped to ≥ 0.
    /// The target must be normalized within 1e-10.
    pub fn fidelity_pure(&self, target: &StateVector) -> Result<f64, QStateError> {
        if target.dim() != self.dim() {
            return Err(QStateError::DimensionMismatch {
                left: self.dim(),
                right: target.dim(),
            });
        }
        let nsq = target.norm_sq();
        if (nsq - 1.0).abs() > 1e-10 {
            return Err(QStateError::UnnormalizedTarget(nsq));
        }
        let d = self.dim();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..d {
            let tr = target.amps[r].conj();
            for c in 0..d {
                acc += tr * self.entries[r * d + c] * target.amps[c];
            }
        }
        Ok(acc.re.max(0.0))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entries[r * d + c] - self.entries[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending. Used for positivity
    /// checks and trace distance.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries, self.dim())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Trace distance (1/2)·Σ singular values of (a − b). For Hermitian inputs
/// the singular values are the absolute eigenvalues of the difference.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, QStateError> {
    if a.dim() != b.dim() {
        return Err(QStateError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let d = a.dim();
    let mut diff = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d * d {
        diff[i] = a.entries[i] - b.entries[i];
    }
    let eigs = hermitian_eigenvalues(&diff, d);
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}

/// Eigenvalues of a Hermitian complex matrix by cyclic Jacobi rotations.
/// The input is hermitized first; adequate and robust for the small
/// dimensions (≤ 64) this crate works with.
pub fn hermitian_eigenvalues(matrix: &[C64], dim: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), dim * dim);
    let mut a = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            a[r * dim + c] = 0.5 * (matrix[r * dim + c] + matrix[c * dim + r].conj());
        }
    }
    if dim == 1 {
        return vec![a[0].re];
    }
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off += a[p * dim + q].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let g = a[p * dim + q];
                let ga = g.norm();
                if ga <= 1e-300 {
                    continue;
                }
                let alpha = a[p * dim + p].re;
                let beta = a[q * dim + q].re;
                let tau = (beta - alpha) / (2.0 * ga);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let u = g / ga;
                // Columns: col_p' = c·col_p − s·ū·col_q ; col_q' = s·u·col_p + c·col_q,
                // then the conjugate-transposed update on rows.
                for r in 0..dim {
                    let arp = a[r * dim + p];
                    let arq = a[r * dim + q];
                    a[r * dim + p] = c * arp - s * u.conj() * arq;
                    a[r * dim + q] = s * u * arp + c * arq;
                }
                for col in 0..dim {
                    let apc = a[p * dim + col];
                    let aqc = a[q * dim + col];
                    a[p * dim + col] = c * apc - s * u * aqc;
                    a[q * dim + col] = s * u.conj() * apc + c * aqc;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..dim).map(|i| a[i * dim + i].re).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}
