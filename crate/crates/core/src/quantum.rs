//! Four-qubit entangled source: state vector, basis rotation, projective
//! measurement sampling, and a phenomenological noise model.
//!
//! The source emits four qubits (a, b, c, d); the commander A receives qubits
//! a and b, lieutenant B receives c, and lieutenant C receives d. The source
//! state lives in the total-spin-zero subspace of four qubits, so it is
//! invariant under the same single-qubit unitary applied to all four qubits.
//! That invariance makes the same-basis correlations basis-independent: when
//! all three parties measure in the same basis, the recorded values form one
//! of the combinations 000, 111, 201, or 210 (A records a trit, B and C each
//! record a bit).
//!
//! Imperfections are modeled phenomenologically: a whole four-qubit outcome is
//! replaced by a uniformly random bit pattern with probability `p_corrupt`,
//! and a measurement window produces a fourfold coincidence with probability
//! `p_detect`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::party::Party;

/// Number of qubits emitted per window.
pub const NUM_QUBITS: usize = 4;

/// Dimension of the four-qubit state space.
pub const DIM: usize = 16;

/// Tolerance for state normalization checks.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Tolerance for unitarity checks.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Fraction of the 16 bit patterns that violate the same-basis correlations.
///
/// Ten of the sixteen patterns encode to a triple outside {000, 111, 201,
/// 210}, so uniform replacement corrupts a correlated entry with probability
/// 10/16. The default `p_corrupt` is calibrated against the target error
/// ratio through this factor: `p_corrupt = qer_target / (10/16)`.
pub const INVALID_PATTERN_FRACTION: f64 = 10.0 / 16.0;

/// Error ratio the default noise model is calibrated to reproduce.
pub const QER_TARGET: f64 = 0.0547;

/// Default joint-outcome corruption probability (`QER_TARGET / (10/16)`).
pub const DEFAULT_P_CORRUPT: f64 = 0.0875;

/// Default per-window fourfold detection probability.
pub const DEFAULT_P_DETECT: f64 = 0.25;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("state vector is not normalized (|amplitudes|^2 sums to {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("matrix is not unitary (deviation {deviation:.3e} from identity)")]
    NotUnitary { deviation: f64 },
    #[error("probability {name} = {value} outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
}

/// A pure state of the four source qubits, stored as 16 complex amplitudes.
///
/// Basis labels are four-bit strings in qubit order (a, b, c, d); label
/// `abcd` maps to index `a<<3 | b<<2 | c<<1 | d`. Bit 0 is the vertical
/// polarization |V> and bit 1 the horizontal polarization |H>.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: [Complex64; DIM],
}

impl QuantumState {
    /// Builds a state from explicit amplitudes, rejecting unnormalized input.
    pub fn from_amplitudes(amps: [Complex64; DIM]) -> Result<Self, QuantumError> {
        let state = QuantumState { amps };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(QuantumError::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// The canonical source state:
    /// `(2|0011> - |0101> - |0110> - |1001> - |1010> + 2|1100>) / (2*sqrt(3))`.
    ///
    /// Exactly six basis labels carry nonzero amplitude.
    pub fn canonical() -> Self {
        let big = Complex64::new(1.0 / 3f64.sqrt(), 0.0); // 2 / (2*sqrt(3))
        let small = Complex64::new(-1.0 / (2.0 * 3f64.sqrt()), 0.0);
        let mut amps = [Complex64::new(0.0, 0.0); DIM];
        amps[0b0011] = big;
        amps[0b1100] = big;
        amps[0b0101] = small;
        amps[0b0110] = small;
        amps[0b1001] = small;
        amps[0b1010] = small;
        QuantumState { amps }
    }

    /// Amplitude at a basis label in (a, b, c, d) order.
    pub fn amplitude(&self, label: usize) -> Complex64 {
        self.amps[label]
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &QuantumState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(s, o)| s.conj() * o)
            .sum()
    }

    /// Applies the same single-qubit unitary to all four qubits.
    ///
    /// Norm is preserved; the canonical state is left unchanged up to a
    /// global phase for any unitary.
    pub fn apply_to_all_qubits(&self, u: &Unitary2) -> QuantumState {
        let mut amps = self.amps;
        for qubit in 0..NUM_QUBITS {
            apply_single(&mut amps, u, qubit);
        }
        QuantumState { amps }
    }

    /// Measurement probabilities for the 16 joint outcomes under the given
    /// per-party basis choice.
    ///
    /// An X-basis measurement is realized by rotating the measured qubit with
    /// a Hadamard and reading out in Z; A's selector rotates both of its
    /// qubits (a and b).
    pub fn probabilities(&self, bases: BasisChoice) -> [f64; DIM] {
        let hadamard = Unitary2::hadamard();
        let mut amps = self.amps;
        if bases.a == Basis::X {
            apply_single(&mut amps, &hadamard, 0);
            apply_single(&mut amps, &hadamard, 1);
        }
        if bases.b == Basis::X {
            apply_single(&mut amps, &hadamard, 2);
        }
        if bases.c == Basis::X {
            apply_single(&mut amps, &hadamard, 3);
        }
        let mut probs = [0.0; DIM];
        for (p, a) in probs.iter_mut().zip(amps.iter()) {
            *p = a.norm_sqr();
        }
        probs
    }
}

/// Applies `u` to one qubit of a four-qubit amplitude array.
/// Qubit 0 is "a" (the most significant label bit), qubit 3 is "d".
fn apply_single(amps: &mut [Complex64; DIM], u: &Unitary2, qubit: usize) {
    let bit = 1usize << (NUM_QUBITS - 1 - qubit);
    for idx in 0..DIM {
        if idx & bit != 0 {
            continue;
        }
        let lo = amps[idx];
        let hi = amps[idx | bit];
        amps[idx] = u.m[0][0] * lo + u.m[0][1] * hi;
        amps[idx | bit] = u.m[1][0] * lo + u.m[1][1] * hi;
    }
}

/// A validated 2x2 unitary acting on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// Validates `u . u^dagger = I` within [`UNITARY_TOLERANCE`].
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self, QuantumError> {
        let mut deviation: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                // (u u†)[r][c]
                let entry = m[r][0] * m[c][0].conj() + m[r][1] * m[c][1].conj();
                let expected = if r == c { 1.0 } else { 0.0 };
                deviation = deviation.max((entry - expected).norm());
            }
        }
        if deviation > UNITARY_TOLERANCE {
            return Err(QuantumError::NotUnitary { deviation });
        }
        Ok(Unitary2 { m })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Unitary2 {
            m: [[one, zero], [zero, one]],
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        Unitary2 { m: [[h, h], [h, -h]] }
    }

    /// A Haar-distributed SU(2) element from the given random stream.
    pub fn haar_random(rng: &mut impl Rng) -> Self {
        use std::f64::consts::TAU;
        let alpha = rng.gen::<f64>() * TAU;
        let beta = rng.gen::<f64>() * TAU;
        let theta = rng.gen::<f64>().sqrt().asin();
        let (sin, cos) = theta.sin_cos();
        let ea = Complex64::from_polar(1.0, alpha);
        let eb = Complex64::from_polar(1.0, beta);
        Unitary2 {
            m: [
                [ea * cos, eb * sin],
                [-eb.conj() * sin, ea.conj() * cos],
            ],
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }
}

/// Measurement basis selector: Z is {|0>, |1>}, X is the rotated pair
/// {(|0>+|1>)/sqrt(2), (|0>-|1>)/sqrt(2)}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

/// One basis selector per party. A applies its selector to both of its
/// qubits; a party never splits its choice within a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisChoice {
    pub a: Basis,
    pub b: Basis,
    pub c: Basis,
}

impl BasisChoice {
    pub fn all_z() -> Self {
        BasisChoice {
            a: Basis::Z,
            b: Basis::Z,
            c: Basis::Z,
        }
    }

    pub fn all_x() -> Self {
        BasisChoice {
            a: Basis::X,
            b: Basis::X,
            c: Basis::X,
        }
    }

    /// Independent uniform selector per party.
    pub fn random(rng: &mut impl Rng) -> Self {
        let pick = |r: &mut dyn FnMut() -> bool| if r() { Basis::X } else { Basis::Z };
        let mut draw = || rng.gen::<bool>();
        BasisChoice {
            a: pick(&mut draw),
            b: pick(&mut draw),
            c: pick(&mut draw),
        }
    }

    pub fn all_same(&self) -> bool {
        self.a == self.b && self.b == self.c
    }

    pub fn of(&self, party: Party) -> Basis {
        match party {
            Party::A => self.a,
            Party::B => self.b,
            Party::C => self.c,
        }
    }

    fn table_index(&self) -> usize {
        let bit = |b: Basis| usize::from(b == Basis::X);
        bit(self.a) << 2 | bit(self.b) << 1 | bit(self.c)
    }
}

/// One measurement window: the four outcome bits, the bases used, and whether
/// a fourfold coincidence was registered. The bits are only meaningful when
/// `detected` is true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointOutcome {
    pub bases: BasisChoice,
    pub detected: bool,
    pub a: u8,
    pub b: u8,
    pub c: u8,
    pub d: u8,
}

impl JointOutcome {
    pub fn from_label(bases: BasisChoice, label: usize, detected: bool) -> Self {
        JointOutcome {
            bases,
            detected,
            a: (label >> 3 & 1) as u8,
            b: (label >> 2 & 1) as u8,
            c: (label >> 1 & 1) as u8,
            d: (label & 1) as u8,
        }
    }

    pub fn label(&self) -> usize {
        (self.a as usize) << 3 | (self.b as usize) << 2 | (self.c as usize) << 1 | self.d as usize
    }
}

/// Phenomenological imperfection model: joint-outcome uniform replacement
/// with probability `p_corrupt`, fourfold detection with probability
/// `p_detect`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_corrupt: f64,
    pub p_detect: f64,
}

impl NoiseModel {
    pub fn new(p_corrupt: f64, p_detect: f64) -> Result<Self, QuantumError> {
        let model = NoiseModel { p_corrupt, p_detect };
        model.validate()?;
        Ok(model)
    }

    /// Perfect source: every window detected, nothing corrupted.
    pub fn noiseless() -> Self {
        NoiseModel {
            p_corrupt: 0.0,
            p_detect: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if !(0.0..=1.0).contains(&self.p_corrupt) || !self.p_corrupt.is_finite() {
            return Err(QuantumError::InvalidProbability {
                name: "p_corrupt",
                value: self.p_corrupt,
            });
        }
        if !(0.0..=1.0).contains(&self.p_detect) || !self.p_detect.is_finite() {
            return Err(QuantumError::InvalidProbability {
                name: "p_detect",
                value: self.p_detect,
            });
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    /// Calibrated to the reference run: detection ratio ~1/4 and an error
    /// ratio of ~5.47% on correlated entries.
    fn default() -> Self {
        NoiseModel {
            p_corrupt: DEFAULT_P_CORRUPT,
            p_detect: DEFAULT_P_DETECT,
        }
    }
}

/// Samples one joint outcome in the given bases. The returned outcome is
/// marked detected; detection thinning is the caller's (or the source
/// sampler's) job.
pub fn sample_outcome(state: &QuantumState, bases: BasisChoice, rng: &mut impl Rng) -> JointOutcome {
    let probs = state.probabilities(bases);
    let label = sample_label(&probs, rng);
    JointOutcome::from_label(bases, label, true)
}

fn sample_label(probs: &[f64; DIM], rng: &mut impl Rng) -> usize {
    let draw = rng.gen::<f64>();
    let mut acc = 0.0;
    for (label, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return label;
        }
    }
    DIM - 1
}

/// With probability `p_corrupt`, replaces the four outcome bits with a
/// uniformly random pattern. Expects a detected outcome.
pub fn apply_noise(outcome: JointOutcome, model: &NoiseModel, rng: &mut impl Rng) -> JointOutcome {
    debug_assert!(outcome.detected, "noise applies to detected outcomes");
    if model.p_corrupt > 0.0 && rng.gen_bool(model.p_corrupt) {
        let label = rng.gen_range(0..DIM);
        JointOutcome::from_label(outcome.bases, label, true)
    } else {
        outcome
    }
}

/// Translates a detected same-basis outcome into the values the parties
/// record: A collapses its two bits into a trit (11 -> 0, 00 -> 1, mixed ->
/// 2), B records qubit c, C records qubit d.
///
/// # Panics
///
/// Panics if the outcome is undetected or the parties used different bases.
pub fn encode_records(outcome: &JointOutcome) -> (u8, u8, u8) {
    assert!(outcome.detected, "cannot encode an undetected window");
    assert!(
        outcome.bases.all_same(),
        "records are only defined for same-basis windows"
    );
    let trit = match (outcome.a, outcome.b) {
        (1, 1) => 0,
        (0, 0) => 1,
        _ => 2,
    };
    (trit, outcome.c, outcome.d)
}

/// Source sampler with the eight per-basis-combination outcome distributions
/// precomputed. This is the hot path for window emission.
#[derive(Debug, Clone)]
pub struct SourceSampler {
    cdf: [[f64; DIM]; 8],
    noise: NoiseModel,
}

impl SourceSampler {
    pub fn new(state: &QuantumState, noise: NoiseModel) -> Self {
        let mut cdf = [[0.0; DIM]; 8];
        for (index, table) in cdf.iter_mut().enumerate() {
            let bases = BasisChoice {
                a: if index & 4 != 0 { Basis::X } else { Basis::Z },
                b: if index & 2 != 0 { Basis::X } else { Basis::Z },
                c: if index & 1 != 0 { Basis::X } else { Basis::Z },
            };
            let probs = state.probabilities(bases);
            let mut acc = 0.0;
            for (slot, p) in table.iter_mut().zip(probs.iter()) {
                acc += p;
                *slot = acc;
            }
            table[DIM - 1] = 1.0;
        }
        SourceSampler { cdf, noise }
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Emits one measurement window: random bases, detection thinning, an
    /// outcome sampled from the exact distribution, and corruption noise.
    pub fn emit_window(&self, rng: &mut impl Rng) -> JointOutcome {
        let bases = BasisChoice::random(rng);
        if !rng.gen_bool(self.noise.p_detect) {
            return JointOutcome {
                bases,
                detected: false,
                a: 0,
                b: 0,
                c: 0,
                d: 0,
            };
        }
        let table = &self.cdf[bases.table_index()];
        let draw = rng.gen::<f64>();
        let label = table.partition_point(|&edge| edge <= draw);
        let outcome = JointOutcome::from_label(bases, label.min(DIM - 1), true);
        apply_noise(outcome, &self.noise, rng)
    }
}

/// Aggregate counts over a stream of emitted windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub windows: usize,
    pub detected: usize,
    /// Detected windows in which all three parties chose the same basis.
    pub same_basis: usize,
    pub n000: usize,
    pub n111: usize,
    pub n201: usize,
    pub n210: usize,
    /// Same-basis windows whose encoded triple violates the correlations.
    pub invalid: usize,
}

impl SourceStats {
    pub fn detected_fraction(&self) -> f64 {
        ratio(self.detected, self.windows)
    }

    /// Fraction of detected windows retained by the same-basis filter.
    pub fn same_basis_fraction(&self) -> f64 {
        ratio(self.same_basis, self.detected)
    }

    /// Error ratio among same-basis windows.
    pub fn qer(&self) -> f64 {
        ratio(self.invalid, self.same_basis)
    }

    pub fn frequency(&self, triple: (u8, u8, u8)) -> f64 {
        let count = match triple {
            (0, 0, 0) => self.n000,
            (1, 1, 1) => self.n111,
            (2, 0, 1) => self.n201,
            (2, 1, 0) => self.n210,
            _ => self.invalid,
        };
        ratio(count, self.same_basis)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Emits `windows` source windows and tallies detection, basis agreement,
/// and the encoded-triple histogram.
pub fn source_statistics(
    state: &QuantumState,
    noise: NoiseModel,
    windows: usize,
    rng: &mut impl Rng,
) -> SourceStats {
    let sampler = SourceSampler::new(state, noise);
    let mut stats = SourceStats {
        windows,
        detected: 0,
        same_basis: 0,
        n000: 0,
        n111: 0,
        n201: 0,
        n210: 0,
        invalid: 0,
    };
    for _ in 0..windows {
        let outcome = sampler.emit_window(rng);
        if !outcome.detected {
            continue;
        }
        stats.detected += 1;
        if !outcome.bases.all_same() {
            continue;
        }
        stats.same_basis += 1;
        match encode_records(&outcome) {
            (0, 0, 0) => stats.n000 += 1,
            (1, 1, 1) => stats.n111 += 1,
            (2, 0, 1) => stats.n201 += 1,
            (2, 1, 0) => stats.n210 += 1,
            _ => stats.invalid += 1,
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Independent route: build the full 16x16 matrix u x u x u x u and
    /// multiply, instead of the per-qubit contraction used by the
    /// implementation.
    fn apply_via_kron(state: &QuantumState, u: &Unitary2) -> [Complex64; DIM] {
        let mut out = [Complex64::new(0.0, 0.0); DIM];
        for (row, slot) in out.iter_mut().enumerate() {
            for col in 0..DIM {
                let mut entry = Complex64::new(1.0, 0.0);
                for qubit in 0..NUM_QUBITS {
                    let shift = NUM_QUBITS - 1 - qubit;
                    let r = row >> shift & 1;
                    let cbit = col >> shift & 1;
                    entry *= u.entry(r, cbit);
                }
                *slot += entry * state.amplitude(col);
            }
        }
        out
    }

    #[test]
    fn canonical_amplitudes_match_expected_values() {
        let state = QuantumState::canonical();
        let third = 1.0 / 3f64.sqrt();
        let small = -1.0 / (2.0 * 3f64.sqrt());
        assert!((state.amplitude(0b0011).re - third).abs() < 1e-12);
        assert!((state.amplitude(0b1100).re - third).abs() < 1e-12);
        for label in [0b0101, 0b0110, 0b1001, 0b1010] {
            assert!((state.amplitude(label).re - small).abs() < 1e-12);
        }
        let nonzero = state
            .amplitudes()
            .iter()
            .filter(|a| a.norm() > 0.0)
            .count();
        assert_eq!(nonzero, 6);
        assert!((state.amplitude(0b0000).norm() - 0.0).abs() < 1e-15);
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_amplitudes_rejects_unnormalized_input() {
        let mut amps = [Complex64::new(0.0, 0.0); DIM];
        amps[0] = c(0.5);
        assert!(matches!(
            QuantumState::from_amplitudes(amps),
            Err(QuantumError::NotNormalized { .. })
        ));
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let state = QuantumState::canonical();
        let out = state.apply_to_all_qubits(&Unitary2::identity());
        assert_eq!(state, out);
    }

    #[test]
    fn hadamard_on_all_qubits_preserves_canonical_state() {
        let state = QuantumState::canonical();
        let out = state.apply_to_all_qubits(&Unitary2::hadamard());
        let overlap = state.overlap(&out);
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_unitaries_preserve_canonical_state() {
        let state = QuantumState::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = Unitary2::haar_random(&mut rng);
            let out = state.apply_to_all_qubits(&u);
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            assert!((state.overlap(&out).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn per_qubit_application_matches_full_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let state = QuantumState::canonical();
        for _ in 0..20 {
            let u = Unitary2::haar_random(&mut rng);
            let fast = state.apply_to_all_qubits(&u);
            let slow = apply_via_kron(&state, &u);
            for label in 0..DIM {
                assert!((fast.amplitude(label) - slow[label]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let m = [[c(1.0), c(0.0)], [c(0.0), c(0.9)]];
        assert!(matches!(
            Unitary2::new(m),
            Err(QuantumError::NotUnitary { .. })
        ));
        let h = Unitary2::hadamard();
        assert!(Unitary2::new([h.m[0], h.m[1]]).is_ok());
    }

    #[test]
    fn same_basis_z_probabilities_match_amplitudes() {
        let state = QuantumState::canonical();
        let probs = state.probabilities(BasisChoice::all_z());
        assert!((probs[0b1100] - 1.0 / 3.0).abs() < 1e-12);
        assert!((probs[0b0011] - 1.0 / 3.0).abs() < 1e-12);
        assert!((probs[0b0101] - 1.0 / 12.0).abs() < 1e-12);
        assert!((probs[0b0000]).abs() < 1e-14);
    }

    #[test]
    fn x_basis_distribution_equals_z_basis_distribution() {
        let state = QuantumState::canonical();
        let z = state.probabilities(BasisChoice::all_z());
        let x = state.probabilities(BasisChoice::all_x());
        for label in 0..DIM {
            assert!((z[label] - x[label]).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_basis_probabilities_match_kron_oracle() {
        let state = QuantumState::canonical();
        let bases = BasisChoice {
            a: Basis::Z,
            b: Basis::X,
            c: Basis::Z,
        };
        // Oracle route: rotate with explicit Kronecker factors.
        let mut oracle = state.amplitudes().to_owned();
        let h = Unitary2::hadamard();
        apply_single(&mut oracle, &h, 2);
        let probs = state.probabilities(bases);
        for label in 0..DIM {
            assert!((probs[label] - oracle[label].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn sampler_histogram_matches_exact_probabilities() {
        let state = QuantumState::canonical();
        let probs = state.probabilities(BasisChoice::all_z());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000usize;
        let mut counts = [0usize; DIM];
        for _ in 0..n {
            let outcome = sample_outcome(&state, BasisChoice::all_z(), &mut rng);
            counts[outcome.label()] += 1;
        }
        for label in 0..DIM {
            let expected = probs[label];
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
            let observed = counts[label] as f64 / n as f64;
            assert!(
                (observed - expected).abs() <= 4.0 * sigma + 1e-9,
                "label {label}: observed {observed}, expected {expected}"
            );
        }
    }

    #[test]
    fn encode_records_covers_the_four_combinations() {
        let bases = BasisChoice::all_z();
        let mk = |a, b, c, d| JointOutcome {
            bases,
            detected: true,
            a,
            b,
            c,
            d,
        };
        assert_eq!(encode_records(&mk(1, 1, 0, 0)), (0, 0, 0));
        assert_eq!(encode_records(&mk(0, 0, 1, 1)), (1, 1, 1));
        assert_eq!(encode_records(&mk(0, 1, 0, 1)), (2, 0, 1));
        assert_eq!(encode_records(&mk(1, 0, 1, 0)), (2, 1, 0));
    }

    #[test]
    fn encoded_triples_follow_the_exact_outcome_law() {
        let state = QuantumState::canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stats = source_statistics(&state, NoiseModel::noiseless(), 100_000, &mut rng);
        assert_eq!(stats.detected, stats.windows);
        assert!((stats.frequency((0, 0, 0)) - 1.0 / 3.0).abs() < 0.01);
        assert!((stats.frequency((1, 1, 1)) - 1.0 / 3.0).abs() < 0.01);
        assert!((stats.frequency((2, 0, 1)) - 1.0 / 6.0).abs() < 0.01);
        assert!((stats.frequency((2, 1, 0)) - 1.0 / 6.0).abs() < 0.01);
        assert_eq!(stats.invalid, 0);
    }

    #[test]
    fn zero_noise_leaves_outcomes_unchanged() {
        let model = NoiseModel::noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let outcome = JointOutcome::from_label(BasisChoice::all_z(), 0b1100, true);
        for _ in 0..100 {
            assert_eq!(apply_noise(outcome, &model, &mut rng), outcome);
        }
    }

    #[test]
    fn full_corruption_is_uniform_over_patterns() {
        let model = NoiseModel {
            p_corrupt: 1.0,
            p_detect: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let outcome = JointOutcome::from_label(BasisChoice::all_z(), 0b1100, true);
        let n = 160_000usize;
        let mut counts = [0usize; DIM];
        for _ in 0..n {
            counts[apply_noise(outcome, &model, &mut rng).label()] += 1;
        }
        for count in counts {
            let freq = count as f64 / n as f64;
            assert!((freq - 1.0 / 16.0).abs() < 0.01);
        }
    }

    #[test]
    fn calibrated_corruption_reproduces_target_error_ratio() {
        // A corrupted window violates the correlations with probability
        // 10/16, so p_corrupt = 0.0875 should land at ~5.47%.
        let state = QuantumState::canonical();
        let noise = NoiseModel {
            p_corrupt: DEFAULT_P_CORRUPT,
            p_detect: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let stats = source_statistics(&state, noise, 200_000, &mut rng);
        assert!(stats.same_basis > 3_000);
        assert!(
            (stats.qer() - QER_TARGET).abs() < 0.005,
            "qer = {}",
            stats.qer()
        );
    }

    #[test]
    fn noise_model_validation_rejects_bad_probabilities() {
        assert!(NoiseModel::new(1.5, 0.5).is_err());
        assert!(NoiseModel::new(0.5, -0.1).is_err());
        assert!(NoiseModel::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn detection_thinning_follows_p_detect() {
        let sampler = SourceSampler::new(&QuantumState::canonical(), NoiseModel::default());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 48_184usize;
        let detected = (0..n)
            .filter(|_| sampler.emit_window(&mut rng).detected)
            .count();
        assert!((detected as f64 / n as f64 - 0.25).abs() < 0.01);
    }
}
