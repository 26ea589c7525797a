//! Exact treatment of a single agent: a finite transverse-field Ising patch.
//!
//! An agent is an `n`-qubit TFIM on an internal bond set. Its Hamiltonian is
//! dense-diagonalized in the computational basis, and three reduced
//! observables (mean polarization, mean bond correlation, energy per qubit)
//! summarize the ground state. Feedback from the rest of the ensemble enters
//! as scalar fields conjugate to those observables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AqiaError, Result};

/// Largest patch size allowed for dense diagonalization (Hilbert dim 2^14).
pub const MAX_QUBITS: usize = 14;

/// Microscopic parameters of one agent.
///
/// Fields and couplings are in units of the transverse-field scale; `bonds`
/// holds index pairs `(k, l)` with `k < l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub qubits: usize,
    pub bonds: Vec<(usize, usize)>,
    pub fields: Vec<f64>,
    pub couplings: Vec<f64>,
    pub transverse: f64,
}

impl AgentParams {
    pub fn new(
        qubits: usize,
        bonds: Vec<(usize, usize)>,
        fields: Vec<f64>,
        couplings: Vec<f64>,
        transverse: f64,
    ) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(AqiaError::QubitCount { got: qubits });
        }
        for &(k, l) in &bonds {
            if k >= l || l >= qubits {
                return Err(AqiaError::InvalidBond { k, l, n: qubits });
            }
        }
        for (idx, &(k, l)) in bonds.iter().enumerate() {
            if bonds[..idx].contains(&(k, l)) {
                return Err(AqiaError::DuplicateBond { k, l });
            }
        }
        if fields.len() != qubits {
            return Err(AqiaError::FieldCount {
                expected: qubits,
                got: fields.len(),
            });
        }
        if couplings.len() != bonds.len() {
            return Err(AqiaError::CouplingCount {
                expected: bonds.len(),
                got: couplings.len(),
            });
        }
        if !fields.iter().all(|h| h.is_finite()) {
            return Err(AqiaError::NonFinite { what: "local field" });
        }
        if !couplings.iter().all(|j| j.is_finite()) {
            return Err(AqiaError::NonFinite {
                what: "bond coupling",
            });
        }
        if !transverse.is_finite() {
            return Err(AqiaError::NonFinite {
                what: "transverse field",
            });
        }
        if transverse < 0.0 {
            return Err(AqiaError::NegativeTransverse { got: transverse });
        }
        Ok(Self {
            qubits,
            bonds,
            fields,
            couplings,
            transverse,
        })
    }

    /// Open-chain bond set `(0,1), (1,2), ...` on `n` qubits.
    pub fn chain_bonds(n: usize) -> Vec<(usize, usize)> {
        (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect()
    }

    /// Ring bond set: the open chain plus the closing bond `(0, n-1)`.
    pub fn ring_bonds(n: usize) -> Vec<(usize, usize)> {
        let mut bonds = Self::chain_bonds(n);
        if n > 2 {
            bonds.push((0, n - 1));
        }
        bonds
    }

    /// Ring plus two opposite next-nearest braces `(0,2)` and `(n/2, n/2+2)`;
    /// the densest of the built-in patch layouts.
    pub fn braced_ring_bonds(n: usize) -> Vec<(usize, usize)> {
        let mut bonds = Self::ring_bonds(n);
        if n >= 4 {
            bonds.push((0, 2));
        }
        if n >= 6 && n / 2 + 2 < n {
            bonds.push((n / 2, n / 2 + 2));
        }
        bonds
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.qubits
    }
}

/// Dense real-symmetric Hamiltonian in the computational basis.
///
/// Construction never produces an asymmetric matrix; `from_matrix` is the
/// only entry point that has to check.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    matrix: DMatrix<f64>,
}

impl DenseHamiltonian {
    /// Wrap an externally built matrix, verifying exact symmetry.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(AqiaError::NotSymmetric);
        }
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(AqiaError::NotSymmetric);
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Expectation value `<v|H|v>` for a real state vector.
    pub fn expectation(&self, v: &DVector<f64>) -> f64 {
        (v.transpose() * &self.matrix * v)[(0, 0)]
    }
}

/// Lowest eigenpair of an agent Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub amplitudes: DVector<f64>,
}

/// Reduced observables of one agent state: mean polarization, mean bond
/// correlation, and energy per qubit measured against the bare Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub polarization: f64,
    pub bond_corr: f64,
    pub energy: f64,
}

impl Summary {
    pub fn channel(&self, ch: Channel) -> f64 {
        match ch {
            Channel::Polarization => self.polarization,
            Channel::BondCorr => self.bond_corr,
            Channel::Energy => self.energy,
        }
    }

    pub fn with_channel(mut self, ch: Channel, value: f64) -> Self {
        match ch {
            Channel::Polarization => self.polarization = value,
            Channel::BondCorr => self.bond_corr = value,
            Channel::Energy => self.energy = value,
        }
        self
    }
}

/// The three observable channels an agent reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Polarization,
    BondCorr,
    Energy,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Polarization, Channel::BondCorr, Channel::Energy];
}

/// Scalar feedback fields conjugate to the three observables of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeedbackFields {
    pub polarization: f64,
    pub bond_corr: f64,
    pub energy: f64,
}

impl FeedbackFields {
    pub const ZERO: FeedbackFields = FeedbackFields {
        polarization: 0.0,
        bond_corr: 0.0,
        energy: 0.0,
    };
}

/// Spin value (+1/-1) of qubit `k` in basis state `b` (bit clear = up).
#[inline]
fn spin(b: usize, k: usize) -> f64 {
    1.0 - 2.0 * ((b >> k) & 1) as f64
}

fn build_tfim_matrix(
    n: usize,
    bonds: &[(usize, usize)],
    fields: &[f64],
    couplings: &[f64],
    transverse: f64,
) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        let mut diag = 0.0;
        for (k, &h) in fields.iter().enumerate() {
            diag -= h * spin(b, k);
        }
        for (&(k, l), &j) in bonds.iter().zip(couplings) {
            diag -= j * spin(b, k) * spin(b, l);
        }
        m[(b, b)] = diag;
        if transverse != 0.0 {
            for k in 0..n {
                m[(b, b ^ (1 << k))] = -transverse;
            }
        }
    }
    m
}

/// Bare agent Hamiltonian: longitudinal fields on the diagonal, one
/// `-transverse` entry between basis states differing in a single bit.
pub fn build_hamiltonian(params: &AgentParams) -> DenseHamiltonian {
    DenseHamiltonian {
        matrix: build_tfim_matrix(
            params.qubits,
            &params.bonds,
            &params.fields,
            &params.couplings,
            params.transverse,
        ),
    }
}

/// Mean-field Hamiltonian of one agent under given feedback fields.
///
/// The energy-channel field rescales the whole bare Hamiltonian by
/// `1 - phi_u / n`; the polarization and bond fields shift the local fields
/// and bond couplings uniformly.
pub fn build_mf_hamiltonian(params: &AgentParams, fields: &FeedbackFields) -> DenseHamiltonian {
    let n = params.qubits as f64;
    let scale = 1.0 - fields.energy / n;
    let h_eff: Vec<f64> = params
        .fields
        .iter()
        .map(|h| scale * h + fields.polarization / n)
        .collect();
    let bond_shift = if params.bonds.is_empty() {
        0.0
    } else {
        fields.bond_corr / params.bonds.len() as f64
    };
    let j_eff: Vec<f64> = params.couplings.iter().map(|j| scale * j + bond_shift).collect();
    DenseHamiltonian {
        matrix: build_tfim_matrix(
            params.qubits,
            &params.bonds,
            &h_eff,
            &j_eff,
            scale * params.transverse,
        ),
    }
}

/// Lowest eigenpair by dense symmetric eigendecomposition.
///
/// For degeneracies within 1e-10 the eigenvector appearing first in the
/// solver's output order wins, so reruns on identical input are
/// bit-reproducible. The returned amplitude sign is fixed by making the
/// largest-magnitude component positive.
pub fn ground_state(h: &DenseHamiltonian) -> GroundState {
    let eig = h.matrix.clone().symmetric_eigen();
    let mut min = f64::INFINITY;
    for &ev in eig.eigenvalues.iter() {
        if ev < min {
            min = ev;
        }
    }
    let mut idx = 0;
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= min + 1e-10 {
            idx = i;
            break;
        }
    }
    let mut amplitudes = eig.eigenvectors.column(idx).into_owned();
    let mut lead = 0;
    let mut lead_abs = 0.0;
    for (i, &a) in amplitudes.iter().enumerate() {
        if a.abs() > lead_abs {
            lead_abs = a.abs();
            lead = i;
        }
    }
    if amplitudes[lead] < 0.0 {
        amplitudes.neg_mut();
    }
    GroundState {
        energy: eig.eigenvalues[idx],
        amplitudes,
    }
}

/// Reduced observables of `gs`, with the energy channel measured against the
/// bare Hamiltonian rebuilt from `params` (not any mean-field variant).
pub fn measure_summaries(params: &AgentParams, gs: &GroundState) -> Result<Summary> {
    let n = params.qubits;
    let dim = params.hilbert_dim();
    if gs.amplitudes.len() != dim {
        return Err(AqiaError::DimensionMismatch {
            state: gs.amplitudes.len(),
            expected: dim,
        });
    }
    let amps = gs.amplitudes.as_slice();

    let mut z_sum = 0.0;
    let mut zz_sum = 0.0;
    let mut diag_energy = 0.0;
    for b in 0..dim {
        let p = amps[b] * amps[b];
        let mut z_here = 0.0;
        for k in 0..n {
            z_here += spin(b, k);
        }
        z_sum += p * z_here;

        let mut zz_here = 0.0;
        let mut bond_energy = 0.0;
        for (&(k, l), &j) in params.bonds.iter().zip(&params.couplings) {
            let zz = spin(b, k) * spin(b, l);
            zz_here += zz;
            bond_energy += j * zz;
        }
        zz_sum += p * zz_here;

        let mut field_energy = 0.0;
        for (k, &h) in params.fields.iter().enumerate() {
            field_energy += h * spin(b, k);
        }
        diag_energy -= p * (field_energy + bond_energy);
    }

    let mut flip_overlap = 0.0;
    if params.transverse != 0.0 {
        for b in 0..dim {
            for k in 0..n {
                flip_overlap += amps[b] * amps[b ^ (1 << k)];
            }
        }
    }
    let bare_energy = diag_energy - params.transverse * flip_overlap;

    let polarization = z_sum / n as f64;
    let bond_corr = if params.bonds.is_empty() {
        0.0
    } else {
        zz_sum / params.bonds.len() as f64
    };
    Ok(Summary {
        polarization,
        bond_corr,
        energy: bare_energy / n as f64,
    })
}

/// Convenience: bare ground-state summary of one agent (zero feedback).
pub fn bare_summary(params: &AgentParams) -> Result<Summary> {
    let h = build_hamiltonian(params);
    let gs = ground_state(&h);
    measure_summaries(params, &gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn single_qubit(h: f64, gamma: f64) -> AgentParams {
        AgentParams::new(1, vec![], vec![h], vec![], gamma).unwrap()
    }

    fn two_chain(j: f64, h: f64, gamma: f64) -> AgentParams {
        AgentParams::new(2, vec![(0, 1)], vec![h, h], vec![j], gamma).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(AgentParams::new(0, vec![], vec![], vec![], 1.0).is_err());
        assert!(AgentParams::new(15, vec![], vec![0.0; 15], vec![], 1.0).is_err());
        assert!(AgentParams::new(2, vec![(1, 0)], vec![0.0; 2], vec![1.0], 1.0).is_err());
        assert!(AgentParams::new(2, vec![(0, 2)], vec![0.0; 2], vec![1.0], 1.0).is_err());
        assert!(
            AgentParams::new(3, vec![(0, 1), (0, 1)], vec![0.0; 3], vec![1.0, 1.0], 1.0).is_err()
        );
        assert!(AgentParams::new(1, vec![], vec![0.0], vec![], -0.5).is_err());
        assert!(AgentParams::new(1, vec![], vec![f64::NAN], vec![], 1.0).is_err());
    }

    #[test]
    fn single_qubit_diagonal() {
        let h = build_hamiltonian(&single_qubit(0.5, 0.0));
        assert_eq!(h.matrix()[(0, 0)], -0.5);
        assert_eq!(h.matrix()[(1, 1)], 0.5);
        assert_eq!(h.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn single_qubit_transverse() {
        let h = build_hamiltonian(&single_qubit(0.0, 1.0));
        assert_eq!(h.matrix()[(0, 0)], 0.0);
        assert_eq!(h.matrix()[(1, 1)], 0.0);
        assert_eq!(h.matrix()[(0, 1)], -1.0);
        assert_eq!(h.matrix()[(1, 0)], -1.0);
    }

    #[test]
    fn two_qubit_chain_matrix() {
        // Basis order 00, 01, 10, 11 (bit k = qubit k, set bit = down spin).
        let h = build_hamiltonian(&two_chain(1.0, 0.0, 1.0));
        let m = h.matrix();
        assert_eq!(m[(0, 0)], -1.0);
        assert_eq!(m[(1, 1)], 1.0);
        assert_eq!(m[(2, 2)], 1.0);
        assert_eq!(m[(3, 3)], -1.0);
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 3), (2, 3)] {
            assert_eq!(m[(a, b)], -1.0);
            assert_eq!(m[(b, a)], -1.0);
        }
        assert_eq!(m[(0, 3)], 0.0);
        assert_eq!(m[(1, 2)], 0.0);
    }

    #[test]
    fn ground_state_single_qubit_analytic() {
        let gs = ground_state(&build_hamiltonian(&single_qubit(1.0, 1.0)));
        assert_relative_eq!(gs.energy, -(2.0_f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn ground_state_two_qubit_analytic() {
        // E0 = -sqrt(J^2 + 4 Gamma^2) for h = 0.
        let gs = ground_state(&build_hamiltonian(&two_chain(1.0, 0.0, 1.0)));
        assert_relative_eq!(gs.energy, -(5.0_f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn ground_state_diagonal_matrix() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0, 5.0]));
        let gs = ground_state(&DenseHamiltonian::from_matrix(m).unwrap());
        assert_eq!(gs.energy, 1.0);
        assert_relative_eq!(gs.amplitudes[1], 1.0, max_relative = 1e-12);
        for i in [0, 2, 3] {
            assert!(gs.amplitudes[i].abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_normalized_and_below_spectrum() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let params = AgentParams::new(
                n,
                AgentParams::chain_bonds(n),
                (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                (0..n.saturating_sub(1)).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                rng.gen_range(0.0..2.0),
            )
            .unwrap();
            let h = build_hamiltonian(&params);
            let gs = ground_state(&h);
            assert_relative_eq!(gs.amplitudes.norm_squared(), 1.0, epsilon = 1e-12);
            let full = h.matrix().clone().symmetric_eigen();
            for &ev in full.eigenvalues.iter() {
                assert!(gs.energy <= ev + 1e-10);
            }
        }
    }

    #[test]
    fn variational_bound_random_vectors() {
        let mut rng = StdRng::seed_from_u64(11);
        let params = two_chain(0.7, 0.3, 0.9);
        let h = build_hamiltonian(&params);
        let e0 = ground_state(&h).energy;
        for _ in 0..100 {
            let v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            assert!(e0 <= h.expectation(&v) + 1e-12);
        }
    }

    #[test]
    fn summaries_classical_ferromagnet() {
        // Gamma = 0, J = 1, h = 0.5 on both -> classical |up up> ground state.
        let params = two_chain(1.0, 0.5, 0.0);
        let gs = ground_state(&build_hamiltonian(&params));
        let s = measure_summaries(&params, &gs).unwrap();
        assert_relative_eq!(s.polarization, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.bond_corr, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.energy, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn summaries_transverse_qubit() {
        let params = single_qubit(0.0, 1.0);
        let gs = ground_state(&build_hamiltonian(&params));
        let s = measure_summaries(&params, &gs).unwrap();
        assert!(s.polarization.abs() < 1e-12);
        assert_eq!(s.bond_corr, 0.0);
        assert_relative_eq!(s.energy, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn summaries_two_qubit_closed_form() {
        // B = J / sqrt(J^2 + 4 Gamma^2), U = E0 / 2 at h = 0.
        let params = two_chain(1.0, 0.0, 1.0);
        let gs = ground_state(&build_hamiltonian(&params));
        let s = measure_summaries(&params, &gs).unwrap();
        assert!(s.polarization.abs() < 1e-10);
        assert_relative_eq!(s.bond_corr, 1.0 / 5.0_f64.sqrt(), epsilon = 1e-10);
        assert_relative_eq!(s.energy, -(5.0_f64).sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn single_qubit_polarization_law() {
        // <Z> = h / sqrt(h^2 + Gamma^2) across a parameter grid.
        for ih in -4..=4 {
            for ig in 1..=4 {
                let h = ih as f64 * 0.5;
                let gamma = ig as f64 * 0.5;
                let params = single_qubit(h, gamma);
                let gs = ground_state(&build_hamiltonian(&params));
                let s = measure_summaries(&params, &gs).unwrap();
                let expect = h / (h * h + gamma * gamma).sqrt();
                assert_relative_eq!(s.polarization, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mf_hamiltonian_zero_fields_identity() {
        let params = two_chain(0.8, 0.4, 1.2);
        let bare = build_hamiltonian(&params);
        let mf = build_mf_hamiltonian(&params, &FeedbackFields::ZERO);
        assert_eq!(bare.matrix(), mf.matrix());
    }

    #[test]
    fn mf_hamiltonian_polarization_field() {
        let params = single_qubit(0.0, 1.0);
        let fields = FeedbackFields {
            polarization: 2.0,
            ..FeedbackFields::ZERO
        };
        let m = build_mf_hamiltonian(&params, &fields);
        assert_eq!(m.matrix()[(0, 0)], -2.0);
        assert_eq!(m.matrix()[(1, 1)], 2.0);
        assert_eq!(m.matrix()[(0, 1)], -1.0);
        assert_eq!(m.matrix()[(1, 0)], -1.0);
    }

    #[test]
    fn mf_hamiltonian_energy_field_rescales() {
        // phi_u = n makes the prefactor 1 - phi_u/n vanish entirely.
        let params = two_chain(1.0, 0.5, 1.0);
        let fields = FeedbackFields {
            energy: 2.0,
            ..FeedbackFields::ZERO
        };
        let m = build_mf_hamiltonian(&params, &fields);
        assert!(m.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mf_hamiltonian_symmetric_random() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..25 {
            let n = rng.gen_range(1..=4);
            let params = AgentParams::new(
                n,
                AgentParams::chain_bonds(n),
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..n.saturating_sub(1)).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                rng.gen_range(0.0..2.0),
            )
            .unwrap();
            let fields = FeedbackFields {
                polarization: rng.gen_range(-3.0..3.0),
                bond_corr: rng.gen_range(-3.0..3.0),
                energy: rng.gen_range(-3.0..3.0),
            };
            let m = build_mf_hamiltonian(&params, &fields);
            assert_eq!(m.matrix(), &m.matrix().transpose());
        }
    }

    #[test]
    fn operator_consistency_energy() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let params = AgentParams::new(
                n,
                AgentParams::chain_bonds(n),
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                rng.gen_range(0.0..2.0),
            )
            .unwrap();
            let h = build_hamiltonian(&params);
            let fields = FeedbackFields {
                polarization: rng.gen_range(-1.0..1.0),
                bond_corr: rng.gen_range(-1.0..1.0),
                energy: rng.gen_range(-1.0..1.0),
            };
            let gs = ground_state(&build_mf_hamiltonian(&params, &fields));
            let s = measure_summaries(&params, &gs).unwrap();
            let direct = h.expectation(&gs.amplitudes);
            assert_relative_eq!(s.energy * n as f64, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn summary_bounds() {
        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let params = AgentParams::new(
                n,
                AgentParams::chain_bonds(n),
                (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                (0..n.saturating_sub(1)).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                rng.gen_range(0.0..3.0),
            )
            .unwrap();
            let s = bare_summary(&params).unwrap();
            assert!(s.polarization.abs() <= 1.0 + 1e-12);
            assert!(s.bond_corr.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let params = two_chain(1.0, 0.0, 1.0);
        let gs = GroundState {
            energy: 0.0,
            amplitudes: DVector::from_vec(vec![1.0, 0.0]),
        };
        assert!(matches!(
            measure_summaries(&params, &gs),
            Err(AqiaError::DimensionMismatch { .. })
        ));
    }
}
