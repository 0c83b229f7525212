//! Two-point-measurement work statistics.
//!
//! A trajectory starts in eigenstate `m` of `H(0)` (thermal weight `p⁰_m`) and
//! ends in eigenstate `n` of `H(τ)` with probability `|⟨Ẽ_n|U|E_m⟩|²`. Its work
//! is `Ẽ_n − E_m` in kHz, so with `β` in 1/kHz the product `βW` is
//! dimensionless.

use rand::Rng;
use rand_distr::StandardNormal;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, EigenSystem, UnitaryOperator};

/// Work values closer than this (kHz) are merged into a single atom.
pub const WORK_MERGE_TOL: f64 = 1e-9;

const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub beta: f64,
    pub populations: Vec<f64>,
}

/// Gibbs populations `e^{−βE_m}/Σ_k e^{−βE_k}`.
pub fn thermal_populations(spectrum: &[f64], beta: f64) -> Result<ThermalState> {
    if spectrum.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    if spectrum.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("spectrum", "energies must be finite"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("must be finite and non-negative, got {beta}"),
        ));
    }
    let e_min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = spectrum.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(ThermalState {
        beta,
        populations: weights.into_iter().map(|w| w / total).collect(),
    })
}

/// `ln Σ_k e^{−βE_k}` without overflow.
pub fn log_partition(spectrum: &[f64], beta: f64) -> f64 {
    let e_min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    -beta * e_min + spectrum.iter().map(|e| (-beta * (e - e_min)).exp()).sum::<f64>().ln()
}

/// Row-stochastic matrix `p[m][n] = p(m → n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(Vec<Vec<f64>>);

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("transition matrix"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        Ok(Self(rows))
    }

    pub fn identity(dim: usize) -> Self {
        Self(
            (0..dim)
                .map(|m| (0..dim).map(|n| if m == n { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.0[m][n]
    }

    /// Worst deviation of a row sum from one.
    pub fn row_defect(&self) -> f64 {
        self.0
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Worst deviation of any row or column sum from one.
    pub fn doubly_stochastic_defect(&self) -> f64 {
        let dim = self.dim();
        let col = (0..dim)
            .map(|n| (self.0.iter().map(|r| r[n]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        col.max(self.row_defect())
    }

    /// Largest `p(m → n)` with `m ≠ n`.
    pub fn max_off_diagonal(&self) -> f64 {
        let dim = self.dim();
        (0..dim)
            .flat_map(|m| (0..dim).filter(move |&n| n != m).map(move |n| (m, n)))
            .map(|(m, n)| self.0[m][n])
            .fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        (0..dim).map(|n| (0..dim).map(|m| self.0[m][n]).collect()).collect()
    }
}

/// `p(m → n) = |⟨Ẽ_n|U|E_m⟩|²` between the eigenbases of `H(0)` and `H(τ)`.
pub fn transition_probabilities(
    u: &UnitaryOperator,
    basis0: &EigenSystem,
    basis_tau: &EigenSystem,
) -> Result<TransitionMatrix> {
    let dim = u.dim();
    for found in [basis0.dim(), basis_tau.dim()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    // Columns of `overlap` are U|E_m⟩ expressed in the final eigenbasis.
    let overlap = &(&basis_tau.vectors.adjoint() * u.matrix()) * &basis0.vectors;
    let rows = (0..dim)
        .map(|m| (0..dim).map(|n| overlap[(n, m)].norm_sqr()).collect())
        .collect();
    TransitionMatrix::new(rows)
}

/// `P[m][n] = p⁰_m · p(m → n)`, indexed (initial, final).
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbabilityTable {
    entries: Vec<Vec<f64>>,
}

impl JointProbabilityTable {
    pub fn new(state: &ThermalState, trans: &TransitionMatrix) -> Result<Self> {
        let dim = trans.dim();
        if state.populations.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: state.populations.len(),
            });
        }
        let entries = state
            .populations
            .iter()
            .zip(trans.rows())
            .map(|(p, row)| row.iter().map(|t| p * t).collect())
            .collect();
        Self::from_entries(entries)
    }

    /// Validates a square table: entries above `−1e-12` (small negatives are
    /// zeroed) and total mass one within `1e-10`.
    pub fn from_entries(mut entries: Vec<Vec<f64>>) -> Result<Self> {
        let dim = entries.len();
        if dim == 0 {
            return Err(Error::Empty("joint probability table"));
        }
        for (m, row) in entries.iter_mut().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (n, v) in row.iter_mut().enumerate() {
                if !v.is_finite() || *v < -NEGATIVE_CLAMP {
                    return Err(Error::invalid(
                        "joint",
                        format!("entry ({m}, {n}) = {v} is not a probability"),
                    ));
                }
                *v = v.max(0.0);
            }
        }
        let total: f64 = entries.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "joint",
                format!("total probability {total} differs from 1"),
            ));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m][n]
    }

    pub fn initial_populations(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    /// Flattened `(m, n, P_mn)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(m, row)| row.iter().enumerate().map(move |(n, &p)| (m, n, p)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkAtom {
    /// kHz
    pub work: f64,
    pub prob: f64,
}

/// Discrete work distribution, atoms sorted by work.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    atoms: Vec<WorkAtom>,
}

impl WorkDistribution {
    /// Merges atoms whose work values agree within [`WORK_MERGE_TOL`] and
    /// drops atoms that carry no probability.
    pub fn from_atoms(mut raw: Vec<WorkAtom>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("work distribution"));
        }
        let total: f64 = raw.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "work distribution",
                format!("probabilities sum to {total}"),
            ));
        }
        raw.sort_by(|a, b| a.work.total_cmp(&b.work));
        let mut atoms: Vec<WorkAtom> = Vec::with_capacity(raw.len());
        let mut anchor = f64::NAN;
        for atom in raw {
            match atoms.last_mut() {
                Some(last) if (atom.work - anchor).abs() <= WORK_MERGE_TOL => last.prob += atom.prob,
                _ => {
                    anchor = atom.work;
                    atoms.push(atom);
                }
            }
        }
        atoms.retain(|a| a.prob > 0.0);
        Ok(Self { atoms })
    }

    pub fn from_joint(table: &JointProbabilityTable, spectrum0: &[f64], spectrum_tau: &[f64]) -> Result<Self> {
        let dim = table.dim();
        for found in [spectrum0.len(), spectrum_tau.len()] {
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
        }
        Self::from_atoms(
            table
                .cells()
                .map(|(m, n, prob)| WorkAtom {
                    work: spectrum_tau[n] - spectrum0[m],
                    prob,
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[WorkAtom] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }

    pub fn mean_work(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob * a.work).sum()
    }
}

/// `P(W) = Σ_{m,n} p⁰_m p(m→n) δ(W − (Ẽ_n − E_m))`
pub fn work_distribution(
    state: &ThermalState,
    trans: &TransitionMatrix,
    spectrum0: &[f64],
    spectrum_tau: &[f64],
) -> Result<WorkDistribution> {
    if trans.row_defect() > 1e-9 {
        return Err(Error::invalid(
            "transitions",
            format!("rows not stochastic (defect {:e})", trans.row_defect()),
        ));
    }
    let table = JointProbabilityTable::new(state, trans)?;
    WorkDistribution::from_joint(&table, spectrum0, spectrum_tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpWorkMoments {
    /// `⟨e^{−βW}⟩`
    pub mean: f64,
    /// `⟨e^{−2βW}⟩ − ⟨e^{−βW}⟩²`
    pub variance: f64,
}

pub fn exp_work_moments(wd: &WorkDistribution, beta: f64) -> ExpWorkMoments {
    let (first, second) = wd.atoms.iter().fold((0.0, 0.0), |(s1, s2), a| {
        let e = (-beta * a.work).exp();
        (s1 + a.prob * e, s2 + a.prob * e * e)
    });
    let mut variance = second - first * first;
    if (-NEGATIVE_CLAMP..0.0).contains(&variance) {
        variance = 0.0;
    }
    ExpWorkMoments { mean: first, variance }
}

/// `ΔF = −β⁻¹ ln(Z_τ/Z_0)` in kHz.
pub fn free_energy_difference(spectrum0: &[f64], spectrum_tau: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("must be positive and finite, got {beta}"),
        ));
    }
    if spectrum0.is_empty() || spectrum_tau.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    Ok(-(log_partition(spectrum_tau, beta) - log_partition(spectrum0, beta)) / beta)
}

/// `|⟨e^{−βW}⟩ − e^{−βΔF}|`
pub fn jarzynski_residual(wd: &WorkDistribution, beta: f64, spectrum0: &[f64], spectrum_tau: &[f64]) -> Result<f64> {
    let df = free_energy_difference(spectrum0, spectrum_tau, beta)?;
    Ok((exp_work_moments(wd, beta).mean - (-beta * df).exp()).abs())
}

/// Haar-distributed unitary: Gram–Schmidt on a complex Gaussian matrix.
///
/// Modified Gram–Schmidt leaves the implied triangular factor with a positive
/// real diagonal, which is the phase convention that makes the result Haar.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    for k in 0..dim {
        for j in 0..k {
            let proj: C64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a.conj() * b).sum();
            let (head, tail) = cols.split_at_mut(k);
            for (x, q) in tail[0].iter_mut().zip(&head[j]) {
                *x -= proj * q;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[k].iter_mut() {
            *x /= norm;
        }
    }
    let mut m = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    UnitaryOperator::new(m, 1e-10).expect("Gram-Schmidt output is unitary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigendecompose;
    use crate::protocol::{reference_z, DriveKind, DriveProtocol};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn endpoint_bases() -> (EigenSystem, EigenSystem) {
        let p = DriveProtocol::reference(0.05, DriveKind::Bare).unwrap();
        let (h0, h1) = p.endpoint_hamiltonians().unwrap();
        (eigendecompose(&h0), eigendecompose(&h1))
    }

    // Brute-force oracles written directly from the two-level closed forms.
    fn oracle_moments(pops: [f64; 2], trans: [[f64; 2]; 2], e0: [f64; 2], e1: [f64; 2], beta: f64) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for m in 0..2 {
            for n in 0..2 {
                let w = e1[n] - e0[m];
                s1 += pops[m] * trans[m][n] * (-beta * w).exp();
                s2 += pops[m] * trans[m][n] * (-2.0 * beta * w).exp();
            }
        }
        (s1, s2 - s1 * s1)
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let ts = thermal_populations(&[-3.0, 0.5, 7.0], 0.0).unwrap();
        assert!(ts.populations.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert!(thermal_populations(&[0.0, 1.0], -0.1).is_err());
        assert!(thermal_populations(&[0.0, f64::NAN], 0.1).is_err());
    }

    #[test]
    fn reference_thermal_populations() {
        let z = reference_z();
        for (bz, ground) in [(0.6, 0.6457), (0.8, 0.6900)] {
            let ts = thermal_populations(&[-z / 2.0, z / 2.0], bz / z).unwrap();
            let closed = (bz / 2.0f64).exp() / (2.0 * (bz / 2.0f64).cosh());
            assert!((ts.populations[0] - closed).abs() < 1e-15);
            assert!((ts.populations[0] - ground).abs() < 1e-4);
            assert!((ts.populations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_beta_does_not_overflow() {
        let ts = thermal_populations(&[-1e6, 1e6], 10.0).unwrap();
        assert_eq!(ts.populations, vec![1.0, 0.0]);
    }

    #[test]
    fn identity_evolution_in_same_basis() {
        let (b0, _) = endpoint_bases();
        let t = transition_probabilities(&UnitaryOperator::identity(2), &b0, &b0).unwrap();
        assert_eq!(t, TransitionMatrix::identity(2));
    }

    #[test]
    fn sudden_quench_overlaps() {
        let (b0, b1) = endpoint_bases();
        let t = transition_probabilities(&UnitaryOperator::identity(2), &b0, &b1).unwrap();
        // cos²(θ_τ/2) with θ_τ = π/3.
        let diag = (std::f64::consts::PI / 6.0).cos().powi(2);
        assert!((diag - 0.75).abs() < 1e-15);
        for m in 0..2 {
            for n in 0..2 {
                let expect = if m == n { 0.75 } else { 0.25 };
                assert!((t.get(m, n) - expect).abs() < 1e-14);
            }
        }
        assert!(t.doubly_stochastic_defect() < 1e-14);
    }

    #[test]
    fn transition_dimension_mismatch() {
        let (b0, b1) = endpoint_bases();
        assert!(matches!(
            transition_probabilities(&UnitaryOperator::identity(3), &b0, &b1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adiabatic_and_sudden_work_atoms() {
        let z = reference_z();
        let (b0, b1) = endpoint_bases();
        let ts = thermal_populations(&b0.values, 0.6 / z).unwrap();

        let adiabatic = work_distribution(&ts, &TransitionMatrix::identity(2), &b0.values, &b1.values).unwrap();
        assert_eq!(adiabatic.atoms().len(), 2);
        assert!((adiabatic.atoms()[0].work + z / 2.0).abs() < 1e-12);
        assert!((adiabatic.atoms()[1].work - z / 2.0).abs() < 1e-12);
        assert!((adiabatic.atoms()[0].prob - ts.populations[0]).abs() < 1e-15);
        assert!((adiabatic.atoms()[0].work + 1.4434).abs() < 1e-4);

        let sudden_t = transition_probabilities(&UnitaryOperator::identity(2), &b0, &b1).unwrap();
        let sudden = work_distribution(&ts, &sudden_t, &b0.values, &b1.values).unwrap();
        let works: Vec<f64> = sudden.atoms().iter().map(|a| a.work / z).collect();
        for (w, e) in works.iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert!((w - e).abs() < 1e-12);
        }
        assert!((sudden.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_work_values_merge() {
        let ts = ThermalState {
            beta: 1.0,
            populations: vec![0.5, 0.5],
        };
        let t = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let wd = work_distribution(&ts, &t, &[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(wd.atoms().len(), 3);
        assert!((wd.atoms()[1].prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn work_distribution_rejects_bad_shapes() {
        let ts = ThermalState {
            beta: 1.0,
            populations: vec![0.5, 0.5],
        };
        let t = TransitionMatrix::identity(2);
        assert!(work_distribution(&ts, &t, &[0.0, 1.0, 2.0], &[0.0, 1.0]).is_err());
        let bad = TransitionMatrix::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).unwrap();
        assert!(work_distribution(&ts, &bad, &[0.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn single_atom_moments() {
        let wd = WorkDistribution::from_atoms(vec![WorkAtom { work: 0.7, prob: 1.0 }]).unwrap();
        let m = exp_work_moments(&wd, 1.3);
        assert!((m.mean - (-1.3f64 * 0.7).exp()).abs() < 1e-15);
        assert_eq!(m.variance, 0.0);
    }

    #[test]
    fn reference_moments_against_brute_force() {
        let z = reference_z();
        let e0 = [-z / 2.0, z / 2.0];
        let e1 = [-z, z];
        let (b0, b1) = endpoint_bases();
        let sudden_t = transition_probabilities(&UnitaryOperator::identity(2), &b0, &b1).unwrap();
        for (bz, mean_ref, adiabatic_ref, sudden_ref) in [(0.6, 1.1341, 0.0849, 0.3047), (0.8, 1.2371, 0.1444, 0.5957)]
        {
            let beta = bz / z;
            let ts = thermal_populations(&b0.values, beta).unwrap();
            let pops = [ts.populations[0], ts.populations[1]];
            let (oa_mean, oa_var) = oracle_moments(pops, [[1.0, 0.0], [0.0, 1.0]], e0, e1, beta);
            let (os_mean, os_var) = oracle_moments(pops, [[0.75, 0.25], [0.25, 0.75]], e0, e1, beta);
            assert!((oa_mean - bz.cosh() / (bz / 2.0).cosh()).abs() < 1e-14);
            assert!((os_mean - oa_mean).abs() < 1e-14);
            assert!((oa_mean - mean_ref).abs() < 1e-4);
            assert!((oa_var - adiabatic_ref).abs() < 1e-4);
            assert!((os_var - sudden_ref).abs() < 1e-4);

            let a = exp_work_moments(
                &work_distribution(&ts, &TransitionMatrix::identity(2), &b0.values, &b1.values).unwrap(),
                beta,
            );
            let s = exp_work_moments(
                &work_distribution(&ts, &sudden_t, &b0.values, &b1.values).unwrap(),
                beta,
            );
            assert!((a.mean - oa_mean).abs() < 1e-13 && (a.variance - oa_var).abs() < 1e-13);
            assert!((s.mean - os_mean).abs() < 1e-13 && (s.variance - os_var).abs() < 1e-13);
        }
    }

    #[test]
    fn free_energy_values() {
        let z = reference_z();
        let e0 = [-z / 2.0, z / 2.0];
        let e1 = [-z, z];
        assert_eq!(free_energy_difference(&e0, &e0, 0.3).unwrap(), 0.0);
        for (bz, expect) in [(0.6, 1.1341), (0.8, 1.2371)] {
            let beta = bz / z;
            let df = free_energy_difference(&e0, &e1, beta).unwrap();
            assert!(((-beta * df).exp() - expect).abs() < 1e-4);
            assert!(((-beta * df).exp() - bz.cosh() / (bz / 2.0).cosh()).abs() < 1e-14);
        }
        assert!(free_energy_difference(&e0, &e1, 0.0).is_err());
    }

    #[test]
    fn jarzynski_residual_closed_forms() {
        let (b0, b1) = endpoint_bases();
        let beta = 0.6 / reference_z();
        let ts = thermal_populations(&b0.values, beta).unwrap();
        let sudden_t = transition_probabilities(&UnitaryOperator::identity(2), &b0, &b1).unwrap();
        for t in [TransitionMatrix::identity(2), sudden_t] {
            let wd = work_distribution(&ts, &t, &b0.values, &b1.values).unwrap();
            assert!(jarzynski_residual(&wd, beta, &b0.values, &b1.values).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn haar_unitaries_are_unitary_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3, 5] {
            let u = haar_unitary(dim, &mut a);
            assert!(u.unitarity_defect() < 1e-12);
            assert_eq!(u, haar_unitary(dim, &mut b));
        }
    }

    #[test]
    fn haar_first_moment() {
        // E|U_00|² = 1/d for Haar measure.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| haar_unitary(2, &mut rng).matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        // Var |U_00|² = 1/12 for d = 2; 5 standard errors.
        assert!((mean - 0.5).abs() < 5.0 * (1.0f64 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn joint_table_validation() {
        assert!(JointProbabilityTable::from_entries(vec![vec![0.5, 0.0], vec![0.0, 0.4]]).is_err());
        assert!(JointProbabilityTable::from_entries(vec![vec![0.5, -1e-3], vec![0.0, 0.501]]).is_err());
        let t = JointProbabilityTable::from_entries(vec![vec![0.5, -1e-13], vec![0.0, 0.5]]).unwrap();
        assert_eq!(t.get(0, 1), 0.0);
        assert!(JointProbabilityTable::from_entries(vec![vec![1.0, 0.0]]).is_err());
    }
}
