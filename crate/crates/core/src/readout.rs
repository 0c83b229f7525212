//! Single-shot readout errors and their inversion.
//!
//! A readout model is a column-stochastic confusion matrix `T[i][j] = p(i|j)`:
//! the probability of reporting outcome `i` when the state was `j`. Measured
//! initial populations are `T·p₀` and measured conditional transition
//! probabilities are `T·P_c` (columns indexed by the initial state). The
//! correction inverts both and recombines them into a joint table.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::tpm::JointProbabilityTable;

const STOCHASTIC_TOL: f64 = 1e-12;
const INPUT_TOL: f64 = 1e-10;
const MIN_DET: f64 = 1e-6;
/// Corrected entries may stray this far outside `[0, 1]` before the data are
/// declared inconsistent.
pub const CLAMP_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    t: Vec<Vec<f64>>,
}

impl ReadoutModel {
    /// Builds a model from a row-major matrix `rows[i][j] = p(i|j)`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("readout matrix"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if rows.iter().flatten().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::invalid("readout", "entries must lie in [0, 1]"));
        }
        for j in 0..dim {
            let s: f64 = rows.iter().map(|r| r[j]).sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::invalid("readout", format!("column {j} sums to {s}, expected 1")));
            }
        }
        Ok(Self { t: rows })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            t: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Confusion matrix measured for the nuclear-spin single-shot readout:
    /// 2% and 4.5% misassignment of the two basis states.
    pub fn reference() -> Self {
        Self {
            t: vec![vec![0.980, 0.045], vec![0.020, 0.955]],
        }
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.t
    }

    pub fn determinant(&self) -> f64 {
        lu_solve(&self.t, &[]).map(|(det, _)| det).unwrap_or(0.0)
    }

    /// `T·p` for a probability vector.
    pub fn apply_to_vector(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_vector(p)?;
        Ok(mat_vec(&self.t, p))
    }

    /// `T·P` for a column-stochastic matrix.
    pub fn apply_to_matrix(&self, pc: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_matrix(pc)?;
        let columns = transpose(pc);
        let noisy: Vec<Vec<f64>> = columns.iter().map(|c| mat_vec(&self.t, c)).collect();
        Ok(transpose(&noisy))
    }

    fn check_vector(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            });
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > INPUT_TOL || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "probabilities",
                format!("vector sums to {s}, expected 1"),
            ));
        }
        Ok(())
    }

    fn check_matrix(&self, pc: &[Vec<f64>]) -> Result<()> {
        if pc.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: pc.len(),
            });
        }
        if let Some(r) = pc.iter().find(|r| r.len() != self.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: r.len(),
            });
        }
        for (j, col) in transpose(pc).iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > INPUT_TOL || col.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "probabilities",
                    format!("column {j} sums to {s}, expected 1"),
                ));
            }
        }
        Ok(())
    }
}

/// Corrected joint table plus the total probability moved by clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedJoint {
    /// Indexed (initial, final).
    pub table: JointProbabilityTable,
    /// `Σ |clamped − raw|` before renormalisation.
    pub clamped_mass: f64,
}

/// Inverts the readout model on measured populations `p0_exp` and measured
/// conditional probabilities `pc_exp` (`pc_exp[i][j]`: final `i` given
/// initial `j`), returning `P[j][i] = [T⁻¹P_c]_ij · [T⁻¹p₀]_j`.
pub fn correct_joint(p0_exp: &[f64], pc_exp: &[Vec<f64>], model: &ReadoutModel) -> Result<CorrectedJoint> {
    let dim = model.dim();
    if p0_exp.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p0_exp.len(),
        });
    }
    if pc_exp.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: pc_exp.len(),
        });
    }
    if let Some(r) = pc_exp.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }
    if p0_exp.iter().chain(pc_exp.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("measured", "probabilities must be finite"));
    }

    let mut rhs: Vec<Vec<f64>> = transpose(pc_exp);
    rhs.push(p0_exp.to_vec());
    let (det, mut solved) = lu_solve(&model.t, &rhs).ok_or(Error::SingularModel { det: 0.0 })?;
    if !(det.abs() >= MIN_DET) {
        return Err(Error::SingularModel { det });
    }
    let p0 = solved.pop().expect("p0 column");
    let pc_columns = solved;

    let mut raw = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        for i in 0..dim {
            let v = pc_columns[j][i] * p0[j];
            if !(-CLAMP_WINDOW..=1.0 + CLAMP_WINDOW).contains(&v) {
                return Err(Error::InconsistentData {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            raw[j][i] = v;
        }
    }
    let mut clamped_mass = 0.0;
    for v in raw.iter_mut().flatten() {
        let c = v.clamp(0.0, 1.0);
        clamped_mass += (c - *v).abs();
        *v = c;
    }
    let total: f64 = raw.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::InconsistentData {
            row: 0,
            col: 0,
            value: total,
        });
    }
    for v in raw.iter_mut().flatten() {
        *v /= total;
    }
    Ok(CorrectedJoint {
        table: JointProbabilityTable::from_entries(raw)?,
        clamped_mass,
    })
}

/// Splits a joint table into initial populations and the column-stochastic
/// conditional matrix `pc[i][j] = P(final i | initial j)`. Columns of
/// unpopulated initial states are set to the identity column.
pub fn conditional_split(table: &JointProbabilityTable) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = table.dim();
    let p0 = table.initial_populations();
    let mut pc = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        for i in 0..dim {
            pc[i][j] = if p0[j] > 0.0 {
                table.get(j, i) / p0[j]
            } else if i == j {
                1.0
            } else {
                0.0
            };
        }
    }
    (p0, pc)
}

/// Finite-shot estimates of `T·p₀` and `T·P_c`: `shots` readouts of the
/// initial state, and `shots` readouts per prepared initial state.
pub fn sample_measured<R: Rng + ?Sized>(
    p0: &[f64],
    pc: &[Vec<f64>],
    model: &ReadoutModel,
    shots: u64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be at least 1"));
    }
    let p0_exp = multinomial_frequencies(&model.apply_to_vector(p0)?, shots, rng);
    let noisy = transpose(&model.apply_to_matrix(pc)?);
    let columns: Vec<Vec<f64>> = noisy.iter().map(|c| multinomial_frequencies(c, shots, rng)).collect();
    Ok((p0_exp, transpose(&columns)))
}

fn multinomial_frequencies<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<f64> {
    let mut remaining_n = shots;
    let mut remaining_p = 1.0f64;
    let mut out = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        let count = if k + 1 == probs.len() || p >= remaining_p {
            remaining_n
        } else if p <= 0.0 || remaining_n == 0 {
            0
        } else {
            Binomial::new(remaining_n, (p / remaining_p).clamp(0.0, 1.0))
                .expect("p in [0, 1]")
                .sample(rng)
        };
        remaining_n -= count;
        remaining_p -= p;
        out.push(count as f64 / shots as f64);
    }
    out
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect()
}

/// Gaussian elimination with partial pivoting. Returns the determinant and the
/// solutions `A x = b` for every right-hand side, or `None` when a pivot is
/// exactly zero.
fn lu_solve(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> Option<(f64, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut b: Vec<Vec<f64>> = rhs.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[pivot][col] == 0.0 {
            return None;
        }
        if pivot != col {
            m.swap(pivot, col);
            for r in b.iter_mut() {
                r.swap(pivot, col);
            }
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            for r in b.iter_mut() {
                r[row] -= f * r[col];
            }
        }
    }
    for r in b.iter_mut() {
        for row in (0..n).rev() {
            let s: f64 = ((row + 1)..n).map(|k| m[row][k] * r[k]).sum();
            r[row] = (r[row] - s) / m[row][row];
        }
    }
    Some((det, b))
}
