//! Dense complex linear algebra for small Hermitian systems.
//!
//! Matrices are stored row-major. Hamiltonian entries are frequencies in kHz;
//! the factor 2π that turns them into angular frequencies is applied only when
//! exponentiating, so `exp(-i 2π H dt)` with `dt` in milliseconds is
//! dimensionless.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Elementwise tolerance for `H == H^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖A†A − I‖_F`
    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint() * self).sub(&Self::identity(self.dim)).frobenius_norm()
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, k)]).collect()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.debug_list().entries((0..self.dim).map(|j| self[(i, j)])).finish()?;
        }
        f.write_str("]")
    }
}

/// Instantaneous Hamiltonian in kHz.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() < 2 {
            return Err(Error::invalid(
                "dim",
                format!("must be at least 2, got {}", matrix.dim()),
            ));
        }
        let deviation = matrix.hermiticity_defect();
        if !(deviation <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(matrix))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// `Σ c_k · op_k`, for real coefficients.
    pub fn linear_combination(terms: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::Empty("operator terms"))?;
        let dim = first.dim();
        let mut acc = ComplexMatrix::zeros(dim);
        for &(c, op) in terms {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
            acc = acc.add(&op.0.scale(C64::new(c, 0.0)));
        }
        Self::new(acc)
    }
}

/// `S_z = (|1⟩⟨1| − |0⟩⟨0|)/2` in the ordered basis (|0⟩, |1⟩).
pub fn spin_z() -> HermitianOperator {
    HermitianOperator(ComplexMatrix::from_real_diagonal(&[-0.5, 0.5]))
}

/// `S_x = (|1⟩⟨0| + |0⟩⟨1|)/2`
pub fn spin_x() -> HermitianOperator {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 1)] = C64::new(0.5, 0.0);
    m[(1, 0)] = C64::new(0.5, 0.0);
    HermitianOperator(m)
}

/// `S_y = (−i|1⟩⟨0| + i|0⟩⟨1|)/2`
pub fn spin_y() -> HermitianOperator {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 1)] = C64::new(0.0, 0.5);
    m[(1, 0)] = C64::new(0.0, -0.5);
    HermitianOperator(m)
}

/// Ascending spectrum with orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Largest minus smallest eigenvalue.
    pub fn spread(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0) - self.values.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator(ComplexMatrix);

impl UnitaryOperator {
    /// Wraps a matrix, checking `‖U†U − I‖ ≤ tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = matrix.unitarity_defect();
        if !(defect <= tol) {
            return Err(Error::Contract(format!("unitarity defect {defect:e} exceeds {tol:e}")));
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.0.unitarity_defect()
    }

    /// `self` applied after `earlier`.
    pub fn then_after(&self, earlier: &UnitaryOperator) -> UnitaryOperator {
        UnitaryOperator(&self.0 * &earlier.0)
    }
}

/// Full spectral decomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector is rephased so its
/// largest-magnitude component (first one on ties) is real and positive.
/// Degenerate eigenvalues are ordered by the lexicographic order of their
/// phase-fixed eigenvectors.
pub fn eigendecompose(h: &HermitianOperator) -> EigenSystem {
    let n = h.dim();
    // Work on the exactly Hermitian part.
    let mut a = h.0.add(&h.0.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut col = v.column(k);
            fix_phase(&mut col);
            (a[(k, k)].re, col)
        })
        .collect();

    let tie = 1e-12 * scale.max(1.0);
    pairs.sort_by(|(la, va), (lb, vb)| {
        if (la - lb).abs() <= tie {
            lexicographic(va, vb)
        } else {
            la.total_cmp(lb)
        }
    });

    let mut vectors = ComplexMatrix::zeros(n);
    for (k, (_, col)) in pairs.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            vectors[(i, k)] = z;
        }
    }
    EigenSystem {
        values: pairs.into_iter().map(|(l, _)| l).collect(),
        vectors,
    }
}

fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.dim();

    // A <- A J, with J_pp = J_qq = c, J_pq = s e^{iφ}, J_qp = −s e^{−iφ}.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * phase.conj() * s;
        a[(k, q)] = akp * phase * s + akq * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase.conj() * s;
        v[(k, q)] = vkp * phase * s + vkq * c;
    }
    // A <- J† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * phase.conj() * s + aqk * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}

fn fix_phase(col: &mut [C64]) {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col.iter().position(|z| z.norm() >= max - 1e-12).unwrap_or(0);
    let rot = col[pivot].conj() / col[pivot].norm();
    for z in col.iter_mut() {
        *z *= rot;
    }
    col[pivot].im = 0.0;
}

fn lexicographic(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Exact propagator `exp(−i 2π h dt)` of a constant Hamiltonian over `dt` ms.
pub fn evolve_step(h: &HermitianOperator, dt: f64) -> Result<UnitaryOperator> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid(
            "dt",
            format!("must be finite and non-negative, got {dt}"),
        ));
    }
    Ok(UnitaryOperator(exp_from_eigensystem(&eigendecompose(h), dt)))
}

fn exp_from_eigensystem(es: &EigenSystem, dt: f64) -> ComplexMatrix {
    let n = es.dim();
    let phases: Vec<C64> = es
        .values
        .iter()
        .map(|&l| C64::from_polar(1.0, -2.0 * PI * l * dt))
        .collect();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (0..n)
                .map(|k| es.vectors[(i, k)] * phases[k] * es.vectors[(j, k)].conj())
                .sum();
        }
    }
    out
}

/// A Hamiltonian path `t ↦ H(t)` on `[0, duration]`.
pub trait HamiltonianPath {
    /// Protocol duration in ms.
    fn duration(&self) -> f64;

    fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator>;
}

/// Time-ordered propagator of `path` by the midpoint exponential rule.
///
/// The interval is split into `n_steps` equal slices; each slice contributes
/// `exp(−i 2π H(t_mid) dt)` and later slices multiply from the left.
pub fn propagate<P: HamiltonianPath + ?Sized>(path: &P, n_steps: usize) -> Result<UnitaryOperator> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    let tau = path.duration();
    let dt = tau / n_steps as f64;
    let mut u: Option<ComplexMatrix> = None;
    for k in 0..n_steps {
        let t_mid = ((k as f64 + 0.5) * dt).min(tau);
        let step = evolve_step(&path.hamiltonian_at(t_mid)?, dt)?.0;
        u = Some(match u {
            None => step,
            Some(acc) => &step * &acc,
        });
    }
    Ok(UnitaryOperator(u.expect("n_steps >= 1")))
}
