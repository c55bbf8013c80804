//! Finite-dimensional Hilbert-space primitives.
//!
//! Single-system states and projectors live in `C^d`; ensembles of `N`
//! copies live in the tensor power of dimension `d^N`. Tensor factors are
//! ordered with the first copy as the most significant index, the same
//! convention as [`nalgebra::Matrix::kronecker`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance on the squared norm of a state.
pub const TOL_NORM: f64 = 1e-12;
/// Entry-wise tolerance for operator identities.
pub const TOL_OP: f64 = 1e-10;
/// Largest dimension for tensor-product states.
pub const MAX_DENSE_DIM: usize = 1 << 16;
/// Largest dimension for dense operators on the tensor space.
pub const MAX_OPERATOR_DIM: usize = 1 << 13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `d^n`, refused when it exceeds `cap`.
pub fn tensor_dim(d: usize, n: usize, cap: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if n == 0 || d == 0 || dim > cap as u128 {
        return Err(Error::SizeLimit { dim, cap });
    }
    Ok(dim as usize)
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn max_abs_diff_vec(a: &CVector, b: &CVector) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// A unit vector in `C^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps `amplitudes`, which must already have unit norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("state amplitudes"));
        }
        let amplitudes = CVector::from_vec(amplitudes);
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > TOL_NORM {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(StateVector { amplitudes })
    }

    /// Real amplitudes, already normalized.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty("state amplitudes"));
        }
        let v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        Ok(StateVector {
            amplitudes: v.unscale(norm),
        })
    }

    /// Computational basis vector `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(StateVector { amplitudes: v })
    }

    pub(crate) fn from_unchecked(amplitudes: CVector) -> Self {
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Largest amplitude-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        max_abs_diff_vec(&self.amplitudes, &other.amplitudes)
    }
}

/// An orthogonal projector on `C^d`: Hermitian and idempotent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectorRepr", into = "ProjectorRepr")]
pub struct Projector {
    matrix: CMatrix,
    rank: usize,
}

impl Projector {
    /// Validates `matrix` as a projector and records its rank.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || !matrix.is_square() {
            return Err(Error::InvalidProjector(format!(
                "matrix must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = hermitian_deviation(&matrix);
        if herm > TOL_OP {
            return Err(Error::InvalidProjector(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let idem = max_abs_diff(&(&matrix * &matrix), &matrix);
        if idem > TOL_OP {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (deviation {idem:e})"
            )));
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > TOL_OP {
            return Err(Error::InvalidProjector(format!(
                "trace {trace} is not an integer"
            )));
        }
        Ok(Projector {
            matrix,
            rank: rank as usize,
        })
    }

    /// Diagonal projector with ones where `mask` is set.
    pub fn diagonal(mask: &[bool]) -> Result<Self> {
        if mask.is_empty() {
            return Err(Error::Empty("projector diagonal"));
        }
        let diag =
            CVector::from_iterator(mask.len(), mask.iter().map(|&b| if b { ONE } else { ZERO }));
        Ok(Projector {
            matrix: CMatrix::from_diagonal(&diag),
            rank: mask.iter().filter(|&&b| b).count(),
        })
    }

    /// `|v⟩⟨v|`
    pub fn rank_one(v: &StateVector) -> Self {
        let a = v.amplitudes();
        Projector {
            matrix: a * a.adjoint(),
            rank: 1,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Projector {
            matrix: CMatrix::identity(dim, dim),
            rank: dim,
        }
    }

    pub(crate) fn from_unchecked(matrix: CMatrix, rank: usize) -> Self {
        Projector { matrix, rank }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `P|ψ⟩` as a raw (unnormalized) vector.
    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    /// Largest deviation from `P = P†` and `P² = P`.
    pub fn defect(&self) -> f64 {
        hermitian_deviation(&self.matrix)
            .max(max_abs_diff(&(&self.matrix * &self.matrix), &self.matrix))
    }
}

/// A square matrix on the `N`-fold tensor power of `C^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct DenseOperator {
    matrix: CMatrix,
    n_copies: usize,
    single_dim: usize,
}

impl DenseOperator {
    /// Zero operator on `(C^d)^{⊗n}`.
    pub fn zeros(single_dim: usize, n_copies: usize) -> Result<Self> {
        let dim = tensor_dim(single_dim, n_copies, MAX_OPERATOR_DIM)?;
        Ok(DenseOperator {
            matrix: CMatrix::zeros(dim, dim),
            n_copies,
            single_dim,
        })
    }

    pub fn identity(single_dim: usize, n_copies: usize) -> Result<Self> {
        let dim = tensor_dim(single_dim, n_copies, MAX_OPERATOR_DIM)?;
        Ok(DenseOperator {
            matrix: CMatrix::identity(dim, dim),
            n_copies,
            single_dim,
        })
    }

    /// Wraps `matrix`, which must have side `single_dim^n_copies`.
    pub fn from_matrix(matrix: CMatrix, single_dim: usize, n_copies: usize) -> Result<Self> {
        let dim = tensor_dim(single_dim, n_copies, MAX_OPERATOR_DIM)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(DenseOperator {
            matrix,
            n_copies,
            single_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn single_dim(&self) -> usize {
        self.single_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    /// `⟨ψ|A|ψ⟩`, rejected when the imaginary part reaches [`TOL_OP`].
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        let value = psi.amplitudes().dotc(&self.apply(psi)?);
        real_part(value)
    }

    /// Adds `weight · (factors[0] ⊗ factors[1] ⊗ … )` into this operator.
    ///
    /// Every factor must be `d × d`, and there must be exactly `n_copies`
    /// of them. Zero entries of the factors are skipped, so sparse factors
    /// such as diagonal projectors cost far less than `D²`.
    pub fn accumulate_kron(&mut self, factors: &[&CMatrix], weight: f64) -> Result<()> {
        if factors.len() != self.n_copies {
            return Err(Error::DimensionMismatch {
                expected: self.n_copies,
                found: factors.len(),
            });
        }
        for f in factors {
            if f.nrows() != self.single_dim || f.ncols() != self.single_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.single_dim,
                    found: f.nrows().max(f.ncols()),
                });
            }
        }
        kron_into(
            &mut self.matrix,
            factors,
            0,
            0,
            0,
            Complex64::new(weight, 0.0),
        );
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }
}

fn kron_into(
    acc: &mut CMatrix,
    factors: &[&CMatrix],
    level: usize,
    row: usize,
    col: usize,
    scalar: Complex64,
) {
    let Some(factor) = factors.get(level) else {
        acc[(row, col)] += scalar;
        return;
    };
    let d = factor.nrows();
    for i in 0..d {
        for j in 0..d {
            let entry = factor[(i, j)];
            if entry == ZERO {
                continue;
            }
            kron_into(
                acc,
                factors,
                level + 1,
                row * d + i,
                col * d + j,
                scalar * entry,
            );
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn real_part(value: Complex64) -> Result<f64> {
    if value.im.abs() >= TOL_OP {
        Err(Error::ComplexExpectation { imag: value.im })
    } else {
        Ok(value.re)
    }
}

/// `⟨ψ|P|ψ⟩`, clamped to `[0, 1]`.
pub fn probability(psi: &StateVector, p: &Projector) -> Result<f64> {
    let projected = p.apply(psi)?;
    let value = real_part(psi.amplitudes().dotc(&projected))?;
    Ok(value.clamp(0.0, 1.0))
}

/// The opposite event `P⊥ = I − P`.
pub fn orthocomplement(p: &Projector) -> Projector {
    let d = p.dim();
    Projector::from_unchecked(CMatrix::identity(d, d) - p.matrix(), d - p.rank())
}

/// The four conditions that are equivalent for a unit vector and a projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EeLinkReport {
    /// `⟨ψ|P|ψ⟩ = 1`
    pub certain: bool,
    /// `⟨ψ|P⊥|ψ⟩ = 0`
    pub complement_improbable: bool,
    /// `‖P⊥|ψ⟩‖ = 0`
    pub complement_annihilates: bool,
    /// `P|ψ⟩ = |ψ⟩`
    pub eigenstate: bool,
}

impl EeLinkReport {
    /// True when all four conditions agree.
    pub fn consistent(&self) -> bool {
        let all = [
            self.certain,
            self.complement_improbable,
            self.complement_annihilates,
            self.eigenstate,
        ];
        all.iter().all(|&b| b) || all.iter().all(|&b| !b)
    }

    pub fn holds(&self) -> bool {
        self.certain && self.consistent()
    }
}

pub fn ee_link_check(psi: &StateVector, p: &Projector) -> Result<EeLinkReport> {
    check_dim(p.dim(), psi.dim())?;
    let perp = orthocomplement(p);
    let p_psi = p.apply(psi)?;
    let perp_psi = perp.apply(psi)?;
    let expect_p = psi.amplitudes().dotc(&p_psi);
    let expect_perp = psi.amplitudes().dotc(&perp_psi);
    Ok(EeLinkReport {
        certain: (expect_p - ONE).norm() < TOL_OP,
        complement_improbable: expect_perp.norm() < TOL_OP,
        // ‖P⊥ψ‖² = ⟨ψ|P⊥|ψ⟩, so the norm is compared on the same squared scale.
        complement_annihilates: perp_psi.norm_squared() < TOL_OP,
        eigenstate: (&p_psi - psi.amplitudes()).norm_squared() < TOL_OP,
    })
}

/// Ordered tensor product `f₁ ⊗ f₂ ⊗ … ⊗ f_N`.
pub fn product_state(factors: &[StateVector]) -> Result<StateVector> {
    let first = factors.first().ok_or(Error::Empty("product factors"))?;
    let d = first.dim();
    for f in factors {
        check_dim(d, f.dim())?;
    }
    let dim = tensor_dim(d, factors.len(), MAX_DENSE_DIM)?;
    let mut out: Vec<Complex64> = Vec::with_capacity(dim);
    out.push(ONE);
    for f in factors {
        out = out
            .iter()
            .flat_map(|&a| f.amplitudes().iter().map(move |&b| a * b))
            .collect();
    }
    Ok(StateVector::from_unchecked(CVector::from_vec(out)))
}

/// `|Ψ⟩_N = |ψ⟩^{⊗N}`
pub fn tensor_power_state(psi: &StateVector, n: usize) -> Result<StateVector> {
    tensor_dim(psi.dim(), n, MAX_DENSE_DIM)?;
    product_state(&vec![psi.clone(); n])
}

// JSON layouts: complex numbers are `[re, im]`, matrices are row-major.

#[derive(Serialize, Deserialize)]
struct StateRepr {
    dim: usize,
    amplitudes: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ProjectorRepr {
    dim: usize,
    rank: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    single_dim: usize,
    n_copies: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn to_pair(c: &Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn rows_of(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter()
        .map(|row| row.iter().map(to_pair).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    }))
}

impl From<StateVector> for StateRepr {
    fn from(s: StateVector) -> Self {
        StateRepr {
            dim: s.dim(),
            amplitudes: s.amplitudes.iter().map(to_pair).collect(),
        }
    }
}

impl TryFrom<StateRepr> for StateVector {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        check_dim(r.dim, r.amplitudes.len())?;
        StateVector::new(
            r.amplitudes
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl From<Projector> for ProjectorRepr {
    fn from(p: Projector) -> Self {
        ProjectorRepr {
            dim: p.dim(),
            rank: p.rank,
            matrix: rows_of(&p.matrix),
        }
    }
}

impl TryFrom<ProjectorRepr> for Projector {
    type Error = Error;

    fn try_from(r: ProjectorRepr) -> Result<Self> {
        let m = matrix_from_rows(&r.matrix)?;
        check_dim(r.dim, m.nrows())?;
        let p = Projector::new(m)?;
        if p.rank != r.rank {
            return Err(Error::InvalidProjector(format!(
                "declared rank {} but trace gives {}",
                r.rank, p.rank
            )));
        }
        Ok(p)
    }
}

impl From<DenseOperator> for OperatorRepr {
    fn from(op: DenseOperator) -> Self {
        OperatorRepr {
            single_dim: op.single_dim,
            n_copies: op.n_copies,
            matrix: rows_of(&op.matrix),
        }
    }
}

impl TryFrom<OperatorRepr> for DenseOperator {
    type Error = Error;

    fn try_from(r: OperatorRepr) -> Result<Self> {
        let m = matrix_from_rows(&r.matrix)?;
        DenseOperator::from_matrix(m, r.single_dim, r.n_copies)
    }
}
