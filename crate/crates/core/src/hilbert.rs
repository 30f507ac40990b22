//! Truncated composite Hilbert space and the elementary operators every model
//! builder consumes: bosonic ladder operators, Pauli matrices, tensor-product
//! embedding, and operator exponentials.
//!
//! # Basis convention
//!
//! One fixed ordering is used everywhere: **spins first, boson last**, with
//! spin 0 slowest. The spin basis is `{|g>, |e>}` with `sigma_z |e> = +|e>`,
//! so `|g>` is index 0 and `|e>` is index 1 within each spin factor. A basis
//! state is addressed as
//!
//! ```text
//! index = spin_bits * (n_max + 1) + n
//! ```
//!
//! where bit `(n_spins - 1 - k)` of `spin_bits` is 1 iff spin `k` is excited,
//! and `n` is the Fock index. The boson space is hard-truncated at `n_max`:
//! `a_dag |n_max> = 0`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest dimension stored densely; composite spaces above this threshold
/// switch to compressed sparse rows.
pub const DENSE_LIMIT: usize = 4096;

/// Tolerance for hermiticity assertions on tagged operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance for unitarity assertions on tagged operators.
pub const UNITARY_TOL: f64 = 1e-10;

/// Shape of the truncated spin (x) boson product space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    n_spins: usize,
    n_max: usize,
}

impl BasisSpec {
    /// A basis with `n_spins` two-level systems and Fock states `0..=n_max`.
    pub fn new(n_spins: usize, n_max: usize) -> Result<Self> {
        if n_spins < 1 {
            return Err(Error::invalid("basis needs at least one spin"));
        }
        if n_max < 1 {
            return Err(Error::invalid("Fock truncation n_max must be >= 1"));
        }
        if n_spins > 24 {
            return Err(Error::invalid(format!(
                "{n_spins} spins exceeds the supported range"
            )));
        }
        let spec = BasisSpec { n_spins, n_max };
        spec.dim(); // would overflow here rather than later
        Ok(spec)
    }

    /// Single spin plus boson, the layout used by every single-spin model.
    pub fn single_spin(n_max: usize) -> Result<Self> {
        Self::new(1, n_max)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn boson_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Total dimension `2^n_spins * (n_max + 1)`.
    pub fn dim(&self) -> usize {
        self.spin_dim()
            .checked_mul(self.boson_dim())
            .expect("basis dimension overflows usize")
    }

    /// Flat index of the product state `|spin_bits> |n>`.
    pub fn index(&self, spin_bits: usize, n: usize) -> usize {
        debug_assert!(spin_bits < self.spin_dim());
        debug_assert!(n <= self.n_max);
        spin_bits * self.boson_dim() + n
    }

    /// Inverse of [`BasisSpec::index`].
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.boson_dim(), index % self.boson_dim())
    }

    /// Whether spin `site` is excited in the configuration `spin_bits`.
    pub fn spin_excited(&self, spin_bits: usize, site: usize) -> bool {
        debug_assert!(site < self.n_spins);
        (spin_bits >> (self.n_spins - 1 - site)) & 1 == 1
    }
}

/// Complex amplitude vector over a [`BasisSpec`] layout.
#[derive(Clone, Debug)]
pub struct StateVector {
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Array1<C64>) -> Self {
        StateVector { amplitudes }
    }

    /// The product basis state `|spin_bits> |n>`.
    pub fn basis_state(basis: &BasisSpec, spin_bits: usize, n: usize) -> Result<Self> {
        if spin_bits >= basis.spin_dim() || n > basis.n_max() {
            return Err(Error::invalid(format!(
                "basis state ({spin_bits}, {n}) outside basis of {} spins, n_max {}",
                basis.n_spins(),
                basis.n_max()
            )));
        }
        let mut amplitudes = Array1::zeros(basis.dim());
        amplitudes[basis.index(spin_bits, n)] = C64::new(1.0, 0.0);
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::dim_mismatch("inner product", self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Rescale to unit norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        self.amplitudes.mapv_inplace(|a| a / n);
        Ok(self)
    }

    /// Linear combination of states of equal dimension.
    pub fn superposition(terms: &[(C64, &StateVector)]) -> Result<Self> {
        let dim = terms
            .first()
            .ok_or_else(|| Error::invalid("superposition of no terms"))?
            .1
            .dim();
        let mut amplitudes = Array1::zeros(dim);
        for (coeff, state) in terms {
            if state.dim() != dim {
                return Err(Error::dim_mismatch("superposition", dim, state.dim()));
            }
            amplitudes = amplitudes + state.amplitudes().mapv(|a| a * coeff);
        }
        Ok(StateVector { amplitudes })
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Array2<C64>),
    Sparse(CsMat<C64>),
}

/// Complex square matrix over a basis, dense below [`DENSE_LIMIT`] and CSR
/// above it, with optional hermitian/unitary assertions.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    storage: Storage,
    hermitian: bool,
    unitary: bool,
}

impl OperatorMatrix {
    pub fn from_dense(entries: Array2<C64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "operators are square");
        OperatorMatrix {
            storage: Storage::Dense(entries),
            hermitian: false,
            unitary: false,
        }
    }

    /// Assemble from (row, col, value) triplets; duplicates accumulate.
    /// Storage is chosen from `dim` against [`DENSE_LIMIT`].
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, C64)]) -> Self {
        if dim <= DENSE_LIMIT {
            let mut m = Array2::zeros((dim, dim));
            for &(i, j, v) in triplets {
                m[[i, j]] += v;
            }
            OperatorMatrix::from_dense(m)
        } else {
            let mut tri = TriMat::new((dim, dim));
            for &(i, j, v) in triplets {
                tri.add_triplet(i, j, v);
            }
            OperatorMatrix {
                storage: Storage::Sparse(tri.to_csr()),
                hermitian: false,
                unitary: false,
            }
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = if dim <= DENSE_LIMIT {
            OperatorMatrix::from_dense(Array2::from_diag_elem(dim, C64::new(1.0, 0.0)))
        } else {
            OperatorMatrix {
                storage: Storage::Sparse(CsMat::eye(dim)),
                hermitian: false,
                unitary: false,
            }
        };
        op.hermitian = true;
        op.unitary = true;
        op
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix::from_triplets(dim, &[])
    }

    /// Diagonal operator from its diagonal entries.
    pub fn diagonal(entries: &[C64]) -> Self {
        let triplets: Vec<_> = entries
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, v))
            .collect();
        OperatorMatrix::from_triplets(entries.len(), &triplets)
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.rows(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Whether the hermitian assertion was verified on this matrix.
    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    /// Whether the unitary assertion was verified on this matrix.
    pub fn unitary(&self) -> bool {
        self.unitary
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[[i, j]],
            Storage::Sparse(m) => m.get(i, j).copied().unwrap_or_else(|| C64::new(0.0, 0.0)),
        }
    }

    /// Borrow the dense entries; errors on sparse storage.
    pub(crate) fn dense_ref(&self) -> Result<&Array2<C64>> {
        match &self.storage {
            Storage::Dense(m) => Ok(m),
            Storage::Sparse(_) => Err(Error::TooLargeForDense {
                dim: self.dim(),
                limit: DENSE_LIMIT,
            }),
        }
    }

    /// Materialize dense entries regardless of storage (guarded by the
    /// dense limit).
    pub fn to_dense_array(&self) -> Result<Array2<C64>> {
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::Sparse(m) => {
                if self.dim() > DENSE_LIMIT {
                    return Err(Error::TooLargeForDense {
                        dim: self.dim(),
                        limit: DENSE_LIMIT,
                    });
                }
                let mut out = Array2::zeros((m.rows(), m.cols()));
                for (&v, (i, j)) in m.iter() {
                    out[[i, j]] = v;
                }
                Ok(out)
            }
        }
    }

    fn to_sparse(&self) -> CsMat<C64> {
        match &self.storage {
            Storage::Sparse(m) => m.clone(),
            Storage::Dense(m) => {
                let mut tri = TriMat::new((m.nrows(), m.ncols()));
                for ((i, j), &v) in m.indexed_iter() {
                    if v != C64::new(0.0, 0.0) {
                        tri.add_triplet(i, j, v);
                    }
                }
                tri.to_csr()
            }
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::dim_mismatch("operator sum", self.dim(), other.dim()));
        }
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a + b),
            _ => Storage::Sparse(&self.to_sparse() + &other.to_sparse()),
        };
        Ok(OperatorMatrix {
            storage,
            hermitian: false,
            unitary: false,
        })
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> OperatorMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.mapv(|x| x * factor)),
            Storage::Sparse(m) => Storage::Sparse(m.map(|x| x * factor)),
        };
        OperatorMatrix {
            storage,
            hermitian: false,
            unitary: false,
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::dim_mismatch(
                "operator product",
                self.dim(),
                other.dim(),
            ));
        }
        let storage = match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Storage::Dense(a.dot(b)),
            _ => Storage::Sparse(&self.to_sparse() * &other.to_sparse()),
        };
        Ok(OperatorMatrix {
            storage,
            hermitian: false,
            unitary: false,
        })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> OperatorMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.t().mapv(|x| x.conj())),
            Storage::Sparse(m) => {
                let mut tri = TriMat::new((m.cols(), m.rows()));
                for (&v, (i, j)) in m.iter() {
                    tri.add_triplet(j, i, v.conj());
                }
                Storage::Sparse(tri.to_csr())
            }
        };
        OperatorMatrix {
            storage,
            hermitian: self.hermitian,
            unitary: false,
        }
    }

    /// Apply to a state vector.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.dim() != state.dim() {
            return Err(Error::dim_mismatch(
                "operator application",
                self.dim(),
                state.dim(),
            ));
        }
        let amplitudes = match &self.storage {
            Storage::Dense(m) => m.dot(state.amplitudes()),
            Storage::Sparse(m) => {
                let mut out = Array1::zeros(state.dim());
                for (row, row_vec) in m.outer_iterator().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (col, &v) in row_vec.iter() {
                        acc += v * state.amplitudes()[col];
                    }
                    out[row] = acc;
                }
                out
            }
        };
        Ok(StateVector::new(amplitudes))
    }

    /// Expectation value `<psi| M |psi>`; real part is returned by callers
    /// where hermiticity makes it real.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        state.inner(&self.apply(state)?)
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => linalg::max_abs(m),
            Storage::Sparse(m) => m.iter().fold(0.0f64, |acc, (v, _)| acc.max(v.norm())),
        }
    }

    /// max-element deviation from hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        match self.sub(&self.dagger()) {
            Ok(diff) => diff.max_abs(),
            Err(_) => unreachable!("dagger preserves dimension"),
        }
    }

    /// Verify hermiticity to [`HERMITIAN_TOL`] and tag the assertion.
    pub fn tag_hermitian(mut self) -> Result<OperatorMatrix> {
        let dev = self.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_dev: dev });
        }
        self.hermitian = true;
        Ok(self)
    }

    /// Verify unitarity to [`UNITARY_TOL`] and tag the assertion.
    pub fn tag_unitary(mut self) -> Result<OperatorMatrix> {
        let prod = self.dagger().matmul(&self)?;
        let dev = prod.sub(&OperatorMatrix::identity(self.dim()))?.max_abs();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { max_dev: dev });
        }
        self.unitary = true;
        Ok(self)
    }

    /// Kronecker product `self (x) other`, sparse whenever the result would
    /// exceed the dense limit.
    pub fn kron(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let dim = self.dim() * other.dim();
        if dim <= DENSE_LIMIT {
            let a = self.to_dense_array().expect("within dense limit");
            let b = other.to_dense_array().expect("within dense limit");
            OperatorMatrix::from_dense(ndarray::linalg::kron(&a, &b))
        } else {
            let a = self.to_sparse();
            let b = other.to_sparse();
            let mut tri = TriMat::new((dim, dim));
            for (&va, (ia, ja)) in a.iter() {
                for (&vb, (ib, jb)) in b.iter() {
                    tri.add_triplet(ia * other.dim() + ib, ja * other.dim() + jb, va * vb);
                }
            }
            OperatorMatrix {
                storage: Storage::Sparse(tri.to_csr()),
                hermitian: false,
                unitary: false,
            }
        }
    }
}

/// Pauli operator labels in the `{|g>, |e>}` ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// The 2x2 Pauli / spin-ladder matrix for `axis`, with `sigma_z |e> = +|e>`
/// and `sigma_pm = (sigma_x pm i sigma_y) / 2`.
pub fn make_pauli(axis: PauliAxis) -> OperatorMatrix {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let triplets: Vec<(usize, usize, C64)> = match axis {
        PauliAxis::X => vec![(0, 1, one), (1, 0, one)],
        PauliAxis::Y => vec![(0, 1, i), (1, 0, -i)],
        PauliAxis::Z => vec![(0, 0, -one), (1, 1, one)],
        PauliAxis::Plus => vec![(1, 0, one)],
        PauliAxis::Minus => vec![(0, 1, one)],
    };
    OperatorMatrix::from_triplets(2, &triplets)
}

/// Annihilation and creation operators on the truncated boson space of
/// `basis` (dimension `n_max + 1`): `a|n> = sqrt(n)|n-1>`, with hard
/// truncation `a_dag |n_max> = 0`.
pub fn make_ladder(basis: &BasisSpec) -> (OperatorMatrix, OperatorMatrix) {
    let bd = basis.boson_dim();
    let mut lower = Vec::with_capacity(bd - 1);
    for n in 1..bd {
        lower.push((n - 1, n, C64::new((n as f64).sqrt(), 0.0)));
    }
    let a = OperatorMatrix::from_triplets(bd, &lower);
    let a_dag = a.dagger();
    (a, a_dag)
}

/// Subsystem slot of the composite basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Spin(usize),
    Boson,
}

impl std::fmt::Display for Subsystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subsystem::Spin(k) => write!(f, "spin {k}"),
            Subsystem::Boson => write!(f, "boson"),
        }
    }
}

/// Lift a subsystem operator to the full space by tensoring identities on all
/// other subsystems, respecting the spins-first ordering.
pub fn embed(op: &OperatorMatrix, site: Subsystem, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let expected = match site {
        Subsystem::Spin(k) => {
            if k >= basis.n_spins() {
                return Err(Error::invalid(format!(
                    "embed target {site} outside basis with {} spins",
                    basis.n_spins()
                )));
            }
            2
        }
        Subsystem::Boson => basis.boson_dim(),
    };
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            context: format!("embed into {site}"),
            expected,
            got: op.dim(),
        });
    }

    let out = match site {
        Subsystem::Spin(k) => {
            let left = OperatorMatrix::identity(1 << k);
            let right = OperatorMatrix::identity(1 << (basis.n_spins() - 1 - k));
            let boson = OperatorMatrix::identity(basis.boson_dim());
            left.kron(op).kron(&right).kron(&boson)
        }
        Subsystem::Boson => OperatorMatrix::identity(basis.spin_dim()).kron(op),
    };
    Ok(out)
}

/// exp(M) for a square matrix with finite entries.
pub fn matrix_exponential(op: &OperatorMatrix) -> Result<OperatorMatrix> {
    let m = if op.is_sparse() {
        op.to_dense_array()?
    } else {
        op.dense_ref()?.clone()
    };
    for ((i, j), v) in m.indexed_iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    Ok(OperatorMatrix::from_dense(linalg::expm(&m)))
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}
