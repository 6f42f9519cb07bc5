//! Truncated tensor-product Hilbert space for a chain of two-level sites,
//! bosonic field modes and phonon modes, together with a sparse complex
//! operator type and the embedding of local (single-factor) operators.
//!
//! Subsystem order is fixed: sites `0..n`, then field modes, then phonon
//! modes. Basis states are enumerated row-major (mixed radix), the first
//! subsystem being the most significant digit. For a site the local basis is
//! `|α⟩ = 0` (lower level), `|β⟩ = 1` (upper level); for a mode it is the Fock
//! ladder `0..=cutoff`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use thiserror::Error;

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("space too large: dimension {dim} exceeds the cap of {cap}")]
    SpaceTooLarge { dim: u128, cap: usize },
    #[error("invalid space spec: {0}")]
    InvalidSpec(String),
    #[error("local operator on {subsystem} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        subsystem: Subsystem,
        expected: usize,
        got: usize,
    },
    #[error("operator dimension mismatch: {left} vs {right}")]
    OperatorMismatch { left: usize, right: usize },
    #[error("{0} does not exist in this space")]
    NoSuchSubsystem(Subsystem),
}

pub type Result<T> = std::result::Result<T, HilbertError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Highest retained Fock level; the local dimension is `cutoff + 1`.
    pub cutoff: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub n_sites: usize,
    #[serde(default)]
    pub field_modes: Vec<ModeSpec>,
    #[serde(default)]
    pub phonon_modes: Vec<ModeSpec>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

impl SpaceSpec {
    pub fn new(n_sites: usize, field_cutoffs: &[usize], phonon_cutoffs: &[usize]) -> Self {
        Self {
            n_sites,
            field_modes: field_cutoffs.iter().map(|&cutoff| ModeSpec { cutoff }).collect(),
            phonon_modes: phonon_cutoffs.iter().map(|&cutoff| ModeSpec { cutoff }).collect(),
            max_dim: DEFAULT_MAX_DIM,
        }
    }

    /// Total dimension, computed without overflow.
    pub fn dimension(&self) -> u128 {
        let sites = 1u128.checked_shl(self.n_sites as u32).unwrap_or(u128::MAX);
        self.field_modes
            .iter()
            .chain(&self.phonon_modes)
            .fold(sites, |acc, m| acc.saturating_mul(m.cutoff as u128 + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    Site(usize),
    Field(usize),
    Phonon(usize),
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::Site(i) => write!(f, "site {i}"),
            Subsystem::Field(k) => write!(f, "field mode {k}"),
            Subsystem::Phonon(q) => write!(f, "phonon mode {q}"),
        }
    }
}

/// Bookkeeping for the full product basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceIndex {
    subsystems: Vec<Subsystem>,
    local_dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    n_sites: usize,
    n_field: usize,
    n_phonon: usize,
}

/// Validate `spec` and lay out the product basis.
pub fn build_space(spec: &SpaceSpec) -> Result<SpaceIndex> {
    if spec.n_sites == 0 {
        return Err(HilbertError::InvalidSpec("n_sites must be at least 1".into()));
    }
    for (kind, modes) in [("field", &spec.field_modes), ("phonon", &spec.phonon_modes)] {
        if let Some(k) = modes.iter().position(|m| m.cutoff == 0) {
            return Err(HilbertError::InvalidSpec(format!(
                "{kind} mode {k} has cutoff 0 (must be at least 1)"
            )));
        }
    }
    let dim = spec.dimension();
    if dim > spec.max_dim as u128 {
        return Err(HilbertError::SpaceTooLarge { dim, cap: spec.max_dim });
    }

    let mut subsystems = Vec::new();
    let mut local_dims = Vec::new();
    for i in 0..spec.n_sites {
        subsystems.push(Subsystem::Site(i));
        local_dims.push(2);
    }
    for (k, m) in spec.field_modes.iter().enumerate() {
        subsystems.push(Subsystem::Field(k));
        local_dims.push(m.cutoff + 1);
    }
    for (q, m) in spec.phonon_modes.iter().enumerate() {
        subsystems.push(Subsystem::Phonon(q));
        local_dims.push(m.cutoff + 1);
    }
    let mut strides = vec![1usize; local_dims.len()];
    for p in (0..local_dims.len().saturating_sub(1)).rev() {
        strides[p] = strides[p + 1] * local_dims[p + 1];
    }
    Ok(SpaceIndex {
        subsystems,
        local_dims,
        strides,
        dim: dim as usize,
        n_sites: spec.n_sites,
        n_field: spec.field_modes.len(),
        n_phonon: spec.phonon_modes.len(),
    })
}

impl SpaceIndex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_field_modes(&self) -> usize {
        self.n_field
    }

    pub fn n_phonon_modes(&self) -> usize {
        self.n_phonon
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    /// Position of `s` in the subsystem ordering.
    pub fn position(&self, s: Subsystem) -> Result<usize> {
        let pos = match s {
            Subsystem::Site(i) if i < self.n_sites => i,
            Subsystem::Field(k) if k < self.n_field => self.n_sites + k,
            Subsystem::Phonon(q) if q < self.n_phonon => self.n_sites + self.n_field + q,
            _ => return Err(HilbertError::NoSuchSubsystem(s)),
        };
        Ok(pos)
    }

    pub fn local_dim(&self, s: Subsystem) -> Result<usize> {
        Ok(self.local_dims[self.position(s)?])
    }

    /// Occupation of subsystem position `pos` in basis state `index`.
    #[inline]
    pub fn occupation(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.local_dims[pos]
    }

    pub fn index_to_tuple(&self, index: usize) -> Option<Vec<usize>> {
        (index < self.dim).then(|| {
            (0..self.local_dims.len())
                .map(|p| self.occupation(index, p))
                .collect()
        })
    }

    pub fn tuple_to_index(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.local_dims.len() {
            return None;
        }
        tuple
            .iter()
            .zip(&self.local_dims)
            .zip(&self.strides)
            .try_fold(0usize, |acc, ((&o, &d), &s)| (o < d).then_some(acc + o * s))
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(self.dim)
    }

    pub fn zero(&self) -> Operator {
        Operator::zero(self.dim)
    }

    /// Basis-state mask that is `false` wherever any bosonic mode sits on its
    /// top Fock level.
    pub fn below_top_mask(&self) -> Vec<bool> {
        let modes: Vec<usize> = (self.n_sites..self.local_dims.len()).collect();
        (0..self.dim)
            .map(|i| {
                modes
                    .iter()
                    .all(|&p| self.occupation(i, p) + 1 < self.local_dims[p])
            })
            .collect()
    }
}

/// Small dense matrix acting on a single tensor factor (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOp {
    dim: usize,
    data: Vec<C64>,
}

impl LocalOp {
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "local operator must be square");
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        let refs: Vec<&[C64]> = rows.iter().map(|r| r.as_slice()).collect();
        Self::from_rows(&refs)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// `|row⟩⟨col|`
    pub fn outer(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.data[row * dim + col] = C64::new(1.0, 0.0);
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = C64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn matmul(&self, other: &LocalOp) -> LocalOp {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = LocalOp::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &LocalOp) -> LocalOp {
        assert_eq!(self.dim, other.dim);
        LocalOp {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> LocalOp {
        LocalOp {
            dim: self.dim,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> LocalOp {
        let n = self.dim;
        let mut out = LocalOp::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }
}

/// Bosonic annihilation operator truncated at `cutoff`: `√m` on the
/// superdiagonal.
pub fn annihilation_local(cutoff: usize) -> LocalOp {
    assert!(cutoff >= 1, "cutoff must be at least 1");
    let n = cutoff + 1;
    let mut m = LocalOp::zeros(n);
    for level in 1..n {
        m.data[(level - 1) * n + level] = C64::new((level as f64).sqrt(), 0.0);
    }
    m
}

pub fn number_local(cutoff: usize) -> LocalOp {
    let diag: Vec<f64> = (0..=cutoff).map(|m| m as f64).collect();
    LocalOp::diagonal(&diag)
}

/// Projector on the highest retained Fock level.
pub fn top_level_local(cutoff: usize) -> LocalOp {
    LocalOp::outer(cutoff + 1, cutoff, cutoff)
}

/// Embed `local` at subsystem `s`: `I ⊗ … ⊗ local ⊗ … ⊗ I`.
pub fn embed_local(space: &SpaceIndex, s: Subsystem, local: &LocalOp) -> Result<Operator> {
    let pos = space.position(s)?;
    let expected = space.local_dims[pos];
    if local.dim != expected {
        return Err(HilbertError::DimensionMismatch {
            subsystem: s,
            expected,
            got: local.dim,
        });
    }
    let stride = space.strides[pos];
    let d = local.dim;
    let nnz_local = local.data.iter().filter(|z| z.norm_sqr() > 0.0).count();
    let mut tri = TriMat::with_capacity((space.dim, space.dim), space.dim / d * nnz_local);
    for col in 0..space.dim {
        let o = space.occupation(col, pos);
        let base = col - o * stride;
        for r in 0..d {
            let v = local.data[r * d + o];
            if v.norm_sqr() > 0.0 {
                tri.add_triplet(base + r * stride, col, v);
            }
        }
    }
    Ok(Operator::from_csr(tri.to_csr(), format!("embed({s})")))
}

/// Sparse complex operator on the full space, carrying a provenance tag.
#[derive(Debug, Clone)]
pub struct Operator {
    mat: CsMat<C64>,
    tag: String,
}

impl PartialEq for Operator {
    /// Numerical equality (tags ignored, explicit zeros ignored).
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.try_sub(other).map(|d| d.norm_max() == 0.0).unwrap_or(false)
    }
}

impl Operator {
    pub fn from_csr(mat: CsMat<C64>, tag: impl Into<String>) -> Self {
        assert_eq!(mat.rows(), mat.cols(), "operators are square");
        let mat = if mat.is_csr() { mat } else { mat.to_csr() };
        Self { mat, tag: tag.into() }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, C64)], tag: impl Into<String>) -> Self {
        let mut tri = TriMat::with_capacity((dim, dim), triplets.len());
        for &(r, c, v) in triplets {
            tri.add_triplet(r, c, v);
        }
        Self::from_csr(tri.to_csr(), tag)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_csr(CsMat::eye(dim), "I")
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_csr(CsMat::zero((dim, dim)), "0")
    }

    pub fn diagonal(diag: &[f64], tag: impl Into<String>) -> Self {
        let trips: Vec<_> = diag
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0.0)
            .map(|(i, &d)| (i, i, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), &trips, tag)
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn csr(&self) -> &CsMat<C64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat.get(row, col).copied().unwrap_or_default()
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(HilbertError::OperatorMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Operator::from_csr(&self.mat + &other.mat, format!("({} + {})", self.tag, other.tag)))
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Operator::from_csr(&self.mat - &other.mat, format!("({} - {})", self.tag, other.tag)))
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Operator::from_csr(&self.mat * &other.mat, format!("{}·{}", self.tag, other.tag)))
    }

    /// `AB − BA`
    pub fn try_commutator(&self, other: &Operator) -> Result<Operator> {
        let ab = self.try_mul(other)?;
        let ba = other.try_mul(self)?;
        Ok(ab.try_sub(&ba)?.with_tag(format!("[{}, {}]", self.tag, other.tag)))
    }

    /// `AB + BA`
    pub fn try_anticommutator(&self, other: &Operator) -> Result<Operator> {
        let ab = self.try_mul(other)?;
        let ba = other.try_mul(self)?;
        Ok(ab.try_add(&ba)?.with_tag(format!("{{{}, {}}}", self.tag, other.tag)))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        self.try_commutator(other).expect("commutator of mismatched operators")
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        self.try_anticommutator(other).expect("anticommutator of mismatched operators")
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator {
            mat: self.mat.map(|z| z * s),
            tag: format!("{s}·{}", self.tag),
        }
    }

    pub fn scale_re(&self, s: f64) -> Operator {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Operator {
        let t = self.mat.transpose_view().to_csr();
        Operator {
            mat: t.map(|z| z.conj()),
            tag: format!("{}†", self.tag),
        }
    }

    /// Largest entry modulus (explicit zeros count as zero).
    pub fn norm_max(&self) -> f64 {
        self.mat.data().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `√(‖A‖₁ ‖A‖∞)`, an upper bound on the spectral norm.
    pub fn norm_op_bound(&self) -> f64 {
        let n = self.dim();
        let mut row_sums = vec![0.0; n];
        let mut col_sums = vec![0.0; n];
        for (v, (r, c)) in self.mat.iter() {
            let a = v.norm();
            row_sums[r] += a;
            col_sums[c] += a;
        }
        let inf = row_sums.into_iter().fold(0.0, f64::max);
        let one = col_sums.into_iter().fold(0.0, f64::max);
        (inf * one).sqrt()
    }

    /// `max |A − A†|`
    pub fn hermiticity_residual(&self) -> f64 {
        (self - &self.adjoint()).norm_max()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `⟨A, B⟩ = Tr(A† B)`
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (row, a_row) in self.mat.outer_iterator().enumerate() {
            if let Some(b_row) = other.mat.outer_view(row) {
                for (col, a) in a_row.iter() {
                    if let Some(b) = b_row.get(col) {
                        acc += a.conj() * b;
                    }
                }
            }
        }
        acc
    }

    /// `y ← A x`
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            y[row] = vec.iter().map(|(c, &v)| v * x[c]).sum();
        }
    }

    /// `y ← y + alpha · A x`
    pub fn apply_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            let s: C64 = vec.iter().map(|(c, &v)| v * x[c]).sum();
            y[row] += alpha * s;
        }
    }

    /// `⟨ψ|A|ψ⟩`
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        self.mat
            .outer_iterator()
            .enumerate()
            .map(|(row, vec)| {
                let s: C64 = vec.iter().map(|(c, &v)| v * psi[c]).sum();
                psi[row].conj() * s
            })
            .sum()
    }

    /// Zero every row and column whose mask entry is `false`.
    pub fn restrict(&self, keep: &[bool]) -> Operator {
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for (v, (r, c)) in self.mat.iter() {
            if keep[r] && keep[c] {
                tri.add_triplet(r, c, *v);
            }
        }
        Operator::from_csr(tri.to_csr(), format!("P·{}·P", self.tag))
    }

    /// Dense row-major copy; intended for small dimensions.
    pub fn to_dense(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for (v, (r, c)) in self.mat.iter() {
            out[r * n + c] += *v;
        }
        out
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("adding mismatched operators")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("subtracting mismatched operators")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("multiplying mismatched operators")
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_re(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

/// Sum of operators; `dim` is needed for the empty case.
pub fn sum_ops<'a>(dim: usize, ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
    ops.into_iter().fold(Operator::zero(dim), |acc, op| &acc + op)
}
