//! Spectroscopic transition operators of a single two-level site, their
//! algebra, and operator-valued 3-vectors in the `(e₊, e₋, e_z)` basis.
//!
//! With `e₊ = ½(e_x + i e_y)` and `e₋ = ½(e_x − i e_y)`, a vector
//! `v = v⁻ e₊ + v⁺ e₋ + vᶻ e_z` has Cartesian components
//! `x = ½(v⁻ + v⁺)`, `y = ½ i (v⁻ − v⁺)`, `z = vᶻ`. The site vector is
//! `σ = σ⁻ e₊ + σ⁺ e₋ + σᶻ e_z`.

use num_complex::Complex;
use num_complex::Complex64 as C64;

use crate::hilbert::{embed_local, HilbertError, LocalOp, Operator, SpaceIndex, Subsystem};

/// Local level labels: `Alpha` is the lower state, `Beta` the upper one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Alpha,
    Beta,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::Alpha, Level::Beta];

    pub fn index(self) -> usize {
        match self {
            Level::Alpha => 0,
            Level::Beta => 1,
        }
    }
}

/// `|α⟩⟨β|`
pub fn sigma_minus_local() -> LocalOp {
    LocalOp::outer(2, 0, 1)
}

/// `|β⟩⟨α|`
pub fn sigma_plus_local() -> LocalOp {
    LocalOp::outer(2, 1, 0)
}

/// `|β⟩⟨β| − |α⟩⟨α|`
pub fn sigma_z_local() -> LocalOp {
    LocalOp::diagonal(&[-1.0, 1.0])
}

/// The extended transition set `{σ⁻, σ⁺, σᶻ, σᴱ, σ⁰}` of one site, embedded
/// in the full space.
#[derive(Debug, Clone)]
pub struct TransitionSet {
    pub site: usize,
    pub minus: Operator,
    pub plus: Operator,
    pub z: Operator,
    pub unit: Operator,
    pub zero: Operator,
}

pub fn build_transition_set(space: &SpaceIndex, site: usize) -> Result<TransitionSet, HilbertError> {
    let s = Subsystem::Site(site);
    let minus = embed_local(space, s, &sigma_minus_local())?.with_tag(format!("σ⁻_{site}"));
    let plus = embed_local(space, s, &sigma_plus_local())?.with_tag(format!("σ⁺_{site}"));
    let z = embed_local(space, s, &sigma_z_local())?.with_tag(format!("σᶻ_{site}"));
    let unit = embed_local(space, s, &LocalOp::identity(2))?.with_tag(format!("σᴱ_{site}"));
    let zero = space.zero().with_tag(format!("σ⁰_{site}"));
    Ok(TransitionSet {
        site,
        minus,
        plus,
        z,
        unit,
        zero,
    })
}

impl TransitionSet {
    /// `σ^{lm} = |l⟩⟨m|`, assembled from the extended set.
    pub fn basic(&self, l: Level, m: Level) -> Operator {
        match (l, m) {
            (Level::Alpha, Level::Beta) => self.minus.clone(),
            (Level::Beta, Level::Alpha) => self.plus.clone(),
            (Level::Alpha, Level::Alpha) => (&self.unit - &self.z).scale_re(0.5),
            (Level::Beta, Level::Beta) => (&self.unit + &self.z).scale_re(0.5),
        }
    }

    pub fn extended(&self) -> [(&'static str, &Operator); 5] {
        [
            ("σ⁻", &self.minus),
            ("σ⁺", &self.plus),
            ("σᶻ", &self.z),
            ("σᴱ", &self.unit),
            ("σ⁰", &self.zero),
        ]
    }

    /// Span basis used for decompositions: `[σ⁻, σ⁺, σᶻ, σᴱ]`.
    fn span(&self) -> [&Operator; 4] {
        [&self.minus, &self.plus, &self.z, &self.unit]
    }

    /// Coefficients of `m` on `[σ⁻, σ⁺, σᶻ, σᴱ]` (Hilbert–Schmidt projection;
    /// the four are mutually orthogonal) and the reconstruction residual.
    pub fn decompose(&self, m: &Operator) -> ([C64; 4], f64) {
        decompose_in(&self.span(), m)
    }

    pub fn vector(&self) -> OpVector {
        Triple {
            minus: self.minus.clone(),
            plus: self.plus.clone(),
            z: self.z.clone(),
        }
    }
}

fn decompose_in(basis: &[&Operator; 4], m: &Operator) -> ([C64; 4], f64) {
    let mut coeffs = [C64::new(0.0, 0.0); 4];
    let mut recon = Operator::zero(m.dim());
    for (c, b) in coeffs.iter_mut().zip(basis) {
        *c = b.hs_inner(m) / b.hs_inner(b);
        recon = &recon + &b.scale(*c);
    }
    (coeffs, (m - &recon).norm_max())
}

/// Tolerance for the algebra checks.
pub const ALGEBRA_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Default)]
pub struct AlgebraReport {
    pub checks: usize,
    pub max_residual: f64,
    pub failures: Vec<String>,
}

impl AlgebraReport {
    fn record(&mut self, label: impl FnOnce() -> String, residual: f64) {
        self.checks += 1;
        self.max_residual = self.max_residual.max(residual);
        if !(residual <= ALGEBRA_TOL) {
            self.failures.push(format!("{}: residual {residual:e}", label()));
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the commutation table of the basic transition operators
/// `[σ^{lm}, σ^{pq}] = σ^{lq} δ_{mp} − σ^{pm} δ_{ql}`, the three named
/// relations `[σ⁻,σᶻ] = 2σ⁻`, `[σᶻ,σ⁺] = 2σ⁺`, `[σ⁺,σ⁻] = σᶻ`, and closure
/// of the extended set under commutation, anticommutation and Hermitian
/// conjugation.
pub fn check_algebra_closure(ts: &TransitionSet) -> AlgebraReport {
    let mut report = AlgebraReport::default();
    let dim = ts.minus.dim();
    let zero = Operator::zero(dim);

    for l in Level::ALL {
        for m in Level::ALL {
            for p in Level::ALL {
                for q in Level::ALL {
                    let lhs = ts.basic(l, m).commutator(&ts.basic(p, q));
                    let first = if m == p { ts.basic(l, q) } else { zero.clone() };
                    let second = if q == l { ts.basic(p, m) } else { zero.clone() };
                    let rhs = &first - &second;
                    report.record(
                        || format!("[σ^{l:?}{m:?}, σ^{p:?}{q:?}]"),
                        (&lhs - &rhs).norm_max(),
                    );
                }
            }
        }
    }

    let named = [
        ("[σ⁻, σᶻ] = 2σ⁻", ts.minus.commutator(&ts.z), ts.minus.scale_re(2.0)),
        ("[σᶻ, σ⁺] = 2σ⁺", ts.z.commutator(&ts.plus), ts.plus.scale_re(2.0)),
        ("[σ⁺, σ⁻] = σᶻ", ts.plus.commutator(&ts.minus), ts.z.clone()),
    ];
    for (label, lhs, rhs) in named {
        report.record(|| label.to_string(), (&lhs - &rhs).norm_max());
    }

    let set = ts.extended();
    for (na, a) in set {
        let (_, res) = ts.decompose(&a.adjoint());
        report.record(|| format!("{na}† in span"), res);
        for (nb, b) in set {
            let (_, res) = ts.decompose(&a.commutator(b));
            report.record(|| format!("[{na}, {nb}] in span"), res);
            let (_, res) = ts.decompose(&a.anticommutator(b));
            report.record(|| format!("{{{na}, {nb}}} in span"), res);
        }
    }

    for (na, a) in set {
        report.record(|| format!("[σᴱ, {na}] = 0"), ts.unit.commutator(a).norm_max());
    }
    report
}

type ExactMat = [[Complex<i64>; 2]; 2];

fn exact_mul(a: &ExactMat, b: &ExactMat) -> ExactMat {
    let mut out = [[Complex::new(0, 0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn exact_comm(a: &ExactMat, b: &ExactMat) -> ExactMat {
    let ab = exact_mul(a, b);
    let ba = exact_mul(b, a);
    let mut out = ab;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = ab[i][j] - ba[i][j];
        }
    }
    out
}

fn exact_scale(a: &ExactMat, s: i64) -> ExactMat {
    a.map(|row| row.map(|z| z * s))
}

/// The three named commutators evaluated in exact integer arithmetic on the
/// local 2×2 matrices.
pub fn exact_named_relations() -> bool {
    let z0 = Complex::new(0i64, 0);
    let one = Complex::new(1i64, 0);
    // basis order (α, β)
    let minus: ExactMat = [[z0, one], [z0, z0]];
    let plus: ExactMat = [[z0, z0], [one, z0]];
    let sz: ExactMat = [[-one, z0], [z0, one]];
    exact_comm(&minus, &sz) == exact_scale(&minus, 2)
        && exact_comm(&sz, &plus) == exact_scale(&plus, 2)
        && exact_comm(&plus, &minus) == sz
}

/// Pauli matrices in the standard `(|↑⟩, |↓⟩)` basis.
pub fn pauli() -> [LocalOp; 3] {
    let i = C64::new(0.0, 1.0);
    let o = C64::new(0.0, 0.0);
    let r = C64::new(1.0, 0.0);
    [
        LocalOp::from_rows(&[&[o, r], &[r, o]]),
        LocalOp::from_rows(&[&[o, -i], &[i, o]]),
        LocalOp::from_rows(&[&[r, o], &[o, -r]]),
    ]
}

/// Images of `[σ⁻, σ⁺, σᶻ, σᴱ]` under `σ⁻ → ½(σ_x − iσ_y)`,
/// `σ⁺ → ½(σ_x + iσ_y)`, `σᶻ → σ_z`, `σᴱ → I`.
pub fn pauli_images() -> [LocalOp; 4] {
    let [sx, sy, sz] = pauli();
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        sx.add(&sy.scale(-i)).scale(half),
        sx.add(&sy.scale(i)).scale(half),
        sz,
        LocalOp::identity(2),
    ]
}

#[derive(Debug, Clone, Default)]
pub struct IsomorphismReport {
    pub checks: usize,
    /// Largest deviation between structure constants of the transition set
    /// and of the mapped Pauli set.
    pub max_residual: f64,
    pub failures: Vec<String>,
}

impl IsomorphismReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn local_decompose(basis: &[LocalOp; 4], m: &LocalOp) -> ([C64; 4], f64) {
    let mut coeffs = [C64::new(0.0, 0.0); 4];
    let mut recon = LocalOp::zeros(2);
    let hs = |a: &LocalOp, b: &LocalOp| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                s += a.get(r, c).conj() * b.get(r, c);
            }
        }
        s
    };
    for (c, b) in coeffs.iter_mut().zip(basis) {
        *c = hs(b, m) / hs(b, b);
        recon = recon.add(&b.scale(*c));
    }
    let mut res: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            res = res.max((m.get(r, c) - recon.get(r, c)).norm());
        }
    }
    (coeffs, res)
}

/// Checks that `σ^m → σ_P^m` preserves products, commutators and
/// anticommutators: structure constants computed on the embedded transition
/// operators must equal those of the mapped Pauli matrices.
pub fn check_pauli_isomorphism(ts: &TransitionSet) -> IsomorphismReport {
    let mut report = IsomorphismReport::default();
    let names = ["σ⁻", "σ⁺", "σᶻ", "σᴱ"];
    let ops = ts.span();
    let images = pauli_images();

    let compare = |label: String, lhs: &Operator, rhs: &LocalOp, report: &mut IsomorphismReport| {
        let (cl, rl) = ts.decompose(lhs);
        let (cr, rr) = local_decompose(&images, rhs);
        let dc = cl
            .iter()
            .zip(&cr)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let res = dc.max(rl).max(rr);
        report.checks += 1;
        report.max_residual = report.max_residual.max(res);
        if !(res <= ALGEBRA_TOL) {
            report.failures.push(format!("{label}: residual {res:e}"));
        }
    };

    for (i, a) in ops.iter().enumerate() {
        for (j, b) in ops.iter().enumerate() {
            let (fa, fb) = (&images[i], &images[j]);
            let fab = fa.matmul(fb);
            let fba = fb.matmul(fa);
            let comm = fab.add(&fba.scale(C64::new(-1.0, 0.0)));
            let anti = fab.add(&fba);
            compare(format!("{}·{}", names[i], names[j]), &(*a * *b), &fab, &mut report);
            compare(format!("[{}, {}]", names[i], names[j]), &a.commutator(b), &comm, &mut report);
            compare(format!("{{{}, {}}}", names[i], names[j]), &a.anticommutator(b), &anti, &mut report);
        }
    }
    // σ⁰ maps to the zero matrix
    compare("σ⁰".into(), &ts.zero, &LocalOp::zeros(2), &mut report);
    report
}

/// Algebraic operations needed of a vector component. `sym_product` is the
/// symmetrized product `½{a, b}`; every operator-vector product and the
/// mean-field factorization go through it.
pub trait VectorComponent: Clone {
    fn sym_product(&self, other: &Self) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, s: C64) -> Self;
}

impl VectorComponent for C64 {
    fn sym_product(&self, other: &Self) -> Self {
        self * other
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, s: C64) -> Self {
        self * s
    }
}

impl VectorComponent for Operator {
    fn sym_product(&self, other: &Self) -> Self {
        self.anticommutator(other).scale_re(0.5)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, s: C64) -> Self {
        self.scale(s)
    }
}

/// Components on `(e₊, e₋, e_z)`: `minus` multiplies `e₊`, `plus` multiplies
/// `e₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple<T> {
    pub minus: T,
    pub plus: T,
    pub z: T,
}

pub type OpVector = Triple<Operator>;

impl<T> Triple<T> {
    pub fn new(minus: T, plus: T, z: T) -> Self {
        Self { minus, plus, z }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Triple<U> {
        Triple {
            minus: f(&self.minus),
            plus: f(&self.plus),
            z: f(&self.z),
        }
    }

    pub fn components(&self) -> [&T; 3] {
        [&self.minus, &self.plus, &self.z]
    }
}

impl<T: VectorComponent> Triple<T> {
    /// Componentwise scaling by a diagonal metric on `(e₊, e₋, e_z)`.
    pub fn with_metric(&self, metric: [f64; 3]) -> Self {
        Triple {
            minus: self.minus.times(C64::new(metric[0], 0.0)),
            plus: self.plus.times(C64::new(metric[1], 0.0)),
            z: self.z.times(C64::new(metric[2], 0.0)),
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        self.map(|c| c.times(s))
    }
}

impl Triple<C64> {
    pub fn to_cartesian(&self) -> [C64; 3] {
        let half = 0.5;
        let i = C64::new(0.0, 1.0);
        [
            (self.minus + self.plus) * half,
            i * (self.minus - self.plus) * half,
            self.z,
        ]
    }

    pub fn from_cartesian(v: [C64; 3]) -> Self {
        let i = C64::new(0.0, 1.0);
        Triple {
            minus: v[0] - i * v[1],
            plus: v[0] + i * v[1],
            z: v[2],
        }
    }
}

/// Determinant-form vector product in the `(e₊, e₋, e_z)` basis with every
/// component product replaced by `½{a, b}`.
///
/// Expanding the determinant with `e₋×e_z = −i e₋`, `e_z×e₊ = −i e₊`,
/// `e₊×e₋ = −(i/2) e_z` gives
///
/// ```text
/// minus = i   (a⁻∘bᶻ − aᶻ∘b⁻)
/// plus  = −i  (a⁺∘bᶻ − aᶻ∘b⁺)
/// z     = −i/2 (a⁻∘b⁺ − a⁺∘b⁻)
/// ```
///
/// where `∘` is the symmetrized product. For commuting entries this is the
/// ordinary cross product.
pub fn cross<T: VectorComponent>(a: &Triple<T>, b: &Triple<T>) -> Triple<T> {
    let i = C64::new(0.0, 1.0);
    Triple {
        minus: a
            .minus
            .sym_product(&b.z)
            .minus(&a.z.sym_product(&b.minus))
            .times(i),
        plus: a
            .plus
            .sym_product(&b.z)
            .minus(&a.z.sym_product(&b.plus))
            .times(-i),
        z: a
            .minus
            .sym_product(&b.plus)
            .minus(&a.plus.sym_product(&b.minus))
            .times(-0.5 * i),
    }
}

/// [`cross`] for operator vectors, with dimension checking.
pub fn generalized_cross(a: &OpVector, b: &OpVector) -> Result<OpVector, HilbertError> {
    let d = a.minus.dim();
    for op in a.components().into_iter().chain(b.components()) {
        if op.dim() != d {
            return Err(HilbertError::OperatorMismatch {
                left: d,
                right: op.dim(),
            });
        }
    }
    Ok(cross(a, b))
}
