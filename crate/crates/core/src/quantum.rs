//! Observables, POVMs, channels and instruments as concrete Kraus data.
//!
//! All four types validate on construction and on deserialization, so any
//! value in hand satisfies its completeness/projector invariants. JSON
//! encodes complex entries as `[re, im]` pairs and matrices as arrays of rows.

use serde::{Deserialize, Serialize};

use crate::entropy::ProbVector;
use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, eigh, hermiticity_deviation, identity, is_finite, kron, max_abs_diff,
    max_entangled, outer, zeros, CMatrix, CVector, DensityMatrix, Hermitian, C64,
    DECOMPOSITION_TOL, STRUCTURAL_TOL,
};

/// Relative eigenvalue gap below which eigenvalues are treated as degenerate.
pub const CLUSTER_GAP: f64 = 1e-8;
/// Allowed distance of a projector trace from an integer.
pub const RANK_TOL: f64 = 1e-6;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// One eigenvalue of an observable with its eigenprojector.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableBranch {
    pub label: f64,
    pub projector: CMatrix,
    pub degeneracy: usize,
}

/// Orthogonal resolution of the identity labelled by eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableWire", into = "ObservableWire")]
pub struct ProjectiveObservable {
    dim: usize,
    branches: Vec<ObservableBranch>,
}

impl ProjectiveObservable {
    pub fn new(dim: usize, branches: Vec<(f64, CMatrix)>) -> Result<Self> {
        if dim == 0 || branches.is_empty() {
            return Err(Error::NotProjective("empty observable".into()));
        }
        let mut out = Vec::with_capacity(branches.len());
        let mut sum = zeros(dim, dim);
        for (label, p) in branches {
            if p.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "projector of shape {:?} in a {dim}-dimensional observable",
                    p.shape()
                )));
            }
            if !is_finite(&p) || !label.is_finite() {
                return Err(Error::NonFinite);
            }
            if hermiticity_deviation(&p) > DECOMPOSITION_TOL {
                return Err(Error::NotProjective(format!(
                    "projector for {label} is not Hermitian"
                )));
            }
            let idem = max_abs_diff(&(&p * &p), &p);
            if idem > DECOMPOSITION_TOL {
                return Err(Error::NotProjective(format!(
                    "projector for {label} is not idempotent ({idem:e})"
                )));
            }
            let tr = p.trace().re;
            let rank = tr.round();
            if (tr - rank).abs() >= RANK_TOL || rank < 1.0 {
                return Err(Error::NotProjective(format!(
                    "projector for {label} has trace {tr}"
                )));
            }
            sum += &p;
            out.push(ObservableBranch {
                label,
                projector: p,
                degeneracy: rank as usize,
            });
        }
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                let prod = &out[i].projector * &out[j].projector;
                let dev = prod.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if dev > DECOMPOSITION_TOL {
                    return Err(Error::NotProjective(format!(
                        "projectors {i} and {j} are not orthogonal ({dev:e})"
                    )));
                }
            }
        }
        let res = max_abs_diff(&sum, &identity(dim));
        if res > DECOMPOSITION_TOL {
            return Err(Error::Incomplete(res));
        }
        Ok(Self { dim, branches: out })
    }

    /// Non-degenerate observable whose eigenvectors are the columns of `u`,
    /// labelled `0, 1, ...` in column order.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(Error::NotSquare {
                rows: d,
                cols: u.ncols(),
            });
        }
        let branches = (0..d)
            .map(|k| {
                let v: CVector = u.column(k).into_owned();
                (k as f64, outer(&v))
            })
            .collect();
        Self::new(d, branches)
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&identity(d)).expect("identity is a basis")
    }

    /// Eigenbasis `|k> = d^{-1/2} Σ_j ω^{jk} |j>`, mutually unbiased with the
    /// computational basis.
    pub fn fourier(d: usize) -> Self {
        Self::from_basis(&fourier_matrix(d)).expect("Fourier matrix is unitary")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[ObservableBranch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.branches.iter().all(|b| b.degeneracy == 1)
    }

    /// `d_x / d` for each branch: the input weights of the correlation
    /// experiments.
    pub fn weights(&self) -> Vec<f64> {
        self.branches
            .iter()
            .map(|b| b.degeneracy as f64 / self.dim as f64)
            .collect()
    }

    /// `Σ_x x Π(x)`.
    pub fn reconstruct(&self) -> CMatrix {
        self.branches
            .iter()
            .fold(zeros(self.dim, self.dim), |acc, b| {
                acc + &b.projector * real(b.label)
            })
    }

    /// Same observable with every projector transposed in the computational
    /// basis.
    pub fn transposed(&self) -> Self {
        Self {
            dim: self.dim,
            branches: self
                .branches
                .iter()
                .map(|b| ObservableBranch {
                    label: b.label,
                    projector: b.projector.transpose(),
                    degeneracy: b.degeneracy,
                })
                .collect(),
        }
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<ProbVector> {
        check_state_dim(self.dim, rho)?;
        ProbVector::new(
            self.branches
                .iter()
                .map(|b| (&b.projector * rho.matrix()).trace().re)
                .collect(),
        )
    }
}

pub fn fourier_matrix(d: usize) -> CMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |j, k| {
        let phase = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        C64::from_polar(norm, phase)
    })
}

/// Groups eigenvalues of `h` into an observable. Branches come out in
/// descending eigenvalue order, each labelled by the mean of its cluster.
pub fn spectral_decompose(h: &Hermitian) -> Result<ProjectiveObservable> {
    let e = eigh(h)?;
    let d = e.values.len();
    let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..d {
        if e.values[i] - e.values[i - 1] > CLUSTER_GAP * scale {
            clusters.push(vec![i]);
        } else {
            clusters.last_mut().unwrap().push(i);
        }
    }
    let branches = clusters
        .iter()
        .rev()
        .map(|idx| {
            let label = idx.iter().map(|&i| e.values[i]).sum::<f64>() / idx.len() as f64;
            let p = idx.iter().fold(zeros(d, d), |acc, &i| {
                let v: CVector = e.vectors.column(i).into_owned();
                acc + outer(&v)
            });
            (label, Hermitian::symmetrized(&p).into_matrix())
        })
        .collect();
    ProjectiveObservable::new(d, branches)
}

fn check_state_dim(dim: usize, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional state for a {dim}-dimensional object",
            rho.dim()
        )));
    }
    Ok(())
}

/// `Σ_n K(n) A K(n)†` for an arbitrary operator `A`.
pub fn apply_cp(kraus: &[CMatrix], a: &CMatrix) -> Result<CMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
    let (dout, din) = first.shape();
    if a.shape() != (din, din) {
        return Err(Error::DimensionMismatch(format!(
            "operator of shape {:?} for Kraus maps from dimension {din}",
            a.shape()
        )));
    }
    let mut out = zeros(dout, dout);
    for k in kraus {
        if k.shape() != (dout, din) {
            return Err(Error::DimensionMismatch(
                "Kraus operators differ in shape".into(),
            ));
        }
        out += k * a * k.adjoint();
    }
    Ok(out)
}

/// Adjoint map `Σ_n K(n)† A K(n)`.
pub fn apply_cp_adjoint(kraus: &[CMatrix], a: &CMatrix) -> Result<CMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
    let (dout, din) = first.shape();
    if a.shape() != (dout, dout) {
        return Err(Error::DimensionMismatch(format!(
            "operator of shape {:?} for the adjoint of maps into dimension {dout}",
            a.shape()
        )));
    }
    Ok(kraus
        .iter()
        .fold(zeros(din, din), |acc, k| acc + k.adjoint() * a * k))
}

/// `Σ_n K(n)† K(n)`.
pub fn kraus_effect(kraus: &[CMatrix]) -> CMatrix {
    let din = kraus.first().map_or(0, |k| k.ncols());
    kraus
        .iter()
        .fold(zeros(din, din), |acc, k| acc + k.adjoint() * k)
}

/// `(Φ ⊗ id)(|Φ⁺><Φ⁺|)` for the map with the given Kraus operators.
pub fn choi_matrix(kraus: &[CMatrix]) -> Result<CMatrix> {
    let din = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?
        .ncols();
    let phi = outer(&max_entangled(din));
    let lifted: Vec<CMatrix> = kraus.iter().map(|k| kron(k, &identity(din))).collect();
    apply_cp(&lifted, &phi)
}

fn check_kraus_shapes(kraus: &[CMatrix], dim_in: usize, dim_out: usize) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::InvalidArgument("empty Kraus set".into()));
    }
    for k in kraus {
        if k.shape() != (dim_out, dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator of shape {:?}, expected ({dim_out}, {dim_in})",
                k.shape()
            )));
        }
        if !is_finite(k) {
            return Err(Error::NonFinite);
        }
    }
    Ok(())
}

/// Positive operator-valued measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmWire", into = "PovmWire")]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(dim: usize, elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("empty POVM".into()));
        }
        let mut sum = zeros(dim, dim);
        for e in &elements {
            let h = Hermitian::new(e.clone())?;
            if h.dim() != dim {
                return Err(Error::DimensionMismatch("POVM element dimension".into()));
            }
            let min = eigh(&h)?.values[0];
            if min < -STRUCTURAL_TOL {
                return Err(Error::NotPositive(min));
            }
            sum += e;
        }
        let res = max_abs_diff(&sum, &identity(dim));
        if res > DECOMPOSITION_TOL {
            return Err(Error::Incomplete(res));
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<ProbVector> {
        check_state_dim(self.dim, rho)?;
        ProbVector::new(
            self.elements
                .iter()
                .map(|e| (e * rho.matrix()).trace().re)
                .collect(),
        )
    }
}

/// Trace-preserving completely positive map in Kraus form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelWire", into = "ChannelWire")]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl Channel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        check_kraus_shapes(&kraus, dim_in, dim_out)?;
        let res = max_abs_diff(&kraus_effect(&kraus), &identity(dim_in));
        if res > DECOMPOSITION_TOL {
            return Err(Error::Incomplete(res));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            kraus: vec![identity(d)],
        }
    }

    /// Qubit-style depolarizing channel `ρ ↦ (1-p)ρ + p·Tr(ρ)·1/d`, via the
    /// Weyl–Heisenberg Kraus set.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1.0 / (d * d - 1).max(1) as f64).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "depolarizing parameter {p}"
            )));
        }
        let omega =
            |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
        let shift = CMatrix::from_fn(d, d, |i, j| {
            if i == (j + 1) % d {
                real(1.0)
            } else {
                real(0.0)
            }
        });
        let clock = CMatrix::from_fn(d, d, |i, j| if i == j { omega(i) } else { real(0.0) });
        let n = (d * d) as f64;
        let mut kraus = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 {
                    1.0 - p + p / n
                } else {
                    p / n
                };
                let x = shift.pow(a as u32);
                let z = clock.pow(b as u32);
                kraus.push((x * z) * real(w.sqrt()));
            }
        }
        Self::new(d, d, kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        apply_cp(&self.kraus, a)
    }

    pub fn apply_adjoint(&self, a: &CMatrix) -> Result<CMatrix> {
        apply_cp_adjoint(&self.kraus, a)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply(rho.matrix())?;
        DensityMatrix::new(Hermitian::symmetrized(&out).into_matrix())
    }
}

/// One outcome of an instrument and the Kraus operators of its CP map.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentBranch {
    pub label: String,
    pub kraus: Vec<CMatrix>,
}

/// Outcome-indexed CP maps that sum to a trace-preserving map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentWire", into = "InstrumentWire")]
pub struct QuantumInstrument {
    dim_in: usize,
    dim_out: usize,
    branches: Vec<InstrumentBranch>,
}

impl QuantumInstrument {
    pub fn new(dim_in: usize, dim_out: usize, branches: Vec<InstrumentBranch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidArgument("instrument without outcomes".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut effect = zeros(dim_in, dim_in);
        for b in &branches {
            if !seen.insert(b.label.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate outcome label `{}`",
                    b.label
                )));
            }
            check_kraus_shapes(&b.kraus, dim_in, dim_out)?;
            effect += kraus_effect(&b.kraus);
        }
        let res = max_abs_diff(&effect, &identity(dim_in));
        if res > DECOMPOSITION_TOL {
            return Err(Error::Incomplete(res));
        }
        Ok(Self {
            dim_in,
            dim_out,
            branches,
        })
    }

    /// Lüders instrument of an observable: outcome `k` applies `Π(x_k)`.
    pub fn projective(obs: &ProjectiveObservable) -> Self {
        let branches = obs
            .branches()
            .iter()
            .enumerate()
            .map(|(k, b)| InstrumentBranch {
                label: k.to_string(),
                kraus: vec![b.projector.clone()],
            })
            .collect();
        Self {
            dim_in: obs.dim(),
            dim_out: obs.dim(),
            branches,
        }
    }

    /// Single outcome, identity map.
    pub fn trivial(d: usize) -> Self {
        Self {
            dim_in: d,
            dim_out: d,
            branches: vec![InstrumentBranch {
                label: "0".into(),
                kraus: vec![identity(d)],
            }],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn branches(&self) -> &[InstrumentBranch] {
        &self.branches
    }

    pub fn n_outcomes(&self) -> usize {
        self.branches.len()
    }

    /// Dimension of the output-plus-flag space that the flag map lands in.
    pub fn flag_dim(&self) -> usize {
        self.dim_out * self.branches.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.branches
            .iter()
            .position(|b| b.label == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    /// `Φ^(m)(A)` for the branch at `index`.
    pub fn branch_map(&self, index: usize, a: &CMatrix) -> Result<CMatrix> {
        apply_cp(&self.branches[index].kraus, a)
    }

    /// `Φ^(m)†(A)`.
    pub fn branch_adjoint(&self, index: usize, a: &CMatrix) -> Result<CMatrix> {
        apply_cp_adjoint(&self.branches[index].kraus, a)
    }

    /// The POVM `{Σ_n K_m(n)† K_m(n)}` of outcome statistics.
    pub fn effects(&self) -> Vec<CMatrix> {
        self.branches
            .iter()
            .map(|b| kraus_effect(&b.kraus))
            .collect()
    }

    pub fn outcome_probability(&self, label: &str, rho: &DensityMatrix) -> Result<f64> {
        check_state_dim(self.dim_in, rho)?;
        let i = self.index_of(label)?;
        Ok(self.branch_map(i, rho.matrix())?.trace().re)
    }

    /// Normalised output state for outcome `label`.
    pub fn post_measurement_state(
        &self,
        label: &str,
        rho: &DensityMatrix,
    ) -> Result<DensityMatrix> {
        check_state_dim(self.dim_in, rho)?;
        let i = self.index_of(label)?;
        let out = self.branch_map(i, rho.matrix())?;
        let p = out.trace().re;
        if p <= 1e-12 {
            return Err(Error::ZeroProbabilityOutcome {
                label: label.to_string(),
                probability: p,
            });
        }
        DensityMatrix::new(Hermitian::symmetrized(&(out / real(p))).into_matrix())
    }

    /// `Σ_m Φ^(m)(A) ⊗ |m><m|` on `H_out ⊗ H_flag` (output is the slow index).
    pub fn flag_map_operator(&self, a: &CMatrix) -> Result<CMatrix> {
        let n = self.branches.len();
        let mut out = zeros(self.flag_dim(), self.flag_dim());
        for m in 0..n {
            let mut flag = zeros(n, n);
            flag[(m, m)] = real(1.0);
            out += kron(&self.branch_map(m, a)?, &flag);
        }
        Ok(out)
    }

    pub fn flag_map(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_state_dim(self.dim_in, rho)?;
        let out = self.flag_map_operator(rho.matrix())?;
        DensityMatrix::new(Hermitian::symmetrized(&out).into_matrix())
    }

    /// The instrument as one channel into the output-plus-flag space.
    pub fn flag_channel(&self) -> Channel {
        let n = self.branches.len();
        let mut kraus = Vec::new();
        for (m, b) in self.branches.iter().enumerate() {
            let ket = CMatrix::from_fn(n, 1, |i, _| if i == m { real(1.0) } else { real(0.0) });
            for k in &b.kraus {
                kraus.push(kron(k, &ket));
            }
        }
        Channel {
            dim_in: self.dim_in,
            dim_out: self.flag_dim(),
            kraus,
        }
    }
}

/// The three objects a trade-off certificate is computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(alias = "X")]
    pub x: ProjectiveObservable,
    #[serde(alias = "Z")]
    pub z: ProjectiveObservable,
    #[serde(alias = "M")]
    pub instrument: QuantumInstrument,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        let d = self.x.dim();
        if self.z.dim() != d || self.instrument.dim_in() != d {
            return Err(Error::DimensionMismatch(format!(
                "observables of dimension {} and {}, instrument input {}",
                d,
                self.z.dim(),
                self.instrument.dim_in()
            )));
        }
        Ok(())
    }
}

// ---- wire formats ---------------------------------------------------------

pub type MatrixWire = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_wire(m: &CMatrix) -> MatrixWire {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_wire(w: &MatrixWire) -> Result<CMatrix> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if w.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    let m = CMatrix::from_fn(rows, cols, |i, j| C64::new(w[i][j][0], w[i][j][1]));
    if !is_finite(&m) {
        return Err(Error::NonFinite);
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
struct ObservableBranchWire {
    label: f64,
    projector: MatrixWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degeneracy: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct ObservableWire {
    dim: usize,
    branches: Vec<ObservableBranchWire>,
}

impl TryFrom<ObservableWire> for ProjectiveObservable {
    type Error = Error;
    fn try_from(w: ObservableWire) -> Result<Self> {
        let declared: Vec<Option<usize>> = w.branches.iter().map(|b| b.degeneracy).collect();
        let branches = w
            .branches
            .iter()
            .map(|b| Ok((b.label, matrix_from_wire(&b.projector)?)))
            .collect::<Result<Vec<_>>>()?;
        let obs = Self::new(w.dim, branches)?;
        for (b, want) in obs.branches.iter().zip(declared) {
            if let Some(k) = want {
                if k != b.degeneracy {
                    return Err(Error::NotProjective(format!(
                        "declared degeneracy {k} but projector rank is {}",
                        b.degeneracy
                    )));
                }
            }
        }
        Ok(obs)
    }
}

impl From<ProjectiveObservable> for ObservableWire {
    fn from(o: ProjectiveObservable) -> Self {
        ObservableWire {
            dim: o.dim,
            branches: o
                .branches
                .iter()
                .map(|b| ObservableBranchWire {
                    label: b.label,
                    projector: matrix_to_wire(&b.projector),
                    degeneracy: Some(b.degeneracy),
                })
                .collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PovmWire {
    dim: usize,
    elements: Vec<MatrixWire>,
}

impl TryFrom<PovmWire> for Povm {
    type Error = Error;
    fn try_from(w: PovmWire) -> Result<Self> {
        let elements = w
            .elements
            .iter()
            .map(matrix_from_wire)
            .collect::<Result<_>>()?;
        Self::new(w.dim, elements)
    }
}

impl From<Povm> for PovmWire {
    fn from(p: Povm) -> Self {
        PovmWire {
            dim: p.dim,
            elements: p.elements.iter().map(matrix_to_wire).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelWire {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<MatrixWire>,
}

impl TryFrom<ChannelWire> for Channel {
    type Error = Error;
    fn try_from(w: ChannelWire) -> Result<Self> {
        let kraus = w
            .kraus
            .iter()
            .map(matrix_from_wire)
            .collect::<Result<_>>()?;
        Self::new(w.dim_in, w.dim_out, kraus)
    }
}

impl From<Channel> for ChannelWire {
    fn from(c: Channel) -> Self {
        ChannelWire {
            dim_in: c.dim_in,
            dim_out: c.dim_out,
            kraus: c.kraus.iter().map(matrix_to_wire).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstrumentBranchWire {
    label: String,
    kraus: Vec<MatrixWire>,
}

#[derive(Serialize, Deserialize)]
struct InstrumentWire {
    dim_in: usize,
    dim_out: usize,
    branches: Vec<InstrumentBranchWire>,
}

impl TryFrom<InstrumentWire> for QuantumInstrument {
    type Error = Error;
    fn try_from(w: InstrumentWire) -> Result<Self> {
        let branches = w
            .branches
            .iter()
            .map(|b| {
                Ok(InstrumentBranch {
                    label: b.label.clone(),
                    kraus: b
                        .kraus
                        .iter()
                        .map(matrix_from_wire)
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(w.dim_in, w.dim_out, branches)
    }
}

impl From<QuantumInstrument> for InstrumentWire {
    fn from(q: QuantumInstrument) -> Self {
        InstrumentWire {
            dim_in: q.dim_in,
            dim_out: q.dim_out,
            branches: q
                .branches
                .iter()
                .map(|b| InstrumentBranchWire {
                    label: b.label.clone(),
                    kraus: b.kraus.iter().map(matrix_to_wire).collect(),
                })
                .collect(),
        }
    }
}

pub fn pure_state(d: usize, i: usize) -> DensityMatrix {
    DensityMatrix::pure(&basis_vector(d, i)).expect("basis vector is normalised")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace;

    fn diag(values: &[f64]) -> CMatrix {
        let d = values.len();
        CMatrix::from_fn(
            d,
            d,
            |i, j| if i == j { real(values[i]) } else { real(0.0) },
        )
    }

    #[test]
    fn apply_cp_examples() {
        let rho = DensityMatrix::new(diag(&[0.3, 0.7])).unwrap();
        let id = Channel::identity(2);
        assert!(max_abs_diff(&id.apply(rho.matrix()).unwrap(), rho.matrix()) < 1e-15);
        let zero = apply_cp(&[zeros(2, 2)], rho.matrix()).unwrap();
        assert_eq!(zero, zeros(2, 2));
        let dep = Channel::depolarizing(3, 0.4).unwrap();
        let mut m = diag(&[0.2, 0.5, 0.3]);
        m[(0, 1)] = C64::new(0.1, 0.05);
        m[(1, 0)] = C64::new(0.1, -0.05);
        let out = dep.apply(&m).unwrap();
        assert!((trace(&out).re - 1.0).abs() < 1e-10);
        assert!(apply_cp(&[zeros(2, 3)], rho.matrix()).is_err());
    }

    #[test]
    fn projective_instrument_statistics() {
        let x = ProjectiveObservable::computational(3);
        let inst = QuantumInstrument::projective(&x);
        let e1 = pure_state(3, 1);
        assert!((inst.outcome_probability("1", &e1).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(3);
        for (k, b) in x.branches().iter().enumerate() {
            let p = inst.outcome_probability(&k.to_string(), &mixed).unwrap();
            assert!((p - b.degeneracy as f64 / 3.0).abs() < 1e-15);
        }
        assert!(matches!(
            inst.outcome_probability("7", &mixed),
            Err(Error::UnknownOutcome(_))
        ));
    }

    #[test]
    fn post_measurement_states() {
        let x = ProjectiveObservable::computational(2);
        let inst = QuantumInstrument::projective(&x);
        let e0 = pure_state(2, 0);
        let post = inst.post_measurement_state("0", &e0).unwrap();
        assert!(max_abs_diff(post.matrix(), e0.matrix()) < 1e-15);
        assert!(matches!(
            inst.post_measurement_state("1", &e0),
            Err(Error::ZeroProbabilityOutcome { .. })
        ));

        // degenerate Lüders branch on the mixed state gives Π/d_x
        let mut p = diag(&[1.0, 1.0, 0.0]);
        p[(0, 0)] = real(1.0);
        let obs =
            ProjectiveObservable::new(3, vec![(1.0, p.clone()), (0.0, diag(&[0.0, 0.0, 1.0]))])
                .unwrap();
        let inst = QuantumInstrument::projective(&obs);
        let post = inst
            .post_measurement_state("0", &DensityMatrix::maximally_mixed(3))
            .unwrap();
        assert!(max_abs_diff(post.matrix(), &(p / real(2.0))) < 1e-15);
    }

    #[test]
    fn flag_map_blocks() {
        let rho = DensityMatrix::new(diag(&[0.6, 0.4])).unwrap();
        let triv = QuantumInstrument::trivial(2);
        let f = triv.flag_map(&rho).unwrap();
        assert!(max_abs_diff(f.matrix(), rho.matrix()) < 1e-15);

        let x = ProjectiveObservable::fourier(2);
        let inst = QuantumInstrument::projective(&x);
        let mixed = DensityMatrix::maximally_mixed(2);
        let f = inst.flag_map(&mixed).unwrap();
        assert!((trace(f.matrix()).re - 1.0).abs() < 1e-12);
        // block m sits at rows/cols i*2 + m
        for (m, b) in x.branches().iter().enumerate() {
            let block = CMatrix::from_fn(2, 2, |i, j| f.matrix()[(i * 2 + m, j * 2 + m)]);
            assert!(max_abs_diff(&block, &(&b.projector / real(2.0))) < 1e-15);
            let p = inst.outcome_probability(&m.to_string(), &mixed).unwrap();
            assert!((trace(&block).re - p).abs() < 1e-15);
        }
        // off-diagonal flag blocks vanish
        assert!(f.matrix()[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn spectral_decompose_examples() {
        let z = spectral_decompose(&Hermitian::new(diag(&[1.0, -1.0])).unwrap()).unwrap();
        assert_eq!(z.len(), 2);
        assert_eq!(z.branches()[0].label, 1.0);
        let id = spectral_decompose(&Hermitian::new(identity(3)).unwrap()).unwrap();
        assert_eq!(id.len(), 1);
        assert_eq!(id.branches()[0].degeneracy, 3);
        let near =
            spectral_decompose(&Hermitian::new(diag(&[1.0, 1.0 + 1e-12, -1.0])).unwrap()).unwrap();
        let degs: Vec<usize> = near.branches().iter().map(|b| b.degeneracy).collect();
        assert_eq!(degs, vec![2, 1]);
    }

    #[test]
    fn observable_validation() {
        assert!(matches!(
            ProjectiveObservable::new(2, vec![(0.0, diag(&[1.0, 0.0]))]),
            Err(Error::Incomplete(_))
        ));
        assert!(ProjectiveObservable::new(
            2,
            vec![(0.0, diag(&[0.5, 0.0])), (1.0, diag(&[0.5, 1.0]))]
        )
        .is_err());
    }

    #[test]
    fn instrument_validation() {
        let broken = QuantumInstrument::new(
            2,
            2,
            vec![InstrumentBranch {
                label: "a".into(),
                kraus: vec![diag(&[1.0, 0.5])],
            }],
        );
        assert!(matches!(broken, Err(Error::Incomplete(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let inst = Instance {
            x: ProjectiveObservable::fourier(3),
            z: ProjectiveObservable::computational(3),
            instrument: QuantumInstrument::projective(&ProjectiveObservable::fourier(3)),
        };
        let s = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(inst, back);

        let povm = Povm::new(2, vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        let s = serde_json::to_string(&povm).unwrap();
        assert_eq!(serde_json::from_str::<Povm>(&s).unwrap(), povm);

        let ch = Channel::depolarizing(2, 0.3).unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        assert_eq!(serde_json::from_str::<Channel>(&s).unwrap(), ch);
    }

    #[test]
    fn json_accepts_upper_case_keys() {
        let inst = Instance {
            x: ProjectiveObservable::fourier(2),
            z: ProjectiveObservable::computational(2),
            instrument: QuantumInstrument::trivial(2),
        };
        let v = serde_json::to_value(&inst).unwrap();
        let upper = serde_json::json!({"X": v["x"], "Z": v["z"], "M": v["instrument"]});
        let back: Instance = serde_json::from_value(upper).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn choi_of_identity_is_max_entangled() {
        let c = choi_matrix(&[identity(2)]).unwrap();
        assert!(max_abs_diff(&c, &outer(&max_entangled(2))) < 1e-15);
    }
}
