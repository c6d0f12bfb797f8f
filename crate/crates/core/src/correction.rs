//! Search over correction channels for the disturbance experiment.
//!
//! A correction `Ψ` maps the instrument's output-plus-flag space back to the
//! system. The minimum over all channels is not computed exactly; instead a
//! set of named strategies each propose corrections and the best value found
//! is reported. Strategies are looked up by id in a [`StrategyRegistry`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::decision::standard_decision;
use crate::entropy::{conditional_entropy, EntropyOrder, JointDistribution};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, Hermitian, C64};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::quantum::{Channel, ProjectiveObservable, QuantumInstrument};
use crate::sampling::{derive_seed, ginibre, orthonormalize_columns, rng_from_seed};

/// Largest number of outcome-to-eigenvalue assignments enumerated by the
/// reprepare strategy before it falls back to the maximum a posteriori one.
pub const MAX_ASSIGNMENTS: u64 = 4096;

/// Precomputed data for evaluating the disturbance of candidate corrections.
#[derive(Debug, Clone)]
pub struct CorrectionProblem {
    dim: usize,
    flag_dim: usize,
    n_outcomes: usize,
    order: EntropyOrder,
    /// `Φ_M(Λ(z)) / d` for every branch of `Z`.
    inputs: Vec<CMatrix>,
    projectors: Vec<CMatrix>,
    eigenvalue_count: usize,
    /// `p(z, m)`; rows `z`, columns instrument outcomes.
    outcome_joint: JointDistribution,
    /// Whether the instrument returns a system of the input dimension.
    same_output: bool,
    /// Conjugated eigenbasis of `Z` (row `r` is `⟨e_r|`), and the branch each
    /// basis vector belongs to.
    basis_rows: Vec<C64>,
    basis_branch: Vec<usize>,
    /// Entries of `inputs` within matching flag blocks (the only ones that
    /// can be nonzero), as `(row, col, value)`.
    inputs_sparse: Vec<Vec<(usize, usize, C64)>>,
}

/// Reusable buffers for [`CorrectionProblem::value_of_params`].
#[derive(Debug, Default)]
pub struct Scratch {
    columns: Vec<C64>,
    row: Vec<C64>,
    table: Vec<f64>,
}

impl CorrectionProblem {
    pub fn new(
        z: &ProjectiveObservable,
        m: &QuantumInstrument,
        order: EntropyOrder,
    ) -> Result<Self> {
        if z.dim() != m.dim_in() {
            return Err(Error::DimensionMismatch(format!(
                "observable of dimension {} against instrument input {}",
                z.dim(),
                m.dim_in()
            )));
        }
        let d = z.dim();
        let scale = C64::new(1.0 / d as f64, 0.0);
        let inputs = z
            .branches()
            .iter()
            .map(|b| m.flag_map_operator(&b.projector).map(|s| s * scale))
            .collect::<Result<Vec<_>>>()?;
        let effects = m.effects();
        let mut table = Vec::with_capacity(z.len() * effects.len());
        for b in z.branches() {
            for e in &effects {
                table.push((e * &b.projector).trace().re / d as f64);
            }
        }
        let mut basis_rows = Vec::with_capacity(d * d);
        let mut basis_branch = Vec::with_capacity(d);
        for (k, b) in z.branches().iter().enumerate() {
            let e = eigh(&Hermitian::symmetrized(&b.projector))?;
            for col in (0..d).filter(|&c| e.values[c] > 0.5) {
                basis_rows.extend(e.vectors.column(col).iter().map(|v| v.conj()));
                basis_branch.push(k);
            }
        }
        if basis_branch.len() != d {
            return Err(Error::NumericalFailure(
                "eigenbasis of the observable is incomplete".into(),
            ));
        }
        let n_out = m.n_outcomes();
        let inputs_sparse = inputs
            .iter()
            .map(|s| {
                let dim = s.nrows();
                (0..dim * dim)
                    .map(|k| (k / dim, k % dim))
                    .filter(|(a, c)| a % n_out == c % n_out)
                    .map(|(a, c)| (a, c, s[(a, c)]))
                    .collect()
            })
            .collect();
        Ok(Self {
            basis_rows,
            basis_branch,
            inputs_sparse,
            dim: d,
            flag_dim: m.flag_dim(),
            n_outcomes: m.n_outcomes(),
            order,
            inputs,
            projectors: z.branches().iter().map(|b| b.projector.clone()).collect(),
            eigenvalue_count: z.len(),
            outcome_joint: JointDistribution::new(z.len(), effects.len(), table)?,
            same_output: m.dim_out() == d,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flag_dim(&self) -> usize {
        self.flag_dim
    }

    pub fn order(&self) -> EntropyOrder {
        self.order
    }

    fn entropy_of(&self, data: Vec<f64>) -> f64 {
        let n = self.eigenvalue_count;
        match JointDistribution::new(n, n, data) {
            Ok(j) => conditional_entropy(&j, self.order),
            Err(_) => f64::INFINITY,
        }
    }

    /// Disturbance value of a correction channel.
    pub fn value_of(&self, psi: &Channel) -> Result<f64> {
        if psi.dim_in() != self.flag_dim || psi.dim_out() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "correction maps {} -> {}, expected {} -> {}",
                psi.dim_in(),
                psi.dim_out(),
                self.flag_dim,
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(self.eigenvalue_count.pow(2));
        for s in &self.inputs {
            let out = psi.apply(s)?;
            for p in &self.projectors {
                data.push((p * &out).trace().re);
            }
        }
        Ok(self.entropy_of(data))
    }

    /// Disturbance value of the channel whose Kraus operators are the
    /// consecutive `d`-row blocks of the isometry `v`.
    pub fn value_of_isometry(&self, v: &CMatrix) -> f64 {
        let d = self.dim;
        let blocks = v.nrows() / d;
        let mut data = Vec::with_capacity(self.eigenvalue_count.pow(2));
        for s in &self.inputs {
            let w = v * s * v.adjoint();
            let mut out = CMatrix::zeros(d, d);
            for j in 0..blocks {
                out += w.view((j * d, j * d), (d, d));
            }
            for p in &self.projectors {
                let mut t = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        t += (p[(a, b)] * out[(b, a)]).re;
                    }
                }
                data.push(t);
            }
        }
        self.entropy_of(data)
    }

    /// Disturbance value for the real parameter vector of the continuous
    /// search: `2·rows·cols` numbers giving the complex `rows × cols` matrix
    /// (row-major, real and imaginary parts interleaved) whose Gram–Schmidt
    /// orthonormalised columns form the isometry.
    pub fn value_of_params(&self, x: &[f64], s: &mut Scratch) -> f64 {
        let (d, cols) = (self.dim, self.flag_dim);
        let rows = d * self.kraus_blocks();
        debug_assert_eq!(x.len(), 2 * rows * cols);
        // column-major copy
        s.columns.clear();
        s.columns.resize(rows * cols, C64::new(0.0, 0.0));
        for i in 0..rows {
            for j in 0..cols {
                let k = 2 * (i * cols + j);
                s.columns[j * rows + i] = C64::new(x[k], x[k + 1]);
            }
        }
        for j in 0..cols {
            let (done, rest) = s.columns.split_at_mut(j * rows);
            let cj = &mut rest[..rows];
            for q in 0..j {
                let cq = &done[q * rows..(q + 1) * rows];
                let proj: C64 = cq.iter().zip(cj.iter()).map(|(a, b)| a.conj() * b).sum();
                for (b, a) in cj.iter_mut().zip(cq) {
                    *b -= a * proj;
                }
            }
            let norm = cj.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 1e-12) {
                return f64::INFINITY;
            }
            let inv = 1.0 / norm;
            cj.iter_mut().for_each(|v| *v *= inv);
        }
        let nz = self.eigenvalue_count;
        s.table.clear();
        s.table.resize(nz * nz, 0.0);
        s.row.resize(cols, C64::new(0.0, 0.0));
        for block in 0..self.kraus_blocks() {
            for r in 0..d {
                // u = ⟨e_r| K_block
                let e = &self.basis_rows[r * d..(r + 1) * d];
                for c in 0..cols {
                    let col = &s.columns[c * rows + block * d..c * rows + (block + 1) * d];
                    s.row[c] = e.iter().zip(col).map(|(a, b)| a * b).sum();
                }
                let target = self.basis_branch[r];
                for (z, sigma) in self.inputs_sparse.iter().enumerate() {
                    let q: f64 = sigma
                        .iter()
                        .map(|&(a, c, v)| (s.row[a] * v * s.row[c].conj()).re)
                        .sum();
                    s.table[z * nz + target] += q;
                }
            }
        }
        self.entropy_of(s.table.clone())
    }

    /// Number of Kraus blocks used by the isometry parametrisation.
    pub fn kraus_blocks(&self) -> usize {
        self.flag_dim.div_ceil(self.dim)
    }
}

fn isometry_to_channel(v: &CMatrix, d: usize, dim_in: usize) -> Result<Channel> {
    let kraus = (0..v.nrows() / d)
        .map(|j| v.rows(j * d, d).into_owned())
        .collect();
    Channel::new(dim_in, d, kraus)
}

/// `σ ↦ Σ_m (1 ⊗ ⟨m|) σ (1 ⊗ |m⟩)`: forget the flag and keep the output.
/// Needs an instrument whose output dimension equals its input dimension.
pub fn discard_flag(m: &QuantumInstrument) -> Result<Channel> {
    if m.dim_out() != m.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "discarding the flag needs output dimension {} to equal input {}",
            m.dim_out(),
            m.dim_in()
        )));
    }
    let (d, n) = (m.dim_out(), m.n_outcomes());
    let kraus = (0..n)
        .map(|k| {
            CMatrix::from_fn(d, d * n, |i, col| {
                if col == i * n + k {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Channel::new(d * n, d, kraus)
}

/// Channel that reads the flag and prepares `Λ(z)/d_z` with
/// `z = assignment[m]`.
pub fn reprepare_channel(z: &[CMatrix], dim_out: usize, assignment: &[usize]) -> Result<Channel> {
    let d = z.first().map_or(0, |p| p.nrows());
    let n = assignment.len();
    let mut kraus = Vec::new();
    for (m, &target) in assignment.iter().enumerate() {
        let proj = z
            .get(target)
            .ok_or_else(|| Error::InvalidArgument(format!("no eigenvalue with index {target}")))?;
        let e = eigh(&Hermitian::symmetrized(proj))?;
        let range: Vec<usize> = (0..d).filter(|&k| e.values[k] > 0.5).collect();
        let w = C64::new(1.0 / (range.len() as f64).sqrt(), 0.0);
        for i in 0..dim_out {
            for &k in &range {
                let col = i * n + m;
                let vec = e.vectors.column(k);
                kraus.push(CMatrix::from_fn(d, dim_out * n, |r, c| {
                    if c == col {
                        vec[r] * w
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    Channel::new(dim_out * n, d, kraus)
}

/// Best correction proposed by one strategy.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub value: f64,
    pub channel: Channel,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
}

pub trait CorrectionStrategy: Send + Sync {
    fn id(&self) -> &'static str;
    /// `Ok(None)` when the strategy does not apply to the problem.
    fn run(
        &self,
        problem: &CorrectionProblem,
        config: &SearchConfig,
    ) -> Result<Option<StrategyOutcome>>;
}

/// Keep the instrument's output unchanged and drop the flag.
pub struct DiscardFlag;

fn discard_flag_for(problem: &CorrectionProblem) -> Option<CMatrix> {
    if !problem.same_output {
        return None;
    }
    let (d, n) = (problem.dim, problem.n_outcomes);
    let mut v = CMatrix::zeros(d * n, d * n);
    for k in 0..n {
        for i in 0..d {
            v[(k * d + i, i * n + k)] = C64::new(1.0, 0.0);
        }
    }
    Some(v)
}

impl CorrectionStrategy for DiscardFlag {
    fn id(&self) -> &'static str {
        "discard-flag"
    }

    fn run(
        &self,
        problem: &CorrectionProblem,
        _: &SearchConfig,
    ) -> Result<Option<StrategyOutcome>> {
        let Some(v) = discard_flag_for(problem) else {
            return Ok(None);
        };
        let channel = isometry_to_channel(&v, problem.dim, problem.flag_dim)?;
        Ok(Some(StrategyOutcome {
            value: problem.value_of(&channel)?,
            channel,
            restarts: 0,
            iterations: 0,
            converged: true,
        }))
    }
}

/// Classical corrections: prepare an eigenstate mixture of `Z` chosen by the
/// instrument outcome.
pub struct Reprepare;

impl CorrectionStrategy for Reprepare {
    fn id(&self) -> &'static str {
        "reprepare"
    }

    fn run(
        &self,
        problem: &CorrectionProblem,
        _: &SearchConfig,
    ) -> Result<Option<StrategyOutcome>> {
        let nz = problem.eigenvalue_count;
        let n = problem.n_outcomes;
        let j = &problem.outcome_joint;
        let value_of = |g: &[usize]| {
            let mut data = vec![0.0; nz * nz];
            for z in 0..nz {
                for (m, &t) in g.iter().enumerate() {
                    data[z * nz + t] += j.get(z, m);
                }
            }
            problem.entropy_of(data)
        };
        let map_rule = standard_decision(j).rule.guess;
        let mut best = (value_of(&map_rule), map_rule);
        let total = (nz as u64).checked_pow(n as u32);
        if total.is_some_and(|t| t <= MAX_ASSIGNMENTS) {
            for rule in crate::decision::DecisionRule::enumerate(nz, n) {
                let v = value_of(&rule.guess);
                if v < best.0 {
                    best = (v, rule.guess);
                }
            }
        }
        let dim_out = problem.flag_dim / n;
        let channel = reprepare_channel(&problem.projectors, dim_out, &best.1)?;
        Ok(Some(StrategyOutcome {
            value: best.0,
            channel,
            restarts: 0,
            iterations: 0,
            converged: true,
        }))
    }
}

/// Derivative-free local search over Stinespring isometries, from the
/// discard-flag correction (when available) and from random starts.
pub struct SimplexSearch;

fn params_to_matrix(x: &[f64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(x[k], x[k + 1])
    })
}

fn matrix_to_params(a: &CMatrix) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            x.push(a[(i, j)].re);
            x.push(a[(i, j)].im);
        }
    }
    x
}

impl CorrectionStrategy for SimplexSearch {
    fn id(&self) -> &'static str {
        "simplex"
    }

    fn run(
        &self,
        problem: &CorrectionProblem,
        config: &SearchConfig,
    ) -> Result<Option<StrategyOutcome>> {
        if config.restarts == 0 {
            return Ok(None);
        }
        let (d, cols) = (problem.dim, problem.flag_dim);
        let rows = d * problem.kraus_blocks();
        let mut scratch = Scratch::default();
        let mut objective = |x: &[f64]| problem.value_of_params(x, &mut scratch);
        let opts = NelderMeadOptions {
            max_iterations: config.max_iterations,
            initial_step: 0.1,
            f_tolerance: 1e-12,
            stall_iterations: config.stall_iterations,
        };
        let warm = discard_flag_for(problem).map(|v| {
            let mut a = CMatrix::zeros(rows, cols);
            a.view_mut((0, 0), (v.nrows(), cols)).copy_from(&v);
            a
        });
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut iterations = 0;
        let mut converged = true;
        for r in 0..config.restarts {
            let start = match (&warm, r) {
                (Some(a), 0) => a.clone(),
                _ => {
                    let mut rng = rng_from_seed(derive_seed(config.seed, r as u64));
                    ginibre(rows, cols, &mut rng)
                }
            };
            let min = nelder_mead(&mut objective, &matrix_to_params(&start), &opts);
            iterations += min.iterations;
            converged &= min.converged;
            if best.as_ref().is_none_or(|(v, _)| min.value < *v) {
                best = Some((min.value, min.x));
            }
        }
        let (value, x) = best.expect("at least one restart");
        if !value.is_finite() {
            return Ok(None);
        }
        let v = orthonormalize_columns(&params_to_matrix(&x, rows, cols))?;
        Ok(Some(StrategyOutcome {
            value,
            channel: isometry_to_channel(&v, d, cols)?,
            restarts: config.restarts,
            iterations,
            converged,
        }))
    }
}

/// Strategies selectable by id.
pub struct StrategyRegistry {
    entries: Vec<Box<dyn CorrectionStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Registers `s`, replacing any existing entry with the same id.
    pub fn register(&mut self, s: Box<dyn CorrectionStrategy>) {
        self.entries.retain(|e| e.id() != s.id());
        self.entries.push(s);
    }

    pub fn get(&self, id: &str) -> Result<&dyn CorrectionStrategy> {
        self.entries
            .iter()
            .find(|e| e.id().eq_ignore_ascii_case(id))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.id()).collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(DiscardFlag));
        r.register(Box::new(Reprepare));
        r.register(Box::new(SimplexSearch));
        r
    }
}

pub fn strategies() -> &'static StrategyRegistry {
    static REGISTRY: OnceLock<StrategyRegistry> = OnceLock::new();
    REGISTRY.get_or_init(StrategyRegistry::default)
}

fn default_strategies() -> Vec<String> {
    strategies().ids().into_iter().map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Random starts of the continuous search (the first one is warm-started
    /// from the discard-flag correction when that applies).
    pub restarts: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Stop a start after this many iterations without improvement; zero
    /// disables the check.
    pub stall_iterations: usize,
    pub seed: u64,
    pub strategies: Vec<String>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 2000,
            stall_iterations: 0,
            seed: 0,
            strategies: default_strategies(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateValue {
    pub strategy: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionSearchResult {
    pub best_value: f64,
    pub best_channel: Channel,
    /// Strategy that produced the best value.
    pub strategy: String,
    pub restarts: usize,
    pub iterations: usize,
    /// False when some local search hit its iteration cap.
    pub converged: bool,
    /// The reported value bounds the true minimum from above.
    pub upper_bound: bool,
    pub candidates: Vec<CandidateValue>,
}

/// Runs every configured strategy and keeps the smallest value (earlier
/// strategies win ties).
pub fn search_correction(
    problem: &CorrectionProblem,
    config: &SearchConfig,
) -> Result<CorrectionSearchResult> {
    let mut best: Option<(StrategyOutcome, &'static str)> = None;
    let mut candidates = Vec::new();
    let (mut restarts, mut iterations, mut converged) = (0, 0, true);
    for id in &config.strategies {
        let s = strategies().get(id)?;
        let Some(mut out) = s.run(problem, config)? else {
            continue;
        };
        out.value = problem.value_of(&out.channel)?;
        candidates.push(CandidateValue {
            strategy: s.id().to_string(),
            value: out.value,
        });
        restarts += out.restarts;
        iterations += out.iterations;
        converged &= out.converged;
        if best.as_ref().is_none_or(|(b, _)| out.value < b.value) {
            best = Some((out, s.id()));
        }
    }
    let (out, id) = best.ok_or_else(|| {
        Error::NumericalFailure("no configured correction strategy applies".into())
    })?;
    Ok(CorrectionSearchResult {
        best_value: out.value.max(0.0),
        best_channel: out.channel,
        strategy: id.to_string(),
        restarts,
        iterations,
        converged,
        upper_bound: true,
        candidates,
    })
}
