//! Classical Rényi, Tsallis and Shannon entropies and their conditional forms.
//!
//! Conventions shared by every function here:
//!
//! * outcomes with zero probability contribute exactly zero (`0^α = 0`,
//!   `0 ln 0 = 0`);
//! * conditioning columns with `p(y) = 0` are skipped;
//! * an order within [`SHANNON_WINDOW`] of one is evaluated with the Shannon
//!   formula instead of the `1/(1-α)` expression;
//! * `α = ∞` is accepted by the Rényi functions and gives the min-entropy.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orders closer than this to one use the Shannon limit.
pub const SHANNON_WINDOW: f64 = 1e-7;
/// Negative entries above `-CLIP_TOL` are treated as roundoff and zeroed.
pub const CLIP_TOL: f64 = 1e-12;
/// Allowed deviation of a total probability from one.
pub const NORM_TOL: f64 = 1e-9;

pub(crate) fn near_one(alpha: f64) -> bool {
    (alpha - 1.0).abs() < SHANNON_WINDOW
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "entropy order must be positive, got {alpha}"
        )));
    }
    Ok(())
}

fn check_finite_alpha(alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if alpha.is_infinite() {
        return Err(Error::InvalidArgument(
            "infinite order is only defined for the Renyi family".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Renyi,
    Tsallis,
    Shannon,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Renyi => "Renyi",
            Family::Tsallis => "Tsallis",
            Family::Shannon => "Shannon",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An entropy family together with its order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyOrder {
    alpha: f64,
    family: Family,
}

impl EntropyOrder {
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if family == Family::Shannon && !near_one(alpha) {
            return Err(Error::InvalidArgument(format!(
                "Shannon family requires order 1, got {alpha}"
            )));
        }
        if family == Family::Tsallis && alpha.is_infinite() {
            return Err(Error::InvalidArgument(
                "Tsallis order must be finite".into(),
            ));
        }
        Ok(Self { alpha, family })
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Self::new(Family::Renyi, alpha)
    }

    pub fn tsallis(alpha: f64) -> Result<Self> {
        Self::new(Family::Tsallis, alpha)
    }

    pub fn shannon() -> Self {
        Self {
            alpha: 1.0,
            family: Family::Shannon,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> Family {
        self.family
    }
}

fn clip_and_normalize(values: &mut [f64], what: &str) -> Result<()> {
    for v in values.iter_mut() {
        if !v.is_finite() {
            return Err(Error::InvalidProbability(format!(
                "{what} has a non-finite entry"
            )));
        }
        if *v < 0.0 {
            if *v < -CLIP_TOL {
                return Err(Error::InvalidProbability(format!(
                    "{what} has negative entry {v}"
                )));
            }
            *v = 0.0;
        }
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidProbability(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    for v in values.iter_mut() {
        *v /= total;
    }
    Ok(())
}

/// A normalised probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty probability vector".into()));
        }
        clip_and_normalize(&mut probs, "probability vector")?;
        Ok(Self(probs))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn point_mass(d: usize, at: usize) -> Self {
        let mut v = vec![0.0; d];
        v[at] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

// ---- unnormalised kernels -------------------------------------------------
//
// These act on a nonnegative slice `w` with total mass `s` and evaluate the
// entropy of `w / s`.

fn shannon_of(w: &[f64], s: f64) -> f64 {
    w.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let q = v / s;
            -q * q.ln()
        })
        .sum()
}

fn power_sum_of(w: &[f64], s: f64, alpha: f64) -> f64 {
    w.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| (v / s).powf(alpha))
        .sum()
}

fn max_of(w: &[f64], s: f64) -> f64 {
    w.iter().copied().fold(0.0, f64::max) / s
}

fn renyi_of(w: &[f64], s: f64, alpha: f64) -> f64 {
    if alpha.is_infinite() {
        -max_of(w, s).ln()
    } else if near_one(alpha) {
        shannon_of(w, s)
    } else {
        power_sum_of(w, s, alpha).ln() / (1.0 - alpha)
    }
}

fn tsallis_of(w: &[f64], s: f64, alpha: f64) -> f64 {
    if near_one(alpha) {
        shannon_of(w, s)
    } else {
        (power_sum_of(w, s, alpha) - 1.0) / (1.0 - alpha)
    }
}

/// `ln_α(ξ) = (ξ^{1-α} - 1)/(1-α)`, with `ln ξ` at `α = 1`.
pub fn alpha_log(xi: f64, alpha: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha-logarithm needs a positive argument, got {xi}"
        )));
    }
    check_finite_alpha(alpha)?;
    Ok(alpha_log_unchecked(xi, alpha))
}

pub(crate) fn alpha_log_unchecked(xi: f64, alpha: f64) -> f64 {
    if near_one(alpha) {
        xi.ln()
    } else {
        (xi.powf(1.0 - alpha) - 1.0) / (1.0 - alpha)
    }
}

pub fn shannon_entropy(p: &ProbVector) -> f64 {
    shannon_of(p.probs(), 1.0)
}

/// Rényi entropy; `alpha = f64::INFINITY` gives the min-entropy.
pub fn renyi_entropy(p: &ProbVector, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(renyi_of(p.probs(), 1.0, alpha))
}

pub fn tsallis_entropy(p: &ProbVector, alpha: f64) -> Result<f64> {
    check_finite_alpha(alpha)?;
    Ok(tsallis_of(p.probs(), 1.0, alpha))
}

/// `h_α(q) = -q^α ln_α q - (1-q)^α ln_α(1-q)`.
pub fn binary_tsallis(q: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "binary entropy argument {q} outside [0, 1]"
        )));
    }
    check_finite_alpha(alpha)?;
    Ok(tsallis_of(&[q, 1.0 - q], 1.0, alpha))
}

/// Shannon binary entropy `h₁(q)`.
pub fn binary_shannon(q: f64) -> Result<f64> {
    binary_tsallis(q, 1.0)
}

// ---- generalized functionals ---------------------------------------------

/// A continuous, strictly increasing map `f` with `f(1) = 0`, defining the
/// entropy `f(Σ p^α)/(1-α)`.
pub trait EntropyFunctional: Send + Sync {
    fn id(&self) -> &'static str;
    fn apply(&self, xi: f64) -> f64;
    /// `f'(1)`; the `α → 1` limit of the entropy is `f'(1)` times the Shannon
    /// entropy.
    fn slope_at_one(&self) -> f64;
    /// Family whose unconditional entropy this functional reproduces, if any.
    fn family(&self) -> Option<Family> {
        None
    }
}

/// `f(ξ) = ln ξ`: the Rényi entropies.
#[derive(Debug, Default, Clone, Copy)]
pub struct RenyiFunctional;

impl EntropyFunctional for RenyiFunctional {
    fn id(&self) -> &'static str {
        "renyi"
    }
    fn apply(&self, xi: f64) -> f64 {
        xi.ln()
    }
    fn slope_at_one(&self) -> f64 {
        1.0
    }
    fn family(&self) -> Option<Family> {
        Some(Family::Renyi)
    }
}

/// `f(ξ) = ξ - 1`: the Tsallis entropies.
#[derive(Debug, Default, Clone, Copy)]
pub struct TsallisFunctional;

impl EntropyFunctional for TsallisFunctional {
    fn id(&self) -> &'static str {
        "tsallis"
    }
    fn apply(&self, xi: f64) -> f64 {
        xi - 1.0
    }
    fn slope_at_one(&self) -> f64 {
        1.0
    }
    fn family(&self) -> Option<Family> {
        Some(Family::Tsallis)
    }
}

/// Functionals selectable by id.
pub struct FunctionalRegistry {
    entries: Vec<Box<dyn EntropyFunctional>>,
}

impl FunctionalRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Registers `f`, replacing any existing entry with the same id.
    pub fn register(&mut self, f: Box<dyn EntropyFunctional>) {
        self.entries.retain(|e| e.id() != f.id());
        self.entries.push(f);
    }

    pub fn get(&self, id: &str) -> Result<&dyn EntropyFunctional> {
        self.entries
            .iter()
            .find(|e| e.id().eq_ignore_ascii_case(id))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownFunctional(id.to_string()))
    }

    pub fn for_family(&self, family: Family) -> Result<&dyn EntropyFunctional> {
        self.entries
            .iter()
            .find(|e| e.family() == Some(family))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownFunctional(family.name().to_string()))
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.id()).collect()
    }
}

impl Default for FunctionalRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(RenyiFunctional));
        r.register(Box::new(TsallisFunctional));
        r
    }
}

/// Registry holding the built-in Rényi and Tsallis functionals.
pub fn functionals() -> &'static FunctionalRegistry {
    static REGISTRY: OnceLock<FunctionalRegistry> = OnceLock::new();
    REGISTRY.get_or_init(FunctionalRegistry::default)
}

/// `f(Σ p^α)/(1-α)` evaluated for a functional.
pub fn functional_entropy(p: &ProbVector, alpha: f64, f: &dyn EntropyFunctional) -> Result<f64> {
    check_finite_alpha(alpha)?;
    if near_one(alpha) {
        return Ok(f.slope_at_one() * shannon_entropy(p));
    }
    Ok(f.apply(power_sum_of(p.probs(), 1.0, alpha)) / (1.0 - alpha))
}

/// [`functional_entropy`] with the functional looked up by id in the built-in
/// registry.
pub fn generalized_entropy(p: &ProbVector, alpha: f64, f_id: &str) -> Result<f64> {
    functional_entropy(p, alpha, functionals().get(f_id)?)
}

// ---- joint distributions --------------------------------------------------

/// Joint table `p(x, y)`; rows index `X`, columns index `Y`.
///
/// Conditional entropies computed from it are always of `X` given `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointWire", into = "JointWire")]
pub struct JointDistribution {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointWire {
    table: Vec<Vec<f64>>,
}

impl TryFrom<JointWire> for JointDistribution {
    type Error = Error;
    fn try_from(w: JointWire) -> Result<Self> {
        Self::from_rows(&w.table)
    }
}

impl From<JointDistribution> for JointWire {
    fn from(j: JointDistribution) -> Self {
        JointWire {
            table: (0..j.nx).map(|x| j.row(x).to_vec()).collect(),
        }
    }
}

impl JointDistribution {
    /// Builds the table from row-major `data` (`nx` rows, `ny` columns).
    pub fn new(nx: usize, ny: usize, mut data: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidProbability("empty joint distribution".into()));
        }
        if data.len() != nx * ny {
            return Err(Error::InvalidProbability(format!(
                "{} entries for a {nx}x{ny} table",
                data.len()
            )));
        }
        clip_and_normalize(&mut data, "joint distribution")?;
        Ok(Self { nx, ny, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidProbability("ragged joint table".into()));
        }
        Self::new(nx, ny, rows.concat())
    }

    /// `p(x) q(y)`.
    pub fn product(px: &ProbVector, qy: &ProbVector) -> Self {
        let (nx, ny) = (px.len(), qy.len());
        let mut data = Vec::with_capacity(nx * ny);
        for &a in px.probs() {
            for &b in qy.probs() {
                data.push(a * b);
            }
        }
        Self { nx, ny, data }
    }

    /// Joint of `X` with the pair `(Y, Z)` from a row-major `p(x, y, z)` table.
    /// Column index of the result is `y * nz + z`.
    pub fn from_triple(nx: usize, ny: usize, nz: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(nx, ny * nz, data)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.ny + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.ny..(x + 1) * self.ny]
    }

    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.nx).map(|x| self.get(x, y)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx).map(|x| self.row(x).iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|y| (0..self.nx).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// Joint of `Y` (as rows) with `X` (as columns).
    pub fn transpose(&self) -> Self {
        let data = (0..self.ny)
            .flat_map(|y| (0..self.nx).map(move |x| (x, y)))
            .map(|(x, y)| self.get(x, y))
            .collect();
        Self {
            nx: self.ny,
            ny: self.nx,
            data,
        }
    }

    /// Coarse-grains `Y` through `g`: column `y` is added to column `g[y]` of
    /// the result, which has `n_groups` columns.
    pub fn coarse_grain(&self, g: &[usize], n_groups: usize) -> Result<Self> {
        if g.len() != self.ny || g.iter().any(|&k| k >= n_groups) {
            return Err(Error::InvalidArgument("invalid coarse-graining map".into()));
        }
        let mut data = vec![0.0; self.nx * n_groups];
        for x in 0..self.nx {
            for y in 0..self.ny {
                data[x * n_groups + g[y]] += self.get(x, y);
            }
        }
        Ok(Self {
            nx: self.nx,
            ny: n_groups,
            data,
        })
    }

    /// Distribution of the pair `(X, Y)`, flattened row-major.
    pub fn pair_distribution(&self) -> ProbVector {
        ProbVector(self.data.clone())
    }

    fn columns(&self) -> impl Iterator<Item = (f64, Vec<f64>)> + '_ {
        (0..self.ny).filter_map(move |y| {
            let col = self.column(y);
            let py: f64 = col.iter().sum();
            (py > 0.0).then_some((py, col))
        })
    }
}

/// `H₁(X|Y)`.
pub fn cond_shannon(j: &JointDistribution) -> f64 {
    j.columns().map(|(py, col)| py * shannon_of(&col, py)).sum()
}

/// First conditional Tsallis form, `Σ_y p(y)^α H_α(X|y)`.
pub fn cond_tsallis_first(j: &JointDistribution, alpha: f64) -> Result<f64> {
    check_finite_alpha(alpha)?;
    if near_one(alpha) {
        return Ok(cond_shannon(j));
    }
    Ok(j.columns()
        .map(|(py, col)| py.powf(alpha) * tsallis_of(&col, py, alpha))
        .sum())
}

/// Second conditional Tsallis form, `Σ_y p(y) H_α(X|y)`.
pub fn cond_tsallis_second(j: &JointDistribution, alpha: f64) -> Result<f64> {
    check_finite_alpha(alpha)?;
    if near_one(alpha) {
        return Ok(cond_shannon(j));
    }
    Ok(j.columns()
        .map(|(py, col)| py * tsallis_of(&col, py, alpha))
        .sum())
}

/// Conditional Rényi entropy `Σ_y p(y) R_α(X|y)`; `α = ∞` gives the
/// conditional min-entropy.
pub fn cond_renyi(j: &JointDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(j.columns()
        .map(|(py, col)| py * renyi_of(&col, py, alpha))
        .sum())
}

/// Conditional entropy of `X` given `Y` in the form each family uses for
/// noise and disturbance: the second Tsallis form, the averaged Rényi form, or
/// Shannon.
pub fn conditional_entropy(j: &JointDistribution, order: EntropyOrder) -> f64 {
    let a = order.alpha();
    match order.family() {
        Family::Tsallis if !near_one(a) => j
            .columns()
            .map(|(py, col)| py * tsallis_of(&col, py, a))
            .sum(),
        Family::Renyi => j
            .columns()
            .map(|(py, col)| py * renyi_of(&col, py, a))
            .sum(),
        _ => cond_shannon(j),
    }
}

/// Unconditional entropy for an order, dispatching on the family.
pub fn entropy(p: &ProbVector, order: EntropyOrder) -> f64 {
    let a = order.alpha();
    match order.family() {
        Family::Renyi => renyi_of(p.probs(), 1.0, a),
        Family::Tsallis => tsallis_of(p.probs(), 1.0, a),
        Family::Shannon => shannon_of(p.probs(), 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn alpha_log_values() {
        for a in [0.3, 1.0, 2.0, 7.0] {
            assert_eq!(alpha_log(1.0, a).unwrap(), 0.0);
        }
        assert!((alpha_log(2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        for a in [1.0 + 1e-8, 1.0 - 1e-8] {
            assert!((alpha_log(5.0, a).unwrap() - 5f64.ln()).abs() < 1e-6);
        }
        assert!(alpha_log(0.0, 2.0).is_err());
        assert!(alpha_log(-1.0, 2.0).is_err());
    }

    #[test]
    fn renyi_examples() {
        assert!((renyi_entropy(&ProbVector::uniform(4), 2.0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((renyi_entropy(&ProbVector::uniform(4), 0.5).unwrap() - 1.3862944).abs() < 1e-7);
        assert_eq!(
            renyi_entropy(&ProbVector::point_mass(3, 1), 0.5).unwrap(),
            0.0
        );
        let half = pv(&[0.5, 0.5]);
        let direct = -(0.25f64 + 0.25).ln();
        assert!((renyi_entropy(&half, 2.0).unwrap() - direct).abs() < 1e-15);
        assert!((direct - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(
            (renyi_entropy(&pv(&[0.8, 0.2]), f64::INFINITY).unwrap() + 0.8f64.ln()).abs() < 1e-15
        );
    }

    #[test]
    fn tsallis_examples() {
        for d in [2usize, 3, 7] {
            let direct = (1.0 - d as f64 * (1.0 / d as f64).powi(2)) / (2.0 - 1.0);
            let h = tsallis_entropy(&ProbVector::uniform(d), 2.0).unwrap();
            assert!((h - direct).abs() < 1e-14);
            assert!((h - (1.0 - 1.0 / d as f64)).abs() < 1e-14);
            let lna = alpha_log(d as f64, 0.4).unwrap();
            assert!((tsallis_entropy(&ProbVector::uniform(d), 0.4).unwrap() - lna).abs() < 1e-12);
        }
        assert_eq!(
            tsallis_entropy(&ProbVector::point_mass(2, 0), 3.0).unwrap(),
            0.0
        );
        assert!((tsallis_entropy(&pv(&[0.5, 0.5]), 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(tsallis_entropy(&pv(&[0.5, 0.5]), f64::INFINITY).is_err());
    }

    #[test]
    fn generalized_matches_families() {
        assert!(
            (generalized_entropy(&ProbVector::uniform(3), 0.7, "renyi").unwrap() - 3f64.ln()).abs()
                < 1e-12
        );
        assert_eq!(
            generalized_entropy(&pv(&[1.0, 0.0]), 2.5, "tsallis").unwrap(),
            0.0
        );
        assert!(matches!(
            generalized_entropy(&pv(&[1.0]), 2.0, "havrda"),
            Err(Error::UnknownFunctional(_))
        ));
        let p = pv(&[0.1, 0.2, 0.3, 0.4]);
        for a in [0.2, 0.9, 1.0, 3.0] {
            let r = generalized_entropy(&p, a, "renyi").unwrap();
            let t = generalized_entropy(&p, a, "tsallis").unwrap();
            assert!((r - renyi_entropy(&p, a).unwrap()).abs() < 1e-12);
            assert!((t - tsallis_entropy(&p, a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.0, 0.0]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.0 + 1e-13, -1e-13]).is_ok());
        assert!(ProbVector::new(vec![1.1, -0.1]).is_err());
        let p = ProbVector::new(vec![1.0 + 1e-13, -1e-13]).unwrap();
        assert_eq!(p.probs()[1], 0.0);
    }

    fn sample_joint() -> JointDistribution {
        JointDistribution::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()
    }

    #[test]
    fn conditional_forms_on_sample_joint() {
        let j = sample_joint();
        // each column is (0.8, 0.2) with weight 0.5
        let h2_col = (1.0 - (0.8f64 * 0.8 + 0.2 * 0.2)) / (2.0 - 1.0);
        let first = 2.0 * 0.5f64.powi(2) * h2_col;
        let second = 2.0 * 0.5 * h2_col;
        assert!((cond_tsallis_first(&j, 2.0).unwrap() - first).abs() < 1e-14);
        assert!((cond_tsallis_second(&j, 2.0).unwrap() - second).abs() < 1e-14);
        let min_entropy = cond_renyi(&j, f64::INFINITY).unwrap();
        assert!((min_entropy - (-(0.8f64).ln())).abs() < 1e-14);
        assert!((min_entropy - 0.2231).abs() < 1e-4);
    }

    #[test]
    fn conditional_trivial_cases() {
        let px = pv(&[0.2, 0.3, 0.5]);
        let qy = pv(&[0.6, 0.4]);
        let prod = JointDistribution::product(&px, &qy);
        assert!((cond_tsallis_first(&prod, 1.0).unwrap() - shannon_entropy(&px)).abs() < 1e-12);
        assert!(
            (cond_tsallis_second(&prod, 2.5).unwrap() - tsallis_entropy(&px, 2.5).unwrap()).abs()
                < 1e-12
        );
        assert!((cond_renyi(&prod, 0.4).unwrap() - renyi_entropy(&px, 0.4).unwrap()).abs() < 1e-12);
        assert!((cond_shannon(&prod) - shannon_entropy(&px)).abs() < 1e-12);

        let det =
            JointDistribution::from_rows(&[vec![0.3, 0.0, 0.2], vec![0.0, 0.5, 0.0]]).unwrap();
        for a in [0.3, 1.0, 2.0] {
            assert_eq!(cond_tsallis_first(&det, a).unwrap(), 0.0);
            assert_eq!(cond_tsallis_second(&det, a).unwrap(), 0.0);
            assert_eq!(cond_renyi(&det, a).unwrap(), 0.0);
        }
        assert_eq!(cond_shannon(&det), 0.0);
    }

    #[test]
    fn zero_columns_are_skipped() {
        let j = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        assert!((cond_renyi(&j, 0.5).unwrap() - LN2).abs() < 1e-12);
        assert!(
            (cond_tsallis_first(&j, 0.5).unwrap() - alpha_log(2.0, 0.5).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn binary_tsallis_values() {
        assert_eq!(binary_tsallis(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(binary_tsallis(1.0, 0.5).unwrap(), 0.0);
        assert!((binary_tsallis(0.5, 1.0).unwrap() - LN2).abs() < 1e-15);
        assert!((binary_tsallis(0.5, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (binary_tsallis(0.3, 1.7).unwrap() - binary_tsallis(0.7, 1.7).unwrap()).abs() < 1e-15
        );
        assert!(binary_tsallis(1.2, 2.0).is_err());
    }

    #[test]
    fn order_validation() {
        assert!(EntropyOrder::renyi(0.0).is_err());
        assert!(EntropyOrder::new(Family::Shannon, 2.0).is_err());
        assert!(EntropyOrder::tsallis(f64::INFINITY).is_err());
        assert!(EntropyOrder::renyi(f64::INFINITY).is_ok());
    }

    #[test]
    fn joint_serde_round_trip() {
        let j = sample_joint();
        let s = serde_json::to_string(&j).unwrap();
        let back: JointDistribution = serde_json::from_str(&s).unwrap();
        assert_eq!(j, back);
        assert!(serde_json::from_str::<JointDistribution>(r#"{"table":[[0.5],[0.6]]}"#).is_err());
    }
}
