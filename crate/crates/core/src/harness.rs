//! Randomised certification sweeps, bound tables and the built-in self-test.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bbar_bound, conjugate_order, is_conjugate, mu_bounds, stnd_bound};
use crate::certify::format_significant;
use crate::certify::{relations, Certifier, RelationId, TradeoffCertificate, CSV_DIGITS};
use crate::correction::{discard_flag, reprepare_channel, SearchConfig};
use crate::decision::{bounded_entropy, fano_upper_bounds, lower_bounds, standard_decision};
use crate::entropy::{
    cond_renyi, cond_shannon, cond_tsallis_first, cond_tsallis_second, renyi_entropy,
    shannon_entropy, tsallis_entropy, Family,
};
use crate::error::{Error, Result};
use crate::quantum::{Channel, Instance, ProjectiveObservable, QuantumInstrument};
use crate::ricochet::{proof_chain, ricochet_oracle};
use crate::sampling::{
    derive_seed, random_channel, random_instrument, random_joint, random_observable,
    random_probabilities, rng_from_seed,
};

// ---- sweeps ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dim: usize,
    pub samples: usize,
    pub relations: Vec<RelationId>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub seed: u64,
    /// Correction-search budget; its seed is replaced per sample.
    pub search: SearchConfig,
    /// Worker threads; zero means the available parallelism.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "dimension {} must be at least 2",
                self.dim
            )));
        }
        if self.relations.is_empty() || self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::InvalidArgument(
                "relation and order grids must be non-empty".into(),
            ));
        }
        for &a in self.alphas.iter().chain(&self.betas) {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "order {a} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// An order pair a relation could not be evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPair {
    pub relation: RelationId,
    pub alpha: f64,
    pub beta: f64,
    pub reason: String,
}

/// Order pairs tried for `relation`: the grid product, plus, for relations
/// that need `1/α + 1/β = 2`, each grid order completed by its conjugate.
pub fn candidate_pairs(relation: RelationId, alphas: &[f64], betas: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut push = |p: (f64, f64)| {
        if !pairs.iter().any(|q| q.0 == p.0 && q.1 == p.1) {
            pairs.push(p);
        }
    };
    for &a in alphas {
        for &b in betas {
            push((a, b));
        }
    }
    if matches!(relation, RelationId::Prop3 | RelationId::Binary) {
        for &a in alphas {
            if let Some(b) = conjugate_order(a) {
                push((a, b));
            }
        }
        for &b in betas {
            if let Some(a) = conjugate_order(b) {
                push((a, b));
            }
        }
    }
    pairs
}

/// Accepted `(relation, alpha, beta)` triples and the rejected pairs.
pub type PairPlan = (Vec<(RelationId, f64, f64)>, Vec<RejectedPair>);

/// Splits the candidate pairs of every relation into admissible ones and
/// rejections, for dimension `dim`.
pub fn plan_pairs(
    dim: usize,
    rels: &[RelationId],
    alphas: &[f64],
    betas: &[f64],
) -> Result<PairPlan> {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for &r in rels {
        let rel = relations().get(r)?;
        for (a, b) in candidate_pairs(r, alphas, betas) {
            match rel.check_admissible(dim, a, b) {
                Ok(()) => accepted.push((r, a, b)),
                Err(e) => rejected.push(RejectedPair {
                    relation: r,
                    alpha: a,
                    beta: b,
                    reason: e.to_string(),
                }),
            }
        }
    }
    Ok((accepted, rejected))
}

/// Random instance for one sample: Haar-random eigenbases, an instrument
/// with 2 or `d` outcomes and 1 or 2 Kraus operators per outcome. From
/// dimension 3 on, every fourth sample gets a degenerate `Z`.
pub fn sample_instance(dim: usize, sample_seed: u64, index: usize) -> Result<Instance> {
    let mut rng = rng_from_seed(sample_seed);
    let x = random_observable(dim, &vec![1; dim], &mut rng)?;
    let z = if dim >= 3 && index % 4 == 3 {
        let mut profile = vec![1; dim - 1];
        profile[0] = 2;
        random_observable(dim, &profile, &mut rng)?
    } else {
        random_observable(dim, &vec![1; dim], &mut rng)?
    };
    let n = if rng.random_bool(0.5) { 2 } else { dim };
    let k = if rng.random_bool(0.5) { 1 } else { 2 };
    let instrument = random_instrument(dim, dim, n, k, &mut rng)?;
    Ok(Instance { x, z, instrument })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub seed: u64,
    pub certificates: Vec<TradeoffCertificate>,
    pub errors: Vec<String>,
}

fn run_sample(cfg: &SweepConfig, plan: &[(RelationId, f64, f64)], index: usize) -> SampleOutcome {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut out = SampleOutcome {
        index,
        seed,
        certificates: Vec::new(),
        errors: Vec::new(),
    };
    let inst = match sample_instance(cfg.dim, seed, index) {
        Ok(i) => i,
        Err(e) => {
            out.errors.push(format!("sample {index}: {e}"));
            return out;
        }
    };
    let search = SearchConfig {
        seed,
        ..cfg.search.clone()
    };
    let mut certifier = match Certifier::from_instance(&inst, search) {
        Ok(c) => c,
        Err(e) => {
            out.errors.push(format!("sample {index}: {e}"));
            return out;
        }
    };
    for &(r, a, b) in plan {
        match certifier.certify(r, a, b) {
            Ok(c) => out.certificates.push(c),
            Err(e) => out
                .errors
                .push(format!("sample {index} {r} ({a}, {b}): {e}")),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub certificates: usize,
    pub failures: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub certificates: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub by_relation: BTreeMap<RelationId, RelationStats>,
    pub rejected: Vec<RejectedPair>,
    pub errors: Vec<String>,
}

impl SweepSummary {
    pub fn all_passed(&self) -> bool {
        self.failures == 0 && self.errors.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub certificates: Vec<TradeoffCertificate>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(crate::certify::CSV_HEADER);
        s.push('\n');
        for c in &self.certificates {
            s.push_str(&c.row().to_csv());
            s.push('\n');
        }
        s
    }
}

/// Runs a sweep. Samples are processed on a pool of `cfg.jobs` workers and
/// merged in sample order, so the output does not depend on the pool size.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let (plan, rejected) = plan_pairs(cfg.dim, &cfg.relations, &cfg.alphas, &cfg.betas)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::NumericalFailure(format!("worker pool: {e}")))?;
    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        (0..cfg.samples)
            .into_par_iter()
            .map(|i| run_sample(cfg, &plan, i))
            .collect()
    });
    let mut certificates = Vec::new();
    let mut errors = Vec::new();
    let mut by_relation: BTreeMap<RelationId, RelationStats> = BTreeMap::new();
    for o in outcomes {
        errors.extend(o.errors);
        for c in o.certificates {
            let st = by_relation.entry(c.relation).or_insert(RelationStats {
                certificates: 0,
                failures: 0,
                min_margin: f64::INFINITY,
            });
            st.certificates += 1;
            st.failures += usize::from(!c.passed);
            st.min_margin = st.min_margin.min(c.margin);
            certificates.push(c);
        }
    }
    let summary = SweepSummary {
        dim: cfg.dim,
        samples: cfg.samples,
        seed: cfg.seed,
        certificates: certificates.len(),
        failures: certificates.iter().filter(|c| !c.passed).count(),
        min_margin: certificates
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min),
        by_relation,
        rejected,
        errors,
    };
    Ok(SweepReport {
        certificates,
        summary,
    })
}

// ---- bound tables ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b_t: f64,
    pub b_r: f64,
    pub mu_t: Option<f64>,
    pub mu_r: Option<f64>,
    pub argmin_theta_t: f64,
    pub argmin_theta_r: f64,
}

pub const BOUNDS_HEADER: &str = "c,alpha,beta,B_T,B_R,MU_T,MU_R,argmin_theta_T,argmin_theta_R";

impl BoundsRow {
    pub fn to_csv(&self) -> String {
        let f = |v: f64| format_significant(v, CSV_DIGITS);
        let o = |v: Option<f64>| v.map(f).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            f(self.c),
            f(self.alpha),
            f(self.beta),
            f(self.b_t),
            f(self.b_r),
            o(self.mu_t),
            o(self.mu_r),
            f(self.argmin_theta_t),
            f(self.argmin_theta_r)
        )
    }
}

/// Tabulates the minimised and conjugate-order bounds over a grid.
pub fn bounds_table(cs: &[f64], alphas: &[f64], betas: &[f64]) -> Result<Vec<BoundsRow>> {
    if cs.is_empty() || alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidArgument(
            "bound grids must be non-empty".into(),
        ));
    }
    let mut rows = Vec::new();
    for &c in cs {
        for &a in alphas {
            for &b in betas {
                let t = bbar_bound(c, a, b, Family::Tsallis)?;
                let r = bbar_bound(c, a, b, Family::Renyi)?;
                let mu = if is_conjugate(a, b) {
                    Some(mu_bounds(c, a, b)?)
                } else {
                    None
                };
                rows.push(BoundsRow {
                    c,
                    alpha: a,
                    beta: b,
                    b_t: t.value,
                    b_r: r.value,
                    mu_t: mu.as_ref().map(|m| m.0.value),
                    mu_r: mu.as_ref().map(|m| m.1.value),
                    argmin_theta_t: t.argmin_theta.unwrap_or(0.0),
                    argmin_theta_r: r.argmin_theta.unwrap_or(0.0),
                });
            }
        }
    }
    Ok(rows)
}

/// At `α = β = 1`: which of the minimised bound and `-2 ln c` is larger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundOrdering {
    pub c: f64,
    pub minimised: f64,
    pub conjugate: f64,
    pub larger: String,
}

pub fn bound_ordering(cs: &[f64]) -> Result<Vec<BoundOrdering>> {
    cs.iter()
        .map(|&c| {
            let b = bbar_bound(c, 1.0, 1.0, Family::Renyi)?.value;
            let m = stnd_bound(c)?.value;
            let larger = if (b - m).abs() <= 1e-9 {
                "equal"
            } else if b > m {
                "minimised"
            } else {
                "conjugate"
            };
            Ok(BoundOrdering {
                c,
                minimised: b,
                conjugate: m,
                larger: larger.into(),
            })
        })
        .collect()
}

// ---- self-test ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest violation (or discrepancy) seen, `0` when none.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub first_failure: Option<String>,
}

const SELFTEST_SEED: u64 = 0x5e1f_7e57;

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    failed: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            worst: 0.0,
            failed: None,
        }
    }

    /// Records a case whose violation is `excess` (positive means failing
    /// beyond `slack`).
    fn case(&mut self, excess: f64, slack: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        let excess = if excess.is_nan() {
            f64::INFINITY
        } else {
            excess
        };
        self.worst = self.worst.max(excess.max(0.0));
        if excess > slack && self.failed.is_none() {
            self.failed = Some(what());
        }
    }

    fn error(&mut self, e: Error) {
        self.cases += 1;
        if self.failed.is_none() {
            self.failed = Some(e.to_string());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.failed.is_none(),
            cases: self.cases,
            worst: self.worst,
            detail: self.failed.unwrap_or_default(),
        }
    }
}

fn ricochet_case(
    t: &mut Tally,
    x: &ProjectiveObservable,
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    psi: &Channel,
) {
    match ricochet_oracle(x, z, m, psi) {
        Ok(r) => {
            t.case(r.max_discrepancy(), 1e-9, || {
                format!("discrepancy {:e}", r.max_discrepancy())
            });
            t.case((r.c - r.c_transposed).abs(), 1e-12, || {
                "transposed overlap differs".into()
            });
            for (a, b, fam) in [(0.5, 2.0, Family::Tsallis), (1.0, 1.0, Family::Renyi)] {
                match proof_chain(&r, x, z, m, psi, a, b, fam) {
                    Ok(ch) => {
                        let excess = (ch.x_given_u - ch.noise)
                            .max(ch.z_given_u - ch.disturbance)
                            .max(ch.bound - ch.x_given_u - ch.z_given_u);
                        t.case(excess, 1e-9, || format!("entropy chain broken: {ch:?}"));
                    }
                    Err(e) => t.error(e),
                }
            }
        }
        Err(e) => t.error(e),
    }
}

fn ricochet_check() -> CheckResult {
    let mut t = Tally::new("ricochet");
    let run = ricochet_case;
    let x2 = ProjectiveObservable::fourier(2);
    let z2 = ProjectiveObservable::computational(2);
    let triv = QuantumInstrument::trivial(2);
    match discard_flag(&triv) {
        Ok(psi) => run(&mut t, &x2, &z2, &triv, &psi),
        Err(e) => t.error(e),
    }
    let proj = QuantumInstrument::projective(&x2);
    let zp: Vec<_> = z2.branches().iter().map(|b| b.projector.clone()).collect();
    match reprepare_channel(&zp, 2, &[0, 1]) {
        Ok(psi) => run(&mut t, &x2, &z2, &proj, &psi),
        Err(e) => t.error(e),
    }
    for i in 0..8u64 {
        let d = 2 + (i as usize % 2);
        let mut rng = rng_from_seed(derive_seed(SELFTEST_SEED, i));
        let built = (|| -> Result<_> {
            let x = random_observable(d, &vec![1; d], &mut rng)?;
            let z = random_observable(d, &vec![1; d], &mut rng)?;
            let m = random_instrument(d, d, 2, 2, &mut rng)?;
            let psi = random_channel(2 * d, d, 2, &mut rng)?;
            Ok((x, z, m, psi))
        })();
        match built {
            Ok((x, z, m, psi)) => run(&mut t, &x, &z, &m, &psi),
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

const ORDER_GRID: [f64; 6] = [0.3, 0.5, 1.0, 1.5, 2.0, 5.0];

fn sandwich_check() -> CheckResult {
    let mut t = Tally::new("error-probability sandwich");
    let mut rng = rng_from_seed(derive_seed(SELFTEST_SEED, 100));
    for _ in 0..200 {
        let nx = rng.random_range(2..=4);
        let ny = rng.random_range(1..=4);
        let j = random_joint(nx, ny, &mut rng);
        let rule = standard_decision(&j).rule;
        for fam in [Family::Shannon, Family::Tsallis, Family::Renyi] {
            for a in ORDER_GRID {
                if fam == Family::Shannon && a != 1.0 {
                    continue;
                }
                let h = match bounded_entropy(&j, a, fam) {
                    Ok(h) => h,
                    Err(e) => {
                        t.error(e);
                        continue;
                    }
                };
                for lb in lower_bounds(&j, a, fam) {
                    t.case(lb.value - h, 1e-9, || {
                        format!("{fam} order {a}: {:?} above entropy", lb.id)
                    });
                }
                match fano_upper_bounds(&j, a, fam, &rule) {
                    Ok(ubs) => {
                        for ub in ubs {
                            t.case(h - ub.value, 1e-9, || {
                                format!("{fam} order {a}: {:?} below entropy", ub.id)
                            });
                        }
                    }
                    Err(e) => t.error(e),
                }
            }
        }
    }
    t.finish()
}

fn limit_check() -> CheckResult {
    let mut t = Tally::new("order-one limits");
    let mut rng = rng_from_seed(derive_seed(SELFTEST_SEED, 200));
    for _ in 0..100 {
        let n = rng.random_range(2..=5);
        let p = random_probabilities(n, &mut rng);
        let j = random_joint(n, 3, &mut rng);
        let h = shannon_entropy(&p);
        let hc = cond_shannon(&j);
        for a in [1.0 - 1e-8, 1.0 + 1e-8] {
            let vals = [
                renyi_entropy(&p, a).map(|v| v - h),
                tsallis_entropy(&p, a).map(|v| v - h),
                cond_renyi(&j, a).map(|v| v - hc),
                cond_tsallis_first(&j, a).map(|v| v - hc),
                cond_tsallis_second(&j, a).map(|v| v - hc),
            ];
            for v in vals {
                match v {
                    Ok(d) => t.case(d.abs(), 1e-5, || format!("order {a}: deviation {d:e}")),
                    Err(e) => t.error(e),
                }
            }
        }
    }
    for c in [0.3, 0.6, 0.9] {
        let at = bbar_bound(c, 1.0, 1.0, Family::Renyi).map(|b| b.value);
        let near = bbar_bound(c, 1.0 + 1e-6, 1.0 - 1e-6, Family::Tsallis).map(|b| b.value);
        match (at, near) {
            (Ok(a), Ok(n)) => t.case((a - n).abs(), 1e-5, || {
                format!("bound at c = {c} jumps near order one")
            }),
            (Err(e), _) | (_, Err(e)) => t.error(e),
        }
    }
    t.finish()
}

/// Validates an instance fixture; a fixture that fails validation fails the
/// check.
pub fn fixture_check(name: &str, contents: &str) -> CheckResult {
    let mut t = Tally::new("fixture");
    let parsed: std::result::Result<Instance, _> = serde_json::from_str(contents);
    match parsed
        .map_err(|e| Error::Parse(e.to_string()))
        .and_then(|i| i.validate())
    {
        Ok(()) => t.case(0.0, 0.0, String::new),
        Err(e) => {
            t.cases += 1;
            t.failed = Some(e.to_string());
        }
    }
    let mut r = t.finish();
    r.name = format!("fixture {name}");
    r
}

/// Runs the built-in checks, then one check per extra fixture
/// `(name, contents)`.
pub fn selftest(fixtures: &[(String, String)]) -> SelfTestReport {
    let mut checks = vec![ricochet_check(), sandwich_check(), limit_check()];
    for (name, contents) in fixtures {
        checks.push(fixture_check(name, contents));
    }
    let first_failure = checks
        .iter()
        .find(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail));
    SelfTestReport {
        passed: first_failure.is_none(),
        checks,
        first_failure,
    }
}
