//! Trade-off certificates: noise plus (best-found) disturbance checked
//! against a state-independent bound.
//!
//! Each relation fixes an entropy family, the orders it admits and the bound
//! it compares against; relations are registered by id in a
//! [`RelationRegistry`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bbar_bound, is_conjugate, mu_bounds, overlap, BoundId, BoundValue, CONJUGATE_TOL,
};
use crate::correction::{
    search_correction, CorrectionProblem, CorrectionSearchResult, SearchConfig,
};
use crate::entropy::{EntropyOrder, Family};
use crate::error::{Error, Result};
use crate::noise::{check_order, noise};
use crate::quantum::{Instance, ProjectiveObservable, QuantumInstrument};

/// A certificate passes when its margin is at least `-MARGIN_SLACK`.
pub const MARGIN_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationId {
    Prop1,
    Prop2,
    Prop3,
    Binary,
}

impl RelationId {
    pub const ALL: [RelationId; 4] = [
        RelationId::Prop1,
        RelationId::Prop2,
        RelationId::Prop3,
        RelationId::Binary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationId::Prop1 => "Prop1",
            RelationId::Prop2 => "Prop2",
            RelationId::Prop3 => "Prop3",
            RelationId::Binary => "Binary",
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationId::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownRelation(s.to_string()))
    }
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Admissibility(format!(
            "{name} = {v} must be a positive finite order"
        )));
    }
    Ok(())
}

fn conjugate(alpha: f64, beta: f64) -> Result<()> {
    if !is_conjugate(alpha, beta) {
        return Err(Error::Admissibility(format!(
            "1/alpha + 1/beta = 2 required (got {:.12}, tolerance {CONJUGATE_TOL:e})",
            1.0 / alpha + 1.0 / beta
        )));
    }
    Ok(())
}

/// A noise–disturbance trade-off relation.
pub trait TradeoffRelation: Send + Sync {
    fn id(&self) -> RelationId;
    /// Entropy family used for both noise and disturbance.
    fn family(&self) -> Family;
    /// Fails with [`Error::Admissibility`] naming the violated constraint.
    fn check_admissible(&self, dim: usize, alpha: f64, beta: f64) -> Result<()>;
    fn bound(&self, c: f64, alpha: f64, beta: f64) -> Result<BoundValue>;
}

/// Tsallis noise and disturbance against the minimised Tsallis bound, for
/// all positive orders.
pub struct TsallisMinimised;

impl TradeoffRelation for TsallisMinimised {
    fn id(&self) -> RelationId {
        RelationId::Prop1
    }
    fn family(&self) -> Family {
        Family::Tsallis
    }
    fn check_admissible(&self, _dim: usize, alpha: f64, beta: f64) -> Result<()> {
        positive_finite("alpha", alpha)?;
        positive_finite("beta", beta)
    }
    fn bound(&self, c: f64, alpha: f64, beta: f64) -> Result<BoundValue> {
        bbar_bound(c, alpha, beta, Family::Tsallis)
    }
}

/// Rényi noise and disturbance against the minimised Rényi bound, for orders
/// in `(0, 1]` (`(0, 2]` for a qubit).
pub struct RenyiMinimised;

impl TradeoffRelation for RenyiMinimised {
    fn id(&self) -> RelationId {
        RelationId::Prop2
    }
    fn family(&self) -> Family {
        Family::Renyi
    }
    fn check_admissible(&self, dim: usize, alpha: f64, beta: f64) -> Result<()> {
        positive_finite("alpha", alpha)?;
        positive_finite("beta", beta)?;
        let top = if dim == 2 { 2.0 } else { 1.0 };
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if v > top {
                return Err(Error::Admissibility(format!(
                    "{name} = {v} outside (0, {top}] for dimension {dim}"
                )));
            }
        }
        Ok(())
    }
    fn bound(&self, c: f64, alpha: f64, beta: f64) -> Result<BoundValue> {
        bbar_bound(c, alpha, beta, Family::Renyi)
    }
}

/// Tsallis noise and disturbance against `ln_μ(c⁻²)` for conjugate orders.
pub struct TsallisConjugate;

impl TradeoffRelation for TsallisConjugate {
    fn id(&self) -> RelationId {
        RelationId::Prop3
    }
    fn family(&self) -> Family {
        Family::Tsallis
    }
    fn check_admissible(&self, _dim: usize, alpha: f64, beta: f64) -> Result<()> {
        positive_finite("alpha", alpha)?;
        positive_finite("beta", beta)?;
        conjugate(alpha, beta)
    }
    fn bound(&self, c: f64, alpha: f64, beta: f64) -> Result<BoundValue> {
        Ok(mu_bounds(c, alpha, beta)?.0)
    }
}

/// Qubit Rényi noise and disturbance against `-2 ln c` for conjugate orders
/// in `(0, 2]`.
pub struct BinaryRenyi;

impl TradeoffRelation for BinaryRenyi {
    fn id(&self) -> RelationId {
        RelationId::Binary
    }
    fn family(&self) -> Family {
        Family::Renyi
    }
    fn check_admissible(&self, dim: usize, alpha: f64, beta: f64) -> Result<()> {
        if dim != 2 {
            return Err(Error::Admissibility(format!(
                "dimension {dim} but d = 2 required"
            )));
        }
        positive_finite("alpha", alpha)?;
        positive_finite("beta", beta)?;
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if v > 2.0 {
                return Err(Error::Admissibility(format!("{name} = {v} outside (0, 2]")));
            }
        }
        conjugate(alpha, beta)
    }
    fn bound(&self, c: f64, alpha: f64, beta: f64) -> Result<BoundValue> {
        let mut b = mu_bounds(c, alpha, beta)?.1;
        b.id = BoundId::StndRenyi;
        Ok(b)
    }
}

pub struct RelationRegistry {
    entries: Vec<Box<dyn TradeoffRelation>>,
}

impl RelationRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    /// Registers `r`, replacing any existing entry with the same id.
    pub fn register(&mut self, r: Box<dyn TradeoffRelation>) {
        self.entries.retain(|e| e.id() != r.id());
        self.entries.push(r);
    }

    pub fn get(&self, id: RelationId) -> Result<&dyn TradeoffRelation> {
        self.entries
            .iter()
            .find(|e| e.id() == id)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownRelation(id.name().to_string()))
    }

    pub fn by_name(&self, name: &str) -> Result<&dyn TradeoffRelation> {
        self.get(name.parse()?)
    }

    pub fn ids(&self) -> Vec<RelationId> {
        self.entries.iter().map(|e| e.id()).collect()
    }
}

impl Default for RelationRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TsallisMinimised));
        r.register(Box::new(RenyiMinimised));
        r.register(Box::new(TsallisConjugate));
        r.register(Box::new(BinaryRenyi));
        r
    }
}

pub fn relations() -> &'static RelationRegistry {
    static REGISTRY: OnceLock<RelationRegistry> = OnceLock::new();
    REGISTRY.get_or_init(RelationRegistry::default)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub strategy: String,
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&CorrectionSearchResult> for SearchSummary {
    fn from(r: &CorrectionSearchResult) -> Self {
        Self {
            strategy: r.strategy.clone(),
            restarts: r.restarts,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCertificate {
    pub relation: RelationId,
    pub family: Family,
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub noise: f64,
    /// Best value found by the correction search; the true disturbance can
    /// only be smaller.
    pub disturbance: f64,
    pub disturbance_is_upper_bound: bool,
    pub bound: BoundValue,
    pub margin: f64,
    pub passed: bool,
    pub seed: u64,
    pub search: SearchSummary,
}

impl TradeoffCertificate {
    pub fn row(&self) -> CertificateRow {
        CertificateRow {
            relation: self.relation,
            d: self.dim,
            alpha: self.alpha,
            beta: self.beta,
            c: self.c,
            noise: self.noise,
            disturbance: self.disturbance,
            bound: self.bound.value,
            margin: self.margin,
            passed: self.passed,
            seed: self.seed,
        }
    }
}

/// Noise, disturbance and overlap of one instance, computed lazily and
/// shared between the relations and orders certified on it.
pub struct Certifier<'a> {
    x: &'a ProjectiveObservable,
    z: &'a ProjectiveObservable,
    m: &'a QuantumInstrument,
    search: SearchConfig,
    c: f64,
    noise_cache: HashMap<(Family, u64), f64>,
    disturbance_cache: HashMap<(Family, u64), CorrectionSearchResult>,
}

impl<'a> Certifier<'a> {
    pub fn new(
        x: &'a ProjectiveObservable,
        z: &'a ProjectiveObservable,
        m: &'a QuantumInstrument,
        search: SearchConfig,
    ) -> Result<Self> {
        let d = x.dim();
        if z.dim() != d || m.dim_in() != d {
            return Err(Error::DimensionMismatch(format!(
                "observables of dimension {d} and {}, instrument input {}",
                z.dim(),
                m.dim_in()
            )));
        }
        let c = overlap(x, z)?.c;
        Ok(Self {
            x,
            z,
            m,
            search,
            c,
            noise_cache: HashMap::new(),
            disturbance_cache: HashMap::new(),
        })
    }

    pub fn from_instance(instance: &'a Instance, search: SearchConfig) -> Result<Self> {
        instance.validate()?;
        Self::new(&instance.x, &instance.z, &instance.instrument, search)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    fn noise(&mut self, order: EntropyOrder) -> Result<f64> {
        let key = (order.family(), order.alpha().to_bits());
        if let Some(v) = self.noise_cache.get(&key) {
            return Ok(*v);
        }
        let v = noise(self.x, self.m, order)?;
        self.noise_cache.insert(key, v);
        Ok(v)
    }

    fn disturbance(&mut self, order: EntropyOrder) -> Result<&CorrectionSearchResult> {
        let key = (order.family(), order.alpha().to_bits());
        if !self.disturbance_cache.contains_key(&key) {
            check_order(order, self.z.dim())?;
            let problem = CorrectionProblem::new(self.z, self.m, order)?;
            let r = search_correction(&problem, &self.search)?;
            self.disturbance_cache.insert(key, r);
        }
        Ok(&self.disturbance_cache[&key])
    }

    pub fn certify(
        &mut self,
        relation: RelationId,
        alpha: f64,
        beta: f64,
    ) -> Result<TradeoffCertificate> {
        let rel = relations().get(relation)?;
        let d = self.dim();
        rel.check_admissible(d, alpha, beta)?;
        let family = rel.family();
        let bound = rel.bound(self.c, alpha, beta)?;
        let noise = self.noise(EntropyOrder::new(family, alpha)?)?;
        let dist = self.disturbance(EntropyOrder::new(family, beta)?)?;
        let disturbance = dist.best_value;
        let search = SearchSummary::from(dist);
        let margin = noise + disturbance - bound.value;
        Ok(TradeoffCertificate {
            relation,
            family,
            dim: d,
            alpha,
            beta,
            c: self.c,
            noise,
            disturbance,
            disturbance_is_upper_bound: true,
            bound,
            margin,
            passed: margin >= -MARGIN_SLACK,
            seed: self.search.seed,
            search,
        })
    }
}

/// Certifies one relation on one instance.
pub fn certify(
    x: &ProjectiveObservable,
    z: &ProjectiveObservable,
    m: &QuantumInstrument,
    alpha: f64,
    beta: f64,
    relation: RelationId,
    search: &SearchConfig,
) -> Result<TradeoffCertificate> {
    Certifier::new(x, z, m, search.clone())?.certify(relation, alpha, beta)
}

// ---- flat records ---------------------------------------------------------

pub const CSV_HEADER: &str = "relation,d,alpha,beta,c,noise,disturbance,bound,margin,passed,seed";

/// Number of significant digits printed in CSV rows.
pub const CSV_DIGITS: usize = 9;

/// Formats `x` with `digits` significant digits, fixed-point for moderate
/// exponents and scientific otherwise, without trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

/// The flat certificate record used for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub relation: RelationId,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub noise: f64,
    pub disturbance: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    pub seed: u64,
}

impl CertificateRow {
    pub fn to_csv(&self) -> String {
        let f = |v: f64| format_significant(v, CSV_DIGITS);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.relation,
            self.d,
            f(self.alpha),
            f(self.beta),
            f(self.c),
            f(self.noise),
            f(self.disturbance),
            f(self.bound),
            f(self.margin),
            self.passed,
            self.seed
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Parse(format!(
                "expected 11 CSV fields, found {}",
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| {
                Error::Parse(format!("field {} `{}` is not a number", i + 1, fields[i]))
            })
        };
        let int = |i: usize| -> Result<u64> {
            fields[i].parse().map_err(|_| {
                Error::Parse(format!("field {} `{}` is not an integer", i + 1, fields[i]))
            })
        };
        Ok(Self {
            relation: fields[0].parse()?,
            d: int(1)? as usize,
            alpha: num(2)?,
            beta: num(3)?,
            c: num(4)?,
            noise: num(5)?,
            disturbance: num(6)?,
            bound: num(7)?,
            margin: num(8)?,
            passed: fields[9]
                .parse()
                .map_err(|_| Error::Parse(format!("field 10 `{}` is not a boolean", fields[9])))?,
            seed: int(10)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0, 9), "0");
        assert_eq!(format_significant(LN_2, 9), "0.693147181");
        assert_eq!(format_significant(1.0, 9), "1");
        assert_eq!(format_significant(-2.5e-9, 9), "-2.5e-9");
        assert_eq!(format_significant(123456789.4, 9), "123456789");
        assert_eq!(format_significant(1.5e12, 9), "1.5e12");
        assert_eq!(format_significant(0.00012345678912, 9), "0.000123456789");
    }

    #[test]
    fn relation_names_parse() {
        for r in RelationId::ALL {
            assert_eq!(r.name().parse::<RelationId>().unwrap(), r);
        }
        assert_eq!("prop2".parse::<RelationId>().unwrap(), RelationId::Prop2);
        assert!(matches!(
            "Prop9".parse::<RelationId>(),
            Err(Error::UnknownRelation(_))
        ));
    }

    #[test]
    fn admissibility_names_the_constraint() {
        let reg = relations();
        let e = reg
            .get(RelationId::Prop2)
            .unwrap()
            .check_admissible(3, 1.5, 0.5)
            .unwrap_err();
        assert!(e.to_string().contains("alpha = 1.5 outside (0, 1]"), "{e}");
        assert!(reg
            .get(RelationId::Prop2)
            .unwrap()
            .check_admissible(2, 1.5, 2.0)
            .is_ok());
        let e = reg
            .get(RelationId::Prop3)
            .unwrap()
            .check_admissible(3, 1.0, 2.0)
            .unwrap_err();
        assert!(e.to_string().contains("1/alpha + 1/beta = 2"), "{e}");
        let e = reg
            .get(RelationId::Binary)
            .unwrap()
            .check_admissible(3, 1.0, 1.0)
            .unwrap_err();
        assert!(e.to_string().contains("d = 2"), "{e}");
        assert!(reg
            .get(RelationId::Binary)
            .unwrap()
            .check_admissible(2, 1.5, 0.75)
            .is_ok());
        assert!(reg
            .get(RelationId::Prop1)
            .unwrap()
            .check_admissible(5, 0.0, 1.0)
            .is_err());
    }

    #[test]
    fn saturation_instance() {
        let x = ProjectiveObservable::fourier(2);
        let z = ProjectiveObservable::computational(2);
        let m = QuantumInstrument::projective(&z);
        let cert = certify(
            &x,
            &z,
            &m,
            1.0,
            1.0,
            RelationId::Prop3,
            &SearchConfig::default(),
        )
        .unwrap();
        assert!((cert.noise - LN_2).abs() < 1e-9);
        assert!(cert.disturbance.abs() < 1e-9);
        assert!((cert.bound.value - LN_2).abs() < 1e-12);
        assert!(cert.margin.abs() <= 1e-7 && cert.passed);
        assert!(cert.disturbance_is_upper_bound);
    }

    #[test]
    fn trivial_instrument_passes_with_maximal_noise() {
        let x = ProjectiveObservable::fourier(3);
        let z = ProjectiveObservable::computational(3);
        let m = QuantumInstrument::trivial(3);
        let search = SearchConfig {
            restarts: 1,
            max_iterations: 50,
            ..Default::default()
        };
        let mut cert = Certifier::new(&x, &z, &m, search).unwrap();
        for (rel, a, b) in [
            (RelationId::Prop1, 0.5, 2.0),
            (RelationId::Prop2, 1.0, 0.5),
            (RelationId::Prop3, 1.5, 0.75),
        ] {
            let c = cert.certify(rel, a, b).unwrap();
            assert!(c.passed, "{c:?}");
            assert!(c.noise >= c.bound.value);
        }
        assert!(matches!(
            cert.certify(RelationId::Prop2, 1.5, 0.5),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn csv_row_round_trips_through_json() {
        let row = CertificateRow {
            relation: RelationId::Binary,
            d: 2,
            alpha: 1.5,
            beta: 0.75,
            c: std::f64::consts::FRAC_1_SQRT_2,
            noise: 0.1234567890123,
            disturbance: 1e-13,
            bound: LN_2,
            margin: -3.3e-8,
            passed: true,
            seed: u64::MAX,
        };
        let line = row.to_csv();
        let parsed = CertificateRow::from_csv(&line).unwrap();
        let json = serde_json::to_string(&parsed).unwrap();
        let back: CertificateRow = serde_json::from_str(&json).unwrap();
        assert_eq!(back, parsed);
        assert_eq!(back.to_csv(), line);
        assert!(CertificateRow::from_csv("Prop1,2,x").is_err());
    }
}
