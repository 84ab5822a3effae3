//! Sharp Hardy, Rellich and Hardy-Rellich functionals: Rayleigh quotients,
//! extremizer sweeps, remainder-term checks and the mode algebra behind the
//! second-order inequalities.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusFunction;
use crate::domains::{DistanceData, DomainKind};
use crate::dunklnum::{dunkl_gradient, dunkl_laplacian_num, RadialProfile, SmoothFunction};
use crate::error::{Error, Result};
use crate::powerlaw::{
    flat_then_decaying, mollified_decaying, rising_then_flat, FieldKind, PiecewisePower,
};
use crate::quad::{integrate_radial, MeasureCloud, RadialGrid, TailMode, WeightedIntegral};
use crate::rational::{format_rational, is_nonnegative, q, to_f64, Q};
use crate::reflection::RootSystem;

/// Relative slack of every lower-bound check, on top of quadrature error.
pub const LOWER_BOUND_TOL: f64 = 1e-6;
/// Denominators below this are rejected as degenerate.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;
/// Width of the C² join used by the second-order families.
pub const DEFAULT_JOIN_WIDTH: f64 = 0.25;

/// `∫ |field|^power · dist^weight dμ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub field: FieldKind,
    pub power: f64,
    pub weight: f64,
}

/// Rayleigh quotient `numerator / denominator`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialForm {
    pub numerator: Term,
    pub denominator: Term,
}

/// A sharp inequality `numerator ≥ target · denominator` with an
/// extremizing family of radial profiles.
pub trait SharpInequality: Send + Sync {
    fn id(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn form(&self, p: f64) -> RadialForm;
    fn target(&self, nbar: f64, p: f64) -> f64;
    /// Hypotheses on `N`, `γ` and `p` for the sharp statement.
    fn admissible(&self, dimension: usize, gamma: f64, p: f64) -> Result<()>;
    /// Extremizer at parameter `eps`; `h` is the join width where used.
    fn family(&self, nbar: f64, p: f64, eps: f64, h: f64) -> Result<PiecewisePower>;
    /// Sharp-constant tolerance on the extrapolated limit.
    fn tolerance(&self) -> f64;
    /// Whether the exponent `p` enters the functional.
    fn uses_exponent(&self) -> bool {
        false
    }
    /// A second family recorded for comparison only.
    fn alternate_family(
        &self,
        _dimension: usize,
        _nbar: f64,
        _eps: f64,
        _h: f64,
    ) -> Option<Result<PiecewisePower>> {
        None
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg()))
    }
}

struct HardyP;
struct HardyL2;
struct Rellich;
struct WeightedHardyRellich;
struct HardyRellich;

impl SharpInequality for HardyP {
    fn id(&self) -> &'static str {
        "hardy_p"
    }
    fn description(&self) -> &'static str {
        "sharp L^p Hardy inequality for p > N+2γ"
    }
    fn form(&self, p: f64) -> RadialForm {
        RadialForm {
            numerator: Term {
                field: FieldKind::Gradient,
                power: p,
                weight: 0.0,
            },
            denominator: Term {
                field: FieldKind::Value,
                power: p,
                weight: -p,
            },
        }
    }
    fn target(&self, nbar: f64, p: f64) -> f64 {
        ((p - nbar) / p).powf(p)
    }
    fn admissible(&self, dimension: usize, gamma: f64, p: f64) -> Result<()> {
        let nbar = dimension as f64 + 2.0 * gamma;
        require(p > nbar, || format!("need p > N+2γ = {nbar}, got p = {p}"))
    }
    fn family(&self, nbar: f64, p: f64, eps: f64, _h: f64) -> Result<PiecewisePower> {
        // Growing power near the origin keeps both integrals finite.
        Ok(rising_then_flat((p - nbar + eps) / p))
    }
    fn tolerance(&self) -> f64 {
        0.01
    }
    fn uses_exponent(&self) -> bool {
        true
    }
}

impl SharpInequality for HardyL2 {
    fn id(&self) -> &'static str {
        "hardy_2"
    }
    fn description(&self) -> &'static str {
        "sharp L^2 Hardy inequality"
    }
    fn form(&self, _p: f64) -> RadialForm {
        HardyP.form(2.0)
    }
    fn target(&self, nbar: f64, _p: f64) -> f64 {
        (nbar - 2.0).powi(2) / 4.0
    }
    fn admissible(&self, dimension: usize, gamma: f64, _p: f64) -> Result<()> {
        let nbar = dimension as f64 + 2.0 * gamma;
        require(nbar > 2.0, || format!("need N+2γ > 2, got {nbar}"))
    }
    fn family(&self, nbar: f64, _p: f64, eps: f64, _h: f64) -> Result<PiecewisePower> {
        Ok(flat_then_decaying((nbar - 2.0 + eps) / 2.0))
    }
    fn tolerance(&self) -> f64 {
        0.01
    }
}

impl SharpInequality for Rellich {
    fn id(&self) -> &'static str {
        "rellich"
    }
    fn description(&self) -> &'static str {
        "sharp Rellich inequality"
    }
    fn form(&self, _p: f64) -> RadialForm {
        RadialForm {
            numerator: Term {
                field: FieldKind::Laplacian,
                power: 2.0,
                weight: 0.0,
            },
            denominator: Term {
                field: FieldKind::Value,
                power: 2.0,
                weight: -4.0,
            },
        }
    }
    fn target(&self, nbar: f64, _p: f64) -> f64 {
        nbar * nbar * (nbar - 4.0).powi(2) / 16.0
    }
    fn admissible(&self, dimension: usize, gamma: f64, _p: f64) -> Result<()> {
        let nbar = dimension as f64 + 2.0 * gamma;
        require(nbar > 4.0, || format!("need N+2γ > 4, got {nbar}"))
    }
    fn family(&self, nbar: f64, _p: f64, eps: f64, h: f64) -> Result<PiecewisePower> {
        Ok(mollified_decaying((nbar - 4.0 + eps) / 2.0, h))
    }
    fn tolerance(&self) -> f64 {
        0.02
    }
}

impl SharpInequality for WeightedHardyRellich {
    fn id(&self) -> &'static str {
        "weighted_hardy_rellich"
    }
    fn description(&self) -> &'static str {
        "weighted Hardy-Rellich inequality ∫|x|²|Δ_k u|² ≥ C ∫|∇_k u|²"
    }
    fn form(&self, _p: f64) -> RadialForm {
        RadialForm {
            numerator: Term {
                field: FieldKind::Laplacian,
                power: 2.0,
                weight: 2.0,
            },
            denominator: Term {
                field: FieldKind::Gradient,
                power: 2.0,
                weight: 0.0,
            },
        }
    }
    fn target(&self, nbar: f64, _p: f64) -> f64 {
        (nbar - 2.0).powi(2) / 4.0
    }
    fn admissible(&self, dimension: usize, gamma: f64, _p: f64) -> Result<()> {
        let nbar = dimension as f64 + 2.0 * gamma;
        require(nbar > 2.0, || format!("need N+2γ > 2, got {nbar}"))
    }
    fn family(&self, nbar: f64, _p: f64, eps: f64, h: f64) -> Result<PiecewisePower> {
        Ok(mollified_decaying((nbar - 2.0 + eps) / 2.0, h))
    }
    fn tolerance(&self) -> f64 {
        0.02
    }
}

impl SharpInequality for HardyRellich {
    fn id(&self) -> &'static str {
        "hardy_rellich"
    }
    fn description(&self) -> &'static str {
        "Hardy-Rellich inequality ∫|Δ_k u|² ≥ C ∫|∇_k u|²/|x|² for N ≥ 5+2γ"
    }
    fn form(&self, _p: f64) -> RadialForm {
        RadialForm {
            numerator: Term {
                field: FieldKind::Laplacian,
                power: 2.0,
                weight: 0.0,
            },
            denominator: Term {
                field: FieldKind::Gradient,
                power: 2.0,
                weight: -2.0,
            },
        }
    }
    fn target(&self, nbar: f64, _p: f64) -> f64 {
        nbar * nbar / 4.0
    }
    fn admissible(&self, dimension: usize, gamma: f64, _p: f64) -> Result<()> {
        let n = dimension as f64;
        require(n >= 5.0 + 2.0 * gamma, || {
            format!("need N ≥ 5+2γ, got N = {dimension}, γ = {gamma}")
        })
    }
    fn family(&self, nbar: f64, _p: f64, eps: f64, h: f64) -> Result<PiecewisePower> {
        Ok(mollified_decaying((nbar - 4.0 + eps) / 2.0, h))
    }
    fn tolerance(&self) -> f64 {
        0.02
    }
    /// The same family with exponent `(N−4+ε)/2`, i.e. without the `2γ`
    /// shift; it diverges for `ε ≤ 2γ`.
    fn alternate_family(
        &self,
        dimension: usize,
        _nbar: f64,
        eps: f64,
        h: f64,
    ) -> Option<Result<PiecewisePower>> {
        Some(Ok(mollified_decaying((dimension as f64 - 4.0 + eps) / 2.0, h)))
    }
}

/// Named sharp inequalities, selected at run time.
pub struct InequalityRegistry {
    entries: BTreeMap<&'static str, Box<dyn SharpInequality>>,
}

impl InequalityRegistry {
    pub fn empty() -> Self {
        InequalityRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// The five functionals of this crate.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(HardyP));
        r.register(Box::new(HardyL2));
        r.register(Box::new(Rellich));
        r.register(Box::new(WeightedHardyRellich));
        r.register(Box::new(HardyRellich));
        r
    }

    pub fn register(&mut self, ineq: Box<dyn SharpInequality>) {
        self.entries.insert(ineq.id(), ineq);
    }

    pub fn get(&self, id: &str) -> Result<&dyn SharpInequality> {
        self.entries
            .get(id)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "inequality",
                name: id.to_string(),
            })
    }

    pub fn ids(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

// ---------------------------------------------------------------------------
// Quotients on measure clouds

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Relative error estimate of the quotient.
    pub relative_error: f64,
}

impl Quotient {
    fn from_parts(num: WeightedIntegral, den: WeightedIntegral) -> Result<Self> {
        if den.value.abs() < DEGENERATE_DENOMINATOR {
            return Err(Error::Degenerate(format!(
                "denominator {} below {DEGENERATE_DENOMINATOR}",
                den.value
            )));
        }
        Ok(Quotient {
            value: num.value / den.value,
            numerator: num.value,
            denominator: den.value,
            relative_error: num.relative_error() + den.relative_error(),
        })
    }
}

struct Fields {
    value: f64,
    grad: f64,
    lap: f64,
}

fn fields(rs: &RootSystem, u: &SmoothFunction, x: &[f64], grad: bool, lap: bool) -> Fields {
    Fields {
        value: u.eval(x),
        grad: if grad { norm(&dunkl_gradient(rs, u, x)) } else { 0.0 },
        lap: if lap { dunkl_laplacian_num(rs, u, x) } else { 0.0 },
    }
}

fn term_density(t: &Term, f: &Fields, dist: f64) -> f64 {
    let v = match t.field {
        FieldKind::Value => f.value,
        FieldKind::Gradient => f.grad,
        FieldKind::Laplacian => f.lap,
    };
    let mut out = v.abs().powf(t.power);
    if t.weight != 0.0 {
        out *= dist.powf(t.weight);
    }
    out
}

/// Integrals of several terms of `u` on `cloud`, with `dist` as the weight
/// variable.
pub fn term_integrals(
    rs: &RootSystem,
    u: &SmoothFunction,
    terms: &[Term],
    cloud: &MeasureCloud,
    dist: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<WeightedIntegral>> {
    let grad = terms.iter().any(|t| t.field == FieldKind::Gradient);
    let lap = terms.iter().any(|t| t.field == FieldKind::Laplacian);
    cloud.integrate_many(terms.len(), |x, out| {
        let f = fields(rs, u, x, grad, lap);
        let d = dist(x);
        for (o, t) in out.iter_mut().zip(terms) {
            *o = term_density(t, &f, d);
        }
    })
}

/// Rayleigh quotient of `form` on a cloud.
pub fn form_quotient(
    rs: &RootSystem,
    form: &RadialForm,
    u: &SmoothFunction,
    cloud: &MeasureCloud,
    dist: &dyn Fn(&[f64]) -> f64,
) -> Result<Quotient> {
    let v = term_integrals(rs, u, &[form.numerator, form.denominator], cloud, dist)?;
    Quotient::from_parts(v[0], v[1])
}

/// `∫|∇_k u|^p / ∫|u|^p/δ^p` on the domain of `data`.
pub fn hardy_quotient_p(
    rs: &RootSystem,
    u: &SmoothFunction,
    p: f64,
    data: &DistanceData,
    cloud: &MeasureCloud,
) -> Result<Quotient> {
    if p <= 1.0 {
        return Err(Error::InvalidConfig(format!("Hardy exponent must exceed 1, got {p}")));
    }
    form_quotient(rs, &HardyP.form(p), u, cloud, &|x| data.delta(x))
}

/// `∫|Δ_k u|² / ∫u²/|x|⁴`.
pub fn rellich_quotient(rs: &RootSystem, u: &SmoothFunction, cloud: &MeasureCloud) -> Result<Quotient> {
    form_quotient(rs, &Rellich.form(2.0), u, cloud, &norm)
}

/// `∫|x|²|Δ_k u|² / ∫|∇_k u|²`.
pub fn hr_weighted_quotient(
    rs: &RootSystem,
    u: &SmoothFunction,
    cloud: &MeasureCloud,
) -> Result<Quotient> {
    form_quotient(rs, &WeightedHardyRellich.form(2.0), u, cloud, &norm)
}

/// `∫|Δ_k u|² / ∫|∇_k u|²/|x|²`.
pub fn hr_quotient(rs: &RootSystem, u: &SmoothFunction, cloud: &MeasureCloud) -> Result<Quotient> {
    form_quotient(rs, &HardyRellich.form(2.0), u, cloud, &norm)
}

// ---------------------------------------------------------------------------
// Verification reports

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Absolute quadrature error estimate of `lhs − rhs`.
    pub error: f64,
    /// `(lhs − rhs)/|rhs|`.
    pub margin: f64,
    pub pass: bool,
}

impl CorpusEntry {
    pub fn new(label: impl Into<String>, lhs: f64, rhs: f64, error: f64) -> Self {
        let slack = LOWER_BOUND_TOL * rhs.abs() + error;
        CorpusEntry {
            label: label.into(),
            lhs,
            rhs,
            error,
            margin: (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE),
            pass: lhs >= rhs - slack,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: String,
    pub corpus: String,
    pub tolerance: f64,
    pub entries: Vec<CorpusEntry>,
    pub min_margin: f64,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(theorem: impl Into<String>, corpus: impl Into<String>, entries: Vec<CorpusEntry>) -> Self {
        let min_margin = entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min);
        VerificationReport {
            theorem: theorem.into(),
            corpus: corpus.into(),
            tolerance: LOWER_BOUND_TOL,
            pass: entries.iter().all(|e| e.pass),
            entries,
            min_margin,
        }
    }
}

/// `numerator ≥ target·denominator` over a corpus.
pub fn lower_bound_report(
    ineq: &dyn SharpInequality,
    rs: &RootSystem,
    p: f64,
    corpus: &[CorpusFunction],
    cloud: &MeasureCloud,
    dist: &dyn Fn(&[f64]) -> f64,
    corpus_name: &str,
) -> Result<VerificationReport> {
    let form = ineq.form(p);
    let target = ineq.target(rs.nbar(), p);
    let mut entries = Vec::with_capacity(corpus.len());
    for f in corpus {
        let v = term_integrals(rs, &f.function, &[form.numerator, form.denominator], cloud, dist)?;
        if v[1].value.abs() < DEGENERATE_DENOMINATOR {
            return Err(Error::Degenerate(format!("denominator vanishes for {}", f.label)));
        }
        entries.push(CorpusEntry::new(
            f.label.clone(),
            v[0].value,
            target * v[1].value,
            v[0].estimated_error + target * v[1].estimated_error,
        ));
    }
    Ok(VerificationReport::new(ineq.id(), corpus_name, entries))
}

/// The integrals entering the first-order Hardy inequalities on a domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyIntegrals {
    /// `∫|∇_k u|^p`
    pub gradient: WeightedIntegral,
    /// `∫|u|^p/δ^p`
    pub weighted: WeightedIntegral,
    /// `∫[−Δδ + (p/2−1)⟨ρ,∇δ⟩ − (p/2)|⟨ρ,∇δ⟩|]|u|^p/δ^{p−1}`
    pub remainder: WeightedIntegral,
    /// `∫Δ_kδ |u|^p/δ^{p−1}`
    pub dunkl_laplacian: WeightedIntegral,
    /// Smallest `⟨ρ,∇δ⟩` seen on the cloud.
    pub min_pairing: f64,
}

pub fn hardy_integrals(
    rs: &RootSystem,
    u: &SmoothFunction,
    data: &DistanceData,
    p: f64,
    cloud: &MeasureCloud,
) -> Result<HardyIntegrals> {
    let mut min_pairing = f64::INFINITY;
    let mut failure = None;
    let v = cloud.integrate_many(4, |x, out| {
        let f = fields(rs, u, x, true, false);
        let d = data.delta(x);
        let up = f.value.abs().powf(p);
        let pairing = match rs.rho(x) {
            Ok(rho) => rho.iter().zip(data.grad(x)).map(|(a, b)| a * b).sum::<f64>(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        min_pairing = min_pairing.min(pairing);
        let bracket =
            -(data.laplacian_delta)(x) + (p / 2.0 - 1.0) * pairing - (p / 2.0) * pairing.abs();
        out[0] = f.grad.powf(p);
        out[1] = if up == 0.0 { 0.0 } else { up / d.powf(p) };
        out[2] = if up == 0.0 { 0.0 } else { bracket * up / d.powf(p - 1.0) };
        out[3] = if up == 0.0 {
            0.0
        } else {
            (data.dunkl_laplacian_delta)(x) * up / d.powf(p - 1.0)
        };
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(HardyIntegrals {
        gradient: v[0],
        weighted: v[1],
        remainder: v[2],
        dunkl_laplacian: v[3],
        min_pairing,
    })
}

/// `∫|∇_k u|^p ≥ ((p−1)/p)^p ∫|u|^p/δ^p + ((p−1)/p)^{p−1} ∫ bracket·|u|^p/δ^{p−1}`.
pub fn hardy_remainder_check(label: &str, h: &HardyIntegrals, p: f64) -> CorpusEntry {
    let c = (p - 1.0) / p;
    let rhs = c.powf(p) * h.weighted.value + c.powf(p - 1.0) * h.remainder.value;
    let err = h.gradient.estimated_error
        + c.powf(p) * h.weighted.estimated_error
        + c.powf(p - 1.0) * h.remainder.estimated_error;
    CorpusEntry::new(label, h.gradient.value, rhs, err)
}

/// Leading constant of the ε-form: `(p−1)(ε^{−p} − ε^{−p²/(p−1)})`.
pub fn epsilon_constant(p: f64, eps: f64) -> f64 {
    (p - 1.0) * (eps.powf(-p) - eps.powf(-p * p / (p - 1.0)))
}

/// `ε` maximising [`epsilon_constant`], with value `((p−1)/p)^p`.
pub fn optimal_epsilon(p: f64) -> f64 {
    (p / (p - 1.0)).powf((p - 1.0) / p)
}

/// `ε` giving the combined exterior-ball constant `((p−N̄)/p)^p`.
pub fn exterior_epsilon(p: f64, nbar: f64) -> f64 {
    (p / (p - nbar)).powf((p - 1.0) / p)
}

/// `∫|∇_k u|^p ≥ (p−1)(ε^{−p}−ε^{−p²/(p−1)}) ∫|u|^p/δ^p − ε^{−p} ∫Δ_kδ |u|^p/δ^{p−1}`.
pub fn hardy_epsilon_check(label: &str, h: &HardyIntegrals, p: f64, eps: f64) -> Result<CorpusEntry> {
    if h.min_pairing < -1e-12 {
        return Err(Error::IncompatibleDomain(format!(
            "⟨ρ,∇δ⟩ takes the negative value {}",
            h.min_pairing
        )));
    }
    let c = epsilon_constant(p, eps);
    let e = eps.powf(-p);
    let rhs = c * h.weighted.value - e * h.dunkl_laplacian.value;
    let err = h.gradient.estimated_error
        + c.abs() * h.weighted.estimated_error
        + e * h.dunkl_laplacian.estimated_error;
    Ok(CorpusEntry::new(label, h.gradient.value, rhs, err))
}

/// Sharp exterior-ball inequality `∫|∇_k u|^p ≥ ((p−N̄)/p)^p ∫|u|^p/δ^p`, `p > N̄`.
pub fn exterior_hardy_check(
    label: &str,
    h: &HardyIntegrals,
    data: &DistanceData,
    p: f64,
    nbar: f64,
) -> Result<CorpusEntry> {
    if !matches!(data.spec.kind, DomainKind::ExteriorBall { .. } | DomainKind::PuncturedSpace) {
        return Err(Error::IncompatibleDomain(
            "the sharp exterior constant needs a ball complement".into(),
        ));
    }
    if p <= nbar {
        return Err(Error::InvalidConfig(format!("need p > N+2γ = {nbar}, got {p}")));
    }
    let c = ((p - nbar) / p).powf(p);
    Ok(CorpusEntry::new(
        label,
        h.gradient.value,
        c * h.weighted.value,
        h.gradient.estimated_error + c * h.weighted.estimated_error,
    ))
}

// ---------------------------------------------------------------------------
// Sharpness sweeps

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub nodes: usize,
    pub join_width: f64,
    /// Relative agreement required between the two evaluation paths.
    pub agreement_tol: f64,
    /// Agreement is enforced for `ε` at or above this value.
    pub agreement_floor: f64,
    pub monotone_slack: f64,
    /// Overrides the inequality's own sharp-constant tolerance.
    pub tolerance: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            nodes: 64,
            join_width: DEFAULT_JOIN_WIDTH,
            agreement_tol: 1e-6,
            agreement_floor: 1e-3,
            monotone_slack: 1e-8,
            tolerance: None,
        }
    }
}

pub const DEFAULT_EPSILONS: [f64; 6] = [0.3, 0.1, 0.03, 0.01, 0.003, 0.001];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Converged { tolerance: f64 },
    Failed { reason: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Converged { .. })
    }
}

/// Outcome of the comparison family, when an inequality has one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AlternateOutcome {
    Finite { quotients: Vec<f64>, extrapolated: f64 },
    Divergent { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighSweep {
    pub functional: String,
    pub description: String,
    pub nbar: f64,
    pub p: Option<f64>,
    pub epsilons: Vec<f64>,
    pub oracle: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub target: f64,
    pub extrapolated_oracle: f64,
    pub extrapolated_quadrature: f64,
    pub tolerance_oracle: f64,
    pub tolerance_quadrature: f64,
    pub max_path_disagreement: f64,
    pub monotone: bool,
    pub alternate: Option<AlternateOutcome>,
    pub verdict: Verdict,
}

impl RayleighSweep {
    pub fn rel_gap(&self, q: f64) -> f64 {
        (q - self.target) / self.target
    }

    /// `(ε, oracle, quadrature, target, rel_gap)` rows; the last row, at
    /// `ε = 0`, holds the extrapolated limits.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        let mut rows: Vec<[f64; 5]> = self
            .epsilons
            .iter()
            .zip(self.oracle.iter().zip(&self.quadrature))
            .map(|(e, (o, q))| [*e, *o, *q, self.target, self.rel_gap(*o)])
            .collect();
        rows.push([
            0.0,
            self.extrapolated_oracle,
            self.extrapolated_quadrature,
            self.target,
            self.rel_gap(self.extrapolated_oracle),
        ]);
        rows
    }
}

/// Quadratic extrapolation to `ε = 0` through the last three points.
pub fn richardson_limit(eps: &[f64], q: &[f64]) -> f64 {
    let n = eps.len();
    match n {
        0 => f64::NAN,
        1 => q[0],
        2 => q[1] - eps[1] * (q[0] - q[1]) / (eps[0] - eps[1]),
        _ => {
            let (e, v) = (&eps[n - 3..], &q[n - 3..]);
            (0..3)
                .map(|i| {
                    let mut w = v[i];
                    for j in 0..3 {
                        if j != i {
                            w *= -e[j] / (e[i] - e[j]);
                        }
                    }
                    w
                })
                .sum()
        }
    }
}

/// Closed-form quotient of a radial profile.
pub fn oracle_quotient(form: &RadialForm, prof: &PiecewisePower, nbar: f64) -> Result<f64> {
    let t = |t: &Term| prof.integrate(t.field, t.power, t.weight + nbar - 1.0, nbar);
    let den = t(&form.denominator)?;
    if den.abs() < DEGENERATE_DENOMINATOR {
        return Err(Error::Degenerate("vanishing denominator".into()));
    }
    Ok(t(&form.numerator)? / den)
}

/// Generic direction off every reflection hyperplane.
pub fn generic_direction(dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim)
        .map(|i| ((i + 2) as f64).sqrt() + 0.1 * (i as f64 + 1.0).ln_1p())
        .collect();
    let n = norm(&v);
    v.iter().map(|c| c / n).collect()
}

/// Quotient of a radial profile by one-dimensional quadrature along a ray,
/// with Dunkl fields from the numeric back end.
pub fn quadrature_quotient(
    rs: &RootSystem,
    form: &RadialForm,
    prof: &PiecewisePower,
    nodes: usize,
) -> Result<f64> {
    let nbar = rs.nbar();
    let dim = rs.dimension();
    let u = SmoothFunction::radial(dim, prof.to_radial_profile());
    let xi = generic_direction(dim);
    let integral = |t: &Term| -> Result<f64> {
        let fields = prof.field(t.field, nbar);
        let origin = fields[0]
            .min_exponent()
            .map_or(0.0, |e| t.power * e + t.weight);
        let far = fields.last().expect("pieces");
        let tail = match far.max_exponent() {
            Some(e) => t.power * e + t.weight,
            // Vanishing field: any integrable hint.
            None => -nbar - 2.0,
        };
        let grid = RadialGrid::new(prof.breakpoints(), nodes)?
            .with_origin_power(origin)
            .with_tail(TailMode::Substitution {
                power_hint: Some(tail),
            });
        let g = |r: f64| -> f64 {
            let x: Vec<f64> = xi.iter().map(|c| r * c).collect();
            let v = match t.field {
                FieldKind::Value => u.eval(&x),
                FieldKind::Gradient => norm(&dunkl_gradient(rs, &u, &x)),
                FieldKind::Laplacian => dunkl_laplacian_num(rs, &u, &x),
            };
            v.abs().powf(t.power) * r.powf(t.weight)
        };
        Ok(integrate_radial(g, nbar - 1.0, &grid)?.value)
    };
    let den = integral(&form.denominator)?;
    if den.abs() < DEGENERATE_DENOMINATOR {
        return Err(Error::Degenerate("vanishing denominator".into()));
    }
    Ok(integral(&form.numerator)? / den)
}

/// Evaluates the extremizer family of `ineq` along `epsilons` by both the
/// closed-form and the quadrature path.
pub fn sharpness_sweep(
    ineq: &dyn SharpInequality,
    rs: &RootSystem,
    p: f64,
    epsilons: &[f64],
    cfg: &SweepConfig,
) -> Result<RayleighSweep> {
    if epsilons.len() < 3 {
        return Err(Error::InvalidConfig("a sweep needs at least three ε values".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidConfig("ε schedule must be positive and decreasing".into()));
    }
    if *epsilons.last().expect("nonempty") < 1e-4 {
        return Err(Error::InvalidConfig("smallest ε must be at least 1e-4".into()));
    }
    let dim = rs.dimension();
    let gamma = rs.gamma_f64();
    ineq.admissible(dim, gamma, p)?;
    let nbar = rs.nbar();
    let form = ineq.form(p);
    let target = ineq.target(nbar, p);
    let mut oracle = Vec::with_capacity(epsilons.len());
    let mut quadrature = Vec::with_capacity(epsilons.len());
    let mut max_gap = 0.0f64;
    for &eps in epsilons {
        let prof = ineq.family(nbar, p, eps, cfg.join_width)?;
        let o = oracle_quotient(&form, &prof, nbar)?;
        let qd = quadrature_quotient(rs, &form, &prof, cfg.nodes)?;
        let gap = (o - qd).abs() / o.abs();
        if eps >= cfg.agreement_floor {
            max_gap = max_gap.max(gap);
            if gap > cfg.agreement_tol {
                return Err(Error::OracleMismatch {
                    epsilon: eps,
                    oracle: o,
                    quadrature: qd,
                });
            }
        }
        oracle.push(o);
        quadrature.push(qd);
    }
    let extrapolated_oracle = richardson_limit(epsilons, &oracle);
    let extrapolated_quadrature = richardson_limit(epsilons, &quadrature);
    let tolerance_oracle = cfg.tolerance.unwrap_or(ineq.tolerance());
    let tolerance_quadrature = tolerance_oracle.max(0.015);
    let monotone = oracle
        .windows(2)
        .chain(quadrature.windows(2))
        .all(|w| w[1] <= w[0] + cfg.monotone_slack * w[0].abs());
    let bounded = oracle
        .iter()
        .chain(&quadrature)
        .all(|q| *q >= target - LOWER_BOUND_TOL * target.abs());
    let gap_o = ((extrapolated_oracle - target) / target).abs();
    let gap_q = ((extrapolated_quadrature - target) / target).abs();
    let verdict = if !monotone {
        Verdict::Failed {
            reason: "quotients are not non-increasing in ε".into(),
        }
    } else if !bounded {
        Verdict::Failed {
            reason: "a quotient falls below the sharp constant".into(),
        }
    } else if gap_o > tolerance_oracle {
        Verdict::Failed {
            reason: format!("closed-form limit off by {gap_o:.3e} (tolerance {tolerance_oracle})"),
        }
    } else if gap_q > tolerance_quadrature {
        Verdict::Failed {
            reason: format!(
                "quadrature limit off by {gap_q:.3e} (tolerance {tolerance_quadrature})"
            ),
        }
    } else {
        Verdict::Converged {
            tolerance: tolerance_oracle,
        }
    };
    let alternate = alternate_outcome(ineq, dim, nbar, epsilons, cfg, &form);
    Ok(RayleighSweep {
        functional: ineq.id().to_string(),
        description: ineq.description().to_string(),
        nbar,
        p: ineq.uses_exponent().then_some(p),
        epsilons: epsilons.to_vec(),
        oracle,
        quadrature,
        target,
        extrapolated_oracle,
        extrapolated_quadrature,
        tolerance_oracle,
        tolerance_quadrature,
        max_path_disagreement: max_gap,
        monotone,
        alternate,
        verdict,
    })
}

fn alternate_outcome(
    ineq: &dyn SharpInequality,
    dim: usize,
    nbar: f64,
    epsilons: &[f64],
    cfg: &SweepConfig,
    form: &RadialForm,
) -> Option<AlternateOutcome> {
    let mut quotients = Vec::new();
    for &eps in epsilons {
        let q = ineq
            .alternate_family(dim, nbar, eps, cfg.join_width)?
            .and_then(|prof| oracle_quotient(form, &prof, nbar));
        match q {
            Ok(v) => quotients.push(v),
            Err(e) => {
                return Some(AlternateOutcome::Divergent {
                    reason: format!("at ε = {eps}: {e}"),
                })
            }
        }
    }
    let extrapolated = richardson_limit(epsilons, &quotients);
    Some(AlternateOutcome::Finite {
        quotients,
        extrapolated,
    })
}

// ---------------------------------------------------------------------------
// One-dimensional weighted Hardy inequalities and mode algebra

/// `∫|u'|² r^e dr / ∫u² r^{e−2} dr`; sharp lower bound `(e−1)²/4`.
pub fn radial_hardy_1d(exponent: f64, u: &RadialProfile, grid: &RadialGrid) -> Result<f64> {
    let d1 = u.d1.clone();
    let v = u.value.clone();
    let num = integrate_radial(|r| d1(r).powi(2), exponent, grid)?;
    let den = integrate_radial(|r| v(r).powi(2), exponent - 2.0, grid)?;
    if den.value.abs() < DEGENERATE_DENOMINATOR {
        return Err(Error::Degenerate("vanishing denominator".into()));
    }
    Ok(num.value / den.value)
}

pub fn radial_hardy_constant(exponent: f64) -> f64 {
    (exponent - 1.0).powi(2) / 4.0
}

/// Closed-form quotient of the truncated power `1` on `[0,1]`, `r^{−(e−1+ε)/2}` beyond.
pub fn radial_hardy_family_quotient(exponent: f64, eps: f64) -> Result<f64> {
    if exponent <= 1.0 {
        return Err(Error::InvalidConfig(format!("exponent must exceed 1, got {exponent}")));
    }
    let prof = flat_then_decaying((exponent - 1.0 + eps) / 2.0);
    // The weight is applied literally: `nbar` only matters for Δ.
    let num = prof.integrate(FieldKind::Gradient, 2.0, exponent, 0.0)?;
    let den = prof.integrate(FieldKind::Value, 2.0, exponent - 2.0, 0.0)?;
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeCoefficients {
    pub n: u32,
    pub c: Q,
    pub lambda: Q,
    pub a: Q,
    pub b: Q,
    pub d: Q,
    /// `((N̄−2)²/4 − K)K + λ(λ + K − (N̄−2)²/2)` at `K = (N̄−2)²/4`.
    pub weighted_certificate: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficientsDoc {
    pub n: u32,
    pub c: String,
    pub lambda: String,
    pub a: String,
    pub b: String,
    pub d: String,
    pub weighted_certificate: String,
}

impl ModeCoefficients {
    pub fn to_doc(&self) -> ModeCoefficientsDoc {
        ModeCoefficientsDoc {
            n: self.n,
            c: format_rational(&self.c),
            lambda: format_rational(&self.lambda),
            a: format_rational(&self.a),
            b: format_rational(&self.b),
            d: format_rational(&self.d),
            weighted_certificate: format_rational(&self.weighted_certificate),
        }
    }
}

/// Exact `λ_n, A_n, B_n, D_n` for candidate constant `C`.
pub fn mode_coefficients(nbar: &Q, gamma: &Q, n: u32, c: &Q) -> ModeCoefficients {
    let nq = q(n as i64);
    let two = q(2);
    let four = q(4);
    let lambda = -(&nq * (&nq + nbar - &two));
    let a = nbar - &two * &lambda - Q::one() - c;
    let b = if n == 0 {
        Q::zero()
    } else {
        &lambda * (&lambda - &two * (nbar - &four) + c) - &four * c * gamma
    };
    let d = &lambda * (&lambda - (nbar * nbar - q(8) * nbar) / &four) - nbar * nbar * gamma;
    let k = (nbar - &two) * (nbar - &two) / &four;
    // The first term vanishes at this K.
    let weighted_certificate = &lambda * (&lambda + &k - (nbar - &two) * (nbar - &two) / &two);
    ModeCoefficients {
        n,
        c: c.clone(),
        lambda,
        a,
        b,
        d,
        weighted_certificate,
    }
}

/// `D_1 = ((N−5−2γ)N̄² + 4)/4`.
pub fn d1_closed_form(dimension: usize, gamma: &Q) -> Q {
    let n = q(dimension as i64);
    let nbar = &n + q(2) * gamma;
    ((&n - q(5) - q(2) * gamma) * &nbar * &nbar + q(4)) / q(4)
}

/// `D_2 = 2N·N̄²/4`.
pub fn d2_closed_form(dimension: usize, gamma: &Q) -> Q {
    let n = q(dimension as i64);
    let nbar = &n + q(2) * gamma;
    q(2) * &n * &nbar * &nbar / q(4)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAlgebraCheck {
    pub dimension: usize,
    pub gamma: String,
    pub b0_zero: bool,
    pub d1_formula: bool,
    pub d1_nonnegative: bool,
    pub d2_formula: bool,
    pub d2_nonnegative: bool,
    pub dn_dominates_d2: bool,
    pub weighted_certificates: bool,
    pub holds: bool,
}

/// Exact checks of the mode algebra for `(N, γ)` and `3 ≤ n ≤ n_max`.
pub fn mode_algebra_check(dimension: usize, gamma: &Q, n_max: u32) -> ModeAlgebraCheck {
    let nbar = q(dimension as i64) + q(2) * gamma;
    let c = &nbar * &nbar / q(4);
    let m = |n| mode_coefficients(&nbar, gamma, n, &c);
    let (m0, m1, m2) = (m(0), m(1), m(2));
    let b0_zero = m0.b.is_zero();
    let d1_formula = m1.d == d1_closed_form(dimension, gamma);
    let d2_formula = m2.d == d2_closed_form(dimension, gamma);
    let d1_nonnegative = is_nonnegative(&m1.d);
    let d2_nonnegative = is_nonnegative(&m2.d);
    let dn_dominates_d2 = (3..=n_max).all(|n| m(n).d >= m2.d);
    let weighted_certificates = (0..=n_max).all(|n| !m(n).weighted_certificate.is_negative());
    let sharp_case = q(dimension as i64) >= q(5) + q(2) * gamma;
    let holds = b0_zero
        && d1_formula
        && d2_formula
        && d2_nonnegative
        && dn_dominates_d2
        && weighted_certificates
        && (!sharp_case || d1_nonnegative);
    ModeAlgebraCheck {
        dimension,
        gamma: format_rational(gamma),
        b0_zero,
        d1_formula,
        d1_nonnegative,
        d2_formula,
        d2_nonnegative,
        dn_dominates_d2,
        weighted_certificates,
        holds,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFunctional {
    /// `∫[u''² r^{N̄−1} + A u'² r^{N̄−3} + B u² r^{N̄−5}] dr`
    pub value: f64,
    /// `∫u² r^{N̄−5} dr`
    pub weighted_l2: f64,
    /// `D_n ∫u² r^{N̄−5}`
    pub lower_bound: f64,
    pub estimated_error: f64,
}

impl ModeFunctional {
    pub fn holds(&self) -> bool {
        self.value >= self.lower_bound - LOWER_BOUND_TOL * self.lower_bound.abs() - self.estimated_error
    }
}

/// The three-term radial functional of mode `n` at candidate constant `C`.
pub fn mode_functional(
    nbar: &Q,
    gamma: &Q,
    c: &Q,
    n: u32,
    u: &RadialProfile,
    grid: &RadialGrid,
) -> Result<ModeFunctional> {
    let m = mode_coefficients(nbar, gamma, n, c);
    let nb = to_f64(nbar);
    let (a, b, d) = (to_f64(&m.a), to_f64(&m.b), to_f64(&m.d));
    let (v, d1, d2) = (u.value.clone(), u.d1.clone(), u.d2.clone());
    let i2 = integrate_radial(|r| d2(r).powi(2), nb - 1.0, grid)?;
    let i1 = integrate_radial(|r| d1(r).powi(2), nb - 3.0, grid)?;
    let i0 = integrate_radial(|r| v(r).powi(2), nb - 5.0, grid)?;
    Ok(ModeFunctional {
        value: i2.value + a * i1.value + b * i0.value,
        weighted_l2: i0.value,
        lower_bound: d * i0.value,
        estimated_error: i2.estimated_error
            + a.abs() * i1.estimated_error
            + (b.abs() + d.abs()) * i0.estimated_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;
    use crate::reflection::{build_root_system, RootFamily};

    fn a2(k: Q) -> RootSystem {
        build_root_system(RootFamily::A(2), &[k]).unwrap()
    }

    #[test]
    fn registry_lookup() {
        let reg = InequalityRegistry::standard();
        assert_eq!(reg.ids().count(), 5);
        assert_eq!(reg.get("rellich").unwrap().id(), "rellich");
        assert!(matches!(
            reg.get("nope"),
            Err(Error::UnknownStrategy { kind: "inequality", .. })
        ));
    }

    #[test]
    fn hardy_p_oracle_closed_form() {
        let (nbar, p, eps) = (4.0, 5.0, 0.01);
        let prof = HardyP.family(nbar, p, eps, 0.0).unwrap();
        let o = oracle_quotient(&HardyP.form(p), &prof, nbar).unwrap();
        let b: f64 = (p - nbar + eps) / p;
        let expected = b.powf(p) / (1.0 + eps / (p - nbar));
        assert!((o - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn paths_agree_for_every_family() {
        let rs = build_root_system(RootFamily::Z2(5), &[q(0), q(0), q(0), q(0), q(0)]).unwrap();
        let reg = InequalityRegistry::standard();
        let cfg = SweepConfig::default();
        let nbar = rs.nbar();
        for id in ["hardy_2", "rellich", "weighted_hardy_rellich", "hardy_rellich"] {
            let ineq = reg.get(id).unwrap();
            let prof = ineq.family(nbar, 2.0, 0.01, cfg.join_width).unwrap();
            let form = ineq.form(2.0);
            let o = oracle_quotient(&form, &prof, nbar).unwrap();
            let qd = quadrature_quotient(&rs, &form, &prof, cfg.nodes).unwrap();
            assert!((o - qd).abs() < 1e-7 * o, "{id}: {o} vs {qd}");
        }
    }

    #[test]
    fn hardy_sweep_converges() {
        let rs = a2(qf(1, 6));
        let p = rs.nbar() + 1.0;
        let s = sharpness_sweep(&HardyP, &rs, p, &DEFAULT_EPSILONS, &SweepConfig::default()).unwrap();
        assert!(s.verdict.passed(), "{s:?}");
        assert!(((s.extrapolated_oracle - s.target) / s.target).abs() < 1e-6);
    }

    #[test]
    fn richardson_is_exact_for_quadratics() {
        let eps = [0.3, 0.1, 0.03];
        let q: Vec<f64> = eps.iter().map(|e| 2.0 + 3.0 * e - e * e).collect();
        assert!((richardson_limit(&eps, &q) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_schedules() {
        let rs = a2(q(1));
        let cfg = SweepConfig::default();
        for bad in [vec![0.1, 0.3, 0.01], vec![0.1, 0.01, 1e-5], vec![0.1, 0.01]] {
            assert!(matches!(
                sharpness_sweep(&HardyL2, &rs, 2.0, &bad, &cfg),
                Err(Error::InvalidConfig(_))
            ));
        }
        // p below N̄ is outside the sharp statement.
        assert!(sharpness_sweep(&HardyP, &rs, 2.0, &DEFAULT_EPSILONS, &cfg).is_err());
    }

    #[test]
    fn printed_exponent_diverges_with_weight() {
        let rs = build_root_system(RootFamily::Z2(7), &[q(1), q(0), q(0), q(0), q(0), q(0), q(0)])
            .unwrap();
        let s = sharpness_sweep(&HardyRellich, &rs, 2.0, &DEFAULT_EPSILONS, &SweepConfig::default())
            .unwrap();
        assert!(matches!(s.alternate, Some(AlternateOutcome::Divergent { .. })));
        let rs0 = build_root_system(RootFamily::Z2(5), &[q(0), q(0), q(0), q(0), q(0)]).unwrap();
        let s0 = sharpness_sweep(&HardyRellich, &rs0, 2.0, &DEFAULT_EPSILONS, &SweepConfig::default())
            .unwrap();
        match s0.alternate {
            Some(AlternateOutcome::Finite { quotients, .. }) => assert_eq!(quotients, s0.oracle),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mode_examples() {
        let gamma = q(1);
        let nbar = q(9);
        let c = &nbar * &nbar / q(4);
        assert_eq!(mode_coefficients(&nbar, &gamma, 1, &c).d, q(1));
        assert_eq!(d1_closed_form(7, &gamma), q(1));
        assert_eq!(d2_closed_form(5, &q(0)), qf(125, 2));
        assert!(mode_coefficients(&q(5), &q(0), 0, &qf(7, 3)).b.is_zero());
        assert!(mode_algebra_check(7, &gamma, 10).holds);
    }

    #[test]
    fn one_dimensional_family() {
        let e = 4.0;
        let q0 = radial_hardy_family_quotient(e, 1e-3).unwrap();
        assert!((q0 / radial_hardy_constant(e) - 1.0).abs() < 0.01);
        assert!(q0 >= radial_hardy_constant(e));
    }

    #[test]
    fn epsilon_constants() {
        let p = 3.0;
        let c = epsilon_constant(p, optimal_epsilon(p));
        assert!((c - (2.0f64 / 3.0).powi(3)).abs() < 1e-12);
        let nbar = 2.0;
        let e = exterior_epsilon(p, nbar);
        // Combined constant c(ε) − ε^{−p}(N̄−1) on |u|^p/δ^p bounds.
        let combined = epsilon_constant(p, e) - e.powf(-p) * (nbar - 1.0);
        assert!((combined - ((p - nbar) / p).powf(p)).abs() < 1e-12);
    }
}
