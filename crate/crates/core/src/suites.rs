//! Named verification suites behind a common trait, plus the reusable
//! checks they are assembled from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{polar_corpus, profile_corpus, flat_corpus, CorpusFunction, PolarCorpusSpec, LATTICE};
use crate::domains::{distance_data, equivariance_check, rho_pairing, DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::harmonics::{build_basis, eigenvalue, expand, hharmonic_dim, hharmonic_kernel, parseval_residual, sphere_eigencheck};
use crate::inequalities::{
    exterior_epsilon, exterior_hardy_check, hardy_epsilon_check, hardy_integrals, hardy_remainder_check,
    lower_bound_report, mode_algebra_check, mode_functional, optimal_epsilon,
    sharpness_sweep, InequalityRegistry, RayleighSweep, SweepConfig, VerificationReport, DEFAULT_EPSILONS,
    LOWER_BOUND_TOL,
};
use crate::polyalg::{
    divided_difference, leibniz_check, positive_subsystem_independence, random_polynomial, Polynomial,
    SymbolicDunkl,
};
use crate::adapted::weighted_sphere_rule;
use crate::quad::{reflected_measure_invariance, sphere_rule, RadialGrid, MAX_FULL_SPHERE_DIM};
use crate::rational::{parse_rational, q, Q};
use crate::reflection::{
    build_root_system, generate_group, orbit_count, reflection_jacobian, reflection_jacobian_exact, RootFamily,
    RootSystem,
};

/// Rounds to 15 significant digits so reports are stable across platforms.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

fn ser15<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round15(*x))
}

/// One verdict in a suite report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: String,
    pub theorem: String,
    pub name: String,
    pub pass: bool,
    pub skipped: bool,
    /// Threshold the measured value was held to.
    #[serde(serialize_with = "ser15")]
    pub tolerance: f64,
    /// Residual, failure count, margin or gap, depending on the check.
    #[serde(serialize_with = "ser15")]
    pub value: f64,
    pub note: String,
}

impl Check {
    pub fn new(theorem: &str, name: impl Into<String>, pass: bool, tolerance: f64, value: f64) -> Self {
        Check {
            suite: String::new(),
            theorem: theorem.to_string(),
            name: name.into(),
            pass,
            skipped: false,
            tolerance,
            value,
            note: String::new(),
        }
    }

    /// `value ≤ tolerance`.
    pub fn bounded(theorem: &str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(theorem, name, value <= tolerance, tolerance, value)
    }

    /// Exact identity with `failures` violations.
    pub fn exact(theorem: &str, name: impl Into<String>, failures: usize) -> Self {
        Self::new(theorem, name, failures == 0, 0.0, failures as f64)
    }

    pub fn skipped(theorem: &str, name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut c = Self::new(theorem, name, true, 0.0, 0.0);
        c.skipped = true;
        c.note = reason.into();
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn from_report(report: &VerificationReport, name: impl Into<String>) -> Self {
        let failed = report.entries.iter().filter(|e| !e.pass).count();
        Check::new(&report.theorem, name, report.pass, report.tolerance, report.min_margin).with_note(format!(
            "{} functions, {failed} failed, min relative margin {:.3e}",
            report.entries.len(),
            report.min_margin
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedSweep {
    pub name: String,
    pub sweep: RayleighSweep,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOutcome {
    pub checks: Vec<Check>,
    pub sweeps: Vec<NamedSweep>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn extend(&mut self, cs: impl IntoIterator<Item = Check>) {
        self.checks.extend(cs);
    }

    fn add_sweep(&mut self, name: &str, sweep: RayleighSweep) {
        let gap = sweep.rel_gap(sweep.extrapolated_oracle).abs();
        let mut c = Check::new(&sweep.functional, format!("{name} sweep"), sweep.verdict.passed(), sweep.tolerance_oracle, gap)
            .with_note(format!(
                "limit {:.6} (oracle), {:.6} (quadrature), target {:.6}, path disagreement {:.2e}",
                sweep.extrapolated_oracle, sweep.extrapolated_quadrature, sweep.target, sweep.max_path_disagreement
            ));
        if let crate::inequalities::Verdict::Failed { reason } = &sweep.verdict {
            c.note = format!("{}; {reason}", c.note);
        }
        self.checks.push(c);
        self.sweeps.push(NamedSweep {
            name: name.to_string(),
            sweep,
        });
    }
}

// ---------------------------------------------------------------------------
// Configuration

/// Parameters shared by all suites. Missing fields take the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub family: String,
    pub rank: usize,
    /// Dihedral parameter for `I2`.
    pub m: usize,
    /// One multiplicity per orbit, as decimals or fractions. Empty means 1.
    pub k: Vec<String>,
    /// `None` selects `p = N+2γ+1`.
    pub p: Option<f64>,
    pub epsilons: Vec<f64>,
    /// Overrides the sharp-constant tolerances.
    pub tolerance: Option<f64>,
    /// Degree of exactness of the sphere rules.
    pub quad_order: usize,
    /// Radial nodes per interval in the sweeps.
    pub radial_nodes: usize,
    /// Largest harmonic degree or mode index examined.
    pub nmax: u32,
    pub corpus_size: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            family: "A".into(),
            rank: 2,
            m: 4,
            k: Vec::new(),
            p: None,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            tolerance: None,
            quad_order: 10,
            radial_nodes: 64,
            nmax: 4,
            corpus_size: 20,
            seed: 2024,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("tolerance must be positive, got {t}")));
            }
        }
        if self.epsilons.len() < 3 {
            return Err(Error::InvalidConfig("the ε schedule needs at least three values".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) || self.epsilons.iter().any(|e| *e <= 0.0) {
            return Err(Error::InvalidConfig("the ε schedule must be positive and decreasing".into()));
        }
        if let Some(p) = self.p {
            if !(p > 1.0 && p.is_finite()) {
                return Err(Error::InvalidConfig(format!("p must exceed 1, got {p}")));
            }
        }
        if self.corpus_size == 0 || self.quad_order == 0 {
            return Err(Error::InvalidConfig("corpus size and quadrature order must be positive".into()));
        }
        Ok(())
    }

    pub fn root_system(&self) -> Result<RootSystem> {
        let param = if self.family.eq_ignore_ascii_case("I2") { self.m } else { self.rank };
        let family = RootFamily::parse(&self.family, param)?;
        let orbits = orbit_count(family)?;
        let mut ks: Vec<Q> = self.k.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?;
        if ks.is_empty() {
            ks = vec![q(1); orbits];
        } else if ks.len() == 1 && orbits > 1 {
            ks = vec![ks[0].clone(); orbits];
        }
        build_root_system(family, &ks)
    }

    pub fn exponent(&self, rs: &RootSystem) -> f64 {
        self.p.unwrap_or(rs.nbar() + 1.0)
    }

    fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            nodes: self.radial_nodes,
            tolerance: self.tolerance,
            ..SweepConfig::default()
        }
    }
}

// ---------------------------------------------------------------------------
// Reusable checks

pub fn group_order(family: RootFamily) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    match family {
        RootFamily::A(n) => fact(n + 1),
        RootFamily::B(n) => (1usize << n) * fact(n),
        RootFamily::Z2(n) => 1usize << n,
        RootFamily::I2(m) => 2 * m,
    }
}

/// Reflection Jacobians, group structure and measure invariance.
pub fn geometry_checks(rs: &RootSystem, quad_order: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let roots = rs.positive_roots();
    if rs.is_exact() {
        let bad = roots.iter().filter(|r| reflection_jacobian_exact(r) != Some(q(-1))).count();
        out.push(Check::exact("reflection_jacobian", "det σ_α = −1 (exact)", bad));
    } else {
        let worst = roots.iter().map(|r| (reflection_jacobian(r) + 1.0).abs()).fold(0.0, f64::max);
        out.push(Check::bounded("reflection_jacobian", "det σ_α = −1", worst, 1e-12));
    }
    let expected = group_order(rs.family());
    let g = generate_group(rs, 4 * expected)?;
    out.push(
        Check::new("reflection_group", "group order", g.order() == expected, 0.0, g.order() as f64)
            .with_note(format!("expected {expected}")),
    );
    let structure = g.is_closed() && g.preserves_roots(rs) && g.multiplicity_invariant(rs);
    out.push(Check::new("reflection_group", "closure, root and multiplicity invariance", structure, 0.0, 0.0));
    if rs.dimension() <= MAX_FULL_SPHERE_DIM {
        let grid = RadialGrid::uniform(4.0, 8, 12)?;
        let rule = weighted_sphere_rule(rs, rs.dimension(), quad_order)?;
        let shift: Vec<f64> = (0..rs.dimension()).map(|i| 0.3 + 0.2 * i as f64).collect();
        let f = |x: &[f64]| (-x.iter().zip(&shift).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp();
        let v = reflected_measure_invariance(rs, &f, &grid, &rule)?;
        out.push(Check::bounded("reflected_measure", "∫f∘σ_α dμ_k = ∫f dμ_k", v, 1e-6));
    }
    Ok(out)
}

/// `⟨ρ,∇δ⟩` values and `∇δ` equivariance on every domain compatible with `rs`.
pub fn distance_checks(rs: &RootSystem, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let dim = rs.dimension();
    let mut out = Vec::new();
    let two_gamma = 2.0 * rs.gamma_f64();
    let mut domains = vec![(DomainSpec::exterior_ball(dim, 1.0), rs.clone())];
    if matches!(rs.family(), RootFamily::A(n) if n + 1 == dim) {
        domains.push((DomainSpec::wedge(dim), rs.clone()));
    }
    domains.push((DomainSpec::halfspace(dim + 1, dim), rs.embedded(dim + 1)?));
    for (spec, sys) in domains {
        let pts = spec.samples(samples, 3.0, seed);
        let mut worst: f64 = 0.0;
        for x in &pts {
            let v = rho_pairing(&spec, &sys, x)?;
            let expected = match spec.kind {
                DomainKind::ExteriorBall { .. } | DomainKind::PuncturedSpace => {
                    two_gamma / x.iter().map(|c| c * c).sum::<f64>().sqrt()
                }
                _ => 0.0,
            };
            worst = worst.max((v - expected).abs());
        }
        out.push(Check::bounded("rho_pairing", format!("⟨ρ,∇δ⟩ on {}", spec.name()), worst, 1e-12));
        let g = generate_group(&sys, 4 * group_order(sys.family()))?;
        let rep = equivariance_check(&spec, &sys, &g, &pts)?;
        let worst = rep.gradient_error.max(rep.invariance_error).max(rep.unit_error);
        out.push(Check::bounded(
            "distance_equivariance",
            format!("∇δ∘g = g∘∇δ on {}", spec.name()),
            worst,
            crate::domains::EQUIVARIANCE_TOL,
        ));
    }
    Ok(out)
}

/// Random polynomials of degree at most `max_degree`.
pub fn polynomial_corpus(nvars: usize, count: usize, max_degree: u32, seed: u64) -> Vec<Polynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_polynomial(&mut rng, nvars, max_degree, 4))
        .collect()
}

/// Exact symbolic identities over a polynomial corpus. Each check counts
/// violations, so zero means every residual vanished identically.
pub fn identity_checks(rs: &RootSystem, polys: &[Polynomial]) -> Result<Vec<Check>> {
    let ctx = SymbolicDunkl::new(rs)?;
    let dim = rs.dimension();
    let invariant = Polynomial::norm_sq(dim);
    let flips: Vec<bool> = (0..rs.positive_roots().len()).map(|i| i % 2 == 0).collect();
    let mut fails = [0usize; 6];
    for (idx, p) in polys.iter().enumerate() {
        let other = &polys[(idx + 1) % polys.len()];
        let t: Vec<Polynomial> = (0..dim).map(|i| ctx.apply(i, p)).collect::<Result<_>>()?;
        for i in 0..dim {
            for j in i + 1..dim {
                if ctx.apply(i, &t[j])? != ctx.apply(j, &t[i])? {
                    fails[0] += 1;
                }
            }
        }
        if ctx.laplacian_squares(p)? != ctx.laplacian_formula(p)? {
            fails[1] += 1;
        }
        for i in 0..dim {
            if !leibniz_check(rs, p, other, i)?.general.is_zero() {
                fails[2] += 1;
            }
            let short = leibniz_check(rs, p, &invariant, i)?;
            if !(short.short_rule_applies && short.short.is_zero() && short.general.is_zero()) {
                fails[3] += 1;
            }
            if !positive_subsystem_independence(rs, &flips, p, i)? {
                fails[5] += 1;
            }
        }
        for root in rs.positive_roots() {
            match divided_difference(p, root) {
                Ok(_) => {}
                Err(Error::InvariantBreach(_)) => fails[4] += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let n = polys.len();
    let names = [
        ("dunkl_commutativity", "T_iT_j = T_jT_i"),
        ("dunkl_laplacian", "Σ T_i² equals the expanded Laplacian"),
        ("leibniz_rule", "product rule with reflection correction"),
        ("leibniz_rule_invariant", "plain product rule for an invariant factor"),
        ("divided_difference", "(p − p∘σ_α)/⟨α,x⟩ is a polynomial"),
        ("positive_subsystem", "T_i independent of the positive subsystem"),
    ];
    Ok(names
        .iter()
        .zip(fails)
        .map(|((id, name), f)| Check::exact(id, *name, f).with_note(format!("{n} polynomials")))
        .collect())
}

/// Kernel dimensions, exact harmonicity, the sphere eigenvalue relation and,
/// where a sphere rule exists, Parseval on damped polynomials.
pub fn harmonic_checks(rs: &RootSystem, nmax: u32, quad_order: usize, parseval_count: usize, seed: u64) -> Result<Vec<Check>> {
    let dim = rs.dimension();
    let mut out = Vec::new();
    let mut dim_fail = Vec::new();
    let (mut harmonic_fail, mut eigen_fail, mut total) = (0, 0, 0);
    let ctx = SymbolicDunkl::new(rs)?;
    for n in 0..=nmax {
        let kernel = hharmonic_kernel(rs, n)?;
        if kernel.len() != hharmonic_dim(n, dim) {
            dim_fail.push(n);
        }
        for y in &kernel {
            total += 1;
            if !ctx.laplacian_formula(y)?.is_zero() {
                harmonic_fail += 1;
            }
            if !sphere_eigencheck(rs, y)?.is_zero() {
                eigen_fail += 1;
            }
        }
        let lambda = eigenvalue(rs, n);
        let nq = q(n as i64);
        if lambda != -(&nq * (&nq + rs.nbar_exact() - q(2))) {
            eigen_fail += 1;
        }
    }
    out.push(
        Check::exact("hharmonic_dimension", format!("kernel dimension equals d(n) for n ≤ {nmax}"), dim_fail.len())
            .with_note(if dim_fail.is_empty() { String::new() } else { format!("mismatch at n = {dim_fail:?}") }),
    );
    out.push(Check::exact("hharmonic_kernel", "Δ_k Y = 0", harmonic_fail).with_note(format!("{total} basis polynomials")));
    out.push(Check::exact("hharmonic_eigenvalue", "r²Δ_k splits with λ_n = −n(n+N̄−2)", eigen_fail));
    if dim <= MAX_FULL_SPHERE_DIM && parseval_count > 0 {
        let degree = nmax.min(3);
        let rule = weighted_sphere_rule(rs, dim, (2 * degree as usize + 6).max(quad_order))?;
        let bases: Vec<_> = (0..=degree).map(|n| build_basis(rs, n, &rule)).collect::<Result<_>>()?;
        let grid = RadialGrid::uniform(6.0, 6, 16)?;
        let mut worst: f64 = 0.0;
        for p in polynomial_corpus(dim, parseval_count, degree, seed) {
            if p.is_zero() {
                continue;
            }
            let u = |x: &[f64]| p.evaluate(x) * (-x.iter().map(|c| c * c).sum::<f64>()).exp();
            let c = expand(rs, &u, &bases, &grid, &rule)?;
            worst = worst.max(parseval_residual(rs, &u, &c)?);
        }
        out.push(Check::bounded("hharmonic_parseval", "Parseval on damped polynomials", worst, 1e-5));
    }
    Ok(out)
}

/// Coordinates the roots actually use, so that reduced sphere rules apply to
/// systems embedded in a larger space.
pub fn active_coordinates(rs: &RootSystem) -> usize {
    rs.positive_roots()
        .iter()
        .filter_map(|r| r.vector().iter().rposition(|c| c.abs() > 0.0))
        .max()
        .map_or(1, |i| i + 1)
}

/// Polar measure cloud and corpus on the annulus `[inner, outer]`.
pub fn polar_setup(
    rs: &RootSystem,
    inner: f64,
    outer: f64,
    count: usize,
    seed: u64,
    quad_order: usize,
) -> Result<(crate::quad::MeasureCloud, Vec<CorpusFunction>)> {
    let dim = rs.dimension();
    let (active, rule) = if dim <= MAX_FULL_SPHERE_DIM {
        (dim, weighted_sphere_rule(rs, dim, quad_order)?)
    } else {
        let a = (active_coordinates(rs) + 1).min(MAX_FULL_SPHERE_DIM);
        (a, weighted_sphere_rule(rs, a, quad_order)?)
    };
    let steps = ((outer - inner) / LATTICE).round() as usize;
    let bps = (0..=steps).map(|i| inner + LATTICE * i as f64).collect();
    let grid = RadialGrid::new(bps, 8)?;
    let cloud = crate::quad::MeasureCloud::polar(rs, &grid, &rule)?;
    let spec = PolarCorpusSpec {
        active,
        inner,
        outer,
        harmonics: active == dim,
    };
    Ok((cloud, polar_corpus(rs, count, seed, spec)?))
}

/// Lower-bound report of functional `id` over a polar corpus.
pub fn corpus_lower_bound(
    id: &str,
    rs: &RootSystem,
    p: f64,
    count: usize,
    seed: u64,
    quad_order: usize,
) -> Result<VerificationReport> {
    let registry = InequalityRegistry::standard();
    let ineq = registry.get(id)?;
    let (cloud, corpus) = polar_setup(rs, LATTICE, 2.0, count, seed, quad_order)?;
    let norm = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
    lower_bound_report(ineq, rs, p, &corpus, &cloud, &norm, "polar bumps")
}

/// First-order Hardy checks on one domain: remainder form, ε-form at three
/// values of ε around the optimum, and the sharp exterior constant when it
/// applies.
pub fn domain_hardy_reports(
    rs: &RootSystem,
    spec: &DomainSpec,
    p: f64,
    count: usize,
    seed: u64,
    quad_order: usize,
) -> Result<Vec<VerificationReport>> {
    spec.validate(rs)?;
    let data = distance_data(spec, rs)?;
    let dim = spec.dimension;
    let (cloud, corpus) = match spec.kind {
        DomainKind::ExteriorBall { radius } => {
            let inner = (radius / LATTICE).ceil() * LATTICE + LATTICE;
            polar_setup(rs, inner, inner + 2.0, count, seed, quad_order)?
        }
        DomainKind::PuncturedSpace => polar_setup(rs, LATTICE, 2.25, count, seed, quad_order)?,
        DomainKind::Halfspace { .. } | DomainKind::WedgeSn => {
            let normal = spec.normal().expect("flat domain");
            let line = RadialGrid::new((0..=6).map(|i| LATTICE * i as f64).collect(), 8)?;
            let plane = RadialGrid::uniform(4.5, 9, 8)?;
            let rule = sphere_rule(dim - 1, quad_order)?;
            let cloud = data.cloud(rs, &line, &plane, &rule)?;
            (cloud, flat_corpus(&normal, count, seed))
        }
    };
    let eps_star = optimal_epsilon(p);
    let epsilons = [0.8 * eps_star, eps_star, 1.25 * eps_star];
    let nbar = rs.nbar();
    let exterior = matches!(spec.kind, DomainKind::ExteriorBall { .. }) && p > nbar;
    let (mut rem, mut eps_entries, mut ext) = (Vec::new(), Vec::new(), Vec::new());
    for f in &corpus {
        let h = hardy_integrals(rs, &f.function, &data, p, &cloud)?;
        rem.push(hardy_remainder_check(&f.label, &h, p));
        for e in epsilons {
            eps_entries.push(hardy_epsilon_check(&format!("{} ε={e:.4}", f.label), &h, p, e)?);
        }
        if exterior {
            let e = exterior_epsilon(p, nbar);
            eps_entries.push(hardy_epsilon_check(&format!("{} ε={e:.4}", f.label), &h, p, e)?);
            ext.push(exterior_hardy_check(&f.label, &h, &data, p, nbar)?);
        }
    }
    let name = spec.name();
    let mut out = vec![
        VerificationReport::new("hardy_remainder", name, rem),
        VerificationReport::new("hardy_epsilon", name, eps_entries),
    ];
    if exterior {
        out.push(VerificationReport::new("exterior_hardy", name, ext));
    }
    Ok(out)
}

/// Exact mode algebra over a table of `(N, γ)`.
pub fn mode_algebra_checks(dims: impl IntoIterator<Item = usize>, gammas: &[Q], n_max: u32) -> Vec<Check> {
    let mut out = Vec::new();
    for n in dims {
        for g in gammas {
            let m = mode_algebra_check(n, g, n_max);
            out.push(Check::new("mode_algebra", format!("N={n} γ={}", m.gamma), m.holds, 0.0, 0.0).with_note(format!(
                "B0=0 {}, D1 formula {}, D1≥0 {}, D2 formula {}, D2≥0 {}, Dn≥D2 {}, certificates {}",
                m.b0_zero, m.d1_formula, m.d1_nonnegative, m.d2_formula, m.d2_nonnegative, m.dn_dominates_d2,
                m.weighted_certificates
            )));
        }
    }
    out
}

/// Mode functionals at `C = N̄²/4` on radial profiles, for `n ≤ n_max`.
pub fn mode_functional_check(rs: &RootSystem, n_max: u32, count: usize, seed: u64) -> Result<Check> {
    let nbar = rs.nbar_exact();
    let gamma = rs.gamma();
    let c = &nbar * &nbar / q(4);
    let grid = RadialGrid::new((1..=12).map(|i| LATTICE * i as f64).collect(), 12)?;
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for (_, prof) in profile_corpus(count, seed) {
        for n in 0..=n_max {
            let f = mode_functional(&nbar, &gamma, &c, n, &prof, &grid)?;
            if !f.holds() {
                failures += 1;
            }
            let scale = f.lower_bound.abs().max(f.value.abs()).max(f64::MIN_POSITIVE);
            worst = worst.min((f.value - f.lower_bound) / scale);
        }
    }
    Ok(Check::new("mode_functional", format!("I_n ≥ D_n∫u²r^(N̄−5), n ≤ {n_max}"), failures == 0, LOWER_BOUND_TOL, worst)
        .with_note(format!("{count} profiles, {failures} failed")))
}

// ---------------------------------------------------------------------------
// Suite registry

/// A named group of checks run against one root system.
pub trait Suite: Send + Sync {
    fn id(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, rs: &RootSystem, cfg: &SuiteConfig) -> Result<SuiteOutcome>;
}

struct Identities;
struct Harmonics;
struct Hardy;
struct HardyRellichSuite;

impl Suite for Identities {
    fn id(&self) -> &'static str {
        "identities"
    }
    fn description(&self) -> &'static str {
        "exact Dunkl identities, reflection geometry and measure invariance"
    }
    fn run(&self, rs: &RootSystem, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
        let mut out = SuiteOutcome::default();
        let polys = polynomial_corpus(rs.dimension(), cfg.corpus_size, 4, cfg.seed);
        out.extend(identity_checks(rs, &polys)?);
        out.extend(geometry_checks(rs, cfg.quad_order)?);
        out.extend(distance_checks(rs, 100, cfg.seed)?);
        Ok(out)
    }
}

impl Suite for Harmonics {
    fn id(&self) -> &'static str {
        "harmonics"
    }
    fn description(&self) -> &'static str {
        "h-harmonic kernels, eigenvalues and Parseval"
    }
    fn run(&self, rs: &RootSystem, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
        let mut out = SuiteOutcome::default();
        out.extend(harmonic_checks(rs, cfg.nmax, cfg.quad_order, 3, cfg.seed)?);
        Ok(out)
    }
}

fn sweep_or_skip(out: &mut SuiteOutcome, id: &str, rs: &RootSystem, p: f64, cfg: &SuiteConfig) -> Result<()> {
    let registry = InequalityRegistry::standard();
    let ineq = registry.get(id)?;
    if let Err(e) = ineq.admissible(rs.dimension(), rs.gamma_f64(), p) {
        out.push(Check::skipped(id, format!("{id} sweep"), e.to_string()));
        return Ok(());
    }
    let sweep = sharpness_sweep(ineq, rs, p, &cfg.epsilons, &cfg.sweep_config())?;
    out.add_sweep(id, sweep);
    Ok(())
}

impl Suite for Hardy {
    fn id(&self) -> &'static str {
        "hardy"
    }
    fn description(&self) -> &'static str {
        "sharp Hardy sweeps and first-order Hardy inequalities on domains"
    }
    fn run(&self, rs: &RootSystem, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
        let mut out = SuiteOutcome::default();
        let p = cfg.exponent(rs);
        sweep_or_skip(&mut out, "hardy_p", rs, p, cfg)?;
        sweep_or_skip(&mut out, "hardy_2", rs, 2.0, cfg)?;
        let dim = rs.dimension();
        let mut domains = Vec::new();
        if dim <= MAX_FULL_SPHERE_DIM {
            domains.push((DomainSpec::exterior_ball(dim, 1.0), rs.clone()));
        }
        if matches!(rs.family(), RootFamily::A(n) if n + 1 == dim) && dim - 1 <= MAX_FULL_SPHERE_DIM {
            domains.push((DomainSpec::wedge(dim), rs.clone()));
        }
        if dim <= MAX_FULL_SPHERE_DIM {
            domains.push((DomainSpec::halfspace(dim + 1, dim), rs.embedded(dim + 1)?));
        }
        for (spec, sys) in domains {
            for exponent in [2.0, p] {
                let count = cfg.corpus_size;
                for rep in domain_hardy_reports(&sys, &spec, exponent, count, cfg.seed, cfg.quad_order)? {
                    out.push(Check::from_report(&rep, format!("{} on {} p={exponent}", rep.theorem, spec.name())));
                }
            }
        }
        Ok(out)
    }
}

impl Suite for HardyRellichSuite {
    fn id(&self) -> &'static str {
        "hardy-rellich"
    }
    fn description(&self) -> &'static str {
        "Rellich and Hardy-Rellich sweeps, corpus bounds and mode algebra"
    }
    fn run(&self, rs: &RootSystem, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
        let mut out = SuiteOutcome::default();
        let registry = InequalityRegistry::standard();
        for id in ["rellich", "weighted_hardy_rellich", "hardy_rellich"] {
            sweep_or_skip(&mut out, id, rs, 2.0, cfg)?;
            let ineq = registry.get(id)?;
            if ineq.admissible(rs.dimension(), rs.gamma_f64(), 2.0).is_ok() {
                let rep = corpus_lower_bound(id, rs, 2.0, cfg.corpus_size, cfg.seed, cfg.quad_order)?;
                out.push(Check::from_report(&rep, format!("{id} corpus lower bound")));
            }
        }
        out.extend(mode_algebra_checks([rs.dimension()], &[rs.gamma()], cfg.nmax.max(3)));
        out.push(mode_functional_check(rs, cfg.nmax, cfg.corpus_size, cfg.seed)?);
        Ok(out)
    }
}

pub struct SuiteRegistry {
    suites: Vec<Box<dyn Suite>>,
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        SuiteRegistry { suites: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Identities));
        r.register(Box::new(Harmonics));
        r.register(Box::new(Hardy));
        r.register(Box::new(HardyRellichSuite));
        r
    }

    /// Later registrations replace earlier ones with the same id.
    pub fn register(&mut self, suite: Box<dyn Suite>) {
        self.suites.retain(|s| s.id() != suite.id());
        self.suites.push(suite);
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.suites.iter().map(|s| s.id()).collect()
    }

    /// `all` selects every registered suite in registration order.
    pub fn select(&self, id: &str) -> Result<Vec<&dyn Suite>> {
        if id == "all" {
            return Ok(self.suites.iter().map(|s| s.as_ref()).collect());
        }
        self.suites
            .iter()
            .find(|s| s.id() == id)
            .map(|s| vec![s.as_ref()])
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "suite",
                name: id.to_string(),
            })
    }
}

/// Runs the selected suites, tagging every check with its suite id.
pub fn run_suites(registry: &SuiteRegistry, id: &str, cfg: &SuiteConfig) -> Result<Vec<(String, SuiteOutcome)>> {
    cfg.validate()?;
    let rs = cfg.root_system()?;
    let mut results = Vec::new();
    for suite in registry.select(id)? {
        log::info!("running suite {}", suite.id());
        let mut outcome = suite.run(&rs, cfg)?;
        for c in &mut outcome.checks {
            c.suite = suite.id().to_string();
        }
        results.push((suite.id().to_string(), outcome));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    #[test]
    fn rounding_keeps_fifteen_digits() {
        assert_eq!(round15(0.1 + 0.2), 0.3);
        assert_eq!(round15(1.0 / 3.0), 0.333333333333333);
        assert!(round15(f64::NAN).is_nan());
    }

    #[test]
    fn config_builds_root_systems() {
        let cfg = SuiteConfig {
            family: "B".into(),
            k: vec!["1/2".into()],
            ..SuiteConfig::default()
        };
        let rs = cfg.root_system().unwrap();
        assert_eq!(rs.orbit_multiplicities(), &[qf(1, 2), qf(1, 2)]);
        assert_eq!(cfg.exponent(&rs), rs.nbar() + 1.0);
        let bad = SuiteConfig {
            epsilons: vec![0.1, 0.2, 0.01],
            ..SuiteConfig::default()
        };
        assert!(bad.validate().is_err());
        let json: SuiteConfig = serde_json::from_str(r#"{"family":"I2","m":4,"k":["1","2"]}"#).unwrap();
        assert_eq!(json.root_system().unwrap().family(), RootFamily::I2(4));
        assert!(serde_json::from_str::<SuiteConfig>(r#"{"famly":"A"}"#).is_err());
    }

    #[test]
    fn group_orders() {
        assert_eq!(group_order(RootFamily::A(3)), 24);
        assert_eq!(group_order(RootFamily::B(2)), 8);
        assert_eq!(group_order(RootFamily::I2(4)), 8);
    }

    #[test]
    fn registry_selects() {
        let r = SuiteRegistry::standard();
        assert_eq!(r.select("all").unwrap().len(), 4);
        assert_eq!(r.select("hardy").unwrap()[0].id(), "hardy");
        assert!(r.select("nope").is_err());
    }

    #[test]
    fn identities_on_b2() {
        let rs = build_root_system(RootFamily::B(2), &[qf(1, 2), q(2)]).unwrap();
        let polys = polynomial_corpus(2, 4, 3, 1);
        for c in identity_checks(&rs, &polys).unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn active_coordinates_of_embedded_system() {
        let rs = build_root_system(RootFamily::A(1), &[q(1)]).unwrap().embedded(7).unwrap();
        assert_eq!(active_coordinates(&rs), 2);
    }
}
