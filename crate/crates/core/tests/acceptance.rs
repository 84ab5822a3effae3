//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances and wall-clock budgets are
//! fixed below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dunkl_core::domains::DomainSpec;
use dunkl_core::inequalities::{sharpness_sweep, InequalityRegistry, RayleighSweep, SweepConfig, DEFAULT_EPSILONS};
use dunkl_core::rational::{q, qf, Q};
use dunkl_core::reflection::{build_root_system, RootFamily, RootSystem};
use dunkl_core::suites::{
    corpus_lower_bound, distance_checks, domain_hardy_reports, geometry_checks, harmonic_checks,
    identity_checks, mode_algebra_checks, polynomial_corpus, Check,
};
use dunkl_core::Result;

const HARDY_TOL_ORACLE: f64 = 0.01;
const HARDY_TOL_QUADRATURE: f64 = 0.015;
const MOLLIFIED_TOL: f64 = 0.02;
const AGREEMENT_TOL: f64 = 1e-6;
const SPHERE_ORDER: usize = 10;

fn rs(family: RootFamily, k: &[Q]) -> RootSystem {
    build_root_system(family, k).expect("valid root system")
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn run(id: u32, title: &str, budget_s: u64, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    let (pass, detail) = match outcome {
        Ok(v) => (v.pass && elapsed <= budget, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {id:>2}: {} {title} [{:.1}s of {budget_s}s] {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn sweep(id: &str, system: &RootSystem, p: f64) -> Result<RayleighSweep> {
    let registry = InequalityRegistry::standard();
    sharpness_sweep(registry.get(id)?, system, p, &DEFAULT_EPSILONS, &SweepConfig::default())
}

/// Both extrapolated limits within their tolerances of the target.
fn sweep_within(s: &RayleighSweep, tol_oracle: f64, tol_quad: f64) -> (bool, String) {
    let go = s.rel_gap(s.extrapolated_oracle).abs();
    let gq = s.rel_gap(s.extrapolated_quadrature).abs();
    let ok = go <= tol_oracle && gq <= tol_quad && s.verdict.passed();
    (ok, format!("N̄={} p={:?} gap {go:.2e}/{gq:.2e}", s.nbar, s.p))
}

fn sweeps_criterion(
    configs: &[(RootSystem, f64)],
    id: &str,
    tol_oracle: f64,
    tol_quad: f64,
    budget_each: Duration,
    store: &mut Vec<RayleighSweep>,
) -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (system, p) in configs {
        let start = Instant::now();
        let s = sweep(id, system, *p)?;
        let (ok, text) = sweep_within(&s, tol_oracle, tol_quad);
        let on_time = start.elapsed() <= budget_each;
        pass &= ok && on_time;
        parts.push(format!("[{text} {:.1}s]", start.elapsed().as_secs_f64()));
        store.push(s);
    }
    verdict(pass, parts.join(" "))
}

fn checks_verdict(checks: &[Check]) -> Verdict {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}: {} (value {:e}) {}", c.theorem, c.name, c.value, c.note))
        .collect();
    Verdict {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} checks", checks.len())
        } else {
            failed.join("; ")
        },
    }
}

fn hardy_configs() -> Vec<(RootSystem, f64)> {
    let a2a = rs(RootFamily::A(2), &[qf(1, 6)]);
    let a2b = rs(RootFamily::A(2), &[qf(1, 3)]);
    let a3 = rs(RootFamily::A(3), &[q(0)]);
    let (p1, p2) = (a2a.nbar() + 1.0, a2b.nbar() + 2.0);
    vec![(a2a, p1), (a2b, p2), (a3, 5.0)]
}

fn main() -> ExitCode {
    let mut sweeps = Vec::new();
    let mut all = true;

    all &= run(1, "sharp L^p Hardy limit ((p−N̄)/p)^p", 30, || {
        sweeps_criterion(
            &hardy_configs(),
            "hardy_p",
            HARDY_TOL_ORACLE,
            HARDY_TOL_QUADRATURE,
            Duration::from_secs(10),
            &mut sweeps,
        )
    });

    all &= run(2, "sharp L² Hardy limit ((N̄−2)/2)²", 15, || {
        let configs: Vec<_> = hardy_configs().into_iter().map(|(s, _)| (s, 2.0)).collect();
        sweeps_criterion(
            &configs,
            "hardy_2",
            HARDY_TOL_ORACLE,
            HARDY_TOL_QUADRATURE,
            Duration::from_secs(5),
            &mut sweeps,
        )
    });

    all &= run(3, "Rellich limit N̄²(N̄−4)²/16", 20, || {
        let configs = vec![
            (rs(RootFamily::A(4), &[q(0)]), 2.0),
            (rs(RootFamily::A(4), &[qf(1, 20)]), 2.0),
            (rs(RootFamily::A(5), &[qf(1, 15)]), 2.0),
        ];
        sweeps_criterion(&configs, "rellich", MOLLIFIED_TOL, MOLLIFIED_TOL, Duration::from_secs(20), &mut sweeps)
    });

    all &= run(4, "weighted Hardy-Rellich limit (N̄−2)²/4 and corpus bound", 60, || {
        let systems = [rs(RootFamily::A(4), &[q(0)]), rs(RootFamily::A(4), &[qf(1, 10)])];
        let configs: Vec<_> = systems.iter().map(|s| (s.clone(), 2.0)).collect();
        let mut v = sweeps_criterion(
            &configs,
            "weighted_hardy_rellich",
            MOLLIFIED_TOL,
            MOLLIFIED_TOL,
            Duration::from_secs(60),
            &mut sweeps,
        )?;
        for s in &systems {
            let rep = corpus_lower_bound("weighted_hardy_rellich", s, 2.0, 50, 41, SPHERE_ORDER)?;
            v.pass &= rep.pass && rep.entries.len() == 50;
            v.detail += &format!(" [corpus γ={} min margin {:.2e}]", s.gamma_f64(), rep.min_margin);
        }
        Ok(v)
    });

    all &= run(5, "Hardy-Rellich limit N̄²/4 and corpus bound for N ≥ 5+2γ", 60, || {
        let systems = [
            rs(RootFamily::A(4), &[q(0)]),
            rs(RootFamily::A(1), &[q(1)]).embedded(7)?,
        ];
        let configs: Vec<_> = systems.iter().map(|s| (s.clone(), 2.0)).collect();
        let mut v = sweeps_criterion(
            &configs,
            "hardy_rellich",
            MOLLIFIED_TOL,
            MOLLIFIED_TOL,
            Duration::from_secs(60),
            &mut sweeps,
        )?;
        for s in &systems {
            let rep = corpus_lower_bound("hardy_rellich", s, 2.0, 50, 43, SPHERE_ORDER)?;
            v.pass &= rep.pass && rep.entries.len() == 50;
            v.detail += &format!(" [corpus N={} min margin {:.2e}]", s.dimension(), rep.min_margin);
        }
        Ok(v)
    });

    all &= run(6, "first-order Hardy reports on halfspace, wedge and exterior balls", 60, || {
        let a2 = rs(RootFamily::A(2), &[qf(1, 2)]);
        let z2 = rs(RootFamily::Z2(3), &[qf(1, 2), qf(1, 2), qf(1, 2)]);
        let domains = vec![
            (DomainSpec::halfspace(4, 3), a2.embedded(4)?),
            (DomainSpec::wedge(3), a2.clone()),
            (DomainSpec::exterior_ball(3, 1.0), a2.clone()),
            (DomainSpec::exterior_ball(3, 1.0), z2),
        ];
        let mut pass = true;
        let mut parts = Vec::new();
        for (spec, system) in &domains {
            for p in [2.0, system.nbar() + 1.0] {
                let reports = domain_hardy_reports(system, spec, p, 20, 61, SPHERE_ORDER)?;
                for r in &reports {
                    pass &= r.pass && r.entries.len() >= 20;
                    if !r.pass {
                        parts.push(format!("{} on {} p={p} failed", r.theorem, spec.name()));
                    }
                }
                parts.push(format!("{}:{}", spec.name(), reports.len()));
            }
        }
        verdict(pass, parts.join(" "))
    });

    all &= run(7, "exact identity suite on 100 polynomials", 30, || {
        let systems = [
            rs(RootFamily::A(2), &[qf(1, 2)]),
            rs(RootFamily::A(3), &[q(1)]),
            rs(RootFamily::B(2), &[qf(1, 2), q(2)]),
            rs(RootFamily::Z2(3), &[q(1), qf(1, 3), q(2)]),
            rs(RootFamily::I2(4), &[qf(1, 2), qf(3, 2)]),
        ];
        let mut checks = Vec::new();
        for (i, s) in systems.iter().enumerate() {
            let polys = polynomial_corpus(s.dimension(), 20, 4, 70 + i as u64);
            checks.extend(identity_checks(s, &polys)?);
        }
        Ok(checks_verdict(&checks))
    });

    all &= run(8, "h-harmonic kernels, eigenvalues and Parseval for N ≤ 4, n ≤ 6", 120, || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let families = [
            RootFamily::Z2(1),
            RootFamily::B(2),
            RootFamily::I2(4),
            RootFamily::A(2),
            RootFamily::B(3),
            RootFamily::A(3),
            RootFamily::Z2(4),
        ];
        let mut checks = Vec::new();
        for family in families {
            let orbits = dunkl_core::reflection::orbit_count(family)?;
            let random: Vec<Q> = (0..orbits).map(|_| qf(rng.gen_range(1..10), rng.gen_range(2..10))).collect();
            for ks in [vec![q(0); orbits], vec![qf(1, 2); orbits], vec![q(1); orbits], random.clone()] {
                let s = rs(family, &ks);
                checks.extend(harmonic_checks(&s, 6, SPHERE_ORDER, 2, 80)?);
            }
        }
        Ok(checks_verdict(&checks))
    });

    all &= run(9, "reflection geometry, pairings and ∇δ equivariance", 5, || {
        let systems = [
            rs(RootFamily::A(2), &[qf(1, 2)]),
            rs(RootFamily::A(3), &[q(1)]),
            rs(RootFamily::B(2), &[qf(1, 2), q(2)]),
            rs(RootFamily::Z2(3), &[qf(1, 2), q(1), q(2)]),
            rs(RootFamily::I2(4), &[q(1), qf(1, 3)]),
        ];
        let expected = [6usize, 24, 8, 8, 8];
        let mut checks = Vec::new();
        for (s, order) in systems.iter().zip(expected) {
            for c in geometry_checks(s, 8)? {
                if c.name == "group order" && c.value != order as f64 {
                    checks.push(Check::new("reflection_group", "tabulated order", false, 0.0, c.value));
                }
                checks.push(c);
            }
        }
        for s in &systems[..4] {
            checks.extend(distance_checks(s, 100, 9)?);
        }
        Ok(checks_verdict(&checks))
    });

    all &= run(10, "mode algebra for N ≤ 9, γ ∈ {0, 1/2, 1, 2}, n ≤ 10", 1, || {
        let checks = mode_algebra_checks(1..=9, &[q(0), qf(1, 2), q(1), q(2)], 10);
        Ok(checks_verdict(&checks))
    });

    all &= run(11, "closed-form and quadrature quotients agree to 1e-6", 1, || {
        let worst = sweeps.iter().map(|s| s.max_path_disagreement).fold(0.0, f64::max);
        let ok = !sweeps.is_empty() && worst <= AGREEMENT_TOL && sweeps.len() == 13;
        verdict(ok, format!("{} sweeps, worst relative disagreement {worst:.2e}", sweeps.len()))
    });

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
