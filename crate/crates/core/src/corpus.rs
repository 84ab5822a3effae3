//! Deterministic test-function corpora: C² bumps times polynomials,
//! h-harmonics and shifted Gaussians.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dunklnum::{RadialProfile, SmoothFunction};
use crate::error::Result;
use crate::harmonics::hharmonic_kernel;
use crate::polyalg::Polynomial;
use crate::rational::qf;
use crate::reflection::RootSystem;

/// Breakpoints of every bump lie on this lattice.
pub const LATTICE: f64 = 0.25;

/// `10t³ − 15t⁴ + 6t⁵` and its first two derivatives, clamped to `[0,1]`.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 - 15.0 * t + 6.0 * t2),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
        )
    }
}

/// C² plateau bump supported on `[a, b]` with ramps of width `w`.
pub fn plateau_bump(a: f64, w: f64, b: f64) -> RadialProfile {
    assert!(b - a >= 2.0 * w && w > 0.0, "bump ramps overlap");
    let eval = move |r: f64| -> (f64, f64, f64) {
        let (u0, u1, u2) = smoothstep((r - a) / w);
        let (d0, d1, d2) = smoothstep((b - r) / w);
        (
            u0 * d0,
            (u1 * d0 - u0 * d1) / w,
            (u2 * d0 - 2.0 * u1 * d1 + u0 * d2) / (w * w),
        )
    };
    RadialProfile::new(
        move |r| eval(r).0,
        move |r| eval(r).1,
        move |r| eval(r).2,
    )
}

#[derive(Clone, Debug)]
pub struct CorpusFunction {
    pub label: String,
    pub function: SmoothFunction,
}

/// Which coordinates the corpus may depend on.
#[derive(Clone, Copy, Debug)]
pub struct PolarCorpusSpec {
    /// Functions depend on `|x|` and the first `active` coordinates only.
    pub active: usize,
    /// Bumps start at or beyond this radius.
    pub inner: f64,
    /// Bumps end at or before this radius.
    pub outer: f64,
    /// Use h-harmonics of degree ≤ 3 (needs `active` = dimension).
    pub harmonics: bool,
}

fn lattice_bump<R: Rng>(rng: &mut R, inner: f64, outer: f64) -> (f64, f64, f64) {
    let steps = ((outer - inner) / LATTICE).round() as i64;
    let w_steps = rng.gen_range(1..=2i64).min((steps / 2).max(1));
    let len = rng.gen_range(2 * w_steps..=steps.max(2 * w_steps));
    let start = rng.gen_range(0..=(steps - len).max(0));
    let a = inner + LATTICE * start as f64;
    (a, LATTICE * w_steps as f64, a + LATTICE * len as f64)
}

fn random_active_poly<R: Rng>(rng: &mut R, dim: usize, active: usize, degree: u32) -> Polynomial {
    let mut p = Polynomial::one(dim);
    for _ in 0..3 {
        let mut e = vec![0u32; dim];
        for _ in 0..rng.gen_range(1..=degree) {
            e[rng.gen_range(0..active)] += 1;
        }
        let m = Polynomial::monomial(dim, e, qf(rng.gen_range(-6i64..=6), 4));
        p = &p + &m;
    }
    p
}

fn random_center<R: Rng>(rng: &mut R, dim: usize, active: usize, radius: f64) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for ci in c.iter_mut().take(active) {
        *ci = rng.gen_range(-radius..radius);
    }
    c
}

/// Low-degree h-harmonics of `rs`, degrees 1 to 3.
fn harmonic_pool(rs: &RootSystem) -> Result<Vec<(u32, Polynomial)>> {
    let mut pool = Vec::new();
    for n in 1..=3 {
        for p in hharmonic_kernel(rs, n)? {
            pool.push((n, p));
        }
    }
    Ok(pool)
}

/// Functions on `ℝ^N` supported in an annulus: radial bumps, bumps times
/// h-harmonics or polynomials, and bumps times shifted Gaussians.
pub fn polar_corpus(
    rs: &RootSystem,
    count: usize,
    seed: u64,
    spec: PolarCorpusSpec,
) -> Result<Vec<CorpusFunction>> {
    let dim = rs.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = if spec.harmonics && rs.is_exact() {
        harmonic_pool(rs)?
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let (a, w, b) = lattice_bump(&mut rng, spec.inner, spec.outer);
        let bump = plateau_bump(a, w, b);
        let tag = format!("bump[{a},{b}]");
        let (label, function) = match i % 5 {
            0 => (format!("{tag} radial"), SmoothFunction::radial(dim, bump)),
            1 if !pool.is_empty() => {
                let (n, y) = &pool[rng.gen_range(0..pool.len())];
                (
                    format!("{tag} x h-harmonic deg {n}"),
                    SmoothFunction::radial_times_polynomial(bump, y),
                )
            }
            1 | 2 => {
                let p = random_active_poly(&mut rng, dim, spec.active, 3);
                (
                    format!("{tag} x polynomial"),
                    SmoothFunction::radial_times_polynomial(bump, &p),
                )
            }
            3 => {
                let c = random_center(&mut rng, dim, spec.active, 1.0);
                let s = rng.gen_range(0.5..2.0);
                (
                    format!("{tag} x gaussian"),
                    SmoothFunction::radial(dim, bump).product(&SmoothFunction::gaussian(c, s)),
                )
            }
            _ => {
                let c = random_center(&mut rng, dim, spec.active, 0.7);
                let s = rng.gen_range(0.5..2.0);
                let p = random_active_poly(&mut rng, dim, spec.active, 2);
                (
                    format!("{tag} x polynomial x gaussian"),
                    SmoothFunction::radial_times_polynomial(bump, &p)
                        .product(&SmoothFunction::gaussian(c, s)),
                )
            }
        };
        out.push(CorpusFunction { label, function });
    }
    Ok(out)
}

/// Functions `B(⟨x,e⟩)·g(x)` on the flat-boundary domain `{⟨x,e⟩ > 0}`:
/// `B` is a lattice bump in the normal coordinate and `g` a shifted
/// Gaussian, optionally times a polynomial.
pub fn flat_corpus(normal: &[f64], count: usize, seed: u64) -> Vec<CorpusFunction> {
    let dim = normal.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (a, w, b) = lattice_bump(&mut rng, LATTICE, 1.5);
            let ridge = SmoothFunction::ridge(normal.to_vec(), plateau_bump(a, w, b));
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let s = rng.gen_range(0.3..0.8);
            let g = SmoothFunction::gaussian(c, s);
            let (label, f) = if i % 2 == 0 {
                ("gaussian", ridge.product(&g))
            } else {
                let p = random_active_poly(&mut rng, dim, dim, 2);
                ("polynomial x gaussian", ridge.product(&g).product(&SmoothFunction::polynomial(&p)))
            };
            CorpusFunction {
                label: format!("ridge[{a},{b}] x {label}"),
                function: f,
            }
        })
        .collect()
}

/// Radial profiles for one-dimensional functionals: lattice bumps, some
/// multiplied by `r^j`.
pub fn profile_corpus(count: usize, seed: u64) -> Vec<(String, RadialProfile)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (a, w, b) = lattice_bump(&mut rng, LATTICE, 3.0);
            let bump = plateau_bump(a, w, b);
            let j = (i % 3) as i32;
            if j == 0 {
                (format!("bump[{a},{b}]"), bump)
            } else {
                let (v, d1, d2) = (bump.value, bump.d1, bump.d2);
                let jf = j as f64;
                (
                    format!("r^{j} bump[{a},{b}]"),
                    RadialProfile::new(
                        {
                            let v = v.clone();
                            move |r| r.powi(j) * v(r)
                        },
                        {
                            let (v, d1) = (v.clone(), d1.clone());
                            move |r| r.powi(j) * d1(r) + jf * r.powi(j - 1) * v(r)
                        },
                        move |r| {
                            r.powi(j) * d2(r)
                                + 2.0 * jf * r.powi(j - 1) * d1(r)
                                + jf * (jf - 1.0) * r.powi(j - 2) * v(r)
                        },
                    ),
                )
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::reflection::{build_root_system, RootFamily};

    #[test]
    fn bump_is_c2_and_supported() {
        let b = plateau_bump(0.5, 0.25, 1.5);
        assert_eq!((b.value)(0.4), 0.0);
        assert_eq!((b.value)(1.0), 1.0);
        assert_eq!((b.value)(1.6), 0.0);
        let h = 1e-6;
        for r in [0.6, 0.74, 1.3, 1.45] {
            let fd1 = ((b.value)(r + h) - (b.value)(r - h)) / (2.0 * h);
            let fd2 = ((b.d1)(r + h) - (b.d1)(r - h)) / (2.0 * h);
            assert!((fd1 - (b.d1)(r)).abs() < 1e-6);
            assert!((fd2 - (b.d2)(r)).abs() < 1e-5);
        }
    }

    #[test]
    fn corpora_have_valid_gradients() {
        let rs = build_root_system(RootFamily::A(2), &[q(1)]).unwrap();
        let spec = PolarCorpusSpec {
            active: 3,
            inner: 0.25,
            outer: 2.0,
            harmonics: true,
        };
        for f in polar_corpus(&rs, 10, 1, spec).unwrap() {
            f.function.clone().registered(1.5, 3).unwrap();
        }
        for f in flat_corpus(&[0.0, 0.0, 1.0], 6, 2) {
            f.function.clone().registered(1.5, 3).unwrap();
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let rs = build_root_system(RootFamily::Z2(2), &[q(1), q(1)]).unwrap();
        let spec = PolarCorpusSpec {
            active: 2,
            inner: 0.25,
            outer: 2.0,
            harmonics: true,
        };
        let a = polar_corpus(&rs, 8, 5, spec).unwrap();
        let b = polar_corpus(&rs, 8, 5, spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.function.eval(&[0.7, 0.4]), y.function.eval(&[0.7, 0.4]));
        }
    }
}
