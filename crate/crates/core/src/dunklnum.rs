//! Numeric Dunkl gradient and Laplacian for functions supplied with analytic
//! classical derivatives.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polyalg::Polynomial;
use crate::rational::to_f64;
use crate::reflection::{RootSystem, HYPERPLANE_TOL};

pub type Scalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type Vector = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Matrix = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Below this relative distance to a hyperplane the Laplacian's
/// `⟨∇u,α⟩/t − (u−u∘σ)/t²` term switches to `½ αᵀ∇²u α`. The crossover
/// balances truncation `O(t)` against cancellation `O(ε_mach/t²)`.
pub const LAPLACIAN_FALLBACK_TOL: f64 = 6e-6;

const GRADIENT_CHECK_TOL: f64 = 1e-5;

/// A function together with its classical gradient and Laplacian.
#[derive(Clone)]
pub struct SmoothFunction {
    pub dim: usize,
    pub value: Scalar,
    pub gradient: Vector,
    pub laplacian: Scalar,
    pub hessian: Option<Matrix>,
    /// `f(x) = g(|x|)`; the reflection differences vanish identically.
    pub radial: bool,
}

impl std::fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmoothFunction(dim={}, radial={})", self.dim, self.radial)
    }
}

/// `g, g', g''` of a radial profile.
#[derive(Clone)]
pub struct RadialProfile {
    pub value: Profile,
    pub d1: Profile,
    pub d2: Profile,
}

impl RadialProfile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        RadialProfile {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        }
    }

    pub fn power(a: f64) -> Self {
        Self::new(
            move |r| r.powf(a),
            move |r| a * r.powf(a - 1.0),
            move |r| a * (a - 1.0) * r.powf(a - 2.0),
        )
    }

    pub fn gaussian(scale: f64) -> Self {
        let s = scale;
        Self::new(
            move |r| (-r * r / s).exp(),
            move |r| -2.0 * r / s * (-r * r / s).exp(),
            move |r| (4.0 * r * r / (s * s) - 2.0 / s) * (-r * r / s).exp(),
        )
    }

    /// `g(r)·r^{−n}`, used to pass from sphere coefficients to Cartesian form.
    pub fn divided_by_power(&self, n: u32) -> Self {
        let nf = n as f64;
        let (g, g1, g2) = (self.value.clone(), self.d1.clone(), self.d2.clone());
        let (h, h1, h2, g0) = (g.clone(), g1.clone(), g2, g.clone());
        Self::new(
            move |r| g0(r) / r.powi(n as i32),
            move |r| g1(r) / r.powi(n as i32) - nf * h(r) / r.powi(n as i32 + 1),
            move |r| {
                h2(r) / r.powi(n as i32) - 2.0 * nf * h1(r) / r.powi(n as i32 + 1)
                    + nf * (nf + 1.0) * g(r) / r.powi(n as i32 + 2)
            },
        )
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Polynomial with `f64` coefficients, with its derivatives precomputed.
#[derive(Clone, Debug)]
pub struct NumericPolynomial {
    terms: Vec<(Vec<u32>, f64)>,
}

impl NumericPolynomial {
    pub fn from_exact(p: &Polynomial) -> Self {
        NumericPolynomial {
            terms: p.terms().map(|(e, c)| (e.clone(), to_f64(c))).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }
}

/// Value, gradient, Laplacian and Hessian evaluators of an exact polynomial.
#[derive(Clone, Debug)]
struct PolyDerivatives {
    value: NumericPolynomial,
    grad: Vec<NumericPolynomial>,
    hess: Vec<Vec<NumericPolynomial>>,
    lap: NumericPolynomial,
}

impl PolyDerivatives {
    fn new(p: &Polynomial) -> Self {
        let n = p.nvars();
        let grad: Vec<Polynomial> = (0..n).map(|i| p.derivative(i)).collect();
        PolyDerivatives {
            value: NumericPolynomial::from_exact(p),
            hess: grad
                .iter()
                .map(|g| (0..n).map(|j| NumericPolynomial::from_exact(&g.derivative(j))).collect())
                .collect(),
            grad: grad.iter().map(NumericPolynomial::from_exact).collect(),
            lap: NumericPolynomial::from_exact(&p.laplacian()),
        }
    }
}

impl SmoothFunction {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        laplacian: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFunction {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            laplacian: Arc::new(laplacian),
            hessian: None,
            radial: false,
        }
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    /// `f(x) = g(|x|)` in `ℝ^dim`.
    pub fn radial(dim: usize, g: RadialProfile) -> Self {
        let n = dim as f64;
        let (v, d1, d2) = (g.value.clone(), g.d1.clone(), g.d2.clone());
        let (g1, g2, g3) = (d1.clone(), d1.clone(), d2.clone());
        let h1 = d1;
        let h2 = d2;
        let mut f = SmoothFunction::new(
            dim,
            move |x| v(norm(x)),
            move |x| {
                let r = norm(x);
                let s = if r == 0.0 { 0.0 } else { g1(r) / r };
                x.iter().map(|c| s * c).collect()
            },
            move |x| {
                let r = norm(x);
                g3(r) + (n - 1.0) * g2(r) / r
            },
        )
        .with_hessian(move |x| {
            let r = norm(x);
            let (a, b) = (h2(r), h1(r) / r);
            (0..x.len())
                .map(|i| {
                    (0..x.len())
                        .map(|j| {
                            let outer = x[i] * x[j] / (r * r);
                            let id = if i == j { 1.0 } else { 0.0 };
                            a * outer + b * (id - outer)
                        })
                        .collect()
                })
                .collect()
        });
        f.radial = true;
        f
    }

    /// The polynomial itself, with exact derivatives.
    pub fn polynomial(p: &Polynomial) -> Self {
        let d = Arc::new(PolyDerivatives::new(p));
        let (d1, d2, d3, d4) = (d.clone(), d.clone(), d.clone(), d);
        SmoothFunction::new(
            p.nvars(),
            move |x| d1.value.eval(x),
            move |x| d2.grad.iter().map(|g| g.eval(x)).collect(),
            move |x| d3.lap.eval(x),
        )
        .with_hessian(move |x| {
            d4.hess
                .iter()
                .map(|row| row.iter().map(|h| h.eval(x)).collect())
                .collect()
        })
    }

    /// `h(|x|)·P(x)`.
    pub fn radial_times_polynomial(h: RadialProfile, p: &Polynomial) -> Self {
        let n = p.nvars() as f64;
        let d = Arc::new(PolyDerivatives::new(p));
        let (dv, dg, dl) = (d.clone(), d.clone(), d);
        let (hv, hg, hl) = (h.clone(), h.clone(), h);
        SmoothFunction::new(
            p.nvars(),
            move |x| (hv.value)(norm(x)) * dv.value.eval(x),
            move |x| {
                let r = norm(x);
                let (h0, h1) = ((hg.value)(r), (hg.d1)(r));
                let pv = dg.value.eval(x);
                x.iter()
                    .zip(&dg.grad)
                    .map(|(xi, g)| h1 * xi / r * pv + h0 * g.eval(x))
                    .collect()
            },
            move |x| {
                let r = norm(x);
                let (h0, h1, h2) = ((hl.value)(r), (hl.d1)(r), (hl.d2)(r));
                let pv = dl.value.eval(x);
                let euler: f64 = x.iter().zip(&dl.grad).map(|(xi, g)| xi * g.eval(x)).sum();
                h2 * pv + (n - 1.0) * h1 / r * pv + 2.0 * h1 / r * euler + h0 * dl.lap.eval(x)
            },
        )
    }

    /// `exp(−|x−c|²/s)`.
    pub fn gaussian(center: Vec<f64>, scale: f64) -> Self {
        let dim = center.len();
        let (c1, c2, c3) = (center.clone(), center.clone(), center);
        let s = scale;
        let e = move |x: &[f64], c: &[f64]| {
            (-x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s).exp()
        };
        SmoothFunction::new(
            dim,
            move |x| e(x, &c1),
            move |x| {
                let v = e(x, &c2);
                x.iter().zip(&c2).map(|(a, b)| -2.0 * (a - b) / s * v).collect()
            },
            move |x| {
                let v = e(x, &c3);
                let d2: f64 = x.iter().zip(&c3).map(|(a, b)| (a - b).powi(2)).sum();
                (4.0 * d2 / (s * s) - 2.0 * dim as f64 / s) * v
            },
        )
    }

    /// `g(⟨x,e⟩)` for a unit vector `e`.
    pub fn ridge(axis: Vec<f64>, g: RadialProfile) -> Self {
        let dim = axis.len();
        let (a1, a2, a3, a4) = (axis.clone(), axis.clone(), axis.clone(), axis);
        let (v, d1, d2) = (g.value, g.d1, g.d2);
        let d2h = d2.clone();
        SmoothFunction::new(
            dim,
            move |x| v(dot(x, &a1)),
            move |x| {
                let s = d1(dot(x, &a2));
                a2.iter().map(|a| s * a).collect()
            },
            move |x| d2(dot(x, &a3)),
        )
        .with_hessian(move |x| {
            let s = d2h(dot(x, &a4));
            a4.iter()
                .map(|ai| a4.iter().map(|aj| s * ai * aj).collect())
                .collect()
        })
    }

    /// Pointwise product `f·g`.
    pub fn product(&self, other: &SmoothFunction) -> Self {
        let (fv, fg, fl, fh) = (
            self.value.clone(),
            self.gradient.clone(),
            self.laplacian.clone(),
            self.hessian.clone(),
        );
        let (gv, gg, gl, gh) = (
            other.value.clone(),
            other.gradient.clone(),
            other.laplacian.clone(),
            other.hessian.clone(),
        );
        let (fv1, fv2, fv3, gv1, gv2, gv3) = (
            fv.clone(),
            fv.clone(),
            fv.clone(),
            gv.clone(),
            gv.clone(),
            gv.clone(),
        );
        let (fg1, fg2, gg1, gg2) = (fg.clone(), fg.clone(), gg.clone(), gg.clone());
        let mut out = SmoothFunction::new(
            self.dim,
            move |x| fv(x) * gv(x),
            move |x| {
                let (a, b) = (fv1(x), gv1(x));
                fg(x).iter().zip(gg(x)).map(|(p, q)| p * b + a * q).collect()
            },
            move |x| {
                fl(x) * gv2(x) + fv2(x) * gl(x) + 2.0 * dot(&fg1(x), &gg1(x))
            },
        );
        if let (Some(fh), Some(gh)) = (fh, gh) {
            out = out.with_hessian(move |x| {
                let (a, b) = (fv3(x), gv3(x));
                let (da, db) = (fg2(x), gg2(x));
                let (ha, hb) = (fh(x), gh(x));
                (0..x.len())
                    .map(|i| {
                        (0..x.len())
                            .map(|j| {
                                ha[i][j] * b + a * hb[i][j] + da[i] * db[j] + da[j] * db[i]
                            })
                            .collect()
                    })
                    .collect()
            });
        }
        out.radial = self.radial && other.radial;
        out
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        let (v, g, l) = (self.value.clone(), self.gradient.clone(), self.laplacian.clone());
        let mut out = SmoothFunction::new(
            self.dim,
            move |x| c * v(x),
            move |x| g(x).into_iter().map(|y| c * y).collect(),
            move |x| c * l(x),
        );
        if let Some(h) = self.hessian.clone() {
            out = out.with_hessian(move |x| {
                h(x).into_iter()
                    .map(|row| row.into_iter().map(|y| c * y).collect())
                    .collect()
            });
        }
        out.radial = self.radial;
        out
    }

    /// `x ↦ f(λx)`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let (v, g, l) = (self.value.clone(), self.gradient.clone(), self.laplacian.clone());
        let sc = move |x: &[f64]| x.iter().map(|c| lambda * c).collect::<Vec<_>>();
        let mut out = SmoothFunction::new(
            self.dim,
            move |x| v(&sc(x)),
            move |x| g(&sc(x)).into_iter().map(|y| lambda * y).collect(),
            move |x| lambda * lambda * l(&sc(x)),
        );
        if let Some(h) = self.hessian.clone() {
            out = out.with_hessian(move |x| {
                let y: Vec<f64> = x.iter().map(|c| lambda * c).collect();
                h(&y).into_iter()
                    .map(|row| row.into_iter().map(|z| lambda * lambda * z).collect())
                    .collect()
            });
        }
        out.radial = self.radial;
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    /// Compares the supplied gradient with central differences at `probes`.
    pub fn check_gradient(&self, probes: &[Vec<f64>]) -> Result<()> {
        for x in probes {
            let g = (self.gradient)(x);
            let scale = norm(x).max(1.0);
            let h = 1e-5 * scale;
            let mut diff = 0.0f64;
            for i in 0..self.dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = ((self.value)(&xp) - (self.value)(&xm)) / (2.0 * h);
                diff = diff.max((fd - g[i]).abs());
            }
            let gnorm = norm(&g);
            let fscale = (self.value)(x).abs() / scale;
            let error = diff / gnorm.max(fscale).max(1e-12);
            if error > GRADIENT_CHECK_TOL {
                return Err(Error::GradientMismatch {
                    point: x.clone(),
                    error,
                });
            }
        }
        Ok(())
    }

    /// Registration: gradient checked at deterministic random probes with
    /// `|x| ≤ radius`.
    pub fn registered(self, radius: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..self.dim).map(|_| rng.gen_range(-radius..radius)).collect())
            .collect();
        self.check_gradient(&probes)?;
        Ok(self)
    }

    fn alpha_hessian_alpha(&self, x: &[f64], alpha: &[f64]) -> f64 {
        if let Some(h) = &self.hessian {
            let m = h(x);
            return alpha
                .iter()
                .enumerate()
                .map(|(i, ai)| ai * dot(&m[i], alpha))
                .sum();
        }
        let step = 1e-4 * norm(x).max(1.0);
        let xp: Vec<f64> = x.iter().zip(alpha).map(|(c, a)| c + step * a).collect();
        let xm: Vec<f64> = x.iter().zip(alpha).map(|(c, a)| c - step * a).collect();
        (dot(&(self.gradient)(&xp), alpha) - dot(&(self.gradient)(&xm), alpha)) / (2.0 * step)
    }
}

/// `∇_k f(x) = ∇f(x) + Σ k_α α (f(x) − f(σ_α x))/⟨α,x⟩`.
pub fn dunkl_gradient(rs: &RootSystem, f: &SmoothFunction, x: &[f64]) -> Vec<f64> {
    let mut g = (f.gradient)(x);
    if f.radial {
        return g;
    }
    let fx = (f.value)(x);
    let grad = g.clone();
    let xn = norm(x);
    for (root, k) in rs.active_roots() {
        let alpha = root.vector();
        let t = root.dot(x);
        let diff = if t.abs() < HYPERPLANE_TOL * xn || t == 0.0 {
            dot(&grad, alpha)
        } else {
            (fx - (f.value)(&root.reflect(x))) / t
        };
        for (gi, ai) in g.iter_mut().zip(alpha) {
            *gi += k * ai * diff;
        }
    }
    g
}

/// `Δ_k f(x) = Δf + 2 Σ k_α [⟨∇f,α⟩/⟨α,x⟩ − (f(x) − f(σ_α x))/⟨α,x⟩²]`.
pub fn dunkl_laplacian_num(rs: &RootSystem, f: &SmoothFunction, x: &[f64]) -> f64 {
    let mut out = (f.laplacian)(x);
    let grad = (f.gradient)(x);
    let xn = norm(x);
    let fx = if f.radial { 0.0 } else { (f.value)(x) };
    for (root, k) in rs.active_roots() {
        let alpha = root.vector();
        let t = root.dot(x);
        let ga = dot(&grad, alpha);
        let term = if f.radial {
            if t == 0.0 {
                0.5 * f.alpha_hessian_alpha(x, alpha)
            } else {
                ga / t
            }
        } else if t.abs() < LAPLACIAN_FALLBACK_TOL * xn || t == 0.0 {
            0.5 * f.alpha_hessian_alpha(x, alpha)
        } else {
            ga / t - (fx - (f.value)(&root.reflect(x))) / (t * t)
        };
        out += 2.0 * k * term;
    }
    out
}

/// `|∇_k f(x)|`, `Δ_k f(x)` and `f(x)` in one pass.
pub fn dunkl_fields(rs: &RootSystem, f: &SmoothFunction, x: &[f64]) -> (f64, Vec<f64>, f64) {
    ((f.value)(x), dunkl_gradient(rs, f, x), dunkl_laplacian_num(rs, f, x))
}

/// One term `u_n(r)·Y(ξ)` of a polar representation; `harmonic` is an
/// h-harmonic homogeneous polynomial of degree `degree`.
#[derive(Clone)]
pub struct PolarTerm {
    pub degree: u32,
    pub harmonic: Polynomial,
    pub profile: RadialProfile,
}

impl PolarTerm {
    /// The term as a Cartesian function `u_n(|x|)|x|^{−n} Y(x)`.
    pub fn to_smooth(&self) -> SmoothFunction {
        SmoothFunction::radial_times_polynomial(self.profile.divided_by_power(self.degree), &self.harmonic)
    }
}

/// `Σ [u'' + (N̄−1)u'/r + λ_n u/r²] Y(ξ)` with `λ_n = −n(n+N̄−2)`.
pub fn polar_laplacian(rs: &RootSystem, terms: &[PolarTerm], r: f64, xi: &[f64]) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Degenerate("polar Laplacian is undefined at the origin".into()));
    }
    let nbar = rs.nbar();
    let mut out = 0.0;
    for t in terms {
        if t.harmonic.nvars() != rs.dimension() {
            return Err(Error::DimensionMismatch {
                expected: rs.dimension(),
                got: t.harmonic.nvars(),
            });
        }
        let n = t.degree as f64;
        let lambda = -n * (n + nbar - 2.0);
        let (u, u1, u2) = ((t.profile.value)(r), (t.profile.d1)(r), (t.profile.d2)(r));
        out += (u2 + (nbar - 1.0) * u1 / r + lambda * u / (r * r)) * t.harmonic.evaluate(xi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::{dunkl_apply, dunkl_laplacian_sym, random_polynomial};
    use crate::rational::{q, qf};
    use crate::reflection::{build_root_system, RootFamily};

    #[test]
    fn rank_one_gradient() {
        let k = 0.3;
        let rs = build_root_system(RootFamily::Z2(1), &[qf(3, 10)]).unwrap();
        let f = SmoothFunction::polynomial(&Polynomial::var(1, 0));
        let g = dunkl_gradient(&rs, &f, &[1.0]);
        assert!((g[0] - (1.0 + 2.0 * k)).abs() < 1e-14);
    }

    #[test]
    fn norm_squared_laplacian() {
        for rs in [
            build_root_system(RootFamily::A(2), &[qf(1, 2)]).unwrap(),
            build_root_system(RootFamily::B(2), &[q(1), qf(1, 3)]).unwrap(),
        ] {
            let f = SmoothFunction::polynomial(&Polynomial::norm_sq(rs.dimension()));
            let x: Vec<f64> = (0..rs.dimension()).map(|i| 0.3 + 0.7 * i as f64).collect();
            assert!((dunkl_laplacian_num(&rs, &f, &x) - 2.0 * rs.nbar()).abs() < 1e-12);
        }
    }

    #[test]
    fn symbolic_agreement() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rs = build_root_system(RootFamily::B(2), &[qf(1, 2), qf(2, 3)]).unwrap();
        for _ in 0..10 {
            let p = random_polynomial(&mut rng, 2, 5, 6);
            let f = SmoothFunction::polynomial(&p);
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let g = dunkl_gradient(&rs, &f, &x);
            for (i, gi) in g.iter().enumerate() {
                let exact = dunkl_apply(&rs, i, &p).unwrap().evaluate(&x);
                assert!((gi - exact).abs() < 1e-10 * exact.abs().max(1.0));
            }
            let lap = dunkl_laplacian_sym(&rs, &p).unwrap().evaluate(&x);
            assert!((dunkl_laplacian_num(&rs, &f, &x) - lap).abs() < 1e-9 * lap.abs().max(1.0));
        }
    }

    #[test]
    fn fallback_near_hyperplane() {
        let rs = build_root_system(RootFamily::A(2), &[q(1)]).unwrap();
        let p = &(&Polynomial::var(3, 0).pow(3) * &Polynomial::var(3, 1)) + &Polynomial::var(3, 2);
        let f = SmoothFunction::polynomial(&p);
        let exact = dunkl_laplacian_sym(&rs, &p).unwrap();
        for offset in [0.0, 1e-12, 1e-7, 1e-3] {
            let x = [0.8 + offset, 0.8, -0.3];
            let num = dunkl_laplacian_num(&rs, &f, &x);
            assert!((num - exact.evaluate(&x)).abs() < 1e-5, "offset {offset}");
            let g = dunkl_gradient(&rs, &f, &x);
            let g0 = dunkl_apply(&rs, 0, &p).unwrap().evaluate(&x);
            assert!((g[0] - g0).abs() < 1e-6);
        }
    }

    #[test]
    fn radial_formulas() {
        let rs = build_root_system(RootFamily::A(2), &[qf(1, 2)]).unwrap();
        let f = SmoothFunction::radial(3, RadialProfile::gaussian(1.0));
        let x = [0.3, -0.5, 0.9];
        let r = norm(&x);
        let g = dunkl_gradient(&rs, &f, &x);
        let gp = -2.0 * r * (-r * r).exp();
        assert!((norm(&g) - gp.abs()).abs() < 1e-15);
        let gpp = (4.0 * r * r - 2.0) * (-r * r).exp();
        let expected = gpp + (rs.nbar() - 1.0) * gp / r;
        assert!((dunkl_laplacian_num(&rs, &f, &x) - expected).abs() < 1e-13);
    }

    #[test]
    fn gradient_registration() {
        let good = SmoothFunction::gaussian(vec![0.1, 0.2], 1.0);
        assert!(good.registered(2.0, 1).is_ok());
        let bad = SmoothFunction::new(2, |x| x[0] * x[0], |_| vec![0.0, 0.0], |_| 2.0);
        assert!(matches!(bad.registered(2.0, 1), Err(Error::GradientMismatch { .. })));
    }

    #[test]
    fn polar_matches_cartesian() {
        let rs = build_root_system(RootFamily::Z2(3), &[qf(1, 2), q(1), q(0)]).unwrap();
        let term = PolarTerm {
            degree: 1,
            harmonic: Polynomial::var(3, 1),
            profile: RadialProfile::new(|r| r * r, |r| 2.0 * r, |_| 2.0),
        };
        let cart = term.to_smooth();
        let x = [0.4, -0.7, 0.5];
        let r = norm(&x);
        let xi: Vec<f64> = x.iter().map(|c| c / r).collect();
        let polar = polar_laplacian(&rs, &[term.clone()], r, &xi).unwrap();
        assert!((polar - dunkl_laplacian_num(&rs, &cart, &x)).abs() < 1e-10);
        assert!(polar_laplacian(&rs, &[term], 0.0, &xi).is_err());
    }

    #[test]
    fn harmonic_extension_is_annihilated() {
        let rs = build_root_system(RootFamily::Z2(2), &[q(1), qf(1, 2)]).unwrap();
        let term = PolarTerm {
            degree: 1,
            harmonic: Polynomial::var(2, 0),
            profile: RadialProfile::power(1.0),
        };
        let v = polar_laplacian(&rs, &[term], 1.7, &[0.6, 0.8]).unwrap();
        assert!(v.abs() < 1e-13);
    }
}
