//! Quadrature against `dμ_k = r^{N̄−1} ω_k(ξ) dr dν(ξ)`: Gauss–Jacobi rules,
//! spherical product rules, radial grids with power-law tails and reusable
//! point clouds.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::dunklnum::{dunkl_gradient, SmoothFunction};
use crate::error::{Error, Result};
use crate::reflection::RootSystem;

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Jacobi rule on `[−1,1]` for the weight `(1−x)^α (1+x)^β`
/// (Golub–Welsch).
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::Degenerate("Gauss rule with zero nodes".into()));
    }
    if alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::Divergent(format!(
            "Jacobi weight exponents must exceed -1 (alpha={alpha}, beta={beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        jacobi[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + ab;
            let off = if j == 1.0 {
                (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                (4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                    .sqrt()
            };
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(ab + 2.0))
    .exp();
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, 0.0, 0.0).expect("Legendre parameters are valid")
}

/// `|S^{N−1}| = 2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(dimension: usize) -> f64 {
    let h = dimension as f64 / 2.0;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

/// Cubature on the unit sphere `S^{N−1}` with the surface measure `ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalRule {
    pub dimension: usize,
    pub order: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Leading coordinates resolved by the rule; the remaining sphere factor
    /// is collapsed to one point (only valid for integrands invariant under
    /// rotations of the trailing coordinates).
    pub active: usize,
    /// Set when the weights were built around `ω_k` of this system.
    pub adapted: Option<Adaptation>,
}

/// Root system a rule was adapted to.
#[derive(Clone, Debug)]
pub struct Adaptation(pub Arc<RootSystem>);

impl PartialEq for Adaptation {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.positive_roots() == other.0.positive_roots()
                && self.0.orbit_multiplicities() == other.0.orbit_multiplicities())
    }
}

pub const MAX_FULL_SPHERE_DIM: usize = 5;
const HYPERPLANE_NODE_TOL: f64 = 1e-9;
const JITTER_ANGLE: f64 = 1e-3;

/// Rule exact for polynomials of degree `≤ order` on `S^{N−1}`, `1 ≤ N ≤ 5`.
pub fn sphere_rule(dimension: usize, order: usize) -> Result<SphericalRule> {
    if dimension == 0 || dimension > MAX_FULL_SPHERE_DIM {
        return Err(Error::UnsupportedDimension(dimension));
    }
    sphere_rule_reduced(dimension, dimension, order)
}

/// Rule resolving only the first `active` coordinates. Exact to degree
/// `order` for integrands `f(ξ_1,…,ξ_active)` that are polynomial in those
/// coordinates; any `N` is accepted provided `active ≤ 5`.
pub fn sphere_rule_reduced(dimension: usize, active: usize, order: usize) -> Result<SphericalRule> {
    if dimension == 0 || active > dimension || active > MAX_FULL_SPHERE_DIM {
        return Err(Error::UnsupportedDimension(dimension));
    }
    let (nodes, weights) = sphere_nodes(dimension, active, order)?;
    Ok(SphericalRule {
        dimension,
        order,
        nodes,
        weights,
        active,
        adapted: None,
    })
}

fn sphere_nodes(dim: usize, active: usize, order: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if active == 0 {
        // Collapse: one representative, spread evenly over the coordinates.
        let c = 1.0 / (dim as f64).sqrt();
        return Ok((vec![vec![c; dim]], vec![sphere_area(dim)]));
    }
    match dim {
        1 => Ok((vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0])),
        2 if active == 2 => {
            let m = order + 1;
            let h = 2.0 * std::f64::consts::PI / m as f64;
            let offset = 0.5 * h * 0.618_033_988_749_895;
            let nodes = (0..m)
                .map(|j| {
                    let phi = offset + h * j as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            Ok((nodes, vec![h; m]))
        }
        _ => {
            // ξ = (t, √(1−t²) η), dν = (1−t²)^{(N−3)/2} dt dν'(η).
            let lambda = (dim as f64 - 3.0) / 2.0;
            let npts = (order + 2) / 2;
            let gj = gauss_jacobi(npts.max(1), lambda, lambda)?;
            let (sub_nodes, sub_weights) = sphere_nodes(dim - 1, active - 1, order)?;
            let mut nodes = Vec::with_capacity(gj.nodes.len() * sub_nodes.len());
            let mut weights = Vec::with_capacity(nodes.capacity());
            for (t, wt) in gj.nodes.iter().zip(&gj.weights) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for (eta, we) in sub_nodes.iter().zip(&sub_weights) {
                    let mut x = Vec::with_capacity(dim);
                    x.push(*t);
                    x.extend(eta.iter().map(|e| s * e));
                    nodes.push(x);
                    weights.push(wt * we);
                }
            }
            Ok((nodes, weights))
        }
    }
}

impl SphericalRule {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Same rule at half the order, used for error estimates.
    pub fn coarse(&self) -> Result<SphericalRule> {
        if let Some(Adaptation(rs)) = &self.adapted {
            return crate::adapted::adapted_sphere_rule_reduced(rs, self.active, (self.order / 2).max(1));
        }
        sphere_rule_reduced(self.dimension, self.active, (self.order / 2).max(1))
    }

    fn near_hyperplane(&self, rs: &RootSystem) -> bool {
        self.nodes.iter().any(|x| {
            rs.active_roots()
                .any(|(root, _)| root.dot(x).abs() < HYPERPLANE_NODE_TOL)
        })
    }

    /// Rotates the rule by a fixed small angle, repeatedly if needed, until no
    /// node lies within `1e−9` of a hyperplane of a root with `k_α ≠ 0`.
    /// Rotations act only on the resolved coordinates.
    pub fn avoiding_hyperplanes(&self, rs: &RootSystem) -> Result<SphericalRule> {
        if rs.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: rs.dimension(),
                got: self.dimension,
            });
        }
        let mut rule = self.clone();
        if rule.adapted.is_some() {
            // Adapted nodes are interior by construction; moving them would
            // break the weights.
            return if rule.near_hyperplane(rs) {
                Err(Error::Degenerate("adapted rule has a node on a hyperplane".into()))
            } else {
                Ok(rule)
            };
        }
        for _ in 0..32 {
            if !rule.near_hyperplane(rs) {
                return Ok(rule);
            }
            if rule.active < 2 {
                break;
            }
            for x in &mut rule.nodes {
                for plane in 0..rule.active - 1 {
                    let (c, s) = (JITTER_ANGLE.cos(), JITTER_ANGLE.sin());
                    let (a, b) = (x[plane], x[plane + 1]);
                    x[plane] = c * a - s * b;
                    x[plane + 1] = s * a + c * b;
                }
            }
        }
        if rule.near_hyperplane(rs) {
            return Err(Error::Degenerate(
                "could not move spherical nodes off the reflection hyperplanes".into(),
            ));
        }
        Ok(rule)
    }
}

/// Far-field treatment beyond the last breakpoint `R_max`.
#[derive(Clone, Debug, PartialEq)]
pub enum TailMode {
    /// Integration stops at `R_max`.
    None,
    /// The function factor is an exact power `g(r) = g(R)(r/R)^power` beyond
    /// `R_max`; the tail is added in closed form.
    AnalyticPower { power: f64 },
    /// `r = R/t` mapped onto `(0,1]`; `power_hint` is the far-field power of
    /// the function factor and sets the endpoint Jacobi weight.
    Substitution { power_hint: Option<f64> },
}

/// Piecewise Gauss grid on `[b_0, R_max]` plus a tail rule.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid {
    pub breakpoints: Vec<f64>,
    pub nodes_per_interval: usize,
    /// Leading power of the function factor at the origin, folded into a
    /// Jacobi weight on the first interval when `b_0 = 0`.
    pub origin_power: f64,
    pub tail: TailMode,
}

pub const DEFAULT_RADIAL_NODES: usize = 64;
const MIN_NODES_PER_INTERVAL: usize = 8;

impl RadialGrid {
    pub fn new(breakpoints: Vec<f64>, nodes_per_interval: usize) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidConfig("radial grid needs breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) || breakpoints[0] < 0.0 {
            return Err(Error::InvalidConfig(
                "radial breakpoints must be nonnegative and increasing".into(),
            ));
        }
        if nodes_per_interval < MIN_NODES_PER_INTERVAL {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_NODES_PER_INTERVAL} nodes per interval required"
            )));
        }
        Ok(RadialGrid {
            breakpoints,
            nodes_per_interval,
            origin_power: 0.0,
            tail: TailMode::None,
        })
    }

    /// `[0, r_max]` split into equal intervals.
    pub fn uniform(r_max: f64, intervals: usize, nodes_per_interval: usize) -> Result<Self> {
        let bps = (0..=intervals)
            .map(|i| r_max * i as f64 / intervals as f64)
            .collect();
        Self::new(bps, nodes_per_interval)
    }

    pub fn with_tail(mut self, tail: TailMode) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_origin_power(mut self, power: f64) -> Self {
        self.origin_power = power;
        self
    }

    pub fn r_max(&self) -> f64 {
        *self.breakpoints.last().expect("nonempty")
    }

    pub fn r_min(&self) -> f64 {
        self.breakpoints[0]
    }

    /// Same breakpoints with half the nodes.
    pub fn coarse(&self) -> RadialGrid {
        RadialGrid {
            nodes_per_interval: (self.nodes_per_interval / 2).max(MIN_NODES_PER_INTERVAL / 2),
            ..self.clone()
        }
    }

    /// Rule with `∫ F(r) dr ≈ Σ w_j F(r_j)` over the grid and a substitution
    /// tail. `origin_beta` is the power of `F` at `r = 0`, `tail_power` its
    /// power at infinity.
    pub fn rule(&self, origin_beta: f64, tail_power: Option<f64>) -> Result<RadialRule> {
        let n = self.nodes_per_interval;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let legendre = gauss_legendre(n);
        for (idx, w) in self.breakpoints.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let half = (b - a) / 2.0;
            if idx == 0 && a == 0.0 && origin_beta != 0.0 {
                let gj = gauss_jacobi(n, 0.0, origin_beta)?;
                for (x, wj) in gj.nodes.iter().zip(&gj.weights) {
                    let r = half * (1.0 + x);
                    nodes.push(r);
                    weights.push(wj * half.powf(origin_beta + 1.0) / r.powf(origin_beta));
                }
            } else {
                for (x, wl) in legendre.nodes.iter().zip(&legendre.weights) {
                    nodes.push(a + half * (1.0 + x));
                    weights.push(wl * half);
                }
            }
        }
        if let TailMode::Substitution { power_hint } = &self.tail {
            let big_r = self.r_max();
            let power = tail_power.or(*power_hint);
            let bt = match power {
                Some(s) => -s - 2.0,
                None => {
                    log::warn!("substitution tail without a power hint; using a plain Gauss rule");
                    0.0
                }
            };
            if bt <= -1.0 {
                return Err(Error::Divergent(format!(
                    "far-field power {} is not integrable",
                    power.unwrap_or(f64::NAN)
                )));
            }
            let gj = gauss_jacobi(n, 0.0, bt)?;
            for (x, wj) in gj.nodes.iter().zip(&gj.weights) {
                let t = (1.0 + x) / 2.0;
                let wt = wj * 0.5f64.powf(bt + 1.0) / t.powf(bt);
                nodes.push(big_r / t);
                weights.push(wt * big_r / (t * t));
            }
        }
        Ok(RadialRule { nodes, weights })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (r, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(*r);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: vec![*r] });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedIntegral {
    pub value: f64,
    pub estimated_error: f64,
}

impl WeightedIntegral {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.estimated_error
        } else {
            self.estimated_error / self.value.abs()
        }
    }
}

/// `∫ g(r) r^exponent dr` over the grid, plus its tail.
pub fn integrate_radial(
    g: impl Fn(f64) -> f64,
    exponent: f64,
    grid: &RadialGrid,
) -> Result<WeightedIntegral> {
    let beta = if grid.r_min() == 0.0 {
        exponent + grid.origin_power
    } else {
        0.0
    };
    if beta <= -1.0 {
        return Err(Error::Divergent(format!(
            "integrand behaves like r^{beta} at the origin"
        )));
    }
    let tail_power = match grid.tail {
        TailMode::Substitution { power_hint } => power_hint.map(|p| p + exponent),
        _ => None,
    };
    let f = |r: f64| g(r) * r.powf(exponent);
    let fine = grid.rule(beta, tail_power)?.integrate(f)?;
    let coarse = grid.coarse().rule(beta, tail_power)?.integrate(f)?;
    let mut value = fine;
    if let TailMode::AnalyticPower { power } = grid.tail {
        let total = power + exponent;
        if total >= -1.0 {
            return Err(Error::Divergent(format!(
                "power tail r^{total} beyond R_max is not integrable"
            )));
        }
        let big_r = grid.r_max();
        let gr = g(big_r);
        if !gr.is_finite() {
            return Err(Error::NonFinite { node: vec![big_r] });
        }
        value += -gr * big_r.powf(exponent + 1.0) / (total + 1.0);
    }
    Ok(WeightedIntegral {
        value,
        estimated_error: (fine - coarse).abs(),
    })
}

/// `∫ f dμ_k` over `{b_0 ≤ |x|}` integrated direction by direction, so
/// analytic power tails are available.
pub fn integrate_measure(
    rs: &RootSystem,
    f: &dyn Fn(&[f64]) -> f64,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<WeightedIntegral> {
    let nbar = rs.nbar();
    let run = |grid: &RadialGrid, rule: &SphericalRule| -> Result<(f64, f64)> {
        let rule = rule.avoiding_hyperplanes(rs)?;
        let mut value = 0.0;
        let mut err = 0.0;
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            let wk = rs.weight(xi);
            let radial = integrate_radial(
                |r| {
                    let x: Vec<f64> = xi.iter().map(|c| r * c).collect();
                    f(&x)
                },
                nbar - 1.0,
                grid,
            )
            .map_err(|e| match e {
                Error::NonFinite { node } => Error::NonFinite {
                    node: xi.iter().map(|c| node[0] * c).collect(),
                },
                other => other,
            })?;
            value += w * wk * radial.value;
            err += w * wk * radial.estimated_error;
        }
        Ok((value, err))
    };
    let (value, radial_err) = run(grid, rule)?;
    let (coarse_value, _) = run(grid, &rule.coarse()?)?;
    Ok(WeightedIntegral {
        value,
        estimated_error: radial_err + (value - coarse_value).abs(),
    })
}

/// Weighted point set with `Σ W_j f(x_j) ≈ ∫ f dμ_k`.
#[derive(Clone, Debug)]
pub struct PointSet {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn integrate_many(&self, outputs: usize, f: &mut dyn FnMut(&[f64], &mut [f64])) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; outputs];
        let mut buf = vec![0.0; outputs];
        for (x, w) in self.points.iter().zip(&self.weights) {
            f(x, &mut buf);
            for (a, v) in acc.iter_mut().zip(&buf) {
                if !v.is_finite() {
                    return Err(Error::NonFinite { node: x.clone() });
                }
                *a += w * v;
            }
        }
        Ok(acc)
    }
}

/// Fine and coarse point sets for the same measure and domain.
#[derive(Clone, Debug)]
pub struct MeasureCloud {
    pub fine: PointSet,
    pub coarse: PointSet,
}

impl MeasureCloud {
    /// Polar cloud on `{b_0 ≤ |x| ≤ R_max}` (plus substitution tail).
    pub fn polar(rs: &RootSystem, grid: &RadialGrid, rule: &SphericalRule) -> Result<Self> {
        Ok(MeasureCloud {
            fine: polar_points(rs, grid, rule)?,
            coarse: polar_points(rs, &grid.coarse(), &rule.coarse()?)?,
        })
    }

    /// Product cloud `x = t·axis + B y`: `t` runs over `line`, `y` over a polar
    /// cloud in the orthogonal complement spanned by the orthonormal columns
    /// `basis`; `rule` lives on the sphere of that complement.
    pub fn product(
        rs: &RootSystem,
        axis: &[f64],
        basis: &[Vec<f64>],
        line: &RadialGrid,
        grid: &RadialGrid,
        rule: &SphericalRule,
    ) -> Result<Self> {
        Ok(MeasureCloud {
            fine: product_points(rs, axis, basis, line, grid, rule)?,
            coarse: product_points(rs, axis, basis, &line.coarse(), &grid.coarse(), &rule.coarse()?)?,
        })
    }

    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }

    /// Integrates `outputs` integrands at once; `f(x, out)` fills `out`.
    pub fn integrate_many(
        &self,
        outputs: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Vec<WeightedIntegral>> {
        let fine = self.fine.integrate_many(outputs, &mut f)?;
        let coarse = self.coarse.integrate_many(outputs, &mut f)?;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(a, b)| WeightedIntegral {
                value: *a,
                estimated_error: (a - b).abs(),
            })
            .collect())
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> Result<WeightedIntegral> {
        Ok(self.integrate_many(1, |x, out| out[0] = f(x))?[0])
    }
}

fn check_tail(grid: &RadialGrid) -> Result<()> {
    if matches!(grid.tail, TailMode::AnalyticPower { .. }) {
        return Err(Error::InvalidConfig(
            "point clouds cannot carry an analytic power tail".into(),
        ));
    }
    Ok(())
}

fn polar_points(rs: &RootSystem, grid: &RadialGrid, rule: &SphericalRule) -> Result<PointSet> {
    check_tail(grid)?;
    let rule = rule.avoiding_hyperplanes(rs)?;
    let nbar = rs.nbar();
    let n = rs.dimension() as f64;
    // F(r) = f(rξ) r^{N̄−1}; f behaves like r^{origin_power} at the origin.
    let beta = nbar - 1.0 + grid.origin_power;
    let beta = if beta > -1.0 { beta } else { 0.0 };
    let tail = match grid.tail {
        TailMode::Substitution { power_hint } => power_hint.map(|p| p + nbar - 1.0),
        _ => None,
    };
    let radial = grid.rule(beta, tail)?;
    let angular: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(xi, w)| w * rs.weight(xi))
        .collect();
    let gamma2 = nbar - n;
    let mut points = Vec::with_capacity(radial.nodes.len() * rule.nodes.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
        let rw = wr * r.powf(n - 1.0) * r.powf(gamma2);
        for (xi, wa) in rule.nodes.iter().zip(&angular) {
            points.push(xi.iter().map(|c| r * c).collect());
            weights.push(rw * wa);
        }
    }
    Ok(PointSet { points, weights })
}

fn product_points(
    rs: &RootSystem,
    axis: &[f64],
    basis: &[Vec<f64>],
    line: &RadialGrid,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<PointSet> {
    check_tail(line)?;
    check_tail(grid)?;
    let dim = rs.dimension();
    let m = basis.len();
    if axis.len() != dim || m + 1 != dim || rule.dimension != m {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m + 1,
        });
    }
    let embed = |t: f64, y: &[f64]| -> Vec<f64> {
        let mut x: Vec<f64> = axis.iter().map(|a| t * a).collect();
        for (yc, col) in y.iter().zip(basis) {
            for (xi, c) in x.iter_mut().zip(col) {
                *xi += yc * c;
            }
        }
        x
    };
    // Keep the complement nodes off the hyperplanes as seen in ℝ^N.
    let mut sub = rule.clone();
    let mut ok = false;
    for _ in 0..32 {
        let bad = sub.nodes.iter().any(|y| {
            let x = embed(0.0, y);
            rs.active_roots().any(|(root, _)| {
                let d = root.dot(&x).abs();
                d < HYPERPLANE_NODE_TOL && root.dot(axis).abs() < HYPERPLANE_NODE_TOL
            })
        });
        if !bad {
            ok = true;
            break;
        }
        if sub.active < 2 {
            break;
        }
        for y in &mut sub.nodes {
            for plane in 0..sub.active - 1 {
                let (c, s) = (JITTER_ANGLE.cos(), JITTER_ANGLE.sin());
                let (a, b) = (y[plane], y[plane + 1]);
                y[plane] = c * a - s * b;
                y[plane + 1] = s * a + c * b;
            }
        }
    }
    if !ok {
        return Err(Error::Degenerate(
            "could not move spherical nodes off the reflection hyperplanes".into(),
        ));
    }
    let line_rule = line.rule(0.0, None)?;
    // The weight is homogeneous of degree 2γ in y when the roots are
    // orthogonal to the axis; fold r^{m−1+2γ} into the radial Jacobi weight.
    let gamma2 = rs.nbar() - dim as f64;
    let beta = m as f64 - 1.0 + gamma2 + grid.origin_power;
    let beta = if beta > -1.0 { beta } else { 0.0 };
    let radial = grid.rule(beta, None)?;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (t, wt) in line_rule.nodes.iter().zip(&line_rule.weights) {
        for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
            for (eta, wa) in sub.nodes.iter().zip(&sub.weights) {
                let y: Vec<f64> = eta.iter().map(|c| r * c).collect();
                let x = embed(*t, &y);
                let w = wt * wr * r.powf(m as f64 - 1.0) * wa * rs.weight(&x);
                points.push(x);
                weights.push(w);
            }
        }
    }
    Ok(PointSet { points, weights })
}

/// Orthonormal basis of the orthogonal complement of the unit vector `axis`.
pub fn complement_basis(axis: &[f64]) -> Vec<Vec<f64>> {
    let n = axis.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for b in std::iter::once(axis).chain(basis.iter().map(|b| b.as_slice())) {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

/// Max over positive roots of `|∫f∘σ_α dμ_k − ∫f dμ_k| / max(|∫f dμ_k|, 1)`.
pub fn reflected_measure_invariance(
    rs: &RootSystem,
    f: &dyn Fn(&[f64]) -> f64,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<f64> {
    let cloud = MeasureCloud::polar(rs, grid, rule)?;
    let roots = rs.positive_roots();
    let vals = cloud.integrate_many(roots.len() + 1, |x, out| {
        out[0] = f(x);
        for (o, root) in out[1..].iter_mut().zip(roots) {
            *o = f(&root.reflect(x));
        }
    })?;
    let base = vals[0].value;
    Ok(vals[1..]
        .iter()
        .map(|v| (v.value - base).abs() / base.abs().max(1.0))
        .fold(0.0, f64::max))
}

/// `|∫T_i(u)v dμ_k + ∫u T_i(v) dμ_k| / (|∫T_i(u)v dμ_k| + 1)`.
pub fn integration_by_parts_residual(
    rs: &RootSystem,
    u: &SmoothFunction,
    v: &SmoothFunction,
    i: usize,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<f64> {
    let cloud = MeasureCloud::polar(rs, grid, rule)?;
    let vals = cloud.integrate_many(2, |x, out| {
        out[0] = dunkl_gradient(rs, u, x)[i] * v.eval(x);
        out[1] = u.eval(x) * dunkl_gradient(rs, v, x)[i];
    })?;
    Ok((vals[0].value + vals[1].value).abs() / (vals[0].value.abs() + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};
    use crate::reflection::{build_root_system, RootFamily};
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let g = gauss_legendre(10);
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_jacobi_moments() {
        // ∫_{-1}^{1} (1+x)^{-1/2} dx = 2√2
        let g = gauss_jacobi(5, 0.0, -0.5).unwrap();
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-13);
        let g = gauss_jacobi(6, 1.5, 1.5).unwrap();
        let m2: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x * x).sum();
        let m0: f64 = g.weights.iter().sum();
        // For the symmetric weight (1−x²)^λ, <x²> = 1/(2λ+3).
        assert!((m2 / m0 - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_rules_have_correct_mass() {
        for n in 1..=5 {
            let rule = sphere_rule(n, 8).unwrap();
            assert!((rule.total_mass() / sphere_area(n) - 1.0).abs() < 1e-10, "N={n}");
            for x in &rule.nodes {
                let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
        assert!(sphere_rule(6, 4).is_err());
        assert!((sphere_rule(2, 10).unwrap().total_mass() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_second_moment() {
        let rule = sphere_rule(3, 6).unwrap();
        assert!((rule.integrate(|x| x[0] * x[0]) - 4.0 * PI / 3.0).abs() < 1e-12);
        let rule = sphere_rule(5, 8).unwrap();
        let m = rule.integrate(|x| x[3].powi(4));
        // ∫_{S⁴} ξ⁴ = 3|S⁴|/(N(N+2)) with N = 5.
        assert!((m - 3.0 * sphere_area(5) / 35.0).abs() < 1e-11);
    }

    #[test]
    fn reduced_rule_matches_full_rule() {
        let full = sphere_rule(5, 10).unwrap();
        let reduced = sphere_rule_reduced(5, 2, 10).unwrap();
        let f = |x: &[f64]| x[0].powi(4) * x[1].powi(2) + x[1] * x[0];
        assert!((full.integrate(f) - reduced.integrate(f)).abs() < 1e-12);
        let big = sphere_rule_reduced(7, 3, 8).unwrap();
        assert!((big.total_mass() / sphere_area(7) - 1.0).abs() < 1e-12);
        let m = big.integrate(|x| x[2] * x[2]);
        assert!((m - sphere_area(7) / 7.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_sphere_self_convergence() {
        let rs = build_root_system(RootFamily::A(2), &[q(1)]).unwrap();
        let lo = sphere_rule(3, 12).unwrap().avoiding_hyperplanes(&rs).unwrap();
        let hi = sphere_rule(3, 24).unwrap().avoiding_hyperplanes(&rs).unwrap();
        let a = lo.integrate(|x| rs.weight(x));
        let b = hi.integrate(|x| rs.weight(x));
        assert!(((a - b) / b).abs() < 1e-8);
    }

    #[test]
    fn jitter_moves_nodes_off_hyperplanes() {
        let rs = build_root_system(RootFamily::Z2(2), &[q(1), q(1)]).unwrap();
        let rule = sphere_rule(2, 3).unwrap();
        let moved = rule.avoiding_hyperplanes(&rs).unwrap();
        for x in &moved.nodes {
            assert!(x[0].abs() > 1e-9 && x[1].abs() > 1e-9);
        }
        assert!((moved.total_mass() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn radial_examples() {
        let grid = RadialGrid::uniform(1.0, 1, 16).unwrap();
        let v = integrate_radial(|_| 1.0, 2.0, &grid).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-14);

        let eps = 0.05;
        let tail = RadialGrid::new(vec![1.0], 16)
            .unwrap()
            .with_tail(TailMode::AnalyticPower { power: -1.0 - eps });
        let v = integrate_radial(|r| r.powf(-1.0 - eps), 0.0, &tail).unwrap();
        assert!((v.value - 1.0 / eps).abs() < 1e-10);

        let sub = RadialGrid::new(vec![1.0], 16)
            .unwrap()
            .with_tail(TailMode::Substitution { power_hint: Some(-1.0 - eps) });
        let v = integrate_radial(|r| r.powf(-1.0 - eps), 0.0, &sub).unwrap();
        assert!((v.value / (1.0 / eps) - 1.0).abs() < 1e-12);

        let bad = RadialGrid::new(vec![1.0], 16)
            .unwrap()
            .with_tail(TailMode::AnalyticPower { power: -0.5 });
        assert!(matches!(integrate_radial(|r| r.powf(-0.5), 0.0, &bad), Err(Error::Divergent(_))));
    }

    #[test]
    fn origin_jacobi_weight() {
        let grid = RadialGrid::uniform(1.0, 1, 8).unwrap();
        let v = integrate_radial(|r| 1.0 + r, 0.3 - 1.0, &grid).unwrap();
        assert!((v.value - (1.0 / 0.3 + 1.0 / 1.3)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_measure_classical() {
        let rs = build_root_system(RootFamily::Z2(3), &[q(0), q(0), q(0)]).unwrap();
        let grid = RadialGrid::uniform(8.0, 8, 24).unwrap();
        let rule = sphere_rule(3, 4).unwrap();
        let f = |x: &[f64]| (-x.iter().map(|c| c * c).sum::<f64>()).exp();
        let v = integrate_measure(&rs, &f, &grid, &rule).unwrap();
        assert!((v.value - PI.powf(1.5)).abs() < 1e-8);
        let cloud = MeasureCloud::polar(&rs, &grid, &rule).unwrap();
        assert!((cloud.integrate(f).unwrap().value - PI.powf(1.5)).abs() < 1e-8);
    }

    #[test]
    fn rank_one_weighted_gaussian() {
        let rs = build_root_system(RootFamily::Z2(1), &[qf(1, 2)]).unwrap();
        let grid = RadialGrid::uniform(8.0, 8, 24).unwrap();
        let rule = sphere_rule(1, 2).unwrap();
        let v = integrate_measure(&rs, &|x: &[f64]| (-x[0] * x[0]).exp(), &grid, &rule).unwrap();
        assert!((v.value - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn ball_homogeneity() {
        let rs = build_root_system(RootFamily::B(2), &[q(1), qf(1, 2)]).unwrap();
        let rule = sphere_rule(2, 16).unwrap();
        let unit = integrate_measure(&rs, &|_| 1.0, &RadialGrid::uniform(1.0, 1, 16).unwrap(), &rule)
            .unwrap()
            .value;
        let nbar = rs.nbar();
        for lambda in [2.0, 3.0] {
            let big = integrate_measure(&rs, &|_| 1.0, &RadialGrid::uniform(lambda, 1, 16).unwrap(), &rule)
                .unwrap()
                .value;
            assert!((big / unit / lambda.powf(nbar) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_reports_node() {
        let rs = build_root_system(RootFamily::Z2(1), &[q(0)]).unwrap();
        let grid = RadialGrid::uniform(1.0, 1, 8).unwrap();
        let rule = sphere_rule(1, 2).unwrap();
        let err = integrate_measure(&rs, &|_| f64::NAN, &grid, &rule).unwrap_err();
        assert!(matches!(err, Error::NonFinite { node } if node.len() == 1));
    }

    #[test]
    fn reflected_invariance_of_odd_function() {
        let rs = build_root_system(RootFamily::Z2(1), &[qf(1, 2)]).unwrap();
        let grid = RadialGrid::uniform(6.0, 6, 16).unwrap();
        let rule = sphere_rule(1, 2).unwrap();
        let f = |x: &[f64]| x[0] * (-x[0] * x[0]).exp();
        assert!(reflected_measure_invariance(&rs, &f, &grid, &rule).unwrap() < 1e-10);
    }

    #[test]
    fn integration_by_parts_rank_one() {
        let rs = build_root_system(RootFamily::Z2(1), &[qf(1, 2)]).unwrap();
        let grid = RadialGrid::uniform(7.0, 7, 24).unwrap();
        let rule = sphere_rule(1, 2).unwrap();
        let u = SmoothFunction::new(
            1,
            |x| x[0] * (-x[0] * x[0]).exp(),
            |x| vec![(1.0 - 2.0 * x[0] * x[0]) * (-x[0] * x[0]).exp()],
            |x| (4.0 * x[0].powi(3) - 6.0 * x[0]) * (-x[0] * x[0]).exp(),
        );
        let v = SmoothFunction::gaussian(vec![0.0], 1.0);
        assert!(integration_by_parts_residual(&rs, &u, &v, 0, &grid, &rule).unwrap() < 1e-8);
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let eta = vec![1.0 / 3f64.sqrt(); 3];
        let b = complement_basis(&eta);
        assert_eq!(b.len(), 2);
        for (i, u) in b.iter().enumerate() {
            let d: f64 = u.iter().zip(&eta).map(|(x, y)| x * y).sum();
            assert!(d.abs() < 1e-15);
            for (j, v) in b.iter().enumerate() {
                let d: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_integrals() {
        let rs = build_root_system(RootFamily::A(2), &[qf(1, 2)]).unwrap();
        let grid = RadialGrid::uniform(4.0, 4, 12).unwrap();
        let rule = sphere_rule(3, 8).unwrap();
        let f = |x: &[f64]| (x[0] + 2.0 * x[1]).powi(2) * (-x.iter().map(|c| c * c).sum::<f64>()).exp();
        let a = integrate_measure(&rs, &f, &grid, &rule).unwrap();
        let b = integrate_measure(&rs, &f, &grid, &rule).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
