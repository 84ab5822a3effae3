//! Spherical h-harmonics: exact kernels of `Δ_k` on homogeneous polynomials,
//! orthonormalisation against `ω_k dν`, and the spectral expansion of
//! functions in polar form.

use nalgebra::{DMatrix, SymmetricEigen};
use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::dunklnum::{NumericPolynomial, SmoothFunction};
use crate::error::{Error, Result};
use crate::polyalg::{monomials, Polynomial, SymbolicDunkl, TermDoc};
use crate::quad::{MeasureCloud, RadialGrid, RadialRule, SphericalRule};
use crate::rational::{q, RatMatrix, Q};
use crate::reflection::RootSystem;

pub const MAX_DEGREE: u32 = 8;
const ORTHONORMAL_TOL: f64 = 1e-8;

/// `d(n) = C(n+N−1, N−1) − C(n+N−3, N−1)`, the dimension of degree-`n`
/// h-harmonics in `ℝ^N`.
pub fn hharmonic_dim(n: u32, dimension: usize) -> usize {
    let choose = |top: i64, bottom: i64| -> usize {
        if top < 0 || bottom < 0 || bottom > top {
            0
        } else {
            binomial(top as u64, bottom as u64) as usize
        }
    };
    let (n, d) = (n as i64, dimension as i64);
    choose(n + d - 1, d - 1) - choose(n + d - 3, d - 1)
}

/// `λ_n = −n(n+N̄−2)`.
pub fn eigenvalue(rs: &RootSystem, n: u32) -> Q {
    let n = q(n as i64);
    -(&n * (&n + rs.nbar_exact() - q(2)))
}

/// Orthonormal h-harmonics of one degree.
#[derive(Clone, Debug)]
pub struct HHarmonicBasis {
    pub degree: u32,
    pub dimension: usize,
    /// Exact kernel basis of `Δ_k` on degree-`n` homogeneous polynomials.
    pub basis: Vec<Polynomial>,
    /// Spherical Gram matrix of `basis` against `ω_k dν`.
    pub gram: Vec<Vec<f64>>,
    /// Row `i` holds the coefficients of `Y_i` in terms of `basis`.
    pub orthonormalization: Vec<Vec<f64>>,
    pub orthonormalized: bool,
    pub condition_number: f64,
    numeric: Vec<NumericPolynomial>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HHarmonicBasisDoc {
    pub degree: u32,
    pub dimension: usize,
    pub polynomials: Vec<Vec<TermDoc>>,
    pub orthonormalization: Vec<Vec<f64>>,
}

impl HHarmonicBasis {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Values of every `Y_i` at `x` (homogeneous extension, so `x` on the
    /// sphere gives the spherical values).
    pub fn eval_all(&self, x: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = self.numeric.iter().map(|p| p.eval(x)).collect();
        self.orthonormalization
            .iter()
            .map(|row| row.iter().zip(&raw).map(|(c, v)| c * v).sum())
            .collect()
    }

    pub fn to_doc(&self) -> HHarmonicBasisDoc {
        HHarmonicBasisDoc {
            degree: self.degree,
            dimension: self.dimension,
            polynomials: self.basis.iter().map(Polynomial::to_doc).collect(),
            orthonormalization: self.orthonormalization.clone(),
        }
    }
}

/// Exact kernel of `Δ_k` on homogeneous polynomials of degree `n`.
pub fn hharmonic_kernel(rs: &RootSystem, n: u32) -> Result<Vec<Polynomial>> {
    let dim = rs.dimension();
    let ctx = SymbolicDunkl::new(rs)?;
    let cols = monomials(dim, n);
    if n < 2 {
        return Ok(cols
            .into_iter()
            .map(|e| Polynomial::monomial(dim, e, Q::from_integer(1.into())))
            .collect());
    }
    let rows = monomials(dim, n - 2);
    let row_index: std::collections::HashMap<&Vec<u32>, usize> =
        rows.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut matrix = RatMatrix::zeros(rows.len(), cols.len());
    for (c, e) in cols.iter().enumerate() {
        let lap = ctx.laplacian_formula(&Polynomial::monomial(dim, e.clone(), q(1)))?;
        for (exp, coeff) in lap.terms() {
            let r = row_index.get(exp).ok_or_else(|| {
                Error::InvariantBreach(format!("Dunkl Laplacian left degree {}", n - 2))
            })?;
            matrix[(*r, c)] = coeff.clone();
        }
    }
    let kernel = matrix.nullspace();
    Ok(kernel
        .into_iter()
        .map(|v| {
            let mut p = Polynomial::zero(dim);
            for (coeff, e) in v.iter().zip(&cols) {
                p = &p + &Polynomial::monomial(dim, e.clone(), coeff.clone());
            }
            p
        })
        .collect())
}

/// Degree-`n` h-harmonics orthonormalised against `ω_k dν` with `rule`.
pub fn build_basis(rs: &RootSystem, n: u32, rule: &SphericalRule) -> Result<HHarmonicBasis> {
    if n > MAX_DEGREE {
        return Err(Error::InvalidConfig(format!(
            "h-harmonic degree {n} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let dim = rs.dimension();
    let basis = hharmonic_kernel(rs, n)?;
    let expected = if dim >= 2 { hharmonic_dim(n, dim) } else { usize::from(n <= 1) };
    if basis.len() != expected {
        return Err(Error::InvariantBreach(format!(
            "kernel of the Dunkl Laplacian in degree {n} has dimension {}, expected {expected}",
            basis.len()
        )));
    }
    let ctx = SymbolicDunkl::new(rs)?;
    for p in &basis {
        if !ctx.laplacian_formula(p)?.is_zero() {
            return Err(Error::InvariantBreach("kernel element is not h-harmonic".into()));
        }
    }
    let rule = rule.avoiding_hyperplanes(rs)?;
    let numeric: Vec<NumericPolynomial> = basis.iter().map(NumericPolynomial::from_exact).collect();
    let d = basis.len();
    let mut gram = vec![vec![0.0; d]; d];
    for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
        let ww = w * rs.weight(xi);
        let vals: Vec<f64> = numeric.iter().map(|p| p.eval(xi)).collect();
        for i in 0..d {
            for j in 0..=i {
                gram[i][j] += ww * vals[i] * vals[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[j][i] = gram[i][j];
        }
    }
    let condition_number = if d == 0 {
        1.0
    } else {
        let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| gram[i][j]));
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let orthonormalization = gram_schmidt(&gram)?;
    let basis = HHarmonicBasis {
        degree: n,
        dimension: dim,
        basis,
        gram,
        orthonormalization,
        orthonormalized: true,
        condition_number,
        numeric,
    };
    let g = discrete_gram(rs, &basis, &rule);
    let off = max_identity_deviation(&g);
    if off > ORTHONORMAL_TOL {
        return Err(Error::InvariantBreach(format!(
            "orthonormalised basis deviates from identity by {off:e}"
        )));
    }
    Ok(basis)
}

/// Modified Gram–Schmidt in the inner product `⟨a,b⟩ = aᵀGb`, with a
/// re-orthogonalisation pass.
fn gram_schmidt(gram: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = gram.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        (0..d)
            .map(|i| a[i] * (0..d).map(|j| gram[i][j] * b[j]).sum::<f64>())
            .sum()
    };
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for _pass in 0..2 {
            for u in &out {
                let c = ip(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let norm = ip(&v, &v);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate(
                "h-harmonic Gram matrix is not positive definite; raise the sphere order".into(),
            ));
        }
        let s = norm.sqrt();
        out.push(v.into_iter().map(|x| x / s).collect());
    }
    Ok(out)
}

fn discrete_gram(rs: &RootSystem, basis: &HHarmonicBasis, rule: &SphericalRule) -> Vec<Vec<f64>> {
    let d = basis.len();
    let mut g = vec![vec![0.0; d]; d];
    for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
        let ww = w * rs.weight(xi);
        let y = basis.eval_all(xi);
        for i in 0..d {
            for j in 0..d {
                g[i][j] += ww * y[i] * y[j];
            }
        }
    }
    g
}

fn max_identity_deviation(g: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// `max |⟨Y^n_i, Y^m_j⟩|` over pairs of distinct bases.
pub fn cross_degree_orthogonality(
    rs: &RootSystem,
    a: &HHarmonicBasis,
    b: &HHarmonicBasis,
    rule: &SphericalRule,
) -> Result<f64> {
    let rule = rule.avoiding_hyperplanes(rs)?;
    let mut acc = vec![vec![0.0; b.len()]; a.len()];
    for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
        let ww = w * rs.weight(xi);
        let ya = a.eval_all(xi);
        let yb = b.eval_all(xi);
        for (row, ai) in acc.iter_mut().zip(&ya) {
            for (cell, bj) in row.iter_mut().zip(&yb) {
                *cell += ww * ai * bj;
            }
        }
    }
    Ok(acc.iter().flatten().fold(0.0, |m, v| m.max(v.abs())))
}

/// `r²Δ_k p − [r∂_r(r∂_r p) + (N̄−2) r∂_r p] − λ_n p` for homogeneous `p`
/// of degree `n` (so `r∂_r p = n p`); zero iff `p` is h-harmonic.
pub fn sphere_eigencheck(rs: &RootSystem, p: &Polynomial) -> Result<Polynomial> {
    let dim = rs.dimension();
    if p.is_zero() {
        return Ok(Polynomial::zero(dim));
    }
    let n = p.homogeneous_degree().ok_or_else(|| {
        Error::InvalidConfig("eigenvalue check needs a homogeneous polynomial".into())
    })?;
    let ctx = SymbolicDunkl::new(rs)?;
    let lap = ctx.laplacian_formula(p)?;
    let nq = q(n as i64);
    let euler = &nq * &nq + (rs.nbar_exact() - q(2)) * &nq;
    let radial = p.scale(&(euler + eigenvalue(rs, n)));
    Ok(&(&Polynomial::norm_sq(dim) * &lap) - &radial)
}

/// `ω_d^k = ∫_{S^{N−1}} ω_k dν`.
pub fn weighted_sphere_mass(rs: &RootSystem, rule: &SphericalRule) -> Result<f64> {
    Ok(rule.avoiding_hyperplanes(rs)?.integrate(|xi| rs.weight(xi)))
}

/// Coefficients `u_{n,i}(r) = ∫ u(rξ) Y_i^n(ξ) ω_k(ξ) dν(ξ)` tabulated at
/// the radial nodes of a grid.
#[derive(Clone, Debug)]
pub struct SpectralCoefficients {
    pub n_max: u32,
    pub radii: Vec<f64>,
    /// `∫ F(r) dr ≈ Σ weights_j F(r_j)` for `F ~ r^{N̄−1}` at the origin.
    pub radial_weights: Vec<f64>,
    /// `values[n][i][j] = u_{n,i}(radii[j])`.
    pub values: Vec<Vec<Vec<f64>>>,
    nbar: f64,
    grid: RadialGrid,
    rule: SphericalRule,
    panel: usize,
}

/// Expansion of `u` in the bases `bases[n]`, `n = 0..=n_max`.
pub fn expand(
    rs: &RootSystem,
    u: &dyn Fn(&[f64]) -> f64,
    bases: &[HHarmonicBasis],
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<SpectralCoefficients> {
    if bases.iter().any(|b| !b.orthonormalized) {
        return Err(Error::InvalidConfig("expansion needs orthonormal bases".into()));
    }
    let rule = rule.avoiding_hyperplanes(rs)?;
    let nbar = rs.nbar();
    let RadialRule { nodes, weights } = grid.rule(nbar - 1.0 + grid.origin_power, None)?;
    let sphere: Vec<(f64, Vec<Vec<f64>>)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(xi, w)| (w * rs.weight(xi), bases.iter().map(|b| b.eval_all(xi)).collect()))
        .collect();
    let mut values: Vec<Vec<Vec<f64>>> = bases
        .iter()
        .map(|b| vec![vec![0.0; nodes.len()]; b.len()])
        .collect();
    for (j, r) in nodes.iter().enumerate() {
        for (xi, (ww, ys)) in rule.nodes.iter().zip(&sphere) {
            let x: Vec<f64> = xi.iter().map(|c| r * c).collect();
            let v = u(&x);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: x });
            }
            for (deg, y) in ys.iter().enumerate() {
                for (i, yi) in y.iter().enumerate() {
                    values[deg][i][j] += ww * v * yi;
                }
            }
        }
    }
    Ok(SpectralCoefficients {
        n_max: bases.len().saturating_sub(1) as u32,
        radii: nodes,
        radial_weights: weights,
        values,
        nbar,
        grid: grid.clone(),
        rule,
        panel: grid.nodes_per_interval,
    })
}

impl SpectralCoefficients {
    /// Barycentric interpolation of `u_{n,i}` within the panel containing `r`.
    pub fn interpolate(&self, n: usize, i: usize, r: f64) -> f64 {
        let bps = &self.grid.breakpoints;
        let intervals = bps.len() - 1;
        let mut k = bps.partition_point(|b| *b <= r).saturating_sub(1);
        k = k.min(intervals.saturating_sub(1));
        let lo = k * self.panel;
        let hi = (lo + self.panel).min(self.radii.len());
        let xs = &self.radii[lo..hi];
        let ys = &self.values[n][i][lo..hi];
        let (a, b) = (bps[k], bps[k + 1]);
        let map = |x: f64| (2.0 * x - a - b) / (b - a);
        let t: Vec<f64> = xs.iter().map(|x| map(*x)).collect();
        let tr = map(r);
        let w: Vec<f64> = (0..t.len())
            .map(|j| {
                1.0 / (0..t.len())
                    .filter(|&m| m != j)
                    .map(|m| t[j] - t[m])
                    .product::<f64>()
            })
            .collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..t.len() {
            let d = tr - t[j];
            if d == 0.0 {
                return ys[j];
            }
            num += w[j] / d * ys[j];
            den += w[j] / d;
        }
        num / den
    }

    /// `Σ u_{n,i}(|x|) Y_i^n(x/|x|)`.
    pub fn reconstruct(&self, bases: &[HHarmonicBasis], x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let xi: Vec<f64> = x.iter().map(|c| c / r).collect();
        bases
            .iter()
            .enumerate()
            .map(|(n, b)| {
                b.eval_all(&xi)
                    .iter()
                    .enumerate()
                    .map(|(i, y)| self.interpolate(n, i, r) * y)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `Σ_{n,i} ∫ u_{n,i}(r)² r^{N̄−1} dr`.
    pub fn energy(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|row| {
                row.iter()
                    .zip(&self.radial_weights)
                    .zip(&self.radii)
                    .map(|((v, w), r)| w * r.powf(self.nbar - 1.0) * v * v)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Largest `|u_{n,i}(r_j)|` for degree `n`.
    pub fn max_abs(&self, n: usize) -> f64 {
        self.values[n]
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `|∫u² dμ_k − Σ ∫u_{n,i}² r^{N̄−1} dr| / ∫u² dμ_k`.
pub fn parseval_residual(
    rs: &RootSystem,
    u: &dyn Fn(&[f64]) -> f64,
    coeffs: &SpectralCoefficients,
) -> Result<f64> {
    let grid = coeffs.grid.clone();
    let cloud = MeasureCloud::polar(rs, &grid, &coeffs.rule)?;
    let total = cloud.fine.points.iter().zip(&cloud.fine.weights).map(|(x, w)| w * u(x).powi(2)).sum::<f64>();
    Ok((total - coeffs.energy()).abs() / total.abs())
}

/// `(1/ω_d^k) ∫ u(rξ) ω_k(ξ) dν(ξ)` at each radius.
fn spherical_means(
    rs: &RootSystem,
    u: &dyn Fn(&[f64]) -> f64,
    radii: &[f64],
    rule: &SphericalRule,
) -> Vec<f64> {
    let ww: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(xi, w)| w * rs.weight(xi)).collect();
    let mass: f64 = ww.iter().sum();
    radii
        .iter()
        .map(|r| {
            rule.nodes
                .iter()
                .zip(&ww)
                .map(|(xi, w)| {
                    let x: Vec<f64> = xi.iter().map(|c| r * c).collect();
                    w * u(&x)
                })
                .sum::<f64>()
                / mass
        })
        .collect()
}

/// `max_α sup_r |(u∘σ_α)_{0,1}(r) − u_{0,1}(r)|` over the grid's radial nodes.
pub fn mean_projection_invariance(
    rs: &RootSystem,
    u: &dyn Fn(&[f64]) -> f64,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<f64> {
    let rule = rule.avoiding_hyperplanes(rs)?;
    let radii = grid.rule(0.0, None)?.nodes;
    let base = spherical_means(rs, u, &radii, &rule);
    let mut worst: f64 = 0.0;
    for root in rs.positive_roots() {
        let reflected = |x: &[f64]| u(&root.reflect(x));
        let m = spherical_means(rs, &reflected, &radii, &rule);
        for (a, b) in m.iter().zip(&base) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossTermReport {
    /// `(∫(u−u∘σ_α)u/|x|⁴ dμ_k, 2∫(u−u_{0,1})²/|x|⁴ dμ_k)` per positive root.
    pub per_root: Vec<(f64, f64)>,
    pub holds: bool,
}

/// Checks `∫(u−u∘σ_α)u/|x|⁴ dμ_k ≤ 2∫(u−u_{0,1})²/|x|⁴ dμ_k` for each root.
pub fn cross_term_bound_check(
    rs: &RootSystem,
    u: &SmoothFunction,
    grid: &RadialGrid,
    rule: &SphericalRule,
) -> Result<CrossTermReport> {
    let rule = rule.avoiding_hyperplanes(rs)?;
    let nbar = rs.nbar();
    let beta = nbar - 5.0 + grid.origin_power;
    let beta = if beta > -1.0 { beta } else { 0.0 };
    let radial = grid.rule(beta, None)?;
    let ww: Vec<f64> = rule.nodes.iter().zip(&rule.weights).map(|(xi, w)| w * rs.weight(xi)).collect();
    let mass: f64 = ww.iter().sum();
    let roots = rs.positive_roots();
    let mut lhs = vec![0.0; roots.len()];
    let mut rhs = 0.0;
    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
        let radial_w = wr * r.powf(nbar - 5.0);
        let pts: Vec<Vec<f64>> = rule.nodes.iter().map(|xi| xi.iter().map(|c| r * c).collect()).collect();
        let vals: Vec<f64> = pts.iter().map(|x| u.eval(x)).collect();
        let mean = vals.iter().zip(&ww).map(|(v, w)| v * w).sum::<f64>() / mass;
        for ((x, v), w) in pts.iter().zip(&vals).zip(&ww) {
            rhs += 2.0 * radial_w * w * (v - mean).powi(2);
            for (l, root) in lhs.iter_mut().zip(roots) {
                *l += radial_w * w * (v - u.eval(&root.reflect(x))) * v;
            }
        }
    }
    let per_root: Vec<(f64, f64)> = lhs.into_iter().map(|l| (l, rhs)).collect();
    let holds = per_root.iter().all(|(l, r)| *l <= r + 1e-8 * r.abs().max(1.0));
    Ok(CrossTermReport { per_root, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::sphere_rule;
    use crate::rational::qf;
    use crate::reflection::{build_root_system, RootFamily};

    #[test]
    fn dimension_formula() {
        assert_eq!(hharmonic_dim(0, 3), 1);
        assert_eq!(hharmonic_dim(1, 3), 3);
        assert_eq!(hharmonic_dim(2, 3), 5);
        assert_eq!(hharmonic_dim(3, 2), 2);
        assert_eq!(hharmonic_dim(4, 4), 25);
    }

    #[test]
    fn kernel_dimensions_match() {
        for (family, ks) in [
            (RootFamily::A(2), vec![qf(1, 2)]),
            (RootFamily::B(2), vec![q(1), qf(2, 5)]),
            (RootFamily::Z2(3), vec![q(0), qf(1, 2), q(1)]),
        ] {
            let rs = build_root_system(family, &ks).unwrap();
            for n in 0..=4 {
                let ker = hharmonic_kernel(&rs, n).unwrap();
                assert_eq!(ker.len(), hharmonic_dim(n, rs.dimension()), "{family} n={n}");
                for p in &ker {
                    assert!(sphere_eigencheck(&rs, p).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn linear_forms_are_harmonic() {
        let rs = build_root_system(RootFamily::B(2), &[qf(1, 3), q(2)]).unwrap();
        assert_eq!(hharmonic_kernel(&rs, 1).unwrap().len(), 2);
    }

    #[test]
    fn deformed_kernel_differs_from_classical() {
        let rs = build_root_system(RootFamily::Z2(2), &[qf(1, 2), qf(1, 2)]).unwrap();
        let ker = hharmonic_kernel(&rs, 2).unwrap();
        assert_eq!(ker.len(), 2);
        let classical = Polynomial::monomial(2, vec![2, 0], q(1));
        let classical = &classical - &Polynomial::monomial(2, vec![0, 2], q(1));
        assert!(ker.contains(&Polynomial::monomial(2, vec![1, 1], q(1))));
        let free = build_root_system(RootFamily::Z2(2), &[q(0), q(0)]).unwrap();
        assert!(sphere_eigencheck(&free, &classical).unwrap().is_zero());
        // x² − y² stays harmonic for equal multiplicities, x² − 3y² does not.
        assert!(sphere_eigencheck(&rs, &classical).unwrap().is_zero());
        let skew = &Polynomial::monomial(2, vec![2, 0], q(1)) - &Polynomial::monomial(2, vec![0, 2], q(3));
        assert!(!sphere_eigencheck(&rs, &skew).unwrap().is_zero());
    }

    #[test]
    fn eigencheck_of_norm() {
        let rs = build_root_system(RootFamily::A(2), &[q(1)]).unwrap();
        let res = sphere_eigencheck(&rs, &Polynomial::norm_sq(3)).unwrap();
        let expected = Polynomial::norm_sq(3).scale(&(q(2) * rs.nbar_exact()));
        assert_eq!(res, expected);
        assert_eq!(eigenvalue(&rs, 1), -(rs.nbar_exact() - q(1)));
    }

    #[test]
    fn orthonormal_bases() {
        let rs = build_root_system(RootFamily::A(2), &[q(1)]).unwrap();
        let rule = sphere_rule(3, 16).unwrap();
        let b2 = build_basis(&rs, 2, &rule).unwrap();
        let b3 = build_basis(&rs, 3, &rule).unwrap();
        assert_eq!(b2.len(), 5);
        assert!(b2.condition_number >= 1.0);
        assert!(cross_degree_orthogonality(&rs, &b2, &b3, &rule).unwrap() < 1e-8);
        let doc = serde_json::to_string(&b2.to_doc()).unwrap();
        assert!(doc.contains("orthonormalization"));
    }

    #[test]
    fn expansion_and_parseval() {
        let rs = build_root_system(RootFamily::Z2(3), &[q(0), q(0), q(0)]).unwrap();
        let rule = sphere_rule(3, 12).unwrap();
        let bases: Vec<_> = (0..=2).map(|n| build_basis(&rs, n, &rule).unwrap()).collect();
        let grid = RadialGrid::uniform(6.0, 6, 16).unwrap();
        let u = |x: &[f64]| x[0] * (-x.iter().map(|c| c * c).sum::<f64>()).exp();
        let c = expand(&rs, &u, &bases, &grid, &rule).unwrap();
        assert!(c.max_abs(0) < 1e-12 && c.max_abs(2) < 1e-12);
        assert!(c.max_abs(1) > 1e-3);
        let res = parseval_residual(&rs, &u, &c).unwrap();
        assert!(res < 1e-10, "{res}");
        let x = [0.37, -0.21, 0.55];
        assert!((c.reconstruct(&bases, &x) - u(&x)).abs() < 1e-9);
    }

    #[test]
    fn mean_projection_and_cross_term() {
        let rs = build_root_system(RootFamily::B(2), &[q(1), q(2)]).unwrap();
        let rule = sphere_rule(2, 64).unwrap();
        let grid = RadialGrid::new(vec![0.5, 1.0, 1.5, 2.0], 12).unwrap();
        let u = SmoothFunction::gaussian(vec![0.4, -0.1], 0.5);
        let f = |x: &[f64]| u.eval(x);
        let m = mean_projection_invariance(&rs, &f, &grid, &rule).unwrap();
        assert!(m < 1e-8, "{m}");
        let report = cross_term_bound_check(&rs, &u, &grid, &rule).unwrap();
        assert!(report.holds);
        assert_eq!(report.per_root.len(), 4);
    }
}
