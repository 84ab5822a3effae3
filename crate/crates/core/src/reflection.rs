//! Root systems, the finite reflection groups they generate, and the weight
//! data (multiplicities, `γ`, `ω_k`, `ρ`) attached to them.
//!
//! Every root is normalised so that `|α|² = 2`. For the rational families the
//! root also keeps an exact direction vector `v` with `α = √(2/|v|²)·v`; the
//! radical never appears in the Dunkl operators because `α_i/⟨α,x⟩ = v_i/⟨v,x⟩`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, q, to_f64, RatMatrix, Q};

/// Relative distance to a reflection hyperplane below which a point is
/// treated as lying on it.
pub const HYPERPLANE_TOL: f64 = 1e-8;

/// Supported families. The payload is the rank, except for `I2(m)` where it is
/// the dihedral parameter `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootFamily {
    A(usize),
    B(usize),
    Z2(usize),
    I2(usize),
}

impl RootFamily {
    /// `name` is one of `A`, `B`, `Z2`, `I2` (case-insensitive).
    pub fn parse(name: &str, rank_or_m: usize) -> Result<Self> {
        let family = match name.to_ascii_uppercase().as_str() {
            "A" => RootFamily::A(rank_or_m),
            "B" => RootFamily::B(rank_or_m),
            "Z2" => RootFamily::Z2(rank_or_m),
            "I2" => RootFamily::I2(rank_or_m),
            _ => return Err(Error::UnknownFamily(name.to_string())),
        };
        if rank_or_m == 0 {
            return Err(Error::InvalidRank {
                family: name.to_string(),
                rank: 0,
            });
        }
        Ok(family)
    }

    pub fn letter(&self) -> &'static str {
        match self {
            RootFamily::A(_) => "A",
            RootFamily::B(_) => "B",
            RootFamily::Z2(_) => "Z2",
            RootFamily::I2(_) => "I2",
        }
    }

    pub fn parameter(&self) -> usize {
        match *self {
            RootFamily::A(n) | RootFamily::B(n) | RootFamily::Z2(n) | RootFamily::I2(n) => n,
        }
    }

    /// Dimension of the space the family naturally lives in.
    pub fn natural_dimension(&self) -> usize {
        match *self {
            RootFamily::A(n) => n + 1,
            RootFamily::B(n) | RootFamily::Z2(n) => n,
            RootFamily::I2(_) => 2,
        }
    }
}

impl fmt::Display for RootFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootFamily::Z2(n) => write!(f, "Z2^{n}"),
            other => write!(f, "{}({})", other.letter(), other.parameter()),
        }
    }
}

/// A root `α` with `|α|² = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    direction: Option<Vec<Q>>,
    vector: Vec<f64>,
}

impl Root {
    /// Root along the rational direction `v`, scaled to `|α|² = 2`.
    pub fn from_direction(direction: Vec<Q>) -> Self {
        let norm_sq: Q = direction.iter().map(|c| c * c).sum();
        assert!(!norm_sq.is_zero(), "zero root direction");
        let scale = (2.0 / to_f64(&norm_sq)).sqrt();
        let vector = direction.iter().map(|c| scale * to_f64(c)).collect();
        Root {
            direction: Some(direction),
            vector,
        }
    }

    /// Root along a floating direction (no exact data).
    pub fn from_f64(direction: &[f64]) -> Self {
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(norm > 0.0, "zero root direction");
        let scale = std::f64::consts::SQRT_2 / norm;
        Root {
            direction: None,
            vector: direction.iter().map(|c| c * scale).collect(),
        }
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    /// Exact direction `v` (any positive multiple of `α`), when available.
    pub fn direction(&self) -> Option<&[Q]> {
        self.direction.as_deref()
    }

    pub fn direction_norm_sq(&self) -> Option<Q> {
        self.direction
            .as_ref()
            .map(|d| d.iter().map(|c| c * c).sum())
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.vector.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(&self.vector.clone())
    }

    pub fn negated(&self) -> Root {
        Root {
            direction: self.direction.as_ref().map(|d| d.iter().map(|c| -c).collect()),
            vector: self.vector.iter().map(|c| -c).collect(),
        }
    }

    fn padded(&self, dim: usize) -> Root {
        let mut vector = self.vector.clone();
        vector.resize(dim, 0.0);
        let direction = self.direction.as_ref().map(|d| {
            let mut d = d.clone();
            d.resize(dim, Q::zero());
            d
        });
        Root { direction, vector }
    }

    /// `σ_α x = x − 2⟨α,x⟩/⟨α,α⟩ α`.
    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let c = 2.0 * self.dot(x) / self.norm_sq();
        x.iter().zip(&self.vector).map(|(xi, ai)| xi - c * ai).collect()
    }

    pub fn reflection_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let c = 2.0 / self.norm_sq();
        DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - c * self.vector[i] * self.vector[j]
        })
    }

    /// `I − 2vvᵀ/|v|²`, which is rational whenever the direction is.
    pub fn reflection_matrix_exact(&self) -> Option<RatMatrix> {
        let d = self.direction.as_ref()?;
        let n = d.len();
        let two_over = q(2) / self.direction_norm_sq()?;
        let mut m = RatMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                let delta = &two_over * &d[i] * &d[j];
                m[(i, j)] -= delta;
            }
        }
        Some(m)
    }

    fn approx_eq(&self, other: &[f64], tol: f64) -> bool {
        self.vector
            .iter()
            .zip(other)
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// `γ = Σ_{α∈R+} k_α` and the homogeneity degree `2γ` of `ω_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicitySummary {
    pub gamma: Q,
    pub weight_degree: Q,
}

/// A root system with a fixed positive subsystem and a `G`-invariant
/// multiplicity function.
#[derive(Clone, Debug)]
pub struct RootSystem {
    family: RootFamily,
    dimension: usize,
    positive: Vec<Root>,
    orbit: Vec<usize>,
    multiplicities: Vec<Q>,
    k: Vec<f64>,
}

impl RootSystem {
    pub fn family(&self) -> RootFamily {
        self.family
    }

    /// Ambient dimension `N`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn positive_roots(&self) -> &[Root] {
        &self.positive
    }

    /// All roots: the positive subsystem followed by its negatives.
    pub fn roots(&self) -> Vec<Root> {
        self.positive
            .iter()
            .cloned()
            .chain(self.positive.iter().map(Root::negated))
            .collect()
    }

    pub fn orbit_count(&self) -> usize {
        self.multiplicities.len()
    }

    /// Multiplicity per orbit, in order of first appearance in the positive list.
    pub fn orbit_multiplicities(&self) -> &[Q] {
        &self.multiplicities
    }

    /// Orbit index of each positive root.
    pub fn orbits(&self) -> &[usize] {
        &self.orbit
    }

    /// Exact `k_α` for the `i`-th positive root.
    pub fn multiplicity(&self, i: usize) -> &Q {
        &self.multiplicities[self.orbit[i]]
    }

    pub fn multiplicity_f64(&self, i: usize) -> f64 {
        self.k[i]
    }

    /// Positive roots with nonzero multiplicity, paired with `k_α`.
    pub fn active_roots(&self) -> impl Iterator<Item = (&Root, f64)> {
        self.positive
            .iter()
            .zip(&self.k)
            .filter(|(_, &k)| k != 0.0)
            .map(|(r, &k)| (r, k))
    }

    pub fn gamma(&self) -> Q {
        (0..self.positive.len()).map(|i| self.multiplicity(i).clone()).sum()
    }

    pub fn gamma_f64(&self) -> f64 {
        to_f64(&self.gamma())
    }

    /// Effective dimension `N̄ = N + 2γ`, exactly.
    pub fn nbar_exact(&self) -> Q {
        q(self.dimension as i64) + q(2) * self.gamma()
    }

    pub fn nbar(&self) -> f64 {
        to_f64(&self.nbar_exact())
    }

    pub fn summary(&self) -> MultiplicitySummary {
        let gamma = self.gamma();
        MultiplicitySummary {
            weight_degree: q(2) * &gamma,
            gamma,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.positive.iter().all(|r| r.direction.is_some())
    }

    pub fn is_zero_multiplicity(&self) -> bool {
        self.multiplicities.iter().all(Zero::is_zero)
    }

    /// `σ_α x`.
    pub fn reflect(&self, root: usize, x: &[f64]) -> Vec<f64> {
        self.positive[root].reflect(x)
    }

    /// `ω_k(x) = ∏_{α∈R+} |⟨α,x⟩|^{2k_α}`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.active_roots()
            .map(|(r, k)| r.dot(x).abs().powf(2.0 * k))
            .product()
    }

    /// `ρ(x) = 2 Σ_{α∈R+} k_α α/⟨α,x⟩`; fails on a reflection hyperplane.
    pub fn rho(&self, x: &[f64]) -> Result<Vec<f64>> {
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut out = vec![0.0; self.dimension];
        for (root, k) in self.active_roots() {
            let t = root.dot(x);
            if t.abs() < HYPERPLANE_TOL * norm || t == 0.0 {
                return Err(Error::SingularPoint {
                    root: root.vector().to_vec(),
                });
            }
            for (o, a) in out.iter_mut().zip(root.vector()) {
                *o += 2.0 * k * a / t;
            }
        }
        Ok(out)
    }

    /// The same root system viewed in `ℝ^dim` (`dim ≥ N`), acting trivially on
    /// the extra coordinates.
    pub fn embedded(&self, dim: usize) -> Result<RootSystem> {
        if dim < self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: dim,
            });
        }
        let mut rs = self.clone();
        rs.dimension = dim;
        rs.positive = self.positive.iter().map(|r| r.padded(dim)).collect();
        Ok(rs)
    }

    /// Alternate positive subsystem: root `i` is replaced by `−α_i` where
    /// `flips[i]` is set. Multiplicities are carried along.
    pub fn with_positive_choice(&self, flips: &[bool]) -> Result<RootSystem> {
        if flips.len() != self.positive.len() {
            return Err(Error::DimensionMismatch {
                expected: self.positive.len(),
                got: flips.len(),
            });
        }
        let mut rs = self.clone();
        for (root, &flip) in rs.positive.iter_mut().zip(flips) {
            if flip {
                *root = root.negated();
            }
        }
        Ok(rs)
    }

    /// Same roots, new per-orbit multiplicities.
    pub fn with_multiplicities(&self, multiplicities: &[Q]) -> Result<RootSystem> {
        let mut rs = self.clone();
        rs.set_multiplicities(multiplicities)?;
        Ok(rs)
    }

    fn set_multiplicities(&mut self, multiplicities: &[Q]) -> Result<()> {
        let expected = self.orbit.iter().max().map_or(0, |m| m + 1);
        if multiplicities.len() != expected {
            return Err(Error::MultiplicityCount {
                family: self.family.to_string(),
                expected,
                got: multiplicities.len(),
            });
        }
        if let Some(neg) = multiplicities.iter().find(|k| k.is_negative()) {
            return Err(Error::NegativeMultiplicity(format_rational(neg)));
        }
        self.multiplicities = multiplicities.to_vec();
        self.k = self
            .orbit
            .iter()
            .map(|&o| to_f64(&self.multiplicities[o]))
            .collect();
        Ok(())
    }

    /// Index `j` and sign `s` with `v ≈ s·α_j`.
    pub fn find_root(&self, v: &[f64]) -> Option<(usize, f64)> {
        const TOL: f64 = 1e-9;
        self.positive.iter().enumerate().find_map(|(j, r)| {
            if r.approx_eq(v, TOL) {
                Some((j, 1.0))
            } else if r.vector.iter().zip(v).all(|(a, b)| (a + b).abs() <= TOL) {
                Some((j, -1.0))
            } else {
                None
            }
        })
    }

    /// Checks `|α|² = 2`, `R ∩ ℝα = {±α}`, closure `σ_α(R) = R`, and that
    /// each positive root appears once.
    pub fn validate(&self) -> Result<()> {
        for r in &self.positive {
            if (r.norm_sq() - 2.0).abs() > 1e-12 {
                return Err(Error::InvariantBreach(format!(
                    "root {:?} has |α|² = {}",
                    r.vector,
                    r.norm_sq()
                )));
            }
        }
        for (i, a) in self.positive.iter().enumerate() {
            for b in &self.positive[i + 1..] {
                let cos = a.dot(&b.vector) / 2.0;
                if (cos.abs() - 1.0).abs() < 1e-12 {
                    return Err(Error::InvariantBreach(
                        "two positive roots are proportional".into(),
                    ));
                }
            }
            for b in &self.positive {
                if self.find_root(&a.reflect(&b.vector)).is_none() {
                    return Err(Error::InvariantBreach(format!(
                        "σ_α(R) ≠ R for α = {:?}",
                        a.vector
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> RootSystemDoc {
        RootSystemDoc {
            family: self.family.letter().to_string(),
            rank: self.family.parameter(),
            dimension: Some(self.dimension),
            multiplicities: self.multiplicities.iter().map(format_rational).collect(),
            roots: self.positive.iter().map(|r| r.vector.clone()).collect(),
        }
    }

    pub fn from_doc(doc: &RootSystemDoc) -> Result<RootSystem> {
        let family = RootFamily::parse(&doc.family, doc.rank)?;
        let ks = doc
            .multiplicities
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()?;
        let mut rs = build_root_system(family, &ks)?;
        if let Some(dim) = doc.dimension {
            rs = rs.embedded(dim)?;
        }
        if !doc.roots.is_empty() {
            let matches = doc.roots.len() == rs.positive.len()
                && doc.roots.iter().all(|v| rs.find_root(v).is_some());
            if !matches {
                return Err(Error::InvalidConfig(
                    "listed roots do not match the family".into(),
                ));
            }
        }
        Ok(rs)
    }
}

/// JSON form `{family, rank, multiplicities, roots[]}`. Multiplicities are
/// exact rationals written as strings (`"1/2"`); `roots` lists the positive
/// subsystem with `|α|² = 2` and is checked on load when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSystemDoc {
    pub family: String,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub multiplicities: Vec<String>,
    #[serde(default)]
    pub roots: Vec<Vec<f64>>,
}

fn unit(n: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

fn positive_roots(family: RootFamily) -> Result<Vec<Root>> {
    let bad_rank = |rank| Error::InvalidRank {
        family: family.letter().to_string(),
        rank,
    };
    let roots = match family {
        RootFamily::A(n) => {
            if n == 0 {
                return Err(bad_rank(n));
            }
            let dim = n + 1;
            let mut out = Vec::new();
            for i in 0..dim {
                for j in i + 1..dim {
                    let mut v = unit(dim, i);
                    v[j] = -Q::one();
                    out.push(Root::from_direction(v));
                }
            }
            out
        }
        RootFamily::B(n) => {
            if n == 0 {
                return Err(bad_rank(n));
            }
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let mut minus = unit(n, i);
                    minus[j] = -Q::one();
                    out.push(Root::from_direction(minus));
                    let mut plus = unit(n, i);
                    plus[j] = Q::one();
                    out.push(Root::from_direction(plus));
                }
            }
            out.extend((0..n).map(|i| Root::from_direction(unit(n, i))));
            out
        }
        RootFamily::Z2(n) => {
            if n == 0 {
                return Err(bad_rank(n));
            }
            (0..n).map(|i| Root::from_direction(unit(n, i))).collect()
        }
        RootFamily::I2(m) => {
            if m == 0 {
                return Err(bad_rank(m));
            }
            // Mirror normals at angles πj/m; rational exactly when m ∈ {1, 2, 4}.
            let exact: Option<Vec<(i64, i64)>> = match m {
                1 => Some(vec![(1, 0)]),
                2 => Some(vec![(1, 0), (0, 1)]),
                4 => Some(vec![(1, 0), (1, 1), (0, 1), (-1, 1)]),
                _ => None,
            };
            match exact {
                Some(dirs) => dirs
                    .into_iter()
                    .map(|(a, b)| Root::from_direction(vec![q(a), q(b)]))
                    .collect(),
                None => (0..m)
                    .map(|j| {
                        let theta = std::f64::consts::PI * j as f64 / m as f64;
                        Root::from_f64(&[theta.cos(), theta.sin()])
                    })
                    .collect(),
            }
        }
    };
    Ok(roots)
}

fn orbits_of(positive: &[Root]) -> Result<Vec<usize>> {
    let n = positive.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    let probe = RootSystem {
        family: RootFamily::Z2(1),
        dimension: positive.first().map_or(0, Root::dim),
        positive: positive.to_vec(),
        orbit: vec![0; n],
        multiplicities: vec![Q::zero()],
        k: vec![0.0; n],
    };
    for a in positive {
        for (i, b) in positive.iter().enumerate() {
            let image = a.reflect(&b.vector);
            let (j, _) = probe.find_root(&image).ok_or_else(|| {
                Error::InvariantBreach(format!("σ_α(R) ≠ R for α = {:?}", a.vector))
            })?;
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut labels: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let r = find(&mut parent, i);
        let next = labels.len();
        out.push(*labels.entry(r).or_insert(next));
    }
    Ok(out)
}

/// Builds a root system of the given family with one multiplicity per
/// conjugacy orbit of roots.
///
/// Orbits are numbered by the first positive root they contain. The positive
/// lists are: `A(n)`: `e_i − e_j (i<j)` in `ℝ^{n+1}`; `B(n)`: the long roots
/// `e_i ∓ e_j` followed by the short roots `e_i`; `Z2^n`: `e_i`, one orbit
/// each; `I2(m)`: mirror normals at angles `πj/m`.
pub fn build_root_system(family: RootFamily, multiplicities: &[Q]) -> Result<RootSystem> {
    let positive = positive_roots(family)?;
    let orbit = orbits_of(&positive)?;
    let mut rs = RootSystem {
        family,
        dimension: family.natural_dimension(),
        k: vec![0.0; positive.len()],
        positive,
        orbit,
        multiplicities: Vec::new(),
    };
    rs.set_multiplicities(multiplicities)?;
    Ok(rs)
}

/// Number of multiplicity orbits a family carries.
pub fn orbit_count(family: RootFamily) -> Result<usize> {
    let positive = positive_roots(family)?;
    Ok(orbits_of(&positive)?.into_iter().max().map_or(0, |m| m + 1))
}

/// `σ_α x` for a single root.
pub fn reflect(root: &Root, x: &[f64]) -> Vec<f64> {
    root.reflect(x)
}

/// Finite orthogonal group generated by the reflections of a root system.
#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    elements: Vec<DMatrix<f64>>,
    generators: Vec<usize>,
}

fn matrix_key(m: &DMatrix<f64>) -> Vec<i64> {
    m.iter().map(|v| (v * 1e6).round() as i64).collect()
}

impl ReflectionGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    /// Indices (into `elements`) of the generating reflections `σ_α`, `α ∈ R+`.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn apply(&self, element: usize, x: &[f64]) -> Vec<f64> {
        let g = &self.elements[element];
        (0..g.nrows())
            .map(|i| (0..g.ncols()).map(|j| g[(i, j)] * x[j]).sum())
            .collect()
    }

    fn index_of(&self, m: &DMatrix<f64>) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| (e - m).amax() < 1e-9)
    }

    /// Closure under products and inverses, and presence of the identity.
    pub fn is_closed(&self) -> bool {
        let n = self.elements.first().map_or(0, |e| e.nrows());
        if self.index_of(&DMatrix::identity(n, n)).is_none() {
            return false;
        }
        self.elements.iter().all(|g| {
            self.index_of(&g.transpose()).is_some()
                && self.elements.iter().all(|h| self.index_of(&(g * h)).is_some())
        })
    }

    /// Every element permutes the root set.
    pub fn preserves_roots(&self, rs: &RootSystem) -> bool {
        (0..self.order()).all(|g| {
            rs.positive_roots()
                .iter()
                .all(|r| rs.find_root(&self.apply(g, r.vector())).is_some())
        })
    }

    /// `k(α) = k(gα)` for every element and root.
    pub fn multiplicity_invariant(&self, rs: &RootSystem) -> bool {
        (0..self.order()).all(|g| {
            rs.positive_roots().iter().enumerate().all(|(i, r)| {
                rs.find_root(&self.apply(g, r.vector()))
                    .is_some_and(|(j, _)| rs.multiplicity(i) == rs.multiplicity(j))
            })
        })
    }

    pub fn generator_determinants(&self) -> Vec<f64> {
        self.generators
            .iter()
            .map(|&g| self.elements[g].determinant())
            .collect()
    }
}

/// Breadth-first closure of the reflections `σ_α`, deduplicated by a rounded
/// matrix key. Fails once more than `max_order` elements appear.
pub fn generate_group(rs: &RootSystem, max_order: usize) -> Result<ReflectionGroup> {
    let n = rs.dimension();
    let gens: Vec<DMatrix<f64>> = rs
        .positive_roots()
        .iter()
        .map(Root::reflection_matrix)
        .collect();
    let mut elements = vec![DMatrix::<f64>::identity(n, n)];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(matrix_key(&elements[0]), 0);
    let mut generators = Vec::with_capacity(gens.len());
    for g in &gens {
        let key = matrix_key(g);
        let idx = match seen.get(&key) {
            Some(&i) => i,
            None => {
                elements.push(g.clone());
                seen.insert(key, elements.len() - 1);
                elements.len() - 1
            }
        };
        generators.push(idx);
    }
    let mut queue: VecDeque<usize> = (0..elements.len()).collect();
    while let Some(i) = queue.pop_front() {
        for g in &gens {
            let product = g * &elements[i];
            let key = matrix_key(&product);
            if seen.contains_key(&key) {
                continue;
            }
            if elements.len() >= max_order {
                return Err(Error::GroupTooLarge { max_order });
            }
            elements.push(product);
            seen.insert(key, elements.len() - 1);
            queue.push_back(elements.len() - 1);
        }
    }
    Ok(ReflectionGroup {
        elements,
        generators,
    })
}

/// `det(I − ααᵀ)` in floating point.
pub fn reflection_jacobian(root: &Root) -> f64 {
    let n = root.dim();
    let a = root.vector();
    DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - a[i] * a[j]
    })
    .determinant()
}

/// The same determinant computed exactly from the rational direction.
pub fn reflection_jacobian_exact(root: &Root) -> Option<Q> {
    root.reflection_matrix_exact().map(|m| m.determinant())
}

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `F(x) = h₁(x)·x + h₂(x)·∇δ(x)` with `G`-invariant `h₁`, `h₂`.
#[derive(Clone)]
pub struct SignFlipField {
    pub h1: ScalarField,
    pub h2: ScalarField,
    pub grad_delta: VectorField,
}

impl SignFlipField {
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = ((self.h1)(x), (self.h2)(x));
        let g = (self.grad_delta)(x);
        x.iter().zip(&g).map(|(xi, gi)| a * xi + b * gi).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignFlipReport {
    pub holds: bool,
    /// Largest `|⟨α,F(σ_αx)⟩ + ⟨α,F(x)⟩|` seen, relative to `max(1, |⟨α,F(x)⟩|)`.
    pub worst_violation: f64,
    pub worst_root: Option<usize>,
    pub worst_sample: Option<usize>,
    /// Largest change of `h₁`, `h₂` under a group element (0 for raw fields).
    pub invariance_violation: f64,
}

const SIGN_FLIP_TOL: f64 = 1e-10;

/// Checks `⟨α,F(σ_αx)⟩ = −⟨α,F(x)⟩` for every positive root at every sample.
pub fn check_sign_flip(
    rs: &RootSystem,
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    samples: &[Vec<f64>],
) -> SignFlipReport {
    let mut report = SignFlipReport {
        holds: true,
        worst_violation: 0.0,
        worst_root: None,
        worst_sample: None,
        invariance_violation: 0.0,
    };
    for (s, x) in samples.iter().enumerate() {
        let fx = field(x);
        for (i, root) in rs.positive_roots().iter().enumerate() {
            let lhs = root.dot(&field(&root.reflect(x)));
            let rhs = root.dot(&fx);
            let violation = (lhs + rhs).abs() / rhs.abs().max(1.0);
            if violation > report.worst_violation {
                report.worst_violation = violation;
                report.worst_root = Some(i);
                report.worst_sample = Some(s);
            }
        }
    }
    report.holds = report.worst_violation <= SIGN_FLIP_TOL;
    report
}

/// [`check_sign_flip`] for a structured field, additionally spot-checking the
/// `G`-invariance of `h₁` and `h₂` at the samples.
pub fn sign_flip_field_check(
    rs: &RootSystem,
    group: &ReflectionGroup,
    field: &SignFlipField,
    samples: &[Vec<f64>],
) -> SignFlipReport {
    let mut report = check_sign_flip(rs, &|x| field.evaluate(x), samples);
    let mut worst: f64 = 0.0;
    for x in samples {
        let (a, b) = ((field.h1)(x), (field.h2)(x));
        for g in 0..group.order() {
            let gx = group.apply(g, x);
            worst = worst
                .max(((field.h1)(&gx) - a).abs() / a.abs().max(1.0))
                .max(((field.h2)(&gx) - b).abs() / b.abs().max(1.0));
        }
    }
    report.invariance_violation = worst;
    report.holds &= worst <= SIGN_FLIP_TOL;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;

    fn rs(family: RootFamily, ks: &[Q]) -> RootSystem {
        build_root_system(family, ks).unwrap()
    }

    #[test]
    fn a2_has_three_positive_roots() {
        let a2 = rs(RootFamily::A(2), &[q(1)]);
        assert_eq!(a2.dimension(), 3);
        assert_eq!(a2.positive_roots().len(), 3);
        for r in a2.positive_roots() {
            let v = r.vector();
            let nonzero: Vec<f64> = v.iter().copied().filter(|c| *c != 0.0).collect();
            assert_eq!(nonzero.len(), 2);
            assert_eq!(nonzero, vec![1.0, -1.0]);
        }
        a2.validate().unwrap();
    }

    #[test]
    fn rank_one_root() {
        let z = rs(RootFamily::Z2(1), &[qf(1, 2)]);
        assert_eq!(z.positive_roots().len(), 1);
        assert!((z.positive_roots()[0].vector()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn i2_4_has_order_eight() {
        let i2 = rs(RootFamily::I2(4), &[q(1), q(2)]);
        assert_eq!(i2.positive_roots().len(), 4);
        assert_eq!(i2.orbit_count(), 2);
        assert_eq!(generate_group(&i2, 100).unwrap().order(), 8);
    }

    #[test]
    fn orbit_counts() {
        assert_eq!(orbit_count(RootFamily::A(3)).unwrap(), 1);
        assert_eq!(orbit_count(RootFamily::B(2)).unwrap(), 2);
        assert_eq!(orbit_count(RootFamily::B(1)).unwrap(), 1);
        assert_eq!(orbit_count(RootFamily::Z2(3)).unwrap(), 3);
        assert_eq!(orbit_count(RootFamily::I2(5)).unwrap(), 1);
        assert_eq!(orbit_count(RootFamily::I2(6)).unwrap(), 2);
    }

    #[test]
    fn multiplicity_errors() {
        assert!(matches!(
            build_root_system(RootFamily::B(2), &[q(1)]),
            Err(Error::MultiplicityCount { expected: 2, .. })
        ));
        assert!(matches!(
            build_root_system(RootFamily::A(2), &[q(-1)]),
            Err(Error::NegativeMultiplicity(_))
        ));
        assert!(matches!(
            RootFamily::parse("E", 8),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn reflect_examples() {
        let z = rs(RootFamily::Z2(2), &[q(1), q(1)]);
        assert_eq!(z.reflect(0, &[1.0, 2.0]), vec![-1.0, 2.0]);
        assert_eq!(z.reflect(0, &[0.0, 3.0]), vec![0.0, 3.0]);
        let a2 = rs(RootFamily::A(2), &[q(1)]);
        let y = a2.reflect(0, &[1.0, 2.0, 3.0]);
        for (a, b) in y.iter().zip([2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn group_orders() {
        let cases = [
            (RootFamily::A(2), vec![q(1)], 6),
            (RootFamily::A(3), vec![q(1)], 24),
            (RootFamily::B(2), vec![q(1), q(1)], 8),
            (RootFamily::Z2(2), vec![q(1), q(1)], 4),
            (RootFamily::Z2(3), vec![q(1), q(1), q(1)], 8),
            (RootFamily::Z2(1), vec![q(1)], 2),
            (RootFamily::I2(5), vec![q(1)], 10),
        ];
        for (family, ks, order) in cases {
            let system = rs(family, &ks);
            let g = generate_group(&system, 1000).unwrap();
            assert_eq!(g.order(), order, "{family}");
            assert!(g.is_closed());
            assert!(g.preserves_roots(&system));
            assert!(g.multiplicity_invariant(&system));
            assert!(g.generator_determinants().iter().all(|d| (d + 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn group_too_large() {
        let a3 = rs(RootFamily::A(3), &[q(1)]);
        assert!(matches!(
            generate_group(&a3, 10),
            Err(Error::GroupTooLarge { max_order: 10 })
        ));
    }

    #[test]
    fn weight_examples() {
        let zero = rs(RootFamily::A(2), &[q(0)]);
        assert_eq!(zero.weight(&[0.3, 0.3, 1.0]), 1.0);
        let z = rs(RootFamily::Z2(1), &[qf(1, 2)]);
        assert!((z.weight(&[3.0]) - 3.0 * 2f64.sqrt()).abs() < 1e-14);
        let b2 = rs(RootFamily::B(2), &[qf(1, 3), qf(3, 4)]);
        let x = [0.4, -1.3];
        let two_gamma = 2.0 * b2.gamma_f64();
        let scaled = b2.weight(&[0.8, -2.6]);
        assert!((scaled / b2.weight(&x) - 2f64.powf(two_gamma)).abs() < 1e-12);
        assert_eq!(b2.summary().weight_degree, q(2) * b2.gamma());
    }

    #[test]
    fn rho_examples() {
        let z = rs(RootFamily::Z2(1), &[qf(3, 10)]);
        let r = z.rho(&[2.0]).unwrap();
        assert!((r[0] - 2.0 * 0.3 / 2.0).abs() < 1e-15);
        let zero = rs(RootFamily::A(2), &[q(0)]);
        assert_eq!(zero.rho(&[1.0, 1.0, 2.0]).unwrap(), vec![0.0; 3]);
        let a2 = rs(RootFamily::A(2), &[q(1)]);
        assert!(matches!(
            a2.rho(&[1.0, 1.0, 2.0]),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn jacobian_is_minus_one() {
        let z = rs(RootFamily::Z2(1), &[q(1)]);
        assert_eq!(reflection_jacobian_exact(&z.positive_roots()[0]), Some(q(-1)));
        let a2 = rs(RootFamily::A(2), &[q(1)]);
        let r = &a2.positive_roots()[0];
        assert_eq!(reflection_jacobian_exact(r), Some(q(-1)));
        assert!((reflection_jacobian(r) + 1.0).abs() < 1e-14);
        let i5 = rs(RootFamily::I2(5), &[q(1)]);
        for r in i5.positive_roots() {
            assert!(reflection_jacobian_exact(r).is_none());
            assert!((reflection_jacobian(r) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_flip_examples() {
        let a2 = rs(RootFamily::A(2), &[q(1)]);
        let group = generate_group(&a2, 100).unwrap();
        let samples = vec![vec![0.3, -1.1, 2.0], vec![1.5, 0.2, -0.7]];
        assert!(check_sign_flip(&a2, &|x| x.to_vec(), &samples).holds);
        let constant = check_sign_flip(&a2, &|_| vec![1.0, 0.0, 0.0], &samples);
        assert!(!constant.holds);
        assert!(constant.worst_root.is_some());

        let field = SignFlipField {
            h1: Arc::new(|x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt()),
            h2: Arc::new(|_: &[f64]| 0.0),
            grad_delta: Arc::new(|x: &[f64]| x.to_vec()),
        };
        assert!(sign_flip_field_check(&a2, &group, &field, &samples).holds);
        let broken = SignFlipField {
            h1: Arc::new(|x: &[f64]| x[0]),
            ..field
        };
        assert!(!sign_flip_field_check(&a2, &group, &broken, &samples).holds);
    }

    #[test]
    fn embedding_and_doc_roundtrip() {
        let a2 = rs(RootFamily::A(2), &[qf(1, 2)]);
        let e = a2.embedded(4).unwrap();
        assert_eq!(e.dimension(), 4);
        assert!(e.positive_roots().iter().all(|r| r.vector()[3] == 0.0));
        let doc = e.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back = RootSystem::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.dimension(), 4);
        assert_eq!(back.gamma(), e.gamma());
    }
}
