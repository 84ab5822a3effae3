//! Exact multivariate polynomials over `ℚ` and the symbolic action of the
//! Dunkl operators on them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{q, qf, to_f64, RatMatrix, Q};
use crate::reflection::{Root, RootSystem};

pub type Exponents = Vec<u32>;

/// Polynomial in `nvars` variables with rational coefficients. Zero
/// coefficients are never stored; terms are kept in lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, Q>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Q::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, Q::one())
    }

    pub fn monomial(nvars: usize, exponents: Exponents, c: Q) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    /// `Σ c_i x_i`.
    pub fn linear(coeffs: &[Q]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(unit_exp(n, i), c.clone());
        }
        p
    }

    /// `|x|² = Σ x_i²`.
    pub fn norm_sq(nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 2;
            p.add_term(e, Q::one());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Q)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Q {
        self.terms.get(exponents).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Degree if every term has the same total degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    pub fn homogeneous_part(&self, degree: u32) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == degree)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    fn add_term(&mut self, exponents: Exponents, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponents);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Polynomial {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * q(e[i] as i64));
        }
        out
    }

    pub fn laplacian(&self) -> Polynomial {
        (0..self.nvars).fold(Self::zero(self.nvars), |acc, i| {
            &acc + &self.derivative(i).derivative(i)
        })
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        (0..k).fold(Self::one(self.nvars), |acc, _| &acc * self)
    }

    /// `p(Mx)` for a square rational matrix `M`.
    pub fn substitute_linear(&self, m: &RatMatrix) -> Polynomial {
        assert_eq!(m.rows, self.nvars);
        assert_eq!(m.cols, self.nvars);
        let n = self.nvars;
        let max_pow = self
            .terms
            .keys()
            .flat_map(|e| e.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        // powers[i][k] = (row i of M · x)^k
        let powers: Vec<Vec<Polynomial>> = (0..n)
            .map(|i| {
                let row: Vec<Q> = (0..n).map(|j| m[(i, j)].clone()).collect();
                let lin = Polynomial::linear(&row);
                let mut ps = vec![Polynomial::one(n)];
                for k in 1..=max_pow {
                    let next = &ps[k - 1] * &lin;
                    ps.push(next);
                }
                ps
            })
            .collect();
        let mut out = Self::zero(n);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(n, c.clone());
            for (i, &ei) in e.iter().enumerate() {
                if ei > 0 {
                    t = &t * &powers[i][ei as usize];
                }
            }
            out = &out + &t;
        }
        out
    }

    /// Exact quotient by the linear form `⟨v,x⟩`; a nonzero remainder is an error.
    pub fn divide_linear(&self, v: &[Q]) -> Result<Polynomial> {
        let n = self.nvars;
        let j = (0..n)
            .rev()
            .find(|&i| !v[i].is_zero())
            .ok_or_else(|| Error::InvariantBreach("division by the zero linear form".into()))?;
        let inv = v[j].recip();
        let mut rem = self.clone();
        let mut quot = Self::zero(n);
        loop {
            let pick = rem
                .terms
                .iter()
                .filter(|(e, _)| e[j] > 0)
                .max_by_key(|(e, _)| e[j])
                .map(|(e, c)| (e.clone(), c.clone()));
            let Some((e, c)) = pick else { break };
            let mut base = e.clone();
            base[j] -= 1;
            let coeff = &c * &inv;
            for (i, vi) in v.iter().enumerate() {
                if vi.is_zero() {
                    continue;
                }
                let mut t = base.clone();
                t[i] += 1;
                rem.add_term(t, -(&coeff * vi));
            }
            quot.add_term(base, coeff);
        }
        if !rem.is_zero() {
            return Err(Error::InvariantBreach(format!(
                "division by a linear form left remainder {rem}"
            )));
        }
        Ok(quot)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                to_f64(c)
                    * e.iter()
                        .zip(x)
                        .map(|(&k, xi)| xi.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn evaluate_exact(&self, x: &[Q]) -> Q {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(c.clone(), |acc, (&k, xi)| {
                    acc * num_traits::pow::pow(xi.clone(), k as usize)
                })
            })
            .sum()
    }

    pub fn to_doc(&self) -> Vec<TermDoc> {
        self.terms
            .iter()
            .map(|(e, c)| TermDoc {
                exponents: e.clone(),
                numerator: c.numer().to_string(),
                denominator: c.denom().to_string(),
            })
            .collect()
    }

    pub fn from_doc(nvars: usize, doc: &[TermDoc]) -> Result<Polynomial> {
        let mut p = Self::zero(nvars);
        for t in doc {
            if t.exponents.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: t.exponents.len(),
                });
            }
            let parse = |s: &str| {
                s.parse::<BigInt>()
                    .map_err(|_| Error::ParseRational(s.to_string()))
            };
            let den = parse(&t.denominator)?;
            if den.is_zero() {
                return Err(Error::ParseRational(t.denominator.clone()));
            }
            p.add_term(t.exponents.clone(), Q::new(parse(&t.numerator)?, den));
        }
        Ok(p)
    }
}

fn unit_exp(n: usize, i: usize) -> Exponents {
    let mut e = vec![0; n];
    e[i] = 1;
    e
}

/// One serialized term: `{exponents: [...], numerator, denominator}`. The
/// integers are decimal strings so arbitrary precision survives JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDoc {
    pub exponents: Vec<u32>,
    pub numerator: String,
    pub denominator: String,
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &ei) in e.iter().enumerate() {
                match ei {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, ei)?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[{}]({self})", self.nvars)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Q::one())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// `√radicand · poly`, used where the `√2` root normalisation survives.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPolynomial {
    pub poly: Polynomial,
    pub radicand: Q,
}

impl ScaledPolynomial {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        to_f64(&self.radicand).sqrt() * self.poly.evaluate(x)
    }
}

struct ExactRoot {
    direction: Vec<Q>,
    half_norm_sq: Q,
    reflection: RatMatrix,
    multiplicity: Q,
}

/// Exact root data of a rational root system, prepared once for repeated
/// symbolic Dunkl computations.
pub struct SymbolicDunkl {
    nvars: usize,
    roots: Vec<ExactRoot>,
}

fn exact_root(root: &Root, family: &str) -> Result<(Vec<Q>, Q, RatMatrix)> {
    let direction = root
        .direction()
        .ok_or_else(|| Error::NonRationalRoot(family.to_string()))?
        .to_vec();
    let norm_sq = root.direction_norm_sq().expect("exact direction");
    let reflection = root.reflection_matrix_exact().expect("exact direction");
    Ok((direction, norm_sq, reflection))
}

/// `(p − p∘σ_v)/⟨v,x⟩` for a rational direction `v`.
fn direction_difference(p: &Polynomial, direction: &[Q], reflection: &RatMatrix) -> Result<Polynomial> {
    let diff = p - &p.substitute_linear(reflection);
    if diff.is_zero() {
        return Ok(diff);
    }
    diff.divide_linear(direction)
}

impl SymbolicDunkl {
    pub fn new(rs: &RootSystem) -> Result<Self> {
        let family = rs.family().to_string();
        let roots = rs
            .positive_roots()
            .iter()
            .enumerate()
            .map(|(i, root)| {
                let (direction, norm_sq, reflection) = exact_root(root, &family)?;
                Ok(ExactRoot {
                    direction,
                    half_norm_sq: norm_sq / q(2),
                    reflection,
                    multiplicity: rs.multiplicity(i).clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymbolicDunkl {
            nvars: rs.dimension(),
            roots,
        })
    }

    fn check_vars(&self, p: &Polynomial) -> Result<()> {
        if p.nvars() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: p.nvars(),
            });
        }
        Ok(())
    }

    /// `T_i p = ∂_i p + Σ k_α α_i (p − p∘σ_α)/⟨α,x⟩`.
    pub fn apply(&self, i: usize, p: &Polynomial) -> Result<Polynomial> {
        self.check_vars(p)?;
        let mut out = p.derivative(i);
        for r in &self.roots {
            if r.multiplicity.is_zero() || r.direction[i].is_zero() {
                continue;
            }
            let d = direction_difference(p, &r.direction, &r.reflection)?;
            out = &out + &d.scale(&(&r.multiplicity * &r.direction[i]));
        }
        Ok(out)
    }

    /// `Σ_i T_i² p`.
    pub fn laplacian_squares(&self, p: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        for i in 0..self.nvars {
            let t = self.apply(i, p)?;
            out = &out + &self.apply(i, &t)?;
        }
        Ok(out)
    }

    /// `Δp + 2 Σ k_α [⟨∇p,α⟩/⟨α,x⟩ − (p − p∘σ_α)/⟨α,x⟩²]`.
    pub fn laplacian_formula(&self, p: &Polynomial) -> Result<Polynomial> {
        self.check_vars(p)?;
        let mut out = p.laplacian();
        let grad = p.gradient();
        for r in &self.roots {
            if r.multiplicity.is_zero() {
                continue;
            }
            let directional = grad
                .iter()
                .zip(&r.direction)
                .fold(Polynomial::zero(self.nvars), |acc, (g, v)| &acc + &g.scale(v));
            let d = direction_difference(p, &r.direction, &r.reflection)?;
            let numer = &directional - &d.scale(&r.half_norm_sq);
            if numer.is_zero() {
                continue;
            }
            let term = numer.divide_linear(&r.direction)?;
            out = &out + &term.scale(&(q(2) * &r.multiplicity));
        }
        Ok(out)
    }

    pub fn is_invariant(&self, p: &Polynomial) -> bool {
        self.roots
            .iter()
            .all(|r| p.substitute_linear(&r.reflection) == *p)
    }

    /// `Σ k_α α_i (u − u∘σ)(v − v∘σ)/⟨α,x⟩`, the correction in the general
    /// product rule.
    fn leibniz_correction(&self, i: usize, u: &Polynomial, v: &Polynomial) -> Result<Polynomial> {
        let mut out = Polynomial::zero(self.nvars);
        for r in &self.roots {
            if r.multiplicity.is_zero() || r.direction[i].is_zero() {
                continue;
            }
            let du = direction_difference(u, &r.direction, &r.reflection)?;
            let dv = direction_difference(v, &r.direction, &r.reflection)?;
            let lin = Polynomial::linear(&r.direction);
            let term = &(&lin * &du) * &dv;
            out = &out + &term.scale(&(&r.multiplicity * &r.direction[i]));
        }
        Ok(out)
    }
}

/// `(p − p∘σ_α)/⟨α,x⟩` with the actual root `α` (`|α|² = 2`): the result is
/// `√(|v|²/2)` times a rational polynomial, where `v` is the stored direction.
pub fn divided_difference(p: &Polynomial, root: &Root) -> Result<ScaledPolynomial> {
    let (direction, norm_sq, reflection) = exact_root(root, "root")?;
    Ok(ScaledPolynomial {
        poly: direction_difference(p, &direction, &reflection)?,
        radicand: norm_sq / q(2),
    })
}

pub fn dunkl_apply(rs: &RootSystem, i: usize, p: &Polynomial) -> Result<Polynomial> {
    if i >= rs.dimension() {
        return Err(Error::DimensionMismatch {
            expected: rs.dimension(),
            got: i + 1,
        });
    }
    SymbolicDunkl::new(rs)?.apply(i, p)
}

/// `Δ_k p`, computed both as `Σ T_i² p` and by the gradient/difference
/// formula; disagreement is reported as an invariant breach.
pub fn dunkl_laplacian_sym(rs: &RootSystem, p: &Polynomial) -> Result<Polynomial> {
    let ctx = SymbolicDunkl::new(rs)?;
    let squares = ctx.laplacian_squares(p)?;
    let formula = ctx.laplacian_formula(p)?;
    if squares != formula {
        return Err(Error::InvariantBreach(format!(
            "Dunkl Laplacian mismatch: Σ T_i² p = {squares}, formula = {formula}"
        )));
    }
    Ok(formula)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeibnizResidual {
    /// `T_i(uv) − [v T_i u + u T_i v − correction]`; always zero.
    pub general: Polynomial,
    /// `T_i(uv) − [v T_i u + u T_i v]`; zero when `u` or `v` is `G`-invariant.
    pub short: Polynomial,
    pub short_rule_applies: bool,
}

impl LeibnizResidual {
    pub fn holds(&self) -> bool {
        self.general.is_zero() && (!self.short_rule_applies || self.short.is_zero())
    }
}

pub fn leibniz_check(
    rs: &RootSystem,
    u: &Polynomial,
    v: &Polynomial,
    i: usize,
) -> Result<LeibnizResidual> {
    let ctx = SymbolicDunkl::new(rs)?;
    let lhs = ctx.apply(i, &(u * v))?;
    let plain = &(v * &ctx.apply(i, u)?) + &(u * &ctx.apply(i, v)?);
    let correction = ctx.leibniz_correction(i, u, v)?;
    let short = &lhs - &plain;
    let general = &short + &correction;
    Ok(LeibnizResidual {
        general,
        short,
        short_rule_applies: ctx.is_invariant(u) || ctx.is_invariant(v),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Commutator {
    pub commute: bool,
    /// `T_i T_j p − T_j T_i p`.
    pub difference: Polynomial,
}

pub fn commutativity_check(rs: &RootSystem, i: usize, j: usize, p: &Polynomial) -> Result<Commutator> {
    let ctx = SymbolicDunkl::new(rs)?;
    let ij = ctx.apply(i, &ctx.apply(j, p)?)?;
    let ji = ctx.apply(j, &ctx.apply(i, p)?)?;
    let difference = &ij - &ji;
    Ok(Commutator {
        commute: difference.is_zero(),
        difference,
    })
}

/// Compares `T_i p` for the stored positive subsystem and the one obtained by
/// negating the roots selected in `flips`.
pub fn positive_subsystem_independence(
    rs: &RootSystem,
    flips: &[bool],
    p: &Polynomial,
    i: usize,
) -> Result<bool> {
    let alternate = rs.with_positive_choice(flips)?;
    Ok(dunkl_apply(rs, i, p)? == dunkl_apply(&alternate, i, p)?)
}

/// All monomial exponent vectors of total degree `degree` in `nvars` variables,
/// in lexicographic order.
pub fn monomials(nvars: usize, degree: u32) -> Vec<Exponents> {
    fn rec(nvars: usize, left: u32, prefix: &mut Exponents, out: &mut Vec<Exponents>) {
        if prefix.len() == nvars - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(nvars, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        return out;
    }
    rec(nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// Random polynomial with small rational coefficients and total degree at most
/// `max_degree`.
pub fn random_polynomial<R: Rng>(rng: &mut R, nvars: usize, max_degree: u32, terms: usize) -> Polynomial {
    let mut p = Polynomial::zero(nvars);
    for _ in 0..terms {
        let degree = rng.gen_range(0..=max_degree);
        let mut e = vec![0u32; nvars];
        for _ in 0..degree {
            e[rng.gen_range(0..nvars)] += 1;
        }
        let num = rng.gen_range(-9i64..=9);
        let den = rng.gen_range(1i64..=5);
        p.add_term(e, qf(num, den));
    }
    p
}

/// Random homogeneous polynomial of the given degree.
pub fn random_homogeneous<R: Rng>(rng: &mut R, nvars: usize, degree: u32, terms: usize) -> Polynomial {
    let mut p = Polynomial::zero(nvars);
    let basis = monomials(nvars, degree);
    for _ in 0..terms {
        let e = basis[rng.gen_range(0..basis.len())].clone();
        p.add_term(e, qf(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=5)));
    }
    p
}
