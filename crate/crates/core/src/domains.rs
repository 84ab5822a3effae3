//! Distance functions of the supported G-invariant domains.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{complement_basis, MeasureCloud, RadialGrid, SphericalRule};
use crate::reflection::{ReflectionGroup, RootFamily, RootSystem};

/// Roots count as orthogonal to an axis below this inner product.
const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    PuncturedSpace,
    ExteriorBall { radius: f64 },
    Halfspace { axis: usize },
    WedgeSn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub kind: DomainKind,
    pub dimension: usize,
}

impl DomainSpec {
    pub fn punctured(dimension: usize) -> Self {
        DomainSpec {
            kind: DomainKind::PuncturedSpace,
            dimension,
        }
    }

    pub fn exterior_ball(dimension: usize, radius: f64) -> Self {
        DomainSpec {
            kind: DomainKind::ExteriorBall { radius },
            dimension,
        }
    }

    /// Halfspace `{x_axis > 0}`.
    pub fn halfspace(dimension: usize, axis: usize) -> Self {
        DomainSpec {
            kind: DomainKind::Halfspace { axis },
            dimension,
        }
    }

    pub fn wedge(dimension: usize) -> Self {
        DomainSpec {
            kind: DomainKind::WedgeSn,
            dimension,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DomainKind::PuncturedSpace => "punctured_space",
            DomainKind::ExteriorBall { .. } => "exterior_ball",
            DomainKind::Halfspace { .. } => "halfspace",
            DomainKind::WedgeSn => "wedge_sn",
        }
    }

    /// Unit normal of the flat boundary, if any.
    pub fn normal(&self) -> Option<Vec<f64>> {
        let n = self.dimension;
        match self.kind {
            DomainKind::Halfspace { axis } => {
                let mut e = vec![0.0; n];
                e[axis] = 1.0;
                Some(e)
            }
            DomainKind::WedgeSn => Some(vec![1.0 / (n as f64).sqrt(); n]),
            _ => None,
        }
    }

    pub fn validate(&self, rs: &RootSystem) -> Result<()> {
        let n = self.dimension;
        if rs.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rs.dimension(),
            });
        }
        match self.kind {
            DomainKind::PuncturedSpace => Ok(()),
            DomainKind::ExteriorBall { radius } => {
                if radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::IncompatibleDomain(format!(
                        "exterior ball radius must be positive, got {radius}"
                    )))
                }
            }
            DomainKind::Halfspace { axis } => {
                if axis >= n {
                    return Err(Error::IncompatibleDomain(format!(
                        "axis {axis} out of range for dimension {n}"
                    )));
                }
                match rs
                    .positive_roots()
                    .iter()
                    .find(|r| r.vector()[axis].abs() > ORTHOGONALITY_TOL)
                {
                    Some(r) => Err(Error::IncompatibleDomain(format!(
                        "root {:?} is not orthogonal to axis {axis}",
                        r.vector()
                    ))),
                    None => Ok(()),
                }
            }
            DomainKind::WedgeSn => {
                if rs.family() == RootFamily::A(n - 1) && n >= 2 {
                    Ok(())
                } else {
                    Err(Error::IncompatibleDomain(format!(
                        "the symmetric-group wedge needs A({}) in dimension {n}",
                        n.saturating_sub(1)
                    )))
                }
            }
        }
    }

    /// Whether `x` lies in the open domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        let r = norm(x);
        match self.kind {
            DomainKind::PuncturedSpace => r > 0.0,
            DomainKind::ExteriorBall { radius } => r > radius,
            DomainKind::Halfspace { axis } => x[axis] > 0.0,
            DomainKind::WedgeSn => x.iter().sum::<f64>() > 0.0,
        }
    }

    /// Deterministic interior samples with `|x| ≤ radius` (beyond the ball
    /// for the exterior domain).
    pub fn samples(&self, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x: Vec<f64> = (0..self.dimension)
                .map(|_| rng.gen_range(-radius..radius))
                .collect();
            let x = match self.kind {
                DomainKind::ExteriorBall { radius: r0 } => {
                    let r = norm(&x);
                    if r == 0.0 {
                        continue;
                    }
                    x.iter().map(|c| c * (1.0 + r0 / r)).collect()
                }
                _ => x,
            };
            if self.contains(&x) {
                out.push(x);
            }
        }
        out
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VecField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form distance function and its derivatives.
#[derive(Clone)]
pub struct DistanceData {
    pub spec: DomainSpec,
    pub delta: Field,
    pub grad_delta: VecField,
    pub laplacian_delta: Field,
    pub dunkl_laplacian_delta: Field,
}

impl std::fmt::Debug for DistanceData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DistanceData({:?})", self.spec)
    }
}

pub fn distance_data(spec: &DomainSpec, rs: &RootSystem) -> Result<DistanceData> {
    spec.validate(rs)?;
    let n = spec.dimension as f64;
    let nbar = rs.nbar();
    let radial = |shift: f64| -> (Field, VecField, Field, Field) {
        (
            Arc::new(move |x: &[f64]| norm(x) - shift),
            Arc::new(|x: &[f64]| {
                let r = norm(x);
                x.iter().map(|c| c / r).collect()
            }),
            Arc::new(move |x: &[f64]| (n - 1.0) / norm(x)),
            Arc::new(move |x: &[f64]| (nbar - 1.0) / norm(x)),
        )
    };
    let (delta, grad_delta, laplacian_delta, dunkl_laplacian_delta) = match spec.kind {
        DomainKind::PuncturedSpace => radial(0.0),
        DomainKind::ExteriorBall { radius } => radial(radius),
        DomainKind::Halfspace { .. } | DomainKind::WedgeSn => {
            // Affine δ: both Laplacians vanish since ∇δ is orthogonal to the
            // active roots and δ is invariant.
            let e = spec.normal().expect("flat boundary");
            let e2 = e.clone();
            let zero: Field = Arc::new(|_: &[f64]| 0.0);
            (
                Arc::new(move |x: &[f64]| dot(x, &e)) as Field,
                Arc::new(move |_: &[f64]| e2.clone()) as VecField,
                zero.clone(),
                zero,
            )
        }
    };
    Ok(DistanceData {
        spec: spec.clone(),
        delta,
        grad_delta,
        laplacian_delta,
        dunkl_laplacian_delta,
    })
}

impl DistanceData {
    pub fn delta(&self, x: &[f64]) -> f64 {
        (self.delta)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad_delta)(x)
    }

    /// Remainder density `−Δδ + (p/2−1)⟨ρ,∇δ⟩ − (p/2)|⟨ρ,∇δ⟩|`.
    pub fn remainder_bracket(&self, rs: &RootSystem, p: f64, x: &[f64]) -> Result<f64> {
        let pair = rho_pairing_at(self, rs, x)?;
        Ok(-(self.laplacian_delta)(x) + (p / 2.0 - 1.0) * pair - (p / 2.0) * pair.abs())
    }

    /// Measure cloud on the domain. Polar domains use `grid` radially (its
    /// first breakpoint must not enter the removed ball); flat domains use
    /// `line` for `δ` and `grid` with `rule` on the boundary hyperplane.
    pub fn cloud(
        &self,
        rs: &RootSystem,
        line: &RadialGrid,
        grid: &RadialGrid,
        rule: &SphericalRule,
    ) -> Result<MeasureCloud> {
        match self.spec.kind {
            DomainKind::PuncturedSpace => MeasureCloud::polar(rs, grid, rule),
            DomainKind::ExteriorBall { radius } => {
                if grid.r_min() < radius {
                    return Err(Error::InvalidConfig(format!(
                        "radial grid starts at {} inside the removed ball of radius {radius}",
                        grid.r_min()
                    )));
                }
                MeasureCloud::polar(rs, grid, rule)
            }
            DomainKind::Halfspace { .. } | DomainKind::WedgeSn => {
                if line.r_min() < 0.0 {
                    return Err(Error::InvalidConfig("line grid must start at δ = 0".into()));
                }
                let axis = self.spec.normal().expect("flat boundary");
                let basis = complement_basis(&axis);
                MeasureCloud::product(rs, &axis, &basis, line, grid, rule)
            }
        }
    }
}

fn rho_pairing_at(data: &DistanceData, rs: &RootSystem, x: &[f64]) -> Result<f64> {
    Ok(dot(&rs.rho(x)?, &data.grad(x)))
}

/// `⟨ρ(x), ∇δ(x)⟩`.
pub fn rho_pairing(spec: &DomainSpec, rs: &RootSystem, x: &[f64]) -> Result<f64> {
    rho_pairing_at(&distance_data(spec, rs)?, rs, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    /// `max |∇δ(gx) − g∇δ(x)|`.
    pub gradient_error: f64,
    /// `max |δ(gx) − δ(x)|`.
    pub invariance_error: f64,
    /// `max ||∇δ| − 1|`.
    pub unit_error: f64,
    pub samples: usize,
    pub holds: bool,
}

pub const EQUIVARIANCE_TOL: f64 = 1e-12;

/// Checks `∇δ∘g = g∘∇δ`, `δ∘g = δ` and `|∇δ| = 1` over every group element.
pub fn equivariance_check(
    spec: &DomainSpec,
    rs: &RootSystem,
    group: &ReflectionGroup,
    samples: &[Vec<f64>],
) -> Result<EquivarianceReport> {
    let data = distance_data(spec, rs)?;
    let mut gradient_error = 0.0f64;
    let mut invariance_error = 0.0f64;
    let mut unit_error = 0.0f64;
    for x in samples {
        let gx0 = data.grad(x);
        let d0 = data.delta(x);
        unit_error = unit_error.max((norm(&gx0) - 1.0).abs());
        for g in 0..group.order() {
            let y = group.apply(g, x);
            let lhs = data.grad(&y);
            let rhs = group.apply(g, &gx0);
            let diff = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            gradient_error = gradient_error.max(diff);
            invariance_error = invariance_error.max((data.delta(&y) - d0).abs() / d0.abs().max(1.0));
        }
    }
    Ok(EquivarianceReport {
        gradient_error,
        invariance_error,
        unit_error,
        samples: samples.len(),
        holds: gradient_error < EQUIVARIANCE_TOL
            && invariance_error < EQUIVARIANCE_TOL
            && unit_error < EQUIVARIANCE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};
    use crate::reflection::{build_root_system, generate_group};

    fn a2(k: Q) -> RootSystem {
        build_root_system(RootFamily::A(2), &[k]).unwrap()
    }

    use crate::rational::Q;

    #[test]
    fn exterior_ball_fields() {
        let rs = a2(qf(1, 2));
        let d = distance_data(&DomainSpec::exterior_ball(3, 1.0), &rs).unwrap();
        let x = [2.0 / 3.0f64.sqrt(), -2.0 / 3.0f64.sqrt() * 0.5, 0.0];
        let r = norm(&x);
        let x: Vec<f64> = x.iter().map(|c| 2.0 * c / r).collect();
        assert!((d.delta(&x) - 1.0).abs() < 1e-15);
        let g = d.grad(&x);
        for (a, b) in g.iter().zip(&x) {
            assert!((a - b / 2.0).abs() < 1e-15);
        }
        let nbar = rs.nbar();
        assert!(((d.dunkl_laplacian_delta)(&x) - (nbar - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn flat_domains() {
        let rs = a2(q(1)).embedded(4).unwrap();
        let d = distance_data(&DomainSpec::halfspace(4, 3), &rs).unwrap();
        assert_eq!(d.delta(&[0.1, 0.2, 0.3, 5.0]), 5.0);
        assert_eq!(d.grad(&[0.1, 0.2, 0.3, 5.0]), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(distance_data(&DomainSpec::halfspace(4, 0), &rs).is_err());

        let rs = a2(q(1));
        let d = distance_data(&DomainSpec::wedge(3), &rs).unwrap();
        assert!((d.delta(&[1.0, 1.0, 1.0]) - 3.0f64.sqrt()).abs() < 1e-15);
        let z2 = build_root_system(RootFamily::Z2(3), &[q(1), q(1), q(1)]).unwrap();
        assert!(distance_data(&DomainSpec::wedge(3), &z2).is_err());
    }

    #[test]
    fn pairings() {
        let rs = build_root_system(RootFamily::B(2), &[qf(1, 2), q(1)]).unwrap();
        // γ = 2·½ + 2·1 = 3; pairing 2γ/|x|.
        let x = [4.0 * 0.6, 4.0 * 0.8];
        let v = rho_pairing(&DomainSpec::exterior_ball(2, 1.0), &rs, &x).unwrap();
        assert!((v - 2.0 * rs.gamma_f64() / 4.0).abs() < 1e-12);

        let rs = a2(qf(3, 2));
        let v = rho_pairing(&DomainSpec::wedge(3), &rs, &[0.3, 1.1, 2.0]).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn gamma_pairing_example() {
        // Z2^3 with γ = 1.5 at |x| = 4.
        let rs = build_root_system(RootFamily::Z2(3), &[qf(1, 2), qf(1, 2), qf(1, 2)]).unwrap();
        let x = [4.0 / 3.0f64.sqrt(); 3];
        let v = rho_pairing(&DomainSpec::exterior_ball(3, 1.0), &rs, &x).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn equivariance_all_domains() {
        let a2 = a2(q(1));
        let g = generate_group(&a2, 100).unwrap();
        for spec in [
            DomainSpec::exterior_ball(3, 1.0),
            DomainSpec::wedge(3),
            DomainSpec::punctured(3),
        ] {
            let s = spec.samples(200, 3.0, 7);
            let rep = equivariance_check(&spec, &a2, &g, &s).unwrap();
            assert!(rep.holds, "{spec:?} {rep:?}");
        }
        let emb = a2.embedded(4).unwrap();
        let g = generate_group(&emb, 100).unwrap();
        let spec = DomainSpec::halfspace(4, 3);
        let s = spec.samples(200, 3.0, 9);
        assert!(equivariance_check(&spec, &emb, &g, &s).unwrap().holds);
    }

    #[test]
    fn exterior_bracket_is_negative() {
        let rs = a2(qf(1, 3));
        let d = distance_data(&DomainSpec::exterior_ball(3, 1.0), &rs).unwrap();
        for x in DomainSpec::exterior_ball(3, 1.0).samples(50, 2.0, 3) {
            for p in [2.0, 4.5] {
                let b = d.remainder_bracket(&rs, p, &x).unwrap();
                assert!((b + (rs.nbar() - 1.0) / norm(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_value(DomainSpec::exterior_ball(3, 2.0)).unwrap();
        assert_eq!(s["kind"], "exterior_ball");
        assert_eq!(s["radius"], 2.0);
        let h: DomainSpec =
            serde_json::from_str(r#"{"kind":"halfspace","axis":2,"dimension":3}"#).unwrap();
        assert_eq!(h, DomainSpec::halfspace(3, 2));
    }
}
