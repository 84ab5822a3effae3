//! Sphere rules adapted to the weight `ω_k`.
//!
//! `ω_k` is only Hölder continuous across the reflection hyperplanes, so
//! plain product rules converge slowly for fractional multiplicities. Here the
//! sphere is split along the orthogonal decomposition into irreducible root
//! components and the fixed subspace; each piece is cut along its
//! hyperplanes and integrated with Gauss–Jacobi rules whose endpoint weights
//! absorb the singular factors. The resulting weights are divided by those
//! model factors, so callers still multiply by `ω_k(ξ)` as with any rule.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{gauss_jacobi, sphere_rule_reduced, Adaptation, SphericalRule, MAX_FULL_SPHERE_DIM};
use crate::reflection::RootSystem;

const GEOMETRY_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Extends `basis` by Gram–Schmidt with the vectors in `candidates`.
fn extend_orthonormal(basis: &mut Vec<Vec<f64>>, candidates: impl IntoIterator<Item = Vec<f64>>) {
    for v in candidates {
        let mut w = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = norm(&w);
        if n > 1e-8 {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
}

/// A rule on the unit sphere of a subspace, in that subspace's coordinates.
/// `weights` exclude the component's `ω_k` and `gamma` is its total
/// multiplicity.
struct Piece {
    dim: usize,
    gamma: f64,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

/// Roots of one component in its own orthonormal coordinates.
struct Component {
    basis: Vec<Vec<f64>>,
    roots: Vec<(Vec<f64>, f64)>,
}

fn components(rs: &RootSystem) -> Vec<Component> {
    let roots: Vec<(Vec<f64>, f64)> = rs.active_roots().map(|(r, k)| (r.vector().to_vec(), k)).collect();
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while l[i] != i {
            l[i] = l[l[i]];
            i = l[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if dot(&roots[i].0, &roots[j].0).abs() > GEOMETRY_TOL {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|(k, _)| *k == r) {
            Some((_, v)) => v.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, idx)| {
            let mut basis = Vec::new();
            extend_orthonormal(&mut basis, idx.iter().map(|&i| roots[i].0.clone()));
            let local = idx
                .iter()
                .map(|&i| (basis.iter().map(|b| dot(b, &roots[i].0)).collect(), roots[i].1))
                .collect();
            Component { basis, roots: local }
        })
        .collect()
}

fn rank_one(c: &Component) -> Piece {
    Piece {
        dim: 1,
        gamma: c.roots.iter().map(|r| r.1).sum(),
        nodes: vec![vec![1.0], vec![-1.0]],
        weights: vec![1.0, 1.0],
    }
}

/// Circle cut at every hyperplane; Jacobi weights at both ends of each arc.
fn rank_two(c: &Component, n: usize) -> Result<Piece> {
    let mut cuts: Vec<(f64, f64)> = Vec::new();
    for (a, k) in &c.roots {
        let base = a[1].atan2(a[0]) + PI / 2.0;
        for phi in [base, base + PI] {
            let phi = phi.rem_euclid(2.0 * PI);
            match cuts.iter_mut().find(|(p, _)| {
                let d = (p - phi).abs();
                d < 1e-9 || (2.0 * PI - d) < 1e-9
            }) {
                Some(cut) => cut.1 += 2.0 * k,
                None => cuts.push((phi, 2.0 * k)),
            }
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..cuts.len() {
        let (lo, ea) = cuts[i];
        let (mut hi, eb) = cuts[(i + 1) % cuts.len()];
        if hi <= lo {
            hi += 2.0 * PI;
        }
        let half = (hi - lo) / 2.0;
        let g = gauss_jacobi(n, eb, ea)?;
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            let phi = lo + half * (1.0 + x);
            let model = (1.0 + x).powf(ea) * (1.0 - x).powf(eb);
            nodes.push(vec![phi.cos(), phi.sin()]);
            weights.push(w * half / model);
        }
    }
    Ok(Piece {
        dim: 2,
        gamma: c.roots.iter().map(|r| r.1).sum(),
        nodes,
        weights,
    })
}

fn reflection(a: &[f64]) -> [[f64; 3]; 3] {
    let s = dot(a, a);
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = f64::from(u8::from(i == j)) - 2.0 * a[i] * a[j] / s;
        }
    }
    m
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    m
}

fn group3(roots: &[(Vec<f64>, f64)]) -> Result<Vec<[[f64; 3]; 3]>> {
    let key = |m: &[[f64; 3]; 3]| -> Vec<i64> { m.iter().flatten().map(|v| (v * 1e6).round() as i64).collect() };
    let gens: Vec<_> = roots.iter().map(|(a, _)| reflection(a)).collect();
    let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    seen.insert(key(&id), ());
    let mut elements = vec![id];
    let mut i = 0;
    while i < elements.len() {
        for g in &gens {
            let p = mat_mul(g, &elements[i]);
            if seen.insert(key(&p), ()).is_none() {
                elements.push(p);
                if elements.len() > 10_000 {
                    return Err(Error::GroupTooLarge { max_order: 10_000 });
                }
            }
        }
        i += 1;
    }
    Ok(elements)
}

/// Vertices of the chamber containing a generic point.
fn chamber_vertices(roots: &[(Vec<f64>, f64)]) -> Result<[Vec<f64>; 3]> {
    let x0 = [0.913_f64, 0.347, 0.211];
    let signs: Vec<f64> = roots.iter().map(|(a, _)| dot(a, &x0).signum()).collect();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let c = cross(&roots[i].0, &roots[j].0);
            let n = norm(&c);
            if n < 1e-8 {
                continue;
            }
            for s in [1.0, -1.0] {
                let v: Vec<f64> = c.iter().map(|x| s * x / n).collect();
                let inside = roots.iter().zip(&signs).all(|((a, _), sg)| sg * dot(a, &v) >= -GEOMETRY_TOL);
                if inside && !verts.iter().any(|u| norm(&[u[0] - v[0], u[1] - v[1], u[2] - v[2]]) < 1e-8) {
                    verts.push(v);
                }
            }
        }
    }
    match <[Vec<f64>; 3]>::try_from(verts) {
        Ok(v) => Ok(v),
        Err(v) => Err(Error::Degenerate(format!("chamber has {} vertices, expected 3", v.len()))),
    }
}

/// One chamber cut into three kites at its vertices; each kite is two
/// collapsed squares, so corner and wall singularities become endpoint
/// Jacobi weights. All chambers follow by the group action.
fn rank_three(c: &Component, n: usize) -> Result<Piece> {
    let roots = &c.roots;
    let verts = chamber_vertices(roots)?;
    let vanishing = |pts: &[&Vec<f64>]| -> f64 {
        roots
            .iter()
            .filter(|(a, _)| pts.iter().all(|p| dot(a, p).abs() < GEOMETRY_TOL))
            .map(|(_, k)| 2.0 * k)
            .sum()
    };
    let normal = cross(&(0..3).map(|i| verts[1][i] - verts[0][i]).collect::<Vec<_>>(), &(0..3).map(|i| verts[2][i] - verts[0][i]).collect::<Vec<_>>());
    let height = dot(&normal, &verts[0]).abs() / norm(&normal);
    let centroid: Vec<f64> = (0..3).map(|i| (verts[0][i] + verts[1][i] + verts[2][i]) / 3.0).collect();
    let mid = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> { (0..3).map(|i| (a[i] + b[i]) / 2.0).collect() };
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for vi in 0..3 {
        let v = &verts[vi];
        let a = &verts[(vi + 1) % 3];
        let b = &verts[(vi + 2) % 3];
        let (ma, mb) = (mid(v, a), mid(v, b));
        let e_corner = 1.0 + vanishing(&[v]);
        let e_va = vanishing(&[v, a]);
        let e_vb = vanishing(&[v, b]);
        let twist: Vec<f64> = (0..3).map(|i| centroid[i] - ma[i] - mb[i] + v[i]).collect();
        let map = |s: f64, t: f64| -> (Vec<f64>, f64) {
            let y: Vec<f64> = (0..3).map(|i| v[i] + s * (ma[i] - v[i]) + t * (mb[i] - v[i]) + s * t * twist[i]).collect();
            let ds: Vec<f64> = (0..3).map(|i| ma[i] - v[i] + t * twist[i]).collect();
            let dt: Vec<f64> = (0..3).map(|i| mb[i] - v[i] + s * twist[i]).collect();
            (y, norm(&cross(&ds, &dt)))
        };
        let g_rho = gauss_jacobi(n, 0.0, e_corner)?;
        for (half, e_phi) in [(0, e_va), (1, e_vb)] {
            let g_phi = gauss_jacobi(n, 0.0, e_phi)?;
            for (xr, wr) in g_rho.nodes.iter().zip(&g_rho.weights) {
                let rho = (1.0 + xr) / 2.0;
                let wr = wr * 0.5f64.powf(e_corner + 1.0);
                for (xp, wp) in g_phi.nodes.iter().zip(&g_phi.weights) {
                    let phi = (1.0 + xp) / 2.0;
                    let wp = wp * 0.5f64.powf(e_phi + 1.0);
                    let (s, t) = if half == 0 { (rho, rho * phi) } else { (rho * phi, rho) };
                    let (y, jac) = map(s, t);
                    let ny = norm(&y);
                    let w = wr * wp * rho.powf(1.0 - e_corner) * phi.powf(-e_phi) * jac * height / ny.powi(3);
                    nodes.push(y.iter().map(|c| c / ny).collect::<Vec<f64>>());
                    weights.push(w);
                }
            }
        }
    }
    let group = group3(roots)?;
    let mut all_nodes = Vec::with_capacity(nodes.len() * group.len());
    let mut all_weights = Vec::with_capacity(all_nodes.capacity());
    for g in &group {
        for (z, w) in nodes.iter().zip(&weights) {
            all_nodes.push((0..3).map(|i| (0..3).map(|j| g[i][j] * z[j]).sum()).collect());
            all_weights.push(*w);
        }
    }
    Ok(Piece {
        dim: 3,
        gamma: roots.iter().map(|r| r.1).sum(),
        nodes: all_nodes,
        weights: all_weights,
    })
}

/// `ξ = sin θ·ζ₁ + cos θ·ζ₂`, integrated in `t = cos 2θ` where
/// `sin^a θ cos^b θ dθ` becomes a Jacobi weight.
fn join(p: &Piece, q: &Piece, n: usize) -> Result<Piece> {
    let a = p.dim as f64 - 1.0 + 2.0 * p.gamma;
    let b = q.dim as f64 - 1.0 + 2.0 * q.gamma;
    let g = gauss_jacobi(n, (a - 1.0) / 2.0, (b - 1.0) / 2.0)?;
    let scale = 2f64.powf(-(a + b) / 2.0 - 1.0);
    let mut nodes = Vec::with_capacity(g.nodes.len() * p.nodes.len() * q.nodes.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (t, wj) in g.nodes.iter().zip(&g.weights) {
        let s = ((1.0 - t) / 2.0).sqrt();
        let c = ((1.0 + t) / 2.0).sqrt();
        // sin^{2γ₁} cos^{2γ₂} is supplied by the caller's ω_k.
        let w_theta = wj * scale / (s.powf(2.0 * p.gamma) * c.powf(2.0 * q.gamma));
        for (z1, w1) in p.nodes.iter().zip(&p.weights) {
            for (z2, w2) in q.nodes.iter().zip(&q.weights) {
                let mut z: Vec<f64> = z1.iter().map(|v| s * v).collect();
                z.extend(z2.iter().map(|v| c * v));
                nodes.push(z);
                weights.push(w_theta * w1 * w2);
            }
        }
    }
    Ok(Piece {
        dim: p.dim + q.dim,
        gamma: p.gamma + q.gamma,
        nodes,
        weights,
    })
}

fn root_rank(comps: &[Component]) -> usize {
    comps.iter().map(|c| c.basis.len()).sum()
}

/// Whether [`adapted_sphere_rule_reduced`] can build a rule for `rs` that
/// resolves `active` coordinates.
pub fn supports(rs: &RootSystem, active: usize) -> bool {
    let comps = components(rs);
    let rank = root_rank(&comps);
    comps.iter().all(|c| c.basis.len() <= 3)
        && active >= rank
        && active <= rs.dimension()
        && active - rank <= MAX_FULL_SPHERE_DIM
}

/// Rule on `S^{N−1}` for `∫ f ω_k dν`, exact up to `order` for the smooth
/// factor. Needs irreducible components of rank at most three and a fixed
/// subspace of dimension at most five.
pub fn adapted_sphere_rule(rs: &RootSystem, order: usize) -> Result<SphericalRule> {
    adapted_sphere_rule_reduced(rs, rs.dimension(), order)
}

/// As [`adapted_sphere_rule`], but the fixed subspace is resolved only in
/// its leading `active − rank` directions, the first of which complete the
/// span of the roots inside the leading coordinates. Valid for integrands
/// invariant under rotations of the remaining fixed directions.
pub fn adapted_sphere_rule_reduced(rs: &RootSystem, active: usize, order: usize) -> Result<SphericalRule> {
    let dim = rs.dimension();
    if !supports(rs, active) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let n = order / 2 + 1;
    let comps = components(rs);
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut pieces = Vec::new();
    for c in &comps {
        frame.extend(c.basis.iter().cloned());
        pieces.push(match c.basis.len() {
            1 => rank_one(c),
            2 => rank_two(c, n)?,
            _ => rank_three(c, n)?,
        });
    }
    let rank = frame.len();
    extend_orthonormal(&mut frame, (0..dim).map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect()));
    if rank < dim {
        let f = sphere_rule_reduced(dim - rank, active - rank, order)?;
        pieces.push(Piece {
            dim: dim - rank,
            gamma: 0.0,
            nodes: f.nodes,
            weights: f.weights,
        });
    }
    let mut iter = pieces.into_iter().rev();
    let mut acc = iter.next().ok_or(Error::UnsupportedDimension(dim))?;
    for p in iter {
        acc = join(&p, &acc, n)?;
    }
    let nodes = acc
        .nodes
        .iter()
        .map(|z| (0..dim).map(|i| z.iter().zip(&frame).map(|(c, b)| c * b[i]).sum()).collect())
        .collect();
    Ok(SphericalRule {
        dimension: dim,
        order,
        nodes,
        weights: acc.weights,
        active,
        adapted: Some(Adaptation(Arc::new(rs.clone()))),
    })
}

/// The adapted rule when available, otherwise the product rule moved off the
/// hyperplanes.
pub fn weighted_sphere_rule(rs: &RootSystem, active: usize, order: usize) -> Result<SphericalRule> {
    if supports(rs, active) {
        adapted_sphere_rule_reduced(rs, active, order)
    } else {
        sphere_rule_reduced(rs.dimension(), active, order)?.avoiding_hyperplanes(rs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{sphere_area, sphere_rule};
    use crate::rational::{q, qf};
    use crate::reflection::{build_root_system, RootFamily};

    fn mass(rs: &RootSystem, rule: &SphericalRule) -> f64 {
        rule.integrate(|x| rs.weight(x))
    }

    #[test]
    fn zero_multiplicity_gives_sphere_area() {
        for (fam, dim) in [
            (RootFamily::A(2), 3),
            (RootFamily::B(2), 2),
            (RootFamily::A(3), 4),
            (RootFamily::B(3), 3),
            (RootFamily::Z2(4), 4),
        ] {
            let o = crate::reflection::orbit_count(fam).unwrap();
            let rs = build_root_system(fam, &vec![q(0); o]).unwrap();
            let rule = adapted_sphere_rule(&rs, 8).unwrap();
            assert!((rule.total_mass() / sphere_area(dim) - 1.0).abs() < 1e-12, "{fam:?}");
        }
    }

    #[test]
    fn integer_multiplicity_matches_product_rule() {
        for fam in [RootFamily::A(2), RootFamily::B(3), RootFamily::A(3), RootFamily::I2(4)] {
            let o = crate::reflection::orbit_count(fam).unwrap();
            let rs = build_root_system(fam, &vec![q(1); o]).unwrap();
            let dim = rs.dimension();
            let f = |x: &[f64]| 1.0 + x[0] * x[1] + x[dim - 1].powi(4);
            let exact = sphere_rule(dim, 40).unwrap().integrate(|x| f(x) * rs.weight(x));
            let adapted = adapted_sphere_rule(&rs, 24).unwrap().integrate(|x| f(x) * rs.weight(x));
            assert!((adapted / exact - 1.0).abs() < 1e-11, "{fam:?}: {adapted} vs {exact}");
        }
    }

    #[test]
    fn fractional_multiplicity_converges() {
        for (fam, k) in [
            (RootFamily::A(2), qf(1, 2)),
            (RootFamily::B(3), qf(3, 7)),
            (RootFamily::A(3), qf(1, 2)),
            (RootFamily::Z2(4), qf(1, 3)),
            (RootFamily::I2(4), qf(1, 2)),
        ] {
            let o = crate::reflection::orbit_count(fam).unwrap();
            let rs = build_root_system(fam, &vec![k.clone(); o]).unwrap();
            let f = |x: &[f64]| (x[0] - 0.3 * x[1]).exp();
            let lo = adapted_sphere_rule(&rs, 10).unwrap().integrate(|x| f(x) * rs.weight(x));
            let hi = adapted_sphere_rule(&rs, 20).unwrap().integrate(|x| f(x) * rs.weight(x));
            assert!((lo / hi - 1.0).abs() < 1e-7, "{fam:?}: {lo} vs {hi}");
        }
    }

    #[test]
    fn rank_one_mass() {
        // ∫_{S¹} |√2 cos φ|^{2k} dφ = 2^k · 2√π Γ(k+½)/Γ(k+1).
        let rs = build_root_system(RootFamily::Z2(1), &[qf(1, 2)]).unwrap().embedded(2).unwrap();
        let rule = adapted_sphere_rule(&rs, 10).unwrap();
        let expected = 2f64.sqrt() * 4.0;
        assert!((mass(&rs, &rule) / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_rule_on_embedded_system() {
        let rs = build_root_system(RootFamily::A(1), &[q(1)]).unwrap().embedded(7).unwrap();
        let rule = adapted_sphere_rule_reduced(&rs, 3, 10).unwrap();
        assert_eq!(rule.active, 3);
        // ∫ ⟨α,ξ⟩² dν = |α|² |S⁶| / 7.
        let expected = 2.0 * sphere_area(7) / 7.0;
        let got = mass(&rs, &rule);
        assert!((got / expected - 1.0).abs() < 1e-12, "{got} vs {expected}");
        assert!(rule.coarse().unwrap().adapted.is_some());
    }

    #[test]
    fn unsupported_rank() {
        let rs = build_root_system(RootFamily::B(4), &[qf(1, 2), q(1)]).unwrap();
        assert!(!supports(&rs, 4));
        assert!(adapted_sphere_rule(&rs, 6).is_err());
    }
}
