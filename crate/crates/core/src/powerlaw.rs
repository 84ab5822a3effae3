//! Piecewise power-law radial profiles with closed-form integrals.

use std::sync::Arc;

use crate::dunklnum::RadialProfile;
use crate::error::{Error, Result};

/// `Σ c_j r^{e_j}` with real exponents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>,
}

impl PowerSum {
    pub fn zero() -> Self {
        PowerSum { terms: Vec::new() }
    }

    pub fn monomial(c: f64, e: f64) -> Self {
        PowerSum { terms: vec![(c, e)] }.pruned()
    }

    /// `Σ c_j (r − a)^j` expanded in powers of `r`.
    pub fn shifted_polynomial(coeffs: &[f64], a: f64) -> Self {
        let n = coeffs.len();
        let mut out = vec![0.0; n];
        for (j, c) in coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for m in 0..=j {
                // binom = C(j, m)
                out[m] += c * binom * (-a).powi((j - m) as i32);
                binom = binom * (j - m) as f64 / (m + 1) as f64;
            }
        }
        PowerSum {
            terms: out.into_iter().enumerate().map(|(m, c)| (c, m as f64)).collect(),
        }
        .pruned()
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|(c, _)| *c != 0.0);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|(c, e)| c * r.powf(*e)).sum()
    }

    pub fn derivative(&self) -> Self {
        PowerSum {
            terms: self.terms.iter().map(|(c, e)| (c * e, e - 1.0)).collect(),
        }
        .pruned()
    }

    /// Radial part of the Dunkl Laplacian, `u'' + (N̄−1)u'/r`.
    pub fn radial_laplacian(&self, nbar: f64) -> Self {
        PowerSum {
            terms: self
                .terms
                .iter()
                .map(|(c, e)| (c * e * (e + nbar - 2.0), e - 2.0))
                .collect(),
        }
        .pruned()
    }

    pub fn mul(&self, other: &PowerSum) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, e) in &self.terms {
            for (b, f) in &other.terms {
                terms.push((a * b, e + f));
            }
        }
        PowerSum { terms }.merged()
    }

    fn merged(mut self) -> Self {
        self.terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.terms.len());
        for (c, e) in self.terms {
            match out.last_mut() {
                Some((c0, e0)) if *e0 == e => *c0 += c,
                _ => out.push((c, e)),
            }
        }
        PowerSum { terms: out }.pruned()
    }

    pub fn times_power(&self, e: f64) -> Self {
        PowerSum {
            terms: self.terms.iter().map(|(c, f)| (*c, f + e)).collect(),
        }
    }

    /// `|Σ|^p` as a power sum: exact for `p = 2` or a single term.
    pub fn abs_pow(&self, p: f64) -> Result<Self> {
        if self.is_zero() {
            return Ok(PowerSum::zero());
        }
        if p == 2.0 {
            return Ok(self.mul(self));
        }
        if self.terms.len() == 1 {
            let (c, e) = self.terms[0];
            return Ok(PowerSum::monomial(c.abs().powf(p), e * p));
        }
        Err(Error::NoClosedForm(format!(
            "|u|^{p} of a {}-term power sum",
            self.terms.len()
        )))
    }

    /// Smallest exponent, the behaviour at the origin.
    pub fn min_exponent(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.1).reduce(f64::min)
    }

    /// Largest exponent, the behaviour at infinity.
    pub fn max_exponent(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.1).reduce(f64::max)
    }

    /// `∫_a^b Σ c r^e dr`, with `b = ∞` allowed.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let mut acc = 0.0;
        for &(c, e) in &self.terms {
            let s = e + 1.0;
            let v = if b.is_infinite() {
                if s >= 0.0 {
                    return Err(Error::Divergent(format!("∫ r^{e} dr up to infinity")));
                }
                -a.powf(s) / s
            } else if a == 0.0 {
                if s <= 0.0 {
                    return Err(Error::Divergent(format!("∫ r^{e} dr from the origin")));
                }
                b.powf(s) / s
            } else if s == 0.0 {
                (b / a).ln()
            } else {
                // a^s (exp(s ln(b/a)) − 1)/s stays accurate for s → 0.
                a.powf(s) * (s * (b / a).ln()).exp_m1() / s
            };
            acc += c * v;
        }
        Ok(acc)
    }
}

/// Which derived quantity of a profile a functional integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `u`
    Value,
    /// `|∇_k u|`
    Gradient,
    /// `Δ_k u`
    Laplacian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub value: PowerSum,
}

/// Continuous radial profile made of power sums on consecutive intervals,
/// the last one unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePower {
    pub pieces: Vec<Piece>,
}

impl PiecewisePower {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let ok = !pieces.is_empty()
            && pieces[0].start == 0.0
            && pieces.windows(2).all(|w| w[0].end == w[1].start && w[0].start < w[0].end)
            && pieces.last().is_some_and(|p| p.end.is_infinite());
        if !ok {
            return Err(Error::InvalidConfig(
                "profile pieces must tile [0, ∞) in order".into(),
            ));
        }
        Ok(PiecewisePower { pieces })
    }

    /// Interior breakpoints, starting with 0 and ending where the last
    /// piece begins.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.start).collect()
    }

    /// The field as a power sum on every piece.
    pub fn field(&self, kind: FieldKind, nbar: f64) -> Vec<PowerSum> {
        self.pieces
            .iter()
            .map(|p| match kind {
                FieldKind::Value => p.value.clone(),
                FieldKind::Gradient => p.value.derivative(),
                FieldKind::Laplacian => p.value.radial_laplacian(nbar),
            })
            .collect()
    }

    /// `∫_0^∞ |field|^power r^weight dr` in closed form.
    pub fn integrate(&self, kind: FieldKind, power: f64, weight: f64, nbar: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (piece, f) in self.pieces.iter().zip(self.field(kind, nbar)) {
            let integrand = f.abs_pow(power)?.times_power(weight);
            acc += integrand.integral(piece.start, piece.end)?;
        }
        Ok(acc)
    }

    fn locate(&self, r: f64) -> &Piece {
        self.pieces
            .iter()
            .find(|p| r < p.end)
            .unwrap_or_else(|| self.pieces.last().expect("nonempty"))
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.locate(r).value.eval(r)
    }

    /// Callable profile for the numeric back end.
    pub fn to_radial_profile(&self) -> RadialProfile {
        let derived: Arc<Vec<(f64, PowerSum, PowerSum, PowerSum)>> = Arc::new(
            self.pieces
                .iter()
                .map(|p| {
                    let d1 = p.value.derivative();
                    let d2 = d1.derivative();
                    (p.end, p.value.clone(), d1, d2)
                })
                .collect(),
        );
        let pick = |d: &Arc<Vec<(f64, PowerSum, PowerSum, PowerSum)>>, r: f64| -> usize {
            d.iter().position(|p| r < p.0).unwrap_or(d.len() - 1)
        };
        let (a, b, c) = (derived.clone(), derived.clone(), derived);
        RadialProfile::new(
            move |r| a[pick(&a, r)].1.eval(r),
            move |r| b[pick(&b, r)].2.eval(r),
            move |r| c[pick(&c, r)].3.eval(r),
        )
    }
}

/// Quintic on `[a, a+h]` matching `u = 1, u' = u'' = 0` at `a` and the
/// power `r^{−s}` to second order at `a+h`.
pub fn quintic_join(a: f64, h: f64, s: f64) -> PowerSum {
    let b = a + h;
    let y0 = b.powf(-s) - 1.0;
    let y1 = -s * b.powf(-s - 1.0);
    let y2 = s * (s + 1.0) * b.powf(-s - 2.0);
    // Coefficients of t^3, t^4, t^5 in t = r − a.
    let m = nalgebra::Matrix3::new(
        h.powi(3),
        h.powi(4),
        h.powi(5),
        3.0 * h * h,
        4.0 * h.powi(3),
        5.0 * h.powi(4),
        6.0 * h,
        12.0 * h * h,
        20.0 * h.powi(3),
    );
    let c = m
        .lu()
        .solve(&nalgebra::Vector3::new(y0, y1, y2))
        .expect("Hermite system is nonsingular");
    PowerSum::shifted_polynomial(&[1.0, 0.0, 0.0, c[0], c[1], c[2]], a)
}

/// `r^b` on `[0,1]`, then `1`.
pub fn rising_then_flat(b: f64) -> PiecewisePower {
    PiecewisePower {
        pieces: vec![
            Piece {
                start: 0.0,
                end: 1.0,
                value: PowerSum::monomial(1.0, b),
            },
            Piece {
                start: 1.0,
                end: f64::INFINITY,
                value: PowerSum::monomial(1.0, 0.0),
            },
        ],
    }
}

/// `1` on `[0,1]`, then `r^{−s}`.
pub fn flat_then_decaying(s: f64) -> PiecewisePower {
    PiecewisePower {
        pieces: vec![
            Piece {
                start: 0.0,
                end: 1.0,
                value: PowerSum::monomial(1.0, 0.0),
            },
            Piece {
                start: 1.0,
                end: f64::INFINITY,
                value: PowerSum::monomial(1.0, -s),
            },
        ],
    }
}

/// `1` on `[0,1]`, a C² quintic on `[1, 1+h]`, then `r^{−s}`.
pub fn mollified_decaying(s: f64, h: f64) -> PiecewisePower {
    PiecewisePower {
        pieces: vec![
            Piece {
                start: 0.0,
                end: 1.0,
                value: PowerSum::monomial(1.0, 0.0),
            },
            Piece {
                start: 1.0,
                end: 1.0 + h,
                value: quintic_join(1.0, h, s),
            },
            Piece {
                start: 1.0 + h,
                end: f64::INFINITY,
                value: PowerSum::monomial(1.0, -s),
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_expansion() {
        // (r − 2)^2 = r² − 4r + 4.
        let p = PowerSum::shifted_polynomial(&[0.0, 0.0, 1.0], 2.0);
        for r in [0.0, 1.5, 3.0] {
            assert!((p.eval(r) - (r - 2.0f64).powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_integrals() {
        let p = PowerSum::monomial(3.0, 2.0);
        assert!((p.integral(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let q = PowerSum::monomial(1.0, -2.0);
        assert!((q.integral(1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!(PowerSum::monomial(1.0, -1.0).integral(1.0, f64::INFINITY).is_err());
        assert!(PowerSum::monomial(1.0, -1.0).integral(0.0, 1.0).is_err());
        let l = PowerSum::monomial(1.0, -1.0).integral(1.0, 2.0).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        // Near-logarithmic exponent keeps full accuracy.
        let s = 1e-9;
        let v = PowerSum::monomial(1.0, -1.0 + s).integral(1.0, 2.0).unwrap();
        assert!((v - (2f64.powf(s) - 1.0) / s).abs() < 1e-6 * v);
    }

    #[test]
    fn join_is_c2() {
        let s = 1.7;
        let j = quintic_join(1.0, 0.25, s);
        let d1 = j.derivative();
        let d2 = d1.derivative();
        assert!((j.eval(1.0) - 1.0).abs() < 1e-11);
        assert!(d1.eval(1.0).abs() < 1e-11);
        assert!(d2.eval(1.0).abs() < 1e-10);
        let b = 1.25f64;
        assert!((j.eval(b) - b.powf(-s)).abs() < 1e-11);
        assert!((d1.eval(b) + s * b.powf(-s - 1.0)).abs() < 1e-11);
        assert!((d2.eval(b) - s * (s + 1.0) * b.powf(-s - 2.0)).abs() < 1e-10);
    }

    #[test]
    fn laplacian_of_power() {
        let nbar = 5.5;
        let e = -1.3;
        let l = PowerSum::monomial(1.0, e).radial_laplacian(nbar);
        assert_eq!(l.terms, vec![(e * (e + nbar - 2.0), e - 2.0)]);
    }

    #[test]
    fn hardy_profile_integrals() {
        // u = r^b on [0,1], 1 beyond: ∫|u'|^p r^{N̄−1} = |b|^p/ε.
        let (nbar, p, eps) = (4.0, 5.0, 0.1);
        let b = (p - nbar + eps) / p;
        let prof = rising_then_flat(b);
        let num = prof.integrate(FieldKind::Gradient, p, nbar - 1.0, nbar).unwrap();
        assert!((num - b.powf(p) / eps).abs() < 1e-12 * num);
        let den = prof.integrate(FieldKind::Value, p, nbar - 1.0 - p, nbar).unwrap();
        assert!((den - (1.0 / eps + 1.0 / (p - nbar))).abs() < 1e-12 * den);
    }

    #[test]
    fn radial_profile_matches() {
        let prof = mollified_decaying(0.8, 0.25);
        let rp = prof.to_radial_profile();
        for r in [0.5, 1.1, 1.2, 3.0] {
            assert!(((rp.value)(r) - prof.eval(r)).abs() < 1e-14);
        }
        let h = 1e-6;
        let r = 1.13;
        let fd = ((rp.value)(r + h) - (rp.value)(r - h)) / (2.0 * h);
        assert!((fd - (rp.d1)(r)).abs() < 1e-6);
    }
}
