//! The mixture function ξ(x) = Σ γ_p² x^p and the quantities read off from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial mixture, stored through the coupling strengths γ_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct Mixture {
    coeffs: BTreeMap<u32, f64>,
}

/// Structural predicates of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Predicates {
    pub is_even: bool,
    /// Always false: a finite-degree mixture has convergent reciprocal sums.
    pub is_generic: bool,
    pub is_even_generic: bool,
}

/// Kac–Rice energy window for marginally stable critical points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EInfinity {
    Window { minus: f64, plus: f64 },
    /// The outer discriminant is negative; its value is reported as is.
    Undefined { discriminant: f64 },
}

impl EInfinity {
    pub fn window(&self) -> Option<(f64, f64)> {
        match *self {
            EInfinity::Window { minus, plus } => Some((minus, plus)),
            EInfinity::Undefined { .. } => None,
        }
    }
}

impl Mixture {
    /// Builds a mixture from `(p, γ_p)` pairs. Zero coefficients are dropped.
    pub fn new<I: IntoIterator<Item = (u32, f64)>>(gammas: I) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (p, g) in gammas {
            if p == 0 {
                return Err(Error::InvalidMixture("degree 0 is not allowed".into()));
            }
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidMixture(format!("gamma_{p} = {g} must be finite and nonnegative")));
            }
            if g > 0.0 {
                *coeffs.entry(p).or_insert(0.0) += g;
            }
        }
        if !coeffs.keys().any(|&p| p >= 2) {
            return Err(Error::InvalidMixture("at least one gamma_p > 0 with p >= 2 is required".into()));
        }
        Ok(Self { coeffs })
    }

    /// Builds a mixture from the coefficients c_p = γ_p² of ξ.
    pub fn from_xi_coeffs<I: IntoIterator<Item = (u32, f64)>>(cs: I) -> Result<Self> {
        let mut v = Vec::new();
        for (p, c) in cs {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidMixture(format!("xi coefficient of degree {p} is {c}")));
            }
            v.push((p, c.sqrt()));
        }
        Self::new(v)
    }

    /// Pure p-spin mixture ξ(x) = x^p.
    pub fn pure(p: u32) -> Result<Self> {
        Self::new([(p, 1.0)])
    }

    pub fn gammas(&self) -> &BTreeMap<u32, f64> {
        &self.coeffs
    }

    pub fn max_degree(&self) -> u32 {
        *self.coeffs.keys().next_back().expect("nonempty by construction")
    }

    /// The single degree of a pure mixture.
    pub fn pure_degree(&self) -> Option<u32> {
        if self.coeffs.len() == 1 {
            self.coeffs.keys().next().copied()
        } else {
            None
        }
    }

    /// ξ^(order)(q), checked: q ∈ [0, 1] and order ≤ 3.
    pub fn eval_derivative(&self, q: f64, order: u32) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("q = {q} outside [0, 1]")));
        }
        if order > 3 {
            return Err(Error::Domain(format!("derivative order {order} outside 0..=3")));
        }
        Ok(self.deriv(q, order))
    }

    /// ξ^(order)(x) at any real x, for internal use (entrywise matrix maps,
    /// finite differences beyond the unit interval).
    pub fn deriv(&self, x: f64, order: u32) -> f64 {
        self.coeffs
            .iter()
            .filter(|(&p, _)| p >= order)
            .map(|(&p, &g)| {
                let mut falling = 1.0;
                for j in 0..order {
                    falling *= (p - j) as f64;
                }
                g * g * falling * x.powi((p - order) as i32)
            })
            .sum()
    }

    pub fn xi(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    pub fn xi1(&self, x: f64) -> f64 {
        self.deriv(x, 1)
    }

    pub fn xi2(&self, x: f64) -> f64 {
        self.deriv(x, 2)
    }

    pub fn xi3(&self, x: f64) -> f64 {
        self.deriv(x, 3)
    }

    /// ξ_t(q) = ξ(t² q), i.e. γ_p ↦ γ_p t^p.
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("dilation parameter t = {t} must be positive")));
        }
        Ok(Self {
            coeffs: self.coeffs.iter().map(|(&p, &g)| (p, g * t.powi(p as i32))).collect(),
        })
    }

    /// Multiplies ξ by `s` (γ_p ↦ √s γ_p).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("scale {s} must be positive")));
        }
        let r = s.sqrt();
        Ok(Self {
            coeffs: self.coeffs.iter().map(|(&p, &g)| (p, g * r)).collect(),
        })
    }

    pub fn predicates(&self) -> Predicates {
        Predicates {
            is_even: self.is_even(),
            is_generic: false,
            is_even_generic: false,
        }
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|p| p % 2 == 0)
    }

    /// E∞± evaluated at q = 1. The term α² = ξ'' + ξ' − ξ'² enters only
    /// squared, so it is used as is even when negative.
    pub fn e_infinity_pm(&self) -> EInfinity {
        let x1 = self.xi1(1.0);
        let x2 = self.xi2(1.0);
        let alpha2 = x2 + x1 - x1 * x1;
        let disc = 4.0 * x2 * x1 * x1 - (x2 + x1) * (2.0 * (x2 - x1 + x1 * x1) - alpha2 * (x2 / x1).ln());
        if !(disc >= 0.0) {
            return EInfinity::Undefined { discriminant: disc };
        }
        let centre = 2.0 * x1 * x2.sqrt();
        let s = disc.sqrt();
        let denom = x1 + x2;
        EInfinity::Window {
            minus: (centre - s) / denom,
            plus: (centre + s) / denom,
        }
    }
}

/// E∞(p) = 2√((p−1)/p) for pure p-spin models.
pub fn e_infinity_pure(p: u32) -> Result<f64> {
    if p < 3 {
        return Err(Error::Domain(format!("pure threshold requires p >= 3, got {p}")));
    }
    let p = p as f64;
    Ok(2.0 * ((p - 1.0) / p).sqrt())
}

/// Config representation: `{"coeffs": {"2": 1.0}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub coeffs: BTreeMap<String, f64>,
}

impl TryFrom<MixtureSpec> for Mixture {
    type Error = Error;

    fn try_from(spec: MixtureSpec) -> Result<Self> {
        let mut v = Vec::with_capacity(spec.coeffs.len());
        for (k, g) in spec.coeffs {
            let p: u32 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidMixture(format!("coeffs.{k}: degree key must be a positive decimal integer")))?;
            v.push((p, g));
        }
        Mixture::new(v)
    }
}

impl From<Mixture> for MixtureSpec {
    fn from(m: Mixture) -> Self {
        MixtureSpec {
            coeffs: m.coeffs.into_iter().map(|(p, g)| (p.to_string(), g)).collect(),
        }
    }
}
