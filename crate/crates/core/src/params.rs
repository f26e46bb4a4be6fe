//! Kinetic parameters of the competition system and every closed-form speed
//! and published determinacy condition as a pure predicate.
//!
//! All inequalities are evaluated literally at f64 precision: boundary cases
//! satisfy the non-strict comparisons exactly as written.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("invalid kinetic parameters: {0}")]
    Invalid(String),
    /// The Huang condition divides by |d2 - d1|.
    #[error("huang condition is undefined for d1 == d2")]
    DegenerateDenominator,
}

/// The six positive rates (d1, d2, r1, r2, a1, a2) with the monostable
/// ordering 0 < a1 < 1 < a2, so (1,0) is stable and (0,1) unstable.
///
/// Values are validated once at construction; all predicate evaluations
/// assume a valid instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct KineticParams {
    d1: f64,
    d2: f64,
    r1: f64,
    r2: f64,
    a1: f64,
    a2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d1: f64,
    d2: f64,
    r1: f64,
    r2: f64,
    a1: f64,
    a2: f64,
}

impl TryFrom<RawParams> for KineticParams {
    type Error = ParamsError;
    fn try_from(r: RawParams) -> Result<Self, Self::Error> {
        KineticParams::new(r.d1, r.d2, r.r1, r.r2, r.a1, r.a2)
    }
}

impl From<KineticParams> for RawParams {
    fn from(p: KineticParams) -> Self {
        RawParams {
            d1: p.d1,
            d2: p.d2,
            r1: p.r1,
            r2: p.r2,
            a1: p.a1,
            a2: p.a2,
        }
    }
}

/// Three-way outcome of the Alhasanat-Ou sufficient conditions. The
/// published conditions are sufficient only, so `Inconclusive` is an honest
/// answer outside both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determinacy {
    Nonlinear,
    Linear,
    Inconclusive,
}

impl KineticParams {
    pub fn new(
        d1: f64,
        d2: f64,
        r1: f64,
        r2: f64,
        a1: f64,
        a2: f64,
    ) -> Result<Self, ParamsError> {
        for (name, v) in [
            ("d1", d1),
            ("d2", d2),
            ("r1", r1),
            ("r2", r2),
            ("a1", a1),
            ("a2", a2),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ParamsError::Invalid(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if !(a1 < 1.0) {
            return Err(ParamsError::Invalid(format!(
                "monostable ordering requires a1 < 1, got a1 = {a1}"
            )));
        }
        if !(a2 > 1.0) {
            return Err(ParamsError::Invalid(format!(
                "monostable ordering requires a2 > 1, got a2 = {a2}"
            )));
        }
        Ok(KineticParams {
            d1,
            d2,
            r1,
            r2,
            a1,
            a2,
        })
    }

    #[inline]
    pub fn d1(&self) -> f64 {
        self.d1
    }
    #[inline]
    pub fn d2(&self) -> f64 {
        self.d2
    }
    #[inline]
    pub fn r1(&self) -> f64 {
        self.r1
    }
    #[inline]
    pub fn r2(&self) -> f64 {
        self.r2
    }
    #[inline]
    pub fn a1(&self) -> f64 {
        self.a1
    }
    #[inline]
    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// Speed of the linearization at the unstable state (0,1):
    /// 2 sqrt(d1 r1 (1 - a1)).
    pub fn linear_speed(&self) -> f64 {
        2.0 * (self.d1 * self.r1 * (1.0 - self.a1)).sqrt()
    }

    /// Kan-on's sandwich for the minimal wave speed:
    /// 2 sqrt(d1 r1 (1-a1)) <= c* <= 2 sqrt(d1 r1).
    pub fn kanon_bounds(&self) -> (f64, f64) {
        (self.linear_speed(), 2.0 * (self.d1 * self.r1).sqrt())
    }

    /// Lewis-Li-Weinberger sufficient condition for linear determinacy:
    /// 0 < d2 <= 2 d1 and either a1 a2 <= 1 or
    /// r2 <= r1 (2 - d2/d1)(1 - a1) / (a1 a2 - 1).
    pub fn llw_linear_determinacy(&self) -> bool {
        if self.d2 > 2.0 * self.d1 {
            return false;
        }
        let prod = self.a1 * self.a2;
        if prod <= 1.0 {
            return true;
        }
        self.r2 <= self.r1 * (2.0 - self.d2 / self.d1) * (1.0 - self.a1) / (prod - 1.0)
    }

    /// Huang's linear-determinacy condition,
    /// (r1 (2 - d2/d1)(1 - a1) + r2) / (r2 a2) >= max(a1, (d2 - 2 d1) / (2 |d2 - d1|)).
    pub fn huang_condition(&self) -> Result<bool, ParamsError> {
        if self.d1 == self.d2 {
            return Err(ParamsError::DegenerateDenominator);
        }
        let lhs = (self.r1 * (2.0 - self.d2 / self.d1) * (1.0 - self.a1) + self.r2)
            / (self.r2 * self.a2);
        let rhs = self
            .a1
            .max((self.d2 - 2.0 * self.d1) / (2.0 * (self.d2 - self.d1).abs()));
        Ok(lhs >= rhs)
    }

    /// Alhasanat-Ou sufficient conditions. Nonlinear when
    /// (r1 (d2/d1 + 2)(1 - a1) + r2) / (r2 a2) < 1 - 2 (1 - a1);
    /// linear when a1 < 1/3 and r2 lies in either published interval.
    pub fn alhasanat_ou(&self) -> Determinacy {
        let ratio = self.d2 / self.d1;
        let nonlinear = (self.r1 * (ratio + 2.0) * (1.0 - self.a1) + self.r2)
            / (self.r2 * self.a2)
            < 1.0 - 2.0 * (1.0 - self.a1);

        let b = 1.0 - self.a1;
        let lo1 = self.r1 * (ratio - 4.0) * b / 4.0;
        let mid = self.d2 * self.r1 * b / (2.0 * self.d1 * self.a2);
        let hi2 = self.r1 * (ratio + 4.0) * b / (4.0 * (self.a2 - 1.0));
        let in_first = lo1 < self.r2 && self.r2 < mid;
        let in_second = mid <= self.r2 && self.r2 < hi2;
        let linear = self.a1 < 1.0 / 3.0 && (in_first || in_second);

        // The two sufficient conditions are disjoint: nonlinear needs a
        // positive quantity below 2 a1 - 1, impossible when a1 < 1/3.
        assert!(
            !(nonlinear && linear),
            "alhasanat_ou: both sufficient conditions fired for {self:?}"
        );

        if nonlinear {
            Determinacy::Nonlinear
        } else if linear {
            Determinacy::Linear
        } else {
            Determinacy::Inconclusive
        }
    }
}

/// Draw a valid parameter set from moderate ranges, for sweeps.
pub fn sample_params(rng: &mut impl rand::Rng) -> KineticParams {
    let d1 = rng.gen_range(0.2..3.0);
    let d2 = rng.gen_range(0.2..3.0);
    let r1 = rng.gen_range(0.2..3.0);
    let r2 = rng.gen_range(0.2..3.0);
    let a1 = rng.gen_range(0.05..0.95);
    let a2 = rng.gen_range(1.05..5.0);
    KineticParams::new(d1, d2, r1, r2, a1, a2).expect("sampled ranges are valid")
}
