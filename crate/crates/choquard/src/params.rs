//! Problem parameters and the scaling exponents derived from them.
//!
//! The admissible window for the coupling exponents is
//! 2_{μ,*} = (2N−μ)/N < p, q < 2*_μ = (2N−μ)/(N−2): below the lower bound the
//! coupling energy is not controlled by the Hardy–Littlewood–Sobolev
//! inequality, at the upper bound it merges with the critical term.  The
//! dilation weight γ_p = (N(p−2)+μ)/2 governs how each energy term scales
//! along the mass-preserving dilation; the sign of γ_p + γ_q − 2 splits the
//! problem into mass-subcritical, -critical and -supercritical regimes with
//! qualitatively different ground-state landscapes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Input parameters of the coupled system.
///
/// `n` is the spatial dimension, `mu` the Riesz order, `p`/`q` the coupling
/// exponents, `nu` the coupling strength (any sign), and `a`/`b` the
/// prescribed L² masses of the two components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
}

/// Position of p+q relative to the mass-critical sum 4 + (4−2μ)/N,
/// equivalently the sign of γ_p + γ_q − 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassClass {
    Subcritical,
    Critical,
    Supercritical,
}

/// Exact-equality band for the critical classification: γ_p + γ_q within
/// this distance of 2 is treated as mass-critical.
pub const MASS_CLASS_BAND: f64 = 1e-12;

/// Exponents derived from [`ProblemParams`]; all closed-form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub gamma_p: f64,
    pub gamma_q: f64,
    /// Upper critical exponent 2*_μ = (2N−μ)/(N−2).
    pub two_star_mu: f64,
    /// Lower critical exponent 2_{μ,*} = (2N−μ)/N.
    pub two_lower: f64,
    pub mass_class: MassClass,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("N must be an integer >= 3, got {0}")]
    DimensionTooSmall(u32),
    #[error("mu must lie in (0, N) = (0, {n}), got {mu}")]
    MuOutOfRange { mu: f64, n: u32 },
    #[error("{name} = {value} violates the lower bound {name} > (2N-mu)/N = {bound}")]
    ExponentAtOrBelowLower { name: &'static str, value: f64, bound: f64 },
    #[error("{name} = {value} violates the upper bound {name} < (2N-mu)/(N-2) = {bound}")]
    ExponentAtOrAboveUpper { name: &'static str, value: f64, bound: f64 },
    #[error("mass {name} must be > 0, got {value}")]
    NonpositiveMass { name: &'static str, value: f64 },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

impl ProblemParams {
    /// Validates all invariants and returns the derived exponents.
    ///
    /// The window condition is checked strictly: p or q equal to an endpoint
    /// is rejected, since every variational identity downstream divides by
    /// distances to these endpoints.
    pub fn validate(&self) -> Result<DerivedExponents, ParamError> {
        if self.n < 3 {
            return Err(ParamError::DimensionTooSmall(self.n));
        }
        for (name, value) in [
            ("mu", self.mu),
            ("p", self.p),
            ("q", self.q),
            ("nu", self.nu),
            ("a", self.a),
            ("b", self.b),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        let n = self.n as f64;
        if self.mu <= 0.0 || self.mu >= n {
            return Err(ParamError::MuOutOfRange { mu: self.mu, n: self.n });
        }
        let two_lower = (2.0 * n - self.mu) / n;
        let two_star_mu = (2.0 * n - self.mu) / (n - 2.0);
        for (name, value) in [("p", self.p), ("q", self.q)] {
            if value <= two_lower {
                return Err(ParamError::ExponentAtOrBelowLower { name, value, bound: two_lower });
            }
            if value >= two_star_mu {
                return Err(ParamError::ExponentAtOrAboveUpper { name, value, bound: two_star_mu });
            }
        }
        for (name, value) in [("a", self.a), ("b", self.b)] {
            if value <= 0.0 {
                return Err(ParamError::NonpositiveMass { name, value });
            }
        }
        let gamma_p = self.gamma_of(self.p);
        let gamma_q = self.gamma_of(self.q);
        let s = gamma_p + gamma_q - 2.0;
        let mass_class = if s.abs() <= MASS_CLASS_BAND {
            MassClass::Critical
        } else if s < 0.0 {
            MassClass::Subcritical
        } else {
            MassClass::Supercritical
        };
        Ok(DerivedExponents { gamma_p, gamma_q, two_star_mu, two_lower, mass_class })
    }

    /// Dilation weight γ_r = (N(r−2)+μ)/2 of an exponent r.
    pub fn gamma_of(&self, r: f64) -> f64 {
        (self.n as f64 * (r - 2.0) + self.mu) / 2.0
    }

    /// For N ≥ 5 the subcritical existence theory additionally requires
    /// (N/2−1)p + (N/2)q ≤ 2N−μ and its (p,q)-swap.  Returned as advisory
    /// flags only; nothing downstream asserts them.
    pub fn n5_exponent_flags(&self) -> (bool, bool) {
        let n = self.n as f64;
        let lim = 2.0 * n - self.mu;
        (
            (n / 2.0 - 1.0) * self.p + (n / 2.0) * self.q <= lim,
            (n / 2.0 - 1.0) * self.q + (n / 2.0) * self.p <= lim,
        )
    }
}

impl DerivedExponents {
    /// γ_p + γ_q, the fiber exponent of the coupling term.
    pub fn gamma_sum(&self) -> f64 {
        self.gamma_p + self.gamma_q
    }

    /// 2·2*_μ, the fiber exponent of the critical term.
    pub fn double_two_star(&self) -> f64 {
        2.0 * self.two_star_mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ProblemParams {
        ProblemParams { n: 3, mu: 1.0, p: 2.0, q: 2.0, nu: 0.1, a: 1.0, b: 1.0 }
    }

    #[test]
    fn classical_instance_exponents() {
        let d = base().validate().unwrap();
        assert_eq!(d.gamma_p, 0.5);
        assert_eq!(d.gamma_q, 0.5);
        assert_eq!(d.two_star_mu, 5.0);
        assert!((d.two_lower - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.mass_class, MassClass::Subcritical);
    }

    #[test]
    fn mass_critical_band() {
        // N=3, mu=1: critical sum p+q = 4 + 2/3; p=q=(4+2/3)/2 = 7/3
        let p = ProblemParams { p: 7.0 / 3.0, q: 7.0 / 3.0, ..base() };
        let d = p.validate().unwrap();
        assert_eq!(d.mass_class, MassClass::Critical);
        assert!((d.gamma_sum() - 2.0).abs() < 1e-12);

        let p = ProblemParams { p: 7.0 / 3.0 + 1e-9, q: 7.0 / 3.0, ..base() };
        assert_eq!(p.validate().unwrap().mass_class, MassClass::Supercritical);
        let p = ProblemParams { p: 7.0 / 3.0 - 1e-9, q: 7.0 / 3.0, ..base() };
        assert_eq!(p.validate().unwrap().mass_class, MassClass::Subcritical);
    }

    #[test]
    fn four_dimensional_thresholds() {
        // N=4, mu=2: critical sum is exactly 4; p=q=2.2 is supercritical
        let p = ProblemParams { n: 4, mu: 2.0, p: 2.2, q: 2.2, ..base() };
        let d = p.validate().unwrap();
        assert_eq!(d.mass_class, MassClass::Supercritical);
        assert!((d.two_star_mu - 3.0).abs() < 1e-15);
        assert!((d.two_lower - 1.5).abs() < 1e-15);
        // gamma identity: gamma_p + gamma_q - 2 = (N(p+q-4)+2mu)/2 - 2
        assert!((d.gamma_sum() - (4.0 * 0.4 + 4.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn window_violations_name_the_bound() {
        let p = ProblemParams { p: 1.0, ..base() };
        match p.validate() {
            Err(ParamError::ExponentAtOrBelowLower { name: "p", .. }) => {}
            other => panic!("expected lower-bound rejection, got {other:?}"),
        }
        let p = ProblemParams { q: 5.0, ..base() };
        match p.validate() {
            Err(ParamError::ExponentAtOrAboveUpper { name: "q", .. }) => {}
            other => panic!("expected upper-bound rejection, got {other:?}"),
        }
    }

    #[test]
    fn mu_must_sit_inside_zero_n() {
        for mu in [0.0, -1.0, 3.0, 3.5] {
            let p = ProblemParams { mu, ..base() };
            assert!(matches!(p.validate(), Err(ParamError::MuOutOfRange { .. })));
        }
    }

    #[test]
    fn masses_positive_and_finite() {
        let p = ProblemParams { a: 0.0, ..base() };
        assert!(matches!(p.validate(), Err(ParamError::NonpositiveMass { name: "a", .. })));
        let p = ProblemParams { nu: f64::NAN, ..base() };
        assert_eq!(p.validate(), Err(ParamError::NonFinite("nu")));
    }

    #[test]
    fn n5_flags_are_advisory() {
        let p = ProblemParams { n: 5, mu: 3.0, p: 1.6, q: 1.6, nu: 0.1, a: 1.0, b: 1.0 };
        p.validate().unwrap();
        let (f1, f2) = p.n5_exponent_flags();
        // (3/2)*1.6 + (5/2)*1.6 = 6.4 <= 10 - 3 = 7
        assert!(f1 && f2);
    }

    #[test]
    fn config_json_round_trip_uses_uppercase_n() {
        let p = base();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"N\":3"));
        let back: ProblemParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
