use serde::{Deserialize, Serialize};

use super::{ModelError, PerturbationSpec};
use crate::expr::{parse_expression, Expr};

/// The recurrence `X_{n+1} = Φ₀(X_{n-k+1}, …, X_n) + θ_n` reduced into
/// `[−L, L)`, with the constants that fix the embedding.
///
/// `x1` in `phi0` is the oldest value `X_{n-k+1}` and `xk` the newest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct ModelSpec {
    pub k: usize,
    pub l: f64,
    pub beta: f64,
    pub phi0: Expr,
    pub perturbation: PerturbationSpec,
    pub c1: f64,
    pub c2: f64,
    pub sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    k: usize,
    #[serde(rename = "L")]
    l: f64,
    beta: f64,
    phi0: String,
    perturbation: PerturbationSpec,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "C2")]
    c2: f64,
    sigma: f64,
}

impl TryFrom<SpecDoc> for ModelSpec {
    type Error = ModelError;

    fn try_from(d: SpecDoc) -> Result<Self, ModelError> {
        if d.k == 0 {
            return Err(ModelError::Invalid("k must be at least 1".into()));
        }
        let phi0 = parse_expression(&d.phi0, d.k)?;
        ModelSpec::new(d.k, d.l, d.beta, phi0, d.perturbation, d.c1, d.c2, d.sigma)
    }
}

impl From<ModelSpec> for SpecDoc {
    fn from(s: ModelSpec) -> Self {
        SpecDoc {
            k: s.k,
            l: s.l,
            beta: s.beta,
            phi0: s.phi0.source().to_string(),
            perturbation: s.perturbation,
            c1: s.c1,
            c2: s.c2,
            sigma: s.sigma,
        }
    }
}

impl ModelSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: usize,
        l: f64,
        beta: f64,
        phi0: Expr,
        perturbation: PerturbationSpec,
        c1: f64,
        c2: f64,
        sigma: f64,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            k,
            l,
            beta,
            phi0,
            perturbation,
            c1,
            c2,
            sigma,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Invalid(m.to_string()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.phi0.arity() != self.k {
            return bad("phi0 arity differs from k");
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return bad("L must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.c1 > 1.0 && self.c1.is_finite()) {
            return bad("C1 must exceed 1");
        }
        if !(self.c2 > 1.0 && self.c2.is_finite()) {
            return bad("C2 must exceed 1");
        }
        if !(self.sigma > 1.0 && self.sigma.is_finite()) {
            return bad("sigma must exceed 1");
        }
        self.perturbation.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_source() {
        let spec = ModelSpec::new(
            2,
            1.0,
            0.5,
            parse_expression("200*x1 + sin(x2)", 2).unwrap(),
            PerturbationSpec::gaussian(0.0, 0.5),
            1.1,
            1.1,
            150.0,
        )
        .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"phi0\":\"200*x1 + sin(x2)\""));
        assert!(text.contains("\"C1\":1.1"));
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_constants_are_named() {
        let mk = |c1: f64, sigma: f64| {
            ModelSpec::new(
                1,
                1.0,
                0.5,
                parse_expression("x1", 1).unwrap(),
                PerturbationSpec::fixed(0.0),
                c1,
                1.1,
                sigma,
            )
        };
        assert_eq!(
            mk(0.9, 2.0).unwrap_err(),
            ModelError::Invalid("C1 must exceed 1".into())
        );
        assert_eq!(
            mk(1.1, 1.0).unwrap_err(),
            ModelError::Invalid("sigma must exceed 1".into())
        );
    }
}
