//! Laws of the additive perturbation θ, selected by name at runtime.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::numeric::{bisect, CompositeRule};

pub const DEFAULT_TRUNCATION: f64 = 8.0;

/// A probability law on the real line with compact support.
pub trait PerturbationLaw: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    /// Density with respect to Lebesgue measure; zero for atomic laws.
    fn density(&self, theta: f64) -> f64;
    /// Closed interval carrying all the mass.
    fn support(&self) -> (f64, f64);
    /// `P(Θ < t)`.
    fn cdf_left(&self, t: f64) -> f64;
    /// Smallest `t` with `P(Θ ≤ t) ≥ p`.
    fn quantile(&self, p: f64) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    /// Nodes and weights approximating `∫ g dPr_Θ`, using `2·order` panels
    /// of an `order`-point Gauss–Legendre rule over the support. Weights are
    /// rescaled to sum to one so that constants integrate exactly.
    fn quadrature(&self, order: usize) -> CompositeRule {
        let (a, b) = self.support();
        let mut rule = CompositeRule::new(a, b, order, 2 * order);
        for (w, &x) in rule.weights.iter_mut().zip(&rule.nodes) {
            *w *= self.density(x);
        }
        let total: f64 = rule.weights.iter().sum();
        rule.weights.iter_mut().for_each(|w| *w /= total);
        rule
    }
}

/// User-facing description of a law. Only the fields relevant to `law` may
/// be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl PerturbationSpec {
    fn blank(law: &str) -> Self {
        Self {
            law: law.into(),
            mean: None,
            std: None,
            truncation: None,
            a: None,
            b: None,
            value: None,
        }
    }

    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self {
            mean: Some(mean),
            std: Some(std),
            ..Self::blank("gaussian")
        }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        Self {
            a: Some(a),
            b: Some(b),
            ..Self::blank("uniform")
        }
    }

    /// A point mass, used for deterministic test modes.
    pub fn fixed(value: f64) -> Self {
        Self {
            value: Some(value),
            ..Self::blank("fixed")
        }
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.truncation = Some(t);
        self
    }

    pub fn build(&self) -> Result<Box<dyn PerturbationLaw>, ModelError> {
        registry().build(self)
    }

    fn fields(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("mean", self.mean),
            ("std", self.std),
            ("truncation", self.truncation),
            ("a", self.a),
            ("b", self.b),
            ("value", self.value),
        ]
    }

    fn only(&self, allowed: &[&str]) -> Result<(), ModelError> {
        for (name, v) in self.fields() {
            if v.is_some() && !allowed.contains(&name) {
                return Err(ModelError::Invalid(format!(
                    "perturbation.{name} is not a parameter of law `{}`",
                    self.law
                )));
            }
        }
        Ok(())
    }

    fn require(&self, name: &str, v: Option<f64>) -> Result<f64, ModelError> {
        v.filter(|x| x.is_finite()).ok_or_else(|| {
            ModelError::Invalid(format!(
                "perturbation.{name} required for law `{}`",
                self.law
            ))
        })
    }
}

type Factory = fn(&PerturbationSpec) -> Result<Box<dyn PerturbationLaw>, ModelError>;

/// Name → constructor table for perturbation laws.
pub struct LawRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl LawRegistry {
    pub fn with_builtins() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("gaussian", Gaussian::from_spec);
        r.register("uniform", Uniform::from_spec);
        r.register("fixed", Fixed::from_spec);
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, spec: &PerturbationSpec) -> Result<Box<dyn PerturbationLaw>, ModelError> {
        let factory = self.factories.get(spec.law.as_str()).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            ModelError::Invalid(format!(
                "unknown perturbation law `{}` (known: {})",
                spec.law,
                known.join(", ")
            ))
        })?;
        factory(spec)
    }
}

pub fn registry() -> &'static LawRegistry {
    static REG: OnceLock<LawRegistry> = OnceLock::new();
    REG.get_or_init(LawRegistry::with_builtins)
}

/// Standard normal CDF.
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Normal law conditioned on `|θ − mean| ≤ truncation·std`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: f64,
    std: f64,
    truncation: f64,
    mass: f64,
    normal: Normal<f64>,
}

impl Gaussian {
    pub fn new(mean: f64, std: f64, truncation: f64) -> Result<Self, ModelError> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(ModelError::Invalid(
                "perturbation.std must be positive".into(),
            ));
        }
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(ModelError::Invalid(
                "perturbation.truncation must be positive".into(),
            ));
        }
        let mass = std_normal_cdf(truncation) - std_normal_cdf(-truncation);
        let normal = Normal::new(mean, std).map_err(|e| ModelError::Invalid(e.to_string()))?;
        Ok(Self {
            mean,
            std,
            truncation,
            mass,
            normal,
        })
    }

    fn from_spec(s: &PerturbationSpec) -> Result<Box<dyn PerturbationLaw>, ModelError> {
        s.only(&["mean", "std", "truncation"])?;
        let mean = s.mean.unwrap_or(0.0);
        let std = s.require("std", s.std)?;
        Ok(Box::new(Self::new(
            mean,
            std,
            s.truncation.unwrap_or(DEFAULT_TRUNCATION),
        )?))
    }
}

impl PerturbationLaw for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn density(&self, theta: f64) -> f64 {
        let z = (theta - self.mean) / self.std;
        if z.abs() > self.truncation {
            return 0.0;
        }
        (-0.5 * z * z).exp() / (self.std * (2.0 * std::f64::consts::PI).sqrt() * self.mass)
    }

    fn support(&self) -> (f64, f64) {
        let h = self.truncation * self.std;
        (self.mean - h, self.mean + h)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        let z = ((t - self.mean) / self.std).clamp(-self.truncation, self.truncation);
        // the left tail is evaluated directly so small probabilities keep
        // their relative accuracy
        ((std_normal_cdf(z) - std_normal_cdf(-self.truncation)) / self.mass).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.support();
        if p <= 0.0 {
            return a;
        }
        if p >= 1.0 {
            return b;
        }
        bisect(
            |t| self.cdf_left(t) - p,
            a,
            b,
            1e-15 * (1.0 + b.abs().max(a.abs())),
        )
        .unwrap_or(self.mean)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let h = self.truncation * self.std;
        loop {
            let x = self.normal.sample(rng);
            if (x - self.mean).abs() <= h {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Uniform {
    a: f64,
    b: f64,
}

impl Uniform {
    pub fn new(a: f64, b: f64) -> Result<Self, ModelError> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(ModelError::Invalid(
                "uniform perturbation needs a < b".into(),
            ));
        }
        Ok(Self { a, b })
    }

    fn from_spec(s: &PerturbationSpec) -> Result<Box<dyn PerturbationLaw>, ModelError> {
        s.only(&["a", "b"])?;
        Ok(Box::new(Self::new(
            s.require("a", s.a)?,
            s.require("b", s.b)?,
        )?))
    }
}

impl PerturbationLaw for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn density(&self, theta: f64) -> f64 {
        if theta >= self.a && theta <= self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        ((t - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.a + p.clamp(0.0, 1.0) * (self.b - self.a)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.a + rng.random::<f64>() * (self.b - self.a)
    }
}

/// Point mass at `value`.
#[derive(Debug, Clone)]
pub struct Fixed {
    value: f64,
}

impl Fixed {
    pub fn new(value: f64) -> Self {
        Self { value }
    }

    fn from_spec(s: &PerturbationSpec) -> Result<Box<dyn PerturbationLaw>, ModelError> {
        s.only(&["value"])?;
        Ok(Box::new(Self::new(s.value.unwrap_or(0.0))))
    }
}

impl PerturbationLaw for Fixed {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn density(&self, _theta: f64) -> f64 {
        0.0
    }

    fn support(&self) -> (f64, f64) {
        (self.value, self.value)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t > self.value {
            1.0
        } else {
            0.0
        }
    }

    fn quantile(&self, _p: f64) -> f64 {
        self.value
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
        self.value
    }

    fn quadrature(&self, _order: usize) -> CompositeRule {
        CompositeRule::point(self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn registry_knows_builtins() {
        let names: Vec<_> = registry().names().collect();
        assert_eq!(names, vec!["fixed", "gaussian", "uniform"]);
        let err = PerturbationSpec::blank("cauchy").build().unwrap_err();
        assert!(err.to_string().contains("cauchy"));
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let mut s = PerturbationSpec::gaussian(0.0, 1.0);
        s.a = Some(1.0);
        assert!(s.build().is_err());
        assert!(PerturbationSpec::blank("gaussian").build().is_err());
    }

    #[test]
    fn truncated_gaussian_quadrature_has_unit_mass() {
        let law = PerturbationSpec::gaussian(0.2, 0.5).build().unwrap();
        for order in [2, 4, 8, 16] {
            let q = law.quadrature(order);
            assert_eq!(q.len(), 2 * order * order);
            let mass: f64 = q.weights.iter().sum();
            assert!((mass - 1.0).abs() < 1e-14, "order {order}: {mass}");
        }
        let q = law.quadrature(16);
        let mean: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| x * w).sum();
        assert!((mean - 0.2).abs() < 1e-13);
        let var: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| (x - 0.2).powi(2) * w)
            .sum();
        assert!((var - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_quantile_invert() {
        let law = PerturbationSpec::gaussian(0.0, 0.5)
            .with_truncation(3.0)
            .build()
            .unwrap();
        assert_eq!(law.cdf_left(-10.0), 0.0);
        assert_eq!(law.cdf_left(10.0), 1.0);
        assert!((law.cdf_left(0.0) - 0.5).abs() < 1e-15);
        for p in [1e-6, 0.1, 0.37, 0.5, 0.9, 0.999] {
            assert!((law.cdf_left(law.quantile(p)) - p).abs() < 1e-13);
        }
        let u = PerturbationSpec::uniform(-1.0, 3.0).build().unwrap();
        assert_eq!(u.quantile(0.25), 0.0);
        assert_eq!(u.cdf_left(1.0), 0.5);
    }

    #[test]
    fn samples_stay_in_support() {
        let law = PerturbationSpec::gaussian(1.0, 2.0)
            .with_truncation(1.0)
            .build()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = law.support();
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let x = law.sample(&mut rng);
            assert!(x >= a && x <= b);
            sum += x;
        }
        assert!((sum / 10_000.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn point_mass_behaves() {
        let law = PerturbationSpec::fixed(0.3).build().unwrap();
        let q = law.quadrature(5);
        assert_eq!((q.nodes.clone(), q.weights.clone()), (vec![0.3], vec![1.0]));
        assert_eq!(law.cdf_left(0.3), 0.0);
        assert_eq!(law.cdf_left(0.30001), 1.0);
    }
}
