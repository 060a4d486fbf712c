//! The continuous problem: coefficients, history function and the derived
//! coercivity constants β and δ.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Number of uniform sample points used to estimate β and δ on `[0, 2]`.
pub const CONSTANT_SAMPLES: usize = 10_000;

/// Step of the central difference used for `b′` when no derivative is given.
const DIFF_STEP: f64 = 1e-6;

/// A smooth real coefficient on the domain. Constants are kept apart so that
/// closed-form computations (asymptotics, Green's functions) can detect them.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Function(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            Coefficient::Function(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

/// Order of the second pair of boundary conditions, `u⁽ᵐ⁾(0) = u⁽ᵐ⁾(2) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BcOrder {
    /// Clamped beam, `u′ = 0` at the ends. Imposed weakly.
    #[serde(rename = "1")]
    One,
    /// Simply supported beam, `u″ = 0` at the ends, i.e. `w = 0`.
    #[serde(rename = "2")]
    Two,
}

impl BcOrder {
    pub fn from_int(m: u32) -> Result<Self> {
        match m {
            1 => Ok(BcOrder::One),
            2 => Ok(BcOrder::Two),
            _ => Err(Error::InvalidInput(format!("m must be 1 or 2, got {m}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            BcOrder::One => 1,
            BcOrder::Two => 2,
        }
    }
}

/// Problem data. Immutable once built; β and δ are derived on construction.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub epsilon: f64,
    pub m: BcOrder,
    pub b: Coefficient,
    /// Derivative of `b`. `None` means: zero for constant `b`, central
    /// differences otherwise.
    pub b_prime: Option<Coefficient>,
    pub c: Coefficient,
    pub d: Coefficient,
    pub f: Coefficient,
    pub phi: Coefficient,
    pub beta: f64,
    pub delta: f64,
}

/// Coefficient bundle before the constants are derived.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub b: Coefficient,
    pub b_prime: Option<Coefficient>,
    pub c: Coefficient,
    pub d: Coefficient,
    pub f: Coefficient,
    pub phi: Coefficient,
}

impl Coefficients {
    pub fn constant(b: f64, c: f64, d: f64, f: f64) -> Self {
        Coefficients {
            b: b.into(),
            b_prime: None,
            c: c.into(),
            d: d.into(),
            f: f.into(),
            phi: 0.0.into(),
        }
    }

    pub fn b_prime_at(&self, x: f64) -> f64 {
        b_prime_of(&self.b, self.b_prime.as_ref(), x)
    }
}

fn b_prime_of(b: &Coefficient, b_prime: Option<&Coefficient>, x: f64) -> f64 {
    match (b_prime, b) {
        (Some(db), _) => db.eval(x),
        (None, Coefficient::Constant(_)) => 0.0,
        (None, Coefficient::Function(f)) => (f(x + DIFF_STEP) - f(x - DIFF_STEP)) / (2.0 * DIFF_STEP),
    }
}

/// Estimates `β = sqrt(min b)` and
/// `δ = min c − ‖d‖_{L∞(1,2)}/2 − ‖b′‖²_{L∞}/(2β²)` by sampling on a uniform
/// grid of [`CONSTANT_SAMPLES`] points. The minimum of `c` is used for
/// variable `c`.
pub fn derive_constants(coef: &Coefficients) -> Result<(f64, f64)> {
    derive_constants_sampled(coef, CONSTANT_SAMPLES)
}

pub fn derive_constants_sampled(coef: &Coefficients, samples: usize) -> Result<(f64, f64)> {
    let samples = samples.max(2);
    let mut b_min = f64::INFINITY;
    let mut c_min = f64::INFINITY;
    let mut db_max: f64 = 0.0;
    let mut d_max: f64 = 0.0;
    for i in 0..samples {
        let x = 2.0 * i as f64 / (samples - 1) as f64;
        b_min = b_min.min(coef.b.eval(x));
        c_min = c_min.min(coef.c.eval(x));
        db_max = db_max.max(coef.b_prime_at(x).abs());
        if x >= 1.0 {
            d_max = d_max.max(coef.d.eval(x).abs());
        }
    }
    if !(b_min > 0.0) {
        return Err(Error::Assumption(format!("min b = {b_min} is not positive")));
    }
    let beta2 = b_min;
    let delta = c_min - 0.5 * d_max - db_max * db_max / (2.0 * beta2);
    if !(delta > 0.0) {
        return Err(Error::Assumption(format!("coercivity constant δ = {delta} is not positive")));
    }
    Ok((beta2.sqrt(), delta))
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, epsilon: f64, m: BcOrder, coef: Coefficients) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("ε must be positive, got {epsilon}")));
        }
        let (beta, delta) = derive_constants(&coef)?;
        let spec = ProblemSpec {
            name: name.into(),
            epsilon,
            m,
            b: coef.b,
            b_prime: coef.b_prime,
            c: coef.c,
            d: coef.d,
            f: coef.f,
            phi: coef.phi,
            beta,
            delta,
        };
        spec.check_history_compatibility()?;
        Ok(spec)
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            b: self.b.clone(),
            b_prime: self.b_prime.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            f: self.f.clone(),
            phi: self.phi.clone(),
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("ε must be positive, got {epsilon}")));
        }
        Ok(ProblemSpec { epsilon, ..self.clone() })
    }

    pub fn with_m(&self, m: BcOrder) -> Result<Self> {
        let spec = ProblemSpec { m, ..self.clone() };
        spec.check_history_compatibility()?;
        Ok(spec)
    }

    /// Replaces the coefficients and re-derives β, δ.
    pub fn with_coefficients(&self, coef: Coefficients) -> Result<Self> {
        ProblemSpec::new(self.name.clone(), self.epsilon, self.m, coef)
    }

    #[inline]
    pub fn b_prime_at(&self, x: f64) -> f64 {
        b_prime_of(&self.b, self.b_prime.as_ref(), x)
    }

    /// History function Φ, defined on `[-1, 0]` only.
    pub fn history(&self, x: f64) -> Result<f64> {
        if !(-1.0..=0.0).contains(&x) {
            return Err(Error::HistoryDomain(x));
        }
        Ok(self.phi.eval(x))
    }

    /// True when `b, c, d, f` and Φ are all constants.
    pub fn is_constant_coefficient(&self) -> bool {
        self.b.is_constant() && self.c.is_constant() && self.d.is_constant() && self.f.is_constant()
    }

    /// Re-checks the sampled invariants `b ≥ β²` and
    /// `c − ‖d‖/2 − ‖b′‖²/(2β²) ≥ δ` together with the history compatibility.
    pub fn validate(&self) -> Result<()> {
        let (beta, delta) = derive_constants(&self.coefficients())?;
        let tol = 1e-12 * (1.0 + beta.abs() + delta.abs());
        if beta + tol < self.beta || delta + tol < self.delta {
            return Err(Error::Assumption(format!(
                "stored constants β = {}, δ = {} exceed sampled bounds β = {beta}, δ = {delta}",
                self.beta, self.delta
            )));
        }
        self.check_history_compatibility()
    }

    /// `Φ(0) = 0` and `Φ⁽ᵐ⁾(0) = 0`, the latter checked with a one-sided
    /// difference quotient.
    fn check_history_compatibility(&self) -> Result<()> {
        let phi0 = self.history(0.0)?;
        let h = 1e-4;
        let deriv = match self.m {
            BcOrder::One => (3.0 * phi0 - 4.0 * self.history(-h)? + self.history(-2.0 * h)?) / (2.0 * h),
            BcOrder::Two => {
                (2.0 * phi0 - 5.0 * self.history(-h)? + 4.0 * self.history(-2.0 * h)? - self.history(-3.0 * h)?)
                    / (h * h)
            }
        };
        let scale = 1.0 + (0..=10).map(|i| self.phi.eval(-0.1 * i as f64).abs()).fold(0.0, f64::max);
        if phi0.abs() > 1e-12 * scale || deriv.abs() > 1e-4 * scale {
            return Err(Error::Assumption(format!(
                "history function is incompatible: Φ(0) = {phi0}, Φ^(m)(0) ≈ {deriv}"
            )));
        }
        Ok(())
    }
}

/// `ε² u⁗ − u″ + 2u + u(x−1) = 5`, `u = u′ = 0` at both ends, `Φ ≡ 0`.
pub fn make_example1(epsilon: f64) -> Result<ProblemSpec> {
    ProblemSpec::new("ex1", epsilon, BcOrder::One, Coefficients::constant(1.0, 2.0, 1.0, 5.0))
}

/// Same equation as [`make_example1`] with `u = u″ = 0` at both ends.
pub fn make_example2(epsilon: f64) -> Result<ProblemSpec> {
    ProblemSpec::new("ex2", epsilon, BcOrder::Two, Coefficients::constant(1.0, 2.0, 1.0, 5.0))
}

/// Looks up a benchmark by name (`ex1`, `ex2`).
pub fn example_by_name(name: &str, epsilon: f64) -> Result<ProblemSpec> {
    match name {
        "ex1" => make_example1(epsilon),
        "ex2" => make_example2(epsilon),
        other => Err(Error::config("example", format!("unknown example `{other}` (expected ex1 or ex2)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_coefficients() {
        let p = make_example1(1e-4).unwrap();
        assert_eq!(p.m, BcOrder::One);
        assert_eq!(p.b.eval(0.3), 1.0);
        assert_eq!(p.f.eval(1.7), 5.0);
        assert_eq!(p.history(-0.5).unwrap(), 0.0);
        let q = make_example2(1e-4).unwrap();
        assert_eq!(q.m, BcOrder::Two);
        for x in [0.1, 0.9, 1.3] {
            assert_eq!(p.b.eval(x), q.b.eval(x));
            assert_eq!(p.c.eval(x), q.c.eval(x));
            assert_eq!(p.d.eval(x), q.d.eval(x));
            assert_eq!(p.f.eval(x), q.f.eval(x));
        }
    }

    #[test]
    fn constants_of_constant_coefficients() {
        let (beta, delta) = derive_constants(&Coefficients::constant(1.0, 2.0, 1.0, 5.0)).unwrap();
        assert_eq!(beta, 1.0);
        assert_eq!(delta, 1.5);
        let (beta, delta) = derive_constants(&Coefficients::constant(4.0, 3.0, 0.0, 1.0)).unwrap();
        assert_eq!(beta, 2.0);
        assert_eq!(delta, 3.0);
    }

    #[test]
    fn constants_of_variable_b_match_dense_sampling() {
        let coef = Coefficients {
            b: Coefficient::function(|x| 1.0 + x / 4.0),
            b_prime: None,
            c: 5.0.into(),
            d: 1.0.into(),
            f: 1.0.into(),
            phi: 0.0.into(),
        };
        let (beta, delta) = derive_constants(&coef).unwrap();
        let (beta_dense, delta_dense) = derive_constants_sampled(&coef, 1_000_000).unwrap();
        assert!((beta - 1.0).abs() < 1e-14);
        // b′ = 1/4, so δ = 5 − 1/2 − (1/16)/2
        assert!((delta - 4.46875).abs() < 1e-8, "{delta}");
        assert!((delta - delta_dense).abs() < 1e-8);
        assert!((beta - beta_dense).abs() < 1e-12);
    }

    #[test]
    fn rejects_problems_outside_assumptions() {
        assert!(matches!(
            derive_constants(&Coefficients::constant(1.0, 0.4, 1.0, 1.0)),
            Err(Error::Assumption(_))
        ));
        assert!(matches!(
            derive_constants(&Coefficients::constant(0.0, 2.0, 1.0, 1.0)),
            Err(Error::Assumption(_))
        ));
        assert!(make_example1(0.0).is_err());
    }

    #[test]
    fn history_is_only_defined_on_minus_one_to_zero() {
        let p = make_example1(1e-2).unwrap();
        assert!(p.history(-1.0).is_ok());
        assert!(matches!(p.history(0.1), Err(Error::HistoryDomain(_))));
        assert!(matches!(p.history(-1.5), Err(Error::HistoryDomain(_))));
    }

    #[test]
    fn incompatible_history_is_rejected() {
        let mut coef = Coefficients::constant(1.0, 2.0, 1.0, 5.0);
        coef.phi = Coefficient::function(|x| x);
        assert!(ProblemSpec::new("bad", 1e-2, BcOrder::One, coef.clone()).is_err());
        // Φ(x) = x satisfies Φ(0) = Φ″(0) = 0, so m = 2 accepts it.
        assert!(ProblemSpec::new("ok", 1e-2, BcOrder::Two, coef).is_ok());
    }

    #[test]
    fn validate_examples_over_epsilon_range() {
        for eps in [1.0, 0.5, 1e-2, 1e-4, 1e-8] {
            make_example1(eps).unwrap().validate().unwrap();
            make_example2(eps).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn delta_is_monotone_in_c() {
        let base = |shift: f64| Coefficients {
            b: Coefficient::function(|x| 1.0 + 0.1 * x),
            b_prime: None,
            c: Coefficient::function(move |x| 2.0 + shift + 0.3 * (3.0 * x).sin()),
            d: 1.0.into(),
            f: 1.0.into(),
            phi: 0.0.into(),
        };
        let mut prev = derive_constants(&base(0.0)).unwrap().1;
        for k in 1..5 {
            let next = derive_constants(&base(0.25 * k as f64)).unwrap().1;
            assert!(next >= prev);
            prev = next;
        }
    }
}
