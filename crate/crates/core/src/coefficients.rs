//! Scalar coefficient functions of the energy density and the rules that
//! relate them.
//!
//! A [`ScalarFamily`] is a small expression tree in the variable `t`. Trees
//! evaluate on any [`Scalar`], so coefficients flow through AD along with the
//! rest of the geometry, and they differentiate symbolically, which is how
//! primes such as `a₁′` and the para-Kähler rule `μ = λ′` are formed.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ad::{Dual, Scalar};
use crate::error::{Error, Result};

/// Number of grid points used to validate coefficient conditions.
pub const GRID_POINTS: usize = 64;
/// Magnitude below which a denominator counts as vanishing.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;
/// Tolerance for the almost-product identities on the grid.
pub const ALMOST_PRODUCT_TOL: f64 = 1e-10;
pub const DEFAULT_T_MAX: f64 = 2.0;

#[derive(Debug, PartialEq)]
enum Node {
    Const(f64),
    T,
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Neg(Arc<Node>),
    Exp(Arc<Node>),
    Powi(Arc<Node>, i32),
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(v) => Some(*v),
        _ => None,
    }
}

// Smart constructors fold the trivial cases so derivative trees stay small.
fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Arc::new(Node::Const(x + y)),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Arc::new(Node::Add(a, b)),
    }
}

fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Arc::new(Node::Const(x - y)),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Arc::new(Node::Sub(a, b)),
    }
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Arc::new(Node::Const(x * y)),
        (Some(0.0), _) | (_, Some(0.0)) => Arc::new(Node::Const(0.0)),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Arc::new(Node::Mul(a, b)),
    }
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Arc::new(Node::Const(x / y)),
        (Some(0.0), _) => Arc::new(Node::Const(0.0)),
        (_, Some(1.0)) => a,
        _ => Arc::new(Node::Div(a, b)),
    }
}

fn neg(a: Arc<Node>) -> Arc<Node> {
    match &*a {
        Node::Const(x) => Arc::new(Node::Const(-x)),
        Node::Neg(inner) => inner.clone(),
        _ => Arc::new(Node::Neg(a)),
    }
}

fn constant(v: f64) -> Arc<Node> {
    Arc::new(Node::Const(v))
}

impl Node {
    fn eval<S: Scalar>(&self, t: S) -> S {
        match self {
            Node::Const(v) => S::from_f64(*v),
            Node::T => t,
            Node::Add(a, b) => a.eval(t) + b.eval(t),
            Node::Sub(a, b) => a.eval(t) - b.eval(t),
            Node::Mul(a, b) => a.eval(t) * b.eval(t),
            Node::Div(a, b) => a.eval(t) / b.eval(t),
            Node::Neg(a) => -a.eval(t),
            Node::Exp(a) => a.eval(t).exp(),
            Node::Powi(a, k) => a.eval(t).powi(*k),
        }
    }

    fn derivative(self: &Arc<Self>) -> Arc<Node> {
        match &**self {
            Node::Const(_) => constant(0.0),
            Node::T => constant(1.0),
            Node::Add(a, b) => add(a.derivative(), b.derivative()),
            Node::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Node::Mul(a, b) => add(
                mul(a.derivative(), b.clone()),
                mul(a.clone(), b.derivative()),
            ),
            Node::Div(a, b) => sub(
                div(a.derivative(), b.clone()),
                div(
                    mul(a.clone(), b.derivative()),
                    Arc::new(Node::Powi(b.clone(), 2)),
                ),
            ),
            Node::Neg(a) => neg(a.derivative()),
            Node::Exp(a) => mul(self.clone(), a.derivative()),
            Node::Powi(a, k) => match k {
                0 => constant(0.0),
                1 => a.derivative(),
                _ => mul(
                    mul(constant(*k as f64), Arc::new(Node::Powi(a.clone(), k - 1))),
                    a.derivative(),
                ),
            },
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => write!(f, "{v}"),
            Node::T => write!(f, "t"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Powi(a, k) => write!(f, "{a}^{k}"),
        }
    }
}

/// Smooth function of the energy density `t` with exact derivatives.
#[derive(Clone, Debug)]
pub struct ScalarFamily {
    node: Arc<Node>,
    description: Option<String>,
}

impl ScalarFamily {
    fn from_node(node: Arc<Node>) -> Self {
        Self {
            node,
            description: None,
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::from_node(constant(v))
    }

    /// The identity `t ↦ t`.
    pub fn t() -> Self {
        Self::from_node(Arc::new(Node::T))
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::constant(intercept) + Self::constant(slope) * Self::t()
    }

    /// `scale · exp(rate · t)`.
    pub fn exponential(scale: f64, rate: f64) -> Self {
        let arg = mul(constant(rate), Arc::new(Node::T));
        Self::from_node(mul(constant(scale), Arc::new(Node::Exp(arg))))
    }

    /// `Σ coeffs[k] t^k`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let node = coeffs
            .iter()
            .enumerate()
            .fold(constant(0.0), |acc, (k, &c)| {
                let term = match k {
                    0 => constant(c),
                    1 => mul(constant(c), Arc::new(Node::T)),
                    _ => mul(
                        constant(c),
                        Arc::new(Node::Powi(Arc::new(Node::T), k as i32)),
                    ),
                };
                add(acc, term)
            });
        Self::from_node(node)
    }

    pub fn exp(&self) -> Self {
        Self::from_node(Arc::new(Node::Exp(self.node.clone())))
    }

    pub fn powi(&self, k: i32) -> Self {
        Self::from_node(Arc::new(Node::Powi(self.node.clone(), k)))
    }

    pub fn recip(&self) -> Self {
        Self::constant(1.0) / self
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = Some(d.into());
        self
    }

    pub fn description(&self) -> String {
        self.description
            .clone()
            .unwrap_or_else(|| self.node.to_string())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.node.eval(t)
    }

    /// First derivative by forward-mode AD.
    pub fn deriv(&self, t: f64) -> f64 {
        self.node.eval(Dual::variable(t)).eps
    }

    pub fn eval_generic<S: Scalar>(&self, t: S) -> S {
        self.node.eval(t)
    }

    /// Symbolic derivative as a new family.
    pub fn derivative(&self) -> Self {
        Self::from_node(self.node.derivative())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::constant(factor) * self
    }

    /// Constant value if the tree folded to a literal.
    pub fn as_constant(&self) -> Option<f64> {
        as_const(&self.node)
    }
}

impl fmt::Display for ScalarFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description())
    }
}

macro_rules! family_binop {
    ($trait:ident, $method:ident, $build:ident) => {
        impl $trait<&ScalarFamily> for &ScalarFamily {
            type Output = ScalarFamily;
            fn $method(self, rhs: &ScalarFamily) -> ScalarFamily {
                ScalarFamily::from_node($build(self.node.clone(), rhs.node.clone()))
            }
        }
        impl $trait<ScalarFamily> for ScalarFamily {
            type Output = ScalarFamily;
            fn $method(self, rhs: ScalarFamily) -> ScalarFamily {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ScalarFamily> for ScalarFamily {
            type Output = ScalarFamily;
            fn $method(self, rhs: &ScalarFamily) -> ScalarFamily {
                (&self).$method(rhs)
            }
        }
        impl $trait<ScalarFamily> for &ScalarFamily {
            type Output = ScalarFamily;
            fn $method(self, rhs: ScalarFamily) -> ScalarFamily {
                self.$method(&rhs)
            }
        }
    };
}

family_binop!(Add, add, add);
family_binop!(Sub, sub, sub);
family_binop!(Mul, mul, mul);
family_binop!(Div, div, div);

impl Neg for &ScalarFamily {
    type Output = ScalarFamily;
    fn neg(self) -> ScalarFamily {
        ScalarFamily::from_node(neg(self.node.clone()))
    }
}

impl Neg for ScalarFamily {
    type Output = ScalarFamily;
    fn neg(self) -> ScalarFamily {
        -&self
    }
}

/// `64` uniformly spaced points in `[0, t_max]`.
pub fn grid(t_max: f64) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|k| t_max * k as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

/// Fails when `f` vanishes or changes sign on the validation grid.
pub fn ensure_nonvanishing(f: &ScalarFamily, name: &str, t_max: f64) -> Result<()> {
    let mut prev: Option<f64> = None;
    for t in grid(t_max) {
        let v = f.eval(t);
        let crossed = prev.is_some_and(|p| p.signum() != v.signum());
        if !v.is_finite() || v.abs() < DENOMINATOR_FLOOR || crossed {
            return Err(Error::DegenerateCoefficient {
                coefficient: name.to_string(),
                t,
            });
        }
        prev = Some(v);
    }
    Ok(())
}

fn ensure_positive(f: &ScalarFamily, name: &str, t_max: f64) -> Result<()> {
    for t in grid(t_max) {
        let v = f.eval(t);
        if v.is_nan() || v <= 0.0 {
            return Err(Error::CoefficientCondition {
                condition: format!("{name} > 0"),
                t,
                value: v,
            });
        }
    }
    Ok(())
}

/// `f + 2t·g`, the eigenvalue of `f·δ + g·p⊗p`-type tensors along `p`.
pub fn radial(f: &ScalarFamily, g: &ScalarFamily) -> ScalarFamily {
    f + ScalarFamily::constant(2.0) * ScalarFamily::t() * g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Epsilon {
    /// `G(PX, PY) = G(X, Y)`: Riemannian almost product.
    Plus,
    /// `G(PX, PY) = −G(X, Y)`: almost para-Hermitian.
    Minus,
}

impl Epsilon {
    pub fn as_f64(self) -> f64 {
        match self {
            Epsilon::Plus => 1.0,
            Epsilon::Minus => -1.0,
        }
    }
}

impl From<Epsilon> for i8 {
    fn from(e: Epsilon) -> i8 {
        match e {
            Epsilon::Plus => 1,
            Epsilon::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Epsilon {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Epsilon::Plus),
            -1 => Ok(Epsilon::Minus),
            _ => Err(format!("epsilon must be 1 or -1, got {v}")),
        }
    }
}

/// Coefficients of the almost product structure.
#[derive(Clone, Debug)]
pub struct PCoefficients {
    pub a1: ScalarFamily,
    pub b1: ScalarFamily,
    pub a2: ScalarFamily,
    pub b2: ScalarFamily,
}

/// Coefficients of the lifted metric.
#[derive(Clone, Debug)]
pub struct MetricCoefficients {
    pub c1: ScalarFamily,
    pub d1: ScalarFamily,
    pub c2: ScalarFamily,
    pub d2: ScalarFamily,
}

/// Solves `a₁a₂ = 1` and `(a₁ + 2tb₁)(a₂ + 2tb₂) = 1` for `(a₂, b₂)`.
pub fn complete_almost_product(
    a1: &ScalarFamily,
    b1: &ScalarFamily,
    t_max: f64,
) -> Result<(ScalarFamily, ScalarFamily)> {
    let radial1 = radial(a1, b1);
    ensure_nonvanishing(a1, "a1", t_max)?;
    ensure_nonvanishing(&radial1, "a1 + 2t b1", t_max)?;
    let a2 = a1.recip();
    let b2 = -(b1 / (a1 * &radial1));
    Ok((a2, b2))
}

/// The pair `(b₁, b₂)` that makes the structure integrable over a base of
/// constant curvature `c`:
///
/// `b₁ = (a₁a₁′ + c)/(a₁ − 2ta₁′)`, `b₂ = (a₁a₂′ − a₂²c)/(a₁ + 2cta₂)` with
/// `a₂ = 1/a₁`.
pub fn integrable_b_coeffs(
    a1: &ScalarFamily,
    c: f64,
    t_max: f64,
) -> Result<(ScalarFamily, ScalarFamily)> {
    ensure_nonvanishing(a1, "a1", t_max)?;
    let t = ScalarFamily::t();
    let two = ScalarFamily::constant(2.0);
    let cc = ScalarFamily::constant(c);
    let a2 = a1.recip();
    let a1p = a1.derivative();
    let a2p = a2.derivative();
    let den1 = a1 - &two * &t * &a1p;
    let den2 = a1 + &two * &cc * &t * &a2;
    ensure_nonvanishing(&den1, "a1 - 2t a1'", t_max)?;
    ensure_nonvanishing(&den2, "a1 + 2ct a2", t_max)?;
    let b1 = (a1 * &a1p + &cc) / den1;
    let b2 = (a1 * &a2p - a2.powi(2) * &cc) / den2;
    Ok((b1, b2))
}

/// Metric coefficients proportional to the structure:
/// `c₁ = λa₁`, `c₂ = ελa₂`, `c₁ + 2td₁ = (λ + 2tμ)(a₁ + 2tb₁)` and
/// `c₂ + 2td₂ = ε(λ + 2tμ)(a₂ + 2tb₂)`.
pub fn compatible_metric_coeffs(
    p: &PCoefficients,
    lambda: &ScalarFamily,
    mu: &ScalarFamily,
    epsilon: Epsilon,
    t_max: f64,
    enforce_positivity: bool,
) -> Result<MetricCoefficients> {
    if enforce_positivity {
        ensure_positive(lambda, "lambda", t_max)?;
        ensure_positive(&radial(lambda, mu), "lambda + 2t mu", t_max)?;
    }
    let t = ScalarFamily::t();
    let two = ScalarFamily::constant(2.0);
    let eps = ScalarFamily::constant(epsilon.as_f64());
    // d = ((λ + 2tμ)(a + 2tb) − λa)/(2t), expanded so t = 0 needs no limit
    let d_of = |a: &ScalarFamily, b: &ScalarFamily| mu * a + lambda * b + &two * &t * mu * b;
    let g = MetricCoefficients {
        c1: lambda * &p.a1,
        d1: d_of(&p.a1, &p.b1),
        c2: &eps * lambda * &p.a2,
        d2: &eps * d_of(&p.a2, &p.b2),
    };
    check_nondegenerate(&g, t_max)?;
    Ok(g)
}

/// `μ = λ′`.
pub fn para_kahler_mu(lambda: &ScalarFamily) -> ScalarFamily {
    lambda.derivative()
}

fn check_nondegenerate(g: &MetricCoefficients, t_max: f64) -> Result<()> {
    ensure_nonvanishing(&g.c1, "c1", t_max)?;
    ensure_nonvanishing(&g.c2, "c2", t_max)?;
    ensure_nonvanishing(&radial(&g.c1, &g.d1), "c1 + 2t d1", t_max)?;
    ensure_nonvanishing(&radial(&g.c2, &g.d2), "c2 + 2t d2", t_max)
}

/// Family with `a₁ = 1/β`, `b₁ = u/(αβ)`, and its almost-product completion
/// `a₂ = β`, `b₂ = −uβ/(α + 2tu)`.
pub fn alpha_beta_family(alpha: f64, beta: f64, u: &ScalarFamily) -> (ScalarFamily, ScalarFamily) {
    (
        ScalarFamily::constant(1.0 / beta),
        u / ScalarFamily::constant(alpha * beta),
    )
}

/// The `u` that makes the alpha-beta family integrable: `u = cαβ²`.
pub fn alpha_beta_integrable_u(alpha: f64, beta: f64, c: f64) -> ScalarFamily {
    ScalarFamily::constant(c * alpha * beta * beta)
}

/// Names of the individual coefficient families in a [`StructureSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    A1,
    B1,
    A2,
    B2,
    C1,
    D1,
    C2,
    D2,
    Lambda,
    Mu,
}

impl Coefficient {
    pub const ALL: [Coefficient; 10] = [
        Coefficient::A1,
        Coefficient::B1,
        Coefficient::A2,
        Coefficient::B2,
        Coefficient::C1,
        Coefficient::D1,
        Coefficient::C2,
        Coefficient::D2,
        Coefficient::Lambda,
        Coefficient::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::A1 => "a1",
            Coefficient::B1 => "b1",
            Coefficient::A2 => "a2",
            Coefficient::B2 => "b2",
            Coefficient::C1 => "c1",
            Coefficient::D1 => "d1",
            Coefficient::C2 => "c2",
            Coefficient::D2 => "d2",
            Coefficient::Lambda => "lambda",
            Coefficient::Mu => "mu",
        }
    }
}

/// Which derivation rules produced the coefficients of a spec.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `a₂, b₂` completed from `a₁, b₁`.
    pub almost_product: bool,
    /// `b₁, b₂` from the integrability formulas.
    pub integrable: bool,
    /// `c₁, d₁, c₂, d₂` from the proportionality relations.
    pub compatible: bool,
    /// `μ = λ′`.
    pub para_kahler_mu: bool,
    /// Positivity of `a₁, a₁ + 2tb₁, λ, λ + 2tμ` was enforced.
    pub positive: bool,
    /// Coefficients scaled after validation, as `(name, factor)`.
    pub perturbed: Vec<(Coefficient, f64)>,
}

/// Complete, validated coefficient bundle.
#[derive(Clone, Debug)]
pub struct StructureSpec {
    p: PCoefficients,
    g: MetricCoefficients,
    lambda: ScalarFamily,
    mu: ScalarFamily,
    epsilon: Epsilon,
    curvature: f64,
    t_max: f64,
    provenance: Provenance,
}

/// Evaluated coefficients at one energy density.
#[derive(Clone, Copy, Debug)]
pub struct CoefficientValues<S> {
    pub a1: S,
    pub b1: S,
    pub a2: S,
    pub b2: S,
    pub c1: S,
    pub d1: S,
    pub c2: S,
    pub d2: S,
    pub lambda: S,
    pub mu: S,
}

impl StructureSpec {
    /// Assembles a spec and validates the conditions its provenance claims.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: PCoefficients,
        g: MetricCoefficients,
        lambda: ScalarFamily,
        mu: ScalarFamily,
        epsilon: Epsilon,
        curvature: f64,
        t_max: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Contract(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        let spec = Self {
            p,
            g,
            lambda,
            mu,
            epsilon,
            curvature,
            t_max,
            provenance,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let grid = grid(self.t_max);
        if self.provenance.almost_product {
            for &t in &grid {
                let v = self.values(t);
                let first = v.a1 * v.a2 - 1.0;
                let second = (v.a1 + 2.0 * t * v.b1) * (v.a2 + 2.0 * t * v.b2) - 1.0;
                for (name, r) in [("a1 a2 = 1", first), ("(a1+2tb1)(a2+2tb2) = 1", second)] {
                    if r.is_nan() || r.abs() > ALMOST_PRODUCT_TOL {
                        return Err(Error::CoefficientCondition {
                            condition: name.into(),
                            t,
                            value: r,
                        });
                    }
                }
            }
        }
        if self.provenance.positive {
            ensure_positive(&self.p.a1, "a1", self.t_max)?;
            ensure_positive(&radial(&self.p.a1, &self.p.b1), "a1 + 2t b1", self.t_max)?;
            ensure_positive(&self.lambda, "lambda", self.t_max)?;
            ensure_positive(
                &radial(&self.lambda, &self.mu),
                "lambda + 2t mu",
                self.t_max,
            )?;
        }
        check_nondegenerate(&self.g, self.t_max)
    }

    pub fn coefficient(&self, which: Coefficient) -> &ScalarFamily {
        match which {
            Coefficient::A1 => &self.p.a1,
            Coefficient::B1 => &self.p.b1,
            Coefficient::A2 => &self.p.a2,
            Coefficient::B2 => &self.p.b2,
            Coefficient::C1 => &self.g.c1,
            Coefficient::D1 => &self.g.d1,
            Coefficient::C2 => &self.g.c2,
            Coefficient::D2 => &self.g.d2,
            Coefficient::Lambda => &self.lambda,
            Coefficient::Mu => &self.mu,
        }
    }

    fn coefficient_mut(&mut self, which: Coefficient) -> &mut ScalarFamily {
        match which {
            Coefficient::A1 => &mut self.p.a1,
            Coefficient::B1 => &mut self.p.b1,
            Coefficient::A2 => &mut self.p.a2,
            Coefficient::B2 => &mut self.p.b2,
            Coefficient::C1 => &mut self.g.c1,
            Coefficient::D1 => &mut self.g.d1,
            Coefficient::C2 => &mut self.g.c2,
            Coefficient::D2 => &mut self.g.d2,
            Coefficient::Lambda => &mut self.lambda,
            Coefficient::Mu => &mut self.mu,
        }
    }

    /// Copy with one coefficient multiplied by `factor`, skipping validation.
    /// Only the named family changes; derived families are not recomputed.
    pub fn perturbed(&self, which: Coefficient, factor: f64) -> Self {
        let mut out = self.clone();
        let scaled = out.coefficient(which).scaled(factor);
        *out.coefficient_mut(which) = scaled;
        out.provenance.perturbed.push((which, factor));
        out
    }

    pub fn p_part(&self) -> &PCoefficients {
        &self.p
    }

    pub fn metric_part(&self) -> &MetricCoefficients {
        &self.g
    }

    pub fn epsilon(&self) -> Epsilon {
        self.epsilon
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Para-Hermitian (`ε = −1`) with proportional metric coefficients.
    pub fn is_para_hermitian(&self) -> bool {
        self.epsilon == Epsilon::Minus && self.provenance.compatible
    }

    pub fn values_generic<S: Scalar>(&self, t: S) -> CoefficientValues<S> {
        CoefficientValues {
            a1: self.p.a1.eval_generic(t),
            b1: self.p.b1.eval_generic(t),
            a2: self.p.a2.eval_generic(t),
            b2: self.p.b2.eval_generic(t),
            c1: self.g.c1.eval_generic(t),
            d1: self.g.d1.eval_generic(t),
            c2: self.g.c2.eval_generic(t),
            d2: self.g.d2.eval_generic(t),
            lambda: self.lambda.eval_generic(t),
            mu: self.mu.eval_generic(t),
        }
    }

    pub fn values(&self, t: f64) -> CoefficientValues<f64> {
        self.values_generic(t)
    }
}

/// How `b₁` is obtained.
#[derive(Clone, Debug)]
pub enum BRule {
    Given(ScalarFamily),
    /// Integrability formulas for the recipe's curvature.
    Integrable,
}

/// Step-by-step construction of a [`StructureSpec`] from the essential
/// coefficients, applying the derivation rules in order.
#[derive(Clone, Debug)]
pub struct Recipe {
    pub a1: ScalarFamily,
    pub b1: BRule,
    pub curvature: f64,
    pub lambda: ScalarFamily,
    /// `None` means `μ = λ′`.
    pub mu: Option<ScalarFamily>,
    /// `None` means derived from the proportionality relations.
    pub metric: Option<MetricCoefficients>,
    pub epsilon: Epsilon,
    pub t_max: f64,
    pub enforce_positivity: bool,
}

impl Recipe {
    pub fn new(a1: ScalarFamily, b1: BRule) -> Self {
        Self {
            a1,
            b1,
            curvature: 0.0,
            lambda: ScalarFamily::constant(1.0),
            mu: None,
            metric: None,
            epsilon: Epsilon::Minus,
            t_max: DEFAULT_T_MAX,
            enforce_positivity: true,
        }
    }

    pub fn alpha_beta(alpha: f64, beta: f64, u: &ScalarFamily) -> Self {
        let (a1, b1) = alpha_beta_family(alpha, beta, u);
        Self::new(a1, BRule::Given(b1))
    }

    pub fn curvature(mut self, c: f64) -> Self {
        self.curvature = c;
        self
    }

    pub fn lambda(mut self, lambda: ScalarFamily) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn mu(mut self, mu: ScalarFamily) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn metric(mut self, g: MetricCoefficients) -> Self {
        self.metric = Some(g);
        self
    }

    pub fn epsilon(mut self, epsilon: Epsilon) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn enforce_positivity(mut self, on: bool) -> Self {
        self.enforce_positivity = on;
        self
    }

    pub fn build(&self) -> Result<StructureSpec> {
        let mut provenance = Provenance {
            almost_product: true,
            positive: self.enforce_positivity,
            ..Provenance::default()
        };
        let (b1, a2, b2) = match &self.b1 {
            BRule::Given(b1) => {
                let (a2, b2) = complete_almost_product(&self.a1, b1, self.t_max)?;
                (b1.clone(), a2, b2)
            }
            BRule::Integrable => {
                let (b1, b2) = integrable_b_coeffs(&self.a1, self.curvature, self.t_max)?;
                provenance.integrable = true;
                (b1, self.a1.recip(), b2)
            }
        };
        let p = PCoefficients {
            a1: self.a1.clone(),
            b1,
            a2,
            b2,
        };
        let mu = match &self.mu {
            Some(mu) => mu.clone(),
            None => {
                provenance.para_kahler_mu = true;
                para_kahler_mu(&self.lambda)
            }
        };
        let g = match &self.metric {
            Some(g) => g.clone(),
            None => {
                provenance.compatible = true;
                compatible_metric_coeffs(
                    &p,
                    &self.lambda,
                    &mu,
                    self.epsilon,
                    self.t_max,
                    self.enforce_positivity,
                )?
            }
        };
        StructureSpec::new(
            p,
            g,
            self.lambda.clone(),
            mu,
            self.epsilon,
            self.curvature,
            self.t_max,
            provenance,
        )
    }
}

/// Serializable description of a coefficient family preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
    Exponential { scale: f64, rate: f64 },
    Polynomial { coeffs: Vec<f64> },
}

impl FamilySpec {
    pub fn build(&self) -> ScalarFamily {
        match self {
            FamilySpec::Constant { value } => ScalarFamily::constant(*value),
            FamilySpec::Affine { intercept, slope } => ScalarFamily::affine(*intercept, *slope),
            FamilySpec::Exponential { scale, rate } => ScalarFamily::exponential(*scale, *rate),
            FamilySpec::Polynomial { coeffs } => ScalarFamily::polynomial(coeffs),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FamilySpec::Constant { value } => value.is_finite(),
            FamilySpec::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            FamilySpec::Exponential { scale, rate } => scale.is_finite() && rate.is_finite(),
            FamilySpec::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        }
    }
}

/// Preset names with a one-line description, for listings.
pub const FAMILY_PRESETS: [(&str, &str); 4] = [
    ("constant", "value"),
    ("affine", "intercept + slope*t"),
    ("exponential", "scale*exp(rate*t)"),
    ("polynomial", "sum coeffs[k]*t^k"),
];
