//! Run configuration: JSON in, validated [`RunConfig`] out.
//!
//! Parsing walks the document field by field so that every problem is
//! reported with its path, not just the first one serde trips over. The
//! serialized form of a [`RunConfig`] is itself a valid config and parses
//! back to the same value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::coefficients::{
    alpha_beta_family, alpha_beta_integrable_u, BRule, Coefficient, Epsilon, FamilySpec,
    MetricCoefficients, Recipe, StructureSpec, DEFAULT_T_MAX,
};
use crate::lifted::{LiftedStructure, StructureKind};
use crate::spaceform::{Model, SpaceForm};
use crate::verify::{SamplerConfig, TOL_ALGEBRAIC, TOL_FIRST_DERIVATIVE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every validation error found in one document.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|e| e.path == path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    SpaceForm,
    AlmostProduct,
    Integrability,
    Compatibility,
    Closure,
    DomegaAgreement,
    ParaKahler,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::SpaceForm,
        CheckName::AlmostProduct,
        CheckName::Integrability,
        CheckName::Compatibility,
        CheckName::Closure,
        CheckName::DomegaAgreement,
        CheckName::ParaKahler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::SpaceForm => "space_form",
            CheckName::AlmostProduct => "almost_product",
            CheckName::Integrability => "integrability",
            CheckName::Compatibility => "compatibility",
            CheckName::Closure => "closure",
            CheckName::DomegaAgreement => "domega_agreement",
            CheckName::ParaKahler => "para_kahler",
        }
    }

    pub fn parse(name: &str) -> Option<CheckName> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckName::SpaceForm => 1e-9,
            CheckName::AlmostProduct | CheckName::Compatibility => TOL_ALGEBRAIC,
            _ => TOL_FIRST_DERIVATIVE,
        }
    }

    /// Needs `Ω`, hence an ε = −1 spec with a derived metric.
    fn needs_two_form(self) -> bool {
        matches!(
            self,
            CheckName::Closure | CheckName::DomegaAgreement | CheckName::ParaKahler
        )
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Flat,
    ConformalBall,
    PerturbedConformal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifoldConfig {
    pub model: ModelName,
    pub n: usize,
    pub c: f64,
    pub chart_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
}

impl ManifoldConfig {
    pub fn build(&self) -> crate::Result<SpaceForm> {
        let model = match self.model {
            ModelName::Flat => Model::Flat,
            ModelName::ConformalBall => Model::ConformalBall,
            ModelName::PerturbedConformal => Model::PerturbedConformal {
                strength: self.strength.unwrap_or(0.0),
            },
        };
        SpaceForm::new(self.n, self.c, model, self.chart_radius)
    }
}

/// A bare number in a family slot means a constant family.
#[derive(Clone, Debug, PartialEq)]
pub struct Family(pub FamilySpec);

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        family_from_value(v).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

fn family_from_value(v: Value) -> Result<Family, String> {
    let spec = match v {
        Value::Number(n) => FamilySpec::Constant {
            value: n.as_f64().ok_or("number out of range")?,
        },
        Value::Object(_) => serde_json::from_value(v).map_err(|e| e.to_string())?,
        other => return Err(format!("expected a number or a preset object, got {other}")),
    };
    if !spec.is_finite() {
        return Err("family parameters must be finite".into());
    }
    Ok(Family(spec))
}

/// A family slot that may instead hold a keyword.
#[derive(Clone, Debug, PartialEq)]
pub enum OrKeyword<const K: char> {
    Keyword,
    Family(Family),
}

impl<const K: char> OrKeyword<K> {
    fn keyword() -> &'static str {
        match K {
            'd' => "derived",
            'i' => "integrable",
            _ => unreachable!("unused keyword slot"),
        }
    }
}

impl<'de, const K: char> Deserialize<'de> for OrKeyword<K> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == Self::keyword() => Ok(OrKeyword::Keyword),
            Value::String(s) => Err(serde::de::Error::custom(format!(
                "unknown keyword `{s}`, expected `{}` or a family",
                Self::keyword()
            ))),
            v => family_from_value(v)
                .map(OrKeyword::Family)
                .map_err(serde::de::Error::custom),
        }
    }
}

impl<const K: char> Serialize for OrKeyword<K> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OrKeyword::Keyword => s.serialize_str(Self::keyword()),
            OrKeyword::Family(f) => f.serialize(s),
        }
    }
}

/// `"derived"` means `μ = λ′`.
pub type MuConfig = OrKeyword<'d'>;
/// `"integrable"` means `u = cαβ²`.
pub type UConfig = OrKeyword<'i'>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBetaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub u: UConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub c1: Family,
    pub d1: Family,
    pub c2: Family,
    pub d2: Family,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DeriveFlags {
    pub almost_product: bool,
    pub integrable: bool,
    pub compatible: bool,
    pub para_kahler_mu: bool,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeriveRaw {
    almost_product: Option<bool>,
    integrable: Option<bool>,
    compatible: Option<bool>,
    para_kahler_mu: Option<bool>,
}

impl<'de> Deserialize<'de> for OptionalDerive {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "all" => Ok(OptionalDerive(DeriveRaw {
                almost_product: Some(true),
                integrable: Some(true),
                compatible: Some(true),
                para_kahler_mu: Some(true),
            })),
            v @ Value::Object(_) => serde_json::from_value(v)
                .map(OptionalDerive)
                .map_err(serde::de::Error::custom),
            v => Err(serde::de::Error::custom(format!(
                "expected \"all\" or an object of flags, got {v}"
            ))),
        }
    }
}

struct OptionalDerive(DeriveRaw);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub coefficient: Coefficient,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_beta: Option<AlphaBetaConfig>,
    /// Curvature fed to the integrability formulas.
    pub c: f64,
    pub lambda: Family,
    pub mu: MuConfig,
    pub epsilon: Epsilon,
    pub t_max: f64,
    pub derive: DeriveFlags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    pub enforce_positivity: bool,
    pub allow_mismatched_c: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub perturb: Vec<Perturbation>,
}

impl CoefficientsConfig {
    pub fn recipe(&self) -> Recipe {
        let (a1, b1) = match (&self.alpha_beta, &self.a1) {
            (Some(ab), _) => {
                let u = match &ab.u {
                    OrKeyword::Keyword => alpha_beta_integrable_u(ab.alpha, ab.beta, self.c),
                    OrKeyword::Family(f) => f.0.build(),
                };
                let (a1, b1) = alpha_beta_family(ab.alpha, ab.beta, &u);
                (a1, BRule::Given(b1))
            }
            (None, Some(a1)) => {
                let b1 = match &self.b1 {
                    Some(b1) if !self.derive.integrable => BRule::Given(b1.0.build()),
                    _ => BRule::Integrable,
                };
                (a1.0.build(), b1)
            }
            (None, None) => unreachable!("validated: a1 or alpha_beta present"),
        };
        let mut recipe = Recipe::new(a1, b1)
            .curvature(self.c)
            .lambda(self.lambda.0.build())
            .epsilon(self.epsilon)
            .t_max(self.t_max)
            .enforce_positivity(self.enforce_positivity);
        if let OrKeyword::Family(mu) = &self.mu {
            recipe = recipe.mu(mu.0.build());
        }
        if let Some(g) = &self.metric {
            recipe = recipe.metric(MetricCoefficients {
                c1: g.c1.0.build(),
                d1: g.d1.0.build(),
                c2: g.c2.0.build(),
                d2: g.d2.0.build(),
            });
        }
        recipe
    }

    /// Built spec with the configured perturbations applied.
    pub fn build(&self) -> crate::Result<StructureSpec> {
        let mut spec = self.recipe().build()?;
        for p in &self.perturb {
            spec = spec.perturbed(p.coefficient, p.factor);
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
    pub p_max: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            p_max: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    pub structure: StructureKind,
    pub coefficients: CoefficientsConfig,
    pub sampling: SamplingConfig,
    pub checks: Vec<CheckName>,
    /// Only the overrides; see [`RunConfig::tolerance`].
    pub tolerances: BTreeMap<CheckName, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn tolerance(&self, check: CheckName) -> f64 {
        self.tolerances
            .get(&check)
            .copied()
            .unwrap_or_else(|| check.default_tolerance())
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig::new(self.sampling.count, self.sampling.seed)
            .p_max(self.sampling.p_max)
            .t_max(self.coefficients.t_max)
    }

    pub fn build(&self) -> crate::Result<LiftedStructure> {
        let m = self.manifold.build()?;
        let spec = self.coefficients.build()?;
        LiftedStructure::new(spec, m, self.structure)
    }

    /// Applies command-line overrides and re-validates what they touch.
    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self, ConfigErrors> {
        let mut errors = Vec::new();
        if let Some(seed) = o.seed {
            self.sampling.seed = seed;
        }
        if let Some(n) = o.samples {
            if n == 0 {
                errors.push(err("sampling.count", "must be at least 1"));
            }
            self.sampling.count = n;
        }
        for (name, value) in &o.tolerances {
            let path = format!("tolerances.{name}");
            match CheckName::parse(name) {
                None => errors.push(err(&path, "unknown check name")),
                Some(_) if !(value.is_finite() && *value > 0.0) => {
                    errors.push(err(&path, "tolerance must be positive and finite"))
                }
                Some(c) => {
                    self.tolerances.insert(c, *value);
                }
            }
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(ConfigErrors(errors))
        }
    }
}

/// Command-line overrides, applied after parsing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tolerances: Vec<(String, f64)>,
    pub output: Option<PathBuf>,
}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Reads the fields of one JSON object, recording errors instead of stopping.
struct Fields<'a> {
    obj: &'a Map<String, Value>,
    path: String,
    seen: BTreeSet<&'static str>,
}

impl<'a> Fields<'a> {
    fn of(value: &'a Value, path: &str, errors: &mut Vec<ConfigError>) -> Option<Self> {
        match value {
            Value::Object(obj) => Some(Self {
                obj,
                path: path.to_string(),
                seen: BTreeSet::new(),
            }),
            _ => {
                errors.push(err(path, "expected an object"));
                None
            }
        }
    }

    fn child(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.insert(key);
        self.obj.get(key)
    }

    fn opt<T: DeserializeOwned>(
        &mut self,
        key: &'static str,
        errors: &mut Vec<ConfigError>,
    ) -> Option<T> {
        let v = self.raw(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(err(&self.child(key), e.to_string()));
                None
            }
        }
    }

    fn required<T: DeserializeOwned>(
        &mut self,
        key: &'static str,
        errors: &mut Vec<ConfigError>,
    ) -> Option<T> {
        if self.obj.contains_key(key) {
            self.opt(key, errors)
        } else {
            self.seen.insert(key);
            errors.push(err(&self.child(key), "missing field"));
            None
        }
    }

    fn finish(self, errors: &mut Vec<ConfigError>) {
        for key in self.obj.keys() {
            if !self.seen.contains(key.as_str()) {
                errors.push(err(&self.child(key), "unknown field"));
            }
        }
    }
}

fn positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn parse_manifold(v: &Value, errors: &mut Vec<ConfigError>) -> Option<ManifoldConfig> {
    let mut f = Fields::of(v, "manifold", errors)?;
    let model: Option<ModelName> = f.required("model", errors);
    let n: Option<usize> = f.required("n", errors);
    let c: Option<f64> = f.opt("c", errors);
    let chart_radius: Option<f64> = f.opt("chart_radius", errors);
    let strength: Option<f64> = f.opt("strength", errors);
    f.finish(errors);
    let (model, n) = (model?, n?);
    let c = c.unwrap_or(0.0);
    match (model, strength) {
        (ModelName::PerturbedConformal, None) => {
            errors.push(err("manifold.strength", "required for perturbed_conformal"));
            return None;
        }
        (ModelName::Flat | ModelName::ConformalBall, Some(_)) => {
            errors.push(err(
                "manifold.strength",
                "only valid for perturbed_conformal",
            ));
            return None;
        }
        _ => {}
    }
    let out = ManifoldConfig {
        model,
        n,
        c,
        chart_radius: chart_radius.unwrap_or(1.0),
        strength,
    };
    if let Err(e) = out.build() {
        errors.push(err("manifold", e.to_string()));
        return None;
    }
    Some(out)
}

fn parse_coefficients(
    v: &Value,
    manifold: Option<&ManifoldConfig>,
    errors: &mut Vec<ConfigError>,
) -> Option<CoefficientsConfig> {
    let before = errors.len();
    let mut f = Fields::of(v, "coefficients", errors)?;
    let a1: Option<Family> = f.opt("a1", errors);
    let b1: Option<Family> = f.opt("b1", errors);
    let alpha_beta: Option<AlphaBetaConfig> = f.opt("alpha_beta", errors);
    let c: Option<f64> = f.opt("c", errors);
    let lambda: Option<Family> = f.opt("lambda", errors);
    let mu: Option<MuConfig> = f.opt("mu", errors);
    let epsilon: Option<Epsilon> = f.opt("epsilon", errors);
    let t_max: Option<f64> = f.opt("t_max", errors);
    let derive: Option<OptionalDerive> = f.opt("derive", errors);
    let metric: Option<MetricConfig> = f.opt("metric", errors);
    let enforce_positivity: Option<bool> = f.opt("enforce_positivity", errors);
    let allow_mismatched_c: Option<bool> = f.opt("allow_mismatched_c", errors);
    let perturb: Option<Vec<Perturbation>> = f.opt("perturb", errors);
    let has = |k: &str| f.obj.contains_key(k);
    let (has_a1, has_b1, has_ab, has_mu) = (has("a1"), has("b1"), has("alpha_beta"), has("mu"));
    let has_metric = has("metric");
    f.finish(errors);

    let raw = derive.map(|d| d.0).unwrap_or_default();
    match (has_a1, has_ab) {
        (false, false) => errors.push(err(
            "coefficients.a1",
            "one of a1 or alpha_beta is required",
        )),
        (true, true) => errors.push(err("coefficients.alpha_beta", "conflicts with a1")),
        _ => {}
    }
    if has_ab && has_b1 {
        errors.push(err("coefficients.b1", "alpha_beta already determines b1"));
    }
    if raw.almost_product == Some(false) {
        errors.push(err(
            "coefficients.derive.almost_product",
            "a2 and b2 are always completed from a1 and b1",
        ));
    }
    let integrable = raw.integrable.unwrap_or(!has_b1 && !has_ab);
    if integrable && (has_b1 || has_ab) {
        errors.push(err(
            "coefficients.derive.integrable",
            "b1 is derived by the integrability rule; remove b1/alpha_beta or set the flag to false",
        ));
    }
    if !integrable && !has_b1 && !has_ab {
        errors.push(err(
            "coefficients.b1",
            "required when derive.integrable is false",
        ));
    }
    let compatible = raw.compatible.unwrap_or(!has_metric);
    if compatible && has_metric {
        errors.push(err(
            "coefficients.derive.compatible",
            "metric coefficients are derived; remove metric or set the flag to false",
        ));
    }
    if !compatible && !has_metric {
        errors.push(err(
            "coefficients.metric",
            "required when derive.compatible is false",
        ));
    }
    let mu = mu.unwrap_or(OrKeyword::Keyword);
    let mu_derived = mu == OrKeyword::Keyword;
    let para_kahler_mu = raw.para_kahler_mu.unwrap_or(mu_derived || !has_mu);
    if para_kahler_mu != mu_derived {
        errors.push(err(
            "coefficients.derive.para_kahler_mu",
            if para_kahler_mu {
                "conflicts with an explicit mu family"
            } else {
                "mu must be a family when the flag is false"
            },
        ));
    }
    let uses_c = integrable
        || alpha_beta
            .as_ref()
            .is_some_and(|ab| ab.u == OrKeyword::Keyword);
    let allow_mismatched_c = allow_mismatched_c.unwrap_or(false);
    let manifold_c = manifold.map(|m| m.c);
    let c_value = c.or(manifold_c).unwrap_or(0.0);
    if let (Some(given), Some(mc)) = (c, manifold_c) {
        if uses_c && given != mc && !allow_mismatched_c {
            errors.push(err(
                "coefficients.c",
                format!(
                    "integrability coefficients use c = {given} but the manifold has c = {mc}; \
                     set allow_mismatched_c for a deliberate mismatch"
                ),
            ));
        }
    }
    let t_max = t_max.unwrap_or(DEFAULT_T_MAX);
    if !positive_finite(t_max) {
        errors.push(err("coefficients.t_max", "must be positive and finite"));
    }
    if let Some(ab) = &alpha_beta {
        if !(ab.alpha.is_finite() && ab.beta.is_finite() && ab.alpha != 0.0 && ab.beta != 0.0) {
            errors.push(err(
                "coefficients.alpha_beta",
                "alpha and beta must be finite and nonzero",
            ));
        }
    }
    let perturb = perturb.unwrap_or_default();
    for (k, p) in perturb.iter().enumerate() {
        if !p.factor.is_finite() {
            errors.push(err(
                &format!("coefficients.perturb[{k}].factor"),
                "must be finite",
            ));
        }
    }
    if errors.len() > before {
        return None;
    }
    Some(CoefficientsConfig {
        a1,
        b1,
        alpha_beta,
        c: c_value,
        lambda: lambda.unwrap_or(Family(FamilySpec::Constant { value: 1.0 })),
        mu,
        epsilon: epsilon.unwrap_or(Epsilon::Minus),
        t_max,
        derive: DeriveFlags {
            almost_product: true,
            integrable,
            compatible,
            para_kahler_mu,
        },
        metric,
        enforce_positivity: enforce_positivity.unwrap_or(true),
        allow_mismatched_c,
        perturb,
    })
}

fn parse_sampling(v: Option<&Value>, errors: &mut Vec<ConfigError>) -> Option<SamplingConfig> {
    let Some(v) = v else {
        return Some(SamplingConfig::default());
    };
    let before = errors.len();
    let mut f = Fields::of(v, "sampling", errors)?;
    let d = SamplingConfig::default();
    let count: Option<usize> = f.opt("count", errors);
    let seed: Option<u64> = f.opt("seed", errors);
    let p_max: Option<f64> = f.opt("p_max", errors);
    f.finish(errors);
    let out = SamplingConfig {
        count: count.unwrap_or(d.count),
        seed: seed.unwrap_or(d.seed),
        p_max: p_max.unwrap_or(d.p_max),
    };
    if out.count == 0 {
        errors.push(err("sampling.count", "must be at least 1"));
    }
    if !positive_finite(out.p_max) {
        errors.push(err("sampling.p_max", "must be positive and finite"));
    }
    (errors.len() == before).then_some(out)
}

fn parse_tolerances(
    v: Option<&Value>,
    errors: &mut Vec<ConfigError>,
) -> Option<BTreeMap<CheckName, f64>> {
    let Some(v) = v else {
        return Some(BTreeMap::new());
    };
    let Value::Object(obj) = v else {
        errors.push(err("tolerances", "expected an object"));
        return None;
    };
    let before = errors.len();
    let mut out = BTreeMap::new();
    for (key, value) in obj {
        let path = format!("tolerances.{key}");
        let Some(check) = CheckName::parse(key) else {
            errors.push(err(&path, "unknown check name"));
            continue;
        };
        match value.as_f64() {
            Some(t) if positive_finite(t) => {
                out.insert(check, t);
            }
            _ => errors.push(err(&path, "tolerance must be a positive finite number")),
        }
    }
    (errors.len() == before).then_some(out)
}

/// Parses and validates a config document, reporting every error found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| ConfigErrors(vec![err("", format!("invalid JSON: {e}"))]))?;
    let mut errors = Vec::new();
    let Some(mut top) = Fields::of(&doc, "", &mut errors) else {
        return Err(ConfigErrors(errors));
    };
    let manifold = top
        .raw("manifold")
        .map(|v| parse_manifold(v, &mut errors))
        .unwrap_or_else(|| {
            errors.push(err("manifold", "missing field"));
            None
        });
    let structure: Option<StructureKind> = top.opt("structure", &mut errors);
    let coefficients = top
        .raw("coefficients")
        .map(|v| parse_coefficients(v, manifold.as_ref(), &mut errors))
        .unwrap_or_else(|| {
            errors.push(err("coefficients", "missing field"));
            None
        });
    let sampling = parse_sampling(top.raw("sampling"), &mut errors);
    let checks: Option<Vec<CheckName>> = top.required("checks", &mut errors);
    let tolerances = parse_tolerances(top.raw("tolerances"), &mut errors);
    let output: Option<PathBuf> = top.opt("output", &mut errors);
    top.finish(&mut errors);

    if let Some(checks) = &checks {
        if checks.is_empty() {
            errors.push(err("checks", "at least one check is required"));
        }
        let mut seen = BTreeSet::new();
        for c in checks {
            if !seen.insert(*c) {
                errors.push(err("checks", format!("`{c}` listed twice")));
            }
        }
        if let Some(coeffs) = &coefficients {
            for c in checks.iter().filter(|c| c.needs_two_form()) {
                if coeffs.epsilon != Epsilon::Minus || !coeffs.derive.compatible {
                    errors.push(err(
                        "checks",
                        format!("`{c}` needs epsilon = -1 and a derived (compatible) metric"),
                    ));
                }
            }
        }
    }
    match (manifold, coefficients, sampling, checks, tolerances) {
        (Some(manifold), Some(coefficients), Some(sampling), Some(checks), Some(tolerances))
            if errors.is_empty() =>
        {
            Ok(RunConfig {
                manifold,
                structure: structure.unwrap_or(StructureKind::NaturalDiagonal),
                coefficients,
                sampling,
                checks,
                tolerances,
                output,
            })
        }
        _ => Err(ConfigErrors(errors)),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![err(
            "",
            format!("cannot read {}: {e}", path.display()),
        )])
    })?;
    parse_config(&text)
}

/// Example configs shipped with the crate, as `(file name, description, contents)`.
pub const SHIPPED_CONFIGS: [(&str, &str, &str); 4] = [
    (
        "unit_coefficients.json",
        "a1 = a2 = 1, b1 = b2 = 0: horizontal and vertical lifts swapped by the metric, over flat space",
        include_str!("../configs/unit_coefficients.json"),
    ),
    (
        "alpha_beta_almost_product.json",
        "a1 = 1/beta, b1 = u/(alpha beta) with u = t: almost product structure",
        include_str!("../configs/alpha_beta_almost_product.json"),
    ),
    (
        "alpha_beta_para_hermitian.json",
        "the same structure with a proportional metric of neutral signature",
        include_str!("../configs/alpha_beta_para_hermitian.json"),
    ),
    (
        "alpha_beta_para_kahler.json",
        "u = c alpha beta^2, lambda = 1, mu = 0: para-Kaehler on the unit sphere chart",
        include_str!("../configs/alpha_beta_para_kahler.json"),
    ),
];

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "manifold": {"model": "conformal_ball", "n": 3, "c": 1},
        "coefficients": {"a1": 1, "derive": "all"},
        "checks": ["para_kahler"]
    }"#;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.coefficients.c, 1.0);
        assert!(cfg.coefficients.derive.integrable);
        assert!(cfg.coefficients.derive.para_kahler_mu);
        assert_eq!(cfg.sampling, SamplingConfig::default());
        assert_eq!(cfg.tolerance(CheckName::ParaKahler), 1e-8);
        assert_eq!(cfg.structure, StructureKind::NaturalDiagonal);
        cfg.build().unwrap();
    }

    #[test]
    fn mismatched_curvature_needs_flag() {
        let text = MINIMAL.replace(r#""a1": 1,"#, r#""a1": 1, "c": -1,"#);
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.mentions("coefficients.c"), "{errs}");
        let text = MINIMAL.replace(
            r#""a1": 1,"#,
            r#""a1": 1, "c": -1, "allow_mismatched_c": true,"#,
        );
        assert_eq!(parse_config(&text).unwrap().coefficients.c, -1.0);
    }

    #[test]
    fn unknown_preset_names_the_field() {
        let text = MINIMAL.replace(r#""a1": 1"#, r#""a1": {"preset": "sigmoid"}"#);
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].path, "coefficients.a1");
        assert!(errs.0[0].message.contains("sigmoid"));
    }

    #[test]
    fn all_errors_are_collected() {
        let text = r#"{
            "manifold": {"model": "conformal_ball", "n": 3, "c": 1, "colour": 2},
            "coefficients": {"a1": "one", "lambda": {"preset": "affine", "intercept": 1}},
            "sampling": {"count": 0},
            "checks": ["closure", "nonsense"],
            "tolerances": {"closure": -1}
        }"#;
        let errs = parse_config(text).unwrap_err();
        for path in [
            "manifold.colour",
            "coefficients.a1",
            "coefficients.lambda",
            "sampling.count",
            "checks",
            "tolerances.closure",
        ] {
            assert!(errs.mentions(path), "missing {path} in\n{errs}");
        }
    }

    #[test]
    fn explicit_mu_turns_off_derivation_unless_flag_conflicts() {
        let text = MINIMAL.replace(r#""a1": 1, "derive": "all""#, r#""a1": 1, "mu": 0.5"#);
        let cfg = parse_config(&text).unwrap();
        assert!(!cfg.coefficients.derive.para_kahler_mu);
        let text = MINIMAL.replace(r#""a1": 1,"#, r#""a1": 1, "mu": 0.5,"#);
        assert!(parse_config(&text)
            .unwrap_err()
            .mentions("coefficients.derive.para_kahler_mu"));
    }

    #[test]
    fn two_form_checks_need_para_hermitian_spec() {
        let text = MINIMAL.replace(r#""derive": "all""#, r#""epsilon": 1"#);
        assert!(parse_config(&text).unwrap_err().mentions("checks"));
    }

    #[test]
    fn serialized_config_parses_back() {
        for (name, _, text) in SHIPPED_CONFIGS {
            let cfg = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let echo = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&echo).unwrap(), cfg, "{name}");
            cfg.build().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn overrides_replace_fields() {
        let cfg = parse_config(MINIMAL).unwrap();
        let o = Overrides {
            seed: Some(9),
            samples: Some(5),
            tolerances: vec![("closure".into(), 1e-3)],
            output: None,
        };
        let cfg = cfg.with_overrides(&o).unwrap();
        assert_eq!((cfg.sampling.seed, cfg.sampling.count), (9, 5));
        assert_eq!(cfg.tolerance(CheckName::Closure), 1e-3);
        let bad = Overrides {
            tolerances: vec![("nope".into(), 1.0)],
            ..Overrides::default()
        };
        assert!(cfg.with_overrides(&bad).is_err());
    }
}
