//! JSON problem specs, as read by the command-line tool.
//!
//! A spec names a model (a catalog name, a path to a model file, or an inline
//! `{"gamma", "sigma", "measure"}` object), a penalty and its extension, the
//! exit parameters and, where relevant, simulation and barrier settings.
//!
//! ```json
//! {
//!   "model": "jump_diffusion",
//!   "penalty": {"f": "exp(y)", "extension": {"kind": "affine_at_a"}},
//!   "a": 0, "b": 2, "q": 0.1, "x": 1,
//!   "formula": "auto"
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::generator::{ExtendedPenalty, ExtensionRecipe, Penalty};
use crate::gerber_shiu::{ExitProblem, FormulaChoice};
use crate::levy_model::catalog::CanonicalModel;
use crate::levy_model::{LevyTriplet, LevyTripletSpec};
use crate::montecarlo::{McConfig, SmallJumpMode};
use crate::reflected_refracted::{Provider, ProviderKind, Refraction};
use crate::scale::{MethodChoice, ScaleFunction, ScaleOptions};

/// Grid used to locate kinks of expression penalties below `a`, in units of `b - a`.
const KINK_SCAN_SPAN: f64 = 50.0;

fn parse_at<T: DeserializeOwned>(v: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner == ".") {
            (true, _) => inner,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{inner}"),
        };
        Error::spec(path, e.into_inner().to_string())
    })
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::spec(".", format!("{}: {e}", path.display())))
}

/// Simulation settings. Missing fields fall back to [`McConfig::default`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub paths: Option<u64>,
    pub dt: Option<f64>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub bridge: Option<bool>,
    pub small_jumps: Option<SmallJumpMode>,
}

impl McSettings {
    fn or(self, o: McSettings) -> McSettings {
        McSettings {
            paths: self.paths.or(o.paths),
            dt: self.dt.or(o.dt),
            eps: self.eps.or(o.eps),
            seed: self.seed.or(o.seed),
            horizon: self.horizon.or(o.horizon),
            bridge: self.bridge.or(o.bridge),
            small_jumps: self.small_jumps.or(o.small_jumps),
        }
    }

    pub fn config(&self) -> McConfig {
        let d = McConfig::default();
        McConfig {
            paths: self.paths.unwrap_or(d.paths),
            dt: self.dt.unwrap_or(d.dt),
            eps: self.eps.unwrap_or(d.eps),
            seed: self.seed.unwrap_or(d.seed),
            bridge: self.bridge.unwrap_or(d.bridge),
            horizon: self.horizon,
            small_jumps: self.small_jumps.unwrap_or(d.small_jumps),
            ..d
        }
    }
}

/// The raw problem spec shared by `eval`, `compare`, `mc`, `eval-reflected`
/// and `eval-refracted`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub model: Value,
    pub penalty: Value,
    /// Extension, when not given inside `penalty`.
    #[serde(default)]
    pub extension: Option<Value>,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub x: f64,
    #[serde(default)]
    pub formula: FormulaChoice,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub paths: Option<u64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub bridge: Option<bool>,
    #[serde(default)]
    pub small_jumps: Option<SmallJumpMode>,
    #[serde(default)]
    pub mc: Option<McSettings>,
    #[serde(default)]
    pub provider: Option<ProviderKind>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// The model part of a spec.
#[derive(Debug, Clone)]
pub struct ModelSource {
    pub label: String,
    pub triplet: LevyTriplet,
}

impl ModelSource {
    /// Resolves a catalog name, a model file (relative to `base`) or an inline object.
    pub fn resolve(v: &Value, base: Option<&Path>) -> Result<Self> {
        match v {
            Value::String(name) => {
                if let Some(m) = CanonicalModel::from_name(name) {
                    return Ok(ModelSource {
                        label: name.clone(),
                        triplet: m.build(),
                    });
                }
                let path = base.map_or_else(|| PathBuf::from(name), |b| b.join(name));
                if !path.is_file() {
                    let names: Vec<_> = CanonicalModel::ALL.iter().map(|m| m.name()).collect();
                    return Err(Error::spec(
                        "model",
                        format!("`{name}` is neither a catalog model ({}) nor a model file", names.join(", ")),
                    ));
                }
                let spec: LevyTripletSpec = parse_at(&read_json(&path)?, "model")?;
                Ok(ModelSource {
                    label: name.clone(),
                    triplet: LevyTriplet::from_spec(&spec).map_err(|e| Error::spec("model", e.to_string()))?,
                })
            }
            Value::Object(_) => {
                let spec: LevyTripletSpec = parse_at(v, "model")?;
                Ok(ModelSource {
                    label: "inline".into(),
                    triplet: LevyTriplet::from_spec(&spec).map_err(|e| Error::spec("model", e.to_string()))?,
                })
            }
            _ => Err(Error::spec("model", "expected a catalog name, a file path or an object")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionObject {
    kind: String,
    #[serde(default)]
    expr: Option<String>,
}

/// Penalty and extension before the scale function is known.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySource {
    Constant(f64),
    Expression(String),
    Table(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtensionSource {
    Zero,
    ConstantOne,
    AffineAtA,
    ScaleFunction,
    Custom(String),
}

impl ExtensionSource {
    pub fn parse(v: &Value, path: &str) -> Result<Self> {
        let obj: ExtensionObject = match v {
            Value::String(kind) => ExtensionObject {
                kind: kind.clone(),
                expr: None,
            },
            _ => parse_at(v, path)?,
        };
        let kind_path = format!("{path}.kind");
        let src = match obj.kind.as_str() {
            "zero" => ExtensionSource::Zero,
            "constant_one" | "constant" => ExtensionSource::ConstantOne,
            "affine_at_a" => ExtensionSource::AffineAtA,
            "scale_function" => ExtensionSource::ScaleFunction,
            "custom" => {
                let e = obj.expr.ok_or_else(|| Error::spec(format!("{path}.expr"), "custom extension needs `expr`"))?;
                return Ok(ExtensionSource::Custom(e));
            }
            other => {
                return Err(Error::spec(
                    kind_path,
                    format!("unknown extension `{other}` (zero, constant_one, affine_at_a, scale_function, custom)"),
                ))
            }
        };
        if obj.expr.is_some() {
            return Err(Error::spec(format!("{path}.expr"), "only custom extensions take `expr`"));
        }
        Ok(src)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExtensionSource::Zero => "zero",
            ExtensionSource::ConstantOne => "constant_one",
            ExtensionSource::AffineAtA => "affine_at_a",
            ExtensionSource::ScaleFunction => "scale_function",
            ExtensionSource::Custom(_) => "custom",
        }
    }
}

impl PenaltySource {
    fn parse_f(v: &Value, path: &str) -> Result<Self> {
        match v {
            Value::Number(n) => Ok(PenaltySource::Constant(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) => match s.trim().parse::<f64>() {
                Ok(c) => Ok(PenaltySource::Constant(c)),
                Err(_) => Ok(PenaltySource::Expression(s.clone())),
            },
            Value::Object(m) if m.len() == 1 && m.contains_key("expr") => PenaltySource::parse_f(&m["expr"], &format!("{path}.expr")),
            Value::Object(m) if m.len() == 1 && m.contains_key("table") => {
                let path = format!("{path}.table");
                let pts: Vec<[f64; 2]> = parse_at(&m["table"], &path)?;
                if pts.len() < 2 {
                    return Err(Error::spec(path, "need at least two points"));
                }
                if pts.windows(2).any(|w| !(w[0][0] < w[1][0])) {
                    return Err(Error::spec(path, "abscissae must be strictly increasing"));
                }
                Ok(PenaltySource::Table(pts))
            }
            _ => Err(Error::spec(path, "expected a number, an expression, {\"expr\": ...} or {\"table\": [[y, f], ...]}")),
        }
    }

    /// Parses `penalty`, which is either `{"f": ..., "extension": ...}` or a
    /// bare `f`. The extension may instead be given by `fallback`.
    pub fn parse(v: &Value, fallback: Option<&Value>) -> Result<(Self, Option<ExtensionSource>)> {
        let (f, ext, ext_path) = match v {
            Value::Object(m) if m.contains_key("f") => {
                if let Some(k) = m.keys().find(|k| *k != "f" && *k != "extension") {
                    return Err(Error::spec(format!("penalty.{k}"), "unknown field"));
                }
                if m.contains_key("extension") && fallback.is_some() {
                    return Err(Error::spec("extension", "given both here and inside `penalty`"));
                }
                match m.get("extension") {
                    Some(e) => (PenaltySource::parse_f(&m["f"], "penalty.f")?, Some(e), "penalty.extension"),
                    None => (PenaltySource::parse_f(&m["f"], "penalty.f")?, fallback, "extension"),
                }
            }
            _ => (PenaltySource::parse_f(v, "penalty")?, fallback, "extension"),
        };
        let ext = match ext {
            Some(e) => Some(ExtensionSource::parse(e, ext_path)?),
            None => None,
        };
        Ok((f, ext))
    }

    /// Builds the penalty; `W` in expressions refers to `scale`.
    pub fn build(&self, bindings: Bindings, scale: &Arc<ScaleFunction>) -> Result<Penalty> {
        match self {
            PenaltySource::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::spec("penalty.f", "must be finite"));
                }
                Ok(Penalty::constant(*c))
            }
            PenaltySource::Expression(s) => {
                let e = Expr::parse(s, bindings, Some(scale.clone())).map_err(|e| Error::spec("penalty.f", e.to_string()))?;
                let span = KINK_SCAN_SPAN * (bindings.b - bindings.a).max(1.0);
                Ok(e.to_penalty(bindings.a - span, bindings.b))
            }
            PenaltySource::Table(pts) => Ok(table_penalty(pts.clone())),
        }
    }
}

/// Piecewise linear through the points, constant beyond them.
fn table_penalty(pts: Vec<[f64; 2]>) -> Penalty {
    let kinks: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let value = {
        let pts = pts.clone();
        move |y: f64| {
            let n = pts.len();
            if y <= pts[0][0] {
                return pts[0][1];
            }
            if y >= pts[n - 1][0] {
                return pts[n - 1][1];
            }
            let i = pts.partition_point(|p| p[0] < y);
            let ([x0, y0], [x1, y1]) = (pts[i - 1], pts[i]);
            y0 + (y1 - y0) * (y - x0) / (x1 - x0)
        }
    };
    let slope = move |y: f64| {
        let n = pts.len();
        if y <= pts[0][0] || y > pts[n - 1][0] {
            return 0.0;
        }
        // left derivative: the segment ending at or after y
        let i = pts.partition_point(|p| p[0] < y);
        let ([x0, y0], [x1, y1]) = (pts[i - 1], pts[i]);
        (y1 - y0) / (x1 - x0)
    };
    Penalty::new("table", value).with_derivative(slope).with_kinks(kinks)
}

/// A spec resolved into library inputs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ModelSource,
    pub scale: Arc<ScaleFunction>,
    pub penalty: Penalty,
    pub penalty_source: PenaltySource,
    /// Absent only in specs meant for simulation.
    pub extension: Option<ExtensionSource>,
    pub exit: ExitProblem,
    pub formula: FormulaChoice,
    pub strict: bool,
    pub mc: McConfig,
    pub provider: ProviderKind,
    pub refraction: Option<Refraction>,
    pub tol: Option<f64>,
}

impl ProblemSpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        parse_at(v, "")
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::spec(".", e.to_string()))?;
        ProblemSpec::from_value(&v)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        ProblemSpec::from_value(&read_json(path)?)
    }

    /// Simulation settings: the `mc` object takes precedence over top-level fields.
    pub fn mc_settings(&self) -> McSettings {
        let top = McSettings {
            paths: self.paths,
            dt: self.dt,
            eps: self.eps,
            seed: self.seed,
            horizon: self.horizon,
            bridge: self.bridge,
            small_jumps: self.small_jumps,
        };
        self.mc.unwrap_or_default().or(top)
    }

    /// Resolves the spec; relative model paths are taken from `base`.
    pub fn resolve(&self, base: Option<&Path>) -> Result<Problem> {
        let model = ModelSource::resolve(&self.model, base)?;
        for (name, v) in [("a", self.a), ("b", self.b), ("q", self.q), ("x", self.x)] {
            if !v.is_finite() {
                return Err(Error::spec(name, "must be finite"));
            }
        }
        if !(self.a < self.b) {
            return Err(Error::spec("b", "need a < b"));
        }
        if !(self.q >= 0.0) {
            return Err(Error::spec("q", "must be >= 0"));
        }
        if !(self.a <= self.x && self.x <= self.b) {
            return Err(Error::spec("x", "must lie in [a, b]"));
        }
        let exit = ExitProblem::new(self.a, self.b, self.q, self.x)?;
        let scale = Arc::new(ScaleFunction::new(&model.triplet, self.q)?);
        let (penalty_source, extension) = PenaltySource::parse(&self.penalty, self.extension.as_ref())?;
        let bindings = Bindings {
            a: self.a,
            b: self.b,
            q: self.q,
        };
        let penalty = penalty_source.build(bindings, &scale)?;
        if let Some(ExtensionSource::Custom(s)) = &extension {
            let path = if self.extension.is_some() { "extension.expr" } else { "penalty.extension.expr" };
            Expr::parse(s, bindings, Some(scale.clone())).map_err(|e| Error::spec(path, e.to_string()))?;
        }
        let refraction = match (self.delta, self.c) {
            (None, None) => None,
            (Some(delta), Some(c)) => Some(Refraction { delta, c }),
            (None, Some(_)) => return Err(Error::spec("delta", "refraction needs both `delta` and `c`")),
            (Some(_), None) => return Err(Error::spec("c", "refraction needs both `delta` and `c`")),
        };
        if let Some(t) = self.tol {
            if !(t >= 0.0) {
                return Err(Error::spec("tol", "must be >= 0"));
            }
        }
        Ok(Problem {
            model,
            scale,
            penalty,
            penalty_source,
            extension,
            exit,
            formula: self.formula,
            strict: self.strict,
            mc: self.mc_settings().config(),
            provider: self.provider.unwrap_or(ProviderKind::ClosedForm),
            refraction,
            tol: self.tol,
        })
    }
}

impl Problem {
    fn bindings(&self) -> Bindings {
        Bindings {
            a: self.exit.a,
            b: self.exit.b,
            q: self.exit.q,
        }
    }

    pub fn recipe(&self, ext: &ExtensionSource) -> Result<ExtensionRecipe> {
        Ok(match ext {
            ExtensionSource::Zero => ExtensionRecipe::Zero,
            ExtensionSource::ConstantOne => ExtensionRecipe::ConstantOne,
            ExtensionSource::AffineAtA => ExtensionRecipe::AffineAtA,
            ExtensionSource::ScaleFunction => ExtensionRecipe::ScaleFunction(self.scale.clone()),
            ExtensionSource::Custom(s) => {
                let e = Expr::parse(s, self.bindings(), Some(self.scale.clone()))?;
                ExtensionRecipe::Custom(e.to_extension(self.exit.a, self.exit.b))
            }
        })
    }

    /// The penalty with the extension named in the spec.
    pub fn extended(&self) -> Result<ExtendedPenalty> {
        match &self.extension {
            Some(e) => self.extended_with(e),
            None => Err(Error::spec("extension", "missing extension")),
        }
    }

    pub fn extended_with(&self, ext: &ExtensionSource) -> Result<ExtendedPenalty> {
        let p = ExtendedPenalty::new(&self.penalty, self.recipe(ext)?, self.exit.a, self.exit.b)?;
        Ok(match ext {
            ExtensionSource::Custom(s) if s.contains('W') => p.with_noise(self.scale.value_noise()),
            _ => p,
        })
    }

    pub fn provider(&self) -> Provider {
        match self.provider {
            ProviderKind::ClosedForm => Provider::ClosedForm,
            ProviderKind::Mc => Provider::monte_carlo(self.mc),
        }
    }
}

/// Spec of the `scale` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub model: Value,
    pub q: f64,
    /// Explicit abscissae; otherwise `grid` is used.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub method: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub from: f64,
    pub to: f64,
    #[serde(default = "default_grid_points")]
    pub n: usize,
}

fn default_grid_points() -> usize {
    101
}

impl ScaleSpec {
    pub fn from_value(v: &Value) -> Result<Self> {
        parse_at(v, "")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        ScaleSpec::from_value(&read_json(path)?)
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.x, self.grid) {
            (Some(x), None) => x.clone(),
            (None, Some(g)) => {
                if !(g.from >= 0.0 && g.to > g.from && g.from.is_finite() && g.to.is_finite()) {
                    return Err(Error::spec("grid", "need 0 <= from < to"));
                }
                if g.n < 2 {
                    return Err(Error::spec("grid.n", "need at least 2 points"));
                }
                (0..g.n).map(|i| g.from + (g.to - g.from) * i as f64 / (g.n - 1) as f64).collect()
            }
            (Some(_), Some(_)) => return Err(Error::spec("grid", "give either `x` or `grid`, not both")),
            (None, None) => return Err(Error::spec("grid", "missing `x` or `grid`")),
        };
        if let Some(i) = pts.iter().position(|v| !v.is_finite()) {
            return Err(Error::spec(format!("x[{i}]"), "must be finite"));
        }
        Ok(pts)
    }

    pub fn resolve(&self, base: Option<&Path>) -> Result<(ModelSource, ScaleFunction, Vec<f64>)> {
        let model = ModelSource::resolve(&self.model, base)?;
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::spec("q", "must be finite and >= 0"));
        }
        let method = match self.method.as_deref() {
            None | Some("auto") => MethodChoice::Auto,
            Some("closed_form") => MethodChoice::ClosedForm,
            Some("laplace_inversion") => MethodChoice::LaplaceInversion,
            Some(other) => return Err(Error::spec("method", format!("unknown method `{other}`"))),
        };
        let points = self.points()?;
        let options = ScaleOptions { method, ..ScaleOptions::default() };
        let sf = ScaleFunction::with_options(&model.triplet, self.q, options)?;
        Ok((model, sf, points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec(v: Value) -> Result<Problem> {
        ProblemSpec::from_value(&v)?.resolve(None)
    }

    fn base() -> Value {
        json!({"model": "cramer_lundberg", "penalty": {"f": "exp(y)", "extension": {"kind": "affine_at_a"}},
               "a": 0, "b": 2, "q": 0.1, "x": 1})
    }

    fn spec_path(r: Result<Problem>) -> String {
        match r {
            Err(Error::Spec { path, .. }) => path,
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn resolves_penalty_and_extension() {
        let p = spec(base()).unwrap();
        assert_eq!(p.extension, Some(ExtensionSource::AffineAtA));
        assert!((p.penalty.value(-1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(p.mc, McConfig::default());
    }

    #[test]
    fn numeric_penalty_is_constant() {
        let mut v = base();
        v["penalty"] = json!({"f": "1", "extension": "constant_one"});
        assert_eq!(spec(v).unwrap().penalty.as_constant(), Some(1.0));
    }

    #[test]
    fn field_paths_in_errors() {
        let mut v = base();
        v["penalty"]["extension"]["kind"] = json!("bogus");
        assert_eq!(spec_path(spec(v)), "penalty.extension.kind");

        let mut v = base();
        v["penalty"]["f"] = json!("exp(");
        assert_eq!(spec_path(spec(v)), "penalty.f");

        let mut v = base();
        v["mc"] = json!({"paths": "many"});
        assert_eq!(spec_path(spec(v)), "mc.paths");

        let mut v = base();
        v["model"] = json!({"gamma": 1.0, "sigma": 0.2, "measure": {"family": "exponential", "rate": 1.0}});
        assert_eq!(spec_path(spec(v)), "model.measure");

        let mut v = base();
        v["x"] = json!(3.0);
        assert_eq!(spec_path(spec(v)), "x");
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v = base();
        v["colour"] = json!("blue");
        assert!(matches!(spec(v), Err(Error::Spec { .. })));
    }

    #[test]
    fn nested_mc_overrides_top_level() {
        let mut v = base();
        v["paths"] = json!(10);
        v["seed"] = json!(4);
        v["mc"] = json!({"paths": 20});
        let p = spec(v).unwrap();
        assert_eq!((p.mc.paths, p.mc.seed), (20, 4));
    }

    #[test]
    fn table_penalty_interpolates() {
        let mut v = base();
        v["penalty"] = json!({"f": {"table": [[-2.0, 0.0], [0.0, 2.0]]}, "extension": "zero"});
        let p = spec(v).unwrap();
        assert_eq!(p.penalty.value(-1.0), 1.0);
        assert_eq!(p.penalty.value(-5.0), 0.0);
        assert_eq!(p.penalty.left_derivative(0.0), 1.0);
    }
}
