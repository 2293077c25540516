//! JSON specs for fields, series, multivariate series and residue schedules.

use std::path::{Path, PathBuf};

use algser_core::bivar::BivarPoly;
use algser_core::blowup::{expand_branch, BlowupChain, Mode, RootOracle};
use algser_core::field::{BaseField, Elem, FieldTower, Irreducibility, StepKind};
use algser_core::multivar::MultiSeries;
use algser_core::series::{
    CoefficientTemplate, Ctx, Exp, ExponentTemplate, Series, SeriesField, Template,
};
use serde::Deserialize;
use serde_json::Value;

use crate::expr::{self, eval_elem, eval_poly};
use crate::CliError;

/// Frames computed eagerly for a branch rule; the series extends its chain lazily past this.
pub const BRANCH_FRAMES: usize = 6;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(rename = "char")]
    pub characteristic: u64,
    #[serde(default)]
    pub families: Vec<String>,
    #[serde(default)]
    pub generators: Vec<String>,
    #[serde(default)]
    pub steps: Vec<StepSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub gen: String,
    pub minpoly: Vec<String>,
    pub kind: StepKindSpec,
    /// Accept the minimal polynomial as irreducible when no exact test applies.
    #[serde(default)]
    pub declared: bool,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKindSpec {
    Separable,
    PurelyInseparable,
}

/// A field given inline or as a path to a field spec file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldRef {
    Inline(FieldSpec),
    Path(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Affine { a: String, b: String },
    OneMinusPPow,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientSpec {
    IndexedRoot { family: String, root_e: u32 },
    Const { value: String },
    FrobeniusFamily { base: String, e: u32 },
    PrimeRadical,
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    #[default]
    Separable,
    Inseparable,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleSpec {
    Template {
        exponent: ExponentSpec,
        coefficient: CoefficientSpec,
        #[serde(default = "one")]
        start: u64,
    },
    Explicit {
        terms: Vec<(String, String)>,
    },
    Branch {
        poly: String,
        #[serde(default)]
        seed: Vec<String>,
        #[serde(default)]
        mode: ModeSpec,
    },
    Sum {
        args: Vec<RuleSpec>,
    },
    Product {
        args: Vec<RuleSpec>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub field: FieldRef,
    pub rule: RuleSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultiRuleSpec {
    ExplicitMulti { terms: Vec<(Vec<u64>, String)> },
    Lift { series: RuleSpec, dir: Vec<u64> },
    Geometric { coeffs: Vec<String> },
    Sum { args: Vec<MultiRuleSpec> },
    Product { args: Vec<MultiRuleSpec> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiSpec {
    pub field: FieldRef,
    pub vars: Vec<String>,
    pub rule: MultiRuleSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub field: FieldRef,
    /// Minimal polynomials over `k`, lowest degree first.
    pub schedule: Vec<Vec<String>>,
}

/// Reads a spec given either literally (starting with `{`) or as a file path. Returns the text
/// and the directory used to resolve field references.
pub fn read_source(arg: &str) -> Result<(String, PathBuf), CliError> {
    if arg.trim_start().starts_with('{') {
        return Ok((arg.to_string(), PathBuf::from(".")));
    }
    let text = std::fs::read_to_string(arg).map_err(|e| CliError::Io { path: arg.into(), msg: e.to_string() })?;
    let dir = Path::new(arg).parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok((text, dir))
}

pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
}

fn invalid(field: impl Into<String>, msg: impl ToString) -> CliError {
    CliError::Validation { field: field.into(), msg: msg.to_string() }
}

fn elem_at(ctx: &Ctx, field: &str, src: &str) -> Result<Elem, CliError> {
    eval_elem(ctx, src).map_err(|e| invalid(field, e))
}

fn exp_at(field: &str, src: &str) -> Result<Exp, CliError> {
    expr::eval_exponent(src).map_err(|e| invalid(field, e))
}

/// A loaded field: the series context and the names of steps accepted on declaration.
pub struct LoadedField {
    pub ctx: Ctx,
    pub declared: Vec<String>,
}

pub fn build_field(spec: &FieldRef, dir: &Path) -> Result<LoadedField, CliError> {
    let spec = match spec {
        FieldRef::Inline(s) => s.clone(),
        FieldRef::Path(p) => {
            let path = dir.join(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
            from_json(&text)?
        }
    };
    let fams: Vec<&str> = spec.families.iter().map(String::as_str).collect();
    let gens: Vec<&str> = spec.generators.iter().map(String::as_str).collect();
    let base = BaseField::new(spec.characteristic, &fams, &gens).map_err(|e| invalid("field.char", e))?;
    let scratch = SeriesField::new(FieldTower::new(base));
    for (i, step) in spec.steps.iter().enumerate() {
        let path = format!("field.steps[{i}]");
        let mut minpoly = Vec::with_capacity(step.minpoly.len());
        for (j, c) in step.minpoly.iter().enumerate() {
            minpoly.push(elem_at(&scratch, &format!("{path}.minpoly[{j}]"), c)?);
        }
        let kind = match step.kind {
            StepKindSpec::Separable => StepKind::Separable,
            StepKindSpec::PurelyInseparable => StepKind::PurelyInseparable,
        };
        scratch
            .ensure(&step.gen, |t| t.adjoin(&step.gen, minpoly, kind, step.declared, Vec::new()))
            .map_err(|e| invalid(&path, e))?;
    }
    let tower = scratch.tower();
    let declared = tower
        .steps()
        .iter()
        .filter(|s| s.irreducibility == Irreducibility::Declared)
        .map(|s| s.name.clone())
        .collect();
    Ok(LoadedField { ctx: SeriesField::new(tower), declared })
}

/// A univariate series with, for branch rules, the polynomial and its blowup chain.
pub struct LoadedSeries {
    pub series: Series,
    pub branch: Option<(BivarPoly, BlowupChain)>,
}

pub fn oracle(ctx: &Ctx, seeds: &[String]) -> Result<RootOracle, CliError> {
    if seeds.is_empty() {
        return Ok(RootOracle::default());
    }
    let elems = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| elem_at(ctx, &format!("seed-roots[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RootOracle::with_seeds(elems))
}

pub fn build_series(ctx: &Ctx, rule: &RuleSpec, path: &str, seeds: &[String], frames: usize) -> Result<LoadedSeries, CliError> {
    let plain = |series| Ok(LoadedSeries { series, branch: None });
    match rule {
        RuleSpec::Template { exponent, coefficient, start } => {
            let p = ctx.tower().characteristic();
            let exponent = match exponent {
                ExponentSpec::Affine { a, b } => ExponentTemplate::Affine {
                    a: exp_at(&format!("{path}.exponent.a"), a)?,
                    b: exp_at(&format!("{path}.exponent.b"), b)?,
                },
                ExponentSpec::OneMinusPPow if p == 0 => {
                    return Err(invalid(format!("{path}.exponent"), "one-minus-p-pow needs positive characteristic"))
                }
                ExponentSpec::OneMinusPPow => ExponentTemplate::OneMinusPPow { p },
            };
            let coefficient = match coefficient {
                CoefficientSpec::IndexedRoot { family, root_e } => {
                    if ctx.tower().base().family(family).is_none() {
                        return Err(invalid(format!("{path}.coefficient.family"), format!("unknown family `{family}`")));
                    }
                    CoefficientTemplate::IndexedRoot { family: family.clone(), root_e: *root_e }
                }
                CoefficientSpec::Const { value } => {
                    CoefficientTemplate::Const(elem_at(ctx, &format!("{path}.coefficient.value"), value)?)
                }
                CoefficientSpec::FrobeniusFamily { base, e } => CoefficientTemplate::FrobeniusFamily {
                    base: elem_at(ctx, &format!("{path}.coefficient.base"), base)?,
                    e: *e,
                },
                CoefficientSpec::PrimeRadical if p != 0 => {
                    return Err(invalid(format!("{path}.coefficient"), "prime-radical needs characteristic 0"))
                }
                CoefficientSpec::PrimeRadical => CoefficientTemplate::PrimeRadical,
            };
            plain(Series::template(ctx, Template { exponent, coefficient, start: *start }))
        }
        RuleSpec::Explicit { terms } => {
            let mut out = Vec::with_capacity(terms.len());
            for (i, (e, c)) in terms.iter().enumerate() {
                let e = exp_at(&format!("{path}.terms[{i}][0]"), e)?;
                out.push((e, elem_at(ctx, &format!("{path}.terms[{i}][1]"), c)?));
            }
            plain(Series::explicit(ctx, out))
        }
        RuleSpec::Branch { poly, seed, mode } => {
            let g = eval_poly(ctx, poly, ["x", "y"]).map_err(|e| invalid(format!("{path}.poly"), e))?;
            let mut all_seeds = seed.clone();
            all_seeds.extend(seeds.iter().cloned());
            let oracle = oracle(ctx, &all_seeds)?;
            let mode = match mode {
                ModeSpec::Separable => Mode::Separable,
                ModeSpec::Inseparable => Mode::Inseparable,
            };
            let (series, chain) =
                expand_branch(ctx, &g, &oracle, mode, frames).map_err(|e| CliError::Core(e.to_string()))?;
            Ok(LoadedSeries { series, branch: Some((g, chain)) })
        }
        RuleSpec::Sum { args } | RuleSpec::Product { args } => {
            let is_sum = matches!(rule, RuleSpec::Sum { .. });
            let mut acc: Option<Series> = None;
            for (i, a) in args.iter().enumerate() {
                let s = build_series(ctx, a, &format!("{path}.args[{i}]"), seeds, frames)?.series;
                acc = Some(match acc {
                    None => s,
                    Some(x) if is_sum => x.add(&s),
                    Some(x) => x.mul(&s),
                });
            }
            match acc {
                Some(s) => plain(s),
                None => Err(invalid(format!("{path}.args"), "needs at least one operand")),
            }
        }
    }
}

pub fn build_multi(ctx: &Ctx, n: usize, rule: &MultiRuleSpec, path: &str) -> Result<MultiSeries, CliError> {
    let core = |e: algser_core::multivar::MultiError| invalid(path, e);
    match rule {
        MultiRuleSpec::ExplicitMulti { terms } => {
            let mut out = Vec::with_capacity(terms.len());
            for (i, (idx, c)) in terms.iter().enumerate() {
                out.push((idx.clone(), elem_at(ctx, &format!("{path}.terms[{i}][1]"), c)?));
            }
            MultiSeries::explicit(ctx, n, out).map_err(core)
        }
        MultiRuleSpec::Lift { series, dir } => {
            if dir.len() != n {
                return Err(invalid(format!("{path}.dir"), format!("expected {n} entries")));
            }
            let s = build_series(ctx, series, &format!("{path}.series"), &[], BRANCH_FRAMES)?.series;
            MultiSeries::lift(&s, dir.clone()).map_err(core)
        }
        MultiRuleSpec::Geometric { coeffs } => {
            if coeffs.len() != n {
                return Err(invalid(format!("{path}.coeffs"), format!("expected {n} entries")));
            }
            let cs = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| elem_at(ctx, &format!("{path}.coeffs[{i}]"), c))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(MultiSeries::geometric(ctx, cs))
        }
        MultiRuleSpec::Sum { args } | MultiRuleSpec::Product { args } => {
            let is_sum = matches!(rule, MultiRuleSpec::Sum { .. });
            let mut acc: Option<MultiSeries> = None;
            for (i, a) in args.iter().enumerate() {
                let s = build_multi(ctx, n, a, &format!("{path}.args[{i}]"))?;
                acc = Some(match acc {
                    None => s,
                    Some(x) if is_sum => x.add(&s).map_err(core)?,
                    Some(x) => x.mul(&s).map_err(core)?,
                });
            }
            acc.ok_or_else(|| invalid(format!("{path}.args"), "needs at least one operand"))
        }
    }
}

/// Either kind of series input, told apart by the `vars` key.
pub enum Input {
    Uni(LoadedField, LoadedSeries),
    Multi(LoadedField, MultiSeries),
}

pub fn load_input(arg: &str, seeds: &[String], frames: usize) -> Result<Input, CliError> {
    let (text, dir) = read_source(arg)?;
    let value: Value = from_json(&text)?;
    if value.get("vars").is_some() {
        let spec: MultiSpec = from_json(&text)?;
        let field = build_field(&spec.field, &dir)?;
        let s = build_multi(&field.ctx, spec.vars.len(), &spec.rule, "rule")?;
        return Ok(Input::Multi(field, s));
    }
    let spec: SeriesSpec = from_json(&text)?;
    let field = build_field(&spec.field, &dir)?;
    let s = build_series(&field.ctx, &spec.rule, "rule", seeds, frames)?;
    Ok(Input::Uni(field, s))
}

pub fn load_schedule(arg: &str) -> Result<(LoadedField, Vec<Vec<Elem>>), CliError> {
    let (text, dir) = read_source(arg)?;
    let spec: ScheduleSpec = from_json(&text)?;
    let field = build_field(&spec.field, &dir)?;
    let mut schedule = Vec::new();
    for (i, h) in spec.schedule.iter().enumerate() {
        let mut poly = Vec::new();
        for (j, c) in h.iter().enumerate() {
            poly.push(elem_at(&field.ctx, &format!("schedule[{i}][{j}]"), c)?);
        }
        schedule.push(poly);
    }
    Ok((field, schedule))
}

/// Seed roots read from a JSON array of element expressions.
pub fn load_seeds(path: Option<&Path>) -> Result<Vec<String>, CliError> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.display().to_string(), msg: e.to_string() })?;
            from_json(&text)
        }
    }
}
