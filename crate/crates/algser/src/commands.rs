//! One function per subcommand, each producing a report with an exit code.

use algser_core::algebraicity::{ann_poly_reconstruct, check_full, Budgets, DegreeTable, Verdict};
use algser_core::bivar::substitute_poly;
use algser_core::blowup::BlowupChain;
use algser_core::field::FieldTower;
use algser_core::multivar::{check_multivar, MultiVerdict};
use algser_core::series::{exp_string, Series, Term};
use algser_core::valuation::{
    build_chain, build_infinite_residue_chain, classify_rank_increase, completion_witness, value_of, GeneratorStep,
    RankBudgets, RankVerdict, ValuationChain, ValuationError,
};
use serde_json::{json, Value};

use crate::expr::eval_poly;
use crate::spec::{load_input, load_schedule, Input, LoadedField, LoadedSeries};
use crate::{CliError, EXIT_DEFINITE, EXIT_INCONCLUSIVE};

#[derive(Clone, Debug)]
pub struct Options {
    pub trunc: usize,
    pub i_max: usize,
    pub r_max: u32,
    pub value_budget: u64,
    pub seeds: Vec<String>,
    /// Blowup frames computed for `expand`, `resolve` and valuation chains.
    pub frames: usize,
    /// Multivariate fibers are probed at multi-indices of total degree below this.
    pub probe_bound: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { trunc: 20, i_max: 4, r_max: 2, value_budget: 256, seeds: Vec::new(), frames: 6, probe_bound: 3 }
    }
}

impl Options {
    fn budgets(&self) -> Budgets {
        Budgets { i_max: self.i_max, r_max: self.r_max, trunc: self.trunc }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub code: i32,
    pub json: Value,
    pub text: String,
}

fn core_err(e: impl ToString) -> CliError {
    CliError::Core(e.to_string())
}

fn terms_json(t: &FieldTower, terms: &[Term]) -> Value {
    Value::Array(terms.iter().map(|(e, c)| json!([exp_string(e), t.format(c)])).collect())
}

fn table_line(tb: &DegreeTable) -> String {
    let ds: Vec<String> = tb.degrees.iter().map(u128::to_string).collect();
    format!("degrees at twist {}: {}{}", tb.r, ds.join(", "), if tb.capped { " (capped)" } else { "" })
}

fn header(field: &LoadedField) -> Vec<String> {
    field.declared.iter().map(|n| format!("conditional on declared irreducibility of step `{n}`")).collect()
}

fn verdict_report(field: &LoadedField, label: &str, r: Option<u32>, degree: Option<u128>, annpoly: Option<String>, diagnostics: Vec<String>) -> Report {
    let mut diags = header(field);
    diags.extend(diagnostics);
    let code = if label == "inconclusive" { EXIT_INCONCLUSIVE } else { EXIT_DEFINITE };
    let json = json!({
        "verdict": label,
        "r": r.map(|r| r.to_string()),
        "degree": degree.map(|d| d.to_string()),
        "annpoly": annpoly,
        "diagnostics": diags,
    });
    let mut text = format!(
        "verdict: {label}\nr: {}\ndegree: {}\nannpoly: {}\n",
        r.map_or("-".into(), |r| r.to_string()),
        degree.map_or("-".into(), |d| d.to_string()),
        json["annpoly"].as_str().unwrap_or("-"),
    );
    for d in &diags {
        text.push_str(&format!("  {d}\n"));
    }
    Report { code, json, text }
}

fn univariate_verdict(field: &LoadedField, s: &Series, opts: &Options) -> Report {
    let t = || field.ctx.tower();
    match check_full(s, opts.budgets()) {
        Verdict::AlgebraicCertified { certificate, r, degree, budget, conditional } => {
            let mut d = vec![format!("certificate: {}", certificate.kind()), format!("verified with budget {budget}")];
            if conditional {
                d.push(String::from("conditional on declared irreducibility"));
            }
            let ann = certificate.display(&t(), 6);
            verdict_report(field, "algebraic", Some(r), Some(degree), Some(ann), d)
        }
        Verdict::NotAlgebraicCertified { schedule, tables, conditional } => {
            let mut d = vec![format!("declared schedule: {}", schedule.label())];
            d.extend(tables.iter().map(table_line));
            if conditional {
                d.push(String::from("conditional on declared irreducibility"));
            }
            verdict_report(field, "not-algebraic", None, None, None, d)
        }
        Verdict::Inconclusive { i_max, r_max, tables, diagnostics } => {
            let mut d = vec![format!("budgets exhausted: i_max {i_max}, r_max {r_max}")];
            d.extend(tables.iter().map(table_line));
            d.extend(diagnostics);
            verdict_report(field, "inconclusive", None, None, None, d)
        }
    }
}

pub fn check(spec: &str, opts: &Options) -> Result<Report, CliError> {
    match load_input(spec, &opts.seeds, opts.frames)? {
        Input::Uni(field, loaded) => Ok(univariate_verdict(&field, &loaded.series, opts)),
        Input::Multi(field, s) => {
            let rep = check_multivar(&s, opts.budgets(), opts.probe_bound);
            let mut d: Vec<String> = rep
                .probes
                .iter()
                .map(|p| format!("fiber along x{} at {:?}: {}", p.axis + 1, p.index, p.verdict.label()))
                .collect();
            d.insert(0, format!("probe bound {}", rep.probe_bound));
            Ok(match rep.verdict {
                MultiVerdict::AlgebraicCertified { r, degree, annihilator, verified_degree, conditional } => {
                    d.push(format!("power identity verified below total degree {verified_degree}"));
                    if conditional {
                        d.push(String::from("conditional on declared irreducibility"));
                    }
                    verdict_report(&field, "algebraic", Some(r), Some(degree), Some(annihilator), d)
                }
                MultiVerdict::NotAlgebraicCertified { axis, index, .. } => {
                    d.push(format!("certified by the fiber along x{} at {index:?}", axis + 1));
                    verdict_report(&field, "not-algebraic", None, None, None, d)
                }
                MultiVerdict::Inconclusive { diagnostics } => {
                    d.extend(diagnostics);
                    verdict_report(&field, "inconclusive", None, None, None, d)
                }
            })
        }
    }
}

fn univariate(spec: &str, opts: &Options) -> Result<(LoadedField, LoadedSeries), CliError> {
    match load_input(spec, &opts.seeds, opts.frames)? {
        Input::Uni(f, s) => Ok((f, s)),
        Input::Multi(..) => Err(CliError::Validation { field: "vars".into(), msg: "expected a univariate series".into() }),
    }
}

/// Bounds `(y-degree, x-degree)` tried in order by `annpoly`.
const ANNPOLY_BOUNDS: [(u32, u32); 6] = [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (4, 4)];

pub fn annpoly(spec: &str, opts: &Options) -> Result<Report, CliError> {
    let (field, loaded) = univariate(spec, opts)?;
    let s = &loaded.series;
    for (dy, dx) in ANNPOLY_BOUNDS {
        let Some(g) = ann_poly_reconstruct(s, opts.trunc, dy, dx).map_err(core_err)? else { continue };
        let (residue, horizon) = substitute_poly(&field.ctx, &g, s, 2 * opts.trunc).map_err(core_err)?;
        let t = field.ctx.tower();
        let verified = residue.is_empty();
        let horizon = horizon.map_or(String::from("exact"), |h| exp_string(&h));
        let json = json!({
            "annpoly": g.format(&t),
            "y_degree": dy.to_string(),
            "x_degree": dx.to_string(),
            "prefix": opts.trunc.to_string(),
            "verified": verified,
            "residue_zero_below": horizon,
            "diagnostics": header(&field),
        });
        let text = format!("annpoly: {}\nverified: {verified} (residue zero below {horizon})\n", g.format(&t));
        let code = if verified { EXIT_DEFINITE } else { EXIT_INCONCLUSIVE };
        return Ok(Report { code, json, text });
    }
    let json = json!({ "annpoly": null, "prefix": opts.trunc.to_string(), "diagnostics": header(&field) });
    Ok(Report { code: EXIT_INCONCLUSIVE, json, text: String::from("annpoly: none within bounds\n") })
}

fn chain_rows(chain: &BlowupChain) -> (Vec<Value>, String) {
    let mut rows = Vec::new();
    let mut text = String::from("frame  mode        lambda  residue_degree  b       order   snc\n");
    for f in &chain.frames {
        let mode = f.last().map_or("initial", |tr| tr.mode.label());
        let lambda = f.last().map_or(0, |tr| tr.lambda);
        let order = f.order().map_or(String::from("-"), |o| exp_string(&o));
        let b = exp_string(&f.b);
        rows.push(json!({
            "index": f.index.to_string(),
            "mode": mode,
            "lambda": lambda.to_string(),
            "residue_degree": f.residue_degree().to_string(),
            "b": b,
            "order": order,
            "snc": f.snc,
        }));
        text.push_str(&format!(
            "{:<6} {:<11} {:<7} {:<15} {:<7} {:<7} {}\n",
            f.index,
            mode,
            lambda,
            f.residue_degree(),
            b,
            order,
            f.snc
        ));
    }
    (rows, text)
}

fn branch(spec: &str, opts: &Options) -> Result<(LoadedField, Series, BlowupChain), CliError> {
    let (field, loaded) = univariate(spec, opts)?;
    match loaded.branch {
        Some((_, chain)) => Ok((field, loaded.series, chain)),
        None => Err(CliError::Validation { field: "rule.kind".into(), msg: "expected a branch rule".into() }),
    }
}

pub fn expand(spec: &str, opts: &Options) -> Result<Report, CliError> {
    let (field, s, chain) = branch(spec, opts)?;
    let (mut terms, _) = s.prefix(opts.trunc).map_err(core_err)?;
    terms.truncate(opts.trunc);
    let t = field.ctx.tower();
    let (rows, table) = chain_rows(&chain);
    let i0 = chain.stabilization_index().map(|i| i.to_string());
    let json = json!({
        "coefficients": terms_json(&t, &terms),
        "chain": rows,
        "stabilization_index": i0,
        "diagnostics": header(&field),
    });
    let mut text = String::new();
    for (e, c) in &terms {
        text.push_str(&format!("x^{}: {}\n", exp_string(e), t.format(c)));
    }
    text.push_str(&table);
    Ok(Report { code: EXIT_DEFINITE, json, text })
}

pub fn resolve(spec: &str, opts: &Options) -> Result<Report, CliError> {
    let (field, _, chain) = branch(spec, opts)?;
    let (rows, mut text) = chain_rows(&chain);
    let i0 = chain.stabilization_index();
    text.push_str(&format!("i0: {}\n", i0.map_or(String::from("-"), |i| i.to_string())));
    let json = json!({
        "mode": chain.mode.label(),
        "frames": rows,
        "i0": i0.map(|i| i.to_string()),
        "diagnostics": header(&field),
    });
    Ok(Report { code: EXIT_DEFINITE, json, text })
}

#[derive(Clone, Debug)]
pub enum ValuationCommand {
    Build,
    Value { poly: String },
    Classify,
    Witness { budget: u64 },
}

fn chain_json(chain: &ValuationChain) -> (Value, String) {
    let t = chain.ctx.tower();
    let mut text = String::from("frame  blowups  step                    residue_degree  value\n");
    let rows: Vec<Value> = chain
        .frames
        .iter()
        .map(|f| {
            let step = match &f.step {
                GeneratorStep::Translation => String::from("translation"),
                GeneratorStep::Separable { degree } => format!("separable (degree {degree})"),
                GeneratorStep::Inseparable { lambda } => format!("inseparable (lambda {lambda})"),
            };
            let value = f.value.map_or(String::from("beyond budget"), |v| v.to_string());
            text.push_str(&format!("{:<6} {:<8} {:<23} {:<15} {}\n", f.index, f.blowups, step, f.residue_degree, value));
            json!({
                "index": f.index.to_string(),
                "blowups": f.blowups.to_string(),
                "residue": t.format(&f.residue),
                "step": step,
                "coordinate": f.coordinate,
                "residue_degree": f.residue_degree.to_string(),
                "value": f.value.map(|v| v.to_string()),
            })
        })
        .collect();
    let json = json!({
        "frames": rows,
        "terminated": chain.terminated,
        "schedule": chain.schedule.as_ref().map(|s| s.iter().map(usize::to_string).collect::<Vec<_>>()),
    });
    (json, text)
}

fn rank_json(v: &RankVerdict) -> (Value, String, i32) {
    match v {
        RankVerdict::RankIncreases { degree, frame } => (
            json!({ "verdict": v.label(), "degree": degree.to_string(), "stable_from": frame.to_string() }),
            format!("verdict: {}\nresidue degree: {degree} (stable from frame {frame})\n", v.label()),
            EXIT_DEFINITE,
        ),
        RankVerdict::RankDoesNotIncrease { schedule, prefix } => {
            let p: Vec<String> = prefix.iter().map(u128::to_string).collect();
            (
                json!({ "verdict": v.label(), "schedule": schedule.iter().map(usize::to_string).collect::<Vec<_>>(), "prefix": p }),
                format!("verdict: {}\nverified residue degrees: {}\n", v.label(), p.join(", ")),
                EXIT_DEFINITE,
            )
        }
        RankVerdict::Inconclusive { frames, degrees } => {
            let d: Vec<String> = degrees.iter().map(u128::to_string).collect();
            (
                json!({ "verdict": v.label(), "frames": frames.to_string(), "degrees": d }),
                format!("verdict: {}\nresidue degrees so far: {}\n", v.label(), d.join(", ")),
                EXIT_INCONCLUSIVE,
            )
        }
    }
}

pub fn valuation(cmd: &ValuationCommand, spec: &str, opts: &Options) -> Result<Report, CliError> {
    let (field, loaded) = univariate(spec, opts)?;
    let chain = build_chain(&loaded.series, opts.frames, opts.value_budget).map_err(core_err)?;
    match cmd {
        ValuationCommand::Build => {
            let (json, text) = chain_json(&chain);
            Ok(Report { code: EXIT_DEFINITE, json, text })
        }
        ValuationCommand::Value { poly } => {
            let f = eval_poly(&field.ctx, poly, ["u", "v"])
                .map_err(|e| CliError::Validation { field: "--poly".into(), msg: e.to_string() })?;
            match value_of(&chain, &f) {
                Ok(v) => Ok(Report {
                    code: EXIT_DEFINITE,
                    json: json!({ "value": v.to_string() }),
                    text: format!("value: {v}\n"),
                }),
                Err(ValuationError::ValueExceedsBudget { budget }) => Ok(Report {
                    code: EXIT_INCONCLUSIVE,
                    json: json!({ "value": null, "exceeds": budget.to_string() }),
                    text: format!("value: exceeds {budget}\n"),
                }),
                Err(e) => Err(core_err(e)),
            }
        }
        ValuationCommand::Classify => {
            let (json, text, code) = rank_json(&classify_rank_increase(&chain, RankBudgets::default()));
            Ok(Report { code, json, text })
        }
        ValuationCommand::Witness { budget } => {
            let w = completion_witness(&chain, *budget).map_err(core_err)?;
            let t = field.ctx.tower();
            let steps: Vec<Value> = w.steps.iter().map(|s| json!([s.value.to_string(), t.format(&s.alpha)])).collect();
            let next = w.next.map(|n| n.to_string());
            let values: Vec<String> = w.steps.iter().map(|s| s.value.to_string()).collect();
            let text = format!(
                "twist: {}\nvalues: {}\nnext: {}\n",
                w.r,
                values.join(", "),
                next.clone().unwrap_or_else(|| String::from("vanishes to budget"))
            );
            Ok(Report { code: EXIT_DEFINITE, json: json!({ "r": w.r.to_string(), "steps": steps, "next": next }), text })
        }
    }
}

pub fn corollary(schedule: &str, _opts: &Options) -> Result<Report, CliError> {
    let (field, sched) = load_schedule(schedule)?;
    let chain = build_infinite_residue_chain(&field.ctx, &sched).map_err(core_err)?;
    let (mut json, mut text) = chain_json(&chain);
    let (rank, rank_text, code) = rank_json(&classify_rank_increase(&chain, RankBudgets::default()));
    json["classification"] = rank;
    text.push_str(&rank_text);
    Ok(Report { code, json, text })
}
