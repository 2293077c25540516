//! Valuations on `k[u, v]_{(u,v)}` given by arcs `v = σ(u)`: residue towers along the chain of
//! generating elements, values, rank-increase classification and completion witnesses.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bivar::{residue_below, BivarPoly};
use crate::field::{Elem, FieldError, StepKind};
use crate::series::{exp_int, exp_string, exp_to_i64, Ctx, Series, SeriesError};
use crate::tower::Subfield;

/// Default largest order examined when reading values off truncations.
pub const DEFAULT_VALUE_BUDGET: u64 = 256;

/// Largest `λ` tried when looking for a purely inseparable residue.
const MAX_LAMBDA: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValuationError {
    Series(SeriesError),
    Field(FieldError),
    NotPowerSeries(String),
    ValueExceedsBudget { budget: u64 },
    NotApplicable(String),
    ReducibleWitness(String),
    ZeroPolynomial,
}

impl fmt::Display for ValuationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationError::Series(e) => write!(f, "{e}"),
            ValuationError::Field(e) => write!(f, "{e}"),
            ValuationError::NotPowerSeries(m) => write!(f, "arc must be a power series of order at least 1: {m}"),
            ValuationError::ValueExceedsBudget { budget } => {
                write!(f, "value exceeds the budget {budget}; the element may lie in the completion kernel")
            }
            ValuationError::NotApplicable(m) => write!(f, "completion witness not applicable: {m}"),
            ValuationError::ReducibleWitness(m) => write!(f, "schedule entry is reducible: {m}"),
            ValuationError::ZeroPolynomial => write!(f, "the zero polynomial has no finite value"),
        }
    }
}

impl From<SeriesError> for ValuationError {
    fn from(e: SeriesError) -> Self {
        ValuationError::Series(e)
    }
}

impl From<FieldError> for ValuationError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::ReducibleWitness(w) => ValuationError::ReducibleWitness(w),
            e => ValuationError::Field(e),
        }
    }
}

/// How the coordinate of the next frame was produced from the residue `c` of `v_j / u^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorStep {
    /// `c` already in the residue field: `v_{j+1} = v_j/u^n − c`.
    Translation,
    /// `c` separable of degree `degree` over the residue field, which is extended by `c`.
    Separable { degree: u128 },
    /// `c^{p^λ}` in the residue field: `v_{j+1} = (v_j/u^n)^{p^λ} − c^{p^λ}`.
    Inseparable { lambda: u32 },
}

#[derive(Clone, Debug)]
pub struct ValFrame {
    pub index: usize,
    /// Number of quadratic transforms folded into this frame (the order `n`).
    pub blowups: u64,
    pub residue: Elem,
    pub step: GeneratorStep,
    pub residue_degree: u128,
    /// Value of the new coordinate in units of `ν(u)`, `None` when it vanishes to the budget.
    pub value: Option<u64>,
    pub coordinate: String,
}

#[derive(Clone, Debug)]
pub struct ValuationChain {
    pub ctx: Ctx,
    pub sigma: Series,
    pub frames: Vec<ValFrame>,
    pub residue: Subfield,
    /// The last coordinate vanished to the value budget, so the arc lies in the completion kernel.
    pub terminated: bool,
    /// Degrees of a declared unbounded residue schedule.
    pub schedule: Option<Vec<usize>>,
    pub kernel: Option<BivarPoly>,
    pub value_budget: u64,
}

impl ValuationChain {
    pub fn residue_degrees(&self) -> Vec<u128> {
        self.frames.iter().map(|f| f.residue_degree).collect()
    }

    /// `(ν(u), ν(v), ν(v_1), …)`; `None` marks a coordinate vanishing to the budget.
    pub fn values(&self) -> Vec<Option<u64>> {
        let mut out = vec![Some(1), self.frames.first().map(|f| f.blowups)];
        if self.frames.is_empty() {
            out[1] = None;
        }
        out.extend(self.frames.iter().map(|f| f.value));
        out
    }

    pub fn with_kernel(mut self, g: BivarPoly) -> Self {
        self.kernel = Some(g);
        self
    }

    fn refreshed_residue(&self) -> Subfield {
        let mut k = self.residue.clone();
        k.set_ambient(self.ctx.tower());
        k
    }
}

fn leading_term(s: &Series, budget: u64) -> Result<Option<(u64, Elem)>, ValuationError> {
    let mut h = 8u64;
    loop {
        let terms = s.terms_below(&exp_int(h as i64))?;
        if let Some((e, c)) = terms.into_iter().next() {
            let n = exp_to_i64(&e)
                .filter(|n| *n >= 0)
                .ok_or_else(|| ValuationError::NotPowerSeries(format!("exponent {}", exp_string(&e))))?;
            return Ok(Some((n as u64, c)));
        }
        if h >= budget {
            return Ok(None);
        }
        h = (2 * h).min(budget);
    }
}

/// The chain of generating elements along the arc `(u, v) = (x, σ(x))`, with at most
/// `budget` frames.
pub fn build_chain_from_series(sigma: &Series, budget: usize) -> Result<ValuationChain, ValuationError> {
    build_chain(sigma, budget, DEFAULT_VALUE_BUDGET)
}

pub fn build_chain(sigma: &Series, budget: usize, value_budget: u64) -> Result<ValuationChain, ValuationError> {
    let ctx = sigma.ctx().clone();
    let t = ctx.tower();
    let mut residue = t.generated_subfield(ctx.k_depth(), &[])?;
    let mut frames = Vec::new();
    let mut s = sigma.clone();
    if let Some((n, _)) = leading_term(&s, value_budget)? {
        if n == 0 {
            return Err(ValuationError::NotPowerSeries(String::from("σ has a nonzero constant term")));
        }
    }
    let mut terminated = false;
    for index in 1..=budget {
        let Some((n, c)) = leading_term(&s, value_budget)? else {
            terminated = true;
            break;
        };
        let quotient = s.shift(&exp_int(-(n as i64)));
        residue.set_ambient(ctx.tower());
        let step;
        let next;
        if residue.express(&c).is_some() {
            step = GeneratorStep::Translation;
            next = quotient.sub(&Series::constant(&ctx, c.clone()));
        } else if let Some((lambda, power)) = inseparable_power(&ctx, &mut residue, &c) {
            residue.extend(&format!("res{index}"), &c)?;
            step = GeneratorStep::Inseparable { lambda };
            let q = ctx.tower().characteristic().pow(lambda) as u32;
            next = quotient.pow(q).sub(&Series::constant(&ctx, power));
        } else {
            let before = residue.degree() as u128;
            residue.extend(&format!("res{index}"), &c)?;
            step = GeneratorStep::Separable { degree: residue.degree() as u128 / before };
            next = quotient.sub(&Series::constant(&ctx, c.clone()));
        }
        let value = leading_term(&next, value_budget)?.map(|(m, _)| m);
        let coordinate = match &step {
            GeneratorStep::Inseparable { lambda } => format!("(v{}/u^{n})^(p^{lambda}) - c{index}", index - 1),
            _ => format!("v{}/u^{n} - c{index}", index - 1),
        };
        frames.push(ValFrame {
            index,
            blowups: n,
            residue: c,
            step,
            residue_degree: residue.degree() as u128,
            value,
            coordinate,
        });
        s = next;
    }
    if !terminated && leading_term(&s, value_budget)?.is_none() {
        terminated = true;
    }
    residue.set_ambient(ctx.tower());
    Ok(ValuationChain { ctx, sigma: sigma.clone(), frames, residue, terminated, schedule: None, kernel: None, value_budget })
}

/// Smallest `λ ≥ 1` with `c^{p^λ}` in the residue field, for imperfect `k`.
fn inseparable_power(ctx: &Ctx, residue: &mut Subfield, c: &Elem) -> Option<(u32, Elem)> {
    let t = ctx.tower();
    let p = t.characteristic();
    if p == 0 || t.is_finite() {
        return None;
    }
    (1..=MAX_LAMBDA).find_map(|lambda| {
        let power = t.frobenius(c, lambda);
        residue.express(&power).map(|_| (lambda, power))
    })
}

/// `ν(f) = ord_x f(x, σ(x))`, with the truncation doubled up to the chain's value budget.
pub fn value_of(chain: &ValuationChain, f: &BivarPoly) -> Result<u64, ValuationError> {
    if f.is_zero() {
        return Err(ValuationError::ZeroPolynomial);
    }
    let mut h = 8u64;
    loop {
        let res = residue_below(&chain.ctx, f, &chain.sigma, &exp_int(h as i64))?;
        if let Some((e, _)) = res.first() {
            return exp_to_i64(e)
                .map(|n| n as u64)
                .ok_or_else(|| ValuationError::NotPowerSeries(format!("exponent {}", exp_string(e))));
        }
        if h >= chain.value_budget {
            return Err(ValuationError::ValueExceedsBudget { budget: chain.value_budget });
        }
        h = (2 * h).min(chain.value_budget);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankBudgets {
    /// Trailing frames with equal residue degree needed to call the tower stable.
    pub stable_frames: usize,
}

impl Default for RankBudgets {
    fn default() -> Self {
        RankBudgets { stable_frames: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RankVerdict {
    RankIncreases { degree: u128, frame: usize },
    RankDoesNotIncrease { schedule: Vec<usize>, prefix: Vec<u128> },
    Inconclusive { frames: usize, degrees: Vec<u128> },
}

impl RankVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            RankVerdict::RankIncreases { .. } => "rank-increases",
            RankVerdict::RankDoesNotIncrease { .. } => "rank-does-not-increase",
            RankVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

pub fn classify_rank_increase(chain: &ValuationChain, budgets: RankBudgets) -> RankVerdict {
    let degrees = chain.residue_degrees();
    if let Some(schedule) = &chain.schedule {
        let increasing = degrees.len() >= 2 && degrees.windows(2).all(|w| w[0] < w[1]);
        if increasing {
            return RankVerdict::RankDoesNotIncrease { schedule: schedule.clone(), prefix: degrees };
        }
    }
    let last = degrees.last().copied().unwrap_or(1);
    let stable = chain.terminated
        || (degrees.len() >= budgets.stable_frames
            && degrees[degrees.len() - budgets.stable_frames..].iter().all(|d| *d == last));
    if stable {
        let frame = degrees.iter().position(|d| *d == last).map_or(0, |i| i + 1);
        return RankVerdict::RankIncreases { degree: last, frame };
    }
    RankVerdict::Inconclusive { frames: degrees.len(), degrees }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    /// `ν(y_i)`.
    pub value: u64,
    /// Leading coefficient of `y_i`, a residue-field element; `y_{i+1} = y_i − α_i u^{n_i}`.
    pub alpha: Elem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// `y_0 = v^{p^r}`.
    pub r: u32,
    /// Every step with value at most the requested budget.
    pub steps: Vec<WitnessStep>,
    /// Value of the first element past the budget; `None` when it vanishes to the value budget.
    pub next: Option<u64>,
}

/// The Cauchy sequence `y_{i+1} = y_i − α_i u^{n_i}` with `n_0 < n_1 < …`, listed up to
/// value `n`.
pub fn completion_witness(chain: &ValuationChain, n: u64) -> Result<Witness, ValuationError> {
    let verdict = classify_rank_increase(chain, RankBudgets::default());
    if !matches!(verdict, RankVerdict::RankIncreases { .. }) {
        return Err(ValuationError::NotApplicable(format!("chain is classified {}", verdict.label())));
    }
    let t = chain.ctx.tower();
    let p = t.characteristic();
    let r_max = if p == 0 { 0 } else { MAX_LAMBDA };
    let horizon = (n + 1).max(8).min(chain.value_budget);
    'twist: for r in 0..=r_max {
        let q = p.max(1).pow(r) as u32;
        let power = chain.sigma.pow(q);
        let mut residue = chain.refreshed_residue();
        let mut steps = Vec::new();
        let mut h = horizon;
        loop {
            let terms = power.terms_below(&exp_int(h as i64))?;
            residue.set_ambient(chain.ctx.tower());
            for (e, c) in &terms {
                let v = exp_to_i64(e).ok_or_else(|| ValuationError::NotPowerSeries(exp_string(e)))? as u64;
                if residue.express(c).is_none() {
                    continue 'twist;
                }
                if v > n {
                    return Ok(Witness { r, steps, next: Some(v) });
                }
                if steps.iter().all(|s: &WitnessStep| s.value != v) {
                    steps.push(WitnessStep { value: v, alpha: c.clone() });
                }
            }
            if h >= chain.value_budget {
                return Ok(Witness { r, steps, next: None });
            }
            h = (2 * h).min(chain.value_budget);
        }
    }
    Err(ValuationError::NotApplicable(String::from("no twist of σ has coefficients in the residue field")))
}

/// A chain whose residue field picks up a root of each schedule entry in turn. Entries are
/// monic polynomials over `k`, lowest degree first. The schedule is treated as the prefix of a
/// declared unbounded one.
pub fn build_infinite_residue_chain(ctx: &Ctx, schedule: &[Vec<Elem>]) -> Result<ValuationChain, ValuationError> {
    let mut terms = Vec::new();
    for (i, h) in schedule.iter().enumerate() {
        let name = format!("alpha_{}", i + 1);
        if h.len() == 2 {
            let t = ctx.tower();
            terms.push((exp_int(i as i64 + 1), t.neg(&t.div(&h[0], &h[1])?)));
            continue;
        }
        let declared = !ctx.tower().is_finite();
        let root = ctx.ensure(&name, |t| t.adjoin(&name, h.clone(), StepKind::Separable, declared, Vec::new()))?;
        terms.push((exp_int(i as i64 + 1), root));
    }
    let sigma = Series::explicit(ctx, terms);
    let mut chain = build_chain(&sigma, schedule.len() + 1, DEFAULT_VALUE_BUDGET)?;
    chain.schedule = Some(schedule.iter().map(|h| h.len() - 1).collect());
    Ok(chain)
}
