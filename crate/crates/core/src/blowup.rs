//! Quadratic transforms of plane curve germs, strict transforms and branch expansion.
//!
//! A frame records how its parameter `y_i` was obtained from the previous one as
//! `y_{i-1} = x^s · (y_i + c)^{1/q}`: separable steps use `s = 1, q = 1`, inseparable steps
//! use `s = p^{λ(1)+⋯+λ(i-1)}` and `q = p^{λ(i)}`, and an opening translation uses `s = 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bivar::BivarPoly;
use crate::field::{Elem, FieldError, FieldTower, StepKind};
use crate::scalar::Scalar;
use crate::series::{exp_int, merge_add, trunc_inv, trunc_mul, Ctx, Exp, Horizon, Series, SeriesError, Term, TermSource};
use crate::tower::Subfield;
use crate::upoly;

/// Frames a lazy branch may add beyond its construction budget.
const EXTRA_STEPS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlowupError {
    BudgetTooSmall { budget: Exp },
    NotSeparable(String),
    LambdaNotMinimal { lambda: u32 },
    InseparableShape(String),
    NotInseparableCharacteristic,
    OracleStuck { step: usize, residue: String },
    NoPowerSeriesBranch { step: usize },
    DivisibleByX,
    ZeroPolynomial,
    Field(FieldError),
    Series(SeriesError),
}

impl fmt::Display for BlowupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowupError::BudgetTooSmall { budget } => {
                write!(f, "x-divisibility cannot be certified below x^{budget}")
            }
            BlowupError::NotSeparable(a) => write!(f, "{a} is not separable over the residue field"),
            BlowupError::LambdaNotMinimal { lambda } => {
                write!(f, "a smaller exponent than lambda = {lambda} already lands in the residue field")
            }
            BlowupError::InseparableShape(m) => write!(f, "strict transform has the wrong shape: {m}"),
            BlowupError::NotInseparableCharacteristic => {
                write!(f, "inseparable transforms need positive characteristic")
            }
            BlowupError::OracleStuck { step, residue } => {
                write!(f, "no root of the residue equation {residue} found at step {step}")
            }
            BlowupError::NoPowerSeriesBranch { step } => {
                write!(f, "strict transform became a unit at step {step}; no power-series branch")
            }
            BlowupError::DivisibleByX => write!(f, "polynomial is divisible by x"),
            BlowupError::ZeroPolynomial => write!(f, "polynomial is zero"),
            BlowupError::Field(e) => write!(f, "{e}"),
            BlowupError::Series(e) => write!(f, "{e}"),
        }
    }
}

impl From<FieldError> for BlowupError {
    fn from(e: FieldError) -> Self {
        BlowupError::Field(e)
    }
}

impl From<SeriesError> for BlowupError {
    fn from(e: SeriesError) -> Self {
        BlowupError::Series(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Separable,
    Inseparable,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Separable => "separable",
            Mode::Inseparable => "inseparable",
        }
    }
}

/// One substitution `y_prev = x^shift · (y_next + c)^{1/q}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transform {
    pub mode: Mode,
    pub shift: u64,
    pub lambda: u32,
    pub q: u64,
    /// Constant subtracted from `(y_prev / x^shift)^q`.
    pub c: Elem,
    /// Residue-field generator contributed by this step (`c^{1/q}`).
    pub alpha: Elem,
    /// Power of `x` removed from the substituted polynomial.
    pub b: Exp,
}

#[derive(Clone, Debug)]
pub struct BlowupFrame {
    pub index: usize,
    pub record: Vec<Transform>,
    /// Strict transform `g_i` in the variables `x, y_i`.
    pub g: BivarPoly,
    /// Accumulated `b_i` with `g = x^{b_i} g_i` after substitution.
    pub b: Exp,
    pub lambda_total: u32,
    /// Residue field `K_i` as a subfield over `k`.
    pub residue: Subfield,
    pub snc: bool,
}

impl BlowupFrame {
    /// The frame at the origin of `k[x, y]`.
    pub fn initial(ctx: &Ctx, g: &BivarPoly) -> Result<Self, BlowupError> {
        let t = ctx.tower();
        Ok(BlowupFrame {
            index: 0,
            record: Vec::new(),
            g: g.clone(),
            b: Exp::zero(),
            lambda_total: 0,
            residue: t.generated_subfield(ctx.k_depth(), &[])?,
            snc: snc_of(g),
        })
    }

    pub fn residue_degree(&self) -> usize {
        self.residue.degree()
    }

    /// Order of `g_i` at the origin (smallest `j + e` over its terms).
    pub fn order(&self) -> Option<Exp> {
        polynomial_order(&self.g)
    }

    pub fn last(&self) -> Option<&Transform> {
        self.record.last()
    }
}

#[derive(Clone, Debug)]
pub struct BlowupChain {
    pub mode: Mode,
    pub frames: Vec<BlowupFrame>,
}

impl BlowupChain {
    pub fn residue_degrees(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.residue_degree()).collect()
    }

    /// Per-step residue degree factors `[K_i : K_{i-1}]`.
    pub fn step_degrees(&self) -> Vec<usize> {
        self.frames.windows(2).map(|w| w[1].residue_degree() / w[0].residue_degree()).collect()
    }

    pub fn lambdas(&self) -> Vec<u32> {
        self.frames.iter().skip(1).map(|f| f.last().map(|s| s.lambda).unwrap_or(0)).collect()
    }

    /// First index from which every frame is SNC and the residue field no longer grows.
    pub fn stabilization_index(&self) -> Option<usize> {
        let n = self.frames.len();
        (0..n).find(|&i| {
            let d = self.frames[i].residue_degree();
            self.frames[i..].iter().all(|f| f.snc && f.residue_degree() == d)
        })
    }
}

/// Smallest `j + e` over the terms.
pub fn polynomial_order(g: &BivarPoly) -> Option<Exp> {
    g.terms.keys().map(|(j, e)| e + exp_int(*j as i64)).min()
}

/// Splits `g = x^a · h` with `h` not divisible by `x`.
pub fn strip_x(g: &BivarPoly) -> (Exp, BivarPoly) {
    let Some(a) = g.terms.keys().map(|(_, e)| e.clone()).min() else { return (Exp::zero(), g.clone()) };
    let h = BivarPoly { terms: g.terms.iter().map(|((j, e), c)| ((*j, e - &a), c.clone())).collect() };
    (a, h)
}

/// Whether `g(0, 0) ≠ 0`.
pub fn is_unit(g: &BivarPoly) -> bool {
    g.terms.contains_key(&(0, Exp::zero()))
}

fn has_linear_y(g: &BivarPoly) -> bool {
    g.terms.contains_key(&(1, Exp::zero()))
}

/// `(x, g)` forms a regular parameter pair after removing the `x`-power, or `g` is a unit.
pub fn snc_of(g: &BivarPoly) -> bool {
    let (_, h) = strip_x(g);
    !h.is_zero() && (is_unit(&h) || has_linear_y(&h))
}

pub fn detect_snc(frame: &BlowupFrame) -> bool {
    snc_of(&frame.g)
}

/// The root of `g` through the origin can be produced by Newton iteration.
fn newton_ready(g: &BivarPoly) -> bool {
    has_linear_y(g) && (g.y_degree() == Some(1) || !is_unit(g))
}

/// The residue polynomial `g(0, Y)`, lowest degree first.
pub fn residue_polynomial(t: &FieldTower, g: &BivarPoly) -> Vec<Elem> {
    let n = g.y_degree().unwrap_or(0) as usize;
    let mut out = vec![t.zero(); n + 1];
    for ((j, e), c) in &g.terms {
        if e.is_zero() {
            out[*j as usize] = c.clone();
        }
    }
    upoly::trimmed(&out)
}

fn binomial_row(t: &FieldTower, n: u64) -> Vec<Elem> {
    let mut row = vec![t.one()];
    for _ in 0..n {
        let mut next = vec![t.one(); row.len() + 1];
        for k in 1..row.len() {
            next[k] = t.add(&row[k - 1], &row[k]);
        }
        row = next;
    }
    row
}

/// `x^{-b} g(x, x^shift · (Y + c)^{1/q})` with `b` maximal. Terms at `x`-exponent `trunc` and
/// above are dropped from the result.
pub fn apply_transform(
    t: &FieldTower,
    g: &BivarPoly,
    shift: u64,
    q: u64,
    c: &Elem,
    trunc: Option<&Exp>,
) -> Result<(Exp, BivarPoly), BlowupError> {
    if g.is_zero() {
        return Err(BlowupError::ZeroPolynomial);
    }
    let s = exp_int(shift as i64);
    let moved: Vec<(u32, Exp, Elem)> =
        g.terms.iter().map(|((j, e), a)| (*j, e + &s * exp_int(*j as i64), a.clone())).collect();
    let b = moved.iter().map(|(_, e, _)| e.clone()).min().expect("nonzero");
    let mut out = BivarPoly::zero();
    let mut rows: BTreeMap<u64, Vec<Elem>> = BTreeMap::new();
    for (j, e, a) in moved {
        let e = e - &b;
        if trunc.map(|h| &e >= h).unwrap_or(false) {
            continue;
        }
        if j as u64 % q != 0 {
            return Err(BlowupError::InseparableShape(format!("y-degree {j} is not a multiple of {q}")));
        }
        let n = j as u64 / q;
        let row = rows.entry(n).or_insert_with(|| binomial_row(t, n));
        for (k, bin) in row.iter().enumerate() {
            let coeff = t.mul(&t.mul(&a, bin), &t.pow(c, (n - k as u64) as u128));
            out.add_term(t, k as u32, e.clone(), coeff);
        }
    }
    if out.is_zero() {
        return Err(BlowupError::BudgetTooSmall { budget: trunc.cloned().unwrap_or_else(Exp::zero) });
    }
    Ok((b, out))
}

/// Applies the whole parameter record of `frame` to `g`. Returns `(b, g₁, unit)`.
pub fn strict_transform(
    t: &FieldTower,
    frame: &BlowupFrame,
    g: &BivarPoly,
    trunc: Option<&Exp>,
) -> Result<(Exp, BivarPoly, bool), BlowupError> {
    let mut b = Exp::zero();
    let mut cur = g.clone();
    for step in &frame.record {
        let (bi, next) = apply_transform(t, &cur, step.shift, step.q, &step.c, trunc)?;
        b += bi;
        cur = next;
    }
    if frame.record.is_empty() {
        let (a, h) = strip_x(&cur);
        b = a;
        cur = h;
        if let Some(tr) = trunc {
            cur.terms.retain(|(_, e), _| e < tr);
            if cur.is_zero() {
                return Err(BlowupError::BudgetTooSmall { budget: tr.clone() });
            }
        }
    }
    let unit = is_unit(&cur);
    Ok((b, cur, unit))
}

/// The `p`-th root of `c` in the shared field, adjoining it when it is missing.
pub fn pth_root_in(ctx: &Ctx, c: &Elem) -> Result<Elem, BlowupError> {
    let t = ctx.tower();
    if let Some(z) = t.pth_root(c) {
        return Ok(z);
    }
    let p = t.characteristic();
    let shown = t.format(c);
    let name = if shown.chars().all(|ch| ch.is_alphanumeric() || ch == '^' || ch == '_') {
        format!("{shown}^(1/{p})")
    } else {
        format!("({shown})^(1/{p})")
    };
    let c = c.clone();
    Ok(ctx.ensure(&name, |t| {
        let mut mp = vec![t.zero(); p as usize + 1];
        mp[0] = t.neg(&c);
        mp[p as usize] = t.one();
        t.adjoin(&name, mp, StepKind::PurelyInseparable, false, Vec::new())
    })?)
}

fn root_q(ctx: &Ctx, c: &Elem, lambda: u32) -> Result<Elem, BlowupError> {
    let mut z = c.clone();
    for _ in 0..lambda {
        z = pth_root_in(ctx, &z)?;
    }
    Ok(z)
}

/// Square root of `d`, adjoining it when it is missing.
fn sqrt_in_ctx(ctx: &Ctx, d: &Elem) -> Option<Elem> {
    let t = ctx.tower();
    if let Ok(Some(s)) = t.sqrt_in(d, t.num_steps()) {
        return Some(s);
    }
    let shown = t.format(d);
    if let Ok(n) = shown.parse::<u64>() {
        return ctx.radical(n).ok();
    }
    let name = format!("sqrt({shown})");
    let d = d.clone();
    ctx.ensure(&name, |t| {
        t.adjoin(&name, vec![t.neg(&d), t.zero(), t.one()], StepKind::Separable, false, Vec::new())
    })
    .ok()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootStrategy {
    /// Candidates supplied by the user, tried first.
    UserSeeds(Vec<Elem>),
    /// Zero, degree one and rational roots.
    LinearSolve,
    /// Quadratics through square roots and binomials `z^{p^e} − c`.
    Radical,
    /// `z^p − z − c` over finite towers.
    ArtinSchreier,
    /// Enumeration of a finite tower.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootOracle {
    pub strategies: Vec<RootStrategy>,
}

impl Default for RootOracle {
    fn default() -> Self {
        RootOracle {
            strategies: vec![
                RootStrategy::Radical,
                RootStrategy::LinearSolve,
                RootStrategy::ArtinSchreier,
                RootStrategy::Exhaustive,
            ],
        }
    }
}

fn rational_constant(t: &FieldTower, c: &Elem) -> Option<BigRational> {
    match c {
        Elem::Base(r) => match r.as_constant(t.prime()) {
            Some(Scalar::Rat(q)) => Some(q),
            _ => None,
        },
        _ => None,
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            if &d * &d != *n {
                out.push(n / &d);
            }
        }
        d += 1;
    }
    out
}

fn rational_roots(t: &FieldTower, f: &[Elem]) -> Vec<Elem> {
    let Some(rats) = f.iter().map(|c| rational_constant(t, c)).collect::<Option<Vec<_>>>() else {
        return Vec::new();
    };
    let l = rats.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = rats.iter().map(|q| (q * &l).to_integer()).collect();
    let Some(low) = ints.iter().position(|c| !c.is_zero()) else { return Vec::new() };
    let c0 = ints[low].abs();
    let lead = ints.last().expect("nonempty").abs();
    if c0.bits() > 40 || lead.bits() > 40 {
        return Vec::new();
    }
    let mut out: Vec<BigRational> = Vec::new();
    for num in divisors(&c0) {
        for den in divisors(&lead) {
            for sign in [1i32, -1] {
                let x = BigRational::new(&num * sign, den.clone());
                let mut acc = BigRational::zero();
                for c in rats.iter().rev() {
                    acc = acc * &x + c;
                }
                if acc.is_zero() && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
    }
    out.sort_by(|a, b| a.abs().cmp(&b.abs()).then(b.cmp(a)));
    out.into_iter().map(|q| t.from_scalar(Scalar::Rat(q))).collect()
}

impl RootOracle {
    pub fn with_seeds(seeds: Vec<Elem>) -> Self {
        let mut o = RootOracle::default();
        o.strategies.insert(0, RootStrategy::UserSeeds(seeds));
        o
    }

    /// Verified roots of `f` (lowest degree first) in strategy order. Within a strategy,
    /// declared labels come first (`+` before `−` for square roots), then canonical order.
    pub fn roots(&self, ctx: &Ctx, f: &[Elem]) -> Vec<Elem> {
        let t0 = ctx.tower();
        let f = upoly::trimmed(f);
        let Some(n) = upoly::degree(&f) else { return Vec::new() };
        if n == 0 {
            return Vec::new();
        }
        let f = upoly::monic(&t0, &f);
        let mut out: Vec<Elem> = Vec::new();
        for strategy in &self.strategies {
            let cands = self.candidates(ctx, strategy, &f, n);
            let t = ctx.tower();
            for z in cands {
                if upoly::eval(&t, &f, &z).is_zero() && !out.contains(&z) {
                    out.push(z);
                }
            }
        }
        out
    }

    fn candidates(&self, ctx: &Ctx, strategy: &RootStrategy, f: &[Elem], n: usize) -> Vec<Elem> {
        let t = ctx.tower();
        let p = t.characteristic();
        match strategy {
            RootStrategy::UserSeeds(s) => s.iter().filter(|z| t.contains(z)).cloned().collect(),
            RootStrategy::LinearSolve => {
                let mut out = Vec::new();
                if f[0].is_zero() {
                    out.push(t.zero());
                }
                if n == 1 {
                    out.push(t.neg(&f[0]));
                }
                out.extend(rational_roots(&t, f));
                out
            }
            RootStrategy::Radical => {
                if n == 2 && p != 2 {
                    let half = t.inv(&t.from_i64(2)).expect("characteristic is not 2");
                    let hb = t.mul(&f[1], &half);
                    let disc = t.sub(&t.mul(&hb, &hb), &f[0]);
                    let Some(s) = sqrt_in_ctx(ctx, &disc) else { return Vec::new() };
                    let t = ctx.tower();
                    let nb = t.neg(&hb);
                    return vec![t.add(&nb, &s), t.sub(&nb, &s)];
                }
                let binomial = f[1..n].iter().all(|c| c.is_zero());
                if binomial && p > 0 && crate::tower::is_power_of(n as u64, p) {
                    let mut lambda = 0;
                    let mut q = 1;
                    while q < n {
                        q *= p as usize;
                        lambda += 1;
                    }
                    return root_q(ctx, &t.neg(&f[0]), lambda).map(|z| vec![z]).unwrap_or_default();
                }
                Vec::new()
            }
            RootStrategy::ArtinSchreier => {
                let shape = p > 0
                    && n == p as usize
                    && f[1] == t.from_i64(-1)
                    && f[2..n].iter().all(|c| c.is_zero());
                if shape {
                    sorted_field_roots(&t, f)
                } else {
                    Vec::new()
                }
            }
            RootStrategy::Exhaustive => sorted_field_roots(&t, f),
        }
    }
}

fn sorted_field_roots(t: &FieldTower, f: &[Elem]) -> Vec<Elem> {
    let Some(els) = t.elements() else { return Vec::new() };
    let mut roots: Vec<Elem> = els.into_iter().filter(|z| upoly::eval(t, f, z).is_zero()).collect();
    roots.sort_by_key(|z| t.format(z));
    roots
}

fn push_frame(
    ctx: &Ctx,
    frame: &BlowupFrame,
    mode: Mode,
    shift: u64,
    lambda: u32,
    c: &Elem,
    alpha: &Elem,
) -> Result<BlowupFrame, BlowupError> {
    let t = ctx.tower();
    let q = t.characteristic().max(1).pow(lambda);
    let (b, g) = apply_transform(&t, &frame.g, shift, q, c, None)?;
    let mut residue = frame.residue.clone();
    residue.set_ambient(t.clone());
    let before = residue.degree();
    if residue.express(alpha).is_none() {
        residue.extend(&format!("a{}", frame.index + 1), alpha)?;
    }
    if lambda > 0 && residue.degree() != before * q as usize {
        return Err(BlowupError::LambdaNotMinimal { lambda });
    }
    let mut record = frame.record.clone();
    record.push(Transform { mode, shift, lambda, q, c: c.clone(), alpha: alpha.clone(), b: b.clone() });
    Ok(BlowupFrame {
        index: frame.index + 1,
        record,
        snc: snc_of(&g),
        g,
        b: &frame.b + b,
        lambda_total: frame.lambda_total + lambda,
        residue,
    })
}

/// `y_{i+1} = y_i / x − α` with `α` separable over the residue field.
pub fn transform_step(ctx: &Ctx, frame: &BlowupFrame, alpha: &Elem) -> Result<BlowupFrame, BlowupError> {
    check_separable(ctx, frame, alpha)?;
    push_frame(ctx, frame, Mode::Separable, 1, 0, alpha, alpha)
}

fn check_separable(ctx: &Ctx, frame: &BlowupFrame, alpha: &Elem) -> Result<(), BlowupError> {
    let t = ctx.tower();
    if t.characteristic() == 0 {
        return Ok(());
    }
    let mut sub = frame.residue.clone();
    sub.set_ambient(t.clone());
    if sub.express(alpha).is_some() {
        return Ok(());
    }
    sub.extend("alpha^p", &t.frobenius(alpha, 1))?;
    match sub.express(alpha) {
        Some(_) => Ok(()),
        None => Err(BlowupError::NotSeparable(t.format(alpha))),
    }
}

/// `y_{i+1} = (y_i / x^{p^{Λ_i}})^{p^λ} − α_power`, where `Λ_i` is the sum of earlier `λ`.
pub fn transform_step_insep(
    ctx: &Ctx,
    frame: &BlowupFrame,
    lambda: u32,
    alpha_power: &Elem,
) -> Result<BlowupFrame, BlowupError> {
    let t = ctx.tower();
    let p = t.characteristic();
    if p == 0 {
        return Err(BlowupError::NotInseparableCharacteristic);
    }
    if lambda > 0 {
        if let Some(z) = t.pth_root(alpha_power) {
            let mut sub = frame.residue.clone();
            sub.set_ambient(t.clone());
            if sub.express(&z).is_some() {
                return Err(BlowupError::LambdaNotMinimal { lambda });
            }
        }
    }
    let beta = root_q(ctx, alpha_power, lambda)?;
    let shift = p.pow(frame.lambda_total);
    push_frame(ctx, frame, Mode::Inseparable, shift, lambda, alpha_power, &beta)
}

/// Computes the next frame along the branch chosen by the oracle.
fn next_frame(ctx: &Ctx, frame: &BlowupFrame, oracle: &RootOracle, mode: Mode) -> Result<BlowupFrame, BlowupError> {
    let t = ctx.tower();
    let step = frame.index + 1;
    if is_unit(&frame.g) {
        // The branch does not pass through the origin of this chart: translate first.
        let r = residue_polynomial(&t, &frame.g);
        if upoly::degree(&r).unwrap_or(0) == 0 {
            return Err(BlowupError::NoPowerSeriesBranch { step });
        }
        let roots = oracle.roots(ctx, &r);
        let Some(a) = roots.first() else {
            return Err(BlowupError::OracleStuck { step, residue: format_upoly(&t, &r) });
        };
        return push_frame(ctx, frame, mode, 0, 0, a, a);
    }
    let p = t.characteristic();
    let shift = match mode {
        Mode::Separable => 1,
        Mode::Inseparable => p.pow(frame.lambda_total),
    };
    let (_, h) = apply_transform(&t, &frame.g, shift, 1, &t.zero(), None)?;
    let r = residue_polynomial(&t, &h);
    if upoly::degree(&r).unwrap_or(0) == 0 {
        return Err(BlowupError::NoPowerSeriesBranch { step });
    }
    match mode {
        Mode::Separable => {
            let roots = oracle.roots(ctx, &r);
            let Some(a) = roots.first() else {
                return Err(BlowupError::OracleStuck { step, residue: format_upoly(&t, &r) });
            };
            transform_step(ctx, frame, a)
        }
        Mode::Inseparable => {
            if p == 0 {
                return Err(BlowupError::NotInseparableCharacteristic);
            }
            let mut mu = 0u32;
            let mut q = 1u64;
            while h.terms.keys().all(|(j, _)| *j as u64 % (q * p) == 0) {
                q *= p;
                mu += 1;
            }
            let reduced: Vec<Elem> = r.iter().step_by(q as usize).cloned().collect();
            let roots = oracle.roots(ctx, &reduced);
            let Some(c) = roots.first() else {
                return Err(BlowupError::OracleStuck { step, residue: format_upoly(&t, &r) });
            };
            let t = ctx.tower();
            let mut sub = frame.residue.clone();
            sub.set_ambient(t.clone());
            let mut lambda = mu;
            let mut c = c.clone();
            while lambda > 0 {
                match t.pth_root(&c) {
                    Some(z) if sub.express(&z).is_some() => {
                        c = z;
                        lambda -= 1;
                    }
                    _ => break,
                }
            }
            transform_step_insep(ctx, frame, lambda, &c)
        }
    }
}

fn format_upoly(t: &FieldTower, f: &[Elem]) -> String {
    let g = BivarPoly::from_terms(t, f.iter().enumerate().map(|(j, c)| (j as u32, Exp::zero(), c.clone())));
    g.format(t).replace('y', "Y")
}

/// Newton iteration for the root of `g(x, y)` through `y(0) = 0` (or the exact root of a
/// polynomial of degree one in `y`), below `bound`.
pub fn newton_branch(t: &FieldTower, g: &BivarPoly, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
    if !bound.is_positive() {
        return Ok(Vec::new());
    }
    let h: Horizon = Some(bound.clone());
    let n = g.y_degree().unwrap_or(0);
    let coeff = |j: u32| -> Vec<Term> { g.y_coefficient(j).into_iter().filter(|(e, _)| e < bound).collect() };
    let coeffs: Vec<Vec<Term>> = (0..=n).map(coeff).collect();
    let dcoeffs: Vec<Vec<Term>> = (1..=n)
        .map(|j| coeffs[j as usize].iter().map(|(e, c)| (e.clone(), t.mul(c, &t.from_i64(j as i64)))).collect())
        .collect();
    let horner = |cs: &[Vec<Term>], y: &[Term]| -> Vec<Term> {
        let mut acc: Vec<Term> = Vec::new();
        for c in cs.iter().rev() {
            acc = merge_add(t, &trunc_mul(t, &acc, y, &h), c);
        }
        acc
    };
    let mut y: Vec<Term> = Vec::new();
    for _ in 0..256 {
        let r = horner(&coeffs, &y);
        if r.is_empty() {
            return Ok(y);
        }
        let d = horner(&dcoeffs, &y);
        if d.first().map(|(e, _)| !e.is_zero()).unwrap_or(true) {
            return Err(SeriesError::Source(String::from("derivative is not a unit at the origin")));
        }
        let inv = trunc_inv(t, &d, bound);
        let step: Vec<Term> = trunc_mul(t, &r, &inv, &h).into_iter().map(|(e, c)| (e, t.neg(&c))).collect();
        y = merge_add(t, &y, &step);
    }
    Err(SeriesError::Source(String::from("Newton iteration did not converge")))
}

/// A branch produced lazily from its blowup chain, growing the chain when needed.
#[derive(Debug)]
pub struct BranchSource {
    ctx: Ctx,
    chain: RefCell<BlowupChain>,
    oracle: RootOracle,
    max_frames: usize,
}

impl BranchSource {
    fn ensure_ready(&self) -> Result<(), SeriesError> {
        let mut chain = self.chain.borrow_mut();
        let mode = chain.mode;
        while !newton_ready(&chain.frames.last().expect("initial frame").g) {
            if chain.frames.len() > self.max_frames {
                return Err(SeriesError::Source(String::from("branch did not reach a smooth frame")));
            }
            let last = chain.frames.last().expect("initial frame").clone();
            let next = next_frame(&self.ctx, &last, &self.oracle, mode).map_err(|e| SeriesError::Source(format!("{e}")))?;
            chain.frames.push(next);
        }
        Ok(())
    }
}

impl TermSource for BranchSource {
    fn terms_below(&self, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
        self.ensure_ready()?;
        let chain = self.chain.borrow();
        let last = chain.frames.last().expect("initial frame");
        let mut bounds = vec![bound.clone()];
        for step in &last.record {
            let prev = bounds.last().expect("nonempty").clone();
            bounds.push((prev - exp_int(step.shift as i64)) * exp_int(step.q as i64));
        }
        let t = self.ctx.tower();
        let mut y = newton_branch(&t, &last.g, bounds.last().expect("nonempty"))?;
        for (i, step) in last.record.iter().enumerate().rev() {
            let with_c = merge_add(&t, &y, &[(Exp::zero(), step.c.clone())]);
            let mut next = Vec::with_capacity(with_c.len());
            for (e, c) in with_c.into_iter().filter(|(_, c)| !c.is_zero()) {
                let root = root_q(&self.ctx, &c, step.lambda).map_err(|e| SeriesError::Source(format!("{e}")))?;
                let e = e / exp_int(step.q as i64) + exp_int(step.shift as i64);
                if &e < &bounds[i] {
                    next.push((e, root));
                }
            }
            y = next;
        }
        Ok(y)
    }

    fn prefix(&self, m: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
        self.ensure_ready()?;
        let p = self.ctx.tower().characteristic().max(1);
        let lambda = self.chain.borrow().frames.last().map(|f| f.lambda_total).unwrap_or(0);
        let h = Exp::new(BigInt::from(m as u64 + 1), BigInt::from(p.pow(lambda)));
        Ok((self.terms_below(&h)?, Some(h)))
    }
}

/// Follows one branch of `g = 0` through successive quadratic transforms for `budget` steps.
/// An input that is already linear in `y` with unit leading coefficient needs no steps. The returned series
/// continues lazily past the chain.
pub fn expand_branch(
    ctx: &Ctx,
    g: &BivarPoly,
    oracle: &RootOracle,
    mode: Mode,
    budget: usize,
) -> Result<(Series, BlowupChain), BlowupError> {
    if g.is_zero() {
        return Err(BlowupError::ZeroPolynomial);
    }
    if !strip_x(g).0.is_zero() {
        return Err(BlowupError::DivisibleByX);
    }
    if mode == Mode::Inseparable && ctx.tower().characteristic() == 0 {
        return Err(BlowupError::NotInseparableCharacteristic);
    }
    let mut chain = BlowupChain { mode, frames: vec![BlowupFrame::initial(ctx, g)?] };
    while chain.frames.len() <= budget {
        let last = chain.frames.last().expect("initial frame");
        if last.index == 0 && newton_ready(&last.g) && last.g.y_degree() == Some(1) {
            break;
        }
        let next = next_frame(ctx, last, oracle, mode)?;
        chain.frames.push(next);
    }
    let source = BranchSource {
        ctx: ctx.clone(),
        chain: RefCell::new(chain.clone()),
        oracle: oracle.clone(),
        max_frames: chain.frames.len() + EXTRA_STEPS,
    };
    Ok((Series::custom(ctx, Rc::new(source)), chain))
}
