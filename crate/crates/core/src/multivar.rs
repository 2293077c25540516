//! Series in several variables: slices `δ_m`, fiber series along one axis, and the
//! criterion obtained by probing univariate fibers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;

use crate::algebraicity::{check_full, Budgets, Verdict};
use crate::field::{Elem, FieldTower};
use crate::series::{exp_int, exp_to_i64, Ctx, Exp, Series, SeriesError, Term, TermSource};

/// Largest total degree a truncation may request.
pub const MAX_DEGREE: u64 = 60;

/// Coefficients keyed by exponent vectors.
pub type MTerms = BTreeMap<Vec<u64>, Elem>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultiError {
    Series(SeriesError),
    NonIntegerExponent(String),
    ArityMismatch { expected: usize, found: usize },
    DegreeTooLarge(u64),
    ZeroDirection,
}

impl fmt::Display for MultiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiError::Series(e) => write!(f, "{e}"),
            MultiError::NonIntegerExponent(e) => write!(f, "lifted series has exponent {e}, expected a natural number"),
            MultiError::ArityMismatch { expected, found } => {
                write!(f, "expected {expected} variables, found {found}")
            }
            MultiError::DegreeTooLarge(d) => write!(f, "total degree {d} exceeds the limit {MAX_DEGREE}"),
            MultiError::ZeroDirection => write!(f, "lift direction must be nonzero"),
        }
    }
}

impl From<SeriesError> for MultiError {
    fn from(e: SeriesError) -> Self {
        MultiError::Series(e)
    }
}

#[derive(Debug)]
enum MRule {
    Explicit(MTerms),
    /// `s(X^dir)` for a univariate series `s` with natural exponents.
    Lift(Series, Vec<u64>),
    /// `1 / (1 − Σ c_i x_i)`.
    Geometric(Vec<Elem>),
    Add(MultiSeries, MultiSeries),
    Mul(MultiSeries, MultiSeries),
    /// Coefficient of `x_n^m`, in the first `n − 1` variables.
    Slice(MultiSeries, u64),
}

#[derive(Clone, Debug)]
pub struct MultiSeries {
    ctx: Ctx,
    n: usize,
    rule: Rc<MRule>,
}

fn degree(i: &[u64]) -> u64 {
    i.iter().sum()
}

fn add_into(t: &FieldTower, acc: &mut MTerms, k: Vec<u64>, c: Elem) {
    let v = match acc.remove(&k) {
        Some(old) => t.add(&old, &c),
        None => c,
    };
    if !v.is_zero() {
        acc.insert(k, v);
    }
}

/// All exponent vectors of length `n` with total degree below `d`.
fn indices_below(n: usize, d: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for v in &out {
            let used = degree(v);
            for e in 0..d.saturating_sub(used) {
                let mut w = v.clone();
                w.push(e);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn binomial(n: u64, k: u64) -> i64 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as i64
}

impl MultiSeries {
    fn make(ctx: &Ctx, n: usize, rule: MRule) -> Self {
        MultiSeries { ctx: ctx.clone(), n, rule: Rc::new(rule) }
    }

    pub fn explicit(ctx: &Ctx, n: usize, terms: Vec<(Vec<u64>, Elem)>) -> Result<Self, MultiError> {
        let t = ctx.tower();
        let mut m = MTerms::new();
        for (i, c) in terms {
            if i.len() != n {
                return Err(MultiError::ArityMismatch { expected: n, found: i.len() });
            }
            add_into(&t, &mut m, i, c);
        }
        Ok(Self::make(ctx, n, MRule::Explicit(m)))
    }

    pub fn lift(s: &Series, dir: Vec<u64>) -> Result<Self, MultiError> {
        if degree(&dir) == 0 {
            return Err(MultiError::ZeroDirection);
        }
        Ok(Self::make(s.ctx(), dir.len(), MRule::Lift(s.clone(), dir)))
    }

    pub fn geometric(ctx: &Ctx, coeffs: Vec<Elem>) -> Self {
        let n = coeffs.len();
        Self::make(ctx, n, MRule::Geometric(coeffs))
    }

    pub fn add(&self, o: &MultiSeries) -> Result<Self, MultiError> {
        self.same_arity(o)?;
        Ok(Self::make(&self.ctx, self.n, MRule::Add(self.clone(), o.clone())))
    }

    pub fn mul(&self, o: &MultiSeries) -> Result<Self, MultiError> {
        self.same_arity(o)?;
        Ok(Self::make(&self.ctx, self.n, MRule::Mul(self.clone(), o.clone())))
    }

    fn same_arity(&self, o: &MultiSeries) -> Result<(), MultiError> {
        if self.n != o.n {
            return Err(MultiError::ArityMismatch { expected: self.n, found: o.n });
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    /// All terms of total degree below `d`.
    pub fn terms_below(&self, d: u64) -> Result<MTerms, MultiError> {
        if d > MAX_DEGREE + 1 {
            return Err(MultiError::DegreeTooLarge(d));
        }
        match &*self.rule {
            MRule::Explicit(m) => Ok(m.iter().filter(|(i, _)| degree(i) < d).map(|(i, c)| (i.clone(), c.clone())).collect()),
            MRule::Lift(s, dir) => {
                let w = degree(dir);
                let bound = exp_int(d.div_ceil(w) as i64);
                let mut out = MTerms::new();
                let terms = s.terms_below(&bound)?;
                let t = self.ctx.tower();
                for (e, c) in terms {
                    let i = exp_to_i64(&e)
                        .filter(|i| *i >= 0)
                        .ok_or_else(|| MultiError::NonIntegerExponent(crate::series::exp_string(&e)))?;
                    let idx: Vec<u64> = dir.iter().map(|k| k * i as u64).collect();
                    if degree(&idx) < d {
                        add_into(&t, &mut out, idx, c);
                    }
                }
                Ok(out)
            }
            MRule::Geometric(cs) => {
                let t = self.ctx.tower();
                let mut out = MTerms::new();
                for idx in indices_below(self.n, d) {
                    let mut coeff = t.one();
                    let mut used = 0u64;
                    for (k, c) in idx.iter().zip(cs) {
                        used += k;
                        coeff = t.mul(&coeff, &t.from_i64(binomial(used, *k)));
                        coeff = t.mul(&coeff, &t.pow(c, *k as u128));
                    }
                    add_into(&t, &mut out, idx, coeff);
                }
                Ok(out)
            }
            MRule::Add(a, b) => {
                let mut out = a.terms_below(d)?;
                let rest = b.terms_below(d)?;
                let t = self.ctx.tower();
                for (i, c) in rest {
                    add_into(&t, &mut out, i, c);
                }
                Ok(out)
            }
            MRule::Mul(a, b) => {
                let (x, y) = (a.terms_below(d)?, b.terms_below(d)?);
                Ok(mul_terms(&self.ctx.tower(), &x, &y, d))
            }
            MRule::Slice(s, m) => {
                let mut out = MTerms::new();
                for (i, c) in s.terms_below(d + m)? {
                    let (last, rest) = i.split_last().expect("at least two variables");
                    if last == m && degree(rest) < d {
                        out.insert(rest.to_vec(), c);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Whether every coefficient of `σ^{p^r}` provably lies in `k`.
    pub fn twist_lands_in_k(&self, r: u32) -> bool {
        let t = self.ctx.tower();
        let kd = self.ctx.k_depth();
        let in_k = |c: &Elem| t.frobenius(c, r).level() <= kd;
        match &*self.rule {
            MRule::Explicit(m) => m.values().all(in_k),
            MRule::Lift(s, _) => s.twist_lands_in_k(r),
            MRule::Geometric(cs) => cs.iter().all(in_k),
            MRule::Add(a, b) | MRule::Mul(a, b) => a.twist_lands_in_k(r) && b.twist_lands_in_k(r),
            MRule::Slice(s, _) => s.twist_lands_in_k(r),
        }
    }

    /// The first `count` nonzero coefficients in graded order, searching up to [`MAX_DEGREE`].
    pub fn coefficients(&self, count: usize) -> Result<Vec<Elem>, MultiError> {
        let mut d = 4u64;
        loop {
            let terms = self.terms_below(d)?;
            if terms.len() >= count || d > MAX_DEGREE {
                let mut keyed: Vec<(u64, Vec<u64>, Elem)> =
                    terms.into_iter().map(|(i, c)| (degree(&i), i, c)).collect();
                keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
                return Ok(keyed.into_iter().take(count).map(|(_, _, c)| c).collect());
            }
            d = (2 * d).min(MAX_DEGREE + 1);
        }
    }
}

fn mul_terms(t: &FieldTower, a: &MTerms, b: &MTerms, d: u64) -> MTerms {
    let mut out = MTerms::new();
    for (i, c) in a {
        for (j, e) in b {
            let k: Vec<u64> = i.iter().zip(j).map(|(x, y)| x + y).collect();
            if degree(&k) < d {
                add_into(t, &mut out, k, t.mul(c, e));
            }
        }
    }
    out
}

/// `δ_m`: the coefficient of `x_n^m`, as a series in the first `n − 1` variables.
pub fn slice(s: &MultiSeries, m: u64) -> MultiSeries {
    assert!(s.n >= 2, "slicing needs at least two variables");
    MultiSeries::make(&s.ctx, s.n - 1, MRule::Slice(s.clone(), m))
}

#[derive(Debug)]
struct FiberSource {
    s: MultiSeries,
    axis: usize,
    index: Vec<u64>,
}

impl TermSource for FiberSource {
    fn terms_below(&self, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
        let off: u64 = degree(&self.index) - self.index[self.axis];
        let ceil = bound.ceil().to_integer();
        let top: u64 = if ceil.is_positive() { ceil.try_into().unwrap_or(MAX_DEGREE) } else { 0 };
        let terms = self
            .s
            .terms_below(off + top)
            .map_err(|e| SeriesError::Source(format!("{e}")))?;
        let mut out: Vec<Term> = terms
            .into_iter()
            .filter(|(i, _)| i.iter().enumerate().all(|(k, e)| k == self.axis || *e == self.index[k]))
            .map(|(i, c)| (exp_int(i[self.axis] as i64), c))
            .filter(|(e, _)| e < bound)
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

/// `a_{I,l} = Σ_j α_J x_l^j` where `J` agrees with `I` off axis `l` (0-based).
pub fn fiber_series(s: &MultiSeries, axis: usize, index: &[u64]) -> Series {
    let mut index = index.to_vec();
    index[axis] = 0;
    structured_fiber(s, axis, &index)
        .unwrap_or_else(|| Series::custom(&s.ctx, Rc::new(FiberSource { s: s.clone(), axis, index })))
}

fn structured_fiber(s: &MultiSeries, axis: usize, index: &[u64]) -> Option<Series> {
    let ctx = &s.ctx;
    let off_axis_zero = index.iter().enumerate().all(|(k, e)| k == axis || *e == 0);
    match &*s.rule {
        MRule::Explicit(m) => {
            let terms: Vec<Term> = m
                .iter()
                .filter(|(i, _)| i.iter().enumerate().all(|(k, e)| k == axis || *e == index[k]))
                .map(|(i, c)| (exp_int(i[axis] as i64), c.clone()))
                .collect();
            Some(Series::explicit(ctx, terms))
        }
        MRule::Lift(series, dir) => {
            let on_axis = dir.iter().enumerate().all(|(k, e)| k == axis || *e == 0);
            if on_axis {
                if !off_axis_zero {
                    return Some(Series::zero(ctx));
                }
                return (dir[axis] == 1).then(|| series.clone());
            }
            // Off-axis support pins down at most one index i.
            let (k, step) = dir.iter().enumerate().find(|(k, e)| *k != axis && **e > 0)?;
            if index[k] % step != 0 {
                return Some(Series::zero(ctx));
            }
            let i = index[k] / step;
            let fits = dir.iter().enumerate().all(|(kk, e)| kk == axis || e * i == index[kk]);
            if !fits {
                return Some(Series::zero(ctx));
            }
            let e = exp_int(i as i64);
            let terms = series.terms_below(&(e.clone() + exp_int(1))).ok()?;
            let c = terms.into_iter().find(|(x, _)| *x == e).map(|(_, c)| c);
            Some(match c {
                Some(c) => Series::explicit(ctx, vec![(exp_int((dir[axis] * i) as i64), c)]),
                None => Series::zero(ctx),
            })
        }
        MRule::Add(a, b) => Some(sum(structured_fiber(a, axis, index)?, structured_fiber(b, axis, index)?)),
        MRule::Mul(a, b) => {
            let mut acc = Series::zero(ctx);
            let mut splits = vec![Vec::new()];
            for (k, e) in index.iter().enumerate() {
                let mut next = Vec::new();
                for v in &splits {
                    let range = if k == axis { 0..1 } else { 0..e + 1 };
                    for x in range {
                        let mut w: Vec<u64> = v.clone();
                        w.push(x);
                        next.push(w);
                    }
                }
                splits = next;
            }
            for left in splits {
                let right: Vec<u64> = index.iter().zip(&left).map(|(i, l)| i - l).collect();
                let fa = structured_fiber(a, axis, &left)?;
                let fb = structured_fiber(b, axis, &right)?;
                acc = sum(acc, product(&fa, &fb));
            }
            Some(acc)
        }
        MRule::Geometric(_) | MRule::Slice(..) => None,
    }
}

fn is_zero_series(s: &Series) -> bool {
    s.as_explicit().is_some_and(|t| t.is_empty())
}

/// Sum that drops zero operands so the structure of the other survives.
fn sum(a: Series, b: Series) -> Series {
    if is_zero_series(&a) {
        b
    } else if is_zero_series(&b) {
        a
    } else {
        a.add(&b)
    }
}

/// Product that keeps the structure of the other factor when one side is a single term.
fn product(a: &Series, b: &Series) -> Series {
    let single = |s: &Series| s.as_explicit().filter(|t| t.len() <= 1).map(|t| t.to_vec());
    if let Some(ts) = single(a) {
        return match ts.first() {
            None => Series::zero(a.ctx()),
            Some((e, c)) => b.shift(e).scale(c),
        };
    }
    if let Some(ts) = single(b) {
        return match ts.first() {
            None => Series::zero(a.ctx()),
            Some((e, c)) => a.shift(e).scale(c),
        };
    }
    a.mul(b)
}

#[derive(Clone, Debug)]
pub struct Probe {
    pub axis: usize,
    pub index: Vec<u64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub enum MultiVerdict {
    AlgebraicCertified { r: u32, degree: u128, annihilator: String, verified_degree: u64, conditional: bool },
    NotAlgebraicCertified { axis: usize, index: Vec<u64>, fiber: Verdict },
    Inconclusive { diagnostics: Vec<String> },
}

impl MultiVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            MultiVerdict::AlgebraicCertified { .. } => "algebraic",
            MultiVerdict::NotAlgebraicCertified { .. } => "not-algebraic",
            MultiVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MultiReport {
    pub verdict: MultiVerdict,
    pub probes: Vec<Probe>,
    /// Fibers were probed at every multi-index of total degree below this bound.
    pub probe_bound: u64,
}

/// Checks `σ^{q} = Σ frob(α_I) X^{qI}` below total degree `d`.
pub fn verify_twist(s: &MultiSeries, r: u32, d: u64) -> Result<bool, MultiError> {
    let base = s.terms_below(d)?;
    let t = s.ctx.tower();
    let q = t.characteristic().max(1).pow(r);
    let mut power: MTerms = [(vec![0; s.n], t.one())].into_iter().collect();
    for _ in 0..q {
        power = mul_terms(&t, &power, &base, d);
    }
    let expect: MTerms = base
        .iter()
        .map(|(i, c)| (i.iter().map(|e| e * q).collect::<Vec<u64>>(), t.frobenius(c, r)))
        .filter(|(i, _)| degree(i) < d)
        .collect();
    Ok(power == expect)
}

fn format_twist(s: &MultiSeries, r: u32, d: u64) -> Result<String, MultiError> {
    let terms = s.terms_below(d)?;
    let t = s.ctx.tower();
    let q = t.characteristic().max(1).pow(r);
    let names: Vec<String> = (1..=s.n).map(|i| format!("x{i}")).collect();
    let mut parts = Vec::new();
    let mut keyed: Vec<(Vec<u64>, Elem)> = terms.into_iter().collect();
    keyed.sort_by(|a, b| degree(&a.0).cmp(&degree(&b.0)).then(a.0.cmp(&b.0)));
    for (i, c) in keyed {
        let mono: Vec<String> = i
            .iter()
            .zip(&names)
            .filter(|(e, _)| **e > 0)
            .map(|(e, x)| if e * q == 1 { x.clone() } else { format!("{x}^{}", e * q) })
            .collect();
        let c = t.format(&t.frobenius(&c, r));
        let c = if c.contains(' ') { format!("({c})") } else { c };
        parts.push(if mono.is_empty() { c } else if c == "1" { mono.join("*") } else { format!("{c}*{}", mono.join("*")) });
    }
    let y = if q == 1 { String::from("y") } else { format!("y^{q}") };
    Ok(format!("{y} - ({} + ...)", parts.join(" + ")))
}

/// The criterion in several variables. Fibers along every axis are probed at all multi-indices
/// of total degree below `probe_bound`; a non-algebraic fiber certifies non-algebraicity, and
/// a twist of the coefficients landing in `k` certifies algebraicity.
pub fn check_multivar(s: &MultiSeries, budgets: Budgets, probe_bound: u64) -> MultiReport {
    let mut probes = Vec::new();
    let mut diagnostics = Vec::new();
    for axis in 0..s.n {
        for index in indices_below(s.n, probe_bound) {
            if index[axis] != 0 {
                continue;
            }
            let fiber = fiber_series(s, axis, &index);
            probes.push(Probe { axis, index, verdict: check_full(&fiber, budgets) });
        }
    }
    let t = s.ctx.tower();
    let r_max = if t.characteristic() == 0 { 0 } else { budgets.r_max };
    let check_degree = (budgets.trunc as u64).clamp(2, MAX_DEGREE);
    for r in 0..=r_max {
        if !s.twist_lands_in_k(r) {
            continue;
        }
        match verify_twist(s, r, check_degree) {
            Ok(true) => {
                let degree = twisted_degree(s, r, budgets.i_max).unwrap_or(1);
                let annihilator = format_twist(s, r, 4).unwrap_or_default();
                let verdict = MultiVerdict::AlgebraicCertified {
                    r,
                    degree,
                    annihilator,
                    verified_degree: check_degree,
                    conditional: s.ctx.tower().is_conditional(),
                };
                return MultiReport { verdict, probes, probe_bound };
            }
            Ok(false) => diagnostics.push(format!("twist {r}: power check failed below degree {check_degree}")),
            Err(e) => diagnostics.push(format!("twist {r}: {e}")),
        }
    }
    if let Some(p) = probes.iter().find(|p| matches!(p.verdict, Verdict::NotAlgebraicCertified { .. })) {
        let verdict = MultiVerdict::NotAlgebraicCertified { axis: p.axis, index: p.index.clone(), fiber: p.verdict.clone() };
        return MultiReport { verdict, probes, probe_bound };
    }
    diagnostics.push(format!("no twist up to {r_max} lands in k and no probed fiber is certified non-algebraic"));
    MultiReport { verdict: MultiVerdict::Inconclusive { diagnostics }, probes, probe_bound }
}

fn twisted_degree(s: &MultiSeries, r: u32, count: usize) -> Option<u128> {
    let coeffs = s.coefficients(count).ok()?;
    let t = s.ctx.tower();
    let mut sub = t.generated_subfield(s.ctx.k_depth(), &[]).ok()?;
    for (i, c) in coeffs.iter().enumerate() {
        sub.extend(&format!("alpha{}", i + 1), &t.frobenius(c, r)).ok()?;
    }
    Some(sub.degree() as u128)
}
