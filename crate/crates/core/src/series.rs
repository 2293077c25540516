//! Lazily evaluated series with exact rational exponents over a field tower.
//!
//! Every series node can produce an exact initial segment in two ways: all terms below an
//! exponent bound, or a *prefix*, i.e. a list of terms together with a horizon `H` such that
//! the list is exactly the set of terms with exponent below `H`. Prefixes work past
//! accumulation points of the support, which exponent bounds cannot.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::field::{Elem, FieldError, FieldTower, StepKind};

pub type Exp = BigRational;
pub type Term = (Exp, Elem);

/// Exclusive upper bound on exponents; `None` is unbounded.
pub type Horizon = Option<Exp>;

/// Growth cap for term-count retries: at most this many doublings.
const RETRY_DOUBLINGS: u32 = 3;

pub fn exp_int(n: i64) -> Exp {
    BigRational::from_integer(BigInt::from(n))
}

pub fn exp_frac(n: i64, d: i64) -> Exp {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn hmin(a: &Horizon, b: &Horizon) -> Horizon {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(if x < y { x.clone() } else { y.clone() }),
    }
}

fn hadd(a: &Horizon, q: &Exp) -> Horizon {
    a.as_ref().map(|h| h + q)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesError {
    InfiniteTruncation { bound: Exp, accumulation: Exp },
    RamifiedRoot { m: u64, p: u64 },
    NotUnit,
    NotInseparableCharacteristic,
    Field(FieldError),
    Source(String),
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::InfiniteTruncation { bound, accumulation } => write!(
                f,
                "exponent bound {bound} reaches the accumulation point {accumulation}; infinitely many terms"
            ),
            SeriesError::RamifiedRoot { m, p } => write!(f, "root of order {m} is ramified in characteristic {p}"),
            SeriesError::NotUnit => write!(f, "series does not start with the constant term 1"),
            SeriesError::NotInseparableCharacteristic => {
                write!(f, "p-th root templates need positive characteristic")
            }
            SeriesError::Field(e) => write!(f, "{e}"),
            SeriesError::Source(m) => write!(f, "term source failed: {m}"),
        }
    }
}

impl From<FieldError> for SeriesError {
    fn from(e: FieldError) -> Self {
        SeriesError::Field(e)
    }
}

/// Shared, append-only coefficient field. Templates adjoin generators as they are reached;
/// elements built earlier stay valid because every earlier tower is a prefix of later ones.
#[derive(Debug)]
pub struct SeriesField {
    tower: RefCell<FieldTower>,
    k_depth: usize,
}

pub type Ctx = Rc<SeriesField>;

impl SeriesField {
    /// Series coefficients over `k`; generators adjoined later sit above `k`.
    pub fn new(k: FieldTower) -> Ctx {
        let k_depth = k.num_steps();
        Rc::new(SeriesField { tower: RefCell::new(k), k_depth })
    }

    pub fn tower(&self) -> FieldTower {
        self.tower.borrow().clone()
    }

    /// Number of steps of the base field `k`.
    pub fn k_depth(&self) -> usize {
        self.k_depth
    }

    pub fn k(&self) -> FieldTower {
        self.tower().truncate(self.k_depth)
    }

    /// Returns the generator named `name`, adjoining it with `make` if it does not exist yet.
    pub fn ensure(
        &self,
        name: &str,
        make: impl FnOnce(&FieldTower) -> Result<FieldTower, FieldError>,
    ) -> Result<Elem, FieldError> {
        let t = self.tower();
        if let Some(l) = t.level_of_name(name) {
            return Ok(t.gen(l));
        }
        let grown = make(&t)?;
        let l = grown.num_steps();
        let g = grown.gen(l);
        *self.tower.borrow_mut() = grown;
        Ok(g)
    }

    /// Adjoins `t_i^{1/p^e}` from family `family`.
    pub fn indexed_root(&self, family: &str, i: u64, e: u32) -> Result<Elem, SeriesError> {
        let t = self.tower();
        let ti = t
            .family_member(family, i as u32)
            .ok_or_else(|| FieldError::UnknownGenerator(family.into()))?;
        if e == 0 {
            return Ok(ti);
        }
        let p = t.characteristic();
        if p == 0 {
            return Err(SeriesError::NotInseparableCharacteristic);
        }
        let q = p.pow(e);
        let name = format!("{family}{i}^(1/{q})");
        Ok(self.ensure(&name, |t| {
            let mut mp = alloc::vec![t.zero(); q as usize + 1];
            mp[0] = t.neg(&ti);
            mp[q as usize] = t.one();
            t.adjoin(&name, mp, StepKind::PurelyInseparable, false, Vec::new())
        })?)
    }

    /// Adjoins a square root of the integer `n`.
    pub fn radical(&self, n: u64) -> Result<Elem, SeriesError> {
        let name = format!("sqrt({n})");
        Ok(self.ensure(&name, |t| {
            let mp = alloc::vec![t.neg(&t.from_i64(n as i64)), t.zero(), t.one()];
            t.adjoin(&name, mp, StepKind::Separable, false, Vec::new())
        })?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExponentTemplate {
    /// `a + b·i`
    Affine { a: Exp, b: Exp },
    /// `1 − p^{−i}`, accumulating at 1.
    OneMinusPPow { p: u64 },
}

impl ExponentTemplate {
    pub fn at(&self, i: u64) -> Exp {
        match self {
            ExponentTemplate::Affine { a, b } => a + b * BigRational::from_integer(BigInt::from(i)),
            ExponentTemplate::OneMinusPPow { p } => {
                Exp::one() - BigRational::new(BigInt::one(), BigInt::from(*p).pow(i as u32))
            }
        }
    }

    pub fn accumulation(&self) -> Option<Exp> {
        match self {
            ExponentTemplate::Affine { .. } => None,
            ExponentTemplate::OneMinusPPow { .. } => Some(Exp::one()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoefficientTemplate {
    Const(Elem),
    /// `t_i^{1/p^e}` for the family `family`.
    IndexedRoot { family: String, root_e: u32 },
    /// `κ^{p^{e·i}}`
    FrobeniusFamily { base: Elem, e: u32 },
    /// `√q_i` with `q_i` the i-th prime.
    PrimeRadical,
}

/// Declared behaviour of the coefficient-field degrees of a template, used to certify
/// non-algebraicity from verified finite prefixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Each coefficient adjoins a new `p^e`-th root of an independent transcendental, so the
    /// degrees of `kL^{p^r}` grow without bound exactly for `r < e`.
    FreshInseparableRoots { e: u32 },
    /// Square roots of distinct primes: degrees `2^i` for every twist.
    IndependentRadicals,
}

impl Schedule {
    pub fn unbounded_at_twist(&self, r: u32) -> bool {
        match self {
            Schedule::FreshInseparableRoots { e } => r < *e,
            Schedule::IndependentRadicals => true,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Schedule::FreshInseparableRoots { .. } => "fresh inseparable roots",
            Schedule::IndependentRadicals => "independent radicals",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub exponent: ExponentTemplate,
    pub coefficient: CoefficientTemplate,
    /// First index `i`.
    pub start: u64,
}

impl Template {
    pub fn schedule(&self) -> Option<Schedule> {
        match &self.coefficient {
            CoefficientTemplate::IndexedRoot { root_e, .. } if *root_e > 0 => {
                Some(Schedule::FreshInseparableRoots { e: *root_e })
            }
            CoefficientTemplate::PrimeRadical => Some(Schedule::IndependentRadicals),
            _ => None,
        }
    }

    fn coefficient(&self, ctx: &SeriesField, i: u64) -> Result<Elem, SeriesError> {
        match &self.coefficient {
            CoefficientTemplate::Const(c) => Ok(c.clone()),
            CoefficientTemplate::IndexedRoot { family, root_e } => ctx.indexed_root(family, i, *root_e),
            CoefficientTemplate::FrobeniusFamily { base, e } => Ok(ctx.tower().frobenius(base, e * i as u32)),
            CoefficientTemplate::PrimeRadical => ctx.radical(nth_prime(i)),
        }
    }

    fn term(&self, ctx: &SeriesField, i: u64) -> Result<Option<Term>, SeriesError> {
        let c = self.coefficient(ctx, i)?;
        Ok((!c.is_zero()).then(|| (self.exponent.at(i), c)))
    }
}

/// The `i`-th prime, 1-based.
pub fn nth_prime(i: u64) -> u64 {
    let mut count = 0;
    let mut n = 1;
    while count < i {
        n += 1;
        if crate::scalar::is_prime(n) {
            count += 1;
        }
    }
    n
}

/// A user-supplied term stream.
pub trait TermSource: fmt::Debug {
    /// All terms with exponent below `bound`, increasing.
    fn terms_below(&self, bound: &Exp) -> Result<Vec<Term>, SeriesError>;

    fn accumulation(&self) -> Option<Exp> {
        None
    }

    /// A prefix with at least `m` terms when available. The default assumes integer
    /// exponents starting at zero.
    fn prefix(&self, m: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
        let h = exp_int(m as i64 + 1);
        Ok((self.terms_below(&h)?, Some(h)))
    }
}

#[derive(Clone, Debug)]
enum Rule {
    Explicit(Vec<Term>),
    Template(Template),
    Add(Series, Series),
    Neg(Series),
    Scale(Series, Elem),
    Mul(Series, Series),
    Shift(Series, Exp),
    Frobenius(Series),
    UnitRoot(Series, u64),
    Custom(Rc<dyn TermSource>),
}

#[derive(Debug, Default)]
struct Memo {
    prefix: Option<(usize, Vec<Term>, Horizon)>,
    below: Option<(Exp, Vec<Term>)>,
}

#[derive(Debug)]
struct Node {
    rule: Rule,
    memo: RefCell<Memo>,
}

/// A lazily evaluated series. Cloning shares the node and its memo.
#[derive(Clone, Debug)]
pub struct Series {
    ctx: Ctx,
    node: Rc<Node>,
}

pub enum Bound {
    TermCount(usize),
    ExponentBound(Exp),
}

impl Series {
    fn make(ctx: &Ctx, rule: Rule) -> Series {
        Series { ctx: ctx.clone(), node: Rc::new(Node { rule, memo: RefCell::new(Memo::default()) }) }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn tower(&self) -> FieldTower {
        self.ctx.tower()
    }

    pub fn zero(ctx: &Ctx) -> Series {
        Self::make(ctx, Rule::Explicit(Vec::new()))
    }

    /// A finite series; terms are sorted, merged and stripped of zeros.
    pub fn explicit(ctx: &Ctx, terms: Vec<Term>) -> Series {
        let t = ctx.tower();
        let mut map: BTreeMap<Exp, Elem> = BTreeMap::new();
        for (e, c) in terms {
            let entry = map.entry(e).or_insert_with(|| t.zero());
            *entry = t.add(entry, &c);
        }
        let terms = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self::make(ctx, Rule::Explicit(terms))
    }

    pub fn constant(ctx: &Ctx, c: Elem) -> Series {
        Self::explicit(ctx, alloc::vec![(Exp::zero(), c)])
    }

    /// `c·x^e`
    pub fn monomial(ctx: &Ctx, e: Exp, c: Elem) -> Series {
        Self::explicit(ctx, alloc::vec![(e, c)])
    }

    pub fn template(ctx: &Ctx, t: Template) -> Series {
        Self::make(ctx, Rule::Template(t))
    }

    pub fn custom(ctx: &Ctx, src: Rc<dyn TermSource>) -> Series {
        Self::make(ctx, Rule::Custom(src))
    }

    pub fn add(&self, o: &Series) -> Series {
        Self::make(&self.ctx, Rule::Add(self.clone(), o.clone()))
    }

    pub fn neg(&self) -> Series {
        Self::make(&self.ctx, Rule::Neg(self.clone()))
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Series) -> Series {
        Self::make(&self.ctx, Rule::Mul(self.clone(), o.clone()))
    }

    pub fn scale(&self, c: &Elem) -> Series {
        Self::make(&self.ctx, Rule::Scale(self.clone(), c.clone()))
    }

    /// `x^q · self`
    pub fn shift(&self, q: &Exp) -> Series {
        Self::make(&self.ctx, Rule::Shift(self.clone(), q.clone()))
    }

    /// `self^p` in characteristic `p`, termwise; plain multiplication in characteristic zero.
    pub fn frobenius(&self) -> Series {
        if self.tower().characteristic() == 0 {
            return self.clone();
        }
        Self::make(&self.ctx, Rule::Frobenius(self.clone()))
    }

    pub fn pow(&self, n: u32) -> Series {
        let p = self.tower().characteristic() as u32;
        if n == 0 {
            return Self::constant(&self.ctx, self.tower().one());
        }
        if p > 0 && n % p == 0 {
            return self.pow(n / p).frobenius();
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// The `m`-th root of a series with constant term 1, normalized to start with 1.
    pub fn unit_root(&self, m: u64) -> Result<Series, SeriesError> {
        let p = self.tower().characteristic();
        if m == 0 || (p > 0 && m % p == 0) {
            return Err(SeriesError::RamifiedRoot { m, p });
        }
        let (terms, _) = self.prefix(1)?;
        let one = self.tower().one();
        if terms.first() != Some(&(Exp::zero(), one)) {
            return Err(SeriesError::NotUnit);
        }
        if m == 1 {
            return Ok(self.clone());
        }
        Ok(Self::make(&self.ctx, Rule::UnitRoot(self.clone(), m)))
    }

    /// Template-level accumulation point of the support, if any.
    pub fn accumulation(&self) -> Result<Option<Exp>, SeriesError> {
        Ok(match &self.node.rule {
            Rule::Explicit(_) => None,
            Rule::Template(t) => t.exponent.accumulation(),
            Rule::Add(a, b) => match (a.accumulation()?, b.accumulation()?) {
                (Some(x), Some(y)) => Some(if x < y { x } else { y }),
                (x, None) | (None, x) => x,
            },
            Rule::Neg(a) | Rule::Scale(a, _) | Rule::UnitRoot(a, _) => a.accumulation()?,
            Rule::Shift(a, q) => a.accumulation()?.map(|x| x + q),
            Rule::Frobenius(a) => {
                let p = exp_int(self.tower().characteristic() as i64);
                a.accumulation()?.map(|x| x * p)
            }
            Rule::Mul(a, b) => {
                let (la, lb) = (a.lower_valuation()?, b.lower_valuation()?);
                let (Some(la), Some(lb)) = (la, lb) else { return Ok(None) };
                let x = a.accumulation()?.map(|x| x + &lb);
                let y = b.accumulation()?.map(|y| y + &la);
                match (x, y) {
                    (Some(x), Some(y)) => Some(if x < y { x } else { y }),
                    (x, None) | (None, x) => x,
                }
            }
            Rule::Custom(s) => s.accumulation(),
        })
    }

    /// A lower bound for the order: the first exponent, or the horizon of an empty prefix.
    /// `None` for the zero series.
    fn lower_valuation(&self) -> Result<Option<Exp>, SeriesError> {
        let (t, h) = self.prefix(1)?;
        Ok(t.first().map(|(e, _)| e.clone()).or(h))
    }

    /// Exact terms with exponent below `bound`.
    pub fn terms_below(&self, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
        if let Some((b, terms)) = &self.node.memo.borrow().below {
            if bound <= b {
                return Ok(terms.iter().filter(|(e, _)| e < bound).cloned().collect());
            }
        }
        if let Some(acc) = self.accumulation()? {
            if *bound >= acc {
                return Err(SeriesError::InfiniteTruncation { bound: bound.clone(), accumulation: acc });
            }
        }
        let out = self.compute_below(bound)?;
        self.node.memo.borrow_mut().below = Some((bound.clone(), out.clone()));
        Ok(out)
    }

    fn compute_below(&self, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
        let t = || self.tower();
        match &self.node.rule {
            Rule::Explicit(terms) => Ok(terms.iter().filter(|(e, _)| e < bound).cloned().collect()),
            Rule::Template(tp) => {
                let mut out = Vec::new();
                let mut i = tp.start;
                loop {
                    let e = tp.exponent.at(i);
                    if &e >= bound {
                        break;
                    }
                    if let Some(term) = tp.term(&self.ctx, i)? {
                        out.push(term);
                    }
                    i += 1;
                }
                Ok(out)
            }
            Rule::Add(a, b) => {
                let (x, y) = (a.terms_below(bound)?, b.terms_below(bound)?);
                Ok(merge_add(&t(), &x, &y))
            }
            Rule::Neg(a) => {
                let tw = t();
                Ok(a.terms_below(bound)?.into_iter().map(|(e, c)| (e, tw.neg(&c))).collect())
            }
            Rule::Scale(a, c) => {
                let tw = t();
                Ok(scale_terms(&tw, &a.terms_below(bound)?, c))
            }
            Rule::Shift(a, q) => {
                Ok(a.terms_below(&(bound - q))?.into_iter().map(|(e, c)| (e + q, c)).collect())
            }
            Rule::Frobenius(a) => {
                let p = self.tower().characteristic();
                let pe = exp_int(p as i64);
                let inner = a.terms_below(&(bound / &pe))?;
                let tw = t();
                Ok(inner.into_iter().map(|(e, c)| (e * &pe, tw.frobenius(&c, 1))).collect())
            }
            Rule::Mul(a, b) => {
                let (Some(la), Some(lb)) = (a.lower_valuation()?, b.lower_valuation()?) else {
                    return Ok(Vec::new());
                };
                let x = a.terms_below(&(bound - &lb))?;
                let y = b.terms_below(&(bound - &la))?;
                Ok(trunc_mul(&t(), &x, &y, &Some(bound.clone())))
            }
            Rule::UnitRoot(u, m) => {
                let terms = u.terms_below(bound)?;
                Ok(newton_root(&t(), &terms, *m, bound))
            }
            Rule::Custom(s) => s.terms_below(bound),
        }
    }

    /// Node-level prefix: exact terms below the returned horizon; at least `m` of them unless
    /// cancellation removed some or the series is exhausted (horizon `None`).
    pub fn prefix(&self, m: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
        if let Some((mm, terms, h)) = &self.node.memo.borrow().prefix {
            if *mm >= m {
                return Ok((terms.clone(), h.clone()));
            }
        }
        let out = self.compute_prefix(m)?;
        self.node.memo.borrow_mut().prefix = Some((m, out.0.clone(), out.1.clone()));
        Ok(out)
    }

    fn compute_prefix(&self, m: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
        let t = || self.tower();
        match &self.node.rule {
            Rule::Explicit(terms) => Ok(if terms.len() > m {
                (terms[..m].to_vec(), Some(terms[m].0.clone()))
            } else {
                (terms.clone(), None)
            }),
            Rule::Template(tp) => {
                let mut out = Vec::new();
                for i in tp.start..tp.start + m as u64 {
                    if let Some(term) = tp.term(&self.ctx, i)? {
                        out.push(term);
                    }
                }
                Ok((out, Some(tp.exponent.at(tp.start + m as u64))))
            }
            Rule::Add(a, b) => {
                let (x, hx) = a.prefix(m)?;
                let (y, hy) = b.prefix(m)?;
                let h = hmin(&hx, &hy);
                Ok((below(merge_add(&t(), &x, &y), &h), h))
            }
            Rule::Neg(a) => {
                let (x, h) = a.prefix(m)?;
                let tw = t();
                Ok((x.into_iter().map(|(e, c)| (e, tw.neg(&c))).collect(), h))
            }
            Rule::Scale(a, c) => {
                let (x, h) = a.prefix(m)?;
                Ok((scale_terms(&t(), &x, c), h))
            }
            Rule::Shift(a, q) => {
                let (x, h) = a.prefix(m)?;
                Ok((x.into_iter().map(|(e, c)| (e + q, c)).collect(), hadd(&h, q)))
            }
            Rule::Frobenius(a) => {
                let (x, h) = a.prefix(m)?;
                let pe = exp_int(self.tower().characteristic() as i64);
                let tw = t();
                Ok((
                    x.into_iter().map(|(e, c)| (e * &pe, tw.frobenius(&c, 1))).collect(),
                    h.map(|h| h * &pe),
                ))
            }
            Rule::Mul(a, b) => {
                let (x, hx) = a.prefix(m)?;
                let (y, hy) = b.prefix(m)?;
                let la = x.first().map(|(e, _)| e.clone()).or_else(|| hx.clone());
                let lb = y.first().map(|(e, _)| e.clone()).or_else(|| hy.clone());
                let (Some(la), Some(lb)) = (la, lb) else { return Ok((Vec::new(), None)) };
                let h = hmin(&hadd(&hy, &la), &hadd(&hx, &lb));
                Ok((trunc_mul(&t(), &x, &y, &h), h))
            }
            Rule::UnitRoot(u, r) => {
                let (x, hu) = u.prefix(m)?;
                let d = x.iter().map(|(e, _)| e.clone()).find(|e| e.is_positive()).or_else(|| hu.clone());
                let Some(d) = d else { return Ok((alloc::vec![(Exp::zero(), t().one())], None)) };
                let cap = d * exp_int(m as i64 + 1);
                let h = hmin(&hu, &Some(cap)).expect("finite");
                let terms = u.terms_below(&h)?;
                Ok((newton_root(&t(), &terms, *r, &h), Some(h)))
            }
            Rule::Custom(s) => s.prefix(m),
        }
    }

    /// Exact initial segment. `TermCount(m)` returns the first `m` terms (fewer only when the
    /// series is shorter than that as far as the retry budget can see).
    pub fn truncate(&self, bound: Bound) -> Result<Vec<Term>, SeriesError> {
        match bound {
            Bound::ExponentBound(b) => self.terms_below(&b),
            Bound::TermCount(m) => {
                let (mut terms, _) = self.prefix_at_least(m)?;
                terms.truncate(m);
                Ok(terms)
            }
        }
    }

    /// Like [`prefix`](Self::prefix) but retries with doubled requests when cancellation left
    /// fewer than `m` terms.
    pub fn prefix_at_least(&self, m: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
        let mut req = m;
        let mut out = self.prefix(req)?;
        for _ in 0..RETRY_DOUBLINGS {
            if out.0.len() >= m || out.1.is_none() {
                break;
            }
            req *= 2;
            out = self.prefix(req)?;
        }
        Ok(out)
    }

    /// The first `m` nonzero coefficients, in exponent order.
    pub fn coefficients(&self, m: usize) -> Result<Vec<Elem>, SeriesError> {
        Ok(self.truncate(Bound::TermCount(m))?.into_iter().map(|(_, c)| c).collect())
    }

    /// Whether every coefficient of `self^{p^r}` provably lies in `k`, judged from the rule
    /// structure alone (no prefix inspection). Unknown sources answer `false`.
    pub fn twist_lands_in_k(&self, r: u32) -> bool {
        let t = self.tower();
        let kd = self.ctx.k_depth();
        let in_k = |c: &Elem| t.frobenius(c, r).level() <= kd;
        match &self.node.rule {
            Rule::Explicit(terms) => terms.iter().all(|(_, c)| in_k(c)),
            Rule::Template(tp) => match &tp.coefficient {
                CoefficientTemplate::Const(c) => in_k(c),
                CoefficientTemplate::IndexedRoot { root_e, .. } => r >= *root_e,
                CoefficientTemplate::FrobeniusFamily { base, .. } => in_k(base),
                CoefficientTemplate::PrimeRadical => false,
            },
            Rule::Add(a, b) | Rule::Mul(a, b) => a.twist_lands_in_k(r) && b.twist_lands_in_k(r),
            Rule::Neg(a) | Rule::Shift(a, _) | Rule::UnitRoot(a, _) => a.twist_lands_in_k(r),
            Rule::Scale(a, c) => in_k(c) && a.twist_lands_in_k(r),
            Rule::Frobenius(a) => a.twist_lands_in_k(r + 1),
            Rule::Custom(_) => false,
        }
    }

    /// A tower depth containing every coefficient, when the rule structure guarantees one.
    pub fn coefficient_level_bound(&self) -> Option<usize> {
        let t = self.tower();
        match &self.node.rule {
            Rule::Explicit(terms) => Some(terms.iter().map(|(_, c)| c.level()).max().unwrap_or(0)),
            Rule::Template(tp) => match &tp.coefficient {
                CoefficientTemplate::Const(c) => Some(c.level()),
                CoefficientTemplate::FrobeniusFamily { base, .. } => {
                    let mut lv = t.relevant_levels(core::slice::from_ref(base), 0, false);
                    lv.push(base.level());
                    lv.into_iter().max()
                }
                CoefficientTemplate::IndexedRoot { root_e: 0, .. } => Some(self.ctx.k_depth()),
                _ => None,
            },
            Rule::Add(a, b) | Rule::Mul(a, b) => Some(a.coefficient_level_bound()?.max(b.coefficient_level_bound()?)),
            Rule::Neg(a) | Rule::Shift(a, _) | Rule::UnitRoot(a, _) | Rule::Frobenius(a) => a.coefficient_level_bound(),
            Rule::Scale(a, c) => Some(a.coefficient_level_bound()?.max(c.level())),
            Rule::Custom(_) => None,
        }
    }

    /// `self^{p^r}`.
    pub fn frobenius_r(&self, r: u32) -> Series {
        let mut s = self.clone();
        for _ in 0..r {
            s = s.frobenius();
        }
        s
    }

    /// The template backing this series, if it is one.
    pub fn as_template(&self) -> Option<&Template> {
        match &self.node.rule {
            Rule::Template(t) => Some(t),
            _ => None,
        }
    }

    /// Whether the series is given by a finite list of terms.
    pub fn as_explicit(&self) -> Option<&[Term]> {
        match &self.node.rule {
            Rule::Explicit(t) => Some(t),
            _ => None,
        }
    }

    /// The declared degree schedule of the coefficient fields, when the series carries one.
    pub fn schedule(&self) -> Option<Schedule> {
        match &self.node.rule {
            Rule::Template(t) => t.schedule(),
            Rule::Neg(a) | Rule::Scale(a, _) | Rule::Shift(a, _) => a.schedule(),
            _ => None,
        }
    }
}

/// Keeps the terms below the horizon.
pub fn below(terms: Vec<Term>, h: &Horizon) -> Vec<Term> {
    match h {
        None => terms,
        Some(h) => terms.into_iter().filter(|(e, _)| e < h).collect(),
    }
}

pub fn merge_add(t: &FieldTower, a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j].clone());
            j += 1;
        } else {
            let c = t.add(&a[i].1, &b[j].1);
            if !c.is_zero() {
                out.push((a[i].0.clone(), c));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn scale_terms(t: &FieldTower, a: &[Term], c: &Elem) -> Vec<Term> {
    if c.is_zero() {
        return Vec::new();
    }
    a.iter().map(|(e, x)| (e.clone(), t.mul(x, c))).collect()
}

/// Product of two term lists keeping exponents below `h`.
pub fn trunc_mul(t: &FieldTower, a: &[Term], b: &[Term], h: &Horizon) -> Vec<Term> {
    let mut acc: BTreeMap<Exp, Elem> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea + eb;
            if let Some(h) = h {
                if &e >= h {
                    break;
                }
            }
            let prod = t.mul(ca, cb);
            match acc.get_mut(&e) {
                Some(v) => *v = t.add(v, &prod),
                None => {
                    acc.insert(e, prod);
                }
            }
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn sub_terms(t: &FieldTower, a: &[Term], b: &[Term]) -> Vec<Term> {
    let nb: Vec<Term> = b.iter().map(|(e, c)| (e.clone(), t.neg(c))).collect();
    merge_add(t, a, &nb)
}

/// Inverse of a term list starting with a nonzero constant, below `h`.
pub fn trunc_inv(t: &FieldTower, a: &[Term], h: &Exp) -> Vec<Term> {
    let c0 = t.inv(&a[0].1).expect("unit");
    let hz = Some(h.clone());
    let one = alloc::vec![(Exp::zero(), t.one())];
    let mut y = alloc::vec![(Exp::zero(), c0)];
    loop {
        let err = sub_terms(t, &one, &trunc_mul(t, a, &y, &hz));
        if err.is_empty() {
            return y;
        }
        y = merge_add(t, &y, &trunc_mul(t, &y, &err, &hz));
    }
}

/// The root `z` of `z^m = u` with `z(0) = 1`, below `h`, by Newton iteration.
pub fn newton_root(t: &FieldTower, u: &[Term], m: u64, h: &Exp) -> Vec<Term> {
    let hz = Some(h.clone());
    let mut z = alloc::vec![(Exp::zero(), t.one())];
    loop {
        let mut zm1 = alloc::vec![(Exp::zero(), t.one())];
        for _ in 0..m - 1 {
            zm1 = trunc_mul(t, &zm1, &z, &hz);
        }
        let zm = trunc_mul(t, &zm1, &z, &hz);
        let err = sub_terms(t, &zm, &below(u.to_vec(), &hz));
        if err.is_empty() {
            return z;
        }
        let d = trunc_inv(t, &scale_terms(t, &zm1, &t.from_i64(m as i64)), h);
        z = sub_terms(t, &z, &trunc_mul(t, &err, &d, &hz));
    }
}

/// Renders an exponent as an exact string such as `7/8`.
pub fn exp_string(e: &Exp) -> String {
    if e.is_integer() {
        format!("{}", e.numer())
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

/// Integer value of an exponent, when it is one and fits.
pub fn exp_to_i64(e: &Exp) -> Option<i64> {
    if e.is_integer() {
        e.numer().to_i64()
    } else {
        None
    }
}
