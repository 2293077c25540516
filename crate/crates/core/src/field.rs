//! Towers of field extensions over a prime field with transcendental generators.
//!
//! An element is held in nested canonical form: at its highest algebraic level `l` it is a
//! polynomial in the generator of step `l` of degree below the step degree, whose coefficients
//! are canonical elements of strictly lower level. An element whose only nonzero coefficient
//! is the constant one is demoted to that coefficient, so equality is structural equality.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::mpoly::{MPoly, Var};
use crate::ratfunc::RatFunc;
use crate::scalar::{PrimeField, Scalar};
use crate::upoly;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldError {
    DuplicateGenerator(String),
    NonPrimeCharacteristic(u64),
    UnknownGenerator(String),
    NotMonic,
    BadInseparableShape(String),
    /// A nontrivial factor (given by a root, or a factor's coefficients) was found.
    ReducibleWitness(String),
    /// Irreducibility could not be decided and no declaration was supplied.
    IrreducibilityUndetermined(String),
    NotSeparable,
    RebasingFailed(String),
    NotAPrefix,
    ConjugatesUnavailable(String),
    DivisionByZero,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::DuplicateGenerator(n) => write!(f, "duplicate generator name `{n}`"),
            FieldError::NonPrimeCharacteristic(p) => write!(f, "characteristic {p} is neither 0 nor prime"),
            FieldError::UnknownGenerator(n) => write!(f, "unknown generator `{n}`"),
            FieldError::NotMonic => write!(f, "minimal polynomial is not monic"),
            FieldError::BadInseparableShape(s) => write!(f, "purely inseparable step has the wrong shape: {s}"),
            FieldError::ReducibleWitness(w) => write!(f, "polynomial is reducible: {w}"),
            FieldError::IrreducibilityUndetermined(s) => {
                write!(f, "irreducibility of {s} cannot be checked; declare it to proceed")
            }
            FieldError::NotSeparable => write!(f, "element is not separable"),
            FieldError::RebasingFailed(s) => write!(f, "rebasing failed: {s}"),
            FieldError::NotAPrefix => write!(f, "tower does not extend the given base tower"),
            FieldError::ConjugatesUnavailable(s) => write!(f, "conjugates unavailable: {s}"),
            FieldError::DivisionByZero => write!(f, "division by zero"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GeneratorName {
    /// Countable family `t` with members `t1, t2, ...`.
    Family(String),
    Single(String),
}

impl GeneratorName {
    pub fn name(&self) -> &str {
        match self {
            GeneratorName::Family(s) | GeneratorName::Single(s) => s,
        }
    }
}

/// Prime field plus transcendental generators; `Var::fam` indexes `names` (sorted by name).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseField {
    prime: PrimeField,
    names: Vec<GeneratorName>,
}

impl BaseField {
    pub fn new(characteristic: u64, families: &[&str], generators: &[&str]) -> Result<Self, FieldError> {
        let prime = PrimeField::new(characteristic).ok_or(FieldError::NonPrimeCharacteristic(characteristic))?;
        let mut names: Vec<GeneratorName> = families
            .iter()
            .map(|s| GeneratorName::Family(s.to_string()))
            .chain(generators.iter().map(|s| GeneratorName::Single(s.to_string())))
            .collect();
        names.sort_by(|a, b| a.name().cmp(b.name()));
        for w in names.windows(2) {
            if w[0].name() == w[1].name() {
                return Err(FieldError::DuplicateGenerator(w[0].name().to_string()));
            }
        }
        Ok(Self { prime, names })
    }

    pub fn prime(&self) -> &PrimeField {
        &self.prime
    }

    pub fn names(&self) -> &[GeneratorName] {
        &self.names
    }

    /// Finite iff positive characteristic and no transcendentals.
    pub fn is_finite(&self) -> bool {
        self.prime.characteristic() > 0 && self.names.is_empty()
    }

    /// Resolves `t3` (family member) or `u` (standalone) to a variable.
    pub fn lookup(&self, name: &str) -> Option<Var> {
        for (i, g) in self.names.iter().enumerate() {
            match g {
                GeneratorName::Single(s) if s == name => return Some(Var { fam: i as u16, idx: 0 }),
                GeneratorName::Family(s) => {
                    if let Some(rest) = name.strip_prefix(s.as_str()) {
                        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                            if let Ok(idx) = rest.parse::<u32>() {
                                return Some(Var { fam: i as u16, idx });
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        None
    }

    pub fn family(&self, name: &str) -> Option<u16> {
        self.names
            .iter()
            .position(|g| matches!(g, GeneratorName::Family(s) if s == name))
            .map(|i| i as u16)
    }

    pub fn var_name(&self, v: Var) -> String {
        match &self.names[v.fam as usize] {
            GeneratorName::Family(s) => alloc::format!("{s}{}", v.idx),
            GeneratorName::Single(s) => s.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    Separable,
    PurelyInseparable,
}

impl StepKind {
    pub fn label(&self) -> &'static str {
        match self {
            StepKind::Separable => "separable",
            StepKind::PurelyInseparable => "purely-inseparable",
        }
    }
}

/// How irreducibility of a step's minimal polynomial is known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Irreducibility {
    Checked,
    /// Minimal polynomial obtained by linear algebra, hence irreducible by construction.
    Derived,
    /// Accepted on the caller's word; results depending on it are conditional.
    Declared,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionStep {
    pub name: String,
    /// Monic, lowest degree first, coefficients from the tower below this step.
    pub minpoly: Vec<Elem>,
    pub kind: StepKind,
    pub irreducibility: Irreducibility,
    /// Extra known roots of the minimal polynomial, for conjugate enumeration.
    pub conjugates: Vec<Elem>,
}

impl ExtensionStep {
    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elem {
    Base(RatFunc),
    /// Polynomial in the generator of step `level` (1-based).
    Alg { level: usize, coeffs: Vec<Elem> },
}

impl Elem {
    pub fn level(&self) -> usize {
        match self {
            Elem::Base(_) => 0,
            Elem::Alg { level, .. } => *level,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Elem::Base(r) if r.is_zero())
    }

    /// Algebraic generators (levels) referenced anywhere in the element.
    pub fn levels_used(&self, out: &mut Vec<usize>) {
        if let Elem::Alg { level, coeffs } = self {
            if !out.contains(level) {
                out.push(*level);
            }
            for c in coeffs {
                c.levels_used(out);
            }
        }
    }

    pub fn vars_used(&self, out: &mut Vec<Var>) {
        match self {
            Elem::Base(r) => {
                for v in r.vars() {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            Elem::Alg { coeffs, .. } => {
                for c in coeffs {
                    c.vars_used(out);
                }
            }
        }
    }
}

/// Extended natural number used for field degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    Finite(u128),
    /// Only ever produced from a declared unbounded schedule.
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct FieldTower {
    base: Arc<BaseField>,
    steps: Vec<Arc<ExtensionStep>>,
}

impl PartialEq for FieldTower {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.steps.len() == other.steps.len() && self.is_prefix_of(other)
    }
}

impl FieldTower {
    pub fn new(base: BaseField) -> Self {
        Self { base: Arc::new(base), steps: Vec::new() }
    }

    pub fn base(&self) -> &BaseField {
        &self.base
    }

    pub fn prime(&self) -> &PrimeField {
        self.base.prime()
    }

    pub fn characteristic(&self) -> u64 {
        self.base.prime().characteristic()
    }

    pub fn steps(&self) -> &[Arc<ExtensionStep>] {
        &self.steps
    }

    pub fn step(&self, level: usize) -> &ExtensionStep {
        &self.steps[level - 1]
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Whether every step of `self` is, in order, a step of `other`.
    pub fn is_prefix_of(&self, other: &FieldTower) -> bool {
        self.base == other.base
            && self.steps.len() <= other.steps.len()
            && self.steps.iter().zip(other.steps.iter()).all(|(a, b)| Arc::ptr_eq(a, b) || a == b)
    }

    pub fn truncate(&self, depth: usize) -> FieldTower {
        FieldTower { base: self.base.clone(), steps: self.steps[..depth].to_vec() }
    }

    /// Appends a step without any irreducibility check; callers guarantee it.
    pub(crate) fn push_step_unchecked(&self, step: ExtensionStep) -> FieldTower {
        let mut steps = self.steps.clone();
        steps.push(Arc::new(step));
        FieldTower { base: self.base.clone(), steps }
    }

    pub fn level_of_name(&self, name: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.name == name).map(|i| i + 1)
    }

    pub fn is_finite(&self) -> bool {
        self.base.is_finite()
    }

    /// Whether any step was accepted on declaration only.
    pub fn is_conditional(&self) -> bool {
        self.steps.iter().any(|s| s.irreducibility == Irreducibility::Declared)
    }

    /// Product of the step degrees above `depth`.
    pub fn degree_over(&self, depth: usize) -> Degree {
        Degree::Finite(self.steps[depth.min(self.steps.len())..].iter().map(|s| s.degree() as u128).product())
    }

    pub fn degree(&self) -> Degree {
        self.degree_over(0)
    }

    // ---- constructors ----

    pub fn zero(&self) -> Elem {
        Elem::Base(RatFunc::zero(self.prime()))
    }

    pub fn one(&self) -> Elem {
        Elem::Base(RatFunc::one(self.prime()))
    }

    pub fn from_i64(&self, n: i64) -> Elem {
        Elem::Base(RatFunc::constant(self.prime(), self.prime().from_i64(n)))
    }

    pub fn from_scalar(&self, s: Scalar) -> Elem {
        Elem::Base(RatFunc::constant(self.prime(), s))
    }

    pub fn from_ratfunc(&self, r: RatFunc) -> Elem {
        Elem::Base(r)
    }

    pub fn var(&self, v: Var) -> Elem {
        Elem::Base(RatFunc::var(self.prime(), v))
    }

    /// Family member `family_j`, materialized on first use.
    pub fn family_member(&self, family: &str, j: u32) -> Option<Elem> {
        self.base.family(family).map(|fam| self.var(Var { fam, idx: j }))
    }

    /// Generator of step `level`.
    pub fn gen(&self, level: usize) -> Elem {
        let d = self.step(level).degree();
        if d == 1 {
            return self.neg(&self.step(level).minpoly[0]);
        }
        let mut coeffs = vec![self.zero(), self.one()];
        coeffs.truncate(2);
        Elem::Alg { level, coeffs }
    }

    /// Looks up a transcendental or algebraic generator by display name.
    pub fn named(&self, name: &str) -> Option<Elem> {
        if let Some(l) = self.level_of_name(name) {
            return Some(self.gen(l));
        }
        self.base.lookup(name).map(|v| self.var(v))
    }

    // ---- canonical form helpers ----

    fn coeffs_at(&self, e: &Elem, level: usize) -> Vec<Elem> {
        match e {
            Elem::Alg { level: l, coeffs } if *l == level => coeffs.clone(),
            _ => vec![e.clone()],
        }
    }

    fn normalize(&self, level: usize, mut coeffs: Vec<Elem>) -> Elem {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.is_zero()).unwrap_or(false) {
            coeffs.pop();
        }
        if coeffs.len() <= 1 {
            coeffs.pop().unwrap_or_else(|| self.zero())
        } else {
            Elem::Alg { level, coeffs }
        }
    }

    // ---- arithmetic ----

    pub fn is_zero(&self, e: &Elem) -> bool {
        e.is_zero()
    }

    pub fn is_one(&self, e: &Elem) -> bool {
        *e == self.one()
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (a, b) {
            (Elem::Base(x), Elem::Base(y)) => Elem::Base(x.add(self.prime(), y)),
            _ => {
                if a.is_zero() {
                    return b.clone();
                }
                if b.is_zero() {
                    return a.clone();
                }
                let l = a.level().max(b.level());
                let ca = self.coeffs_at(a, l);
                let cb = self.coeffs_at(b, l);
                let n = ca.len().max(cb.len());
                let zero = self.zero();
                let out = (0..n)
                    .map(|i| self.add(ca.get(i).unwrap_or(&zero), cb.get(i).unwrap_or(&zero)))
                    .collect();
                self.normalize(l, out)
            }
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match a {
            Elem::Base(x) => Elem::Base(x.neg(self.prime())),
            Elem::Alg { level, coeffs } => Elem::Alg { level: *level, coeffs: coeffs.iter().map(|c| self.neg(c)).collect() },
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        if a.is_zero() || b.is_zero() {
            return self.zero();
        }
        let (la, lb) = (a.level(), b.level());
        match (a, b) {
            (Elem::Base(x), Elem::Base(y)) => Elem::Base(x.mul(self.prime(), y)),
            _ if la < lb => {
                let cb = self.coeffs_at(b, lb);
                self.normalize(lb, cb.iter().map(|c| self.mul(a, c)).collect())
            }
            _ if lb < la => {
                let ca = self.coeffs_at(a, la);
                self.normalize(la, ca.iter().map(|c| self.mul(c, b)).collect())
            }
            _ => {
                let ca = self.coeffs_at(a, la);
                let cb = self.coeffs_at(b, la);
                let mut prod = vec![self.zero(); ca.len() + cb.len() - 1];
                for (i, x) in ca.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in cb.iter().enumerate() {
                        if y.is_zero() {
                            continue;
                        }
                        prod[i + j] = self.add(&prod[i + j], &self.mul(x, y));
                    }
                }
                self.reduce(la, prod)
            }
        }
    }

    /// Reduces a coefficient vector modulo the minimal polynomial of step `level`.
    fn reduce(&self, level: usize, mut prod: Vec<Elem>) -> Elem {
        let m = &self.step(level).minpoly;
        let d = m.len() - 1;
        for k in (d..prod.len()).rev() {
            let c = core::mem::replace(&mut prod[k], self.zero());
            if c.is_zero() {
                continue;
            }
            for j in 0..d {
                if m[j].is_zero() {
                    continue;
                }
                prod[k - d + j] = self.sub(&prod[k - d + j], &self.mul(&c, &m[j]));
            }
        }
        prod.truncate(d);
        self.normalize(level, prod)
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        match a {
            Elem::Base(x) => Ok(Elem::Base(x.inv(self.prime()))),
            Elem::Alg { level, coeffs } => {
                let step = self.step(*level);
                if let Some(q) = self.inseparable_binomial(step) {
                    // a^q already lies below this step, so a^{-1} = a^{q-1} / a^q.
                    let head = self.pow(a, q - 1);
                    let norm = self.mul(&head, a);
                    debug_assert!(norm.level() < *level);
                    return Ok(self.mul(&head, &self.inv(&norm)?));
                }
                let m = step.minpoly.clone();
                let s = upoly::inverse_mod(self, coeffs, &m).ok_or(FieldError::DivisionByZero)?;
                Ok(self.normalize(*level, s))
            }
        }
    }

    /// Degree `q = p^k` when the step is `x^q - c` in characteristic `p`.
    fn inseparable_binomial(&self, step: &ExtensionStep) -> Option<u128> {
        let p = self.characteristic() as u128;
        let q = step.degree() as u128;
        if step.kind != StepKind::PurelyInseparable || p == 0 || q < 2 {
            return None;
        }
        let mut r = q;
        while r % p == 0 {
            r /= p;
        }
        (r == 1 && step.minpoly[1..step.degree()].iter().all(Elem::is_zero)).then_some(q)
    }

    pub fn div(&self, a: &Elem, b: &Elem) -> Result<Elem, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow(&self, a: &Elem, mut e: u128) -> Elem {
        let mut r = self.one();
        let mut b = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    pub fn pow_signed(&self, a: &Elem, e: i64) -> Result<Elem, FieldError> {
        if e >= 0 {
            Ok(self.pow(a, e as u128))
        } else {
            Ok(self.pow(&self.inv(a)?, e.unsigned_abs() as u128))
        }
    }

    /// `e^{p^r}`; the identity in characteristic zero.
    pub fn frobenius(&self, e: &Elem, r: u32) -> Elem {
        let p = self.characteristic();
        if p == 0 {
            return e.clone();
        }
        let mut out = e.clone();
        for _ in 0..r {
            out = self.frobenius_once(&out);
        }
        out
    }

    fn frobenius_once(&self, e: &Elem) -> Elem {
        let p = self.characteristic() as u128;
        match e {
            Elem::Base(r) => Elem::Base(r.frobenius(self.prime())),
            Elem::Alg { level, coeffs } => {
                let g = self.gen(*level);
                let gp = self.pow(&g, p);
                let mut acc = self.zero();
                let mut gpow = self.one();
                for c in coeffs {
                    if !c.is_zero() {
                        acc = self.add(&acc, &self.mul(&self.frobenius_once(c), &gpow));
                    }
                    gpow = self.mul(&gpow, &gp);
                }
                acc
            }
        }
    }

    /// Embeds an element of a prefix tower, checking that it only uses levels that exist here.
    pub fn contains(&self, e: &Elem) -> bool {
        e.level() <= self.steps.len()
    }

    // ---- display ----

    pub fn format(&self, e: &Elem) -> String {
        match e {
            Elem::Base(r) => self.format_ratfunc(r),
            Elem::Alg { level, coeffs } => {
                let name = &self.step(*level).name;
                let mut parts: Vec<String> = Vec::new();
                for (i, c) in coeffs.iter().enumerate().rev() {
                    if c.is_zero() {
                        continue;
                    }
                    let g = match i {
                        0 => String::new(),
                        1 => name.clone(),
                        _ => alloc::format!("{name}^{i}"),
                    };
                    let cs = self.format(c);
                    let term = if g.is_empty() {
                        cs
                    } else if *c == self.one() {
                        g
                    } else if *c == self.from_i64(-1) {
                        alloc::format!("-{g}")
                    } else {
                        alloc::format!("({cs})*{g}")
                    };
                    parts.push(term);
                }
                join_terms(&parts)
            }
        }
    }

    fn format_poly(&self, p: &MPoly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let f = self.prime();
        let mut parts: Vec<String> = Vec::new();
        for (m, c) in p.terms.iter().rev() {
            let mut mon: Vec<String> = Vec::new();
            for (v, e) in m.0.iter().rev() {
                let n = self.base.var_name(*v);
                mon.push(if *e == 1 { n } else { alloc::format!("{n}^{e}") });
            }
            let ms = mon.join("*");
            let term = if ms.is_empty() {
                c.to_string()
            } else if f.is_one(c) {
                ms
            } else if f.is_one(&f.neg(c)) && f.characteristic() == 0 {
                alloc::format!("-{ms}")
            } else {
                alloc::format!("{c}*{ms}")
            };
            parts.push(term);
        }
        join_terms(&parts)
    }

    fn format_ratfunc(&self, r: &RatFunc) -> String {
        let n = self.format_poly(&r.num);
        if r.is_polynomial(self.prime()) {
            n
        } else {
            alloc::format!("({n})/({})", self.format_poly(&r.den))
        }
    }
}

fn join_terms(parts: &[String]) -> String {
    if parts.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            if let Some(rest) = p.strip_prefix('-') {
                s.push_str(" - ");
                s.push_str(rest);
                continue;
            }
            s.push_str(" + ");
        }
        s.push_str(p);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_and_prime_checks() {
        assert_eq!(BaseField::new(4, &[], &[]), Err(FieldError::NonPrimeCharacteristic(4)));
        assert!(matches!(BaseField::new(5, &["t"], &["t"]), Err(FieldError::DuplicateGenerator(_))));
        let b = BaseField::new(5, &["t"], &["u"]).unwrap();
        assert_eq!(b.lookup("t12"), Some(Var { fam: 0, idx: 12 }));
        assert_eq!(b.lookup("u"), Some(Var { fam: 1, idx: 0 }));
        assert_eq!(b.lookup("t"), None);
    }

    #[test]
    fn base_arithmetic_is_canonical() {
        let k = FieldTower::new(BaseField::new(0, &[], &["u"]).unwrap());
        let u = k.named("u").unwrap();
        let a = k.add(&u, &k.one());
        let b = k.div(&k.sub(&k.mul(&u, &u), &k.one()), &k.sub(&u, &k.one())).unwrap();
        assert_eq!(a, b);
    }
}
