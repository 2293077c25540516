//! Sparse multivariate polynomials over a prime field, with exact division and
//! a recursive primitive-PRS gcd. These carry the transcendental part of a base field.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::scalar::{PrimeField, Scalar};

/// A transcendental generator: member `idx` of family `fam`. Standalone generators
/// are families with a single member at index 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub fam: u16,
    pub idx: u32,
}

/// Monomial as `(var, exponent)` pairs sorted by descending variable, exponents positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Mono(pub Vec<(Var, u32)>);

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.0.cmp(&b.0) {
                Ordering::Equal => match a.1.cmp(&b.1) {
                    Ordering::Equal => continue,
                    o => return o,
                },
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn var(v: Var, e: u32) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(v, e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.0.iter().find(|(w, _)| *w == v).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            if j == other.0.len() || (i < self.0.len() && self.0[i].0 > other.0[j].0) {
                out.push(self.0[i]);
                i += 1;
            } else if i == self.0.len() || other.0[j].0 > self.0[i].0 {
                out.push(other.0[j]);
                j += 1;
            } else {
                out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                i += 1;
                j += 1;
            }
        }
        Mono(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut out = Vec::new();
        for &(v, e) in &self.0 {
            let d = other.degree_in(v);
            if d > e {
                return None;
            }
            if e > d {
                out.push((v, e - d));
            }
        }
        if other.0.iter().any(|(v, _)| self.degree_in(*v) == 0) {
            return None;
        }
        Some(Mono(out))
    }

    /// Drops variable `v`.
    pub fn without(&self, v: Var) -> Mono {
        Mono(self.0.iter().copied().filter(|(w, _)| *w != v).collect())
    }

    pub fn map_exponents(&self, f: impl Fn(u32) -> u32) -> Mono {
        Mono(self.0.iter().map(|&(v, e)| (v, f(e))).filter(|(_, e)| *e > 0).collect())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }
}

/// Sparse polynomial; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MPoly {
    pub terms: BTreeMap<Mono, Scalar>,
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(f: &PrimeField, c: Scalar) -> Self {
        let mut p = Self::zero();
        if !f.is_zero(&c) {
            p.terms.insert(Mono::one(), c);
        }
        p
    }

    pub fn one(f: &PrimeField) -> Self {
        Self::constant(f, f.one())
    }

    pub fn monomial(f: &PrimeField, c: Scalar, m: Mono) -> Self {
        let mut p = Self::zero();
        if !f.is_zero(&c) {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn var(f: &PrimeField, v: Var) -> Self {
        Self::monomial(f, f.one(), Mono::var(v, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant, if the polynomial is constant (zero included).
    pub fn as_constant(&self, f: &PrimeField) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(f.zero()),
            1 => self.terms.get(&Mono::one()).cloned(),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<(&Mono, &Scalar)> {
        self.terms.iter().next_back()
    }

    pub fn main_var(&self) -> Option<Var> {
        self.leading().and_then(|(m, _)| m.0.first().map(|(v, _)| *v))
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    fn insert_add(&mut self, f: &PrimeField, m: Mono, c: Scalar) {
        if f.is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                let s = f.add(old, &c);
                if f.is_zero(&s) {
                    self.terms.remove(&m);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, f: &PrimeField, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(f, m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self, f: &PrimeField) -> MPoly {
        MPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), f.neg(c))).collect() }
    }

    pub fn sub(&self, f: &PrimeField, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(f, m.clone(), f.neg(c));
        }
        out
    }

    pub fn scale(&self, f: &PrimeField, c: &Scalar) -> MPoly {
        if f.is_zero(c) {
            return MPoly::zero();
        }
        MPoly { terms: self.terms.iter().map(|(m, d)| (m.clone(), f.mul(c, d))).collect() }
    }

    pub fn mul_term(&self, f: &PrimeField, m: &Mono, c: &Scalar) -> MPoly {
        if f.is_zero(c) {
            return MPoly::zero();
        }
        MPoly { terms: self.terms.iter().map(|(n, d)| (n.mul(m), f.mul(c, d))).collect() }
    }

    pub fn mul(&self, f: &PrimeField, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.insert_add(f, m1.mul(m2), f.mul(c1, c2));
            }
        }
        out
    }

    pub fn pow(&self, f: &PrimeField, mut e: u64) -> MPoly {
        let mut r = MPoly::one(f);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(f, &b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(f, &b);
            }
        }
        r
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, f: &PrimeField, d: &MPoly) -> Option<MPoly> {
        let (dm, dc) = d.leading()?;
        let dc_inv = f.inv(dc);
        let mut rem = self.clone();
        let mut q = MPoly::zero();
        while let Some((rm, rc)) = rem.leading() {
            let m = rm.div(dm)?;
            let c = f.mul(rc, &dc_inv);
            rem = rem.sub(f, &d.mul_term(f, &m, &c));
            q.insert_add(f, m, c);
        }
        Some(q)
    }

    /// Makes the leading coefficient one; returns the polynomial and the removed factor.
    pub fn monic(&self, f: &PrimeField) -> (MPoly, Scalar) {
        match self.leading() {
            None => (MPoly::zero(), f.one()),
            Some((_, c)) => {
                let c = c.clone();
                (self.scale(f, &f.inv(&c)), c)
            }
        }
    }

    /// Coefficients as a polynomial in `v`, lowest degree first.
    pub fn to_univariate(&self, f: &PrimeField, v: Var) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![MPoly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.degree_in(v) as usize;
            out[e].insert_add(f, m.without(v), c.clone());
        }
        out
    }

    pub fn from_univariate(f: &PrimeField, v: Var, coeffs: &[MPoly]) -> MPoly {
        let mut out = MPoly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            let vm = Mono::var(v, e as u32);
            for (m, s) in &c.terms {
                out.insert_add(f, m.mul(&vm), s.clone());
            }
        }
        out
    }

    /// Substitutes `v ↦ v^k` style exponent maps, used by Frobenius on polynomials.
    pub fn map_monomials(&self, f: &PrimeField, g: impl Fn(&Mono) -> Mono, h: impl Fn(&Scalar) -> Scalar) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            out.insert_add(f, g(m), h(c));
        }
        out
    }

    pub fn eval_var(&self, f: &PrimeField, v: Var, val: &MPoly) -> MPoly {
        let uni = self.to_univariate(f, v);
        let mut acc = MPoly::zero();
        for c in uni.iter().rev() {
            acc = acc.mul(f, val).add(f, c);
        }
        acc
    }
}

fn trim(v: &mut Vec<MPoly>) {
    while v.len() > 1 && v.last().map(|c| c.is_zero()).unwrap_or(false) {
        v.pop();
    }
}

fn uni_is_zero(a: &[MPoly]) -> bool {
    a.iter().all(|c| c.is_zero())
}

/// Pseudo-remainder of `a` by `b` as polynomials in one variable.
fn prem(f: &PrimeField, a: &[MPoly], b: &[MPoly]) -> Vec<MPoly> {
    let mut r: Vec<MPoly> = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() > db && !uni_is_zero(&r) {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c = c.mul(f, lb);
        }
        for (j, bc) in b.iter().enumerate() {
            let idx = dr - db + j;
            r[idx] = r[idx].sub(f, &bc.mul(f, &lr));
        }
        r.pop();
        trim(&mut r);
    }
    r
}

fn content(f: &PrimeField, a: &[MPoly]) -> MPoly {
    let mut g = MPoly::zero();
    for c in a {
        if c.is_zero() {
            continue;
        }
        g = gcd(f, &g, c);
        if g.as_constant(f).is_some() {
            return g;
        }
    }
    g
}

fn primitive(f: &PrimeField, a: &[MPoly]) -> Vec<MPoly> {
    let c = content(f, a);
    if c.is_zero() {
        return a.to_vec();
    }
    a.iter().map(|x| x.div_exact(f, &c).expect("content divides")).collect()
}

/// Monic greatest common divisor (zero only if both inputs are zero).
pub fn gcd(f: &PrimeField, a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() {
        return b.monic(f).0;
    }
    if b.is_zero() {
        return a.monic(f).0;
    }
    if a.as_constant(f).is_some() || b.as_constant(f).is_some() {
        return MPoly::one(f);
    }
    if f.characteristic() > 0 {
        if let Some(g) = dense_gcd(f, a, b) {
            return g;
        }
    }
    let v = core::cmp::max(a.main_var().unwrap(), b.main_var().unwrap());
    let ua = a.to_univariate(f, v);
    let ub = b.to_univariate(f, v);
    let c = gcd(f, &content(f, &ua), &content(f, &ub));
    let (mut pa, mut pb) = (primitive(f, &ua), primitive(f, &ub));
    if pa.len() < pb.len() {
        core::mem::swap(&mut pa, &mut pb);
    }
    while !uni_is_zero(&pb) {
        let r = prem(f, &pa, &pb);
        pa = pb;
        pb = if uni_is_zero(&r) { r } else { primitive(f, &r) };
    }
    let g = MPoly::from_univariate(f, v, &primitive(f, &pa));
    g.mul(f, &c).monic(f).0
}

/// Plain Euclid on dense coefficient vectors when both inputs live in the same single
/// variable over 𝔽_p, where pseudo-remainders and contents are pure overhead.
fn dense_gcd(f: &PrimeField, a: &MPoly, b: &MPoly) -> Option<MPoly> {
    let v = a.main_var()?;
    if a.vars() != [v] || b.vars() != [v] {
        return None;
    }
    let dense = |p: &MPoly| {
        let mut out = vec![f.zero(); p.degree_in(v) as usize + 1];
        for (m, c) in &p.terms {
            out[m.degree_in(v) as usize] = c.clone();
        }
        out
    };
    let (mut x, mut y) = (dense(a), dense(b));
    while !y.is_empty() {
        let lead_inv = f.inv(y.last().unwrap());
        let dy = y.len() - 1;
        while x.len() > dy {
            let c = f.mul(x.last().unwrap(), &lead_inv);
            let shift = x.len() - 1 - dy;
            for (j, yc) in y.iter().enumerate() {
                x[shift + j] = f.sub(&x[shift + j], &f.mul(&c, yc));
            }
            while x.last().is_some_and(|c| f.is_zero(c)) {
                x.pop();
            }
        }
        core::mem::swap(&mut x, &mut y);
    }
    let lead_inv = f.inv(x.last()?);
    let mut g = MPoly::zero();
    for (e, c) in x.iter().enumerate() {
        g.insert_add(f, Mono::var(v, e as u32), f.mul(c, &lead_inv));
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(i: u32) -> Var {
        Var { fam: 0, idx: i }
    }

    #[test]
    fn gcd_of_products() {
        let f = PrimeField::rationals();
        let x = MPoly::var(&f, t(1));
        let y = MPoly::var(&f, t(2));
        let one = MPoly::one(&f);
        let a = x.add(&f, &y).mul(&f, &x.sub(&f, &one));
        let b = x.add(&f, &y).mul(&f, &y.add(&f, &one));
        let g = gcd(&f, &a, &b);
        assert_eq!(g, x.add(&f, &y));
        assert_eq!(a.div_exact(&f, &g).unwrap(), x.sub(&f, &one));
    }

    #[test]
    fn gcd_mod_p_coprime() {
        let f = PrimeField::new(5).unwrap();
        let x = MPoly::var(&f, t(1));
        let one = MPoly::one(&f);
        let a = x.pow(&f, 5).sub(&f, &one);
        let b = x.sub(&f, &one);
        // x^5 - 1 = (x - 1)^5 in characteristic 5
        assert_eq!(gcd(&f, &a, &b), b);
        assert_eq!(a.div_exact(&f, &b).unwrap(), b.pow(&f, 4));
        assert!(x.div_exact(&f, &x.add(&f, &one)).is_none());
    }
}
