//! Reduced fractions of multivariate polynomials: elements of F(t_1, t_2, ...).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::mpoly::{gcd, MPoly, Mono, Var};
use crate::scalar::{PrimeField, Scalar};

/// `num / den` with `gcd(num, den) = 1` and `den` monic; zero is `0 / 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatFunc {
    pub num: MPoly,
    pub den: MPoly,
}

impl RatFunc {
    pub fn zero(f: &PrimeField) -> Self {
        Self { num: MPoly::zero(), den: MPoly::one(f) }
    }

    pub fn one(f: &PrimeField) -> Self {
        Self::from_poly(f, MPoly::one(f))
    }

    pub fn from_poly(f: &PrimeField, p: MPoly) -> Self {
        Self { num: p, den: MPoly::one(f) }
    }

    pub fn constant(f: &PrimeField, c: Scalar) -> Self {
        Self::from_poly(f, MPoly::constant(f, c))
    }

    pub fn var(f: &PrimeField, v: Var) -> Self {
        Self::from_poly(f, MPoly::var(f, v))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self, f: &PrimeField) -> bool {
        self.den == MPoly::one(f)
    }

    pub fn as_constant(&self, f: &PrimeField) -> Option<Scalar> {
        if self.is_polynomial(f) {
            self.num.as_constant(f)
        } else {
            None
        }
    }

    /// Builds the canonical form of `num / den`. Panics if `den` is zero.
    pub fn new(f: &PrimeField, num: MPoly, den: MPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero(f);
        }
        let (num, den) = if den.as_constant(f).is_some() {
            (num, den)
        } else {
            let g = gcd(f, &num, &den);
            if g.as_constant(f).is_some() {
                (num, den)
            } else {
                (num.div_exact(f, &g).unwrap(), den.div_exact(f, &g).unwrap())
            }
        };
        let (den, lc) = den.monic(f);
        let num = num.scale(f, &f.inv(&lc));
        Self { num, den }
    }

    pub fn add(&self, f: &PrimeField, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            if self.is_polynomial(f) {
                return Self::from_poly(f, self.num.add(f, &o.num));
            }
            return Self::new(f, self.num.add(f, &o.num), self.den.clone());
        }
        Self::new(f, self.num.mul(f, &o.den).add(f, &o.num.mul(f, &self.den)), self.den.mul(f, &o.den))
    }

    pub fn neg(&self, f: &PrimeField) -> RatFunc {
        Self { num: self.num.neg(f), den: self.den.clone() }
    }

    pub fn sub(&self, f: &PrimeField, o: &RatFunc) -> RatFunc {
        self.add(f, &o.neg(f))
    }

    pub fn mul(&self, f: &PrimeField, o: &RatFunc) -> RatFunc {
        if self.is_polynomial(f) && o.is_polynomial(f) {
            return Self::from_poly(f, self.num.mul(f, &o.num));
        }
        Self::new(f, self.num.mul(f, &o.num), self.den.mul(f, &o.den))
    }

    pub fn inv(&self, f: &PrimeField) -> RatFunc {
        assert!(!self.is_zero(), "inverse of zero");
        Self::new(f, self.den.clone(), self.num.clone())
    }

    pub fn scale(&self, f: &PrimeField, c: &Scalar) -> RatFunc {
        if f.is_zero(c) {
            return Self::zero(f);
        }
        Self { num: self.num.scale(f, c), den: self.den.clone() }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v.sort();
        v.dedup();
        v
    }

    /// Frobenius `r ↦ r^p` in characteristic `p`: exponents scale, prime-field coefficients are fixed.
    pub fn frobenius(&self, f: &PrimeField) -> RatFunc {
        let p = f.characteristic() as u32;
        let fr = |m: &MPoly| m.map_monomials(f, |mo| mo.map_exponents(|e| e * p), |c| c.clone());
        RatFunc { num: fr(&self.num), den: fr(&self.den) }
    }

    /// Coordinates over the subfield of p-th powers in the monomial p-basis:
    /// `self = Σ_e coords[e]^p · t^e` with exponent residues `e` in `[0, p)`.
    pub fn p_basis_coords(&self, f: &PrimeField) -> BTreeMap<Mono, RatFunc> {
        let p = f.characteristic() as u32;
        let n = self.num.mul(f, &self.den.pow(f, (p - 1) as u64));
        let mut groups: BTreeMap<Mono, MPoly> = BTreeMap::new();
        for (m, c) in &n.terms {
            let res = m.map_exponents(|e| e % p);
            let quo = m.map_exponents(|e| e / p);
            let entry = groups.entry(res).or_default();
            *entry = entry.add(f, &MPoly::monomial(f, c.clone(), quo));
        }
        groups
            .into_iter()
            .filter(|(_, q)| !q.is_zero())
            .map(|(m, q)| (m, RatFunc::new(f, q, self.den.clone())))
            .collect()
    }

    /// Square root in F(t): exists iff numerator and denominator are squares up to a
    /// square constant (characteristic ≠ 2).
    pub fn sqrt(&self, f: &PrimeField) -> Option<RatFunc> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let n = poly_sqrt(f, &self.num.mul(f, &self.den))?;
        Some(RatFunc::new(f, n, self.den.clone()))
    }
}

/// Square root of a polynomial by leading-term peeling, or `None`.
fn poly_sqrt(f: &PrimeField, a: &MPoly) -> Option<MPoly> {
    if a.is_zero() {
        return Some(MPoly::zero());
    }
    if f.characteristic() == 2 {
        return None;
    }
    let (lm, lc) = a.leading()?;
    if lm.0.iter().any(|(_, e)| e % 2 == 1) {
        return None;
    }
    let root_m = lm.map_exponents(|e| e / 2);
    let root_c = f.sqrt(lc)?;
    let (trail_m, _) = a.terms.iter().next()?;
    let trail_half = trail_m.map_exponents(|e| e / 2);
    let lead = MPoly::monomial(f, root_c.clone(), root_m.clone());
    let two_lead_inv = f.inv(&f.mul(&f.from_i64(2), &root_c));
    let mut g = lead.clone();
    let mut last = root_m.clone();
    loop {
        let r = a.sub(f, &g.mul(f, &g));
        let Some((rm, rc)) = r.leading() else { return Some(g) };
        let m = rm.div(&root_m)?;
        if m >= last || m < trail_half {
            return None;
        }
        let c = f.mul(rc, &two_lead_inv);
        g = g.add(f, &MPoly::monomial(f, c, m.clone()));
        last = m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_reduction() {
        let f = PrimeField::rationals();
        let t = MPoly::var(&f, Var { fam: 0, idx: 1 });
        let one = MPoly::one(&f);
        let num = t.mul(&f, &t).sub(&f, &one);
        let den = t.sub(&f, &one).scale(&f, &f.from_i64(3));
        let r = RatFunc::new(&f, num, den);
        let expect = RatFunc::new(&f, t.add(&f, &one).scale(&f, &f.inv(&f.from_i64(3))), one.clone());
        assert_eq!(r, expect);
    }

    #[test]
    fn p_basis_reassembles() {
        let f = PrimeField::new(3).unwrap();
        let t = MPoly::var(&f, Var { fam: 0, idx: 1 });
        let r = RatFunc::new(&f, t.pow(&f, 4).add(&f, &t), t.add(&f, &MPoly::one(&f)));
        let coords = r.p_basis_coords(&f);
        let mut acc = RatFunc::zero(&f);
        for (m, c) in coords {
            let basis = RatFunc::from_poly(&f, MPoly::monomial(&f, f.one(), m));
            acc = acc.add(&f, &c.frobenius(&f).mul(&f, &basis));
        }
        assert_eq!(acc, r);
    }

    #[test]
    fn polynomial_square_roots() {
        let f = PrimeField::rationals();
        let t = MPoly::var(&f, Var { fam: 0, idx: 1 });
        let u = MPoly::var(&f, Var { fam: 1, idx: 0 });
        let s = t.add(&f, &u.scale(&f, &f.from_i64(3))).sub(&f, &MPoly::one(&f));
        let sq = RatFunc::from_poly(&f, s.mul(&f, &s));
        let r = sq.sqrt(&f).unwrap();
        assert_eq!(r.mul(&f, &r), sq);
        assert!(RatFunc::from_poly(&f, t).sqrt(&f).is_none());
    }
}
