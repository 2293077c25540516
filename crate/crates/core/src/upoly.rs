//! Dense univariate polynomials with coefficients in a field tower, lowest degree first.
//! The zero polynomial is the empty vector.

use alloc::vec;
use alloc::vec::Vec;

use crate::field::{Elem, FieldTower};

pub type UPoly = Vec<Elem>;

pub fn trim(a: &mut UPoly) {
    while a.last().map(|c| c.is_zero()).unwrap_or(false) {
        a.pop();
    }
}

pub fn trimmed(a: &[Elem]) -> UPoly {
    let mut v = a.to_vec();
    trim(&mut v);
    v
}

/// Degree, with `None` for the zero polynomial.
pub fn degree(a: &[Elem]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn add(t: &FieldTower, a: &[Elem], b: &[Elem]) -> UPoly {
    let n = a.len().max(b.len());
    let z = t.zero();
    let mut out: UPoly = (0..n).map(|i| t.add(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z))).collect();
    trim(&mut out);
    out
}

pub fn sub(t: &FieldTower, a: &[Elem], b: &[Elem]) -> UPoly {
    let n = a.len().max(b.len());
    let z = t.zero();
    let mut out: UPoly = (0..n).map(|i| t.sub(a.get(i).unwrap_or(&z), b.get(i).unwrap_or(&z))).collect();
    trim(&mut out);
    out
}

pub fn scale(t: &FieldTower, a: &[Elem], c: &Elem) -> UPoly {
    let mut out: UPoly = a.iter().map(|x| t.mul(x, c)).collect();
    trim(&mut out);
    out
}

pub fn mul(t: &FieldTower, a: &[Elem], b: &[Elem]) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![t.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] = t.add(&out[i + j], &t.mul(x, y));
            }
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(t: &FieldTower, a: &[Elem], b: &[Elem]) -> (UPoly, UPoly) {
    let db = degree(b).expect("division by zero polynomial");
    let lead_inv = t.inv(&b[db]).expect("nonzero leading coefficient");
    let mut r = trimmed(a);
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut q = vec![t.zero(); r.len() - db];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = t.mul(&r[dr], &lead_inv);
        for j in 0..=db {
            if !b[j].is_zero() {
                r[dr - db + j] = t.sub(&r[dr - db + j], &t.mul(&c, &b[j]));
            }
        }
        q[dr - db] = c;
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

pub fn rem(t: &FieldTower, a: &[Elem], b: &[Elem]) -> UPoly {
    divrem(t, a, b).1
}

pub fn monic(t: &FieldTower, a: &[Elem]) -> UPoly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => {
            let inv = t.inv(&a[d]).expect("nonzero leading coefficient");
            scale(t, &a[..=d], &inv)
        }
    }
}

/// Monic gcd.
pub fn gcd(t: &FieldTower, a: &[Elem], b: &[Elem]) -> UPoly {
    let mut x = trimmed(a);
    let mut y = trimmed(b);
    while !y.is_empty() {
        let r = rem(t, &x, &y);
        x = y;
        y = r;
    }
    monic(t, &x)
}

/// Inverse of `a` modulo `m`, as a coefficient vector of length below `deg m`.
pub fn inverse_mod(t: &FieldTower, a: &[Elem], m: &[Elem]) -> Option<UPoly> {
    let (mut r0, mut r1) = (trimmed(m), rem(t, a, m));
    let (mut s0, mut s1): (UPoly, UPoly) = (Vec::new(), vec![t.one()]);
    while degree(&r1)? > 0 {
        let (q, r) = divrem(t, &r0, &r1);
        let s = sub(t, &s0, &mul(t, &q, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    let c = t.inv(&r1[0]).ok()?;
    Some(scale(t, &s1, &c))
}

pub fn eval(t: &FieldTower, a: &[Elem], x: &Elem) -> Elem {
    let mut acc = t.zero();
    for c in a.iter().rev() {
        acc = t.add(&t.mul(&acc, x), c);
    }
    acc
}

pub fn derivative(t: &FieldTower, a: &[Elem]) -> UPoly {
    let mut out: UPoly = a.iter().enumerate().skip(1).map(|(i, c)| t.mul(&t.from_i64(i as i64), c)).collect();
    trim(&mut out);
    out
}

/// `a^e mod m` by square and multiply.
pub fn powmod(t: &FieldTower, a: &[Elem], mut e: u128, m: &[Elem]) -> UPoly {
    let mut r = rem(t, &[t.one()], m);
    let mut b = rem(t, a, m);
    while e > 0 {
        if e & 1 == 1 {
            r = rem(t, &mul(t, &r, &b), m);
        }
        e >>= 1;
        if e > 0 {
            b = rem(t, &mul(t, &b, &b), m);
        }
    }
    r
}

/// Applies a coefficient map.
pub fn map(a: &[Elem], f: impl Fn(&Elem) -> Elem) -> UPoly {
    let mut out: UPoly = a.iter().map(f).collect();
    trim(&mut out);
    out
}
