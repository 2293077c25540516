//! Prime-field scalars: exact rationals in characteristic zero, residues mod p otherwise.

use alloc::string::{String, ToString};
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Rat(BigRational),
    Mod(u64),
}

/// The prime field of a given characteristic (`0` means ℚ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

impl PrimeField {
    /// Returns `None` unless `p` is zero or prime.
    pub fn new(p: u64) -> Option<Self> {
        if p == 0 || is_prime(p) {
            Some(Self { p })
        } else {
            None
        }
    }

    pub fn rationals() -> Self {
        Self { p: 0 }
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn zero(&self) -> Scalar {
        if self.p == 0 {
            Scalar::Rat(BigRational::zero())
        } else {
            Scalar::Mod(0)
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        if self.p == 0 {
            Scalar::Rat(BigRational::from_integer(BigInt::from(n)))
        } else {
            Scalar::Mod(n.rem_euclid(self.p as i64) as u64)
        }
    }

    pub fn from_bigint(&self, n: &BigInt) -> Scalar {
        if self.p == 0 {
            Scalar::Rat(BigRational::from_integer(n.clone()))
        } else {
            let m = n.mod_floor(&BigInt::from(self.p));
            Scalar::Mod(m.to_u64().unwrap_or(0))
        }
    }

    /// `num / den`; `None` when the denominator vanishes in this field.
    pub fn from_ratio(&self, num: &BigInt, den: &BigInt) -> Option<Scalar> {
        if self.p == 0 {
            if den.is_zero() {
                return None;
            }
            Some(Scalar::Rat(BigRational::new(num.clone(), den.clone())))
        } else {
            let d = self.from_bigint(den);
            if self.is_zero(&d) {
                return None;
            }
            Some(self.mul(&self.from_bigint(num), &self.inv(&d)))
        }
    }

    pub fn is_zero(&self, a: &Scalar) -> bool {
        match a {
            Scalar::Rat(r) => r.is_zero(),
            Scalar::Mod(m) => *m == 0,
        }
    }

    pub fn is_one(&self, a: &Scalar) -> bool {
        match a {
            Scalar::Rat(r) => r.is_one(),
            Scalar::Mod(m) => *m == 1,
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x + y),
            (Scalar::Mod(x), Scalar::Mod(y)) => Scalar::Mod(((*x as u128 + *y as u128) % self.p as u128) as u64),
            _ => panic!("mixed scalar kinds"),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match a {
            Scalar::Rat(x) => Scalar::Rat(-x),
            Scalar::Mod(x) => Scalar::Mod(if *x == 0 { 0 } else { self.p - x }),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (a, b) {
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x * y),
            (Scalar::Mod(x), Scalar::Mod(y)) => Scalar::Mod(mulmod(*x, *y, self.p)),
            _ => panic!("mixed scalar kinds"),
        }
    }

    /// Panics on zero.
    pub fn inv(&self, a: &Scalar) -> Scalar {
        match a {
            Scalar::Rat(x) => {
                assert!(!x.is_zero(), "inverse of zero");
                Scalar::Rat(x.recip())
            }
            Scalar::Mod(x) => {
                assert!(*x != 0, "inverse of zero");
                Scalar::Mod(powmod(*x, self.p - 2, self.p))
            }
        }
    }

    pub fn pow(&self, a: &Scalar, e: u64) -> Scalar {
        match a {
            Scalar::Mod(x) => Scalar::Mod(powmod(*x, e, self.p)),
            Scalar::Rat(_) => {
                let mut r = self.one();
                let mut b = a.clone();
                let mut e = e;
                while e > 0 {
                    if e & 1 == 1 {
                        r = self.mul(&r, &b);
                    }
                    b = self.mul(&b, &b);
                    e >>= 1;
                }
                r
            }
        }
    }

    /// A square root in the prime field, if one exists. For ℚ the non-negative root is returned.
    pub fn sqrt(&self, a: &Scalar) -> Option<Scalar> {
        match a {
            Scalar::Rat(x) => {
                if x.is_negative() {
                    return None;
                }
                let n = x.numer().sqrt();
                let d = x.denom().sqrt();
                if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
                    Some(Scalar::Rat(BigRational::new(n, d)))
                } else {
                    None
                }
            }
            Scalar::Mod(x) => self.sqrt_mod(*x).map(Scalar::Mod),
        }
    }

    fn sqrt_mod(&self, a: u64) -> Option<u64> {
        let p = self.p;
        if a == 0 || p == 2 {
            return Some(a);
        }
        if powmod(a, (p - 1) / 2, p) != 1 {
            return None;
        }
        // Tonelli-Shanks
        let mut q = p - 1;
        let mut s = 0;
        while q % 2 == 0 {
            q /= 2;
            s += 1;
        }
        let mut z = 2;
        while powmod(z, (p - 1) / 2, p) != p - 1 {
            z += 1;
        }
        let mut m = s;
        let mut c = powmod(z, q, p);
        let mut t = powmod(a, q, p);
        let mut r = powmod(a, (q + 1) / 2, p);
        while t != 1 {
            let mut i = 0;
            let mut tt = t;
            while tt != 1 {
                tt = mulmod(tt, tt, p);
                i += 1;
            }
            let b = powmod(c, 1 << (m - i - 1), p);
            m = i;
            c = mulmod(b, b, p);
            t = mulmod(t, c, p);
            r = mulmod(r, b, p);
        }
        Some(r.min(p - r))
    }

    /// Every element of the prime field when it is finite.
    pub fn elements(&self) -> Option<impl Iterator<Item = Scalar>> {
        if self.p == 0 {
            None
        } else {
            Some((0..self.p).map(Scalar::Mod))
        }
    }

    pub fn to_string(&self, a: &Scalar) -> String {
        a.to_string()
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Mod(m) => write!(f, "{}", m),
        }
    }
}

impl Scalar {
    pub fn is_negative_rational(&self) -> bool {
        matches!(self, Scalar::Rat(r) if r.is_negative())
    }
}
