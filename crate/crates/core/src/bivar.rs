//! Polynomials in `y` whose coefficients are finite sums of rational powers of `x`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::field::{Elem, FieldTower};
use crate::series::{exp_string, Ctx, Exp, Horizon, Series, SeriesError, Term};
use crate::tower::Subfield;

/// `Σ c_{j,e} x^e y^j`, keyed by `(j, e)`; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BivarPoly {
    pub terms: BTreeMap<(u32, Exp), Elem>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(t: &FieldTower, terms: impl IntoIterator<Item = (u32, Exp, Elem)>) -> Self {
        let mut out = Self::zero();
        for (j, e, c) in terms {
            out.add_term(t, j, e, c);
        }
        out
    }

    pub fn add_term(&mut self, t: &FieldTower, j: u32, e: Exp, c: Elem) {
        let key = (j, e);
        let v = match self.terms.remove(&key) {
            Some(old) => t.add(&old, &c),
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn y_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(j, _)| *j).max()
    }

    /// The coefficient of `y^j` as a list of `x`-terms.
    pub fn y_coefficient(&self, j: u32) -> Vec<Term> {
        self.terms.iter().filter(|((k, _), _)| *k == j).map(|((_, e), c)| (e.clone(), c.clone())).collect()
    }

    pub fn scale(&self, t: &FieldTower, c: &Elem) -> Self {
        Self::from_terms(t, self.terms.iter().map(|((j, e), d)| (*j, e.clone(), t.mul(c, d))))
    }

    pub fn mul(&self, t: &FieldTower, o: &BivarPoly) -> Self {
        let mut out = Self::zero();
        for ((j1, e1), c1) in &self.terms {
            for ((j2, e2), c2) in &o.terms {
                out.add_term(t, j1 + j2, e1 + e2, t.mul(c1, c2));
            }
        }
        out
    }

    pub fn add(&self, t: &FieldTower, o: &BivarPoly) -> Self {
        let mut out = self.clone();
        for ((j, e), c) in &o.terms {
            out.add_term(t, *j, e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, t: &FieldTower, o: &BivarPoly) -> Self {
        self.add(t, &o.scale(t, &t.from_i64(-1)))
    }

    /// Applies a coefficient map (e.g. a field automorphism).
    pub fn map_coefficients(&self, t: &FieldTower, f: impl Fn(&Elem) -> Elem) -> Self {
        Self::from_terms(t, self.terms.iter().map(|((j, e), c)| (*j, e.clone(), f(c))))
    }

    /// Scales so that the leading coefficient in lex order with `y` first (highest `y`-degree,
    /// then lowest `x`-exponent) is 1.
    pub fn normalized(&self, t: &FieldTower) -> Self {
        let first = self
            .terms
            .iter()
            .min_by(|((j1, e1), _), ((j2, e2), _)| j2.cmp(j1).then(e1.cmp(e2)))
            .map(|(_, c)| c.clone());
        match first {
            None => self.clone(),
            Some(c) => self.scale(t, &t.inv(&c).expect("nonzero")),
        }
    }

    /// `g(x, s)` as a lazy series.
    pub fn substitute(&self, ctx: &Ctx, s: &Series) -> Series {
        let mut acc = Series::zero(ctx);
        let Some(n) = self.y_degree() else { return acc };
        for j in 0..=n {
            let a = self.y_coefficient(j);
            if a.is_empty() {
                continue;
            }
            let coeff = Series::explicit(ctx, a);
            acc = acc.add(&coeff.mul(&s.pow(j)));
        }
        acc
    }

    /// Whether all coefficients are fixed by `f`.
    pub fn fixed_by(&self, f: impl Fn(&Elem) -> Elem) -> bool {
        self.terms.values().all(|c| f(c) == *c)
    }

    /// Whether all coefficients lie in the first `depth` steps.
    pub fn defined_over(&self, depth: usize) -> bool {
        self.terms.values().all(|c| c.level() <= depth)
    }

    pub fn format(&self, t: &FieldTower) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut parts: Vec<String> = Vec::new();
        let mut keys: Vec<&(u32, Exp)> = self.terms.keys().collect();
        keys.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for k in keys {
            let c = &self.terms[k];
            let (j, e) = k;
            let mut mono: Vec<String> = Vec::new();
            if *e != Exp::from_integer(0.into()) {
                mono.push(if *e == Exp::from_integer(1.into()) {
                    String::from("x")
                } else if e.is_integer() {
                    format!("x^{}", exp_string(e))
                } else {
                    format!("x^({})", exp_string(e))
                });
            }
            if *j > 0 {
                mono.push(if *j == 1 { String::from("y") } else { format!("y^{j}") });
            }
            let m = mono.join("*");
            let cs = t.format(c);
            let simple = !cs.contains(' ') && !cs.contains('/');
            let term = if m.is_empty() {
                cs
            } else if *c == t.one() {
                m
            } else if *c == t.from_i64(-1) {
                format!("-{m}")
            } else if simple {
                format!("{cs}*{m}")
            } else {
                format!("({cs})*{m}")
            };
            parts.push(term);
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
}

/// Initial segment of `g(x, s)`: at least `budget` terms of every operand are consulted and the
/// residue is exact below the returned horizon. An empty residue means zero to that horizon.
pub fn substitute_poly(ctx: &Ctx, g: &BivarPoly, s: &Series, budget: usize) -> Result<(Vec<Term>, Horizon), SeriesError> {
    g.substitute(ctx, s).prefix(budget)
}

/// Residue of `g(x, s)` below an exponent bound.
pub fn residue_below(ctx: &Ctx, g: &BivarPoly, s: &Series, bound: &Exp) -> Result<Vec<Term>, SeriesError> {
    g.substitute(ctx, s).terms_below(bound)
}

/// `L_i = k(α_1, …, α_i)` for the first `i` nonzero coefficients of `s`, as a subfield
/// presented over `k`.
pub fn coefficient_prefix_tower(s: &Series, i: usize) -> Result<Subfield, SeriesError> {
    let coeffs = s.coefficients(i)?;
    let t = s.tower();
    let elems: Vec<(String, Elem)> = coeffs
        .into_iter()
        .enumerate()
        .map(|(j, c)| (format!("alpha{}", j + 1), c))
        .collect();
    Ok(t.generated_subfield(s.ctx().k_depth(), &elems)?)
}
