//! Algorithms on field towers that need linear algebra: p-th roots, square roots,
//! irreducibility, minimal polynomials, generated subfields and automorphisms.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::field::{Degree, Elem, ExtensionStep, FieldError, FieldTower, Irreducibility, StepKind};
use crate::linalg::{Echelon, SparseVec};
use crate::mpoly::{Mono, Var};
use crate::scalar::Scalar;
use crate::upoly::{self, UPoly};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Largest finite field that is enumerated element by element.
const ENUMERATION_LIMIT: u128 = 1 << 14;

/// Outcome of an irreducibility test.
enum Irred {
    Yes,
    No(String),
    Unknown,
}

/// Exponent-vector coordinates of an element over a set of generators.
pub type Flat = BTreeMap<Vec<u32>, Elem>;

impl FieldTower {
    /// Levels above `depth` that an element built from `seeds` can interact with: the
    /// generators it uses, the generators their minimal polynomials use and, when
    /// `with_vars` is set, every step whose minimal polynomial touches a collected
    /// generator or transcendental.
    pub fn relevant_levels(&self, seeds: &[Elem], depth: usize, with_vars: bool) -> Vec<usize> {
        let mut levels: Vec<usize> = Vec::new();
        let mut vars: Vec<Var> = Vec::new();
        for s in seeds {
            s.levels_used(&mut levels);
            if with_vars {
                s.vars_used(&mut vars);
            }
        }
        levels.retain(|l| *l > depth);
        loop {
            let before = (levels.len(), vars.len());
            for l in (depth + 1)..=self.num_steps() {
                let mut ls = Vec::new();
                let mut vs = Vec::new();
                for c in &self.step(l).minpoly {
                    c.levels_used(&mut ls);
                    c.vars_used(&mut vs);
                }
                let included = levels.contains(&l);
                let touches = with_vars
                    && (ls.iter().any(|x| levels.contains(x)) || vs.iter().any(|v| vars.contains(v)));
                if included || touches {
                    if !included {
                        levels.push(l);
                    }
                    for x in ls {
                        if x > depth && !levels.contains(&x) {
                            levels.push(x);
                        }
                    }
                    if with_vars {
                        for v in vs {
                            if !vars.contains(&v) {
                                vars.push(v);
                            }
                        }
                    }
                }
            }
            if (levels.len(), vars.len()) == before {
                break;
            }
        }
        levels.sort_unstable();
        levels
    }

    /// Coordinates over the monomials in `gens` with coefficients of level at most `depth`.
    pub fn flatten(&self, e: &Elem, gens: &[usize], depth: usize) -> Flat {
        let mut out = Flat::new();
        let mut exps = vec![0u32; gens.len()];
        self.flatten_into(e, gens, depth, &mut exps, &mut out);
        out
    }

    fn flatten_into(&self, e: &Elem, gens: &[usize], depth: usize, exps: &mut Vec<u32>, out: &mut Flat) {
        match e {
            Elem::Alg { level, coeffs } if *level > depth => {
                let pos = gens.iter().position(|g| g == level).expect("generator outside the flattening set");
                for (i, c) in coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    exps[pos] = i as u32;
                    self.flatten_into(c, gens, depth, exps, out);
                }
                exps[pos] = 0;
            }
            _ => {
                if !e.is_zero() {
                    out.insert(exps.clone(), e.clone());
                }
            }
        }
    }

    pub fn monomial(&self, gens: &[usize], exps: &[u32]) -> Elem {
        let mut acc = self.one();
        for (g, e) in gens.iter().zip(exps) {
            if *e > 0 {
                acc = self.mul(&acc, &self.pow(&self.gen(*g), *e as u128));
            }
        }
        acc
    }

    /// All exponent vectors below the step degrees of `gens`.
    pub fn monomial_basis(&self, gens: &[usize]) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0u32; gens.len()]];
        for (i, g) in gens.iter().enumerate() {
            let d = self.step(*g).degree() as u32;
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for v in &out {
                for e in 0..d {
                    let mut w = v.clone();
                    w[i] = e;
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// The unique `z` with `z^p = e`, if it exists. In characteristic zero every element is
    /// its own root, matching the convention that the p-th power subfield is the whole field.
    pub fn pth_root(&self, e: &Elem) -> Option<Elem> {
        let p = self.characteristic();
        if p == 0 || e.is_zero() {
            return Some(e.clone());
        }
        let f = *self.prime();
        let gens = self.relevant_levels(core::slice::from_ref(e), 0, true);
        let basis = self.monomial_basis(&gens);
        let mut index: BTreeMap<(Vec<u32>, Mono), usize> = BTreeMap::new();
        let mut key = |n: &Vec<u32>, b: Mono| -> usize {
            let len = index.len();
            *index.entry((n.clone(), b)).or_insert(len)
        };
        let coords = |flat: &Flat, key: &mut dyn FnMut(&Vec<u32>, Mono) -> usize| -> SparseVec {
            let mut v = SparseVec::new();
            for (n, c) in flat {
                let Elem::Base(r) = c else { unreachable!("flattened over all generators") };
                for (b, d) in r.p_basis_coords(&f) {
                    v.insert(key(n, b), Elem::Base(d));
                }
            }
            v
        };
        let mut ech = Echelon::new();
        let mut used = Vec::new();
        for m in &basis {
            let beta = self.monomial(&gens, m);
            let col = coords(&self.flatten(&self.frobenius(&beta, 1), &gens, 0), &mut key);
            if ech.insert(self, &col).is_ok() {
                used.push(beta);
            } else {
                used.push(self.zero());
            }
        }
        let target = coords(&self.flatten(e, &gens, 0), &mut key);
        let combo = ech.express(self, &target)?;
        let mut z = self.zero();
        for (k, c) in combo {
            z = self.add(&z, &self.mul(&c, &used[k]));
        }
        (self.frobenius(&z, 1) == *e).then_some(z)
    }

    pub fn is_pth_power(&self, e: &Elem) -> bool {
        self.pth_root(e).is_some()
    }

    /// A square root inside the first `level` steps. `Err(())` when the search is not
    /// supported for the steps involved.
    pub fn sqrt_in(&self, e: &Elem, level: usize) -> Result<Option<Elem>, ()> {
        if e.is_zero() {
            return Ok(Some(e.clone()));
        }
        if self.characteristic() == 2 {
            return Ok(self.truncate(level).pth_root(e));
        }
        if level == 0 {
            return match e {
                Elem::Base(r) => Ok(r.sqrt(self.prime()).map(Elem::Base)),
                _ => Err(()),
            };
        }
        if let Some(found) = self.multiquadratic_sqrt(e, level) {
            return Ok(found);
        }
        let step = self.step(level).clone();
        let d = step.degree();
        if d == 1 {
            return self.sqrt_in(e, level - 1);
        }
        if d == 2 && step.kind == StepKind::Separable {
            let half = self.inv(&self.from_i64(2)).expect("characteristic is not 2");
            let h = self.mul(&step.minpoly[1], &half);
            let disc = self.sub(&self.mul(&h, &h), &step.minpoly[0]);
            let a1 = self.add(&self.gen(level), &h);
            let (w0, w1) = match e {
                Elem::Alg { level: l, coeffs } if *l == level => {
                    (self.sub(&coeffs[0], &self.mul(&coeffs[1], &h)), coeffs[1].clone())
                }
                _ => (e.clone(), self.zero()),
            };
            if w1.is_zero() {
                if let Some(s) = self.sqrt_in(&w0, level - 1)? {
                    return Ok(Some(s));
                }
                let q = self.div(&w0, &disc).expect("nonzero discriminant");
                return Ok(self.sqrt_in(&q, level - 1)?.map(|s| self.mul(&s, &a1)));
            }
            let norm = self.sub(&self.mul(&w0, &w0), &self.mul(&disc, &self.mul(&w1, &w1)));
            let Some(n) = self.sqrt_in(&norm, level - 1)? else { return Ok(None) };
            for sign in [self.one(), self.from_i64(-1)] {
                let cand = self.mul(&self.add(&w0, &self.mul(&sign, &n)), &half);
                if let Some(v0) = self.sqrt_in(&cand, level - 1)? {
                    if v0.is_zero() {
                        continue;
                    }
                    let v1 = self.div(&w1, &self.mul(&self.from_i64(2), &v0)).expect("nonzero");
                    let z = self.add(&v0, &self.mul(&v1, &a1));
                    if self.mul(&z, &z) == *e {
                        return Ok(Some(z));
                    }
                }
            }
            return Ok(None);
        }
        if e.level() < level && d % 2 == 1 {
            return self.sqrt_in(e, level - 1);
        }
        if let Some(els) = self.truncate(level).elements() {
            return Ok(els.into_iter().find(|z| self.mul(z, z) == *e));
        }
        Err(())
    }

    /// Square roots of rational constants when every even step below `level` is a separable
    /// quadratic whose discriminant is a rational constant. Then `e` is a square exactly when
    /// `e` times some product of discriminants is a rational square, which is found by
    /// elimination over F_2 on square classes. `None` when the shape does not apply.
    fn multiquadratic_sqrt(&self, e: &Elem, level: usize) -> Option<Option<Elem>> {
        let prime = self.prime();
        if prime.characteristic() != 0 || level < 2 {
            return None;
        }
        let rational = |x: &Elem| match x {
            Elem::Base(r) => match r.as_constant(prime)? {
                Scalar::Rat(q) => Some(q),
                Scalar::Mod(_) => None,
            },
            _ => None,
        };
        let target = rational(e)?;
        let half = self.inv(&self.from_i64(2)).ok()?;
        let mut quads: Vec<(BigRational, Elem)> = Vec::new();
        for l in 1..=level {
            let step = self.step(l);
            match step.degree() {
                d if d % 2 == 1 => {}
                2 if step.kind == StepKind::Separable => {
                    let h = self.mul(&step.minpoly[1], &half);
                    let disc = self.sub(&self.mul(&h, &h), &step.minpoly[0]);
                    quads.push((rational(&disc)?, self.add(&self.gen(l), &h)));
                }
                _ => return None,
            }
        }
        let mut values: Vec<&BigRational> = quads.iter().map(|q| &q.0).collect();
        values.push(&target);
        let basis = coprime_basis(values.iter().flat_map(|q| [q.numer().abs(), q.denom().clone()]));
        let classes: Vec<Vec<bool>> = values.iter().map(|q| square_class(q, &basis)).collect();
        let (target_class, disc_classes) = classes.split_last().expect("target was pushed");
        let Some(subset) = f2_solve(disc_classes, target_class) else { return Some(None) };
        let mut scaled = target.clone();
        let mut z = self.one();
        for (i, (d, a1)) in quads.iter().enumerate() {
            if subset[i] {
                scaled *= d;
                z = self.div(&z, &self.from_scalar(Scalar::Rat(d.clone()))).ok()?;
                z = self.mul(&z, a1);
            }
        }
        let root = prime.sqrt(&Scalar::Rat(scaled));
        let Some(Scalar::Rat(r)) = root else { return Some(None) };
        Some(Some(self.mul(&z, &self.from_scalar(Scalar::Rat(r)))))
    }

    /// `p^[K : F_p]` for a finite tower.
    pub fn finite_order(&self) -> Option<(u64, u32)> {
        if !self.is_finite() {
            return None;
        }
        let Degree::Finite(d) = self.degree() else { return None };
        Some((self.characteristic(), d as u32))
    }

    /// Every element of a small finite tower.
    pub fn elements(&self) -> Option<Vec<Elem>> {
        let (p, d) = self.finite_order()?;
        if (p as u128).checked_pow(d).map(|q| q > ENUMERATION_LIMIT).unwrap_or(true) {
            return None;
        }
        let mut els: Vec<Elem> = self.prime().elements()?.map(|s| self.from_scalar(s)).collect();
        for l in 1..=self.num_steps() {
            let g = self.gen(l);
            let deg = self.step(l).degree();
            let mut next = vec![self.zero()];
            let mut gi = self.one();
            for _ in 0..deg {
                let mut acc = Vec::with_capacity(next.len() * els.len());
                for x in &next {
                    for c in &els {
                        acc.push(self.add(x, &self.mul(c, &gi)));
                    }
                }
                next = acc;
                gi = self.mul(&gi, &g);
            }
            els = next;
        }
        Some(els)
    }

    fn irreducible(&self, f: &[Elem]) -> Irred {
        let n = f.len() - 1;
        if n == 1 {
            return Irred::Yes;
        }
        if let Some((p, d)) = self.finite_order() {
            return self.rabin(f, p, d);
        }
        let p = self.characteristic();
        if n == 2 && p != 2 {
            let disc = self.sub(&self.mul(&f[1], &f[1]), &self.mul(&self.from_i64(4), &f[0]));
            return match self.sqrt_in(&disc, self.num_steps()) {
                Ok(Some(s)) => {
                    let half = self.inv(&self.from_i64(2)).expect("characteristic is not 2");
                    let root = self.mul(&self.sub(&s, &f[1]), &half);
                    Irred::No(format!("root {}", self.format(&root)))
                }
                Ok(None) => Irred::Yes,
                Err(()) => Irred::Unknown,
            };
        }
        if n == 3 && p == 0 && self.num_steps() == 0 && self.base().names().is_empty() {
            return match rational_root(self, f) {
                Some(r) => Irred::No(format!("root {r}")),
                None => Irred::Yes,
            };
        }
        Irred::Unknown
    }

    /// Rabin's test over a finite tower of order `p^d`.
    fn rabin(&self, f: &[Elem], p: u64, d: u32) -> Irred {
        let n = f.len() - 1;
        let x: UPoly = vec![self.zero(), self.one()];
        let frob_q = |h: &UPoly| -> UPoly {
            let mut h = h.clone();
            for _ in 0..d {
                h = upoly::powmod(self, &h, p as u128, f);
            }
            h
        };
        let mut powers = vec![upoly::rem(self, &x, f)];
        for _ in 0..n {
            let next = frob_q(powers.last().unwrap());
            powers.push(next);
        }
        if upoly::sub(self, &powers[n], &x).iter().any(|c| !c.is_zero()) {
            return Irred::No(String::from("Y^(q^n) differs from Y modulo the polynomial"));
        }
        for r in prime_factors(n) {
            let g = upoly::gcd(self, &upoly::sub(self, &powers[n / r], &x), f);
            if upoly::degree(&g).unwrap_or(0) > 0 {
                let shown: Vec<String> = g.iter().map(|c| self.format(c)).collect();
                return Irred::No(format!("factor with coefficients [{}]", shown.join(", ")));
            }
        }
        Irred::Yes
    }

    /// Adjoins a root of the monic polynomial `minpoly` (lowest degree first).
    ///
    /// Irreducibility is checked where an exact method applies. Otherwise the step is
    /// accepted only if `declared`, and it then makes dependent results conditional.
    pub fn adjoin(
        &self,
        name: &str,
        minpoly: Vec<Elem>,
        kind: StepKind,
        declared: bool,
        conjugates: Vec<Elem>,
    ) -> Result<FieldTower, FieldError> {
        if self.level_of_name(name).is_some()
            || self.base().lookup(name).is_some()
            || self.base().names().iter().any(|g| g.name() == name)
        {
            return Err(FieldError::DuplicateGenerator(name.into()));
        }
        if minpoly.len() < 2 || minpoly.last() != Some(&self.one()) {
            return Err(FieldError::NotMonic);
        }
        if minpoly.iter().any(|c| !self.contains(c)) {
            return Err(FieldError::UnknownGenerator(name.into()));
        }
        let n = minpoly.len() - 1;
        let p = self.characteristic();
        let irreducibility = match kind {
            StepKind::PurelyInseparable => {
                let shape_ok = p > 0
                    && is_power_of(n as u64, p)
                    && minpoly[1..n].iter().all(|c| c.is_zero());
                if !shape_ok {
                    return Err(FieldError::BadInseparableShape(format!(
                        "expected Y^(p^e) - c over characteristic {p}, got degree {n}"
                    )));
                }
                let c = self.neg(&minpoly[0]);
                if let Some(z) = self.pth_root(&c) {
                    return Err(FieldError::ReducibleWitness(format!(
                        "{} is the p-th power of {}",
                        self.format(&c),
                        self.format(&z)
                    )));
                }
                Irreducibility::Checked
            }
            StepKind::Separable => {
                if p > 0 && upoly::degree(&upoly::derivative(self, &minpoly)).is_none() {
                    return Err(FieldError::NotSeparable);
                }
                match self.irreducible(&minpoly) {
                    Irred::Yes => Irreducibility::Checked,
                    Irred::No(w) => return Err(FieldError::ReducibleWitness(w)),
                    Irred::Unknown if declared => Irreducibility::Declared,
                    Irred::Unknown => return Err(FieldError::IrreducibilityUndetermined(name.into())),
                }
            }
        };
        Ok(self.push_step_unchecked(ExtensionStep {
            name: name.into(),
            minpoly,
            kind,
            irreducibility,
            conjugates,
        }))
    }

    /// Minimal polynomial of `e` over the first `depth` steps, monic and lowest degree first.
    pub fn minimal_polynomial(&self, e: &Elem, depth: usize) -> Vec<Elem> {
        let gens = self.relevant_levels(core::slice::from_ref(e), depth, false);
        let mut index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        let mut ech = Echelon::new();
        let mut power = self.one();
        loop {
            let v = to_sparse(&self.flatten(&power, &gens, depth), &mut index);
            match ech.insert(self, &v) {
                Ok(()) => power = self.mul(&power, e),
                Err(combo) => {
                    let deg = ech.inputs() - 1;
                    let mut out = vec![self.zero(); deg + 1];
                    for (k, c) in combo {
                        out[k] = self.neg(&c);
                    }
                    out[deg] = self.one();
                    return out;
                }
            }
        }
    }

    /// The subfield generated over the first `depth` steps by `elems`, as a new tower whose
    /// steps are the minimal polynomials of the generators in order. Generators that
    /// already lie in the field generated so far add no step.
    pub fn generated_subfield(&self, depth: usize, elems: &[(String, Elem)]) -> Result<Subfield, FieldError> {
        let seeds: Vec<Elem> = elems.iter().map(|(_, e)| e.clone()).collect();
        let gens = self.relevant_levels(&seeds, depth, false);
        let mut sub = Subfield {
            ambient: self.clone(),
            tower: self.truncate(depth),
            depth,
            gens,
            index: BTreeMap::new(),
            ech: Echelon::new(),
            basis: vec![(self.one(), self.one())],
            reprs: Vec::new(),
            images: Vec::new(),
        };
        let v = sub.vector(&self.one());
        sub.ech.insert(self, &v).expect("one is nonzero");
        for (name, beta) in elems {
            let repr = sub.adjoin(name, beta)?;
            sub.reprs.push(repr);
        }
        Ok(sub)
    }

    /// `k · L^{p^r}` for `k` a prefix of `self`: the subfield generated over `k` by the
    /// `p^r`-th powers of the remaining generators.
    pub fn compositum_twist(&self, k: &FieldTower, r: u32) -> Result<Subfield, FieldError> {
        if !k.is_prefix_of(self) {
            return Err(FieldError::NotAPrefix);
        }
        let depth = k.num_steps();
        let q = (self.characteristic().max(1) as u128).pow(r);
        let elems: Vec<(String, Elem)> = ((depth + 1)..=self.num_steps())
            .map(|l| {
                let name = if r == 0 { self.step(l).name.clone() } else { format!("{}^{q}", self.step(l).name) };
                (name, self.frobenius(&self.gen(l), r))
            })
            .collect();
        self.generated_subfield(depth, &elems)
    }

    /// Splits `self` over the prefix `k` into a separable part followed by a purely
    /// inseparable part. The result re-presents `self` with the separable generators first;
    /// its first `k.num_steps() + separable_steps` steps form the separable closure of `k`.
    pub fn separable_closure_split(&self, k: &FieldTower) -> Result<SeparableSplit, FieldError> {
        if !k.is_prefix_of(self) {
            return Err(FieldError::NotAPrefix);
        }
        let depth = k.num_steps();
        let levels = (depth + 1)..=self.num_steps();
        let sep: Vec<(String, Elem)> = levels
            .clone()
            .filter(|l| self.step(*l).kind == StepKind::Separable)
            .map(|l| (self.step(l).name.clone(), self.gen(l)))
            .collect();
        let insep: Vec<(String, Elem)> = levels
            .filter(|l| self.step(*l).kind == StepKind::PurelyInseparable)
            .map(|l| (self.step(l).name.clone(), self.gen(l)))
            .collect();
        let mut all = sep.clone();
        all.extend(insep);
        let sub = self.generated_subfield(depth, &all)?;
        let steps = sub.tower.steps();
        let mut separable_steps = 0;
        for (i, s) in steps[depth..].iter().enumerate() {
            let expected_sep = i < steps[depth..].iter().take_while(|s| s.kind == StepKind::Separable).count();
            if expected_sep {
                separable_steps += 1;
            } else if s.kind == StepKind::Separable {
                return Err(FieldError::RebasingFailed(format!(
                    "step {} is separable after an inseparable step",
                    s.name
                )));
            }
        }
        let sep_degree: u128 = steps[depth..depth + separable_steps].iter().map(|s| s.degree() as u128).product();
        let insep_degree: u128 = steps[depth + separable_steps..].iter().map(|s| s.degree() as u128).product();
        let Degree::Finite(total) = self.degree_over(depth) else { unreachable!() };
        if sep_degree * insep_degree != total {
            return Err(FieldError::RebasingFailed(String::from("degrees do not multiply to the total")));
        }
        // A separable generator of self must land among the separable steps.
        for (i, (name, _)) in sep.iter().enumerate() {
            if sub.reprs[i].level() > depth + separable_steps {
                return Err(FieldError::RebasingFailed(format!("generator {name} is not separable over the base")));
            }
        }
        Ok(SeparableSplit { separable_steps, sep_degree, insep_degree, subfield: sub })
    }

    /// Applies the automorphism given by generator images for the levels above `depth`.
    pub fn apply_automorphism(&self, images: &[Elem], depth: usize, e: &Elem) -> Elem {
        match e {
            Elem::Alg { level, coeffs } if *level > depth => {
                let img = &images[*level - depth - 1];
                let mut acc = self.zero();
                for c in coeffs.iter().rev() {
                    acc = self.add(&self.mul(&acc, img), &self.apply_automorphism(images, depth, c));
                }
                acc
            }
            _ => e.clone(),
        }
    }

    /// Candidate roots in this tower of a polynomial, used to extend embeddings.
    fn candidate_roots(&self, f: &[Elem], level: usize) -> Vec<Elem> {
        let mut cands: Vec<Elem> = vec![self.gen(level)];
        cands.extend(self.step(level).conjugates.iter().cloned());
        let n = f.len() - 1;
        if n == 1 {
            cands.push(self.neg(&f[0]));
        }
        if n == 2 && self.characteristic() != 2 {
            let disc = self.sub(&self.mul(&f[1], &f[1]), &self.mul(&self.from_i64(4), &f[0]));
            if let Ok(Some(s)) = self.sqrt_in(&disc, self.num_steps()) {
                let half = self.inv(&self.from_i64(2)).expect("characteristic is not 2");
                cands.push(self.mul(&self.sub(&s, &f[1]), &half));
                cands.push(self.mul(&self.sub(&self.neg(&s), &f[1]), &half));
            }
        }
        if self.is_finite() {
            let Degree::Finite(d) = self.degree() else { unreachable!() };
            let mut g = self.gen(level);
            for _ in 0..d {
                g = self.frobenius(&g, 1);
                cands.push(g.clone());
            }
        }
        let mut roots: Vec<Elem> = Vec::new();
        for c in cands {
            if upoly::eval(self, f, &c).is_zero() && !roots.contains(&c) {
                roots.push(c);
            }
        }
        roots
    }

    /// All automorphisms fixing the first `depth` steps, as generator images for the levels
    /// above. Fails unless exactly `[self : K_depth]` of them are found, which certifies the
    /// extension is Galois.
    pub fn automorphisms(&self, depth: usize) -> Result<Vec<Vec<Elem>>, FieldError> {
        let mut autos: Vec<Vec<Elem>> = vec![Vec::new()];
        for l in (depth + 1)..=self.num_steps() {
            let mut next = Vec::new();
            for a in &autos {
                let f: Vec<Elem> = self.step(l).minpoly.iter().map(|c| self.apply_automorphism(a, depth, c)).collect();
                for r in self.candidate_roots(&f, l) {
                    let mut ext = a.clone();
                    ext.push(r);
                    next.push(ext);
                }
            }
            autos = next;
        }
        let Degree::Finite(deg) = self.degree_over(depth) else { unreachable!() };
        if autos.len() as u128 != deg {
            return Err(FieldError::ConjugatesUnavailable(format!(
                "found {} automorphisms for an extension of degree {deg}",
                autos.len()
            )));
        }
        Ok(autos)
    }
}

pub(crate) fn to_sparse(flat: &Flat, index: &mut BTreeMap<Vec<u32>, usize>) -> SparseVec {
    let mut v = SparseVec::new();
    for (k, c) in flat {
        let len = index.len();
        let i = *index.entry(k.clone()).or_insert(len);
        v.insert(i, c.clone());
    }
    v
}

/// A subfield of an ambient tower presented as its own tower over a common prefix.
#[derive(Clone, Debug)]
pub struct Subfield {
    pub ambient: FieldTower,
    pub tower: FieldTower,
    pub depth: usize,
    gens: Vec<usize>,
    index: BTreeMap<Vec<u32>, usize>,
    ech: Echelon,
    /// Basis over the prefix, as (ambient element, subfield element), in echelon input order.
    basis: Vec<(Elem, Elem)>,
    /// Representation of each requested generator in `tower`.
    pub reprs: Vec<Elem>,
    /// Ambient image of each new step's generator.
    images: Vec<Elem>,
}

impl Subfield {
    fn vector(&mut self, x: &Elem) -> SparseVec {
        to_sparse(&self.ambient.flatten(x, &self.gens, self.depth), &mut self.index)
    }

    /// Moves to a larger ambient tower that has the current one as a prefix.
    pub fn set_ambient(&mut self, ambient: FieldTower) {
        debug_assert!(self.ambient.is_prefix_of(&ambient));
        self.ambient = ambient;
    }

    /// Adjoins another ambient element; returns its representation in the grown subfield.
    pub fn extend(&mut self, name: &str, beta: &Elem) -> Result<Elem, FieldError> {
        if self.ambient.num_steps() < beta.level() {
            return Err(FieldError::UnknownGenerator(name.into()));
        }
        let mut gens = self.gens.clone();
        for l in self.ambient.relevant_levels(core::slice::from_ref(beta), self.depth, false) {
            if !gens.contains(&l) {
                gens.push(l);
            }
        }
        if gens.len() != self.gens.len() {
            gens.sort_unstable();
            self.regrid(gens);
        }
        let r = self.adjoin(name, beta)?;
        self.reprs.push(r.clone());
        Ok(r)
    }

    /// Rebuilds the echelon form over a larger set of flattening generators.
    fn regrid(&mut self, gens: Vec<usize>) {
        self.gens = gens;
        self.index.clear();
        self.ech = Echelon::new();
        let amb = self.ambient.clone();
        for (a, _) in self.basis.clone() {
            let v = self.vector(&a);
            self.ech.insert(&amb, &v).expect("basis is independent");
        }
    }

    fn adjoin(&mut self, name: &str, beta: &Elem) -> Result<Elem, FieldError> {
        let amb = self.ambient.clone();
        let start = self.basis.clone();
        let mut labels: Vec<(usize, Elem)> = start.iter().map(|(_, n)| (0, n.clone())).collect();
        let mut added: Vec<Elem> = start.iter().map(|(a, _)| a.clone()).collect();
        let mut power = beta.clone();
        let mut m = 1usize;
        loop {
            let v = self.vector(&power);
            if let Some(combo) = self.ech.express(&amb, &v) {
                let t = &self.tower;
                if m == 1 {
                    let mut repr = t.zero();
                    for (k, c) in combo {
                        repr = t.add(&repr, &t.mul(&c, &labels[k].1));
                    }
                    return Ok(repr);
                }
                let mut minpoly = vec![t.zero(); m + 1];
                for (k, c) in combo {
                    let (j, b) = &labels[k];
                    minpoly[*j] = t.sub(&minpoly[*j], &t.mul(&c, b));
                }
                minpoly[m] = t.one();
                let kind = if t.characteristic() > 0 && upoly::degree(&upoly::derivative(t, &minpoly)).is_none() {
                    let p = t.characteristic();
                    if is_power_of(m as u64, p) && minpoly[1..m].iter().all(|c| c.is_zero()) {
                        StepKind::PurelyInseparable
                    } else {
                        return Err(FieldError::RebasingFailed(format!(
                            "generator {name} is neither separable nor purely inseparable over the field so far"
                        )));
                    }
                } else {
                    StepKind::Separable
                };
                let new = t.push_step_unchecked(ExtensionStep {
                    name: name.into(),
                    minpoly,
                    kind,
                    irreducibility: Irreducibility::Derived,
                    conjugates: Vec::new(),
                });
                let level = new.num_steps();
                let g = new.gen(level);
                self.basis = labels
                    .iter()
                    .zip(added.iter())
                    .map(|((j, b), a)| (a.clone(), new.mul(b, &new.pow(&g, *j as u128))))
                    .collect();
                self.tower = new;
                self.images.push(beta.clone());
                return Ok(g);
            }
            for (a, n) in &start {
                let x = amb.mul(a, &power);
                let v = self.vector(&x);
                self.ech.insert(&amb, &v).expect("powers of a new generator are independent");
                labels.push((m, n.clone()));
                added.push(x);
            }
            power = amb.mul(&power, beta);
            m += 1;
        }
    }

    /// Degree over the common prefix.
    pub fn degree(&self) -> usize {
        self.basis.len()
    }

    /// Rewrites an ambient element in the subfield's tower, if it lies in the subfield.
    pub fn express(&mut self, x: &Elem) -> Option<Elem> {
        let amb = self.ambient.clone();
        let mut gens = self.gens.clone();
        for l in amb.relevant_levels(core::slice::from_ref(x), self.depth, false) {
            if !gens.contains(&l) {
                gens.push(l);
            }
        }
        if gens.len() != self.gens.len() {
            return self.express_slow(x, &gens);
        }
        let v = self.vector(x);
        let combo = self.ech.express(&amb, &v)?;
        let t = &self.tower;
        let mut out = t.zero();
        for (k, c) in combo {
            out = t.add(&out, &t.mul(&c, &self.basis[k].1));
        }
        Some(out)
    }

    fn express_slow(&self, x: &Elem, gens: &[usize]) -> Option<Elem> {
        let amb = &self.ambient;
        let mut gens = gens.to_vec();
        gens.sort_unstable();
        let mut index = BTreeMap::new();
        let mut ech = Echelon::new();
        for (a, _) in &self.basis {
            let v = to_sparse(&amb.flatten(a, &gens, self.depth), &mut index);
            ech.insert(amb, &v).ok()?;
        }
        let v = to_sparse(&amb.flatten(x, &gens, self.depth), &mut index);
        let combo = ech.express(amb, &v)?;
        let t = &self.tower;
        let mut out = t.zero();
        for (k, c) in combo {
            out = t.add(&out, &t.mul(&c, &self.basis[k].1));
        }
        Some(out)
    }

    /// Maps a subfield element back into the ambient tower.
    pub fn embed(&self, y: &Elem) -> Elem {
        let amb = &self.ambient;
        match y {
            Elem::Alg { level, coeffs } if *level > self.depth => {
                let img = &self.images[*level - self.depth - 1];
                let mut acc = amb.zero();
                for c in coeffs.iter().rev() {
                    acc = amb.add(&amb.mul(&acc, img), &self.embed(c));
                }
                acc
            }
            _ => y.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeparableSplit {
    pub separable_steps: usize,
    pub sep_degree: u128,
    pub insep_degree: u128,
    /// The ambient field re-presented with separable steps first.
    pub subfield: Subfield,
}

impl SeparableSplit {
    /// The separable closure of the base inside the ambient field.
    pub fn separable_part(&self) -> FieldTower {
        self.subfield.tower.truncate(self.subfield.depth + self.separable_steps)
    }
}

pub fn is_power_of(mut n: u64, p: u64) -> bool {
    if p < 2 || n < 2 {
        return false;
    }
    while n % p == 0 {
        n /= p;
    }
    n == 1
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A rational root of a monic cubic over ℚ, by the rational root theorem.
fn rational_root(t: &FieldTower, f: &[Elem]) -> Option<String> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    use num_traits::{One, Signed, Zero};
    let rats: Vec<num_rational::BigRational> = f
        .iter()
        .map(|c| match c {
            Elem::Base(r) => match r.as_constant(t.prime()) {
                Some(Scalar::Rat(q)) => q,
                _ => unreachable!("coefficients of a polynomial over the rationals"),
            },
            _ => unreachable!("no algebraic steps"),
        })
        .collect();
    let l = rats.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = rats.iter().map(|q| (q * &l).to_integer()).collect();
    let c0 = ints[0].abs();
    if c0.is_zero() {
        return Some(String::from("0"));
    }
    let divisors = |n: &BigInt| -> Vec<BigInt> {
        let mut out = Vec::new();
        let mut d = BigInt::one();
        while &d * &d <= *n {
            if (n % &d).is_zero() {
                out.push(d.clone());
                out.push(n / &d);
            }
            d += 1;
        }
        out
    };
    for num in divisors(&c0) {
        for den in divisors(&l.abs()) {
            for s in [1i32, -1] {
                let x = num_rational::BigRational::new(&num * s, den.clone());
                let mut acc = num_rational::BigRational::zero();
                for c in rats.iter().rev() {
                    acc = acc * &x + c;
                }
                if acc.is_zero() {
                    return Some(format!("{x}"));
                }
            }
        }
    }
    None
}

/// Pairwise coprime integers above 1 whose products give every input.
fn coprime_basis(inputs: impl Iterator<Item = BigInt>) -> Vec<BigInt> {
    let mut basis: Vec<BigInt> = Vec::new();
    let mut pending: Vec<BigInt> = inputs.filter(|n| !n.is_one() && !n.is_zero()).collect();
    while let Some(mut n) = pending.pop() {
        let mut i = 0;
        while i < basis.len() && !n.is_one() {
            let g = n.gcd(&basis[i]);
            if g.is_one() {
                i += 1;
                continue;
            }
            let b = basis.swap_remove(i);
            n /= &g;
            for x in [&b / &g, g] {
                if !x.is_one() {
                    pending.push(x);
                }
            }
        }
        if !n.is_one() {
            basis.push(n);
        }
    }
    basis.sort();
    basis.dedup();
    basis
}

/// Parity of each non-square basis element in `q`, plus the sign.
fn square_class(q: &BigRational, basis: &[BigInt]) -> Vec<bool> {
    let mut class = vec![q.is_negative()];
    for b in basis {
        let r = b.sqrt();
        if &(&r * &r) == b {
            class.push(false);
            continue;
        }
        let mut odd = false;
        for mut n in [q.numer().abs(), q.denom().clone()] {
            while !n.is_zero() && (&n % b).is_zero() {
                n /= b;
                odd = !odd;
            }
        }
        class.push(odd);
    }
    class
}

/// A subset of `rows` summing to `target` over F_2.
fn f2_solve(rows: &[Vec<bool>], target: &[bool]) -> Option<Vec<bool>> {
    let k = rows.len();
    let mut pivots: Vec<(usize, Vec<bool>, Vec<bool>)> = Vec::new();
    let reduce = |v: &mut Vec<bool>, used: &mut Vec<bool>, pivots: &[(usize, Vec<bool>, Vec<bool>)]| {
        for (col, row, tag) in pivots {
            if v[*col] {
                v.iter_mut().zip(row).for_each(|(a, b)| *a ^= b);
                used.iter_mut().zip(tag).for_each(|(a, b)| *a ^= b);
            }
        }
    };
    for (i, row) in rows.iter().enumerate() {
        let mut v = row.clone();
        let mut used = vec![false; k];
        used[i] = true;
        reduce(&mut v, &mut used, &pivots);
        if let Some(col) = v.iter().position(|b| *b) {
            pivots.push((col, v, used));
        }
    }
    let mut v = target.to_vec();
    let mut used = vec![false; k];
    reduce(&mut v, &mut used, &pivots);
    v.iter().all(|b| !b).then_some(used)
}
