//! Randomized property suites shared by the acceptance run.
//!
//! Every suite draws its cases from a deterministic RNG so failures reproduce.

#![allow(dead_code)]

use algser_core::bivar::BivarPoly;
use algser_core::field::{BaseField, Degree, Elem, FieldError, FieldTower, StepKind};
use algser_core::series::*;
use algser_core::valuation::{build_chain_from_series, value_of, ValuationChain, ValuationError};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 128;

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn run<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn monic(t: &FieldTower, low: &[i64]) -> Vec<Elem> {
    let mut v: Vec<Elem> = low.iter().map(|c| t.from_i64(*c)).collect();
    v.push(t.one());
    v
}

/// ℚ(∛2, √3), degree 6.
pub fn rational_tower() -> FieldTower {
    let q = FieldTower::new(BaseField::new(0, &[], &[]).unwrap());
    let a = q.adjoin("a", monic(&q, &[-2, 0, 0]), StepKind::Separable, false, vec![]).unwrap();
    a.adjoin("b", monic(&a, &[-3, 0]), StepKind::Separable, false, vec![]).unwrap()
}

/// 𝔽_5(t_1, t_2, …)(t_1^{1/5})(√t_1), degree 10 over the base.
pub fn function_tower() -> FieldTower {
    let b = FieldTower::new(BaseField::new(5, &["t"], &[]).unwrap());
    let t1 = b.family_member("t", 1).unwrap();
    let mut root = vec![b.neg(&t1)];
    root.extend((0..4).map(|_| b.zero()));
    root.push(b.one());
    let s = b.adjoin("s", root, StepKind::PurelyInseparable, false, vec![]).unwrap();
    s.adjoin("w", vec![s.neg(&t1), s.zero(), s.one()], StepKind::Separable, false, vec![]).unwrap()
}

/// 𝔽_{5^6} as 𝔽_5(√2)(β) with β³ + β + 1 = 0.
pub fn finite_tower() -> FieldTower {
    let f = FieldTower::new(BaseField::new(5, &[], &[]).unwrap());
    let a = f.adjoin("a", monic(&f, &[-2, 0]), StepKind::Separable, false, vec![]).unwrap();
    a.adjoin("b", monic(&a, &[1, 1, 0]), StepKind::Separable, false, vec![]).unwrap()
}

/// A base-field scalar built from three small integers. In characteristic zero it is `a/b`,
/// with a family present it is `(a + b·t1)/(1 + c·t1)`, otherwise `a`.
fn scalar(t: &FieldTower, (a, b, c): (i64, i64, i64), with_den: bool) -> Elem {
    if t.characteristic() == 0 {
        return t.div(&t.from_i64(a), &t.from_i64(b.abs() + 1)).unwrap();
    }
    match t.family_member("t", 1) {
        Some(t1) => {
            let num = t.add(&t.from_i64(a), &t.mul(&t.from_i64(b), &t1));
            if !with_den {
                return num;
            }
            let den = t.add(&t.one(), &t.mul(&t.from_i64(c.rem_euclid(3)), &t1));
            t.div(&num, &den).unwrap()
        }
        None => t.from_i64(a),
    }
}

/// A random element written in the monomial basis of every step of `t`. Only the constant
/// coordinate carries a denominator over 𝔽_5(t); ten unrelated denominators make every
/// product pay for large gcds without testing anything new.
pub fn element(t: &FieldTower, coords: &[(i64, i64, i64)]) -> Elem {
    let gens: Vec<usize> = (1..=t.num_steps()).collect();
    let mut e = t.zero();
    for (i, (exps, c)) in t.monomial_basis(&gens).iter().zip(coords).enumerate() {
        e = t.add(&e, &t.mul(&scalar(t, *c, i == 0), &t.monomial(&gens, exps)));
    }
    e
}

fn coords() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((-4i64..=4, -4i64..=4, 0i64..3), 10)
}

fn towers() -> Vec<(&'static str, FieldTower)> {
    vec![("Q(2^(1/3), sqrt 3)", rational_tower()), ("F5(t)(t1^(1/5), sqrt t1)", function_tower()), ("F_(5^6)", finite_tower())]
}

pub fn field_axioms() -> Result<(), String> {
    for (name, t) in towers() {
        run(&format!("field axioms over {name}"), (coords(), coords(), coords()), |(x, y, z)| {
            let (a, b, c) = (element(&t, &x), element(&t, &y), element(&t, &z));
            prop_assert_eq!(t.add(&t.add(&a, &b), &c), t.add(&a, &t.add(&b, &c)));
            prop_assert_eq!(t.mul(&t.mul(&a, &b), &c), t.mul(&a, &t.mul(&b, &c)));
            prop_assert_eq!(t.add(&a, &b), t.add(&b, &a));
            prop_assert_eq!(t.mul(&a, &b), t.mul(&b, &a));
            prop_assert_eq!(t.mul(&a, &t.add(&b, &c)), t.add(&t.mul(&a, &b), &t.mul(&a, &c)));
            prop_assert!(t.add(&a, &t.neg(&a)).is_zero());
            prop_assert_eq!(t.mul(&a, &t.one()), a.clone());
            if a.is_zero() {
                prop_assert!(matches!(t.inv(&a), Err(FieldError::DivisionByZero)));
            } else {
                prop_assert_eq!(t.mul(&a, &t.inv(&a).unwrap()), t.one());
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Random towers over 𝔽_3 built from random monic polynomials of degree 2 or 3 (reducible
/// candidates are rejected by the tower), compared against the size of the monomial basis.
pub fn degree_multiplicativity() -> Result<(), String> {
    let candidate = prop::collection::vec((2usize..=3, prop::collection::vec(0i64..3, 3)), 1..=3);
    run("degree multiplicativity", candidate, |steps| {
        let mut t = FieldTower::new(BaseField::new(3, &[], &[]).unwrap());
        for (i, (deg, low)) in steps.iter().enumerate() {
            let mut mp: Vec<Elem> = low[..*deg].iter().enumerate().map(|(k, c)| {
                let below = if t.num_steps() > 0 && k == 0 { t.gen(t.num_steps()) } else { t.zero() };
                t.add(&t.from_i64(*c), &below)
            }).collect();
            mp.push(t.one());
            if let Ok(next) = t.adjoin(&format!("g{i}"), mp, StepKind::Separable, false, vec![]) {
                t = next;
            }
        }
        let Degree::Finite(total) = t.degree() else { return Err(TestCaseError::fail("infinite degree")) };
        let gens: Vec<usize> = (1..=t.num_steps()).collect();
        prop_assert_eq!(t.monomial_basis(&gens).len() as u128, total);
        for d in 0..=t.num_steps() {
            let (Degree::Finite(low), Degree::Finite(high)) = (t.truncate(d).degree(), t.degree_over(d)) else {
                return Err(TestCaseError::fail("infinite degree"));
            };
            prop_assert_eq!(low * high, total);
        }
        if let Some((p, d)) = t.finite_order() {
            prop_assert_eq!(p.pow(d) as u128, 3u128.pow(total as u32));
        }
        Ok(())
    })
}

pub fn frobenius_and_pth_roots() -> Result<(), String> {
    for (name, t) in towers().into_iter().skip(1) {
        run(&format!("Frobenius over {name}"), (coords(), coords(), 1u32..=2), |(x, y, r)| {
            let (a, b) = (element(&t, &x), element(&t, &y));
            prop_assert_eq!(t.frobenius(&t.add(&a, &b), r), t.add(&t.frobenius(&a, r), &t.frobenius(&b, r)));
            prop_assert_eq!(t.frobenius(&t.mul(&a, &b), r), t.mul(&t.frobenius(&a, r), &t.frobenius(&b, r)));
            prop_assert_eq!(t.pth_root(&t.frobenius(&a, 1)), Some(a.clone()));
            if let Some(z) = t.pth_root(&b) {
                prop_assert_eq!(t.frobenius(&z, 1), b.clone());
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn random_series(ctx: &Ctx, terms: &[(i64, i64, i64)], lazy: Option<(i64, i64)>) -> Series {
    let t = ctx.tower();
    let mut explicit = Vec::new();
    for (num, den, c) in terms {
        explicit.push((exp_frac(*num, den.rem_euclid(3) + 1), scalar(&t, (*c, *num, *den), true)));
    }
    let mut s = Series::explicit(ctx, explicit);
    if let Some((c, q)) = lazy {
        let geo = Series::template(
            ctx,
            Template {
                exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_frac(1, q) },
                coefficient: CoefficientTemplate::Const(t.one()),
                start: 1,
            },
        );
        s = s.add(&geo.scale(&t.from_i64(c)));
    }
    s
}

fn series_input() -> impl Strategy<Value = (Vec<(i64, i64, i64)>, Option<(i64, i64)>)> {
    (prop::collection::vec((0i64..8, 0i64..3, -3i64..=3), 0..5), prop::option::of((-2i64..=2, 1i64..=3)))
}

pub fn series_ring_axioms() -> Result<(), String> {
    let bound = exp_int(4);
    for (p, fams) in [(0u64, &[][..]), (5, &["t"][..])] {
        let ctx = SeriesField::new(FieldTower::new(BaseField::new(p, fams, &[]).unwrap()));
        run(&format!("series ring axioms in characteristic {p}"), (series_input(), series_input(), series_input()), |(x, y, z)| {
            let (a, b, c) = (random_series(&ctx, &x.0, x.1), random_series(&ctx, &y.0, y.1), random_series(&ctx, &z.0, z.1));
            let below = |s: Series| s.terms_below(&bound).map_err(|e| TestCaseError::fail(format!("{e:?}")));
            prop_assert_eq!(below(a.add(&b).add(&c))?, below(a.add(&b.add(&c)))?);
            prop_assert_eq!(below(a.mul(&b).mul(&c))?, below(a.mul(&b.mul(&c)))?);
            prop_assert_eq!(below(a.mul(&b))?, below(b.mul(&a))?);
            prop_assert_eq!(below(a.mul(&b.add(&c)))?, below(a.mul(&b).add(&a.mul(&c)))?);
            prop_assert!(below(a.sub(&a))?.is_empty());
            Ok(())
        })?;
    }
    Ok(())
}

/// The valuation attached to the arc v = Σ t_i^{1/5} u^i over 𝔽_5(t).
pub fn fifth_root_chain() -> ValuationChain {
    let ctx = SeriesField::new(FieldTower::new(BaseField::new(5, &["t"], &[]).unwrap()));
    let sigma = Series::template(
        &ctx,
        Template {
            exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_int(1) },
            coefficient: CoefficientTemplate::IndexedRoot { family: "t".into(), root_e: 1 },
            start: 1,
        },
    );
    build_chain_from_series(&sigma, 6).unwrap()
}

type MonomialSpec = (u32, i64, (i64, i64, i64));

fn binomial(t: &FieldTower, terms: &[MonomialSpec]) -> BivarPoly {
    let mut f = BivarPoly::zero();
    for (j, e, c) in terms {
        let mut c = scalar(t, *c, true);
        if c.is_zero() {
            c = t.one();
        }
        f.add_term(t, *j, exp_int(*e), c);
    }
    f
}

fn binomials() -> impl Strategy<Value = Vec<MonomialSpec>> {
    prop::collection::vec((0u32..=6, 0i64..=6, (-4i64..=4, -2i64..=2, 0i64..3)), 1..=2)
}

pub fn value_properties() -> Result<(), String> {
    let chain = fifth_root_chain();
    let t = chain.ctx.tower();
    let value = |f: &BivarPoly| match value_of(&chain, f) {
        Ok(v) => Ok(Some(v)),
        Err(ValuationError::ValueExceedsBudget { .. }) => Ok(None),
        Err(e) => Err(TestCaseError::fail(format!("{e:?}"))),
    };
    run("value multiplicativity", (binomials(), binomials()), |(x, y)| {
        let (f, g) = (binomial(&t, &x), binomial(&t, &y));
        prop_assume!(!f.is_zero() && !g.is_zero());
        let (Some(vf), Some(vg)) = (value(&f)?, value(&g)?) else { return Ok(()) };
        if let Some(vfg) = value(&f.mul(&t, &g))? {
            prop_assert_eq!(vfg, vf + vg);
        }
        Ok(())
    })?;
    run("ultrametric inequality", (binomials(), binomials()), |(x, y)| {
        let (f, g) = (binomial(&t, &x), binomial(&t, &y));
        let sum = f.add(&t, &g);
        prop_assume!(!f.is_zero() && !g.is_zero() && !sum.is_zero());
        let (Some(vf), Some(vg)) = (value(&f)?, value(&g)?) else { return Ok(()) };
        let Some(vs) = value(&sum)? else { return Ok(()) };
        prop_assert!(vs >= vf.min(vg));
        if vf != vg {
            prop_assert_eq!(vs, vf.min(vg));
        }
        Ok(())
    })
}

/// Every suite, in order.
pub fn all() -> [(&'static str, fn() -> Result<(), String>); 5] {
    [
        ("field axioms", field_axioms),
        ("degree multiplicativity", degree_multiplicativity),
        ("Frobenius homomorphism and p-th root inversion", frobenius_and_pth_roots),
        ("series ring axioms on truncations", series_ring_axioms),
        ("value multiplicativity and ultrametric inequality", value_properties),
    ]
}
