//! Randomized invariants not already exercised by the acceptance property suites.

mod props;

use std::collections::BTreeMap;

use algser_core::bivar::{substitute_poly, BivarPoly};
use algser_core::blowup::{expand_branch, Mode, RootOracle};
use algser_core::field::{BaseField, Degree, FieldTower};
use algser_core::multivar::{slice, MultiSeries};
use algser_core::series::*;
use algser_core::upoly;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

const SEED: u64 = 0x5eed;

fn config() -> Config {
    Config { cases: props::CASES, failure_persistence: None, rng_seed: RngSeed::Fixed(SEED), ..Config::default() }
}

fn field(p: u64) -> Ctx {
    SeriesField::new(FieldTower::new(BaseField::new(p, &[], &[]).unwrap()))
}

fn coords() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((-4i64..=4, -4i64..=4, 0i64..3), 10)
}

/// Explicit series with exponents `n/d`, `n ≥ 1`, and small integer coefficients.
fn explicit(ctx: &Ctx, terms: &[(i64, i64, i64)]) -> Series {
    let t = ctx.tower();
    Series::explicit(ctx, terms.iter().map(|(n, d, c)| (exp_frac(*n, *d), t.from_i64(*c))).collect())
}

fn explicit_terms() -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((1i64..10, 1i64..=3, -3i64..=3), 0..6)
}

fn below(s: &Series, bound: i64) -> Result<Vec<Term>, TestCaseError> {
    s.terms_below(&exp_int(bound)).map_err(|e| TestCaseError::fail(format!("{e:?}")))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn minimal_polynomial_vanishes_and_degree_divides(x in coords(), finite in any::<bool>(), depth in 0usize..=2) {
        let t = if finite { props::finite_tower() } else { props::rational_tower() };
        let e = props::element(&t, &x);
        let mp = t.minimal_polynomial(&e, depth);
        prop_assert!(t.is_one(mp.last().unwrap()));
        prop_assert!(upoly::eval(&t, &mp, &e).is_zero());
        let Degree::Finite(over) = t.degree_over(depth) else { panic!("finite tower") };
        prop_assert_eq!(over % (mp.len() as u128 - 1), 0);
    }

    #[test]
    fn unit_roots_raise_back(terms in explicit_terms(), m in 2u64..=4, p in prop::sample::select(vec![0u64, 5])) {
        let ctx = field(p);
        let t = ctx.tower();
        let u = Series::constant(&ctx, t.one()).add(&explicit(&ctx, &terms));
        let z = u.unit_root(m).unwrap();
        prop_assert!(below(&z.pow(m as u32).sub(&u), 4)?.is_empty());
    }

    #[test]
    fn template_exponents_increase(
        a in -3i64..=3, b in (1i64..=4, 1i64..=3), p in prop::sample::select(vec![2u64, 3, 5]),
        accumulating in any::<bool>(), c in 1i64..5,
    ) {
        let ctx = field(p);
        let t = ctx.tower();
        let exponent = if accumulating {
            ExponentTemplate::OneMinusPPow { p }
        } else {
            ExponentTemplate::Affine { a: exp_int(a), b: exp_frac(b.0, b.1) }
        };
        let coefficient = CoefficientTemplate::FrobeniusFamily { base: t.from_i64(1 + c % (p as i64 - 1)), e: 1 };
        let s = Series::template(&ctx, Template { exponent, coefficient, start: 1 });
        let (terms, _) = s.prefix(12).unwrap();
        prop_assert_eq!(terms.len(), 12);
        prop_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(terms.iter().all(|(_, c)| !c.is_zero()));
    }

    /// Products below a bound depend only on the factors below that bound.
    #[test]
    fn truncated_products_use_only_prefixes(x in explicit_terms(), y in explicit_terms(), shift in 0i64..3) {
        let ctx = field(0);
        let (a, b) = (explicit(&ctx, &x).shift(&exp_int(-shift)), explicit(&ctx, &y));
        let bound = 3;
        let tail = |s: &Series| Series::explicit(&ctx, below(s, 2 * bound + shift).unwrap());
        prop_assert_eq!(below(&a.mul(&b), bound)?, below(&tail(&a).mul(&tail(&b)), bound)?);
    }

    #[test]
    fn slices_reassemble(terms in prop::collection::vec(((0u64..6, 0u64..6), -4i64..=4), 0..12)) {
        let ctx = field(3);
        let t = ctx.tower();
        let terms = terms.into_iter().filter(|(_, c)| c.rem_euclid(3) != 0).map(|((i, j), c)| (vec![i, j], t.from_i64(c)));
        let mut dedup = BTreeMap::new();
        dedup.extend(terms);
        let sigma = MultiSeries::explicit(&ctx, 2, dedup.into_iter().collect()).unwrap();
        let degree = 8;
        let whole = sigma.terms_below(degree + 1).unwrap();
        let mut again = BTreeMap::new();
        for m in 0..=degree {
            for (mut i, c) in slice(&sigma, m).terms_below(degree + 1 - m).unwrap() {
                i.push(m);
                again.insert(i, c);
            }
        }
        prop_assert_eq!(whole, again);
    }

    /// Expanded branches annihilate their polynomial; residue fields only grow along the
    /// chain, and SNC never turns back off.
    #[test]
    fn expanded_branches_are_roots(
        lead in 0i64..5, rest in prop::collection::vec(prop::option::weighted(0.5, -2i64..=2), 8),
        p in prop::sample::select(vec![0u64, 5]),
    ) {
        let ctx = field(p);
        let t = ctx.tower();
        let mut g = BivarPoly::zero();
        g.add_term(&t, 1, exp_int(0), t.from_i64(lead));
        let monomials = [(0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (2, 0), (2, 1), (3, 0)];
        for ((j, a), c) in monomials.into_iter().zip(rest) {
            if let Some(c) = c {
                g.add_term(&t, j, exp_int(a), t.from_i64(c));
            }
        }
        prop_assume!(g.y_degree().is_some_and(|d| d >= 1));
        // y^2 | g makes y = 0 a multiple component, which no chain of transforms separates.
        prop_assume!(!g.y_coefficient(0).is_empty() || !g.y_coefficient(1).is_empty());
        let Ok((s, chain)) = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Separable, 3) else {
            return Ok(());
        };
        let (residue, _) = substitute_poly(&ctx, &g, &s, 16).map_err(|e| TestCaseError::fail(format!("{e:?} for {}", g.format(&t))))?;
        prop_assert!(residue.is_empty(), "{}", g.format(&t));
        let degrees = chain.residue_degrees();
        prop_assert!(degrees.windows(2).all(|w| w[1] % w[0] == 0));
        let snc: Vec<bool> = chain.frames.iter().map(|f| f.snc).collect();
        prop_assert!(snc.windows(2).all(|w| !w[0] || w[1]), "{snc:?}");
    }
}
