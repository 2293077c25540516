use algser_core::bivar::{coefficient_prefix_tower, residue_below, BivarPoly};
use algser_core::field::{BaseField, FieldTower};
use algser_core::series::*;

fn field(p: u64, fams: &[&str]) -> Ctx {
    SeriesField::new(FieldTower::new(BaseField::new(p, fams, &[]).unwrap()))
}

fn accumulating(ctx: &Ctx, p: u64) -> Series {
    let one = ctx.tower().one();
    Series::template(
        ctx,
        Template { exponent: ExponentTemplate::OneMinusPPow { p }, coefficient: CoefficientTemplate::Const(one), start: 1 },
    )
}

#[test]
fn accumulating_prefix_and_relation() {
    for p in [2u64, 3, 5] {
        let ctx = field(p, &[]);
        let s = accumulating(&ctx, p);
        let t = ctx.tower();
        let xp1 = Series::monomial(&ctx, exp_int(p as i64 - 1), t.one());
        let rel = s.pow(p as u32).sub(&xp1.mul(&s)).sub(&xp1);
        let (terms, h) = rel.prefix(40).unwrap();
        assert!(terms.is_empty());
        assert!(h.unwrap() > exp_int(p as i64 - 1));
    }
    let ctx = field(2, &[]);
    let s = accumulating(&ctx, 2);
    let first: Vec<Exp> = s.truncate(Bound::TermCount(3)).unwrap().into_iter().map(|t| t.0).collect();
    assert_eq!(first, vec![exp_frac(1, 2), exp_frac(3, 4), exp_frac(7, 8)]);
    assert!(matches!(s.terms_below(&exp_int(1)), Err(SeriesError::InfiniteTruncation { .. })));
}

#[test]
fn geometric_and_closing_example() {
    let ctx = field(3, &[]);
    let t = ctx.tower();
    let geo = Series::template(
        &ctx,
        Template { exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_int(1) }, coefficient: CoefficientTemplate::Const(t.one()), start: 0 },
    );
    assert_eq!(geo.terms_below(&exp_int(4)).unwrap().len(), 4);
    let y = Series::template(
        &ctx,
        Template { exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_int(2) }, coefficient: CoefficientTemplate::Const(t.one()), start: 1 },
    );
    let one_minus = Series::explicit(&ctx, vec![(exp_int(0), t.one()), (exp_int(2), t.from_i64(-1))]);
    let prod = y.mul(&one_minus).truncate(Bound::ExponentBound(exp_int(80))).unwrap();
    assert_eq!(prod, vec![(exp_int(2), t.one())]);
    // x = x1 * y in the chart where y is a power series in x1
    let x = Series::monomial(&ctx, exp_int(1), t.one()).mul(&y);
    let x2 = x.mul(&x);
    let rel = y.pow(3).sub(&x2.mul(&y)).sub(&x2);
    assert!(rel.terms_below(&exp_int(61)).unwrap().is_empty());
    let u = Series::constant(&ctx, t.one()).add(&y);
    let z = u.unit_root(2).unwrap();
    let sq = z.mul(&z).sub(&u);
    assert!(sq.terms_below(&exp_int(61)).unwrap().is_empty());
    assert_eq!(u.unit_root(3).unwrap_err(), SeriesError::RamifiedRoot { m: 3, p: 3 });
}

#[test]
fn example_two_three() {
    let ctx = field(5, &["t"]);
    let s = Series::template(
        &ctx,
        Template {
            exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_int(1) },
            coefficient: CoefficientTemplate::IndexedRoot { family: "t".into(), root_e: 1 },
            start: 1,
        },
    );
    let _ = s.coefficients(5).unwrap();
    let t = ctx.tower();
    let mut g = BivarPoly::from_terms(&t, [(5, exp_int(0), t.one())]);
    for i in 1..=5i64 {
        g.add_term(&t, 0, exp_int(5 * i), t.neg(&t.family_member("t", i as u32).unwrap()));
    }
    assert!(residue_below(&ctx, &g, &s, &exp_int(26)).unwrap().is_empty());
    for (i, d) in [(1, 5), (2, 25), (3, 125)] {
        assert_eq!(coefficient_prefix_tower(&s, i).unwrap().degree(), d);
    }
}
