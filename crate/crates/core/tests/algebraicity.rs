use algser_core::algebraicity::*;
use algser_core::bivar::BivarPoly;
use algser_core::field::{BaseField, FieldTower};
use algser_core::series::*;

fn field(p: u64, fams: &[&str]) -> Ctx {
    SeriesField::new(FieldTower::new(BaseField::new(p, fams, &[]).unwrap()))
}

fn affine(ctx: &Ctx, b: i64, coefficient: CoefficientTemplate, start: u64) -> Series {
    Series::template(ctx, Template { exponent: ExponentTemplate::Affine { a: exp_int(0), b: exp_int(b) }, coefficient, start })
}

#[test]
fn geometric_series_reconstructs_rational_relation() {
    let ctx = field(0, &[]);
    let t = ctx.tower();
    let s = affine(&ctx, 1, CoefficientTemplate::Const(t.one()), 1);
    let g = ann_poly_reconstruct(&s, 12, 1, 1).unwrap().unwrap();
    assert_eq!(g.format(&t), "y - x*y - x");
    match check_full(&s, Budgets::default()) {
        Verdict::AlgebraicCertified { certificate: Certificate::Polynomial(_), r, degree, .. } => {
            assert_eq!((r, degree), (0, 1));
        }
        v => panic!("{v:?}"),
    }
}

#[test]
fn artin_schreier_prefix_reconstruction() {
    let ctx = field(2, &[]);
    let t = ctx.tower();
    let s = Series::template(
        &ctx,
        Template { exponent: ExponentTemplate::OneMinusPPow { p: 2 }, coefficient: CoefficientTemplate::Const(t.one()), start: 1 },
    );
    let g = ann_poly_reconstruct(&s, 20, 2, 2).unwrap().unwrap();
    let expect = BivarPoly::from_terms(
        &t,
        [(2, exp_int(0), t.one()), (1, exp_int(1), t.one()), (0, exp_int(1), t.one())],
    );
    assert_eq!(g, expect);
}

#[test]
fn example_with_fifth_roots_is_certified_at_first_twist() {
    let ctx = field(5, &["t"]);
    let s = affine(&ctx, 1, CoefficientTemplate::IndexedRoot { family: "t".into(), root_e: 1 }, 1);
    let v = check_full(&s, Budgets::default());
    match &v {
        Verdict::AlgebraicCertified { certificate: Certificate::Twist { r: 1, .. }, r: 1, degree: 1, conditional: false, .. } => {}
        v => panic!("{v:?}"),
    }
    let d = inseparable_descent(&s, 4, 3).unwrap();
    assert_eq!(d.lambdas, vec![1, 0, 0, 0]);
    assert_eq!((d.i0, d.n), (1, Some(1)));
}

#[test]
fn double_root_descent() {
    let ctx = field(5, &["t"]);
    let t = ctx.tower();
    let a = ctx.indexed_root("t", 1, 2).unwrap();
    let s = Series::explicit(&ctx, vec![(exp_int(1), a)]);
    let d = inseparable_descent(&s, 4, 2).unwrap();
    assert_eq!(d.lambdas, vec![2]);
    assert_eq!(d.n, Some(2));
    let _ = t;
}

#[test]
fn prime_radicals_are_not_algebraic() {
    let ctx = field(0, &[]);
    let s = affine(&ctx, 1, CoefficientTemplate::PrimeRadical, 1);
    match check_full(&s, Budgets { i_max: 4, r_max: 2, trunc: 6 }) {
        Verdict::NotAlgebraicCertified { tables, .. } => assert_eq!(tables[0].degrees, vec![2, 4, 8, 16]),
        v => panic!("{v:?}"),
    }
    let one = check_full(&s, Budgets { i_max: 1, r_max: 2, trunc: 6 });
    assert!(matches!(one, Verdict::Inconclusive { .. }), "{one:?}");
}

#[test]
fn finite_galois_series_gets_conjugate_product() {
    let ctx = field(0, &[]);
    let r2 = ctx.radical(2).unwrap();
    let s = Series::explicit(&ctx, vec![(exp_int(1), r2)]);
    let g = galois_annihilator(&s).unwrap();
    assert_eq!(g.format(&ctx.tower()), "y^2 - 2*x^2");
}
