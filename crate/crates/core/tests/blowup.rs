use algser_core::bivar::{substitute_poly, BivarPoly};
use algser_core::blowup::*;
use algser_core::field::{BaseField, Elem, FieldTower};
use algser_core::series::*;
use num_rational::BigRational;

fn field(p: u64, fams: &[&str]) -> Ctx {
    SeriesField::new(FieldTower::new(BaseField::new(p, fams, &[]).unwrap()))
}

fn poly(t: &FieldTower, terms: &[(u32, i64, Elem)]) -> BivarPoly {
    BivarPoly::from_terms(t, terms.iter().map(|(j, e, c)| (*j, exp_int(*e), c.clone())))
}

fn nodal(t: &FieldTower) -> BivarPoly {
    let m1 = t.from_i64(-1);
    poly(t, &[(2, 0, t.one()), (0, 2, m1.clone()), (0, 3, m1)])
}

#[test]
fn strict_transform_examples() {
    let ctx = field(0, &[]);
    let t = ctx.tower();
    let f0 = BlowupFrame::initial(&ctx, &nodal(&t)).unwrap();
    let x = poly(&t, &[(0, 1, t.one())]);
    let (b, g1, unit) = strict_transform(&t, &f0, &x, None).unwrap();
    assert_eq!((b, g1.format(&t), unit), (exp_int(1), String::from("1"), true));

    let f1 = transform_step(&ctx, &f0, &t.one()).unwrap();
    assert_eq!(f1.b, exp_int(2));
    assert_eq!(f1.g.format(&t), "y^2 + 2*y - x");
    assert!(detect_snc(&f1));
    assert_eq!(f1.residue_degree(), 1);

    let cusp = poly(&t, &[(2, 0, t.one()), (0, 1, t.from_i64(-1))]);
    assert!(!snc_of(&cusp));
    assert!(snc_of(&poly(&t, &[(1, 1, t.one())])));
}

#[test]
fn artin_schreier_branch_dies_in_first_chart() {
    for p in [2u64, 3, 5] {
        let ctx = field(p, &[]);
        let t = ctx.tower();
        let m1 = t.from_i64(-1);
        let pp = p as i64;
        let g = poly(&t, &[(p as u32, 0, t.one()), (1, pp - 1, m1.clone()), (0, pp - 1, m1)]);
        let f0 = BlowupFrame::initial(&ctx, &g).unwrap();
        let f1 = transform_step(&ctx, &f0, &t.zero()).unwrap();
        assert_eq!(f1.b, exp_int(pp - 1));
        assert!(is_unit(&f1.g));
        let err = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Separable, 5).unwrap_err();
        assert!(matches!(err, BlowupError::NoPowerSeriesBranch { .. }), "{err:?}");
    }
}

#[test]
fn nodal_cubic_matches_binomial_series() {
    let ctx = field(0, &[]);
    let t = ctx.tower();
    let g = nodal(&t);
    let (s, chain) = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Separable, 15).unwrap();
    let terms = s.terms_below(&exp_int(16)).unwrap();
    // x (1 + x)^{1/2} = Σ C(1/2, k) x^{k+1}
    let mut c = BigRational::from_integer(1.into());
    for k in 0..15i64 {
        let got = terms.iter().find(|(e, _)| *e == exp_int(k + 1)).map(|(_, c)| c.clone()).unwrap_or(t.zero());
        assert_eq!(got, t.from_scalar(algser_core::scalar::Scalar::Rat(c.clone())), "term {k}");
        c = c * (BigRational::new(1.into(), 2.into()) - BigRational::from_integer(k.into()))
            / BigRational::from_integer((k + 1).into());
    }
    assert!(chain.residue_degrees().iter().all(|d| *d == 1));
    assert!(!chain.frames[0].snc);
    assert!(chain.frames[1..].iter().all(|f| f.snc));
    assert_eq!(chain.stabilization_index(), Some(1));
    let (res, _) = substitute_poly(&ctx, &g, &s, 30).unwrap();
    assert!(res.is_empty());
}

#[test]
fn linear_polynomial_needs_no_frames() {
    let ctx = field(0, &[]);
    let t = ctx.tower();
    let g = poly(&t, &[(1, 0, t.one()), (0, 1, t.from_i64(-3)), (0, 2, t.from_i64(-1))]);
    let (s, chain) = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Separable, 10).unwrap();
    assert_eq!(chain.frames.len(), 1);
    assert_eq!(s.terms_below(&exp_int(10)).unwrap(), vec![(exp_int(1), t.from_i64(3)), (exp_int(2), t.one())]);
}

#[test]
fn radical_step_grows_residue_field() {
    let ctx = field(0, &[]);
    let t = ctx.tower();
    // (y - √2(x + x²))(y + √2(x + x²)) = y² − 2x² − 4x³ − 2x⁴
    let g = poly(&t, &[(2, 0, t.one()), (0, 2, t.from_i64(-2)), (0, 3, t.from_i64(-4)), (0, 4, t.from_i64(-2))]);
    let (s, chain) = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Separable, 3).unwrap();
    assert_eq!(chain.frames[1].residue_degree(), 2);
    let t = ctx.tower();
    let r2 = t.named("sqrt(2)").unwrap();
    assert_eq!(s.terms_below(&exp_int(5)).unwrap(), vec![(exp_int(1), r2.clone()), (exp_int(2), r2)]);
}

#[test]
fn fifth_root_chain() {
    let ctx = field(5, &["t"]);
    let t = ctx.tower();
    let mut g = poly(&t, &[(5, 0, t.one())]);
    for i in 1..=4u32 {
        g.add_term(&t, 0, exp_int(5 * i as i64), t.neg(&t.family_member("t", i).unwrap()));
    }
    let (s, chain) = expand_branch(&ctx, &g, &RootOracle::default(), Mode::Inseparable, 4).unwrap();
    assert_eq!(chain.step_degrees(), vec![5, 1, 1, 1]);
    assert_eq!(chain.lambdas(), vec![1, 0, 0, 0]);
    assert_eq!(chain.stabilization_index(), Some(1));
    let terms = s.terms_below(&exp_int(6)).unwrap();
    let t = ctx.tower();
    for i in 1..=4u64 {
        let root = ctx.indexed_root("t", i, 1).unwrap();
        assert_eq!(terms[i as usize - 1], (exp_int(i as i64), root));
    }
    assert_eq!(terms.len(), 4);
    let (res, _) = substitute_poly(&ctx, &g, &s, 12).unwrap();
    assert!(res.is_empty());
    let _ = t;
}

#[test]
fn double_inseparable_step() {
    let ctx = field(5, &["t"]);
    let t = ctx.tower();
    let f0 = BlowupFrame::initial(&ctx, &poly(&t, &[(25, 0, t.one()), (0, 25, t.neg(&t.family_member("t", 1).unwrap()))])).unwrap();
    let t1 = t.family_member("t", 1).unwrap();
    let f1 = transform_step_insep(&ctx, &f0, 2, &t1).unwrap();
    assert_eq!(f1.residue_degree(), 25);
    assert_eq!(f1.g.format(&ctx.tower()), "y");
    let again = transform_step_insep(&ctx, &f1, 1, &t1);
    assert!(matches!(again, Err(BlowupError::LambdaNotMinimal { .. })), "{again:?}");
}

#[test]
fn inseparable_element_is_rejected_by_separable_step() {
    let ctx = field(5, &["t"]);
    let a = ctx.indexed_root("t", 1, 1).unwrap();
    let t = ctx.tower();
    let f0 = BlowupFrame::initial(&ctx, &poly(&t, &[(1, 0, t.one())])).unwrap();
    assert!(matches!(transform_step(&ctx, &f0, &a), Err(BlowupError::NotSeparable(_))));
}

