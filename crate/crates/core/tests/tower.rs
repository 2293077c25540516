use algser_core::field::{BaseField, Degree, Elem, FieldError, FieldTower, StepKind};

fn poly(t: &FieldTower, cs: &[Elem]) -> Vec<Elem> {
    let mut v = cs.to_vec();
    v.push(t.one());
    v
}

#[test]
fn sqrt_two_tower() {
    let q = FieldTower::new(BaseField::new(0, &[], &[]).unwrap());
    let k = q.adjoin("a", poly(&q, &[q.from_i64(-2), q.zero()]), StepKind::Separable, false, vec![]).unwrap();
    let a = k.gen(1);
    assert_eq!(k.mul(&a, &a), k.from_i64(2));
    let x = k.add(&a, &k.one());
    let y = k.inv(&x).unwrap();
    assert_eq!(k.mul(&x, &y), k.one());
    // 3 + 2a = (1 + a)^2
    let s = k.sqrt_in(&k.add(&k.from_i64(3), &k.mul(&k.from_i64(2), &a)), 1).unwrap().unwrap();
    assert_eq!(k.mul(&s, &s), k.add(&k.from_i64(3), &k.mul(&k.from_i64(2), &a)));
    // adjoining sqrt(8) over Q(sqrt 2) is reducible
    let r = k.adjoin("b", poly(&k, &[k.from_i64(-8), k.zero()]), StepKind::Separable, false, vec![]);
    assert!(matches!(r, Err(FieldError::ReducibleWitness(_))));
    let autos = k.automorphisms(0).unwrap();
    assert_eq!(autos.len(), 2);
}

#[test]
fn inseparable_root_and_pth_roots() {
    let b = FieldTower::new(BaseField::new(5, &["t"], &[]).unwrap());
    let t1 = b.family_member("t", 1).unwrap();
    let k = b.adjoin("s", vec![b.neg(&t1), b.zero(), b.zero(), b.zero(), b.zero(), b.one()], StepKind::PurelyInseparable, false, vec![]).unwrap();
    let s = k.gen(1);
    assert_eq!(k.pth_root(&t1), Some(s.clone()));
    assert_eq!(k.pth_root(&s), None);
    let bad = b.adjoin("s", vec![b.neg(&b.pow(&t1, 5)), b.zero(), b.zero(), b.zero(), b.zero(), b.one()], StepKind::PurelyInseparable, false, vec![]);
    assert!(matches!(bad, Err(FieldError::ReducibleWitness(_))));
    assert_eq!(k.degree(), Degree::Finite(5));
}

#[test]
fn rabin_chain_over_f2() {
    let f2 = FieldTower::new(BaseField::new(2, &[], &[]).unwrap());
    let o = f2.one();
    let z = f2.zero();
    let a = f2.adjoin("a", vec![o.clone(), o.clone(), o.clone()], StepKind::Separable, false, vec![]).unwrap();
    let b = a.adjoin("b", vec![o.clone(), o.clone(), z.clone(), o.clone()], StepKind::Separable, false, vec![]).unwrap();
    let c = b.adjoin("c", vec![o.clone(), z.clone(), o.clone(), z.clone(), z.clone(), o.clone()], StepKind::Separable, false, vec![]).unwrap();
    assert_eq!(c.degree(), Degree::Finite(30));
    // Y^2 + Y + 1 splits over F_4
    let r = a.adjoin("d", vec![o.clone(), o.clone(), o.clone()], StepKind::Separable, false, vec![]);
    assert!(matches!(r, Err(FieldError::ReducibleWitness(_))));
    assert_eq!(b.automorphisms(0).unwrap().len(), 6);
}

#[test]
fn separable_split_and_twist() {
    let b = FieldTower::new(BaseField::new(5, &["t"], &[]).unwrap());
    let t1 = b.family_member("t", 1).unwrap();
    let l = b
        .adjoin("a", vec![b.neg(&t1), b.zero(), b.one()], StepKind::Separable, false, vec![])
        .unwrap();
    let l = l
        .adjoin("c", vec![l.neg(&t1), l.zero(), l.zero(), l.zero(), l.zero(), l.one()], StepKind::PurelyInseparable, false, vec![])
        .unwrap();
    let split = l.separable_closure_split(&b).unwrap();
    assert_eq!((split.sep_degree, split.insep_degree), (2, 5));
    let tw = l.compositum_twist(&b, 1).unwrap();
    assert_eq!(tw.degree(), 2);
    let m = l.minimal_polynomial(&l.add(&l.gen(1), &l.gen(2)), 0);
    assert_eq!(m.len(), 11);
}

#[test]
fn square_roots_in_multiquadratic_fields() {
    let q = FieldTower::new(BaseField::new(0, &[], &[]).unwrap());
    let mut k = q.clone();
    for (i, n) in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37].into_iter().enumerate() {
        k = k.adjoin(&format!("r{i}"), poly(&k, &[k.from_i64(-n), k.zero()]), StepKind::Separable, false, vec![]).unwrap();
    }
    let top = k.num_steps();
    for (num, den, square) in [(30, 1, true), (-1, 1, false), (6, 5, true), (41, 1, false), (2 * 41 * 41, 9, true), (86, 1, false), (74, 1, true)] {
        let e = k.div(&k.from_i64(num), &k.from_i64(den)).unwrap();
        let root = k.sqrt_in(&e, top).unwrap();
        assert_eq!(root.is_some(), square, "{num}/{den}");
        if let Some(s) = root {
            assert_eq!(k.mul(&s, &s), e);
        }
    }
    // sqrt(6) over a tower already containing sqrt(2) and sqrt(3)
    let r = k.adjoin("bad", poly(&k, &[k.from_i64(-6), k.zero()]), StepKind::Separable, false, vec![]);
    assert!(matches!(r, Err(FieldError::ReducibleWitness(_))));
}
