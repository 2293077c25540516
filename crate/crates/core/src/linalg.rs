//! Incremental row echelon form over a field tower, with sparse vectors.
//!
//! Every inserted vector is tracked, so a dependency can be reported as an explicit
//! linear combination of earlier inputs.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::field::{Elem, FieldTower};

pub type SparseVec = BTreeMap<usize, Elem>;

fn axpy(t: &FieldTower, y: &mut SparseVec, a: &Elem, x: &SparseVec) {
    for (k, v) in x {
        let d = t.mul(a, v);
        match y.get_mut(k) {
            Some(old) => {
                let s = t.add(old, &d);
                if s.is_zero() {
                    y.remove(k);
                } else {
                    *old = s;
                }
            }
            None => {
                if !d.is_zero() {
                    y.insert(*k, d);
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Echelon {
    /// pivot -> (row with unit pivot, combination of inputs producing the row)
    rows: BTreeMap<usize, (SparseVec, SparseVec)>,
    inputs: usize,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Returns `(residual, combo)` with `v = residual + Σ combo[j] · input_j`.
    pub fn reduce(&self, t: &FieldTower, v: &SparseVec) -> (SparseVec, SparseVec) {
        let mut r = v.clone();
        let mut combo = SparseVec::new();
        for (pivot, (row, rc)) in &self.rows {
            if let Some(c) = r.get(pivot).cloned() {
                let neg = t.neg(&c);
                axpy(t, &mut r, &neg, row);
                axpy(t, &mut combo, &c, rc);
            }
        }
        (r, combo)
    }

    /// Inserts `v` as input number `inputs()`. On dependency returns the combination of
    /// earlier inputs equal to `v` and leaves the echelon form unchanged (the input is
    /// still counted, so indices stay aligned with the caller's numbering).
    pub fn insert(&mut self, t: &FieldTower, v: &SparseVec) -> Result<(), SparseVec> {
        let idx = self.inputs;
        self.inputs += 1;
        let (mut r, combo) = self.reduce(t, v);
        let Some((&pivot, lead)) = r.iter().next() else {
            return Err(combo);
        };
        let inv = t.inv(lead).expect("nonzero pivot");
        let mut rc = SparseVec::new();
        for (k, c) in &combo {
            rc.insert(*k, t.neg(c));
        }
        rc.insert(idx, t.one());
        let scale = |x: &mut SparseVec| {
            for val in x.values_mut() {
                *val = t.mul(val, &inv);
            }
        };
        scale(&mut r);
        scale(&mut rc);
        self.rows.insert(pivot, (r, rc));
        Ok(())
    }

    /// Membership test with a representation in the inputs.
    pub fn express(&self, t: &FieldTower, v: &SparseVec) -> Option<SparseVec> {
        let (r, combo) = self.reduce(t, v);
        if r.is_empty() {
            Some(combo)
        } else {
            None
        }
    }
}

/// A nonzero kernel vector of the columns `cols` (first dependency in order), if any.
pub fn first_dependency(t: &FieldTower, cols: &[SparseVec]) -> Option<Vec<Elem>> {
    let mut e = Echelon::new();
    for (j, c) in cols.iter().enumerate() {
        if let Err(combo) = e.insert(t, c) {
            let mut out = alloc::vec![t.zero(); cols.len()];
            for (k, v) in combo {
                out[k] = t.neg(&v);
            }
            out[j] = t.one();
            return Some(out);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::BaseField;

    #[test]
    fn dependency_is_reported_as_combination() {
        let t = FieldTower::new(BaseField::new(0, &[], &[]).unwrap());
        let v = |xs: &[i64]| -> SparseVec {
            xs.iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, x)| (i, t.from_i64(*x))).collect()
        };
        let mut e = Echelon::new();
        assert!(e.insert(&t, &v(&[1, 2, 0])).is_ok());
        assert!(e.insert(&t, &v(&[0, 1, 1])).is_ok());
        let combo = e.insert(&t, &v(&[2, 7, 3])).unwrap_err();
        assert_eq!(combo.get(&0), Some(&t.from_i64(2)));
        assert_eq!(combo.get(&1), Some(&t.from_i64(3)));
        assert_eq!(e.rank(), 2);
    }
}
