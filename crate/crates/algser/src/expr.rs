//! Element and polynomial expressions: integer literals, generator names (`t3`, `a`),
//! `+ - * / ^`, parentheses, `sqrt(n)`, and roots written as `^(1/n)`.

use algser_core::bivar::BivarPoly;
use algser_core::blowup::pth_root_in;
use algser_core::field::{Elem, GeneratorName};
use algser_core::series::{exp_int, exp_to_i64, Ctx, Exp};
use num_traits::ToPrimitive;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ast {
    Int(i64),
    Name(String),
    Neg(Box<Ast>),
    Bin(Op, Box<Ast>, Box<Ast>),
    Call(String, Vec<Ast>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{msg} (at offset {pos} in `{src}`)")]
pub struct ExprError {
    pub src: String,
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { src: self.src.into(), pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                Op::Add
            } else if self.eat(b'-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Ast, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                Op::Mul
            } else if self.eat(b'/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Ast, ExprError> {
        if self.eat(b'-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Ast::Bin(Op::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                match self.src[start..self.pos].parse() {
                    Ok(n) => Ok(Ast::Int(n)),
                    Err(_) => self.err("integer literal out of range"),
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = self.src[start..self.pos].to_string();
                if self.eat(b'(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(b',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(b')') {
                        return self.err("expected `)` after arguments");
                    }
                    return Ok(Ast::Call(name, args));
                }
                Ok(Ast::Name(name))
            }
            Some(c) => self.err(format!("unexpected character `{}`", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }
}

pub fn parse(src: &str) -> Result<Ast, ExprError> {
    let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

fn fail<T>(src: &str, msg: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError { src: src.into(), pos: 0, msg: msg.into() })
}

/// Exact rational value of a constant exponent expression.
fn rational(src: &str, a: &Ast) -> Result<Exp, ExprError> {
    match a {
        Ast::Int(n) => Ok(exp_int(*n)),
        Ast::Neg(x) => Ok(-rational(src, x)?),
        Ast::Bin(op, l, r) => {
            let (l, r) = (rational(src, l)?, rational(src, r)?);
            match op {
                Op::Add => Ok(l + r),
                Op::Sub => Ok(l - r),
                Op::Mul => Ok(l * r),
                Op::Div if r == exp_int(0) => fail(src, "division by zero in exponent"),
                Op::Div => Ok(l / r),
                Op::Pow => match exp_to_i64(&r) {
                    Some(k) if k >= 0 => Ok(num_traits::pow::Pow::pow(l, k as u32)),
                    _ => fail(src, "exponent of an exponent must be a natural number"),
                },
            }
        }
        _ => fail(src, "exponent must be a rational constant"),
    }
}

fn family_member(ctx: &Ctx, name: &str) -> Option<(String, u64)> {
    let t = ctx.tower();
    t.base().names().iter().find_map(|g| match g {
        GeneratorName::Family(f) => {
            let rest = name.strip_prefix(f.as_str())?;
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((f.clone(), rest.parse().ok()?))
        }
        GeneratorName::Single(_) => None,
    })
}

/// `base^(1/n)`: `p^e`-th roots in characteristic `p`, square roots of integers in characteristic 0.
fn root(ctx: &Ctx, src: &str, base: &Ast, n: i64) -> Result<Elem, ExprError> {
    let p = ctx.tower().characteristic() as i64;
    if p > 0 {
        let mut e = 0u32;
        let mut m = n;
        while m > 1 && m % p == 0 {
            m /= p;
            e += 1;
        }
        if m != 1 {
            return fail(src, format!("only p^e-th roots are supported in characteristic {p}, got 1/{n}"));
        }
        if let Ast::Name(name) = base {
            if let Some((fam, i)) = family_member(ctx, name) {
                return ctx.indexed_root(&fam, i, e).or_else(|err| fail(src, err.to_string()));
            }
        }
        let mut c = elem(ctx, src, base)?;
        for _ in 0..e {
            c = pth_root_in(ctx, &c).or_else(|err| fail(src, err.to_string()))?;
        }
        return Ok(c);
    }
    match (base, n) {
        (Ast::Int(k), 2) if *k > 0 => ctx.radical(*k as u64).or_else(|err| fail(src, err.to_string())),
        _ => fail(src, "in characteristic 0 only square roots of positive integers are supported"),
    }
}

fn elem(ctx: &Ctx, src: &str, a: &Ast) -> Result<Elem, ExprError> {
    match a {
        Ast::Int(n) => Ok(ctx.tower().from_i64(*n)),
        Ast::Name(s) => match ctx.tower().named(s) {
            Some(e) => Ok(e),
            None => fail(src, format!("unknown generator `{s}`")),
        },
        Ast::Neg(x) => {
            let v = elem(ctx, src, x)?;
            Ok(ctx.tower().neg(&v))
        }
        Ast::Call(f, args) if f == "sqrt" && args.len() == 1 => root(ctx, src, &args[0], 2),
        Ast::Call(f, _) => fail(src, format!("unknown function `{f}`")),
        Ast::Bin(Op::Pow, b, e) => {
            let r = rational(src, e)?;
            let (num, den) = (r.numer().to_i64(), r.denom().to_i64());
            let (Some(num), Some(den)) = (num, den) else { return fail(src, "exponent too large") };
            let base = if den == 1 { elem(ctx, src, b)? } else { root(ctx, src, b, den)? };
            ctx.tower().pow_signed(&base, num).or_else(|err| fail(src, err.to_string()))
        }
        Ast::Bin(op, l, r) => {
            let (l, r) = (elem(ctx, src, l)?, elem(ctx, src, r)?);
            let t = ctx.tower();
            match op {
                Op::Add => Ok(t.add(&l, &r)),
                Op::Sub => Ok(t.sub(&l, &r)),
                Op::Mul => Ok(t.mul(&l, &r)),
                _ => t.div(&l, &r).or_else(|err| fail(src, err.to_string())),
            }
        }
    }
}

/// Evaluates a constant rational such as `1/2` or `-3`.
pub fn eval_exponent(src: &str) -> Result<Exp, ExprError> {
    rational(src, &parse(src)?)
}

/// Evaluates a field element, adjoining roots to `ctx` as needed.
pub fn eval_elem(ctx: &Ctx, src: &str) -> Result<Elem, ExprError> {
    elem(ctx, src, &parse(src)?)
}

fn mentions(a: &Ast, vars: &[&str; 2]) -> bool {
    match a {
        Ast::Int(_) => false,
        Ast::Name(s) => vars.contains(&s.as_str()),
        Ast::Neg(x) => mentions(x, vars),
        Ast::Bin(_, l, r) => mentions(l, vars) || mentions(r, vars),
        Ast::Call(_, args) => args.iter().any(|x| mentions(x, vars)),
    }
}

fn poly(ctx: &Ctx, src: &str, a: &Ast, vars: &[&str; 2]) -> Result<BivarPoly, ExprError> {
    let t = ctx.tower();
    if !mentions(a, vars) {
        let c = elem(ctx, src, a)?;
        return Ok(BivarPoly::from_terms(&ctx.tower(), [(0, exp_int(0), c)]));
    }
    match a {
        Ast::Name(s) if s == vars[0] => Ok(BivarPoly::from_terms(&t, [(0, exp_int(1), t.one())])),
        Ast::Name(_) => Ok(BivarPoly::from_terms(&t, [(1, exp_int(0), t.one())])),
        Ast::Neg(x) => {
            let v = poly(ctx, src, x, vars)?;
            Ok(v.scale(&ctx.tower(), &ctx.tower().from_i64(-1)))
        }
        Ast::Bin(Op::Pow, b, e) => {
            let r = rational(src, e)?;
            if let Ast::Name(s) = &**b {
                if s == vars[0] {
                    return Ok(BivarPoly::from_terms(&t, [(0, r, t.one())]));
                }
            }
            match exp_to_i64(&r) {
                Some(k) if k >= 0 => {
                    let base = poly(ctx, src, b, vars)?;
                    let t = ctx.tower();
                    let mut acc = BivarPoly::from_terms(&t, [(0, exp_int(0), t.one())]);
                    for _ in 0..k {
                        acc = acc.mul(&t, &base);
                    }
                    Ok(acc)
                }
                _ => fail(src, "only x may carry a fractional or negative exponent"),
            }
        }
        Ast::Bin(Op::Div, l, r) => {
            if mentions(r, vars) {
                return fail(src, "division by a non-constant polynomial");
            }
            let num = poly(ctx, src, l, vars)?;
            let d = elem(ctx, src, r)?;
            let t = ctx.tower();
            let inv = t.inv(&d).or_else(|err| fail(src, err.to_string()))?;
            Ok(num.scale(&t, &inv))
        }
        Ast::Bin(op, l, r) => {
            let (l, r) = (poly(ctx, src, l, vars)?, poly(ctx, src, r, vars)?);
            let t = ctx.tower();
            Ok(match op {
                Op::Add => l.add(&t, &r),
                Op::Sub => l.sub(&t, &r),
                _ => l.mul(&t, &r),
            })
        }
        Ast::Int(_) | Ast::Call(..) => unreachable!("constant subtrees are handled above"),
    }
}

/// Evaluates a polynomial in `vars = [x, y]` (e.g. `["x", "y"]` or `["u", "v"]`).
pub fn eval_poly(ctx: &Ctx, src: &str, vars: [&str; 2]) -> Result<BivarPoly, ExprError> {
    poly(ctx, src, &parse(src)?, &vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use algser_core::field::{BaseField, FieldTower};
    use algser_core::series::SeriesField;

    fn ctx(p: u64, fams: &[&str]) -> Ctx {
        SeriesField::new(FieldTower::new(BaseField::new(p, fams, &[]).unwrap()))
    }

    #[test]
    fn parses_precedence() {
        assert_eq!(
            parse("1 + 2*3").unwrap(),
            Ast::Bin(Op::Add, Box::new(Ast::Int(1)), Box::new(Ast::Bin(Op::Mul, Box::new(Ast::Int(2)), Box::new(Ast::Int(3)))))
        );
        assert!(parse("1 +").is_err());
        assert!(parse("(1").is_err());
    }

    #[test]
    fn rationals_and_roots() {
        let c = ctx(0, &[]);
        let t = c.tower();
        assert_eq!(eval_elem(&c, "7/8 - 1/8").unwrap(), t.div(&t.from_i64(3), &t.from_i64(4)).unwrap());
        let r = eval_elem(&c, "sqrt(2)").unwrap();
        assert_eq!(eval_elem(&c, "2^(1/2)").unwrap(), r);
        let t = c.tower();
        assert_eq!(t.mul(&r, &r), t.from_i64(2));

        let c5 = ctx(5, &["t"]);
        let a = eval_elem(&c5, "t1^(1/5)").unwrap();
        assert_eq!(a, c5.indexed_root("t", 1, 1).unwrap());
        assert_eq!(eval_elem(&c5, "(t1^(1/5))^5").unwrap(), c5.tower().family_member("t", 1).unwrap());
    }

    #[test]
    fn polynomials() {
        let c = ctx(0, &[]);
        let t = c.tower();
        let g = eval_poly(&c, "y^2 - x^2 - x^3", ["x", "y"]).unwrap();
        assert_eq!(g.format(&t), "y^2 - x^2 - x^3");
        let h = eval_poly(&c, "(y - x^(1/2))*2/3", ["x", "y"]).unwrap();
        assert_eq!(h.format(&t), "(2/3)*y + (-2/3)*x^(1/2)");
        assert!(eval_poly(&c, "1/y", ["x", "y"]).is_err());
    }
}
