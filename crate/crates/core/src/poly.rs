//! Univariate integer polynomials in N and rational functions over them.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Polynomial with integer coefficients, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    c: Vec<BigInt>,
}

impl Poly {
    pub fn new(mut c: Vec<BigInt>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn from_i64s(c: &[i64]) -> Self {
        Poly::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn constant(x: impl Into<BigInt>) -> Self {
        Poly::new(vec![x.into()])
    }

    /// `a·N^k`.
    pub fn monomial(a: impl Into<BigInt>, k: usize) -> Self {
        let mut c = vec![BigInt::zero(); k + 1];
        c[k] = a.into();
        Poly::new(c)
    }

    /// The indeterminate N.
    pub fn n() -> Self {
        Poly::monomial(1, 1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_one()
    }

    /// Degree, with the zero polynomial at −1.
    pub fn degree(&self) -> isize {
        self.c.len() as isize - 1
    }

    pub fn lead(&self) -> BigInt {
        self.c.last().cloned().unwrap_or_default()
    }

    /// Lowest power with a nonzero coefficient.
    pub fn valuation(&self) -> usize {
        self.c.iter().position(|x| !x.is_zero()).unwrap_or(0)
    }

    pub fn is_monomial(&self) -> bool {
        self.c.iter().filter(|x| !x.is_zero()).count() == 1
    }

    pub fn content(&self) -> BigInt {
        self.c.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Poly::new(self.c.iter().map(|x| x * k).collect())
    }

    /// Exact division of every coefficient by `k`.
    pub fn div_scalar(&self, k: &BigInt) -> Self {
        Poly::new(
            self.c
                .iter()
                .map(|x| {
                    debug_assert!((x % k).is_zero());
                    x / k
                })
                .collect(),
        )
    }

    /// Multiply by N^k.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![BigInt::zero(); k];
        c.extend(self.c.iter().cloned());
        Poly { c }
    }

    pub fn primitive(&self) -> Self {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            self.clone()
        } else {
            self.div_scalar(&g)
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = Poly::constant(1);
        for _ in 0..e {
            r = &r * self;
        }
        r
    }

    /// Pseudo-remainder: lead(b)^(deg a − deg b + 1)·a mod b.
    fn pseudo_rem(&self, b: &Poly) -> Poly {
        let mut r = self.clone();
        let db = b.degree();
        let lb = b.lead();
        while !r.is_zero() && r.degree() >= db {
            let shift = (r.degree() - db) as usize;
            let lr = r.lead();
            r = &r.scale(&lb) - &b.scale(&lr).shift(shift);
        }
        r
    }

    /// Exact polynomial division; fails if `b` does not divide `self`.
    pub fn div_exact(&self, b: &Poly) -> Option<Poly> {
        if b.is_zero() {
            return None;
        }
        let mut r = self.clone();
        let db = b.degree();
        let lb = b.lead();
        let mut q = vec![BigInt::zero(); (self.degree() - db + 1).max(0) as usize];
        while !r.is_zero() && r.degree() >= db {
            let shift = (r.degree() - db) as usize;
            let (qc, rem) = r.lead().div_rem(&lb);
            if !rem.is_zero() {
                return None;
            }
            r = &r - &b.scale(&qc).shift(shift);
            q[shift] = qc;
        }
        if r.is_zero() {
            Some(Poly::new(q))
        } else {
            None
        }
    }

    /// Greatest common divisor over Z[N], positive leading coefficient.
    pub fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.normalize_sign();
        }
        if other.is_zero() {
            return self.normalize_sign();
        }
        let g = self.content().gcd(&other.content());
        let (mut a, mut b) = (self.primitive(), other.primitive());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive();
            a = b;
            b = r;
        }
        a.scale(&g).normalize_sign()
    }

    fn normalize_sign(&self) -> Poly {
        if self.lead().is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.c.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.c.iter().rev() {
            acc = acc * x + bigint_to_f64(c);
        }
        acc
    }

    /// Coefficients as decimal strings, lowest first.
    pub fn to_strings(&self) -> Vec<String> {
        self.c.iter().map(|x| x.to_string()).collect()
    }
}

pub(crate) fn bigint_to_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let z = BigInt::zero();
        Poly::new((0..n).map(|i| self.c.get(i).unwrap_or(&z) + o.c.get(i).unwrap_or(&z)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let z = BigInt::zero();
        Poly::new((0..n).map(|i| self.c.get(i).unwrap_or(&z) - o.c.get(i).unwrap_or(&z)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::default();
        }
        let mut c = vec![BigInt::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { c: self.c.iter().map(|x| -x).collect() }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let neg = a.is_negative();
            let mag = a.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let coef = if mag.is_one() && k > 0 { String::new() } else { mag.to_string() };
            match k {
                0 => write!(f, "{coef}")?,
                1 => write!(f, "{coef}N")?,
                _ => write!(f, "{coef}N^{k}")?,
            }
        }
        Ok(())
    }
}

/// Reduced quotient of integer polynomials: coprime, joint content removed,
/// positive leading coefficient in the denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Malformed("zero denominator".into()));
        }
        Ok(Self::reduce(num, den))
    }

    fn reduce(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFn::zero();
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap());
        let c = num.content().gcd(&den.content());
        if !c.is_one() {
            num = num.div_scalar(&c);
            den = den.div_scalar(&c);
        }
        if den.lead().is_negative() {
            num = -&num;
            den = -&den;
        }
        RatFn { num, den }
    }

    pub fn zero() -> Self {
        RatFn { num: Poly::default(), den: Poly::constant(1) }
    }

    pub fn one() -> Self {
        RatFn { num: Poly::constant(1), den: Poly::constant(1) }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFn { num: p, den: Poly::constant(1) }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Self::reduce(Poly::constant(r.numer().clone()), Poly::constant(r.denom().clone()))
    }

    /// `r·N^e` for any integer exponent.
    pub fn monomial(r: &BigRational, e: i64) -> Self {
        if e >= 0 {
            Self::reduce(Poly::monomial(r.numer().clone(), e as usize), Poly::constant(r.denom().clone()))
        } else {
            Self::reduce(Poly::constant(r.numer().clone()), Poly::monomial(r.denom().clone(), (-e) as usize))
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn inv(&self) -> Result<Self> {
        RatFn::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RatFn) -> Result<Self> {
        Ok(self * &o.inv()?)
    }

    pub fn pow(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let e = e.unsigned_abs();
        Ok(RatFn { num: base.num.pow(e), den: base.den.pow(e) })
    }

    pub fn eval(&self, x: &BigRational) -> Result<BigRational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::Malformed(format!("pole at N = {x}")));
        }
        Ok(self.num.eval(x) / d)
    }

    pub fn eval_at(&self, n: i64) -> Result<BigRational> {
        self.eval(&BigRational::from_integer(BigInt::from(n)))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    /// Limit of N^(−e)·self as N → ∞, where e is the degree difference.
    pub fn leading(&self) -> (BigRational, isize) {
        if self.is_zero() {
            return (BigRational::zero(), 0);
        }
        (
            BigRational::new(self.num.lead(), self.den.lead()),
            self.num.degree() - self.den.degree(),
        )
    }
}

impl Add for &RatFn {
    type Output = RatFn;
    fn add(self, o: &RatFn) -> RatFn {
        if self.den == o.den {
            return RatFn::reduce(&self.num + &o.num, self.den.clone());
        }
        RatFn::reduce(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }
}

impl Sub for &RatFn {
    type Output = RatFn;
    fn sub(self, o: &RatFn) -> RatFn {
        self + &(-o)
    }
}

impl Mul for &RatFn {
    type Output = RatFn;
    fn mul(self, o: &RatFn) -> RatFn {
        RatFn::reduce(&self.num * &o.num, &self.den * &o.den)
    }
}

impl Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        RatFn { num: -&self.num, den: self.den.clone() }
    }
}

fn fmt_rational_term(f: &mut fmt::Formatter<'_>, r: &BigRational, e: isize, first: bool) -> fmt::Result {
    let neg = r.is_negative();
    if first {
        if neg {
            write!(f, "-")?;
        }
    } else {
        write!(f, " {} ", if neg { '-' } else { '+' })?;
    }
    let (a, b) = (r.numer().abs(), r.denom().clone());
    let npow = |k: isize| match k {
        1 => "N".to_string(),
        k => format!("N^{k}"),
    };
    match e.cmp(&0) {
        Ordering::Equal => {
            if b.is_one() {
                write!(f, "{a}")
            } else {
                write!(f, "{a}/{b}")
            }
        }
        Ordering::Greater => {
            let lead = if a.is_one() { String::new() } else { a.to_string() };
            if b.is_one() {
                write!(f, "{lead}{}", npow(e))
            } else {
                write!(f, "{lead}{}/{b}", npow(e))
            }
        }
        Ordering::Less => {
            let bs = if b.is_one() { String::new() } else { b.to_string() };
            let d = format!("{bs}{}", npow(-e));
            if bs.is_empty() && -e == 1 {
                write!(f, "{a}/{d}")
            } else {
                write!(f, "{a}/({d})")
            }
        }
    }
}

impl fmt::Display for RatFn {
    /// Laurent form when the denominator is a monomial, e.g. `1 - 1/(2N)`;
    /// otherwise `(num)/(den)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num.is_zero() {
            return write!(f, "0");
        }
        if self.den.is_monomial() {
            let k = self.den.valuation() as isize;
            let dc = self.den.lead();
            let mut first = true;
            for (i, a) in self.num.coeffs().iter().enumerate().rev() {
                if a.is_zero() {
                    continue;
                }
                let r = BigRational::new(a.clone(), dc.clone());
                fmt_rational_term(f, &r, i as isize - k, first)?;
                first = false;
            }
            return Ok(());
        }
        let num = if self.num.is_monomial() && !self.num.lead().is_negative() {
            self.num.to_string()
        } else {
            format!("({})", self.num)
        };
        write!(f, "{num}/({})", self.den)
    }
}

/// Determinant of a square polynomial matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_det(mut m: Vec<Vec<Poly>>) -> Poly {
    let n = m.len();
    if n == 0 {
        return Poly::constant(1);
    }
    let mut sign = 1i32;
    let mut prev = Poly::constant(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Poly::default(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = t.div_exact(&prev).expect("Bareiss division is exact");
            }
            m[i][k] = Poly::default();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -&d
    } else {
        d
    }
}

/// Solve `A x = b` over Q(N) by Cramer's rule with Bareiss determinants.
pub fn solve_cramer(a: &[Vec<Poly>], b: &[Poly]) -> Result<Vec<RatFn>> {
    let det = bareiss_det(a.to_vec());
    if det.is_zero() {
        return Err(Error::Malformed("singular system".into()));
    }
    (0..a.len())
        .map(|j| {
            let mut m = a.to_vec();
            for (i, row) in m.iter_mut().enumerate() {
                row[j] = b[i].clone();
            }
            RatFn::new(bareiss_det(m), det.clone())
        })
        .collect()
}
