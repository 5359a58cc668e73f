//! Quaternions and quaternionic matrices over a generic scalar ring.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Commutative ring of quaternion components.
pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;
}

/// Scalars with exact or floating division.
pub trait Field: Scalar + Div<Output = Self> {
    fn from_rational(r: &BigRational) -> Self;
}

impl Scalar for f64 {
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for f64 {
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
}

impl Scalar for i128 {
    fn from_i64(x: i64) -> Self {
        x as i128
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Field for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

/// a + bi + cj + dk.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Quat<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Quat<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Quat { a, b, c, d }
    }

    pub fn real(a: T) -> Self {
        Quat { a, b: T::zero(), c: T::zero(), d: T::zero() }
    }

    pub fn zero() -> Self {
        Self::real(T::zero())
    }

    pub fn one() -> Self {
        Self::real(T::one())
    }

    pub fn i() -> Self {
        Quat::new(T::zero(), T::one(), T::zero(), T::zero())
    }

    pub fn j() -> Self {
        Quat::new(T::zero(), T::zero(), T::one(), T::zero())
    }

    pub fn k() -> Self {
        Quat::new(T::zero(), T::zero(), T::zero(), T::one())
    }

    pub fn from_i64s(a: i64, b: i64, c: i64, d: i64) -> Self {
        Quat::new(T::from_i64(a), T::from_i64(b), T::from_i64(c), T::from_i64(d))
    }

    pub fn re(&self) -> T {
        self.a.clone()
    }

    pub fn conj(&self) -> Self {
        Quat::new(self.a.clone(), -self.b.clone(), -self.c.clone(), -self.d.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    pub fn scale(&self, s: &T) -> Self {
        Quat::new(self.a.clone() * s.clone(), self.b.clone() * s.clone(), self.c.clone() * s.clone(), self.d.clone() * s.clone())
    }

    /// Squared norm a² + b² + c² + d².
    pub fn norm2(&self) -> T {
        self.a.clone() * self.a.clone() + self.b.clone() * self.b.clone() + self.c.clone() * self.c.clone() + self.d.clone() * self.d.clone()
    }

    /// Entry of the 2×2 complex representation as (re, im); η, θ ∈ {1, −1}
    /// index rows and columns with 1 first.
    pub fn embed(&self, eta: i8, theta: i8) -> (T, T) {
        match (eta, theta) {
            (1, 1) => (self.a.clone(), self.b.clone()),
            (1, -1) => (self.c.clone(), self.d.clone()),
            (-1, 1) => (-self.c.clone(), self.d.clone()),
            (-1, -1) => (self.a.clone(), -self.b.clone()),
            _ => panic!("spin index must be ±1"),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Quat<U> {
        Quat::new(f(&self.a), f(&self.b), f(&self.c), f(&self.d))
    }

    pub fn to_f64(&self) -> Quat<f64> {
        self.map(|x| x.to_f64())
    }
}

impl<T: Scalar> Add for Quat<T> {
    type Output = Quat<T>;
    fn add(self, o: Quat<T>) -> Quat<T> {
        Quat::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl<T: Scalar> AddAssign for Quat<T> {
    fn add_assign(&mut self, o: Quat<T>) {
        self.a += o.a;
        self.b += o.b;
        self.c += o.c;
        self.d += o.d;
    }
}

impl<T: Scalar> Sub for Quat<T> {
    type Output = Quat<T>;
    fn sub(self, o: Quat<T>) -> Quat<T> {
        Quat::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl<T: Scalar> Neg for Quat<T> {
    type Output = Quat<T>;
    fn neg(self) -> Quat<T> {
        Quat::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl<T: Scalar> Mul for &Quat<T> {
    type Output = Quat<T>;
    fn mul(self, o: &Quat<T>) -> Quat<T> {
        let (a1, b1, c1, d1) = (&self.a, &self.b, &self.c, &self.d);
        let (a2, b2, c2, d2) = (&o.a, &o.b, &o.c, &o.d);
        let m = |x: &T, y: &T| x.clone() * y.clone();
        Quat::new(
            m(a1, a2) - m(b1, b2) - m(c1, c2) - m(d1, d2),
            m(a1, b2) + m(b1, a2) + m(c1, d2) - m(d1, c2),
            m(a1, c2) - m(b1, d2) + m(c1, a2) + m(d1, b2),
            m(a1, d2) + m(b1, c2) - m(c1, b2) + m(d1, a2),
        )
    }
}

impl<T: Scalar> Mul for Quat<T> {
    type Output = Quat<T>;
    fn mul(self, o: Quat<T>) -> Quat<T> {
        &self * &o
    }
}

/// Dense quaternionic matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Quat<T>>,
}

impl<T: Scalar> QMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Quat::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Quat::one())
    }

    /// q·I_n.
    pub fn scalar(n: usize, q: Quat<T>) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, q.clone());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quat<T>) -> Self {
        let data = (0..rows * cols).map(|x| f(x / cols, x % cols)).collect();
        QMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Quat<T> {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, q: Quat<T>) {
        self.data[i * self.cols + j] = q;
    }

    pub fn entries(&self) -> &[Quat<T>] {
        &self.data
    }

    /// Four-index access [ι₁, ι₂; η₁, η₂] through the 2×2 representation.
    pub fn entry4(&self, i: usize, j: usize, eta: i8, theta: i8) -> (T, T) {
        self.get(i, j).embed(eta, theta)
    }

    pub fn adjoint(&self) -> Self {
        QMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let t = a * o.get(k, j);
                    out.data[i * o.cols + j] += t;
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "dimension mismatch");
        QMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() + o.get(i, j).clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "dimension mismatch");
        QMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).clone() - o.get(i, j).clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|q| q.scale(s)).collect() }
    }

    /// Left multiplication of every entry by a quaternion.
    pub fn lmul(&self, q: &Quat<T>) -> Self {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| q * x).collect() }
    }

    /// Entrywise real part.
    pub fn re(&self) -> Self {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|q| Quat::real(q.re())).collect() }
    }

    /// Unnormalized trace.
    pub fn trace(&self) -> Result<Quat<T>> {
        if !self.is_square() {
            return Err(Error::Malformed("trace of non-square matrix".into()));
        }
        let mut s = Quat::zero();
        for i in 0..self.rows {
            s += self.get(i, i).clone();
        }
        Ok(s)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> QMat<U> {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|q| q.map(&f)).collect() }
    }

    pub fn to_f64(&self) -> QMat<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(x, y)| {
                let d = (x.clone() - y.clone()).to_f64();
                d.a.abs().max(d.b.abs()).max(d.c.abs()).max(d.d.abs())
            })
            .fold(0.0, f64::max)
    }

    /// If every off-diagonal entry vanishes and the diagonal is constant, that constant.
    pub fn as_scalar(&self) -> Option<Quat<T>> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let d = self.get(0, 0).clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j { &d } else { &Quat::zero() };
                if self.get(i, j) != want {
                    return None;
                }
            }
        }
        Some(d)
    }
}

impl<T: Field> QMat<T> {
    /// Normalized trace tr(A) = Tr(A)/N.
    pub fn ntr(&self) -> Result<Quat<T>> {
        let n = T::from_i64(self.rows as i64);
        let t = self.trace()?;
        Ok(t.map(|x| x.clone() / n.clone()))
    }

    /// tr(A)·I_N, the matrix a `tr(…)` bracket evaluates to.
    pub fn tr_matrix(&self) -> Result<Self> {
        Ok(QMat::scalar(self.rows, self.ntr()?))
    }
}

impl QMat<f64> {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.rows)
            .map(|i| {
                Value::Array((0..self.cols).map(|j| { let q = self.get(i, j); json!([q.a, q.b, q.c, q.d]) }).collect())
            })
            .collect();
        Value::Array(rows)
    }
}

impl QMat<BigRational> {
    /// Entries as [a,b,c,d] quadruples of numbers or "p/q" strings.
    pub fn to_json(&self) -> Value {
        let f = |x: &BigRational| {
            if x.is_integer() {
                x.to_integer().to_i64().map(Value::from).unwrap_or_else(|| Value::String(x.to_string()))
            } else {
                Value::String(x.to_string())
            }
        };
        let rows: Vec<Value> = (0..self.rows)
            .map(|i| {
                Value::Array(
                    (0..self.cols)
                        .map(|j| {
                            let q = self.get(i, j);
                            json!([f(&q.a), f(&q.b), f(&q.c), f(&q.d)])
                        })
                        .collect(),
                )
            })
            .collect();
        Value::Array(rows)
    }

    /// Parse rows of [a,b,c,d] quadruples (numbers or "p/q" strings).
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Malformed(format!("matrix json: {m}"));
        let rows = v.as_array().ok_or_else(|| bad("expected array of rows"))?;
        let r = rows.len();
        let mut data = Vec::new();
        let mut c = None;
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("row not an array"))?;
            if *c.get_or_insert(row.len()) != row.len() {
                return Err(bad("ragged rows"));
            }
            for e in row {
                let e = e.as_array().filter(|e| e.len() == 4).ok_or_else(|| bad("entry must be [a,b,c,d]"))?;
                let mut comps = Vec::new();
                for x in e {
                    comps.push(parse_rational(x).ok_or_else(|| bad("bad number"))?);
                }
                data.push(Quat::new(comps[0].clone(), comps[1].clone(), comps[2].clone(), comps[3].clone()));
            }
        }
        Ok(QMat { rows: r, cols: c.unwrap_or(0), data })
    }
}

fn parse_rational(x: &Value) -> Option<BigRational> {
    match x {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(BigRational::from_integer(BigInt::from(i)))
            } else {
                BigRational::from_float(n.as_f64()?)
            }
        }
        Value::String(s) => {
            let s = s.trim();
            match s.split_once('/') {
                Some((a, b)) => Some(BigRational::new(a.trim().parse().ok()?, b.trim().parse().ok()?)),
                None => Some(BigRational::from_integer(s.parse().ok()?)),
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = Quat<i128>;

    #[test]
    fn hamilton_relations() {
        let (i, j, k) = (Q::i(), Q::j(), Q::k());
        let m1 = -Q::one();
        assert_eq!(&i * &i, m1);
        assert_eq!(&j * &j, m1);
        assert_eq!(&k * &k, m1);
        assert_eq!(&i * &j, k);
        assert_eq!(&j * &i, -k.clone());
        assert_eq!(&(&i * &j) * &k, m1);
    }

    #[test]
    fn embedding_is_multiplicative() {
        let p = Q::from_i64s(1, 2, -3, 4);
        let q = Q::from_i64s(-2, 1, 5, 3);
        let pq = &p * &q;
        for eta in [1i8, -1] {
            for theta in [1i8, -1] {
                let mut re = 0i128;
                let mut im = 0i128;
                for mid in [1i8, -1] {
                    let (a, b) = p.embed(eta, mid);
                    let (c, d) = q.embed(mid, theta);
                    re += a * c - b * d;
                    im += a * d + b * c;
                }
                assert_eq!(pq.embed(eta, theta), (re, im));
            }
        }
        let (a, _) = p.embed(1, 1);
        let (b, _) = p.embed(-1, -1);
        assert_eq!(a + b, 2 * p.re());
    }

    #[test]
    fn conjugate_index_identity() {
        let q = Q::from_i64s(3, -1, 2, 7);
        for eta in [1i8, -1] {
            for theta in [1i8, -1] {
                let (re, im) = q.embed(-theta, -eta);
                let s = (eta * theta) as i128;
                assert_eq!(q.conj().embed(eta, theta), (s * re, s * im));
            }
        }
    }

    #[test]
    fn traces_and_adjoint() {
        let id = QMat::<f64>::identity(3);
        assert_eq!(id.ntr().unwrap(), Quat::one());
        let q = Quat::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(QMat::scalar(3, q.clone()).ntr().unwrap(), q);
        let a = QMat::from_fn(2, 3, |i, j| Quat::new(i as f64, j as f64, 1.0, -(i as f64)));
        assert_eq!(a.adjoint().adjoint(), a);
        let aa = a.matmul(&a.adjoint());
        let t = aa.ntr().unwrap();
        assert!(t.a > 0.0 && t.b.abs() < 1e-12 && t.c.abs() < 1e-12 && t.d.abs() < 1e-12);
        assert!(QMat::<f64>::zeros(2, 3).ntr().is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = QMat::<BigRational>::from_fn(2, 2, |i, j| Quat::from_i64s(i as i64, j as i64, 1, -2));
        assert_eq!(QMat::from_json(&m.to_json()).unwrap(), m);
    }
}
