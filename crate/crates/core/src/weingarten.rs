//! Symplectic Weingarten calculus over pairings: Gram matrix, exact inverse
//! (symbolic in N or at a fixed N), normalized values and asymptotics.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

#[cfg(feature = "rayon")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perm::{IntegerPartition, Pairing, SignedDomain, SignedPermutation, Sym};
use crate::poly::{solve_cramer, Poly, RatFn};

/// Largest number of symbols accepted by table construction.
pub const MAX_SYMBOLS: u32 = 12;
/// Largest number of symbols for which full (unreduced) matrices are formed.
pub const MAX_FULL_SYMBOLS: u32 = 8;

/// Normalization applied to Wg to obtain wg.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// (−2N)^(n−#)·Wg.
    Definition,
    /// (2N)^(n−#)·Wg; positive for every λ.
    Magnitude,
    /// (−1)^(n/2−#)(2N)^(n−#)·Wg; the convention the Haar cumulants use.
    Operative,
}

/// Pairings of 1..n in deterministic order.
pub fn pairings(n: u32) -> Vec<SignedPermutation> {
    let d = SignedDomain::new(n, false);
    let syms: Vec<Sym> = (1..=n as Sym).collect();
    Pairing::enumerate(d, &syms)
}

/// #(p∨q) for two pairings on the same set.
pub fn join_count(p: &SignedPermutation, q: &SignedPermutation) -> usize {
    p.compose(q).cycle_count() / 2
}

/// Λ(p∨q): block sizes of the join, halved.
pub fn coset_type(p: &SignedPermutation, q: &SignedPermutation) -> IntegerPartition {
    let pq = p.compose(q);
    let mut lens: Vec<u32> = pq.cycles().iter().map(|c| c.len() as u32).collect();
    // every block of size 2m splits into two m-cycles of pq
    lens.sort_unstable_by(|a, b| b.cmp(a));
    IntegerPartition::new(lens.into_iter().step_by(2).collect())
}

/// Gram entry (−1)^(n/2)(−2N)^j as a monomial in N.
pub fn gram_entry(n: u32, joins: usize) -> Poly {
    let sign = if (n / 2 + joins as u32) % 2 == 0 { 1 } else { -1 };
    Poly::monomial(BigInt::from(sign) * BigInt::from(2).pow(joins as u32), joins)
}

fn check_n(n: u32, cap: u32) -> Result<()> {
    if n % 2 == 1 {
        return Err(Error::Malformed(format!("odd symbol count {n}")));
    }
    if n == 0 || n > cap {
        return Err(Error::CapExceeded { needed: n as u128, cap: cap as u128 });
    }
    Ok(())
}

/// Full Gram matrix over P₂(n).
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub n: u32,
    pub pairings: Vec<SignedPermutation>,
    pub entries: Vec<Vec<Poly>>,
}

pub fn gram(n: u32) -> Result<GramMatrix> {
    check_n(n, MAX_FULL_SYMBOLS + 2)?;
    let ps = pairings(n);
    let entries = ps
        .iter()
        .map(|p| ps.iter().map(|q| gram_entry(n, join_count(p, q))).collect())
        .collect();
    Ok(GramMatrix { n, pairings: ps, entries })
}

/// Exact Weingarten values indexed by Λ(π₊∨π₋).
#[derive(Clone, Debug, PartialEq)]
pub struct WeingartenTable {
    pub n: u32,
    /// `None` for symbolic tables.
    pub at: Option<u64>,
    pub by_partition: BTreeMap<IntegerPartition, RatFn>,
}

/// Pairings of 1..n: π₀ = (1,2)(3,4)… and, per λ, a τ with Λ(π₀∨τ) = λ.
fn representatives(n: u32) -> (SignedPermutation, Vec<(IntegerPartition, SignedPermutation)>) {
    let d = SignedDomain::new(n, false);
    let std: Vec<Vec<Sym>> = (0..n / 2).map(|i| vec![2 * i as Sym + 1, 2 * i as Sym + 2]).collect();
    let pi0 = SignedPermutation::from_cycles(d, &std).unwrap();
    let reps = IntegerPartition::all(n / 2)
        .into_iter()
        .map(|lam| {
            let mut cycles = Vec::new();
            let mut a = 1 as Sym;
            for &m in &lam.0 {
                let m = m as Sym;
                if m == 1 {
                    cycles.push(vec![a, a + 1]);
                } else {
                    for i in 0..m {
                        let x = a + 2 * i + 1;
                        let y = if i == m - 1 { a } else { x + 1 };
                        cycles.push(vec![x, y]);
                    }
                }
                a += 2 * m;
            }
            (lam, SignedPermutation::from_cycles(d, &cycles).unwrap())
        })
        .collect();
    (pi0, reps)
}

/// The class-reduced system A·w = e for the unknowns w(λ).
fn reduced_system(n: u32) -> (Vec<IntegerPartition>, Vec<Vec<Poly>>, Vec<Poly>) {
    let ps = pairings(n);
    let (pi0, reps) = representatives(n);
    let lams: Vec<IntegerPartition> = reps.iter().map(|(l, _)| l.clone()).collect();
    let col: BTreeMap<&IntegerPartition, usize> = lams.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let g0: Vec<Poly> = ps.iter().map(|s| gram_entry(n, join_count(&pi0, s))).collect();
    let mut a = vec![vec![Poly::default(); lams.len()]; lams.len()];
    let mut b = vec![Poly::default(); lams.len()];
    let k = n / 2;
    for (row, (mu, tau)) in reps.iter().enumerate() {
        for (s, g) in ps.iter().zip(&g0) {
            let j = col[&coset_type(s, tau)];
            a[row][j] = &a[row][j] + g;
        }
        if mu.len() == k as usize {
            b[row] = Poly::constant(1);
        }
    }
    (lams, a, b)
}

pub(crate) fn gauss_solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, piv);
        b.swap(c, piv);
        let inv = BigRational::one() / a[c][c].clone();
        for j in c..n {
            a[c][j] = &a[c][j] * &inv;
        }
        b[c] = &b[c] * &inv;
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in c..n {
                    let t = &f * &a[c][j];
                    a[r][j] -= t;
                }
                let t = &f * &b[c];
                b[r] -= t;
            }
        }
    }
    Some(b)
}

/// Build the table symbolically (`at = None`) or at a fixed N.
pub fn weingarten_table(n: u32, at: Option<u64>) -> Result<WeingartenTable> {
    check_n(n, MAX_SYMBOLS)?;
    let (lams, a, b) = reduced_system(n);
    let vals: Vec<RatFn> = match at {
        None => solve_cramer(&a, &b)?,
        Some(nv) => {
            let x = BigRational::from_integer(BigInt::from(nv));
            let af = a.iter().map(|r| r.iter().map(|p| p.eval(&x)).collect()).collect();
            let bf = b.iter().map(|p| p.eval(&x)).collect();
            gauss_solve(af, bf)
                .ok_or(Error::SingularGram(nv))?
                .iter()
                .map(RatFn::from_rational)
                .collect()
        }
    };
    Ok(WeingartenTable { n, at, by_partition: lams.into_iter().zip(vals).collect() })
}

impl WeingartenTable {
    pub fn k(&self) -> u32 {
        self.n / 2
    }

    pub fn wg(&self, lambda: &IntegerPartition) -> Option<&RatFn> {
        self.by_partition.get(lambda)
    }

    /// Wg(π₊, π₋).
    pub fn entry(&self, p: &SignedPermutation, q: &SignedPermutation) -> RatFn {
        self.by_partition[&coset_type(p, q)].clone()
    }

    /// Normalized wg(λ) under a chosen convention.
    pub fn normalized(&self, lambda: &IntegerPartition, conv: Normalization) -> Option<RatFn> {
        let w = self.wg(lambda)?;
        let e = self.n as usize - lambda.len();
        let mag = Poly::monomial(BigInt::from(2).pow(e as u32), e);
        let neg = match conv {
            Normalization::Definition => e % 2 == 1,
            Normalization::Magnitude => false,
            Normalization::Operative => (self.k() as usize + lambda.len()) % 2 == 1,
        };
        let s = if neg { -&mag } else { mag };
        Some(&RatFn::from_poly(s) * w)
    }

    /// Same table evaluated at a fixed N.
    pub fn at(&self, nv: u64) -> Result<WeingartenTable> {
        let x = BigRational::from_integer(BigInt::from(nv));
        let mut by_partition = BTreeMap::new();
        for (l, v) in &self.by_partition {
            by_partition.insert(l.clone(), RatFn::from_rational(&v.eval(&x)?));
        }
        Ok(WeingartenTable { n: self.n, at: Some(nv), by_partition })
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .by_partition
            .iter()
            .map(|(l, v)| {
                json!({
                    "lambda": l.0,
                    "num": coeffs_json(v.num()),
                    "den": coeffs_json(v.den()),
                    "value": v.to_string(),
                    "wg": self.normalized(l, Normalization::Operative).unwrap().to_string(),
                })
            })
            .collect();
        json!({
            "schema": "1",
            "n": self.n,
            "at": self.at,
            "convention": "wg = (-1)^(n/2 - #) (2N)^(n - #) Wg",
            "entries": entries,
        })
    }
}

fn coeffs_json(p: &Poly) -> Vec<Value> {
    use num_traits::ToPrimitive;
    p.coeffs()
        .iter()
        .map(|c| c.to_i64().map(Value::from).unwrap_or_else(|| Value::String(c.to_string())))
        .collect()
}

/// ∏ₖ (−1)^(λₖ−1) C_(λₖ−1).
pub fn catalan_asymptote(lambda: &IntegerPartition) -> i64 {
    lambda
        .0
        .iter()
        .map(|&l| {
            let m = l as i64 - 1;
            let c = catalan(m as u64) as i64;
            if m % 2 == 0 { c } else { -c }
        })
        .product()
}

pub fn catalan(m: u64) -> u128 {
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Dense i128 polynomial for the full pseudoinverse check.
fn padd(acc: &mut Vec<i128>, p: &[i128], scale: i128, shift: usize) {
    if acc.len() < p.len() + shift {
        acc.resize(p.len() + shift, 0);
    }
    for (i, &c) in p.iter().enumerate() {
        let t = c.checked_mul(scale).expect("coefficient overflow");
        acc[i + shift] = acc[i + shift].checked_add(t).expect("coefficient overflow");
    }
}

fn trim(mut v: Vec<i128>) -> Vec<i128> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn to_i128(p: &Poly) -> Vec<i128> {
    use num_traits::ToPrimitive;
    p.coeffs().iter().map(|c| c.to_i128().expect("coefficient overflow")).collect()
}

/// Exact check of Gr·Wg·Gr = Gr over all pairings, clearing denominators:
/// with Wg = P/D the identity becomes Gr·P·Gr = D·Gr in Z[N].
pub fn check_pseudoinverse(table: &WeingartenTable) -> Result<bool> {
    let n = table.n;
    check_n(n, MAX_FULL_SYMBOLS)?;
    let ps = pairings(n);
    let m = ps.len();
    let mut den = Poly::constant(1);
    for v in table.by_partition.values() {
        let g = den.gcd(v.den());
        den = (&den * v.den()).div_exact(&g).unwrap();
    }
    let pnum: BTreeMap<IntegerPartition, Vec<i128>> = table
        .by_partition
        .iter()
        .map(|(l, v)| (l.clone(), to_i128(&(v.num() * &den.div_exact(v.den()).unwrap()))))
        .collect();
    // Gram entries as (coefficient, power)
    let joins: Vec<Vec<usize>> = ps.iter().map(|p| ps.iter().map(|q| join_count(p, q)).collect()).collect();
    let gcoef = |j: usize| -> i128 {
        let s = if (n as usize / 2 + j) % 2 == 0 { 1 } else { -1 };
        s * (1i128 << j)
    };
    let types: Vec<Vec<IntegerPartition>> = ps.iter().map(|p| ps.iter().map(|q| coset_type(p, q)).collect()).collect();
    let den_i = to_i128(&den);
    let row_ok = |a: usize| -> bool {
        // T = (Gr·P) row a
        let t: Vec<Vec<i128>> = (0..m)
            .map(|c| {
                let mut acc = Vec::new();
                for s in 0..m {
                    padd(&mut acc, &pnum[&types[s][c]], gcoef(joins[a][s]), joins[a][s]);
                }
                trim(acc)
            })
            .collect();
        (0..m).all(|b| {
            let mut acc = Vec::new();
            for c in 0..m {
                padd(&mut acc, &t[c], gcoef(joins[c][b]), joins[c][b]);
            }
            let mut rhs = Vec::new();
            padd(&mut rhs, &den_i, gcoef(joins[a][b]), joins[a][b]);
            trim(acc) == trim(rhs)
        })
    };
    let ok = crate::if_rayon!((0..m).into_par_iter().all(row_ok), (0..m).all(row_ok));
    Ok(ok)
}

/// Fixed-N inverse of the full Gram matrix by exact Gauss–Jordan, regrouped by
/// Λ with a within-class equality check. Independent of the reduced system.
pub fn full_inverse_at(n: u32, nv: u64) -> Result<BTreeMap<IntegerPartition, BigRational>> {
    check_n(n, MAX_FULL_SYMBOLS)?;
    let g = gram(n)?;
    let m = g.pairings.len();
    let x = BigRational::from_integer(BigInt::from(nv));
    let mut a: Vec<Vec<BigRational>> = g.entries.iter().map(|r| r.iter().map(|p| p.eval(&x)).collect()).collect();
    let mut inv: Vec<Vec<BigRational>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for c in 0..m {
        let piv = (c..m).find(|&r| !a[r][c].is_zero()).ok_or(Error::SingularGram(nv))?;
        a.swap(c, piv);
        inv.swap(c, piv);
        let f = BigRational::one() / a[c][c].clone();
        for j in 0..m {
            a[c][j] = &a[c][j] * &f;
            inv[c][j] = &inv[c][j] * &f;
        }
        for r in 0..m {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..m {
                    let t = &f * &a[c][j];
                    a[r][j] -= t;
                    let t = &f * &inv[c][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    let mut out: BTreeMap<IntegerPartition, BigRational> = BTreeMap::new();
    for i in 0..m {
        for j in 0..m {
            let t = coset_type(&g.pairings[i], &g.pairings[j]);
            match out.get(&t) {
                Some(v) if *v != inv[i][j] => {
                    return Err(Error::Malformed(format!("Wg not constant on class {t}")));
                }
                Some(_) => {}
                None => {
                    out.insert(t, inv[i][j].clone());
                }
            }
        }
    }
    Ok(out)
}

/// Truncated alternating path sum (2N)^(−n/2) Σ_{j≤depth} (−B)^j at fixed N,
/// where Gr = (2N)^(n/2)(I + B) and B vanishes on the diagonal.
pub fn weingarten_series(n: u32, p: usize, q: usize, nv: u64, depth: u32) -> Result<BigRational> {
    check_n(n, 6)?;
    let g = gram(n)?;
    let m = g.pairings.len();
    let x = BigRational::from_integer(BigInt::from(nv));
    let scale = BigRational::from_integer(BigInt::from(2 * nv)).pow(n as i32 / 2);
    let b: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { BigRational::zero() } else { -(g.entries[i][j].eval(&x) / &scale) })
                .collect()
        })
        .collect();
    // v = e_q; accumulate Σ (−B)^j e_q
    let mut v: Vec<BigRational> = (0..m).map(|i| if i == q { BigRational::one() } else { BigRational::zero() }).collect();
    let mut acc = v[p].clone();
    for _ in 0..depth {
        v = (0..m).map(|i| (0..m).fold(BigRational::zero(), |s, j| s + &b[i][j] * &v[j])).collect();
        acc += &v[p];
    }
    Ok(acc / scale)
}

/// |x − y| ≤ tol·|y|.
pub fn rel_close(x: &BigRational, y: &BigRational, tol: f64) -> bool {
    use num_traits::ToPrimitive;
    let d = (x - y).abs().to_f64().unwrap_or(f64::INFINITY);
    d <= tol * y.abs().to_f64().unwrap_or(0.0)
}
