//! Direct evaluation of Re_π tr_ρ index contractions, of bracket diagrams by
//! matrix arithmetic, and of literal Einstein-summation displays.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::bracket::{BracketDiagram, Tag, Token};
use crate::error::{Error, Result};
use crate::perm::{PreMap, Sym, UnionFind};
use crate::quaternion::{Field, QMat, Quat, Scalar};

/// Unnormalized contraction sum with its normalization exponents; the value is
/// `sum / (2^re_cycles · N^tr_cycles)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawContraction<T> {
    /// N×N when the domain has ∞, else 1×1 holding the real scalar.
    pub sum: QMat<T>,
    pub re_cycles: u32,
    pub tr_cycles: u32,
    pub dim: usize,
}

pub(crate) struct Plan {
    /// FD cycles of φ_Re as (matrix index, conjugate?) lists; the ∞ cycle, if any, first.
    pub(crate) re_cycles: Vec<Vec<(usize, bool)>>,
    pub(crate) inf_cycle: bool,
    /// Row and column variable of each matrix.
    pub(crate) row: Vec<usize>,
    pub(crate) col: Vec<usize>,
    /// Output (row, col) variables.
    pub(crate) out: Option<(usize, usize)>,
    pub(crate) free: Vec<usize>,
    pub(crate) nvars: usize,
    pub(crate) re_count: u32,
    pub(crate) tr_count: u32,
}

pub(crate) fn plan(phi_re: &PreMap, phi_tr: &PreMap, nmats: usize) -> Result<Plan> {
    let d = phi_re.domain();
    if phi_tr.domain() != d {
        return Err(Error::DomainMismatch);
    }
    if phi_re.perm().support_len() != d.size() || phi_tr.perm().support_len() != d.size() {
        return Err(Error::Malformed("premaps must act on the whole signed domain".into()));
    }
    if nmats != d.n as usize {
        return Err(Error::Malformed(format!("{} matrices for {} symbols", nmats, d.n)));
    }
    // ι_{−s} = ι_{φ_tr(s)}
    let mut uf = UnionFind::new(d.size());
    for s in d.all() {
        uf.union(d.index(-s), d.index(phi_tr.apply(s)));
    }
    let mut var_of = vec![usize::MAX; d.size()];
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..d.size() {
        let r = uf.find(i);
        let next = ids.len();
        var_of[i] = *ids.entry(r).or_insert(next);
    }
    let nvars = ids.len();
    let row: Vec<usize> = (1..=d.n as Sym).map(|k| var_of[d.index(k)]).collect();
    let col: Vec<usize> = (1..=d.n as Sym).map(|k| var_of[d.index(-k)]).collect();
    let out = d.has_infinity.then(|| (var_of[d.index(-d.inf())], var_of[d.index(d.inf())]));
    let free: Vec<usize> = (0..nvars).filter(|v| out.map_or(true, |(r, c)| *v != r && *v != c)).collect();
    let fd = phi_re.fd_cycles();
    let inf_cycle = fd.first().is_some_and(|c| d.is_inf(c[0]));
    let re_cycles = fd
        .iter()
        .map(|c| c.iter().filter(|s| !d.is_inf(**s)).map(|&s| (s.unsigned_abs() as usize - 1, s < 0)).collect())
        .collect();
    let tr_count = phi_tr.fd_cycles().iter().filter(|c| !d.is_inf(c[0])).count() as u32;
    Ok(Plan {
        re_count: fd.len() as u32 - u32::from(inf_cycle),
        re_cycles,
        inf_cycle,
        row,
        col,
        out,
        free,
        nvars,
        tr_count,
    })
}

/// Sum Σ_ι Π_cycles over all index assignments, without normalization.
pub fn contract_raw<T: Scalar>(phi_re: &PreMap, phi_tr: &PreMap, mats: &[QMat<T>]) -> Result<RawContraction<T>> {
    let p = plan(phi_re, phi_tr, mats.len())?;
    let dim = mats.first().map_or(1, |m| m.rows());
    if mats.iter().any(|m| m.rows() != dim || m.cols() != dim) {
        return Err(Error::Malformed("matrices must share one square dimension".into()));
    }
    let two = T::from_i64(2);
    let mut idx = vec![0usize; p.nvars];
    let outputs: Vec<(usize, usize)> = match p.out {
        None => vec![(0, 0)],
        Some((r, c)) if r == c => (0..dim).map(|i| (i, i)).collect(),
        Some(_) => (0..dim).flat_map(|i| (0..dim).map(move |j| (i, j))).collect(),
    };
    let mut sum = QMat::zeros(if p.out.is_some() { dim } else { 1 }, if p.out.is_some() { dim } else { 1 });
    let q_of = |k: usize, conj: bool, idx: &[usize]| -> Quat<T> {
        let q = mats[k].get(idx[p.row[k]], idx[p.col[k]]);
        if conj { q.conj() } else { q.clone() }
    };
    for &(oi, oj) in &outputs {
        if let Some((r, c)) = p.out {
            idx[r] = oi;
            idx[c] = oj;
        }
        for f in &p.free {
            idx[*f] = 0;
        }
        let mut acc = Quat::zero();
        loop {
            let mut real = T::one();
            let mut head = Quat::one();
            for (ci, cyc) in p.re_cycles.iter().enumerate() {
                let mut q = Quat::one();
                for &(k, conj) in cyc {
                    q = &q * &q_of(k, conj, &idx);
                }
                if ci == 0 && p.inf_cycle {
                    head = q;
                } else {
                    real = real * two.clone() * q.re();
                }
            }
            acc += head.scale(&real);
            // odometer over free variables
            let mut pos = 0;
            while pos < p.free.len() {
                let v = p.free[pos];
                idx[v] += 1;
                if idx[v] < dim {
                    break;
                }
                idx[v] = 0;
                pos += 1;
            }
            if pos == p.free.len() {
                break;
            }
        }
        if p.out.is_none() {
            acc = Quat::real(acc.re());
        }
        sum.set(oi, oj, acc);
    }
    Ok(RawContraction { sum, re_cycles: p.re_count, tr_cycles: p.tr_count, dim })
}

/// Re_{φ_Re} tr_{φ_tr}(A₁,…,Aₙ). With ∞ in the domain the result is the N×N
/// uncontracted matrix; otherwise a 1×1 matrix holding the real value.
pub fn eval_contraction<T: Field>(phi_re: &PreMap, phi_tr: &PreMap, mats: &[QMat<T>]) -> Result<QMat<T>> {
    let raw = contract_raw(phi_re, phi_tr, mats)?;
    let norm = T::from_i64(2).pow_u(raw.re_cycles) * T::from_i64(raw.dim as i64).pow_u(raw.tr_cycles);
    Ok(raw.sum.map(|x| x.clone() / norm.clone()))
}

/// Exact evaluation on integer-entry matrices.
pub fn eval_contraction_exact(phi_re: &PreMap, phi_tr: &PreMap, mats: &[QMat<i128>]) -> Result<QMat<BigRational>> {
    let raw = contract_raw(phi_re, phi_tr, mats)?;
    let norm = BigRational::from_integer(BigInt::from(2).pow(raw.re_cycles) * BigInt::from(raw.dim).pow(raw.tr_cycles));
    Ok(raw.sum.map(|x| BigRational::from_integer(BigInt::from(*x)) / norm.clone()))
}

trait PowU {
    fn pow_u(self, e: u32) -> Self;
}

impl<T: Scalar> PowU for T {
    fn pow_u(self, e: u32) -> Self {
        let mut r = T::one();
        for _ in 0..e {
            r = r * self.clone();
        }
        r
    }
}

/// Evaluate a bracket diagram with matrix products; `Re` is entrywise, `tr`
/// is the normalized trace times the identity. Symbols bind to `mats[|k|−1]`,
/// starred symbols to its adjoint.
pub fn eval_bracket<T: Field>(d: &BracketDiagram, mats: &[QMat<T>]) -> Result<QMat<T>> {
    if mats.len() < d.n() as usize {
        return Err(Error::Malformed(format!("{} symbols but {} matrices", d.n(), mats.len())));
    }
    let dim = mats.first().map_or(1, |m| m.rows());
    let mut stack: Vec<(Option<Tag>, QMat<T>)> = vec![(None, QMat::identity(dim))];
    for t in d.tokens() {
        match *t {
            Token::Open(tag) => stack.push((Some(tag), QMat::identity(dim))),
            Token::Close => {
                let (tag, m) = stack.pop().unwrap();
                let v = match tag.unwrap() {
                    Tag::Re => m.re(),
                    Tag::Tr => m.tr_matrix()?,
                };
                let top = stack.last_mut().unwrap();
                top.1 = top.1.matmul(&v);
            }
            Token::Sym(s) => {
                let a = &mats[s.unsigned_abs() as usize - 1];
                let a = if s < 0 { a.adjoint() } else { a.clone() };
                let top = stack.last_mut().unwrap();
                top.1 = top.1.matmul(&a);
            }
        }
    }
    Ok(stack.pop().unwrap().1)
}

/// One factor X^{(k)}_{ab;αβ} of an Einstein display; negative `matrix` means adjoint.
#[derive(Clone, Debug)]
pub struct EinsteinFactor {
    pub matrix: i32,
    pub rows: (char, char),
    pub spins: (char, char),
}

impl EinsteinFactor {
    pub fn new(matrix: i32, rows: &str, spins: &str) -> Self {
        let r: Vec<char> = rows.chars().collect();
        let s: Vec<char> = spins.chars().collect();
        EinsteinFactor { matrix, rows: (r[0], r[1]), spins: (s[0], s[1]) }
    }
}

/// Literal sum over repeated letters of a product of 4-index entries. Returns
/// complex values (re, im) keyed by the values of the `free` letters
/// (matrix letters range over 0..N, spin letters over ±1).
pub fn einstein_sum<T: Scalar>(
    factors: &[EinsteinFactor],
    mats: &[QMat<T>],
    free: &[char],
) -> BTreeMap<Vec<i64>, (T, T)> {
    let dim = mats[0].rows() as i64;
    let mut letters: Vec<(char, bool)> = Vec::new();
    for f in factors {
        for (c, spin) in [(f.rows.0, false), (f.rows.1, false), (f.spins.0, true), (f.spins.1, true)] {
            if !letters.iter().any(|(x, _)| *x == c) {
                letters.push((c, spin));
            }
        }
    }
    let range = |spin: bool| -> Vec<i64> { if spin { vec![1, -1] } else { (0..dim).collect() } };
    let adj: Vec<QMat<T>> = mats.iter().map(|m| m.adjoint()).collect();
    let mut out = BTreeMap::new();
    let mut val: BTreeMap<char, i64> = BTreeMap::new();
    fn rec<T: Scalar>(
        i: usize,
        letters: &[(char, bool)],
        range: &dyn Fn(bool) -> Vec<i64>,
        val: &mut BTreeMap<char, i64>,
        body: &mut dyn FnMut(&BTreeMap<char, i64>),
    ) {
        if i == letters.len() {
            body(val);
            return;
        }
        for v in range(letters[i].1) {
            val.insert(letters[i].0, v);
            rec::<T>(i + 1, letters, range, val, body);
        }
    }
    let mut body = |val: &BTreeMap<char, i64>| {
        let mut re = T::one();
        let mut im = T::zero();
        for f in factors {
            let m = if f.matrix > 0 { &mats[f.matrix as usize - 1] } else { &adj[(-f.matrix) as usize - 1] };
            let (a, b) = m.entry4(
                val[&f.rows.0] as usize,
                val[&f.rows.1] as usize,
                val[&f.spins.0] as i8,
                val[&f.spins.1] as i8,
            );
            let nr = re.clone() * a.clone() - im.clone() * b.clone();
            im = re * b + im * a;
            re = nr;
        }
        let key: Vec<i64> = free.iter().map(|c| val[c]).collect();
        let e = out.entry(key).or_insert((T::zero(), T::zero()));
        e.0 += re;
        e.1 += im;
    };
    rec::<T>(0, &letters, &range, &mut val, &mut body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{SignedDomain, SignedPermutation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pm(n: u32, s: &str) -> PreMap {
        PreMap::double(&SignedPermutation::parse_cycles(SignedDomain::new(n, true), s).unwrap()).unwrap()
    }

    fn rand_mats(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Vec<QMat<i128>> {
        (0..k)
            .map(|_| {
                QMat::from_fn(dim, dim, |_, _| {
                    Quat::from_i64s(rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(-3..=3), rng.gen_range(-3..=3))
                })
            })
            .collect()
    }

    fn to_q(m: &QMat<i128>) -> QMat<BigRational> {
        m.map(|x| BigRational::from_integer(BigInt::from(*x)))
    }

    #[test]
    fn single_matrix_re_tr() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = rand_mats(&mut rng, 1, 3);
        let p = pm(1, "(inf)(1)");
        let v = eval_contraction_exact(&p, &p, &a).unwrap();
        let want = to_q(&a[0]).ntr().unwrap().re();
        assert_eq!(v.as_scalar().unwrap(), Quat::real(want));
        let q = pm(1, "(inf,1)");
        assert_eq!(eval_contraction_exact(&q, &q, &a).unwrap(), to_q(&a[0]));
    }

    #[test]
    fn product_and_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = rand_mats(&mut rng, 2, 2);
        let p = pm(2, "(inf,1,-2)");
        let want = to_q(&a[0]).matmul(&to_q(&a[1]).adjoint());
        assert_eq!(eval_contraction_exact(&p, &p, &a).unwrap(), want);
    }

    #[test]
    fn diagram_agrees_with_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.gen_range(1..=5);
            let d = crate::bracket::random_diagram(&mut rng, n, 4);
            let mats = rand_mats(&mut rng, n as usize, 2);
            let (re, tr) = d.premaps();
            let c = eval_contraction_exact(&re, &tr, &mats).unwrap();
            let qm: Vec<QMat<BigRational>> = mats.iter().map(to_q).collect();
            assert_eq!(eval_bracket(&d, &qm).unwrap(), c, "{d}");
        }
    }

    fn int_q(m: &QMat<i128>) -> QMat<BigRational> {
        to_q(m)
    }

    #[test]
    fn first_display_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mats = rand_mats(&mut rng, 8, 2);
        let f = |m, r, s| EinsteinFactor::new(m, r, s);
        let factors = [
            f(1, "ab", "αβ"),
            f(2, "ca", "γγ"),
            f(3, "bd", "δε"),
            f(4, "ec", "βα"),
            f(5, "fg", "ζη"),
            f(6, "hh", "θζ"),
            f(-7, "gf", "ηθ"),
            f(-8, "de", "ει"),
        ];
        let sums = einstein_sum(&factors, &mats, &['δ', 'ι']);
        let re = pm(8, "(inf,3,-8)(4,1)(2)(5,-7,6)");
        let tr = pm(8, "(inf)(3,-8,4,2,1)(5,-7)(6)");
        let raw = contract_raw(&re, &tr, &mats).unwrap();
        assert_eq!((raw.re_cycles, raw.tr_cycles), (3, 3));
        let q = raw.sum.as_scalar().unwrap();
        for (k, v) in sums {
            assert_eq!(q.embed(k[0] as i8, k[1] as i8), v);
        }
        let d = crate::dsl::parse_labeled_diagram("tr(X3 X8* Re(X4 Re(X2) X1)) Re(tr(X5 X7* tr(X6)))").unwrap();
        let qm: Vec<QMat<BigRational>> = mats.iter().map(int_q).collect();
        assert_eq!(eval_bracket(&d, &qm).unwrap(), eval_contraction_exact(&re, &tr, &mats).unwrap());
    }

    #[test]
    fn second_display_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mats = rand_mats(&mut rng, 4, 3);
        let f = |m, r, s| EinsteinFactor::new(m, r, s);
        let factors = [f(1, "ab", "αβ"), f(2, "cb", "γδ"), f(3, "cd", "βα"), f(4, "da", "δγ")];
        let sums = einstein_sum(&factors, &mats, &[]);
        let re = pm(4, "(inf)(1,3)(2,4)");
        let tr = pm(4, "(inf)(1,-2,3,4)");
        let raw = contract_raw(&re, &tr, &mats).unwrap();
        assert_eq!((raw.re_cycles, raw.tr_cycles), (2, 1));
        let (v, im) = &sums[&vec![]];
        assert_eq!(*im, 0);
        assert_eq!(raw.sum.as_scalar().unwrap(), Quat::real(*v));
    }
}

