//! Exact expectations by brute force over matrix entries: Wick's formula for
//! Gaussian-built matrices and the projection onto invariant pairing tensors
//! (through an exactly inverted Gram matrix) for Haar symplectic matrices.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
#[cfg(feature = "rayon")]
use rayon::prelude::*;

use crate::contraction::plan;
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::perm::PreMap;
use crate::quaternion::{QMat, Quat};
use crate::weingarten::gauss_solve;

/// Binding of one matrix slot: A_k = X^{ε} Y with X drawn from `kind`.
#[derive(Clone, Debug)]
pub struct OracleSlot {
    /// Slots sharing a color share one random matrix.
    pub color: u32,
    pub kind: EnsembleKind,
    pub eps: i8,
    /// Y already adjointed if starred; `None` is the identity.
    pub y: Option<QMat<BigRational>>,
}

#[derive(Clone, Debug)]
enum Atom {
    Gauss { id: u32, r: usize, c: usize, conj: bool },
    Haar { id: u32, r: usize, c: usize, conj: bool },
    Fixed(Quat<i128>),
}

#[derive(Clone, Debug)]
struct Term {
    coef: BigRational,
    atoms: Vec<Atom>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer quaternion matrix and the common denominator it was scaled by.
fn integer_scaled(m: &QMat<BigRational>) -> (QMat<i128>, BigInt) {
    let mut l = BigInt::one();
    for q in m.entries() {
        for x in [&q.a, &q.b, &q.c, &q.d] {
            l = l.lcm(x.denom());
        }
    }
    let lr = BigRational::from_integer(l.clone());
    let to = |x: &BigRational| -> i128 {
        let v = (x * &lr).to_integer();
        i128::try_from(v).expect("matrix entry too large for the exact oracle")
    };
    (m.map(to), l)
}

fn conj_term(t: &Term) -> Term {
    let atoms = t
        .atoms
        .iter()
        .rev()
        .map(|a| match a {
            Atom::Gauss { id, r, c, conj } => Atom::Gauss { id: *id, r: *r, c: *c, conj: !conj },
            Atom::Haar { id, r, c, conj } => Atom::Haar { id: *id, r: *r, c: *c, conj: !conj },
            Atom::Fixed(q) => Atom::Fixed(q.conj()),
        })
        .collect();
    Term { coef: t.coef.clone(), atoms }
}

struct SlotData {
    color: u32,
    kind: EnsembleKind,
    eps: i8,
    y: Option<(QMat<i128>, BigRational)>,
    d: Option<(QMat<i128>, BigRational)>,
}

impl SlotData {
    /// X[r, c] as a sum of atom strings.
    fn x_entry(&self, r: usize, c: usize, dim: usize) -> Result<Vec<Term>> {
        let id = self.color;
        let one = BigRational::one();
        Ok(match &self.kind {
            EnsembleKind::Ginibre => vec![Term { coef: one, atoms: vec![Atom::Gauss { id, r, c, conj: false }] }],
            EnsembleKind::Gse => vec![
                Term { coef: one.clone(), atoms: vec![Atom::Gauss { id, r, c, conj: false }] },
                Term { coef: one, atoms: vec![Atom::Gauss { id, r: c, c: r, conj: true }] },
            ],
            EnsembleKind::Wishart { m, .. } => {
                let (d, inv_l) = self.d.as_ref().unwrap();
                let coef = inv_l / BigRational::from_integer(BigInt::from(dim));
                let mut out = Vec::new();
                for a in 0..*m {
                    for b in 0..*m {
                        let q = d.get(a, b);
                        if q.is_zero() {
                            continue;
                        }
                        out.push(Term {
                            coef: coef.clone(),
                            atoms: vec![
                                Atom::Gauss { id, r: a, c: r, conj: true },
                                Atom::Fixed(q.clone()),
                                Atom::Gauss { id, r: b, c, conj: false },
                            ],
                        });
                    }
                }
                out
            }
            EnsembleKind::HaarSymplectic => vec![Term { coef: one, atoms: vec![Atom::Haar { id, r, c, conj: false }] }],
            EnsembleKind::Identity => {
                if r == c {
                    vec![Term { coef: one, atoms: vec![] }]
                } else {
                    vec![]
                }
            }
            EnsembleKind::Empirical(_) => return Err(Error::Unsupported("exact oracle for empirical ensembles".into())),
        })
    }

    /// A[r, c] = Σ_v X^{ε}[r, v] Y[v, c].
    fn entry(&self, r: usize, c: usize, dim: usize) -> Result<Vec<Term>> {
        let xe = |r: usize, c: usize| -> Result<Vec<Term>> {
            if self.eps < 0 {
                Ok(self.x_entry(c, r, dim)?.iter().map(conj_term).collect())
            } else {
                self.x_entry(r, c, dim)
            }
        };
        let Some((y, inv_l)) = &self.y else {
            return xe(r, c);
        };
        let mut out = Vec::new();
        for v in 0..dim {
            let q = y.get(v, c);
            if q.is_zero() {
                continue;
            }
            for mut t in xe(r, v)? {
                t.coef = &t.coef * inv_l;
                t.atoms.push(Atom::Fixed(q.clone()));
                out.push(t);
            }
        }
        Ok(out)
    }
}

fn basis(comp: usize, negate: bool) -> Quat<i128> {
    let s = if negate && comp != 0 { -1 } else { 1 };
    match comp {
        0 => Quat::new(s, 0, 0, 0),
        1 => Quat::new(0, s, 0, 0),
        2 => Quat::new(0, 0, s, 0),
        _ => Quat::new(0, 0, 0, s),
    }
}

/// ∏_{finite cycles} 2·Re(P_c) · P_∞ for per-atom component choices.
fn cycle_value(cycles: &[Vec<Atom>], inf: bool, comp_of: &[usize]) -> Quat<i128> {
    let mut real: i128 = 1;
    let mut head = Quat::new(1, 0, 0, 0);
    let mut g = 0;
    for (ci, cyc) in cycles.iter().enumerate() {
        let mut q = Quat::new(1i128, 0, 0, 0);
        for a in cyc {
            match a {
                Atom::Fixed(f) => q = &q * f,
                Atom::Gauss { conj, .. } | Atom::Haar { conj, .. } => {
                    q = &q * &basis(comp_of[g], *conj);
                    g += 1;
                }
            }
        }
        if ci == 0 && inf {
            head = q;
        } else {
            real *= 2 * q.a;
        }
    }
    head.scale(&real)
}

/// Wick sum over pairings of equal entries and shared components; the
/// variance factors are applied by the caller.
fn gauss_sum(cycles: &[Vec<Atom>], inf: bool) -> Quat<i128> {
    let keys: Vec<(u32, usize, usize)> = cycles
        .iter()
        .flatten()
        .filter_map(|a| match a {
            Atom::Gauss { id, r, c, .. } => Some((*id, *r, *c)),
            _ => None,
        })
        .collect();
    let h = keys.len();
    let mut total = Quat::zero();
    if h % 2 == 1 {
        return total;
    }
    let mut pair_of = vec![usize::MAX; h];
    let mut comp_of = vec![0usize; h];
    fn matchings(
        keys: &[(u32, usize, usize)],
        pair_of: &mut Vec<usize>,
        next: usize,
        f: &mut dyn FnMut(&[usize]),
    ) {
        let Some(i) = (0..keys.len()).find(|&i| pair_of[i] == usize::MAX) else {
            f(pair_of);
            return;
        };
        for j in i + 1..keys.len() {
            if pair_of[j] == usize::MAX && keys[j] == keys[i] {
                pair_of[i] = next;
                pair_of[j] = next;
                matchings(keys, pair_of, next + 1, f);
                pair_of[i] = usize::MAX;
                pair_of[j] = usize::MAX;
            }
        }
    }
    let p = h / 2;
    matchings(&keys, &mut pair_of, 0, &mut |pairs| {
        for code in 0..(1usize << (2 * p)) {
            for g in 0..h {
                comp_of[g] = (code >> (2 * pairs[g])) & 3;
            }
            total += cycle_value(cycles, inf, &comp_of);
        }
    });
    total
}

/// E[∏ u_{x_k y_k}] for the complex 2N×2N form of a Haar symplectic matrix,
/// as Σ_{i,j} ⟨v_i, x⟩ W_ij ⟨v_j, y⟩ over a basis of pairing tensors.
pub struct HaarMoments {
    dim: usize,
    bases: BTreeMap<usize, (Vec<Vec<(usize, usize)>>, Vec<Vec<BigRational>>)>,
}

type Idx = (usize, i8);

fn all_pairings(h: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let a = rest[0];
        for k in 1..rest.len() {
            let b = rest[k];
            let others: Vec<usize> = rest[1..].iter().copied().filter(|&x| x != b).collect();
            cur.push((a, b));
            rec(&others, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&(0..h).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    out
}

/// Coefficient of e_z in the tensor of pairing π built from J = ⊕[[0,1],[−1,0]].
fn pairing_coef(pi: &[(usize, usize)], z: &[Idx]) -> i64 {
    let mut v = 1;
    for &(a, b) in pi {
        if z[a].0 != z[b].0 || z[b].1 != -z[a].1 {
            return 0;
        }
        v *= z[a].1 as i64;
    }
    v
}

impl HaarMoments {
    pub fn new(dim: usize) -> Self {
        HaarMoments { dim, bases: BTreeMap::new() }
    }

    fn gram_entry(&self, p: &[(usize, usize)], q: &[(usize, usize)], h: usize) -> BigRational {
        let k = p.len();
        let choices = 2 * self.dim;
        let mut total = 0i64;
        let mut z = vec![(0usize, 1i8); h];
        for code in 0..choices.pow(k as u32) {
            let mut c = code;
            for &(a, b) in p {
                let x = c % choices;
                c /= choices;
                let eta = if x % 2 == 0 { 1 } else { -1 };
                z[a] = (x / 2, eta);
                z[b] = (x / 2, -eta);
            }
            total += pairing_coef(p, &z) * pairing_coef(q, &z);
        }
        BigRational::from_integer(BigInt::from(total))
    }

    /// Independent pairing tensors and the inverse of their Gram matrix.
    pub fn prepare(&mut self, h: usize) -> Result<()> {
        if self.bases.contains_key(&h) || h % 2 == 1 {
            return Ok(());
        }
        let mut basis: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut g: Vec<Vec<BigRational>> = Vec::new();
        for p in all_pairings(h) {
            let row: Vec<BigRational> = basis.iter().map(|q| self.gram_entry(&p, q, h)).collect();
            let diag = self.gram_entry(&p, &p, h);
            let mut trial = g.clone();
            for (i, r) in trial.iter_mut().enumerate() {
                r.push(row[i].clone());
            }
            let mut last = row.clone();
            last.push(diag);
            trial.push(last);
            let n = trial.len();
            if gauss_solve(trial.clone(), vec![BigRational::zero(); n]).is_some() {
                g = trial;
                basis.push(p);
            }
        }
        let n = basis.len();
        let mut w = vec![vec![BigRational::zero(); n]; n];
        for j in 0..n {
            let mut e = vec![BigRational::zero(); n];
            e[j] = BigRational::one();
            let col = gauss_solve(g.clone(), e).ok_or(Error::SingularGram(self.dim as u64))?;
            for i in 0..n {
                w[i][j] = col[i].clone();
            }
        }
        self.bases.insert(h, (basis, w));
        Ok(())
    }

    /// E[∏_k u_{x_k, y_k}]; `prepare(h)` must have been called for h = |x|.
    pub fn moment(&self, x: &[Idx], y: &[Idx]) -> BigRational {
        let h = x.len();
        if h % 2 == 1 {
            return BigRational::zero();
        }
        if h == 0 {
            return BigRational::one();
        }
        let (basis, w) = &self.bases[&h];
        let cx: Vec<i64> = basis.iter().map(|p| pairing_coef(p, x)).collect();
        let cy: Vec<i64> = basis.iter().map(|p| pairing_coef(p, y)).collect();
        let mut total = BigRational::zero();
        for (i, &a) in cx.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in cy.iter().enumerate() {
                if b != 0 {
                    total += &w[i][j] * BigRational::from_integer(BigInt::from(a * b));
                }
            }
        }
        total
    }
}

/// Quaternion components as combinations of complex entries u_{(r,η),(c,θ)},
/// as Gaussian integers to be halved (conjugation signs are applied to the
/// quaternion basis instead): a = (u₊₊+u₋₋)/2, b = −i(u₊₊−u₋₋)/2,
/// c = (u₊₋−u₋₊)/2, d = −i(u₊₋+u₋₊)/2.
fn component_terms(comp: usize) -> [((i8, i8), (i64, i64)); 2] {
    match comp {
        0 => [((1, 1), (1, 0)), ((-1, -1), (1, 0))],
        1 => [((1, 1), (0, -1)), ((-1, -1), (0, 1))],
        2 => [((1, -1), (1, 0)), ((-1, 1), (-1, 0))],
        _ => [((1, -1), (0, -1)), ((-1, 1), (0, -1))],
    }
}

/// Haar sum as (real part, imaginary part) of a complex-quaternion value.
fn haar_sum(cycles: &[Vec<Atom>], inf: bool, moments: &HaarMoments, memo: &mut HashMap<Vec<(u32, Idx, Idx)>, BigRational>) -> (Quat<BigRational>, Quat<BigRational>) {
    let atoms: Vec<(u32, usize, usize)> = cycles
        .iter()
        .flatten()
        .filter_map(|a| match a {
            Atom::Haar { id, r, c, .. } => Some((*id, *r, *c)),
            _ => None,
        })
        .collect();
    let h = atoms.len();
    let mut re = Quat::zero();
    let mut im = Quat::zero();
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for a in &atoms {
        *counts.entry(a.0).or_default() += 1;
    }
    if counts.values().any(|&c| c % 2 == 1) {
        return (re, im);
    }
    let mut comp_of = vec![0usize; h];
    let scale = BigRational::new(BigInt::one(), BigInt::from(2).pow(h as u32));
    for code in 0..(1usize << (2 * h)) {
        for (g, c) in comp_of.iter_mut().enumerate() {
            *c = (code >> (2 * g)) & 3;
        }
        let q = cycle_value(cycles, inf, &comp_of);
        if q.is_zero() {
            continue;
        }
        let (mut sr, mut si) = (BigRational::zero(), BigRational::zero());
        for bits in 0..(1usize << h) {
            let (mut cr, mut ci) = (1i64, 0i64);
            let mut key: Vec<(u32, Idx, Idx)> = Vec::with_capacity(h);
            for (g, &(id, r, c)) in atoms.iter().enumerate() {
                let ((eta, theta), (zr, zi)) = component_terms(comp_of[g])[(bits >> g) & 1];
                (cr, ci) = (cr * zr - ci * zi, cr * zi + ci * zr);
                key.push((id, (r, eta), (c, theta)));
            }
            key.sort();
            let m = memo
                .entry(key)
                .or_insert_with_key(|key| {
                    let mut v = BigRational::one();
                    for id in counts.keys() {
                        let (x, y): (Vec<Idx>, Vec<Idx>) = key.iter().filter(|k| k.0 == *id).map(|k| (k.1, k.2)).unzip();
                        v *= moments.moment(&x, &y);
                        if v.is_zero() {
                            break;
                        }
                    }
                    v
                })
                .clone();
            if m.is_zero() {
                continue;
            }
            sr += &m * BigRational::from_integer(BigInt::from(cr));
            si += &m * BigRational::from_integer(BigInt::from(ci));
        }
        let qr = q.map(|x| BigRational::from_integer(BigInt::from(*x)));
        re += qr.scale(&(&sr * &scale));
        im += qr.scale(&(&si * &scale));
    }
    (re, im)
}

/// Exact E[Re_{φ_Re} tr_{φ_tr}(A₁,…,Aₙ)] with A_k = X_k^{ε_k} Y_k at matrix
/// size `dim`. Gaussian-built and Haar colors cannot be mixed in one call.
pub fn exact_expectation(phi_re: &PreMap, phi_tr: &PreMap, slots: &[OracleSlot], dim: usize, cap: u128) -> Result<QMat<BigRational>> {
    let p = plan(phi_re, phi_tr, slots.len())?;
    let has_gauss = slots.iter().any(|s| s.kind.is_gaussian());
    let has_haar = slots.iter().any(|s| matches!(s.kind, EnsembleKind::HaarSymplectic));
    if has_gauss && has_haar {
        return Err(Error::Unsupported("exact oracle mixing Gaussian and Haar colors".into()));
    }
    let mut var: BTreeMap<u32, BigRational> = BTreeMap::new();
    let mut data = Vec::with_capacity(slots.len());
    for s in slots {
        let v = match &s.kind {
            EnsembleKind::Ginibre => Some(rat(1, 4 * dim as i64)),
            EnsembleKind::Gse => Some(rat(1, 8 * dim as i64)),
            EnsembleKind::Wishart { .. } => Some(rat(1, 4)),
            _ => None,
        };
        if let Some(v) = v {
            var.insert(s.color, v);
        }
        let scaled = |m: &QMat<BigRational>| {
            let (q, l) = integer_scaled(m);
            (q, BigRational::new(BigInt::one(), l))
        };
        if let Some(y) = &s.y {
            if y.rows() != dim || y.cols() != dim {
                return Err(Error::Malformed(format!("Y is {}×{}, expected {dim}×{dim}", y.rows(), y.cols())));
            }
        }
        data.push(SlotData {
            color: s.color,
            kind: s.kind.clone(),
            eps: s.eps,
            y: s.y.as_ref().map(scaled),
            d: match &s.kind {
                EnsembleKind::Wishart { d, .. } => Some(scaled(d)),
                _ => None,
            },
        });
    }
    let per_slot: u128 = data
        .iter()
        .map(|s| {
            let x: u128 = match &s.kind {
                EnsembleKind::Wishart { m, .. } => (*m as u128).pow(2),
                EnsembleKind::Gse => 2,
                _ => 1,
            };
            x * if s.y.is_some() { dim as u128 } else { 1 }
        })
        .product();
    let assignments = (dim as u128).checked_pow(p.nvars as u32).unwrap_or(u128::MAX);
    let needed = assignments.saturating_mul(per_slot);
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let mut haar = HaarMoments::new(dim);
    if has_haar {
        let mut per_color: BTreeMap<u32, usize> = BTreeMap::new();
        for s in slots.iter().filter(|s| matches!(s.kind, EnsembleKind::HaarSymplectic)) {
            *per_color.entry(s.color).or_default() += 1;
        }
        for &h in per_color.values() {
            haar.prepare(h)?;
        }
    }
    let inf = p.inf_cycle;
    let eval_assignment = |code: u128, memo: &mut HashMap<Vec<(u32, Idx, Idx)>, BigRational>| -> Result<(usize, usize, Quat<BigRational>, Quat<BigRational>)> {
        let mut idx = vec![0usize; p.nvars];
        let mut c = code;
        for v in idx.iter_mut() {
            *v = (c % dim as u128) as usize;
            c /= dim as u128;
        }
        let (oi, oj) = p.out.map_or((0, 0), |(r, c)| (idx[r], idx[c]));
        let mut slot_terms: Vec<Vec<Vec<Term>>> = Vec::new();
        for cyc in &p.re_cycles {
            let mut ts = Vec::new();
            for &(k, conj) in cyc {
                let t = data[k].entry(idx[p.row[k]], idx[p.col[k]], dim)?;
                ts.push(if conj { t.iter().map(conj_term).collect() } else { t });
            }
            slot_terms.push(ts);
        }
        let flat: Vec<(usize, &Vec<Term>)> =
            slot_terms.iter().enumerate().flat_map(|(ci, ts)| ts.iter().map(move |t| (ci, t))).collect();
        let (mut re, mut im) = (Quat::zero(), Quat::zero());
        if flat.iter().any(|(_, t)| t.is_empty()) {
            return Ok((oi, oj, re, im));
        }
        let mut choice = vec![0usize; flat.len()];
        loop {
            let mut cycles: Vec<Vec<Atom>> = vec![Vec::new(); slot_terms.len()];
            let mut coef = BigRational::one();
            for (i, (ci, ts)) in flat.iter().enumerate() {
                let t = &ts[choice[i]];
                coef *= &t.coef;
                cycles[*ci].extend(t.atoms.iter().cloned());
            }
            if has_haar {
                let (r, i) = haar_sum(&cycles, inf, &haar, memo);
                re += r.scale(&coef);
                im += i.scale(&coef);
            } else {
                let q = gauss_sum(&cycles, inf);
                if !q.is_zero() {
                    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
                    for a in cycles.iter().flatten() {
                        if let Atom::Gauss { id, .. } = a {
                            *counts.entry(*id).or_default() += 1;
                        }
                    }
                    let mut w = coef;
                    for (id, c) in counts {
                        w *= num_traits::pow(var[&id].clone(), c as usize / 2);
                    }
                    re += q.map(|x| BigRational::from_integer(BigInt::from(*x))).scale(&w);
                }
            }
            let mut pos = 0;
            while pos < choice.len() {
                choice[pos] += 1;
                if choice[pos] < flat[pos].1.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos == choice.len() {
                break;
            }
        }
        Ok((oi, oj, re, im))
    };
    let parts: Vec<(usize, usize, Quat<BigRational>, Quat<BigRational>)> = crate::if_rayon!(
        (0..assignments as u64)
            .into_par_iter()
            .map_init(HashMap::new, |memo, code| eval_assignment(code as u128, memo))
            .collect::<Result<Vec<_>>>()?,
        {
            let mut memo = HashMap::new();
            (0..assignments as u64).map(|code| eval_assignment(code as u128, &mut memo)).collect::<Result<Vec<_>>>()?
        }
    );
    let size = if p.out.is_some() { dim } else { 1 };
    let mut re_m: QMat<BigRational> = QMat::zeros(size, size);
    let mut im_m: QMat<BigRational> = QMat::zeros(size, size);
    for (i, j, r, m) in parts {
        let cur = re_m.get(i, j).clone();
        re_m.set(i, j, cur + r);
        let cur = im_m.get(i, j).clone();
        im_m.set(i, j, cur + m);
    }
    if im_m.entries().iter().any(|q| !q.is_zero()) {
        return Err(Error::Malformed("complex residue in Haar expectation".into()));
    }
    let norm = BigRational::from_integer(BigInt::from(2).pow(p.re_count) * BigInt::from(dim).pow(p.tr_count));
    let inv = BigRational::one() / norm;
    let mut out = re_m.scale(&inv);
    if p.out.is_none() {
        let v = out.get(0, 0).a.clone();
        out.set(0, 0, Quat::real(v));
    }
    Ok(out)
}

/// Gaussian-only exact expectation by Wick's formula.
pub fn wick_exact_gaussian(phi_re: &PreMap, phi_tr: &PreMap, slots: &[OracleSlot], dim: usize, cap: u128) -> Result<QMat<BigRational>> {
    if slots.iter().any(|s| !(s.kind.is_gaussian() || matches!(s.kind, EnsembleKind::Identity))) {
        return Err(Error::Unsupported("Wick oracle needs Gaussian-built colors".into()));
    }
    exact_expectation(phi_re, phi_tr, slots, dim, cap)
}

/// Haar-only exact expectation from the invariant-tensor projection.
pub fn haar_direct(phi_re: &PreMap, phi_tr: &PreMap, slots: &[OracleSlot], dim: usize, cap: u128) -> Result<QMat<BigRational>> {
    if slots.iter().any(|s| !matches!(s.kind, EnsembleKind::HaarSymplectic | EnsembleKind::Identity)) {
        return Err(Error::Unsupported("direct Haar oracle needs Haar colors".into()));
    }
    exact_expectation(phi_re, phi_tr, slots, dim, cap)
}
