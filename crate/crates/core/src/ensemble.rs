//! Ensembles, their cumulant functions f(α) on premaps, and the manifest
//! format binding colors to ensembles.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::Value;

use crate::contraction::eval_contraction;
use crate::error::{Error, Result};
use crate::perm::{
    enumerate_alternating_premaps, enumerate_involution_premaps, enumerate_premaps, IntegerPartition, PreMap,
    SetPartition, SignedDomain, SignedPermutation, Sym,
};
use crate::poly::RatFn;
use crate::quaternion::QMat;
use crate::weingarten::{weingarten_table, Normalization, WeingartenTable};

/// Exact moments E[Re_π tr_π(X₁,…,Xₙ)] for premaps π on ±[n] (no ∞).
pub trait MomentOracle: Send + Sync {
    fn moment(&self, pi: &PreMap) -> Result<RatFn>;
}

#[derive(Clone)]
pub enum EnsembleKind {
    Ginibre,
    Gse,
    /// W = G*DG/N with G an M×N standard Gaussian matrix.
    Wishart { m: usize, d: QMat<BigRational> },
    HaarSymplectic,
    Identity,
    /// Cumulants computed from a moment oracle.
    Empirical(Arc<dyn MomentOracle>),
}

impl fmt::Debug for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Ginibre => "ginibre",
            EnsembleKind::Gse => "gse",
            EnsembleKind::Wishart { .. } => "wishart",
            EnsembleKind::HaarSymplectic => "haar",
            EnsembleKind::Identity => "identity",
            EnsembleKind::Empirical(_) => "empirical",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, EnsembleKind::Ginibre | EnsembleKind::Gse | EnsembleKind::Wishart { .. })
    }

    /// Premaps on ±S outside of which f vanishes.
    pub fn support(&self, domain: SignedDomain, positives: &[Sym]) -> Vec<PreMap> {
        match self {
            EnsembleKind::Ginibre => enumerate_involution_premaps(domain, positives, true),
            EnsembleKind::Gse => enumerate_involution_premaps(domain, positives, false),
            EnsembleKind::HaarSymplectic => enumerate_alternating_premaps(domain, positives),
            EnsembleKind::Identity => vec![PreMap::identity(domain, positives)],
            EnsembleKind::Wishart { .. } | EnsembleKind::Empirical(_) => enumerate_premaps(domain, positives),
        }
    }

    /// f(α) for a premap on ±S.
    pub fn f(&self, alpha: &PreMap) -> Result<CumulantValue> {
        Ok(match self {
            EnsembleKind::Ginibre => f_ginibre(alpha),
            EnsembleKind::Gse => f_gse(alpha),
            EnsembleKind::Wishart { m, d } => f_wishart(alpha, d, *m)?,
            EnsembleKind::HaarSymplectic => f_haar(alpha),
            EnsembleKind::Identity => f_identity(alpha),
            EnsembleKind::Empirical(o) => {
                let (compact, _) = compact(alpha);
                let n = compact.domain().n;
                let table = weingarten_table(2 * n, None)?;
                CumulantValue::General(cumulants_from_moments(o.as_ref(), &compact, &table)?)
            }
        })
    }
}

/// A value of f, kept structured so sums can be grouped before expansion.
#[derive(Clone, Debug, PartialEq)]
pub enum CumulantValue {
    Zero,
    /// coef · N^n_pow.
    Scalar { coef: BigRational, n_pow: i64 },
    /// Normalized Weingarten value wg(λ) for a table over `points` symbols.
    Wg { points: u32, lambda: IntegerPartition },
    General(RatFn),
}

impl CumulantValue {
    pub fn one() -> Self {
        CumulantValue::Scalar { coef: BigRational::one(), n_pow: 0 }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CumulantValue::Zero => true,
            CumulantValue::Scalar { coef, .. } => coef.is_zero(),
            CumulantValue::General(r) => r.is_zero(),
            CumulantValue::Wg { .. } => false,
        }
    }

    /// Expand to a rational function of N.
    pub fn to_ratfn(&self, tables: &mut WgTables) -> Result<RatFn> {
        Ok(match self {
            CumulantValue::Zero => RatFn::zero(),
            CumulantValue::Scalar { coef, n_pow } => RatFn::monomial(coef, *n_pow),
            CumulantValue::Wg { points, lambda } => tables.wg(*points, lambda)?,
            CumulantValue::General(r) => r.clone(),
        })
    }
}

impl fmt::Display for CumulantValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CumulantValue::Zero => write!(f, "0"),
            CumulantValue::Scalar { coef, n_pow } => write!(f, "{}", RatFn::monomial(coef, *n_pow)),
            CumulantValue::Wg { lambda, .. } => write!(f, "wg({lambda})"),
            CumulantValue::General(r) => write!(f, "{r}"),
        }
    }
}

/// Cache of symbolic Weingarten tables under the operative normalization.
#[derive(Default)]
pub struct WgTables {
    tables: BTreeMap<u32, WeingartenTable>,
}

impl WgTables {
    pub fn table(&mut self, points: u32) -> Result<&WeingartenTable> {
        if !self.tables.contains_key(&points) {
            self.tables.insert(points, weingarten_table(points, None)?);
        }
        Ok(&self.tables[&points])
    }

    pub fn wg(&mut self, points: u32, lambda: &IntegerPartition) -> Result<RatFn> {
        self.table(points)?
            .normalized(lambda, Normalization::Operative)
            .ok_or_else(|| Error::Malformed(format!("no Weingarten entry for {lambda}")))
    }
}

/// 1 on alternating fixed-point-free involutions, else 0.
pub fn f_ginibre(alpha: &PreMap) -> CumulantValue {
    let p = alpha.perm();
    if p.is_involution() && p.is_fixed_point_free() && alpha.is_alternating() {
        CumulantValue::one()
    } else {
        CumulantValue::Zero
    }
}

/// 1 on fixed-point-free involutions, else 0.
pub fn f_gse(alpha: &PreMap) -> CumulantValue {
    let p = alpha.perm();
    if p.is_involution() && p.is_fixed_point_free() {
        CumulantValue::one()
    } else {
        CumulantValue::Zero
    }
}

/// wg(Λ(FD(α))) on alternating premaps, else 0.
pub fn f_haar(alpha: &PreMap) -> CumulantValue {
    if !alpha.is_alternating() || alpha.perm().support_len() == 0 {
        return CumulantValue::Zero;
    }
    CumulantValue::Wg { points: alpha.base().len() as u32, lambda: alpha.lambda() }
}

/// 1 on the identity premap, else 0.
pub fn f_identity(alpha: &PreMap) -> CumulantValue {
    if alpha.is_identity() {
        CumulantValue::one()
    } else {
        CumulantValue::Zero
    }
}

/// Re_{FD(α⁻¹)} tr_{FD(α⁻¹)}(D,…,D), traces normalized by N: for an M×M D
/// this is (M/N)^{#(α)/2} times the trace normalized by M.
pub fn f_wishart(alpha: &PreMap, d: &QMat<BigRational>, m: usize) -> Result<CumulantValue> {
    if d.rows() != m || d.cols() != m {
        return Err(Error::Malformed(format!("Wishart D is {}×{}, expected {m}×{m}", d.rows(), d.cols())));
    }
    let (compact, _) = compact(alpha);
    let inv = compact.inverse();
    let mats = vec![d.clone(); compact.domain().n as usize];
    let v = eval_contraction(&inv, &inv, &mats)?;
    let c = compact.pair_count() as i64;
    let mm = BigRational::from_integer(BigInt::from(m)).pow(c as i32);
    Ok(CumulantValue::Scalar { coef: v.get(0, 0).a.clone() * mm, n_pow: -c })
}

/// Relabel a premap on ±S to ±[|S|] (no ∞), keeping the order of S.
pub fn compact(alpha: &PreMap) -> (PreMap, Vec<Sym>) {
    let base = alpha.base();
    let d = SignedDomain::new(base.len() as u32, false);
    let f = |s: Sym| {
        let i = base.iter().position(|&b| b == s.abs()).unwrap() as Sym + 1;
        if s < 0 { -i } else { i }
    };
    let p = alpha.perm().relabel(d, f);
    (PreMap::new(p).expect("relabelled premap"), base)
}

/// Pairing δα of ±S for a premap α (an involution since α⁻¹ = δαδ).
fn delta_of(alpha: &PreMap) -> SignedPermutation {
    let d = alpha.domain();
    let sup = alpha.perm().support();
    SignedPermutation::delta(d).restrict(&sup).compose(alpha.perm())
}

/// Λ of the join of the pairings δα and δπ.
fn join_type(alpha: &PreMap, pi: &PreMap) -> Result<IntegerPartition> {
    let a: SetPartition = delta_of(alpha).orbits();
    let b: SetPartition = delta_of(pi).orbits();
    let j = a.join(&b)?;
    Ok(IntegerPartition::new(j.blocks().iter().map(|bl| bl.len() as u32 / 2).collect()))
}

/// Exponent data for one (α, π) term: χ(α,π) = (#α + #π + #(α⁻¹π))/2 − n.
fn chi_alpha_pi(alpha: &PreMap, pi: &PreMap) -> i64 {
    let n = alpha.base().len() as i64;
    let prod = alpha.perm().inverse().compose(pi.perm()).cycle_count();
    (alpha.cycle_count() + pi.cycle_count() + prod) as i64 / 2 - n
}

/// Normalized matrix cumulant f(α) = Σ_π (−2N)^{χ(α,π)−#(α)} wg(δα,δπ) E[Re_π tr_π(X)],
/// with α, π on ±[n] and `table` the Weingarten table over 2n points.
pub fn cumulants_from_moments(oracle: &dyn MomentOracle, alpha: &PreMap, table: &WeingartenTable) -> Result<RatFn> {
    let d = alpha.domain();
    if d.has_infinity {
        return Err(Error::Malformed("cumulants are defined without ∞".into()));
    }
    let pos = d.positives();
    if table.n != 2 * pos.len() as u32 {
        return Err(Error::Malformed("Weingarten table degree does not match".into()));
    }
    let mut total = RatFn::zero();
    for pi in enumerate_premaps(d, &pos) {
        let m = oracle.moment(&pi)?;
        if m.is_zero() {
            continue;
        }
        let lam = join_type(alpha, &pi)?;
        let wg = table
            .normalized(&lam, Normalization::Operative)
            .ok_or_else(|| Error::Malformed(format!("missing wg({lam})")))?;
        total = &total + &(&(&minus_two_n_pow(chi_alpha_pi(alpha, &pi) - alpha.cycle_count() as i64) * &wg) * &m);
    }
    Ok(total)
}

/// Several colors in general position: f(α) = Σ_{π=∏π_c} (−2N)^{χ(α,π)−#(α)} ∏_c wg(δα_c,δπ_c) E[Re_π tr_π(X)].
/// `colors[k−1]` is the color of symbol k. Returns 0 unless α preserves colors.
pub fn mixed_general_position_f(colors: &[u32], alpha: &PreMap, oracle: &dyn MomentOracle) -> Result<RatFn> {
    let d = alpha.domain();
    let n = d.n as usize;
    if d.has_infinity || colors.len() != n {
        return Err(Error::Malformed("colors must cover ±[n] without ∞".into()));
    }
    let color = |s: Sym| colors[s.unsigned_abs() as usize - 1];
    if d.all().iter().any(|&s| color(s) != color(alpha.apply(s))) {
        return Ok(RatFn::zero());
    }
    let mut classes: BTreeMap<u32, Vec<Sym>> = BTreeMap::new();
    for k in 1..=n as Sym {
        classes.entry(color(k)).or_default().push(k);
    }
    let parts: Vec<(Vec<Sym>, Vec<PreMap>, WeingartenTable)> = classes
        .values()
        .map(|s| Ok((s.clone(), enumerate_premaps(d, s), weingarten_table(2 * s.len() as u32, None)?)))
        .collect::<Result<_>>()?;
    let alpha_parts: Vec<PreMap> = parts
        .iter()
        .map(|(s, _, _)| {
            let sup: Vec<Sym> = s.iter().flat_map(|&k| [k, -k]).collect();
            PreMap::new(alpha.perm().restrict(&sup))
        })
        .collect::<Result<_>>()?;
    let mut total = RatFn::zero();
    let mut idx = vec![0usize; parts.len()];
    loop {
        let mut pi = SignedPermutation::identity_on(d, &[]);
        let mut wgs = RatFn::one();
        for (c, (_, list, table)) in parts.iter().enumerate() {
            let p = &list[idx[c]];
            pi = pi.compose(p.perm());
            let lam = join_type(&alpha_parts[c], p)?;
            let w = table
                .normalized(&lam, Normalization::Operative)
                .ok_or_else(|| Error::Malformed(format!("missing wg({lam})")))?;
            wgs = &wgs * &w;
        }
        let pi = PreMap::new(pi)?;
        let m = oracle.moment(&pi)?;
        if !m.is_zero() {
            let e = chi_alpha_pi(alpha, &pi) - alpha.cycle_count() as i64;
            total = &total + &(&(&minus_two_n_pow(e) * &wgs) * &m);
        }
        let mut c = 0;
        while c < idx.len() {
            idx[c] += 1;
            if idx[c] < parts[c].1.len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
        if c == idx.len() {
            break;
        }
    }
    Ok(total)
}

/// (−2N)^e as a rational function.
pub fn minus_two_n_pow(e: i64) -> RatFn {
    let two = BigRational::from_integer(BigInt::from(2));
    let mut c = two.pow(e.unsigned_abs() as i32);
    if e < 0 {
        c = c.recip();
    }
    if e % 2 != 0 {
        c = -c;
    }
    RatFn::monomial(&c, e)
}

/// Colors bound to ensembles, and fixed matrices bound to `Y` labels.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    pub ensembles: BTreeMap<u32, EnsembleKind>,
    pub fixed: BTreeMap<u32, QMat<BigRational>>,
}

impl Manifest {
    /// Parse `[{"color":1,"kind":"wishart","M":4,"D":"identity"|matrix}, {"y":1,"matrix":…}, …]`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: String| Error::Manifest(m);
        let items = v.as_array().ok_or_else(|| bad("expected an array of entries".into()))?;
        let mut out = Manifest::default();
        for (i, it) in items.iter().enumerate() {
            let obj = it.as_object().ok_or_else(|| bad(format!("entry {i} is not an object")))?;
            if let Some(y) = obj.get("y") {
                let y = y.as_u64().filter(|&y| y > 0).ok_or_else(|| bad(format!("entry {i}: bad y label")))?;
                let m = obj.get("matrix").ok_or_else(|| bad(format!("entry {i}: missing matrix")))?;
                let m = QMat::from_json(m).map_err(|e| bad(format!("entry {i}: {e}")))?;
                if !m.is_square() {
                    return Err(bad(format!("entry {i}: matrix not square")));
                }
                if out.fixed.insert(y as u32, m).is_some() {
                    return Err(bad(format!("Y{y} bound twice")));
                }
                continue;
            }
            let color = obj
                .get("color")
                .and_then(Value::as_u64)
                .filter(|&c| c > 0)
                .ok_or_else(|| bad(format!("entry {i}: missing positive color")))? as u32;
            let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| bad(format!("entry {i}: missing kind")))?;
            let k = match kind.to_ascii_lowercase().as_str() {
                "ginibre" => EnsembleKind::Ginibre,
                "gse" => EnsembleKind::Gse,
                "haar" | "haar-symplectic" => EnsembleKind::HaarSymplectic,
                "identity" => EnsembleKind::Identity,
                "wishart" => {
                    let m = obj.get("M").and_then(Value::as_u64).filter(|&m| m > 0);
                    let d = match obj.get("D") {
                        None => None,
                        Some(Value::String(s)) if s == "identity" => None,
                        Some(dv) => Some(QMat::from_json(dv).map_err(|e| bad(format!("entry {i}: {e}")))?),
                    };
                    let m = match (m, &d) {
                        (Some(m), Some(d)) if d.rows() != m as usize || !d.is_square() => {
                            return Err(bad(format!("entry {i}: D must be {m}×{m}")))
                        }
                        (Some(m), _) => m as usize,
                        (None, Some(d)) if d.is_square() => d.rows(),
                        _ => return Err(bad(format!("entry {i}: Wishart needs M or a square D"))),
                    };
                    EnsembleKind::Wishart { m, d: d.unwrap_or_else(|| QMat::identity(m)) }
                }
                other => return Err(bad(format!("entry {i}: unknown kind '{other}'"))),
            };
            if out.ensembles.insert(color, k).is_some() {
                return Err(bad(format!("color {color} bound twice")));
            }
        }
        Ok(out)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        Self::from_json(&v)
    }

    /// Ensemble of a color, with color 0 always the identity.
    pub fn ensemble(&self, color: u32) -> Option<EnsembleKind> {
        if color == crate::dsl::IDENTITY_COLOR {
            return Some(EnsembleKind::Identity);
        }
        self.ensembles.get(&color).cloned()
    }

    /// Single-color manifest.
    pub fn single(color: u32, kind: EnsembleKind) -> Self {
        let mut m = Manifest::default();
        m.ensembles.insert(color, kind);
        m
    }
}
