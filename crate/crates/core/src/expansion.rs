//! Topological expansion of E[Re_{φ_Re} tr_{φ_tr}(X₁^{(ε₁)}Y₁, …, Xₙ^{(εₙ)}Yₙ)]
//! as a sum over per-color premaps α weighted by
//! (−2)^{χ(φ_Re,α')−2#(φ_Re)} N^{χ(φ_tr,α')−2#(φ_tr)} ∏_c f_c(α_c), α' = δ_ε α δ_ε,
//! with residual Y-expectations over σ = K(φ, α')⁻¹.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
#[cfg(feature = "rayon")]
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bracket::bracketize;
use crate::contraction::eval_contraction;
use crate::dsl::{self, YRef};
use crate::ensemble::{CumulantValue, EnsembleKind, Manifest, WgTables};
use crate::error::{Error, Result};
use crate::oracle::OracleSlot;
use crate::perm::{double_factorial_odd, euler_characteristic, k_vertices, IntegerPartition, PreMap, SignedDomain, SignedPermutation, Sym};
use crate::poly::RatFn;
use crate::quaternion::{QMat, Quat};

/// Default bound on the number of premap products enumerated.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// Term cap from `QUATRACE_CAP`, else [`DEFAULT_CAP`].
pub fn default_cap() -> u128 {
    std::env::var("QUATRACE_CAP").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_CAP)
}

/// How the Y_k are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YMode {
    /// Every Y_k = I; each residual contributes 1 (or I_N with ∞).
    AllIdentity,
    /// Every Y bound to a fixed matrix; residuals are contracted exactly.
    Fixed,
    /// Residuals reported as (σ_Re, σ_tr) descriptors with weights.
    Residual,
}

impl YMode {
    pub fn name(self) -> &'static str {
        match self {
            YMode::AllIdentity => "all-identity",
            YMode::Fixed => "fixed",
            YMode::Residual => "residual",
        }
    }
}

/// φ's positive on [n] (or [n]_∞), signs ε, colors w, and the ensembles.
#[derive(Clone, Debug)]
pub struct ExpressionSpec {
    pub phi_re: SignedPermutation,
    pub phi_tr: SignedPermutation,
    pub eps: Vec<i8>,
    pub colors: Vec<u32>,
    pub ys: Vec<Option<YRef>>,
    pub manifest: Manifest,
}

impl ExpressionSpec {
    pub fn new(phi_re: SignedPermutation, phi_tr: SignedPermutation, eps: Vec<i8>, colors: Vec<u32>, manifest: Manifest) -> Result<Self> {
        let n = eps.len();
        let spec = ExpressionSpec { phi_re, phi_tr, eps, colors, ys: vec![None; n], manifest };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec from expression text such as `E[Re(tr(X1 X1*))]`.
    pub fn from_expr(text: &str, manifest: Manifest) -> Result<Self> {
        let p = dsl::parse(text)?.to_permutations()?;
        let spec = ExpressionSpec {
            phi_re: p.phi_re.clone(),
            phi_tr: p.phi_tr.clone(),
            eps: p.eps(),
            colors: p.colors(),
            ys: p.slots.iter().map(|s| s.y.clone()).collect(),
            manifest,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `{"n":…, "infinity":bool, "phi_re":"(…)", "phi_tr":"(…)", "eps":[…],
    /// "colors":[…], "manifest":[…]?}`; `manifest` overrides the embedded one.
    pub fn from_json(v: &Value, manifest: Option<Manifest>) -> Result<Self> {
        let bad = |m: &str| Error::Malformed(format!("spec: {m}"));
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as u32;
        let inf = v.get("infinity").and_then(Value::as_bool).unwrap_or(false);
        let d = SignedDomain::new(n, inf);
        let perm = |key: &str| -> Result<SignedPermutation> {
            match v.get(key) {
                Some(Value::String(s)) => SignedPermutation::parse_cycles(d, s),
                Some(o @ Value::Object(_)) => SignedPermutation::from_json(o),
                _ => Err(bad(&format!("missing {key}"))),
            }
        };
        let ints = |key: &str| -> Result<Vec<i64>> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(&format!("missing {key}")))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| bad(&format!("{key} entries must be integers"))))
                .collect()
        };
        let eps: Vec<i8> = ints("eps")?
            .into_iter()
            .map(|e| match e {
                1 => Ok(1),
                -1 => Ok(-1),
                _ => Err(bad("eps entries must be ±1")),
            })
            .collect::<Result<_>>()?;
        let colors: Vec<u32> =
            ints("colors")?.into_iter().map(|c| u32::try_from(c).map_err(|_| bad("negative color"))).collect::<Result<_>>()?;
        let manifest = match (manifest, v.get("manifest")) {
            (Some(m), _) => m,
            (None, Some(m)) => Manifest::from_json(m)?,
            (None, None) => Manifest::default(),
        };
        let mut spec = ExpressionSpec { phi_re: perm("phi_re")?, phi_tr: perm("phi_tr")?, eps, colors, ys: vec![None; n as usize], manifest };
        if let Some(ys) = v.get("y").and_then(Value::as_array) {
            if ys.len() != n as usize {
                return Err(bad("y must have one entry per slot"));
            }
            for (k, y) in ys.iter().enumerate() {
                if y.is_null() {
                    continue;
                }
                let label = y.get("label").and_then(Value::as_u64).ok_or_else(|| bad("y entries need a label"))? as u32;
                let starred = y.get("starred").and_then(Value::as_bool).unwrap_or(false);
                spec.ys[k] = Some(YRef { label, starred });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Value {
        let d = self.domain();
        json!({
            "n": d.n,
            "infinity": d.has_infinity,
            "phi_re": self.phi_re.to_string(),
            "phi_tr": self.phi_tr.to_string(),
            "eps": self.eps,
            "colors": self.colors,
            "y": self.ys.iter().map(|y| y.as_ref().map(|y| json!({"label": y.label, "starred": y.starred}))).collect::<Vec<_>>(),
        })
    }

    pub fn domain(&self) -> SignedDomain {
        self.phi_re.domain()
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    fn validate(&self) -> Result<()> {
        let d = self.phi_re.domain();
        if self.phi_tr.domain() != d {
            return Err(Error::DomainMismatch);
        }
        let n = d.n as usize;
        if self.eps.len() != n || self.colors.len() != n || self.ys.len() != n {
            return Err(Error::Malformed(format!("ε, colors and Y need {n} entries")));
        }
        for phi in [&self.phi_re, &self.phi_tr] {
            let sup = phi.support();
            if sup.iter().any(|&s| s < 0) || sup.len() != d.size() / 2 {
                return Err(Error::Malformed(format!("{phi} must permute exactly the positive symbols")));
            }
        }
        for &c in &self.colors {
            if self.manifest.ensemble(c).is_none() {
                return Err(Error::Manifest(format!("no ensemble bound to color {c}")));
            }
        }
        Ok(())
    }

    /// Whether the value is an N×N matrix (∞ moved by some φ).
    pub fn is_matrix_valued(&self) -> bool {
        let d = self.domain();
        d.has_infinity && (self.phi_re.apply(d.inf()) != d.inf() || self.phi_tr.apply(d.inf()) != d.inf())
    }

    /// Y bound to each slot, adjointed when starred; `None` if any is unbound.
    pub fn fixed_ys(&self) -> Option<Vec<Option<QMat<BigRational>>>> {
        self.ys
            .iter()
            .map(|y| match y {
                None => Some(None),
                Some(r) => self.manifest.fixed.get(&r.label).map(|m| Some(if r.starred { m.adjoint() } else { m.clone() })),
            })
            .collect()
    }

    pub fn y_mode(&self) -> YMode {
        if self.ys.iter().all(Option::is_none) {
            YMode::AllIdentity
        } else if self.fixed_ys().is_some() {
            YMode::Fixed
        } else {
            YMode::Residual
        }
    }

    /// Dimension forced by fixed Y's.
    fn y_dim(&self) -> Result<Option<usize>> {
        let mut dim = None;
        for y in self.fixed_ys().into_iter().flatten().flatten() {
            if !y.is_square() || dim.is_some_and(|d| d != y.rows()) {
                return Err(Error::Manifest("fixed Y matrices must be square and of one size".into()));
            }
            dim = Some(y.rows());
        }
        Ok(dim)
    }

    /// Premaps φ_Re, φ_tr on the signed domain.
    pub fn premaps(&self) -> Result<(PreMap, PreMap)> {
        Ok((PreMap::double(&self.phi_re)?, PreMap::double(&self.phi_tr)?))
    }

    /// Slot bindings for the exact oracles and the samplers.
    pub fn oracle_slots(&self) -> Result<Vec<OracleSlot>> {
        let ys = self.fixed_ys();
        (0..self.n())
            .map(|k| {
                let kind = self.manifest.ensemble(self.colors[k]).ok_or_else(|| Error::Manifest(format!("color {} unbound", self.colors[k])))?;
                let y = match (&self.ys[k], &ys) {
                    (None, _) => None,
                    (Some(_), Some(v)) => v[k].clone(),
                    (Some(r), None) => return Err(Error::Manifest(format!("Y{} is not bound to a matrix", r.label))),
                };
                Ok(OracleSlot { color: self.colors[k], kind, eps: self.eps[k], y })
            })
            .collect()
    }

    /// Positive symbols of each color, in color order.
    pub fn color_classes(&self) -> BTreeMap<u32, Vec<Sym>> {
        let mut m: BTreeMap<u32, Vec<Sym>> = BTreeMap::new();
        for (k, &c) in self.colors.iter().enumerate() {
            m.entry(c).or_default().push(k as Sym + 1);
        }
        m
    }

    /// ∏_c (2|S_c|−1)!! over random colors.
    pub fn enumeration_size(&self) -> u128 {
        self.color_classes()
            .iter()
            .filter(|(c, _)| !matches!(self.manifest.ensemble(**c), Some(EnsembleKind::Identity)))
            .fold(1u128, |acc, (_, s)| acc.saturating_mul(double_factorial_odd(s.len() as u32)))
    }
}

struct ColorData {
    color: u32,
    cands: Vec<(PreMap, CumulantValue)>,
}

struct Engine {
    phi_re: SignedPermutation,
    phi_tr: SignedPermutation,
    pairs_re: i64,
    pairs_tr: i64,
    delta_eps: SignedPermutation,
    base: SignedPermutation,
    colors: Vec<ColorData>,
}

struct RawTerm {
    alpha: PreMap,
    chi_re: i64,
    chi_tr: i64,
    e2: i64,
    en: i64,
    k_re: SignedPermutation,
    k_tr: SignedPermutation,
}

impl RawTerm {
    fn sigmas(&self) -> Result<(PreMap, PreMap)> {
        let s = |k: &SignedPermutation| PreMap::new(k.inverse()).map_err(|e| Error::Malformed(format!("residual is not a premap: {e}")));
        Ok((s(&self.k_re)?, s(&self.k_tr)?))
    }
}

impl Engine {
    fn new(spec: &ExpressionSpec, cap: u128) -> Result<Self> {
        let needed = spec.enumeration_size();
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        let d = spec.domain();
        let mut colors = Vec::new();
        for (c, syms) in spec.color_classes() {
            let kind = spec.manifest.ensemble(c).ok_or_else(|| Error::Manifest(format!("color {c} unbound")))?;
            let mut cands = Vec::new();
            for a in kind.support(d, &syms) {
                let f = kind.f(&a)?;
                if !f.is_zero() {
                    cands.push((a, f));
                }
            }
            colors.push(ColorData { color: c, cands });
        }
        let base = if d.has_infinity {
            SignedPermutation::identity_on(d, &[d.inf(), -d.inf()])
        } else {
            SignedPermutation::identity_on(d, &[])
        };
        Ok(Engine {
            pairs_re: spec.phi_re.cycle_count() as i64,
            pairs_tr: spec.phi_tr.cycle_count() as i64,
            phi_re: spec.phi_re.clone(),
            phi_tr: spec.phi_tr.clone(),
            delta_eps: SignedPermutation::delta_eps(d, &spec.eps),
            base,
            colors,
        })
    }

    fn term_count(&self) -> u64 {
        self.colors.iter().fold(1u64, |a, c| a.saturating_mul(c.cands.len() as u64))
    }

    fn raw_term(&self, choice: &[usize]) -> Result<RawTerm> {
        let mut alpha = self.base.clone();
        for (c, &i) in self.colors.iter().zip(choice) {
            alpha = alpha.compose(c.cands[i].0.perm());
        }
        let alpha = PreMap::new(alpha)?;
        let twisted = PreMap::new(self.delta_eps.compose(alpha.perm()).compose(&self.delta_eps))?;
        let chi_re = euler_characteristic(&self.phi_re, &twisted)?;
        let chi_tr = euler_characteristic(&self.phi_tr, &twisted)?;
        Ok(RawTerm {
            chi_re,
            chi_tr,
            e2: chi_re - 2 * self.pairs_re,
            en: chi_tr - 2 * self.pairs_tr,
            k_re: k_vertices(&self.phi_re, &twisted)?,
            k_tr: k_vertices(&self.phi_tr, &twisted)?,
            alpha,
        })
    }

    /// Visit every product of the remaining colors' candidates with the first fixed.
    fn for_each_with_first(&self, first: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
        let k = self.colors.len();
        if self.colors.iter().any(|c| c.cands.is_empty()) {
            return Ok(());
        }
        let mut choice = vec![0usize; k];
        choice[0] = first;
        loop {
            f(&choice)?;
            let mut pos = 1;
            while pos < k {
                choice[pos] += 1;
                if choice[pos] < self.colors[pos].cands.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
            if pos >= k {
                return Ok(());
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Key {
    e2: i64,
    en: i64,
    wg: Vec<(u32, IntegerPartition)>,
    general: Vec<(usize, usize)>,
    residual: Option<(SignedPermutation, SignedPermutation)>,
}

type Acc = HashMap<Key, QMat<BigRational>>;

fn merge(mut a: Acc, b: Acc) -> Acc {
    for (k, v) in b {
        match a.get_mut(&k) {
            Some(x) => *x = x.add(&v),
            None => {
                a.insert(k, v);
            }
        }
    }
    a
}

/// Options for [`evaluate`].
#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Fixed N; `None` keeps N symbolic.
    pub at: Option<u64>,
    pub cap: u128,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { at: None, cap: default_cap() }
    }
}

/// One residual Y-expectation with its weight.
#[derive(Clone, Debug)]
pub struct ResidualTerm {
    pub sigma_re: PreMap,
    pub sigma_tr: PreMap,
    pub weight: RatFn,
}

impl ResidualTerm {
    /// The residual as a bracket expression in Y's, when bracketable.
    pub fn expression(&self) -> Option<String> {
        bracketize(&self.sigma_re, &self.sigma_tr).ok().map(|d| d.render("Y"))
    }
}

#[derive(Clone, Debug)]
pub enum ExpansionValue {
    Symbolic(RatFn),
    Exact(BigRational),
    Matrix(QMat<BigRational>),
    Residual(Vec<ResidualTerm>),
}

impl fmt::Display for ExpansionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpansionValue::Symbolic(r) => write!(f, "{r}"),
            ExpansionValue::Exact(q) => write!(f, "{q}"),
            ExpansionValue::Matrix(m) => write!(f, "{}", m.to_json()),
            ExpansionValue::Residual(ts) => {
                let parts: Vec<String> = ts
                    .iter()
                    .map(|t| format!("({})·E[{}]", t.weight, t.expression().unwrap_or_else(|| format!("Re_{} tr_{}", t.sigma_re, t.sigma_tr))))
                    .collect();
                if parts.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", parts.join(" + "))
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExpansionResult {
    pub value: ExpansionValue,
    /// The value multiplies I_N.
    pub times_identity: bool,
    /// Number of premap products with nonzero cumulant factors.
    pub term_count: u64,
    pub y_mode: YMode,
}

impl ExpansionResult {
    /// Exact scalar value, or Re ntr of a matrix value.
    pub fn scalar(&self) -> Option<BigRational> {
        match &self.value {
            ExpansionValue::Exact(q) => Some(q.clone()),
            ExpansionValue::Matrix(m) => m.ntr().ok().map(|q| q.a),
            _ => None,
        }
    }

    pub fn value_string(&self) -> String {
        self.value.to_string()
    }
}

fn two_pow(e: i64) -> BigRational {
    let p = BigRational::from_integer(BigInt::from(2).pow(e.unsigned_abs() as u32));
    let p = if e < 0 { p.recip() } else { p };
    if e % 2 != 0 {
        -p
    } else {
        p
    }
}

/// (−2)^e2 N^en ∏ wg ∏ general as a rational function.
fn key_factor(key: &Key, engine: &Engine, tables: &mut WgTables) -> Result<RatFn> {
    let mut r = RatFn::monomial(&two_pow(key.e2), key.en);
    for (points, lam) in &key.wg {
        r = &r * &tables.wg(*points, lam)?;
    }
    for &(c, i) in &key.general {
        if let CumulantValue::General(g) = &engine.colors[c].cands[i].1 {
            r = &r * g;
        }
    }
    Ok(r)
}

fn eval_ratfn(r: &RatFn, n: u64) -> Result<BigRational> {
    r.eval_at(n as i64).map_err(|_| Error::SingularGram(n))
}

/// Exact value of the expansion.
pub fn evaluate(spec: &ExpressionSpec, opts: &EvalOptions) -> Result<ExpansionResult> {
    let mode = spec.y_mode();
    let ymats = match mode {
        YMode::Fixed => {
            let dim = spec.y_dim()?.expect("fixed mode has a Y");
            if opts.at.is_some_and(|n| n as usize != dim) {
                return Err(Error::Malformed(format!("fixed Y's are {dim}×{dim} but N = {}", opts.at.unwrap())));
            }
            let ys = spec.fixed_ys().unwrap();
            Some(ys.into_iter().map(|y| y.unwrap_or_else(|| QMat::identity(dim))).collect::<Vec<_>>())
        }
        _ => None,
    };
    let at = match &ymats {
        Some(m) => Some(m[0].rows() as u64),
        None => opts.at,
    };
    let engine = Engine::new(spec, opts.cap)?;
    let term_count = engine.term_count();
    let one = QMat::scalar(1, Quat::one());
    let accumulate = |first: usize| -> Result<Acc> {
        let mut acc: Acc = HashMap::new();
        engine.for_each_with_first(first, |choice| {
            let t = engine.raw_term(choice)?;
            let mut coef = BigRational::one();
            let mut en = t.en;
            let mut wg = Vec::new();
            let mut general = Vec::new();
            for (ci, (c, &i)) in engine.colors.iter().zip(choice).enumerate() {
                match &c.cands[i].1 {
                    CumulantValue::Zero => return Ok(()),
                    CumulantValue::Scalar { coef: k, n_pow } => {
                        coef *= k;
                        en += n_pow;
                    }
                    CumulantValue::Wg { points, lambda } => wg.push((*points, lambda.clone())),
                    CumulantValue::General(_) => general.push((ci, i)),
                }
            }
            wg.sort();
            let (value, residual) = match mode {
                YMode::AllIdentity => (one.scale(&coef), None),
                YMode::Fixed => {
                    let (sr, st) = t.sigmas()?;
                    (eval_contraction(&sr, &st, ymats.as_ref().unwrap())?.scale(&coef), None)
                }
                YMode::Residual => {
                    let (sr, st) = t.sigmas()?;
                    (one.scale(&coef), Some((sr.into_perm(), st.into_perm())))
                }
            };
            let key = Key { e2: t.e2, en, wg, general, residual };
            match acc.get_mut(&key) {
                Some(x) => *x = x.add(&value),
                None => {
                    acc.insert(key, value);
                }
            }
            Ok(())
        })?;
        Ok(acc)
    };
    let firsts = engine.colors.first().map_or(0, |c| c.cands.len());
    let acc: Acc = crate::if_rayon!(
        (0..firsts).into_par_iter().map(accumulate).try_reduce(HashMap::new, |a, b| Ok(merge(a, b)))?,
        (0..firsts).map(accumulate).try_fold(HashMap::new(), |a, b| b.map(|b| merge(a, b)))?
    );
    let mut tables = WgTables::default();
    let matrix = spec.is_matrix_valued();
    let value = match mode {
        YMode::AllIdentity => {
            let mut total = RatFn::zero();
            for (k, v) in &acc {
                total = &total + &(&key_factor(k, &engine, &mut tables)? * &RatFn::from_rational(&v.get(0, 0).a));
            }
            match at {
                None => ExpansionValue::Symbolic(total),
                Some(n) => ExpansionValue::Exact(eval_ratfn(&total, n)?),
            }
        }
        YMode::Fixed => {
            let n = at.unwrap();
            let dim = n as usize;
            let size = if spec.domain().has_infinity { dim } else { 1 };
            let mut total: QMat<BigRational> = QMat::zeros(size, size);
            for (k, v) in &acc {
                let s = eval_ratfn(&key_factor(k, &engine, &mut tables)?, n)?;
                total = total.add(&v.scale(&s));
            }
            if matrix {
                ExpansionValue::Matrix(total)
            } else {
                ExpansionValue::Exact(total.get(0, 0).a.clone())
            }
        }
        YMode::Residual => {
            let mut groups: HashMap<(SignedPermutation, SignedPermutation), RatFn> = HashMap::new();
            for (k, v) in &acc {
                let w = &key_factor(k, &engine, &mut tables)? * &RatFn::from_rational(&v.get(0, 0).a);
                let w = match at {
                    None => w,
                    Some(n) => RatFn::from_rational(&eval_ratfn(&w, n)?),
                };
                let e = groups.entry(k.residual.clone().unwrap()).or_insert_with(RatFn::zero);
                *e = &*e + &w;
            }
            let mut terms: Vec<ResidualTerm> = groups
                .into_iter()
                .filter(|(_, w)| !w.is_zero())
                .map(|((sr, st), weight)| ResidualTerm { sigma_re: PreMap::new(sr).unwrap(), sigma_tr: PreMap::new(st).unwrap(), weight })
                .collect();
            terms.sort_by_key(|t| (t.sigma_re.to_string(), t.sigma_tr.to_string()));
            ExpansionValue::Residual(terms)
        }
    };
    Ok(ExpansionResult { value, times_identity: matrix && mode != YMode::Fixed, term_count, y_mode: mode })
}

/// One term of the expansion.
#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub alpha: PreMap,
    /// α_c for each color.
    pub parts: Vec<(u32, PreMap)>,
    pub chi_re: i64,
    pub chi_tr: i64,
    /// Exponents of −2 and N before the cumulant factors.
    pub exp_two: i64,
    pub exp_n: i64,
    pub f_values: Vec<(u32, CumulantValue)>,
    pub k_re: SignedPermutation,
    pub k_tr: SignedPermutation,
    pub sigma_re: PreMap,
    pub sigma_tr: PreMap,
    /// (−2)^exp_two N^exp_n ∏ f.
    pub weight: RatFn,
}

impl ExpansionTerm {
    pub fn residual_expression(&self) -> Option<String> {
        bracketize(&self.sigma_re, &self.sigma_tr).ok().map(|d| d.render("Y"))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alpha": self.alpha.to_string(),
            "parts": self.parts.iter().map(|(c, a)| json!({"color": c, "alpha": a.to_string()})).collect::<Vec<_>>(),
            "chi_re": self.chi_re,
            "chi_tr": self.chi_tr,
            "exp_two": self.exp_two,
            "exp_n": self.exp_n,
            "f": self.f_values.iter().map(|(c, f)| json!({"color": c, "value": f.to_string()})).collect::<Vec<_>>(),
            "k_re": self.k_re.to_string(),
            "k_tr": self.k_tr.to_string(),
            "sigma_re": self.sigma_re.to_string(),
            "sigma_tr": self.sigma_tr.to_string(),
            "residual": self.residual_expression(),
            "weight": self.weight.to_string(),
        })
    }
}

/// Lazily enumerated terms with nonzero cumulant factors.
pub struct TermLedger {
    engine: Engine,
    tables: WgTables,
    choice: Option<Vec<usize>>,
}

impl Iterator for TermLedger {
    type Item = Result<ExpansionTerm>;

    fn next(&mut self) -> Option<Self::Item> {
        let choice = self.choice.clone()?;
        let mut next = choice.clone();
        let mut pos = 0;
        while pos < next.len() {
            next[pos] += 1;
            if next[pos] < self.engine.colors[pos].cands.len() {
                break;
            }
            next[pos] = 0;
            pos += 1;
        }
        self.choice = (pos < next.len()).then_some(next);
        Some(self.build(&choice))
    }
}

impl TermLedger {
    fn build(&mut self, choice: &[usize]) -> Result<ExpansionTerm> {
        let t = self.engine.raw_term(choice)?;
        let (sigma_re, sigma_tr) = t.sigmas()?;
        let mut weight = RatFn::monomial(&two_pow(t.e2), t.en);
        let mut parts = Vec::new();
        let mut f_values = Vec::new();
        for (c, &i) in self.engine.colors.iter().zip(choice) {
            let (a, f) = &c.cands[i];
            weight = &weight * &f.to_ratfn(&mut self.tables)?;
            parts.push((c.color, a.clone()));
            f_values.push((c.color, f.clone()));
        }
        Ok(ExpansionTerm {
            alpha: t.alpha,
            parts,
            chi_re: t.chi_re,
            chi_tr: t.chi_tr,
            exp_two: t.e2,
            exp_n: t.en,
            f_values,
            k_re: t.k_re,
            k_tr: t.k_tr,
            sigma_re,
            sigma_tr,
            weight,
        })
    }
}

/// Every nonzero-support term of the expansion, in a fixed order.
pub fn term_ledger(spec: &ExpressionSpec, cap: u128) -> Result<TermLedger> {
    let engine = Engine::new(spec, cap)?;
    let empty = engine.colors.iter().any(|c| c.cands.is_empty());
    let k = engine.colors.len();
    Ok(TermLedger { engine, tables: WgTables::default(), choice: (!empty).then(|| vec![0; k]) })
}

/// The term of the ledger whose α equals `alpha`.
pub fn ledger_term(spec: &ExpressionSpec, alpha: &PreMap, cap: u128) -> Result<Option<ExpansionTerm>> {
    let mut ledger = term_ledger(spec, cap)?;
    let mut choice = Vec::new();
    for c in &ledger.engine.colors {
        let syms = &spec.color_classes()[&c.color];
        let sup: Vec<Sym> = syms.iter().flat_map(|&k| [k, -k]).collect();
        let part = alpha.perm().restrict(&sup);
        match c.cands.iter().position(|(a, _)| *a.perm() == part) {
            Some(i) => choice.push(i),
            None => return Ok(None),
        }
    }
    ledger.build(&choice).map(Some)
}

/// Exact value against a Monte Carlo estimate; PASS iff |z| ≤ 5.
#[derive(Clone, Debug)]
pub struct CompareReport {
    pub exact: BigRational,
    pub mc: crate::sample::MCEstimate,
    pub z: f64,
    pub pass: bool,
}

impl CompareReport {
    pub fn new(exact: BigRational, mc: crate::sample::MCEstimate) -> Self {
        let e = num_traits::ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);
        let diff = e - mc.mean;
        let z = if mc.std_error > 0.0 {
            diff / mc.std_error
        } else if diff.abs() < 1e-9 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        CompareReport { exact, mc, z, pass: z.abs() <= 5.0 }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "exact": self.exact.to_string(),
            "exact_f64": num_traits::ToPrimitive::to_f64(&self.exact),
            "mc": self.mc.to_json(),
            "z": if self.z.is_finite() { json!(self.z) } else { json!(self.z.to_string()) },
            "pass": self.pass,
        })
    }
}

/// Evaluate at N and estimate by Monte Carlo with the same statistic (Re ntr
/// for matrix values).
pub fn compare_mc(spec: &ExpressionSpec, n: u64, samples: u64, seed: u64, cap: u128) -> Result<CompareReport> {
    let r = evaluate(spec, &EvalOptions { at: Some(n), cap })?;
    let exact = r.scalar().ok_or_else(|| Error::Unsupported("Monte Carlo comparison of residual descriptors".into()))?;
    let mc = crate::sample::mc_expectation(spec, n as usize, samples, seed)?;
    Ok(CompareReport::new(exact, mc))
}
