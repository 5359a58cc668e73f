//! Signed permutations, set partitions, pairings and premaps.
//!
//! Symbols are nonzero `i32`s. With `n` base symbols the point at infinity is
//! encoded as `n + 1` and its negation as `-(n + 1)`. Composition is right to
//! left: `a.compose(&b)(k) = a(b(k))`.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Signed symbol.
pub type Sym = i32;

/// The carrier `±[n]`, optionally with `±∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedDomain {
    pub n: u32,
    pub has_infinity: bool,
}

impl SignedDomain {
    pub fn new(n: u32, has_infinity: bool) -> Self {
        SignedDomain { n, has_infinity }
    }

    /// Encoded value of `+∞`.
    pub fn inf(&self) -> Sym {
        self.n as Sym + 1
    }

    fn m(&self) -> usize {
        self.n as usize + usize::from(self.has_infinity)
    }

    /// Number of signed symbols in the carrier.
    pub fn size(&self) -> usize {
        2 * self.m()
    }

    pub fn contains(&self, s: Sym) -> bool {
        s != 0 && (s.unsigned_abs() as usize) <= self.m()
    }

    pub fn is_inf(&self, s: Sym) -> bool {
        self.has_infinity && s.abs() == self.inf()
    }

    #[inline]
    pub fn index(&self, s: Sym) -> usize {
        debug_assert!(self.contains(s), "symbol {s} outside domain {self:?}");
        if s > 0 {
            s as usize - 1
        } else {
            self.m() + (-s) as usize - 1
        }
    }

    #[inline]
    pub fn symbol(&self, i: usize) -> Sym {
        let m = self.m();
        if i < m {
            i as Sym + 1
        } else {
            -((i - m) as Sym + 1)
        }
    }

    /// Positive symbols `1..=n` followed by `∞` if present.
    pub fn positives(&self) -> Vec<Sym> {
        (1..=self.m() as Sym).collect()
    }

    /// All signed symbols.
    pub fn all(&self) -> Vec<Sym> {
        (0..self.size()).map(|i| self.symbol(i)).collect()
    }

    pub fn fmt_sym(&self, s: Sym) -> String {
        if self.is_inf(s) {
            if s > 0 { "∞".into() } else { "-∞".into() }
        } else {
            s.to_string()
        }
    }
}

/// A bijection of a subset (the support) of a signed domain.
///
/// Outside the support the map is undefined; `compose` extends both
/// operands by the identity onto the union of supports, which is how the
/// algebra of faces and vertices treats permutations of a subset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    domain: SignedDomain,
    table: Vec<Sym>,
}

impl SignedPermutation {
    /// Identity on the given support.
    pub fn identity_on(domain: SignedDomain, support: &[Sym]) -> Self {
        let mut table = vec![0; domain.size()];
        for &s in support {
            table[domain.index(s)] = s;
        }
        SignedPermutation { domain, table }
    }

    /// Identity on the whole carrier.
    pub fn identity(domain: SignedDomain) -> Self {
        Self::identity_on(domain, &domain.all())
    }

    /// The negation map δ on the whole carrier.
    pub fn delta(domain: SignedDomain) -> Self {
        let table = domain.all().into_iter().map(|s| -s).collect();
        SignedPermutation { domain, table }
    }

    /// δ_ε: k ↦ ε(|k|)·k, with ∞ never negated. `eps[k-1]` is ε(k).
    pub fn delta_eps(domain: SignedDomain, eps: &[i8]) -> Self {
        let table = domain
            .all()
            .into_iter()
            .map(|s| {
                let a = s.unsigned_abs() as usize;
                if a <= eps.len() && eps[a - 1] < 0 { -s } else { s }
            })
            .collect();
        SignedPermutation { domain, table }
    }

    /// Build from disjoint cycles; symbols not mentioned are outside the support.
    pub fn from_cycles(domain: SignedDomain, cycles: &[Vec<Sym>]) -> Result<Self> {
        let mut table = vec![0; domain.size()];
        for c in cycles {
            if c.is_empty() {
                return Err(Error::Malformed("empty cycle".into()));
            }
            for (i, &s) in c.iter().enumerate() {
                if !domain.contains(s) {
                    return Err(Error::Malformed(format!("symbol {s} outside domain")));
                }
                let idx = domain.index(s);
                if table[idx] != 0 {
                    return Err(Error::Malformed(format!("symbol {s} repeated")));
                }
                table[idx] = c[(i + 1) % c.len()];
            }
        }
        Ok(SignedPermutation { domain, table })
    }

    /// Build from an explicit map given as (symbol, image) pairs.
    pub fn from_pairs(domain: SignedDomain, pairs: &[(Sym, Sym)]) -> Result<Self> {
        let mut table = vec![0; domain.size()];
        let mut hit = vec![false; domain.size()];
        for &(a, b) in pairs {
            if !domain.contains(a) || !domain.contains(b) {
                return Err(Error::Malformed(format!("pair ({a},{b}) outside domain")));
            }
            let (ia, ib) = (domain.index(a), domain.index(b));
            if table[ia] != 0 || hit[ib] {
                return Err(Error::Malformed("not a bijection".into()));
            }
            table[ia] = b;
            hit[ib] = true;
        }
        let p = SignedPermutation { domain, table };
        if p.support().iter().any(|&s| !hit[domain.index(s)]) {
            return Err(Error::Malformed("image differs from support".into()));
        }
        Ok(p)
    }

    pub fn domain(&self) -> SignedDomain {
        self.domain
    }

    #[inline]
    pub fn apply(&self, s: Sym) -> Sym {
        let v = self.table[self.domain.index(s)];
        debug_assert!(v != 0, "symbol {s} outside support");
        v
    }

    #[inline]
    pub fn in_support(&self, s: Sym) -> bool {
        self.domain.contains(s) && self.table[self.domain.index(s)] != 0
    }

    /// Support in domain index order.
    pub fn support(&self) -> Vec<Sym> {
        (0..self.table.len())
            .filter(|&i| self.table[i] != 0)
            .map(|i| self.domain.symbol(i))
            .collect()
    }

    pub fn support_len(&self) -> usize {
        self.table.iter().filter(|&&v| v != 0).count()
    }

    pub fn inverse(&self) -> Self {
        let mut table = vec![0; self.table.len()];
        for (i, &v) in self.table.iter().enumerate() {
            if v != 0 {
                table[self.domain.index(v)] = self.domain.symbol(i);
            }
        }
        SignedPermutation { domain: self.domain, table }
    }

    /// `self ∘ other`, both extended by the identity to the union of supports.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.domain, other.domain, "domain mismatch");
        let table = (0..self.table.len())
            .map(|i| {
                let s = self.domain.symbol(i);
                let in_a = self.table[i] != 0;
                let in_b = other.table[i] != 0;
                if !in_a && !in_b {
                    return 0;
                }
                let t = if in_b { other.table[i] } else { s };
                let j = self.domain.index(t);
                if self.table[j] != 0 { self.table[j] } else { t }
            })
            .collect();
        SignedPermutation { domain: self.domain, table }
    }

    /// Checked composition requiring equal supports.
    pub fn try_compose(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain || self.support() != other.support() {
            return Err(Error::DomainMismatch);
        }
        Ok(self.compose(other))
    }

    /// `δ p δ`.
    pub fn conj_delta(&self) -> Self {
        let mut table = vec![0; self.table.len()];
        for (i, &v) in self.table.iter().enumerate() {
            if v != 0 {
                let s = self.domain.symbol(i);
                table[self.domain.index(-s)] = -v;
            }
        }
        SignedPermutation { domain: self.domain, table }
    }

    /// `q p q⁻¹` for a permutation `q` defined on the support of `p`.
    pub fn conjugate_by(&self, q: &Self) -> Self {
        let mut table = vec![0; self.table.len()];
        for (i, &v) in self.table.iter().enumerate() {
            if v != 0 {
                let s = self.domain.symbol(i);
                table[self.domain.index(q.apply(s))] = q.apply(v);
            }
        }
        SignedPermutation { domain: self.domain, table }
    }

    /// Cycles, each starting at its first symbol in domain index order.
    pub fn cycles(&self) -> Vec<Vec<Sym>> {
        let mut seen = vec![false; self.table.len()];
        let mut out = Vec::new();
        for i in 0..self.table.len() {
            if self.table[i] == 0 || seen[i] {
                continue;
            }
            let start = self.domain.symbol(i);
            let mut c = vec![start];
            seen[i] = true;
            let mut s = self.table[i];
            while s != start {
                seen[self.domain.index(s)] = true;
                c.push(s);
                s = self.apply(s);
            }
            out.push(c);
        }
        out
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.table.len()];
        let mut count = 0;
        for i in 0..self.table.len() {
            if self.table[i] == 0 || seen[i] {
                continue;
            }
            count += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = self.domain.index(self.table[j]);
            }
        }
        count
    }

    /// Cycle lengths, weakly decreasing.
    pub fn cycle_type(&self) -> IntegerPartition {
        IntegerPartition::new(self.cycles().iter().map(|c| c.len() as u32).collect())
    }

    /// (−1)^(|support| − #cycles).
    pub fn sign(&self) -> i32 {
        if (self.support_len() - self.cycle_count()) % 2 == 0 { 1 } else { -1 }
    }

    pub fn is_identity(&self) -> bool {
        self.table
            .iter()
            .enumerate()
            .all(|(i, &v)| v == 0 || v == self.domain.symbol(i))
    }

    pub fn is_involution(&self) -> bool {
        self.support().iter().all(|&s| self.apply(self.apply(s)) == s)
    }

    pub fn is_fixed_point_free(&self) -> bool {
        self.support().iter().all(|&s| self.apply(s) != s)
    }

    /// First-return permutation on `J`: cycle notation with non-`J` symbols deleted.
    pub fn induced(&self, j: &[Sym]) -> Result<Self> {
        if j.is_empty() {
            return Err(Error::Malformed("empty subset".into()));
        }
        let mut inj = vec![false; self.table.len()];
        for &s in j {
            if !self.in_support(s) {
                return Err(Error::Malformed(format!("{s} not in support")));
            }
            inj[self.domain.index(s)] = true;
        }
        let mut table = vec![0; self.table.len()];
        for &s in j {
            let mut t = self.apply(s);
            while !inj[self.domain.index(t)] {
                t = self.apply(t);
            }
            table[self.domain.index(s)] = t;
        }
        Ok(SignedPermutation { domain: self.domain, table })
    }

    /// Restriction to a union of cycles (no first-return needed).
    pub fn restrict(&self, j: &[Sym]) -> Self {
        let mut table = vec![0; self.table.len()];
        for &s in j {
            table[self.domain.index(s)] = self.apply(s);
        }
        SignedPermutation { domain: self.domain, table }
    }

    /// Relabel symbols into another domain via `f` (which must respect the support).
    pub fn relabel(&self, domain: SignedDomain, f: impl Fn(Sym) -> Sym) -> Self {
        let mut table = vec![0; domain.size()];
        for (i, &v) in self.table.iter().enumerate() {
            if v != 0 {
                table[domain.index(f(self.domain.symbol(i)))] = f(v);
            }
        }
        SignedPermutation { domain, table }
    }

    /// Orbit partition Π(π) of the support.
    pub fn orbits(&self) -> SetPartition {
        SetPartition::new(self.cycles())
    }

    /// Absolute-value orbit partition on the positive symbols that appear.
    pub fn unsigned(&self) -> Self {
        self.relabel(self.domain, |s| s.abs())
    }

    pub fn to_json(&self) -> Value {
        let cycles: Vec<Value> = self
            .cycles()
            .iter()
            .map(|c| Value::Array(c.iter().map(|&s| sym_to_json(self.domain, s)).collect()))
            .collect();
        json!({"n": self.domain.n, "infinity": self.domain.has_infinity, "cycles": cycles})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Malformed(format!("permutation json: {m}"));
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| bad("missing n"))? as u32;
        let inf = v.get("infinity").and_then(Value::as_bool).unwrap_or(false);
        let domain = SignedDomain::new(n, inf);
        let cycles = v.get("cycles").and_then(Value::as_array).ok_or_else(|| bad("missing cycles"))?;
        let mut cs = Vec::new();
        for c in cycles {
            let arr = c.as_array().ok_or_else(|| bad("cycle not an array"))?;
            let mut cyc = Vec::new();
            for x in arr {
                cyc.push(sym_from_json(domain, x).ok_or_else(|| bad("bad symbol"))?);
            }
            cs.push(cyc);
        }
        Self::from_cycles(domain, &cs)
    }

    /// Parse "(∞,1,-2)(3)". `inf`, `∞`, `-inf`, `-∞` are accepted.
    pub fn parse_cycles(domain: SignedDomain, text: &str) -> Result<Self> {
        let mut cycles = Vec::new();
        for chunk in text.split(')') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let body = chunk
                .strip_prefix('(')
                .ok_or_else(|| Error::Malformed(format!("bad cycle text near {chunk:?}")))?;
            let mut c = Vec::new();
            for tok in body.split(',') {
                let tok = tok.trim().replace('−', "-");
                let s = match tok.as_str() {
                    "inf" | "∞" => domain.inf(),
                    "-inf" | "-∞" => -domain.inf(),
                    t => t.parse::<Sym>().map_err(|_| Error::Malformed(format!("bad symbol {t:?}")))?,
                };
                c.push(s);
            }
            cycles.push(c);
        }
        Self::from_cycles(domain, &cycles)
    }
}

fn sym_to_json(d: SignedDomain, s: Sym) -> Value {
    if d.is_inf(s) {
        Value::String(if s > 0 { "inf" } else { "-inf" }.into())
    } else {
        json!(s)
    }
}

fn sym_from_json(d: SignedDomain, v: &Value) -> Option<Sym> {
    match v {
        Value::String(s) if s == "inf" && d.has_infinity => Some(d.inf()),
        Value::String(s) if s == "-inf" && d.has_infinity => Some(-d.inf()),
        Value::Number(n) => n.as_i64().map(|x| x as Sym).filter(|&x| d.contains(x)),
        _ => None,
    }
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            let parts: Vec<String> = c.iter().map(|&s| self.domain.fmt_sym(s)).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

impl fmt::Debug for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Set partition with canonical block order (each block sorted, blocks by minimum).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetPartition {
    blocks: Vec<Vec<Sym>>,
}

impl SetPartition {
    pub fn new(mut blocks: Vec<Vec<Sym>>) -> Self {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort();
        SetPartition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<Sym>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ground(&self) -> Vec<Sym> {
        let mut g: Vec<Sym> = self.blocks.iter().flatten().copied().collect();
        g.sort_unstable();
        g
    }

    fn block_map(&self) -> BTreeMap<Sym, usize> {
        let mut m = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for &s in b {
                m.insert(s, i);
            }
        }
        m
    }

    /// Finest common coarsening.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.ground() != other.ground() {
            return Err(Error::DomainMismatch);
        }
        let ground = self.ground();
        let pos: BTreeMap<Sym, usize> = ground.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut uf = UnionFind::new(ground.len());
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            for w in b.windows(2) {
                uf.union(pos[&w[0]], pos[&w[1]]);
            }
        }
        let mut groups: BTreeMap<usize, Vec<Sym>> = BTreeMap::new();
        for (i, &s) in ground.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(s);
        }
        Ok(SetPartition::new(groups.into_values().collect()))
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        if self.ground() != other.ground() {
            return Err(Error::DomainMismatch);
        }
        let mo = other.block_map();
        let mut groups: BTreeMap<(usize, usize), Vec<Sym>> = BTreeMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for &s in b {
                groups.entry((i, mo[&s])).or_default().push(s);
            }
        }
        Ok(SetPartition::new(groups.into_values().collect()))
    }

    /// `self ⪯ other` (every block of self inside a block of other).
    pub fn refines(&self, other: &Self) -> bool {
        let mo = other.block_map();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|s| mo.get(s) == mo.get(&b[0]) && mo.contains_key(s)))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Integer partition, parts weakly decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerPartition(pub Vec<u32>);

impl IntegerPartition {
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        IntegerPartition(parts)
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All partitions of `w`, in reverse lexicographic order ([w] first).
    pub fn all(w: u32) -> Vec<IntegerPartition> {
        fn rec(rem: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<IntegerPartition>) {
            if rem == 0 {
                out.push(IntegerPartition(cur.clone()));
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(w, w, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for IntegerPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", p.join(","))
    }
}

/// A fixed-point-free involution, optionally with a distinguished element per pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pairing {
    perm: SignedPermutation,
    distinguished: Option<Vec<Sym>>,
}

impl Pairing {
    pub fn new(perm: SignedPermutation) -> Result<Self> {
        if !perm.is_involution() || !perm.is_fixed_point_free() {
            return Err(Error::Malformed(format!("{perm} is not a pairing")));
        }
        Ok(Pairing { perm, distinguished: None })
    }

    pub fn from_pairs(domain: SignedDomain, pairs: &[(Sym, Sym)]) -> Result<Self> {
        let cycles: Vec<Vec<Sym>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        Self::new(SignedPermutation::from_cycles(domain, &cycles)?)
    }

    /// Attach distinguished elements; each must lie in a distinct pair.
    pub fn with_distinguished(mut self, d: Vec<Sym>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &x in &d {
            if !self.perm.in_support(x) {
                return Err(Error::Malformed(format!("{x} not paired")));
            }
            let key = x.min(self.perm.apply(x));
            if !seen.insert(key) {
                return Err(Error::Malformed("two distinguished elements in one pair".into()));
            }
        }
        if seen.len() * 2 != self.perm.support_len() {
            return Err(Error::Malformed("every pair needs a distinguished element".into()));
        }
        self.distinguished = Some(d);
        Ok(self)
    }

    pub fn perm(&self) -> &SignedPermutation {
        &self.perm
    }

    pub fn distinguished(&self) -> Option<&[Sym]> {
        self.distinguished.as_deref()
    }

    pub fn pairs(&self) -> Vec<(Sym, Sym)> {
        self.perm.cycles().into_iter().map(|c| (c[0], c[1])).collect()
    }

    pub fn partition(&self) -> SetPartition {
        self.perm.orbits()
    }

    /// All pairings of the given symbols; first element is paired with each
    /// later one in turn, recursively (lexicographic on pair lists).
    pub fn enumerate(domain: SignedDomain, symbols: &[Sym]) -> Vec<SignedPermutation> {
        let mut out = Vec::new();
        if symbols.len() % 2 == 1 {
            return out;
        }
        let mut table = vec![0; domain.size()];
        enum_pairings(domain, symbols.to_vec(), &mut table, &mut out);
        out
    }
}

fn enum_pairings(d: SignedDomain, rest: Vec<Sym>, table: &mut Vec<Sym>, out: &mut Vec<SignedPermutation>) {
    if rest.is_empty() {
        out.push(SignedPermutation { domain: d, table: table.clone() });
        return;
    }
    let a = rest[0];
    for j in 1..rest.len() {
        let b = rest[j];
        table[d.index(a)] = b;
        table[d.index(b)] = a;
        let next: Vec<Sym> = rest.iter().enumerate().filter(|&(i, _)| i != 0 && i != j).map(|(_, &s)| s).collect();
        enum_pairings(d, next, table, out);
        table[d.index(a)] = 0;
        table[d.index(b)] = 0;
    }
}

/// A premap: δπδ = π⁻¹ and π(k) ≠ −k on a support closed under negation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PreMap(SignedPermutation);

impl PreMap {
    pub fn new(p: SignedPermutation) -> Result<Self> {
        for s in p.support() {
            if !p.in_support(-s) {
                return Err(Error::NotPreMap(format!("{p}: support not closed under negation")));
            }
            let t = p.apply(s);
            if t == -s {
                return Err(Error::NotPreMap(format!("{p}: maps {s} to its negative")));
            }
            if p.apply(-t) != -s {
                return Err(Error::NotPreMap(format!("{p}: δπδ ≠ π⁻¹ at {s}")));
            }
        }
        Ok(PreMap(p))
    }

    pub(crate) fn new_unchecked(p: SignedPermutation) -> Self {
        debug_assert!(PreMap::new(p.clone()).is_ok());
        PreMap(p)
    }

    /// Double a permutation of `I` (never containing both k and −k) by adding
    /// the reversed, negated cycles.
    pub fn double(phi: &SignedPermutation) -> Result<Self> {
        let mut table = phi.table.clone();
        for s in phi.support() {
            if phi.in_support(-s) {
                return Err(Error::Malformed(format!("{phi}: contains both {s} and {}", -s)));
            }
            let t = phi.apply(s);
            table[phi.domain.index(-t)] = -s;
        }
        PreMap::new(SignedPermutation { domain: phi.domain, table })
    }

    /// Identity premap e on ±I for the given positive symbols.
    pub fn identity(domain: SignedDomain, positives: &[Sym]) -> Self {
        let sup: Vec<Sym> = positives.iter().flat_map(|&s| [s, -s]).collect();
        PreMap(SignedPermutation::identity_on(domain, &sup))
    }

    pub fn perm(&self) -> &SignedPermutation {
        &self.0
    }

    pub fn into_perm(self) -> SignedPermutation {
        self.0
    }

    pub fn domain(&self) -> SignedDomain {
        self.0.domain
    }

    pub fn apply(&self, s: Sym) -> Sym {
        self.0.apply(s)
    }

    pub fn inverse(&self) -> Self {
        PreMap(self.0.inverse())
    }

    /// Number of cycles on the doubled domain.
    pub fn cycle_count(&self) -> usize {
        self.0.cycle_count()
    }

    /// Number of reversed-negated cycle pairs, #(α)/2.
    pub fn pair_count(&self) -> usize {
        let c = self.0.cycle_count();
        assert!(c % 2 == 0, "premap with odd cycle count");
        c / 2
    }

    /// Positive symbols of the support.
    pub fn base(&self) -> Vec<Sym> {
        self.0.support().into_iter().filter(|&s| s > 0).collect()
    }

    pub fn is_alternating(&self) -> bool {
        self.0.support().iter().all(|&s| (self.0.apply(s) > 0) != (s > 0))
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// Choice of one cycle per reversed-negated pair: the one containing +∞,
    /// otherwise the one in which the smallest absolute value appears positively.
    pub fn fd_cycles(&self) -> Vec<Vec<Sym>> {
        let d = self.0.domain;
        let mut out = Vec::new();
        for c in self.0.cycles() {
            let keep = if let Some(&s) = c.iter().find(|&&s| d.is_inf(s)) {
                s > 0
            } else {
                let m = c.iter().min_by_key(|s| s.abs()).copied().unwrap();
                m > 0
            };
            if keep {
                out.push(rotate_to_min(c, d));
            }
        }
        out.sort_by_key(|c| !d.is_inf(c[0]));
        out
    }

    /// FD(π) as a permutation together with its support.
    pub fn fd(&self) -> (SignedPermutation, Vec<Sym>) {
        let cycles = self.fd_cycles();
        let mut support: Vec<Sym> = cycles.iter().flatten().copied().collect();
        support.sort_by_key(|&s| self.0.domain.index(s));
        (SignedPermutation::from_cycles(self.0.domain, &cycles).expect("fd cycles"), support)
    }

    /// Λ: cycle lengths of FD(π) halved (for premaps whose cycles all have even length).
    pub fn lambda(&self) -> IntegerPartition {
        IntegerPartition::new(self.fd_cycles().iter().map(|c| c.len() as u32 / 2).collect())
    }

    pub fn to_json(&self) -> Value {
        self.0.to_json()
    }

    pub fn compose(&self, other: &Self) -> SignedPermutation {
        self.0.compose(&other.0)
    }
}

/// Rotate a cycle so that ∞ (or else the smallest-|k| positive symbol) leads.
fn rotate_to_min(mut c: Vec<Sym>, d: SignedDomain) -> Vec<Sym> {
    let pos = c
        .iter()
        .position(|&s| d.is_inf(s) && s > 0)
        .unwrap_or_else(|| (0..c.len()).min_by_key(|&i| (c[i].abs(), c[i] < 0)).unwrap());
    c.rotate_left(pos);
    c
}

impl fmt::Display for PreMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for PreMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Every premap on ±S for positive symbols `S`, via δ applied to the pairings of ±S.
pub fn enumerate_premaps(domain: SignedDomain, positives: &[Sym]) -> Vec<PreMap> {
    let syms: Vec<Sym> = positives.iter().flat_map(|&s| [s, -s]).collect();
    let delta = SignedPermutation::delta(domain).restrict(&syms);
    Pairing::enumerate(domain, &syms)
        .into_iter()
        .map(|p| PreMap::new_unchecked(delta.compose(&p)))
        .collect()
}

/// Alternating premaps π₋δπ₊ for pairings π± of `S`.
pub fn enumerate_alternating_premaps(domain: SignedDomain, positives: &[Sym]) -> Vec<PreMap> {
    if positives.len() % 2 == 1 {
        return Vec::new();
    }
    let pairings = Pairing::enumerate(domain, positives);
    let mut out = Vec::with_capacity(pairings.len() * pairings.len());
    for pp in &pairings {
        for pm in &pairings {
            out.push(alternating_from_pairings(pp, pm));
        }
    }
    out
}

/// π₋δπ₊ where π₊ and π₋ are pairings of the same positive symbols.
pub fn alternating_from_pairings(plus: &SignedPermutation, minus: &SignedPermutation) -> PreMap {
    let d = plus.domain;
    let mut table = vec![0; d.size()];
    for s in plus.support() {
        table[d.index(s)] = -plus.apply(s);
        table[d.index(-s)] = minus.apply(s);
    }
    PreMap::new_unchecked(SignedPermutation { domain: d, table })
}

/// Fixed-point-free involution premaps on ±S: a pairing of S with a sign per pair.
pub fn enumerate_involution_premaps(domain: SignedDomain, positives: &[Sym], alternating_only: bool) -> Vec<PreMap> {
    let mut out = Vec::new();
    for p in Pairing::enumerate(domain, positives) {
        let pairs: Vec<(Sym, Sym)> = p.cycles().into_iter().map(|c| (c[0], c[1])).collect();
        let choices: u32 = if alternating_only { 1 } else { 1 << pairs.len() };
        for mask in 0..choices {
            let mut table = vec![0; domain.size()];
            for (i, &(a, b)) in pairs.iter().enumerate() {
                let alt = alternating_only || mask & (1 << i) == 0;
                let (x, y) = if alt { (a, -b) } else { (a, b) };
                table[domain.index(x)] = y;
                table[domain.index(y)] = x;
                table[domain.index(-x)] = -y;
                table[domain.index(-y)] = -x;
            }
            out.push(PreMap::new_unchecked(SignedPermutation { domain, table }));
        }
    }
    out
}

/// K(φ₊, α) = φ₊⁻¹ α⁻¹ φ₋ with φ₋ = δφ₊δ.
pub fn k_vertices(phi: &SignedPermutation, alpha: &PreMap) -> Result<SignedPermutation> {
    for s in phi.support() {
        if phi.in_support(-s) {
            return Err(Error::Malformed(format!("{phi} contains both {s} and {}", -s)));
        }
        if !alpha.perm().in_support(s) {
            return Err(Error::Malformed(format!("α does not act on {s}")));
        }
    }
    if alpha.perm().support_len() != 2 * phi.support_len() {
        return Err(Error::Malformed("α and φ act on different sets".into()));
    }
    let phi_minus = phi.conj_delta();
    Ok(phi.inverse().compose(&alpha.perm().inverse()).compose(&phi_minus))
}

/// χ(φ₊, α) = #(φ₊φ₋⁻¹)/2 + #(α)/2 + #(K)/2 − |I|.
pub fn euler_characteristic(phi: &SignedPermutation, alpha: &PreMap) -> Result<i64> {
    let k = k_vertices(phi, alpha)?;
    let faces = phi.compose(&phi.conj_delta().inverse()).cycle_count();
    let (f, a, v) = (faces, alpha.cycle_count(), k.cycle_count());
    debug_assert!(f % 2 == 0 && a % 2 == 0 && v % 2 == 0);
    Ok((f / 2 + a / 2 + v / 2) as i64 - phi.support_len() as i64)
}

/// χ for two premaps on the same ±I: (#φ + #α + #(φ⁻¹α⁻¹))/2 − |I|.
pub fn euler_characteristic_premaps(phi: &PreMap, alpha: &PreMap) -> i64 {
    let v = phi.perm().inverse().compose(&alpha.perm().inverse()).cycle_count();
    let total = phi.cycle_count() + alpha.cycle_count() + v;
    debug_assert!(total % 2 == 0);
    (total / 2) as i64 - (phi.perm().support_len() / 2) as i64
}

/// The three quantities of the pairing lemma: #(π₁∨π₂), #FD(π₂δπ₁), #(π₁π₂)/2.
/// Pairings act on positive symbols.
pub fn pairing_identities_check(p1: &Pairing, p2: &Pairing) -> Result<(usize, usize, usize)> {
    let (a, b) = (p1.perm(), p2.perm());
    if a.support() != b.support() || a.domain() != b.domain() {
        return Err(Error::DomainMismatch);
    }
    if a.support().iter().any(|&s| s < 0) {
        return Err(Error::Malformed("pairings must act on positive symbols".into()));
    }
    let join = p1.partition().join(&p2.partition())?.len();
    let d = a.domain();
    let sup = a.support();
    let mut table = vec![0; d.size()];
    for &s in &sup {
        // π₂δπ₁ on ±S: π₁ acts on positives, π₂ on positives after δ of negatives.
        table[d.index(s)] = -a.apply(s);
        table[d.index(-s)] = b.apply(s);
    }
    let alt = PreMap::new(SignedPermutation { domain: d, table })?;
    let fd = alt.fd_cycles().len();
    let prod = a.compose(b).cycle_count();
    assert!(prod % 2 == 0);
    Ok((join, fd, prod / 2))
}

/// (−1)^(#(π₁∨π₂)+m) where m counts elements distinguished in both; `rho` must
/// carry π₁ to π₂ and distinguished elements to distinguished elements.
pub fn transport_sign(p1: &Pairing, p2: &Pairing, rho: &SignedPermutation) -> Result<i32> {
    let (d1, d2) = match (p1.distinguished(), p2.distinguished()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Malformed("distinguished elements required".into())),
    };
    for (x, y) in p1.pairs() {
        let (rx, ry) = (rho.apply(x), rho.apply(y));
        if p2.perm().apply(rx) != ry {
            return Err(Error::Malformed("rho does not map p1 to p2".into()));
        }
        let dx = if d1.contains(&x) { x } else { y };
        if !d2.contains(&rho.apply(dx)) {
            return Err(Error::Malformed("rho does not map distinguished elements".into()));
        }
    }
    let join = p1.partition().join(&p2.partition())?.len();
    let m = d1.iter().filter(|x| d2.contains(x)).count();
    Ok(if (join + m) % 2 == 0 { 1 } else { -1 })
}

/// Double factorial (2k−1)!! as u128.
pub fn double_factorial_odd(k: u32) -> u128 {
    (1..=k as u128).map(|i| 2 * i - 1).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: u32) -> SignedDomain {
        SignedDomain::new(n, false)
    }

    fn p(n: u32, s: &str) -> SignedPermutation {
        SignedPermutation::parse_cycles(d(n), s).unwrap()
    }

    #[test]
    fn compose_right_to_left() {
        let a = p(3, "(1,2,3)");
        let b = p(3, "(1,3)(2)");
        assert_eq!(a.compose(&b), p(3, "(1)(2,3)"));
        assert!(p(2, "(1,2)").compose(&p(2, "(1,2)")).is_identity());
        let dl = SignedPermutation::delta(d(3));
        assert!(dl.compose(&dl).is_identity());
    }

    #[test]
    fn sign_is_multiplicative() {
        let a = p(4, "(1,2,3)(4)");
        let b = p(4, "(1,4)(2)(3)");
        assert_eq!(a.compose(&b).sign(), a.sign() * b.sign());
        assert_eq!(b.sign(), -1);
    }

    #[test]
    fn fd_choices() {
        let pm = PreMap::new(p(2, "(1,-2)(2,-1)")).unwrap();
        assert_eq!(pm.fd_cycles(), vec![vec![1, -2]]);
        let pm = PreMap::new(p(2, "(-1,2)(-2,1)")).unwrap();
        assert_eq!(pm.fd_cycles(), vec![vec![1, -2]]);
        let di = SignedDomain::new(4, true);
        let pm = PreMap::new(SignedPermutation::parse_cycles(di, "(inf,4,3)(-3,-4,-inf)(1)(-1)(2)(-2)").unwrap()).unwrap();
        assert_eq!(pm.fd_cycles()[0], vec![5, 4, 3]);
    }

    #[test]
    fn premap_rejects_bad_input() {
        assert!(PreMap::new(p(1, "(1,-1)")).is_err());
        assert!(PreMap::new(p(3, "(1,2,3)(-1,-2,-3)")).is_err());
        assert!(PreMap::new(p(2, "(1,2)(-2,-1)")).is_ok());
    }

    #[test]
    fn join_meet_examples() {
        let a = SetPartition::new(vec![vec![1, 2], vec![3, 4]]);
        let b = SetPartition::new(vec![vec![2, 3], vec![4, 1]]);
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(a.join(&b).unwrap().len(), 1);
        let top = SetPartition::new(vec![vec![1, 2, 3, 4]]);
        assert_eq!(top.meet(&a).unwrap(), a);
        assert!(a.refines(&top) && !top.refines(&a));
    }

    #[test]
    fn induced_deletes_symbols() {
        let c = p(4, "(1,2,3,4)");
        assert_eq!(c.induced(&[1, 3]).unwrap(), p(4, "(1,3)"));
        assert_eq!(c.induced(&[1, 3, 4]).unwrap(), p(4, "(1,3,4)"));
        assert!(c.induced(&[]).is_err());
    }

    #[test]
    fn premap_counts() {
        for n in 1..=5u32 {
            let pos: Vec<Sym> = (1..=n as Sym).collect();
            let all = enumerate_premaps(d(n), &pos);
            assert_eq!(all.len() as u128, double_factorial_odd(n));
            let alt = enumerate_alternating_premaps(d(n), &pos);
            let brute = all.iter().filter(|a| a.is_alternating()).count();
            assert_eq!(alt.len(), brute);
            if n % 2 == 0 {
                let k = double_factorial_odd(n / 2) as usize;
                assert_eq!(alt.len(), k * k);
            }
        }
    }

    #[test]
    fn involution_premaps_match_filter() {
        let pos = [1, 2, 3, 4];
        let all = enumerate_premaps(d(4), &pos);
        let inv = all.iter().filter(|a| a.perm().is_involution() && a.perm().is_fixed_point_free()).count();
        assert_eq!(enumerate_involution_premaps(d(4), &pos, false).len(), inv);
        let alt = all
            .iter()
            .filter(|a| a.perm().is_involution() && a.perm().is_fixed_point_free() && a.is_alternating())
            .count();
        assert_eq!(enumerate_involution_premaps(d(4), &pos, true).len(), alt);
    }

    #[test]
    fn single_matrix_sphere() {
        let phi = p(1, "(1)");
        let e = PreMap::identity(d(1), &[1]);
        assert_eq!(euler_characteristic(&phi, &e).unwrap(), 2);
        assert!(k_vertices(&phi, &e).unwrap().is_identity());
    }

    #[test]
    fn pairing_lemma_examples() {
        let a = Pairing::from_pairs(d(4), &[(1, 2), (3, 4)]).unwrap();
        let b = Pairing::from_pairs(d(4), &[(2, 3), (4, 1)]).unwrap();
        assert_eq!(pairing_identities_check(&a, &b).unwrap(), (1, 1, 1));
        let c = Pairing::from_pairs(d(2), &[(1, 2)]).unwrap();
        assert_eq!(pairing_identities_check(&c, &c).unwrap(), (1, 1, 1));
    }

    #[test]
    fn transport_sign_examples() {
        let a = Pairing::from_pairs(d(4), &[(1, 2), (3, 4)]).unwrap().with_distinguished(vec![1, 3]).unwrap();
        let id = SignedPermutation::identity_on(d(4), &[1, 2, 3, 4]);
        assert_eq!(transport_sign(&a, &a, &id).unwrap(), 1);
        let rho = p(4, "(1,3)(2,4)");
        assert_eq!(transport_sign(&a, &a, &rho).unwrap(), rho.sign());
        let b = Pairing::from_pairs(d(2), &[(1, 2)]).unwrap().with_distinguished(vec![2]).unwrap();
        let c = Pairing::from_pairs(d(2), &[(1, 2)]).unwrap().with_distinguished(vec![1]).unwrap();
        assert_eq!(transport_sign(&c, &b, &p(2, "(1,2)")).unwrap(), -1);
    }

    #[test]
    fn json_round_trip() {
        let di = SignedDomain::new(3, true);
        let x = SignedPermutation::parse_cycles(di, "(inf,1,-3)(2)").unwrap();
        let v = x.to_json();
        assert_eq!(v["cycles"][0][2], "inf");
        assert_eq!(SignedPermutation::from_json(&v).unwrap(), x);
    }
}
