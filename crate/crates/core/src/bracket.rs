//! Bracket diagrams: nested `Re(…)` / `tr(…)` placements over an ordered list
//! of signed symbols, their skip-bracket permutations, and the reverse
//! construction from a pair of premaps.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::perm::{PreMap, SetPartition, SignedDomain, SignedPermutation, Sym, UnionFind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Re,
    Tr,
}

impl Tag {
    pub fn name(self) -> &'static str {
        match self {
            Tag::Re => "Re",
            Tag::Tr => "tr",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Open(Tag),
    Close,
    Sym(Sym),
}

/// Why a pair of premaps has no bracket expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obstruction {
    /// Not planar; carries a crossing quadruple (a,b,c,d) when one exists.
    Crossing(Option<[Sym; 4]>),
    GlbViolation,
    /// Some symbol would have to appear as neither X_k nor X_k*.
    SignObstruction(Sym),
}

impl Obstruction {
    pub fn name(&self) -> &'static str {
        match self {
            Obstruction::Crossing(_) => "crossing",
            Obstruction::GlbViolation => "glb-violation",
            Obstruction::SignObstruction(_) => "sign-obstruction",
        }
    }
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Obstruction::Crossing(Some(q)) => write!(f, "crossing ({},{},{},{})", q[0], q[1], q[2], q[3]),
            Obstruction::SignObstruction(k) => write!(f, "sign-obstruction at symbol {}", k.abs()),
            o => write!(f, "{}", o.name()),
        }
    }
}

/// A legal two-tag bracket diagram. The ∞ anchor is implicit at position 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BracketDiagram {
    n: u32,
    tokens: Vec<Token>,
}

impl BracketDiagram {
    /// Validate a token stream over symbols ±1..±n, each absolute value exactly once.
    pub fn new(n: u32, tokens: Vec<Token>) -> Result<Self> {
        let mut seen = vec![false; n as usize + 1];
        let mut depth = 0i32;
        for t in &tokens {
            match *t {
                Token::Open(_) => depth += 1,
                Token::Close => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(Error::Malformed("close without open".into()));
                    }
                }
                Token::Sym(s) => {
                    let a = s.unsigned_abs() as usize;
                    if s == 0 || a > n as usize || seen[a] {
                        return Err(Error::Malformed(format!("bad or repeated symbol {s}")));
                    }
                    seen[a] = true;
                }
            }
        }
        if depth != 0 {
            return Err(Error::Malformed("unclosed bracket".into()));
        }
        if seen.iter().skip(1).any(|&b| !b) {
            return Err(Error::Malformed("missing symbols".into()));
        }
        let d = BracketDiagram { n, tokens };
        for tag in [Tag::Re, Tag::Tr] {
            if d.levels(tag).iter().skip(1).any(|l| l.is_empty()) {
                return Err(Error::Malformed(format!("{} bracket with no direct symbol", tag.name())));
            }
        }
        Ok(d)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn domain(&self) -> SignedDomain {
        SignedDomain::new(self.n, true)
    }

    /// Signed symbols in order, ∞ first.
    pub fn symbol_order(&self) -> Vec<Sym> {
        let mut v = vec![self.domain().inf()];
        v.extend(self.tokens.iter().filter_map(|t| if let Token::Sym(s) = t { Some(*s) } else { None }));
        v
    }

    /// Brackets as (first symbol position, last symbol position, tag); positions
    /// index `symbol_order`.
    pub fn brackets(&self) -> Vec<(usize, usize, Tag)> {
        let mut out = Vec::new();
        let mut stack: Vec<(usize, Tag)> = Vec::new();
        let mut pos = 0usize;
        for t in &self.tokens {
            match *t {
                Token::Open(tag) => stack.push((pos + 1, tag)),
                Token::Close => {
                    let (o, tag) = stack.pop().unwrap();
                    out.push((o, pos, tag));
                }
                Token::Sym(_) => pos += 1,
            }
        }
        out
    }

    /// Symbol groups per level for one tag; level 0 is the top level.
    fn levels(&self, tag: Tag) -> Vec<Vec<Sym>> {
        let mut done = Vec::new();
        let mut stack: Vec<Option<Vec<Sym>>> = vec![Some(Vec::new())];
        for t in &self.tokens {
            match *t {
                Token::Open(t2) => stack.push(if t2 == tag { Some(Vec::new()) } else { None }),
                Token::Close => {
                    if let Some(level) = stack.pop().unwrap() {
                        done.push(level);
                    }
                }
                Token::Sym(s) => {
                    let top = stack.iter_mut().rev().find_map(|l| l.as_mut()).unwrap();
                    top.push(s);
                }
            }
        }
        let mut out = vec![stack.pop().unwrap().unwrap()];
        out.extend(done);
        out
    }

    /// Skip-bracket successor permutation for a tag, on the signed symbols and ∞.
    pub fn perm(&self, tag: Tag) -> SignedPermutation {
        let d = self.domain();
        let mut levels = self.levels(tag);
        levels[0].insert(0, d.inf());
        let cycles: Vec<Vec<Sym>> = levels.into_iter().filter(|l| !l.is_empty()).collect();
        SignedPermutation::from_cycles(d, &cycles).expect("diagram levels form a permutation")
    }

    /// Both tag permutations doubled to premaps.
    pub fn premaps(&self) -> (PreMap, PreMap) {
        (
            PreMap::double(&self.perm(Tag::Re)).unwrap(),
            PreMap::double(&self.perm(Tag::Tr)).unwrap(),
        )
    }

    /// Render with a symbol prefix, e.g. "X" → `X3 Re(X1* X2)`.
    pub fn render(&self, prefix: &str) -> String {
        let mut out = String::new();
        let mut need_space = false;
        for t in &self.tokens {
            match *t {
                Token::Open(tag) => {
                    if need_space {
                        out.push(' ');
                    }
                    out.push_str(tag.name());
                    out.push('(');
                    need_space = false;
                }
                Token::Close => {
                    out.push(')');
                    need_space = true;
                }
                Token::Sym(s) => {
                    if need_space {
                        out.push(' ');
                    }
                    out.push_str(prefix);
                    out.push_str(&s.abs().to_string());
                    if s < 0 {
                        out.push('*');
                    }
                    need_space = true;
                }
            }
        }
        out
    }
}

impl fmt::Display for BracketDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render("X"))
    }
}

/// #(π)+#(ρ)+#(πρ) − |I| = 2#(Π(π)∨Π(ρ)) for permutations on the same support.
pub fn is_planar_on(pi: &SignedPermutation, rho: &SignedPermutation) -> bool {
    assert_eq!(pi.support(), rho.support(), "support mismatch");
    let lhs = pi.cycle_count() + rho.cycle_count() + pi.compose(rho).cycle_count();
    let join = pi.orbits().join(&rho.orbits()).unwrap().len();
    lhs as i64 - pi.support_len() as i64 == 2 * join as i64
}

/// Connected components of the graph generated by two premaps on ±I.
fn components(a: &SignedPermutation, b: &SignedPermutation) -> Vec<Vec<Sym>> {
    let d = a.domain();
    let sup = a.support();
    let mut uf = UnionFind::new(d.size());
    for &s in &sup {
        uf.union(d.index(s), d.index(a.apply(s)));
        uf.union(d.index(s), d.index(b.apply(s)));
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Sym>> = Default::default();
    for &s in &sup {
        groups.entry(uf.find(d.index(s))).or_default().push(s);
    }
    groups.into_values().collect()
}

/// Choose J: one component from each mirror pair (+∞, else smallest |k| positive).
/// Fails on a self-mirrored component.
fn choose_orientation(a: &SignedPermutation, b: &SignedPermutation) -> std::result::Result<Vec<Sym>, Sym> {
    let d = a.domain();
    let mut j = Vec::new();
    for c in components(a, b) {
        let set: HashSet<Sym> = c.iter().copied().collect();
        if let Some(&s) = c.iter().find(|&&s| set.contains(&-s)) {
            return Err(s);
        }
        let keep = if let Some(&s) = c.iter().find(|&&s| d.is_inf(s)) {
            s > 0
        } else {
            *c.iter().min_by_key(|s| (s.abs(), **s < 0)).unwrap() > 0
        };
        if keep {
            j.extend(c);
        }
    }
    j.sort_by_key(|&s| d.index(s));
    Ok(j)
}

/// Premap planarity: a witness J (union of cycles of both, one of ±k each)
/// with π|_J planar on ρ|_J.
pub fn is_planar_on_premaps(pi: &PreMap, rho: &PreMap) -> Option<Vec<Sym>> {
    let (a, b) = (pi.perm(), rho.perm());
    let j = choose_orientation(a, b).ok()?;
    if is_planar_on(&a.restrict(&j), &b.restrict(&j)) {
        Some(j)
    } else {
        None
    }
}

/// #(Π(π)) + #(Π(ρ)) = #(∧) + #(∨) on absolute-value orbits.
pub fn glb_condition(pi: &SignedPermutation, rho: &SignedPermutation) -> bool {
    let (p, r) = (abs_orbits(pi), abs_orbits(rho));
    p.len() + r.len() == p.meet(&r).unwrap().len() + p.join(&r).unwrap().len()
}

fn abs_orbits(p: &SignedPermutation) -> SetPartition {
    SetPartition::new(p.cycles().into_iter().map(|c| c.into_iter().map(|s| s.abs()).collect()).collect())
}

/// Witness for the upper-bound lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBoundWitness {
    pub sigma: SignedPermutation,
    pub geodesic: bool,
    pub planar: bool,
}

/// The four conditions of the upper-bound lemma and a witness when they hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBoundStatus {
    /// (1) some upper bound exists; (2) one with Π(σ) = Π(π)∨Π(ρ);
    /// (3) one on a geodesic; (4) π planar on ρ⁻¹.
    pub conditions: [bool; 4],
    pub witness: Option<UpperBoundWitness>,
}

impl UpperBoundStatus {
    pub fn agree(&self) -> bool {
        self.conditions.iter().all(|&c| c == self.conditions[0])
    }
}

/// Everything reachable from `p` by joining two cycles with a transposition.
pub fn join_closure(p: &SignedPermutation) -> HashSet<SignedPermutation> {
    let sup = p.support();
    let d = p.domain();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(p.clone());
    queue.push_back(p.clone());
    while let Some(s) = queue.pop_front() {
        let orb = s.orbits();
        let blocks = orb.blocks();
        for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                for &a in &blocks[i] {
                    for &b in &blocks[j] {
                        let t = SignedPermutation::from_cycles(d, &[vec![a, b]]).unwrap();
                        let t = t.compose(&SignedPermutation::identity_on(d, &sup));
                        let next = t.compose(&s);
                        if seen.insert(next.clone()) {
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
    }
    seen
}

fn is_geodesic(pi: &SignedPermutation, rho: &SignedPermutation, sigma: &SignedPermutation) -> bool {
    let lhs = (pi.cycle_count() + rho.cycle_count()) as i64 - 2 * sigma.cycle_count() as i64;
    let rhs = pi.support_len() as i64 - rho.compose(&pi.inverse()).cycle_count() as i64;
    lhs == rhs
}

/// Decide the four equivalent upper-bound conditions. Condition (1)–(3) use a
/// brute-force search over the join closures, so supports are kept small.
pub fn upper_bound_status(pi: &SignedPermutation, rho: &SignedPermutation) -> UpperBoundStatus {
    assert_eq!(pi.support(), rho.support(), "support mismatch");
    let join = pi.orbits().join(&rho.orbits()).unwrap();
    let up_pi = join_closure(pi);
    let up_rho = join_closure(rho);
    let mut common: Vec<&SignedPermutation> = up_pi.intersection(&up_rho).collect();
    common.sort_by_key(|s| s.to_string());
    let c1 = !common.is_empty();
    let c2 = common.iter().any(|s| s.orbits() == join);
    let c3 = common.iter().any(|s| is_geodesic(pi, rho, s));
    let c4 = is_planar_on(pi, &rho.inverse());
    let witness = common
        .iter()
        .find(|s| s.orbits() == join && is_geodesic(pi, rho, s))
        .or_else(|| common.first())
        .map(|s| UpperBoundWitness {
            sigma: (*s).clone(),
            geodesic: is_geodesic(pi, rho, s),
            planar: c4,
        });
    UpperBoundStatus { conditions: [c1, c2, c3, c4], witness }
}

/// What the fresh-start branch of the ζ construction does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZetaMode {
    /// Fresh starts open a new cycle.
    #[default]
    LeastUpperBound,
    /// Fresh starts continue the current cycle.
    Cyclic,
}

/// Build ζ from premaps on ±[n]_∞ with φ_Re planar on φ_tr⁻¹.
pub fn construct_zeta(phi_re: &PreMap, phi_tr: &PreMap, mode: ZetaMode) -> std::result::Result<SignedPermutation, Obstruction> {
    let (cycles, _) = zeta_cycles(phi_re, phi_tr, mode)?;
    let d = phi_re.domain();
    Ok(SignedPermutation::from_cycles(d, &cycles).expect("zeta cycles"))
}

fn zeta_cycles(phi_re: &PreMap, phi_tr: &PreMap, mode: ZetaMode) -> std::result::Result<(Vec<Vec<Sym>>, Vec<Sym>), Obstruction> {
    let d = phi_re.domain();
    assert!(d.has_infinity, "bracket construction needs the point at infinity");
    let (a, b) = (phi_re.perm(), phi_tr.perm());
    let j = choose_orientation(a, b).map_err(Obstruction::SignObstruction)?;
    let tr_inv = b.inverse();
    if !is_planar_on(&a.restrict(&j), &tr_inv.restrict(&j)) {
        return Err(Obstruction::Crossing(crossing_quadruple(&a.restrict(&j), &b.restrict(&j))));
    }
    // φ_tr orbit ids
    let mut orbit = vec![usize::MAX; d.size()];
    for (i, c) in b.cycles().iter().enumerate() {
        for &s in c {
            orbit[d.index(s)] = i;
        }
    }
    let total = d.n as usize + 1;
    let mut appeared = vec![false; total + 1];
    let mut orbit_hit = vec![false; b.cycles().len()];
    let mut chosen: Vec<Sym> = Vec::with_capacity(total);
    let mut cycles: Vec<Vec<Sym>> = vec![Vec::new()];
    let mut choose = |s: Sym, chosen: &mut Vec<Sym>, cycles: &mut Vec<Vec<Sym>>, fresh: bool| -> std::result::Result<(), Obstruction> {
        if appeared[s.unsigned_abs() as usize] {
            return Err(Obstruction::SignObstruction(s));
        }
        appeared[s.unsigned_abs() as usize] = true;
        orbit_hit[orbit[d.index(s)]] = true;
        chosen.push(s);
        if fresh && mode == ZetaMode::LeastUpperBound && !cycles.last().unwrap().is_empty() {
            cycles.push(Vec::new());
        }
        cycles.last_mut().unwrap().push(s);
        Ok(())
    };
    choose(d.inf(), &mut chosen, &mut cycles, false)?;
    while chosen.len() < total {
        let k = *chosen.last().unwrap();
        let r = a.apply(k);
        let next = if !orbit_hit_of(&chosen, &orbit, d, r) {
            Some(r)
        } else {
            chosen.iter().rev().map(|&x| b.apply(x)).find(|t| !chosen.iter().any(|c| c.abs() == t.abs()))
        };
        match next {
            Some(s) => choose(s, &mut chosen, &mut cycles, false)?,
            None => {
                let fresh = (1..=d.n as Sym).find(|&s| !chosen.iter().any(|c| c.abs() == s)).unwrap();
                let s = if j.contains(&fresh) { fresh } else { -fresh };
                choose(s, &mut chosen, &mut cycles, true)?;
            }
        }
    }
    Ok((cycles, j))
}

fn orbit_hit_of(chosen: &[Sym], orbit: &[usize], d: SignedDomain, r: Sym) -> bool {
    let o = orbit[d.index(r)];
    chosen.iter().any(|&c| orbit[d.index(c)] == o)
}

/// A quadruple with π|{a,b,c,d} = (a,b,c,d) whose ρ-orbits pair a with c and b with d.
fn crossing_quadruple(pi: &SignedPermutation, rho: &SignedPermutation) -> Option<[Sym; 4]> {
    let orb = rho.orbits();
    let block_of = |s: Sym| orb.blocks().iter().position(|b| b.contains(&s)).unwrap();
    for c in pi.cycles() {
        let m = c.len();
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    for l in k + 1..m {
                        let (a, b, cc, dd) = (c[i], c[j], c[k], c[l]);
                        if block_of(a) == block_of(cc) && block_of(b) == block_of(dd) && block_of(a) != block_of(b) {
                            return Some([a, b, cc, dd]);
                        }
                    }
                }
            }
        }
    }
    None
}

/// Construct a bracket diagram whose tag permutations are FD representatives
/// of the inputs, or name the obstruction.
pub fn bracketize(phi_re: &PreMap, phi_tr: &PreMap) -> std::result::Result<BracketDiagram, Obstruction> {
    let d = phi_re.domain();
    let (cycles, j) = zeta_cycles(phi_re, phi_tr, ZetaMode::LeastUpperBound)?;
    let re = phi_re.perm().restrict(&j);
    let tr = phi_tr.perm().restrict(&j);
    if !glb_condition(&re, &tr) {
        return Err(Obstruction::GlbViolation);
    }
    let order: Vec<Sym> = cycles.iter().flatten().copied().collect();
    let mut pos = vec![usize::MAX; d.size()];
    for (i, &s) in order.iter().enumerate() {
        pos[d.index(s)] = i;
    }
    let mut intervals: Vec<(usize, usize, Tag)> = Vec::new();
    for (tag, p) in [(Tag::Re, &re), (Tag::Tr, &tr)] {
        for c in p.cycles() {
            if c.iter().any(|&s| d.is_inf(s)) {
                continue;
            }
            let lo = c.iter().map(|&s| pos[d.index(s)]).min().unwrap();
            let hi = c.iter().map(|&s| pos[d.index(s)]).max().unwrap();
            intervals.push((lo, hi, tag));
        }
    }
    // a bracket also spans nested brackets of the other tag that close after
    // its last member; grow partially overlapping intervals to a fixpoint
    let mut changed = true;
    while changed {
        changed = false;
        for x in 0..intervals.len() {
            for y in 0..intervals.len() {
                let ((a, b, _), (c, e, _)) = (intervals[x], intervals[y]);
                if a < c && c <= b && b < e {
                    intervals[x].1 = e;
                    changed = true;
                }
            }
        }
    }
    // outer first: earlier open, later close, Re outside tr on ties
    intervals.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)).then(x.2.cmp(&y.2)));
    let mut tokens = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 0;
    for (p, &s) in order.iter().enumerate().skip(1) {
        while next < intervals.len() && intervals[next].0 == p {
            tokens.push(Token::Open(intervals[next].2));
            stack.push(intervals[next].1);
            next += 1;
        }
        tokens.push(Token::Sym(s));
        while stack.last() == Some(&p) {
            stack.pop();
            tokens.push(Token::Close);
        }
    }
    let diagram = BracketDiagram::new(d.n, tokens).map_err(|_| Obstruction::GlbViolation)?;
    if diagram.perm(Tag::Re) != re || diagram.perm(Tag::Tr) != tr {
        return Err(Obstruction::GlbViolation);
    }
    Ok(diagram)
}

/// Bracketize and lift failures into the crate error type.
pub fn bracketize_checked(phi_re: &PreMap, phi_tr: &PreMap) -> Result<BracketDiagram> {
    bracketize(phi_re, phi_tr).map_err(Error::NotBracketable)
}

/// A random legal diagram with `n` symbols, random stars, and up to
/// `max_pairs` bracket pairs.
pub fn random_diagram<R: Rng + ?Sized>(rng: &mut R, n: u32, max_pairs: usize) -> BracketDiagram {
    loop {
        let mut syms: Vec<Sym> = (1..=n as Sym).collect();
        syms.shuffle(rng);
        for s in &mut syms {
            if rng.gen_bool(0.3) {
                *s = -*s;
            }
        }
        let want = rng.gen_range(0..=max_pairs);
        let mut intervals: Vec<(usize, usize, Tag)> = Vec::new();
        let mut tries = 0;
        while intervals.len() < want && tries < 50 {
            tries += 1;
            let a = rng.gen_range(0..n as usize);
            let b = rng.gen_range(a..n as usize);
            let tag = if rng.gen_bool(0.5) { Tag::Re } else { Tag::Tr };
            let ok = intervals.iter().all(|&(c, e, t)| {
                let nested = (a <= c && e <= b) || (c <= a && b <= e);
                let disjoint = b < c || e < a;
                (nested || disjoint) && !(a == c && b == e && t == tag)
            });
            if ok {
                intervals.push((a, b, tag));
            }
        }
        intervals.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)).then(x.2.cmp(&y.2)));
        let mut tokens = Vec::new();
        let mut stack = Vec::new();
        let mut next = 0;
        for (p, &s) in syms.iter().enumerate() {
            while next < intervals.len() && intervals[next].0 == p {
                tokens.push(Token::Open(intervals[next].2));
                stack.push(intervals[next].1);
                next += 1;
            }
            tokens.push(Token::Sym(s));
            while stack.last() == Some(&p) {
                stack.pop();
                tokens.push(Token::Close);
            }
        }
        if let Ok(d) = BracketDiagram::new(n, tokens) {
            return d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(n: u32, inf: bool, s: &str) -> SignedPermutation {
        SignedPermutation::parse_cycles(SignedDomain::new(n, inf), s).unwrap()
    }

    fn pm(n: u32, s: &str) -> PreMap {
        PreMap::double(&perm(n, true, s)).unwrap()
    }

    #[test]
    fn no_brackets_single_cycle() {
        let d = BracketDiagram::new(3, vec![Token::Sym(1), Token::Sym(2), Token::Sym(3)]).unwrap();
        assert_eq!(d.perm(Tag::Re), perm(3, true, "(inf,1,2,3)"));
        assert_eq!(d.render("X"), "X1 X2 X3");
    }

    #[test]
    fn crossing_pattern_not_planar() {
        let a = perm(4, false, "(1,2,3,4)");
        let b = perm(4, false, "(1,3)(2,4)");
        assert!(!is_planar_on(&a, &b));
        assert!(is_planar_on(&a, &a.inverse()));
        let pa = PreMap::double(&a).unwrap();
        let pb = PreMap::double(&b).unwrap();
        assert!(is_planar_on_premaps(&pa, &pb).is_none());
    }

    #[test]
    fn upper_bounds_examples() {
        let a = perm(4, false, "(1,2,3,4)");
        let b = perm(4, false, "(1,3)(2,4)");
        let st = upper_bound_status(&a, &b);
        assert_eq!(st.conditions, [false; 4]);
        let st = upper_bound_status(&a, &a);
        assert!(st.conditions.iter().all(|&c| c));
        assert_eq!(st.witness.unwrap().sigma, a);
    }

    #[test]
    fn glb_examples() {
        let a = perm(4, true, "(inf,1,4)(2,3)");
        let b = perm(4, true, "(inf,1,2)(3,4)");
        assert!(!glb_condition(&a, &b));
        assert!(glb_condition(&a, &a));
        let pa = PreMap::double(&a).unwrap();
        let pb = PreMap::double(&b).unwrap();
        assert_eq!(bracketize(&pa, &pb), Err(Obstruction::GlbViolation));
    }

    #[test]
    fn identity_inputs_give_plain_product() {
        let p = pm(3, "(inf,1,2,3)");
        assert_eq!(bracketize(&p, &p).unwrap().render("X"), "X1 X2 X3");
    }

    #[test]
    fn sign_obstruction_detected() {
        let re = pm(4, "(inf)(1,3)(2,4)");
        let tr = pm(4, "(inf)(1,-2,3,4)");
        assert!(matches!(bracketize(&re, &tr), Err(Obstruction::SignObstruction(_))));
    }

    #[test]
    fn remark_pair_is_crossing() {
        let re = pm(4, "(inf)(1,2,3,4)");
        let tr = pm(4, "(inf)(1,3)(2,4)");
        let e = bracketize(&re, &tr).unwrap_err();
        assert_eq!(e.name(), "crossing");
    }

    #[test]
    fn inner_tr_inside_re_inside_tr() {
        let d = crate::dsl::parse_labeled_diagram("tr(X3 X2 Re(X1 tr(X4)))").unwrap();
        let (re, tr) = d.premaps();
        let back = bracketize(&re, &tr).unwrap();
        assert_eq!(back.premaps(), (re, tr));
        assert_eq!(back.render("X"), "tr(X3 X2 Re(X1 tr(X4)))");
    }

    #[test]
    fn bracket_splits_one_cycle() {
        let base = BracketDiagram::new(3, vec![Token::Sym(1), Token::Sym(2), Token::Sym(3)]).unwrap();
        let more = BracketDiagram::new(
            3,
            vec![Token::Sym(1), Token::Open(Tag::Re), Token::Sym(2), Token::Sym(3), Token::Close],
        )
        .unwrap();
        assert_eq!(more.perm(Tag::Re).cycle_count(), base.perm(Tag::Re).cycle_count() + 1);
        assert_eq!(more.perm(Tag::Tr), base.perm(Tag::Tr));
    }
}
