//! Moment–cumulant closed loop: exact oracle moments pushed through the
//! Weingarten convolution reproduce each ensemble's closed-form f(α).

use num_rational::BigRational;
use quatrace::ensemble::{cumulants_from_moments, EnsembleKind, MomentOracle, WgTables};
use quatrace::expansion::DEFAULT_CAP;
use quatrace::oracle::{exact_expectation, OracleSlot};
use quatrace::perm::{enumerate_premaps, PreMap, SignedDomain, Sym};
use quatrace::poly::RatFn;
use quatrace::quaternion::QMat;
use quatrace::weingarten::weingarten_table;
use quatrace::Result;

/// E[Re_π tr_π(X)] for one color at a fixed N, by the exact oracle.
struct OracleMoments {
    kind: EnsembleKind,
    dim: usize,
}

impl MomentOracle for OracleMoments {
    fn moment(&self, pi: &PreMap) -> Result<RatFn> {
        let n = pi.domain().n as usize;
        let slots: Vec<OracleSlot> =
            (0..n).map(|_| OracleSlot { color: 1, kind: self.kind.clone(), eps: 1, y: None }).collect();
        let v: QMat<BigRational> = exact_expectation(pi, pi, &slots, self.dim, DEFAULT_CAP)?;
        Ok(RatFn::from_rational(&v.get(0, 0).a))
    }
}

fn close_loop(kind: EnsembleKind, max_n: u32, dims: &[u64]) {
    let mut tables = WgTables::default();
    for &dim in dims {
        let oracle = OracleMoments { kind: kind.clone(), dim: dim as usize };
        for n in 1..=max_n {
            let d = SignedDomain::new(n, false);
            let pos: Vec<Sym> = (1..=n as Sym).collect();
            let table = weingarten_table(2 * n, Some(dim)).unwrap();
            for alpha in enumerate_premaps(d, &pos) {
                let got = cumulants_from_moments(&oracle, &alpha, &table).unwrap().eval_at(dim as i64).unwrap();
                let want = kind.f(&alpha).unwrap().to_ratfn(&mut tables).unwrap().eval_at(dim as i64).unwrap();
                assert_eq!(got, want, "{} α = {} at N = {dim}", kind.name(), alpha.perm());
            }
        }
    }
}

#[test]
fn gse_cumulants_from_moments() {
    close_loop(EnsembleKind::Gse, 3, &[3, 4]);
}

#[test]
fn ginibre_cumulants_from_moments() {
    close_loop(EnsembleKind::Ginibre, 2, &[2, 3]);
}

#[test]
fn haar_cumulants_from_moments() {
    close_loop(EnsembleKind::HaarSymplectic, 2, &[2, 3]);
}
