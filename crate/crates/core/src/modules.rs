//! Vacuum modules of V(gl(N)) and V(gl(N))⊗V(gl(N)) with exact straightening.
//!
//! A state is a finite combination of PBW monomials: sorted products of
//! negative-mode generators applied to |0⟩. Applying a generator commutes it to
//! the right with the loop bracket until it either lands in sorted position
//! (negative modes) or hits the vacuum (nonnegative modes, which annihilate it).
//! Nothing is ever projected away, so every evaluation is exact.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;
use rustc_hash::{FxBuildHasher, FxHashMap};
use serde::Serialize;
use smallvec::SmallVec;

use crate::coeffs::ParamPoint;
use crate::error::{Error, Result};
use crate::loopalg::{bracket, Factor, LoopGen, OpExpr};
use crate::rational::Rational;

pub const DEFAULT_BASIS_CAP: u128 = 5_000_000;

/// Sorted generator codes; see [`TruncatedModule::code`].
pub type Monomial = SmallVec<[u16; 6]>;

/// A vector in the module, keyed by PBW monomial. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct State(pub FxHashMap<Monomial, Rational>);

impl State {
    pub fn zero() -> Self {
        State(FxHashMap::default())
    }

    pub fn basis(m: Monomial) -> Self {
        let mut s = Self::zero();
        s.0.insert(m, Rational::ONE);
        s
    }

    pub fn vacuum() -> Self {
        Self::basis(Monomial::new())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, m: &[u16]) -> Rational {
        self.0.get(m).cloned().unwrap_or(Rational::ZERO)
    }

    pub fn add_term(&mut self, m: Monomial, c: &Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                let v = e.get() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
        }
    }

    pub fn add_scaled(&mut self, other: &State, c: &Rational) {
        if c.is_zero() {
            return;
        }
        if c.is_one() {
            for (m, v) in &other.0 {
                self.add_term(m.clone(), v);
            }
        } else {
            for (m, v) in &other.0 {
                self.add_term(m.clone(), &(v * c));
            }
        }
    }

    pub fn scaled(&self, c: &Rational) -> State {
        let mut out = State::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn sub(&self, other: &State) -> State {
        let mut out = self.clone();
        out.add_scaled(other, &-Rational::ONE);
        out
    }

    /// Entries sorted by monomial, for deterministic output.
    pub fn sorted(&self) -> Vec<(&Monomial, &Rational)> {
        let mut v: Vec<_> = self.0.iter().collect();
        v.sort_by(|a, b| (a.0.len(), a.0).cmp(&(b.0.len(), b.0)));
        v
    }
}

/// Matrix of an operator on the degree-≤source_degree block; column k is the
/// image of basis element k. Rows are keyed by monomial.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pub source_degree: usize,
    pub columns: Vec<State>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub input: String,
    pub output: String,
    pub lhs: Rational,
    pub rhs: Rational,
}

pub struct TruncatedModule {
    pub n: usize,
    pub degree: usize,
    pub factors: usize,
    pub point: ParamPoint,
    level: Rational,
    basis: Vec<Monomial>,
    index: FxHashMap<Monomial, usize>,
    cap: u128,
    act_cache: DashMap<(LoopGen, Monomial), Arc<State>, FxBuildHasher>,
    act_inserts: AtomicUsize,
    id: u64,
}

/// Entries kept in the generator-action cache before it is flushed.
const ACT_CACHE_LIMIT: usize = 1 << 21;

static NEXT_ID: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(1);

/// Number of PBW monomials of each degree 0..=d with `gens` generators per mode.
pub fn graded_dimensions(gens: usize, d: usize) -> Vec<u128> {
    let mut dims = vec![0u128; d + 1];
    dims[0] = 1;
    for s in 1..=d {
        // multiply by 1/(1 - x^s)^gens, one factor at a time
        for _ in 0..gens {
            for k in s..=d {
                dims[k] = dims[k].saturating_add(dims[k - s]);
            }
        }
    }
    dims
}

pub fn dimension_up_to(gens: usize, d: usize) -> u128 {
    graded_dimensions(gens, d).iter().fold(0u128, |a, b| a.saturating_add(*b))
}

pub fn build_module(n: usize, degree: usize, factors: usize, point: ParamPoint) -> Result<TruncatedModule> {
    build_module_with_cap(n, degree, factors, point, DEFAULT_BASIS_CAP)
}

pub fn build_module_with_cap(
    n: usize,
    degree: usize,
    factors: usize,
    point: ParamPoint,
    cap: u128,
) -> Result<TruncatedModule> {
    if n < 2 {
        return Err(Error::Config(format!("module rank must be at least 2, got {n}")));
    }
    if !(1..=2).contains(&factors) {
        return Err(Error::Config(format!("tensor factor count must be 1 or 2, got {factors}")));
    }
    let gens = factors * n * n;
    let dim = dimension_up_to(gens, degree);
    if dim > cap {
        return Err(Error::ResourceCap {
            what: format!("module N={n} D={degree} factors={factors}"),
            needed: dim,
            cap,
        });
    }
    let mut m = TruncatedModule {
        n,
        degree,
        factors,
        level: point.level().clone(),
        point,
        basis: Vec::new(),
        index: FxHashMap::default(),
        cap,
        act_cache: DashMap::with_hasher(FxBuildHasher),
        act_inserts: AtomicUsize::new(0),
        id: NEXT_ID.fetch_add(1, std::sync::atomic::Ordering::Relaxed),
    };
    let basis = match cache_dir() {
        Some(dir) => {
            let path = dir.join(m.cache_file_name());
            match load_basis(&path, &m) {
                Ok(b) => b,
                Err(_) => {
                    let b = m.enumerate_basis();
                    // a failed cache write only loses the speedup
                    let _ = store_basis(&path, &m, &b);
                    b
                }
            }
        }
        None => m.enumerate_basis(),
    };
    m.index = basis.iter().enumerate().map(|(k, b)| (b.clone(), k)).collect();
    m.basis = basis;
    Ok(m)
}

impl TruncatedModule {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn level(&self) -> &Rational {
        &self.level
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn index_of(&self, m: &[u16]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn fingerprint(&self) -> ModuleFingerprint {
        ModuleFingerprint { n: self.n, degree: self.degree, factors: self.factors }
    }

    /// Generators per mode.
    pub fn gens_per_mode(&self) -> usize {
        self.factors * self.n * self.n
    }

    /// Code of a negative-mode generator; codes increase with (−mode, slot, row, col).
    pub fn code(&self, g: LoopGen) -> u16 {
        debug_assert!(g.mode < 0);
        let s = (-g.mode - 1) as usize;
        let nn = self.n * self.n;
        ((s * self.factors + (g.slot as usize - 1)) * nn + (g.row as usize - 1) * self.n + (g.col as usize - 1)) as u16
    }

    pub fn decode(&self, c: u16) -> LoopGen {
        let c = c as usize;
        let nn = self.n * self.n;
        let within = c % nn;
        let rest = c / nn;
        LoopGen {
            slot: (rest % self.factors + 1) as u8,
            row: (within / self.n + 1) as u8,
            col: (within % self.n + 1) as u8,
            mode: -((rest / self.factors + 1) as i32),
        }
    }

    pub fn monomial_degree(&self, m: &[u16]) -> usize {
        m.iter().map(|c| *c as usize / self.gens_per_mode() + 1).sum()
    }

    pub fn monomial(&self, gens: &[LoopGen]) -> Monomial {
        let mut m: Monomial = gens.iter().map(|g| self.code(*g)).collect();
        m.sort_unstable();
        m
    }

    pub fn basis_state(&self, gens: &[LoopGen]) -> State {
        State::basis(self.monomial(gens))
    }

    pub fn describe(&self, m: &[u16]) -> String {
        if m.is_empty() {
            return "|0>".into();
        }
        let mut s = String::new();
        for c in m {
            let g = self.decode(*c);
            if self.factors == 2 {
                s.push_str(&format!("E{}[{},{};{}]", g.slot, g.row, g.col, g.mode));
            } else {
                s.push_str(&format!("E[{},{};{}]", g.row, g.col, g.mode));
            }
        }
        s.push_str("|0>");
        s
    }

    fn enumerate_basis(&self) -> Vec<Monomial> {
        let per = self.gens_per_mode();
        let mut out = vec![Monomial::new()];
        for d in 1..=self.degree {
            let mut cur = Monomial::new();
            self.enumerate_rec(d, 0, per, &mut cur, &mut out);
        }
        out
    }

    fn enumerate_rec(
        &self,
        remaining: usize,
        min_code: usize,
        per: usize,
        cur: &mut Monomial,
        out: &mut Vec<Monomial>,
    ) {
        if remaining == 0 {
            out.push(cur.clone());
            return;
        }
        let max_code = remaining * per;
        for c in min_code..max_code {
            let s = c / per + 1;
            if s > remaining {
                break;
            }
            cur.push(c as u16);
            self.enumerate_rec(remaining - s, c, per, cur, out);
            cur.pop();
        }
    }

    /// Refuse work whose intermediate states could exceed the basis cap.
    pub fn check_headroom(&self, source_degree: usize, headroom: usize, what: &str) -> Result<()> {
        let needed = dimension_up_to(self.gens_per_mode(), source_degree + headroom);
        if needed > self.cap {
            return Err(Error::ResourceCap { what: what.to_string(), needed, cap: self.cap });
        }
        Ok(())
    }

    /// Exact action of one generator on one PBW monomial.
    pub fn act(&self, g: LoopGen, m: &[u16]) -> Arc<State> {
        if g.mode >= 0 && (m.is_empty() || g.mode as usize > self.monomial_degree(m)) {
            return Arc::new(State::zero());
        }
        if g.mode < 0 {
            let c = self.code(g);
            if m.first().is_none_or(|y| c <= *y) {
                let mut out: Monomial = SmallVec::with_capacity(m.len() + 1);
                out.push(c);
                out.extend_from_slice(m);
                return Arc::new(State::basis(out));
            }
        }
        let key = (g, Monomial::from_slice(m));
        if let Some(v) = self.act_cache.get(&key) {
            return v.clone();
        }
        let res = Arc::new(self.act_uncached(g, m));
        if self.act_inserts.fetch_add(1, Ordering::Relaxed) >= ACT_CACHE_LIMIT {
            self.act_cache.clear();
            self.act_inserts.store(0, Ordering::Relaxed);
        }
        self.act_cache.insert(key, res.clone());
        res
    }

    fn act_uncached(&self, g: LoopGen, m: &[u16]) -> State {
        let y1 = m[0];
        let rest = &m[1..];
        let yg = self.decode(y1);
        let br = bracket(g, yg);
        let mut out = State::zero();
        for (c, h) in &br.gens {
            out.add_scaled(&self.act(*h, rest), &Rational::from_int(*c));
        }
        let scalar = br.scalar(&self.level);
        if !scalar.is_zero() {
            out.add_term(Monomial::from_slice(rest), &scalar);
        }
        let moved = self.act(g, rest);
        if g.mode < 0 {
            // everything produced from `rest` sorts after y1
            for (mono, c) in &moved.0 {
                debug_assert!(mono.first().is_none_or(|z| *z >= y1));
                let mut p: Monomial = SmallVec::with_capacity(mono.len() + 1);
                p.push(y1);
                p.extend_from_slice(mono);
                out.add_term(p, c);
            }
        } else {
            for (mono, c) in &moved.0 {
                out.add_scaled(&self.act(yg, mono), c);
            }
        }
        out
    }

    /// Apply one generator to a state.
    pub fn act_state(&self, g: LoopGen, v: &State) -> State {
        let mut out = State::zero();
        for (m, c) in &v.0 {
            out.add_scaled(&self.act(g, m), c);
        }
        out
    }

    pub fn apply_factor(&self, f: &Factor, v: &State) -> State {
        match f {
            Factor::Level => v.scaled(&self.level),
            Factor::Gen { label, mode } => {
                let mut out = State::zero();
                for slot in label.slot_list() {
                    if slot as usize > self.factors {
                        continue;
                    }
                    let g = LoopGen { slot, row: label.row, col: label.col, mode: *mode };
                    out.add_scaled(&self.act_state(g, v), &Rational::ONE);
                }
                out
            }
            Factor::Series(sn) => {
                let mut out = State::zero();
                for (m, c) in &v.0 {
                    let d = self.monomial_degree(m) as i64;
                    let top = d - sn.b as i64;
                    for s in 0..=top.max(-1) {
                        for rs in sn.right.slot_list() {
                            if rs as usize > self.factors {
                                continue;
                            }
                            let rg = LoopGen { slot: rs, row: sn.right.row, col: sn.right.col, mode: s as i32 + sn.b };
                            let mid = self.act(rg, m);
                            if mid.is_zero() {
                                continue;
                            }
                            for ls in sn.left.slot_list() {
                                if ls as usize > self.factors {
                                    continue;
                                }
                                let lg =
                                    LoopGen { slot: ls, row: sn.left.row, col: sn.left.col, mode: -(s as i32) - sn.a };
                                for (m2, c2) in &mid.0 {
                                    out.add_scaled(&self.act(lg, m2), &(c * c2));
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Apply an expression to a state (each word right-to-left).
    pub fn apply_expr(&self, e: &OpExpr, v: &State) -> State {
        let mut out = State::zero();
        for t in &e.terms {
            let mut cur = v.clone();
            for f in t.word.iter().rev() {
                if cur.is_zero() {
                    break;
                }
                cur = self.apply_factor(f, &cur);
            }
            out.add_scaled(&cur, &t.coef);
        }
        out
    }

    /// Indices of basis elements of degree ≤ d (basis is sorted by degree).
    pub fn block(&self, d: usize) -> std::ops::Range<usize> {
        let end = self.basis.partition_point(|m| self.monomial_degree(m) <= d);
        0..end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModuleFingerprint {
    pub n: usize,
    pub degree: usize,
    pub factors: usize,
}

pub fn act_generator(m: &TruncatedModule, g: LoopGen, source_degree: usize) -> SparseOperator {
    let block = m.block(source_degree);
    let columns = m.basis[block].par_iter().map(|b| (*m.act(g, b)).clone()).collect();
    SparseOperator { source_degree, columns }
}

pub fn evaluate_expr(m: &TruncatedModule, e: &OpExpr, source_degree: usize) -> Result<SparseOperator> {
    let (_, peak) = e.degree_profile();
    m.check_headroom(source_degree, peak.max(0) as usize, &format!("evaluating {e}"))?;
    let block = m.block(source_degree);
    let columns = m.basis[block].par_iter().map(|b| m.apply_expr(e, &State::basis(b.clone()))).collect();
    Ok(SparseOperator { source_degree, columns })
}

/// Compare two columns; on mismatch report the first differing output monomial.
pub fn first_difference(m: &TruncatedModule, input: &[u16], a: &State, b: &State) -> Option<Witness> {
    let diff = a.sub(b);
    if diff.is_zero() {
        return None;
    }
    let (out, _) = diff.sorted()[0];
    Some(Witness { input: m.describe(input), output: m.describe(out), lhs: a.get(out), rhs: b.get(out) })
}

pub fn operator_equal(
    m: &TruncatedModule,
    a: &SparseOperator,
    b: &SparseOperator,
    source_degree: usize,
) -> (bool, Option<Witness>) {
    let block = m.block(source_degree.min(a.source_degree).min(b.source_degree));
    for k in block {
        if let Some(w) = first_difference(m, &m.basis[k], &a.columns[k], &b.columns[k]) {
            return (false, Some(w));
        }
    }
    (true, None)
}

pub const CACHE_ENV: &str = "YANGIAN_MODULE_CACHE";
const MAGIC: &[u8; 8] = b"YGNBASIS";
const CACHE_VERSION: u32 = 1;

fn cache_dir() -> Option<std::path::PathBuf> {
    std::env::var_os(CACHE_ENV).map(Into::into)
}

impl TruncatedModule {
    fn cache_key(&self) -> String {
        format!("N={};D={};factors={};{}", self.n, self.degree, self.factors, self.point.fingerprint())
    }

    fn cache_file_name(&self) -> String {
        use std::hash::{Hash, Hasher};
        let mut h = rustc_hash::FxHasher::default();
        self.cache_key().hash(&mut h);
        format!("basis-{}-{}-{}-{:016x}.bin", self.n, self.degree, self.factors, h.finish())
    }
}

/// Write a basis in the versioned little-endian cache format.
pub fn store_basis(path: &Path, m: &TruncatedModule, basis: &[Monomial]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    let key = m.cache_key();
    buf.extend_from_slice(&(key.len() as u32).to_le_bytes());
    buf.extend_from_slice(key.as_bytes());
    buf.extend_from_slice(&(basis.len() as u64).to_le_bytes());
    for mono in basis {
        buf.push(mono.len() as u8);
        for c in mono {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_basis(path: &Path, m: &TruncatedModule) -> Result<Vec<Monomial>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let bad = |msg: &str| Error::Cache(format!("{}: {msg}", path.display()));
    let mut pos = 0usize;
    let mut take = |k: usize| -> Result<&[u8]> {
        let s = buf.get(pos..pos + k).ok_or_else(|| bad("truncated"))?;
        pos += k;
        Ok(s)
    };
    if take(8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(bad("unsupported version"));
    }
    let klen = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if take(klen)? != m.cache_key().as_bytes() {
        return Err(bad("key mismatch"));
    }
    let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = take(1)?[0] as usize;
        let bytes = take(2 * len)?;
        out.push(bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_param_point, EpsConvention, ModuleFlavor};
    use crate::loopalg::Label;
    use proptest::prelude::*;

    fn point(h: (i64, i64), e: (i64, i64)) -> ParamPoint {
        make_param_point(
            Rational::new(h.0, h.1),
            Rational::new(e.0, e.1),
            ModuleFlavor::Evaluation,
            3,
            EpsConvention::Maim,
        )
        .unwrap()
    }

    fn module(n: usize, d: usize, f: usize) -> TruncatedModule {
        build_module(n, d, f, point((3, 7), (5, 11))).unwrap()
    }

    fn g(i: usize, j: usize, s: i32) -> LoopGen {
        LoopGen::new(i, j, s)
    }

    #[test]
    fn dimensions() {
        assert_eq!(module(2, 1, 1).dim(), 5);
        assert_eq!(module(2, 2, 1).dim(), 19);
        assert_eq!(module(2, 1, 2).dim(), 9);
        for (n, d, f) in [(3, 2, 1), (2, 3, 2), (3, 3, 1)] {
            assert_eq!(module(n, d, f).dim() as u128, dimension_up_to(f * n * n, d));
        }
    }

    #[test]
    fn basis_is_canonical_and_indexed() {
        let m = module(2, 3, 2);
        assert!(m.basis()[0].is_empty());
        for (k, b) in m.basis().iter().enumerate() {
            assert!(b.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(m.index_of(b), Some(k));
        }
    }

    #[test]
    fn code_round_trip() {
        let m = module(3, 2, 2);
        for slot in 1..=2 {
            for i in 1..=3 {
                for j in 1..=3 {
                    for s in 1..=4 {
                        let x = LoopGen::in_slot(slot, i, j, -s);
                        assert_eq!(m.decode(m.code(x)), x);
                    }
                }
            }
        }
    }

    #[test]
    fn generator_examples() {
        let m = module(2, 2, 1);
        let v = m.basis_state(&[g(2, 1, -1)]);
        let out = m.act_state(g(1, 2, 1), &v);
        assert_eq!(out, State::vacuum().scaled(&Rational::new(35, 33)));
        assert!(m.act_state(g(1, 2, 3), &m.basis_state(&[g(2, 1, -1), g(1, 1, -1)])).is_zero());
        assert!(m.act_state(g(1, 1, 0), &State::vacuum()).is_zero());
    }

    #[test]
    fn word_and_commutator_examples() {
        let m = module(2, 2, 1);
        let w: OpExpr = "E[1,2;-1]*E[2,1;1]".parse().unwrap();
        assert!(m.apply_expr(&w, &State::vacuum()).is_zero());
        let c: OpExpr = "E[1,2;-1]*E[2,1;1] - E[2,1;1]*E[1,2;-1]".parse().unwrap();
        let out = m.apply_expr(&c, &State::vacuum());
        assert_eq!(out, State::vacuum().scaled(&-Rational::new(35, 33)));
    }

    #[test]
    fn series_matches_finite_sum() {
        // R_1 on ambient 3 against the explicit s = 0, 1 terms at D = 2
        let m = module(3, 2, 1);
        let r: OpExpr = "SUM(s>=0; 1,1; 1,2; 2,1)".parse().unwrap();
        let f: OpExpr = "E[1,2;-1]*E[2,1;1] + E[1,2;-2]*E[2,1;2]".parse().unwrap();
        let a = evaluate_expr(&m, &r, 2).unwrap();
        let b = evaluate_expr(&m, &f, 2).unwrap();
        assert!(operator_equal(&m, &a, &b, 2).0);
    }

    #[test]
    fn annihilation_and_witness() {
        let m = module(2, 2, 1);
        let z = evaluate_expr(&m, &OpExpr::zero(), 2).unwrap();
        let high = act_generator(&m, g(1, 2, 3), 2);
        assert!(operator_equal(&m, &z, &high, 2).0);
        let low = act_generator(&m, g(1, 2, -1), 2);
        let (eq, w) = operator_equal(&m, &z, &low, 2);
        assert!(!eq);
        let w = w.unwrap();
        assert_eq!(w.input, "|0>");
        assert_eq!(w.rhs, Rational::ONE);
    }

    #[test]
    fn tensor_slots_commute() {
        let m = module(2, 2, 2);
        let v = m.basis_state(&[LoopGen::in_slot(1, 2, 1, -1)]);
        assert!(m.act_state(LoopGen::in_slot(2, 1, 2, 1), &v).is_zero());
        let out = m.act_state(LoopGen::in_slot(1, 1, 2, 1), &v);
        assert_eq!(out, State::vacuum().scaled(&Rational::new(35, 33)));
    }

    #[test]
    fn headroom_cap_refuses() {
        let m = build_module_with_cap(3, 2, 1, point((1, 2), (1, 3)), 200).unwrap();
        assert!(m.check_headroom(2, 0, "x").is_ok());
        assert!(matches!(m.check_headroom(2, 1, "x"), Err(Error::ResourceCap { .. })));
        assert!(matches!(build_module_with_cap(3, 3, 1, point((1, 2), (1, 3)), 200), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = module(2, 2, 2);
        let path = dir.path().join("b.bin");
        store_basis(&path, &m, m.basis()).unwrap();
        assert_eq!(load_basis(&path, &m).unwrap(), m.basis());
        let other = module(2, 1, 2);
        assert!(load_basis(&path, &other).is_err());
        std::fs::write(&path, b"garbage").unwrap();
        assert!(load_basis(&path, &m).is_err());
    }

    fn all_gens(n: usize, modes: &[i32]) -> Vec<LoopGen> {
        let mut v = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                for &s in modes {
                    v.push(g(i, j, s));
                }
            }
        }
        v
    }

    /// Matrix of a word of generators via repeated single actions.
    fn word_on(m: &TruncatedModule, word: &[LoopGen], v: &State) -> State {
        word.iter().rev().fold(v.clone(), |acc, x| m.act_state(*x, &acc))
    }

    #[test]
    fn bracket_representation_consistency_n3() {
        let m = module(3, 2, 1);
        let gens = all_gens(3, &[-2, -1, 0, 1, 2]);
        let inputs: Vec<State> = m.basis().iter().map(|b| State::basis(b.clone())).collect();
        for x in &gens {
            for y in &gens {
                let br = bracket(*x, *y).to_expr();
                for v in &inputs {
                    let lhs = word_on(&m, &[*x, *y], v).sub(&word_on(&m, &[*y, *x], v));
                    assert_eq!(lhs, m.apply_expr(&br, v), "{x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn jacobi_exhaustive_n3() {
        let m = module(3, 2, 1);
        let gens = all_gens(3, &[-2, -1, 0, 1, 2]);
        let inputs: Vec<State> = m.basis().iter().map(|b| State::basis(b.clone())).collect();
        let comm = |a: &LoopGen, b: &LoopGen, v: &State| word_on(&m, &[*a, *b], v).sub(&word_on(&m, &[*b, *a], v));
        // [x,[y,z]] + cyclic, with inner brackets computed by the module itself
        let nested = |a: &LoopGen, b: &LoopGen, c: &LoopGen, v: &State| {
            let inner = |w: &State| comm(b, c, w);
            m.act_state(*a, &inner(v)).sub(&inner(&m.act_state(*a, v)))
        };
        let sample: Vec<&LoopGen> = gens.iter().step_by(7).collect();
        for x in &sample {
            for y in &gens {
                for z in &sample {
                    for v in inputs.iter().take(40) {
                        let mut s = nested(x, y, z, v);
                        s.add_scaled(&nested(y, z, x, v), &Rational::ONE);
                        s.add_scaled(&nested(z, x, y, v), &Rational::ONE);
                        assert!(s.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn degree_bookkeeping() {
        let m = module(3, 2, 1);
        for x in all_gens(3, &[-2, -1, 0, 1, 2]) {
            for b in m.basis() {
                let d = m.monomial_degree(b) as i64;
                for out in m.act(x, b).0.keys() {
                    assert_eq!(m.monomial_degree(out) as i64, d - x.mode as i64);
                }
            }
        }
    }

    #[test]
    fn headroom_exactness_between_truncations() {
        let p = point((2, 5), (-3, 4));
        let small = build_module(3, 1, 1, p.clone()).unwrap();
        let big = build_module(3, 2, 1, p).unwrap();
        let exprs =
            ["E[1,2;1]*E[2,1;-2]", "SUM(s>=0; 0,0; 1,2; 2,1)*E[3,1;-1]", "E[2,3;2]*E[3,2;-1]*E[1,1;-1] - c*E[1,2;0]"];
        for s in exprs {
            let e: OpExpr = s.parse().unwrap();
            let a = evaluate_expr(&small, &e, 1).unwrap();
            let b = evaluate_expr(&big, &e, 1).unwrap();
            assert_eq!(a.columns, b.columns, "{s}");
        }
    }

    proptest! {
        #[test]
        fn linear_in_coefficients(c1 in -5i64..5, c2 in -5i64..5, k in 0usize..40) {
            let m = module(3, 2, 1);
            let e1 = OpExpr::gen(Label::e(1, 2), 1) * OpExpr::gen(Label::e(2, 1), -1);
            let e2 = OpExpr::series(Rational::ONE, Label::e(1, 3), 1, Label::e(3, 1), 1);
            let r1 = Rational::from_int(c1);
            let r2 = Rational::from_int(c2);
            let v = State::basis(m.basis()[k % m.dim()].clone());
            let lhs = m.apply_expr(&(e1.scale(&r1) + e2.scale(&r2)), &v);
            let mut rhs = m.apply_expr(&e1, &v).scaled(&r1);
            rhs.add_scaled(&m.apply_expr(&e2, &v), &r2);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
