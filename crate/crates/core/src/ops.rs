//! Lazily evaluated operator graphs over [`OpExpr`] leaves.
//!
//! Generator images are shared between many relations, so a node can carry a
//! memo of its action on individual PBW monomials. Memo entries are keyed by
//! module id, so an operator may be applied to several modules safely.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use rustc_hash::FxBuildHasher;

use crate::loopalg::OpExpr;
use crate::modules::{Monomial, State, TruncatedModule};
use crate::rational::Rational;

pub enum Node {
    Expr(OpExpr),
    Lin(Vec<(Rational, Op)>),
    /// Written left to right, applied right to left.
    Prod(Vec<Op>),
    Comm(Op, Op),
}

pub struct Operator {
    node: Node,
    profile: (i64, i64),
    memo: Option<DashMap<(u64, Monomial), Arc<State>, FxBuildHasher>>,
    memo_inserts: AtomicUsize,
}

/// Entries kept per memoized operator before its memo is flushed.
const MEMO_LIMIT: usize = 1 << 16;

#[derive(Clone)]
pub struct Op(Arc<Operator>);

fn prod_profile(ops: &[Op]) -> (i64, i64) {
    let mut cur = 0i64;
    let mut peak = 0i64;
    for o in ops.iter().rev() {
        let (net, pk) = o.profile();
        peak = peak.max(cur + pk);
        cur += net;
    }
    (cur, peak)
}

impl Op {
    fn from_node(node: Node) -> Op {
        let profile = match &node {
            Node::Expr(e) => e.degree_profile(),
            Node::Lin(v) => v.iter().fold((i64::MIN, 0), |(n, p), (_, o)| {
                let (n2, p2) = o.profile();
                (n.max(n2), p.max(p2))
            }),
            Node::Prod(v) => prod_profile(v),
            Node::Comm(a, b) => {
                let (n1, p1) = prod_profile(&[a.clone(), b.clone()]);
                let (n2, p2) = prod_profile(&[b.clone(), a.clone()]);
                (n1.max(n2), p1.max(p2))
            }
        };
        let profile = if profile.0 == i64::MIN { (0, profile.1) } else { profile };
        Op(Arc::new(Operator { node, profile, memo: None, memo_inserts: AtomicUsize::new(0) }))
    }

    pub fn expr(e: OpExpr) -> Op {
        Op::from_node(Node::Expr(e))
    }

    pub fn parse(s: &str) -> Op {
        Op::expr(s.parse().expect("valid operator notation"))
    }

    pub fn zero() -> Op {
        Op::expr(OpExpr::zero())
    }

    pub fn scalar(c: Rational) -> Op {
        Op::expr(OpExpr::scalar(c))
    }

    pub fn lin(terms: Vec<(Rational, Op)>) -> Op {
        let terms: Vec<_> = terms.into_iter().filter(|(c, _)| !c.is_zero()).collect();
        Op::from_node(Node::Lin(terms))
    }

    pub fn prod(ops: Vec<Op>) -> Op {
        Op::from_node(Node::Prod(ops))
    }

    pub fn comm(a: &Op, b: &Op) -> Op {
        Op::from_node(Node::Comm(a.clone(), b.clone()))
    }

    /// {a, b} = ab + ba
    pub fn anticomm(a: &Op, b: &Op) -> Op {
        Op::prod(vec![a.clone(), b.clone()]).add(&Op::prod(vec![b.clone(), a.clone()]))
    }

    pub fn add(&self, other: &Op) -> Op {
        Op::lin(vec![(Rational::ONE, self.clone()), (Rational::ONE, other.clone())])
    }

    pub fn sub(&self, other: &Op) -> Op {
        Op::lin(vec![(Rational::ONE, self.clone()), (-Rational::ONE, other.clone())])
    }

    pub fn scale(&self, c: &Rational) -> Op {
        Op::lin(vec![(c.clone(), self.clone())])
    }

    pub fn neg(&self) -> Op {
        self.scale(&-Rational::ONE)
    }

    pub fn mul(&self, other: &Op) -> Op {
        Op::prod(vec![self.clone(), other.clone()])
    }

    pub fn sum(ops: impl IntoIterator<Item = Op>) -> Op {
        Op::lin(ops.into_iter().map(|o| (Rational::ONE, o)).collect())
    }

    /// Same operator with a per-monomial memo attached.
    pub fn memoized(&self) -> Op {
        let node = match &self.0.node {
            Node::Expr(e) => Node::Expr(e.clone()),
            Node::Lin(v) => Node::Lin(v.clone()),
            Node::Prod(v) => Node::Prod(v.clone()),
            Node::Comm(a, b) => Node::Comm(a.clone(), b.clone()),
        };
        Op(Arc::new(Operator {
            node,
            profile: self.0.profile,
            memo: Some(DashMap::with_hasher(FxBuildHasher)),
            memo_inserts: AtomicUsize::new(0),
        }))
    }

    /// Upper bounds (net degree raise, peak intermediate raise).
    pub fn profile(&self) -> (i64, i64) {
        self.0.profile
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn as_expr(&self) -> Option<&OpExpr> {
        match &self.0.node {
            Node::Expr(e) => Some(e),
            _ => None,
        }
    }

    pub fn apply_monomial(&self, m: &TruncatedModule, mono: &Monomial) -> Arc<State> {
        if let Some(memo) = &self.0.memo {
            let key = (m.id(), mono.clone());
            if let Some(v) = memo.get(&key) {
                return v.clone();
            }
            let v = Arc::new(self.apply_uncached(m, &State::basis(mono.clone())));
            if self.0.memo_inserts.fetch_add(1, Ordering::Relaxed) >= MEMO_LIMIT {
                memo.clear();
                self.0.memo_inserts.store(0, Ordering::Relaxed);
            }
            memo.insert(key, v.clone());
            return v;
        }
        Arc::new(self.apply_uncached(m, &State::basis(mono.clone())))
    }

    pub fn apply(&self, m: &TruncatedModule, v: &State) -> State {
        if v.is_zero() {
            return State::zero();
        }
        if self.0.memo.is_some() {
            let mut out = State::zero();
            for (mono, c) in &v.0 {
                out.add_scaled(&self.apply_monomial(m, mono), c);
            }
            return out;
        }
        self.apply_uncached(m, v)
    }

    fn apply_uncached(&self, m: &TruncatedModule, v: &State) -> State {
        match &self.0.node {
            Node::Expr(e) => m.apply_expr(e, v),
            Node::Lin(terms) => {
                let mut out = State::zero();
                for (c, o) in terms {
                    out.add_scaled(&o.apply(m, v), c);
                }
                out
            }
            Node::Prod(ops) => {
                let mut cur = v.clone();
                for o in ops.iter().rev() {
                    if cur.is_zero() {
                        break;
                    }
                    cur = o.apply(m, &cur);
                }
                cur
            }
            Node::Comm(a, b) => {
                let ab = a.apply(m, &b.apply(m, v));
                let ba = b.apply(m, &a.apply(m, v));
                ab.sub(&ba)
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.node {
            Node::Expr(e) => write!(f, "{e}"),
            Node::Lin(terms) => {
                if terms.is_empty() {
                    return write!(f, "0");
                }
                for (k, (c, o)) in terms.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    if c.is_one() {
                        write!(f, "({o})")?;
                    } else {
                        write!(f, "{c}*({o})")?;
                    }
                }
                Ok(())
            }
            Node::Prod(ops) => {
                for (k, o) in ops.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "({o})")?;
                }
                Ok(())
            }
            Node::Comm(a, b) => write!(f, "[{a}, {b}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_param_point, EpsConvention, ModuleFlavor};
    use crate::modules::build_module;

    fn module() -> TruncatedModule {
        let p = make_param_point(
            Rational::new(2, 3),
            Rational::new(5, 7),
            ModuleFlavor::Evaluation,
            3,
            EpsConvention::Maim,
        )
        .unwrap();
        build_module(3, 2, 1, p).unwrap()
    }

    #[test]
    fn commutator_matches_expanded_words() {
        let m = module();
        let a = Op::parse("E[1,2;1] + SUM(s>=0; 1,1; 1,3; 3,1)");
        let b = Op::parse("E[2,1;-1]*E[3,3;0]");
        let c = Op::comm(&a, &b);
        let ea = a.as_expr().unwrap();
        let eb = b.as_expr().unwrap();
        let expanded = Op::expr(ea * eb - eb * ea);
        for mono in m.basis() {
            let v = State::basis(mono.clone());
            assert_eq!(c.apply(&m, &v), expanded.apply(&m, &v));
        }
    }

    #[test]
    fn memo_is_transparent() {
        let m = module();
        let a = Op::parse("E[1,2;1]*E[2,1;-2] + 3/2*c*E[1,1;0]");
        let am = a.memoized();
        for _ in 0..2 {
            for mono in m.basis() {
                let v = State::basis(mono.clone());
                assert_eq!(a.apply(&m, &v), am.apply(&m, &v));
            }
        }
    }

    #[test]
    fn profiles() {
        let a = Op::parse("E[1,2;-1]");
        let b = Op::parse("E[2,1;2]");
        assert_eq!(a.profile(), (1, 1));
        assert_eq!(Op::prod(vec![b.clone(), a.clone()]).profile(), (-1, 1));
        assert_eq!(Op::comm(&a, &b).profile(), (-1, 1));
        assert_eq!(Op::prod(vec![a.clone(), a.clone()]).profile(), (2, 2));
    }

    #[test]
    fn display() {
        let a = Op::parse("E[1,2;-1]");
        let b = Op::parse("c");
        assert_eq!(Op::comm(&a, &b).to_string(), "[E[1,2;-1], c]");
        assert_eq!(a.sub(&b).to_string(), "(E[1,2;-1]) + -1*(c)");
    }
}
