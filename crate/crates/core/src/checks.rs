//! Verification suites: affine Yangian relations, commutativity of two image
//! sets, composition identities, quadratic loop-algebra commutator formulas, proof-step
//! identities and coset membership.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::ParamPoint;
use crate::error::Result;
use crate::loopalg::{build_series, Label, OpExpr, QVariant, SeriesKind};
use crate::modules::{first_difference, ModuleFingerprint, State, TruncatedModule, Witness};
use crate::morphisms::{cartan, GeneratorSet};
use crate::ops::Op;
use crate::rational::Rational;
use crate::vertexmodes::{
    bilinear_candidate, coset_membership, orthogonalize, sl_currents, w_state, VAState, W2Form, WKind,
};

pub type Indices = BTreeMap<String, i64>;

pub fn indices(pairs: &[(&str, i64)]) -> Indices {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// An operator identity lhs = rhs to be decided on a module block.
#[derive(Clone)]
pub struct Relation {
    pub id: String,
    pub indices: Indices,
    pub lhs: Op,
    pub rhs: Op,
}

impl Relation {
    pub fn new(id: &str, indices: Indices, lhs: Op, rhs: Op) -> Self {
        Relation { id: id.to_string(), indices, lhs, rhs }
    }

    pub fn zero(id: &str, indices: Indices, lhs: Op) -> Self {
        Relation::new(id, indices, lhs, Op::zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceResult {
    pub relation: String,
    pub indices: Indices,
    pub status: Status,
    pub source_degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub module: ModuleFingerprint,
    pub points: Vec<ParamPoint>,
    pub instances: Vec<InstanceResult>,
    pub routes: Vec<String>,
    pub notes: Vec<String>,
    pub wall_ms: u128,
}

impl CheckReport {
    pub fn new(name: &str, m: &TruncatedModule) -> Self {
        CheckReport {
            name: name.to_string(),
            module: m.fingerprint(),
            points: vec![m.point.clone()],
            instances: Vec::new(),
            routes: Vec::new(),
            notes: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.instances.iter().all(|r| r.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceResult> {
        self.instances.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn failure_count(&self) -> usize {
        self.failures().count()
    }

    /// Merges another report on the same module family (e.g. another point).
    pub fn absorb(&mut self, other: CheckReport) {
        for p in other.points {
            if !self.points.contains(&p) {
                self.points.push(p);
            }
        }
        self.instances.extend(other.instances);
        for r in other.routes {
            if !self.routes.contains(&r) {
                self.routes.push(r);
            }
        }
        self.notes.extend(other.notes);
        self.wall_ms += other.wall_ms;
    }

    pub fn sort(&mut self) {
        self.instances.sort_by(|a, b| (&a.relation, &a.indices).cmp(&(&b.relation, &b.indices)));
    }
}

/// Decides lhs = rhs on every basis monomial of degree ≤ source_degree and
/// returns the witness at the first differing input in basis order.
pub fn decide(m: &TruncatedModule, rel: &Relation, source_degree: usize) -> InstanceResult {
    let block = m.block(source_degree.min(m.degree));
    let witness = m.basis()[block].par_iter().find_map_first(|mono| {
        let v = State::basis(mono.clone());
        let l = rel.lhs.apply(m, &v);
        let r = rel.rhs.apply(m, &v);
        first_difference(m, mono, &l, &r)
    });
    InstanceResult {
        relation: rel.id.clone(),
        indices: rel.indices.clone(),
        status: if witness.is_none() { Status::Pass } else { Status::Fail },
        source_degree,
        residual_witness: witness,
    }
}

/// Runs relations concurrently; results come back in input order.
pub fn decide_all(m: &TruncatedModule, rels: &[Relation], source_degree: usize) -> Vec<InstanceResult> {
    rels.par_iter().map(|r| decide(m, r, source_degree)).collect()
}

/// Runs a named list of relations into a sorted report.
pub fn run_relations(name: &str, m: &TruncatedModule, rels: &[Relation], source_degree: usize) -> CheckReport {
    let t = Instant::now();
    let mut rep = CheckReport::new(name, m);
    rep.instances = decide_all(m, rels, source_degree);
    rep.sort();
    rep.wall_ms = t.elapsed().as_millis();
    rep
}

fn sign_of(plus: bool) -> i64 {
    if plus {
        1
    } else {
        -1
    }
}

fn r(x: i64) -> Rational {
    Rational::from_int(x)
}

/// Every instance of the defining relations, the extra relations g1 and g2, the H̃ form
/// of the Cartan relation and the completion cross-checks, with ε_eff in the ε-bearing coefficients.
pub fn yangian_relations(g: &GeneratorSet) -> Vec<Relation> {
    let n = g.rank;
    let hbar = &g.hbar;
    let half_h = hbar / &r(2);
    let shift = &g.eps_eff + &(&r(n as i64) * &half_h);
    let mut out = Vec::new();
    let idx = indices;
    let delta = |a: usize, b: usize| a == b;

    let hs: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, 0), (i, 1)]).collect();
    for (a, &(i, ri)) in hs.iter().enumerate() {
        for &(j, rj) in &hs[a + 1..] {
            out.push(Relation::zero(
                "hh",
                idx(&[("i", i as i64), ("r", ri as i64), ("j", j as i64), ("s", rj as i64)]),
                Op::comm(g.h(i, ri), g.h(j, rj)),
            ));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(Relation::zero("ht-ht", idx(&[("i", i as i64), ("j", j as i64)]), Op::comm(&g.ht1[i], &g.ht1[j])));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let ij = |extra: &[(&str, i64)]| {
                let mut v = vec![("i", i as i64), ("j", j as i64)];
                v.extend_from_slice(extra);
                idx(&v)
            };
            let d = |o: &Op| if delta(i, j) { o.clone() } else { Op::zero() };
            out.push(Relation::new("xx0", ij(&[]), Op::comm(&g.xp0[i], &g.xm0[j]), d(&g.h0[i])));
            out.push(Relation::new("xx1", ij(&[("r", 1), ("s", 0)]), Op::comm(&g.xp1[i], &g.xm0[j]), d(&g.h1[i])));
            out.push(Relation::new("xx1", ij(&[("r", 0), ("s", 1)]), Op::comm(&g.xp0[i], &g.xm1[j]), d(&g.h1[i])));
            let a = cartan(i, j, n);
            for plus in [true, false] {
                let sg = sign_of(plus);
                for rr in 0..2 {
                    out.push(Relation::new(
                        "hx",
                        ij(&[("r", rr), ("sign", sg)]),
                        Op::comm(&g.h0[i], g.x(plus, j, rr as usize)),
                        g.x(plus, j, rr as usize).scale(&r(sg * a)),
                    ));
                }
                let excluded = (i == 0 && j == n - 1) || (i == n - 1 && j == 0);
                if !excluded {
                    out.push(Relation::new(
                        "htx",
                        ij(&[("sign", sg)]),
                        Op::comm(&g.ht1[i], g.x0(plus, j)),
                        g.x1(plus, j).scale(&r(sg * a)),
                    ));
                    let lhs = Op::comm(g.x1(plus, i), g.x0(plus, j)).sub(&Op::comm(g.x0(plus, i), g.x1(plus, j)));
                    let rhs = Op::anticomm(g.x0(plus, i), g.x0(plus, j)).scale(&(&r(sg * a) * &half_h));
                    out.push(Relation::new("xx-sym", ij(&[("sign", sg)]), lhs, rhs));
                }
                if i != j {
                    let mut lhs = g.x0(plus, j).clone();
                    for _ in 0..1 + a.unsigned_abs() {
                        lhs = Op::comm(g.x0(plus, i), &lhs);
                    }
                    out.push(Relation::zero("serre", ij(&[("sign", sg)]), lhs));
                }
            }
        }
    }
    for plus in [true, false] {
        let sg = sign_of(plus);
        let s = idx(&[("sign", sg)]);
        let last = n - 1;
        out.push(Relation::new(
            "htx-first",
            s.clone(),
            Op::comm(&g.ht1[0], g.x0(plus, last)),
            g.x1(plus, last).add(&g.x0(plus, last).scale(&shift)).scale(&r(-sg)),
        ));
        out.push(Relation::new(
            "htx-last",
            s.clone(),
            Op::comm(&g.ht1[last], g.x0(plus, 0)),
            g.x1(plus, 0).sub(&g.x0(plus, 0).scale(&shift)).scale(&r(-sg)),
        ));
        let lhs = Op::comm(g.x1(plus, 0), g.x0(plus, last)).sub(&Op::comm(g.x0(plus, 0), g.x1(plus, last)));
        let rhs = Op::anticomm(g.x0(plus, 0), g.x0(plus, last))
            .scale(&(&r(-sg) * &half_h))
            .add(&Op::comm(g.x0(plus, 0), g.x0(plus, last)).scale(&shift));
        out.push(Relation::new("xx-sym-edge", s, lhs, rhs));
    }
    for plus in [true, false] {
        let sg = sign_of(plus);
        for i in 0..n {
            for j in 0..n {
                let dist = (i + n - j) % n;
                let dist = dist.min(n - dist);
                if i < j && dist > 1 {
                    for ri in 0..2 {
                        for rj in 0..2 {
                            out.push(Relation::zero(
                                "xx-far",
                                idx(&[("i", i as i64), ("j", j as i64), ("r", ri), ("s", rj), ("sign", sg)]),
                                Op::comm(g.x(plus, i, ri as usize), g.x(plus, j, rj as usize)),
                            ));
                        }
                    }
                }
                if dist == 1 {
                    for rj in 0..2 {
                        let xj = g.x(plus, j, rj as usize);
                        let lhs = Op::comm(g.x1(plus, i), &Op::comm(g.x0(plus, i), xj))
                            .add(&Op::comm(g.x0(plus, i), &Op::comm(g.x1(plus, i), xj)));
                        out.push(Relation::zero(
                            "xx-cubic",
                            idx(&[("i", i as i64), ("j", j as i64), ("r", rj), ("sign", sg)]),
                            lhs,
                        ));
                    }
                }
            }
        }
    }
    for rc in &g.alternates {
        out.push(Relation::new(
            "route",
            idx(&[("j", rc.index as i64), ("sign", sign_of(rc.plus)), ("via", rc.via as i64)]),
            rc.lhs.clone(),
            rc.rhs.clone(),
        ));
    }
    out
}

/// Relation suite for one generator set on one module.
pub fn check_yangian_relations(g: &GeneratorSet, m: &TruncatedModule, source_degree: usize) -> CheckReport {
    let mut rep = run_relations(&g.name, m, &yangian_relations(g), source_degree);
    rep.routes = g.routes.clone();
    rep
}

/// [a, b] = 0 for the reduced generating pairs {H̃_{i,1}, X±_{k,0}} of each set,
/// and optionally for every pair of the six generators per index.
pub fn commute_relations(g1: &GeneratorSet, g2: &GeneratorSet, full_grid: bool) -> Vec<Relation> {
    let reduced = |g: &GeneratorSet| {
        let mut v = Vec::new();
        for i in 0..g.rank {
            v.push(("H~1".to_string(), i, g.ht1[i].clone()));
            v.push(("X+0".to_string(), i, g.xp0[i].clone()));
            v.push(("X-0".to_string(), i, g.xm0[i].clone()));
        }
        v
    };
    let (a, b, id) = if full_grid {
        (g1.named_generators(), g2.named_generators(), "grid")
    } else {
        (reduced(g1), reduced(g2), "reduced")
    };
    let mut out = Vec::new();
    for (na, i, x) in &a {
        for (nb, j, y) in &b {
            out.push(Relation::zero(
                id,
                indices(&[("a", generator_code(na)), ("i", *i as i64), ("b", generator_code(nb)), ("j", *j as i64)]),
                Op::comm(x, y),
            ));
        }
    }
    out
}

/// Generator codes used in the indices of commutation and composition checks.
pub const GENERATOR_CODES: [&str; 7] = ["H0", "H1", "X+0", "X-0", "X+1", "X-1", "H~1"];

fn generator_code(name: &str) -> i64 {
    GENERATOR_CODES.iter().position(|c| *c == name).expect("known generator name") as i64
}

pub fn check_pairwise_commute(
    g1: &GeneratorSet,
    g2: &GeneratorSet,
    m: &TruncatedModule,
    source_degree: usize,
    full_grid: bool,
) -> CheckReport {
    let mut rels = commute_relations(g1, g2, false);
    if full_grid {
        rels.extend(commute_relations(g1, g2, true));
    }
    run_relations(&format!("{} x {}", g1.name, g2.name), m, &rels, source_degree)
}

/// Generator-by-generator equality of two image sets of the same rank.
pub fn composition_relations(lhs: &GeneratorSet, rhs: &GeneratorSet) -> Result<Vec<Relation>> {
    if lhs.rank != rhs.rank {
        return Err(crate::Error::Config(format!("composition: rank {} vs {}", lhs.rank, rhs.rank)));
    }
    let a = lhs.named_generators();
    let b = rhs.named_generators();
    Ok(a.into_iter()
        .zip(b)
        .map(|((name, i, x), (_, _, y))| {
            Relation::new("compose", indices(&[("gen", generator_code(&name)), ("i", i as i64)]), x, y)
        })
        .collect())
}

/// Completion-derived H_{0,1}, X±_{0,1} against closed forms for the same map.
pub fn closed_form_relations(derived: &GeneratorSet, closed: &GeneratorSet) -> Vec<Relation> {
    [
        ("H1", &derived.h1[0], &closed.h1[0]),
        ("X+1", &derived.xp1[0], &closed.xp1[0]),
        ("X-1", &derived.xm1[0], &closed.xm1[0]),
    ]
    .into_iter()
    .map(|(name, a, b)| {
        Relation::new("closed-form", indices(&[("gen", generator_code(name)), ("i", 0)]), a.clone(), b.clone())
    })
    .collect()
}

pub fn check_composition(
    lhs: &GeneratorSet,
    rhs: &GeneratorSet,
    m: &TruncatedModule,
    source_degree: usize,
) -> Result<CheckReport> {
    let rels = composition_relations(lhs, rhs)?;
    Ok(run_relations(&format!("{} = {}", lhs.name, rhs.name), m, &rels, source_degree))
}

/// One of the four quadratic commutator formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CommutatorFormula {
    AP1,
    AP2,
    AQ1,
    AQ2,
}

impl CommutatorFormula {
    pub const ALL: [CommutatorFormula; 4] =
        [CommutatorFormula::AP1, CommutatorFormula::AP2, CommutatorFormula::AQ1, CommutatorFormula::AQ2];

    pub fn id(&self) -> &'static str {
        match self {
            CommutatorFormula::AP1 => "AP-1",
            CommutatorFormula::AP2 => "AP-2",
            CommutatorFormula::AQ1 => "AQ-1",
            CommutatorFormula::AQ2 => "AQ-2",
        }
    }
}

/// One instance of a commutator formula. `jn` stands for the index j+n; `x` is k for the
/// AP formulas and l for the AQ formulas. `b` only enters the AQ formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CommutatorSample {
    pub formula: CommutatorFormula,
    pub jn: usize,
    pub u: usize,
    pub i: usize,
    pub x: usize,
    pub s: i32,
    pub v: i32,
    pub a: i32,
    pub b: i32,
}

impl CommutatorSample {
    /// The index pattern the formulas hold on: u ≠ j+n and i ≠ k for AP,
    /// u ≠ i and l ≠ j+n for AQ. Outside it the commutators pick up central
    /// terms the right-hand sides leave out.
    pub fn in_domain(&self) -> bool {
        match self.formula {
            CommutatorFormula::AP1 | CommutatorFormula::AP2 => self.u != self.jn && self.i != self.x,
            CommutatorFormula::AQ1 | CommutatorFormula::AQ2 => self.u != self.i && self.x != self.jn,
        }
    }
}

fn word(c: Rational, gens: &[(usize, usize, i32)]) -> OpExpr {
    OpExpr::word(c, gens.iter().map(|&(r, c, m)| Label::e(r, c).at(m)).collect())
}

fn kd(a: usize, b: usize) -> Rational {
    if a == b {
        Rational::ONE
    } else {
        Rational::ZERO
    }
}

/// Left and right sides of one commutator formula with fixed summation indices.
/// `flip` negates the right-hand side (negative control).
pub fn commutator_relation(t: &CommutatorSample, flip: bool) -> Relation {
    let CommutatorSample { jn, u, i, x, s, v, a, b, .. } = *t;
    let one = Rational::ONE;
    let w = word;
    let (lhs, rhs) = match t.formula {
        CommutatorFormula::AP1 => {
            let k = x;
            let lhs = &w(one.clone(), &[(jn, u, -s - a), (u, jn, s + a)])
                * &w(one.clone(), &[(i, k, -v - 1), (k, i, v + 1)])
                - &w(one.clone(), &[(i, k, -v - 1), (k, i, v + 1)])
                    * &w(one.clone(), &[(jn, u, -s - a), (u, jn, s + a)]);
            let m1 = s - v + a - 1;
            let m2 = -s - v - a - 1;
            let m3 = s + v + a + 1;
            let m4 = v - s - a + 1;
            let rhs = w(kd(i, jn), &[(jn, u, -s - a), (u, k, m1), (k, i, v + 1)])
                - w(kd(k, u), &[(jn, u, -s - a), (i, jn, m1), (k, i, v + 1)])
                + w(kd(u, i), &[(jn, k, m2), (u, jn, s + a), (k, i, v + 1)])
                - w(kd(jn, k), &[(i, u, m2), (u, jn, s + a), (k, i, v + 1)])
                + w(kd(jn, k), &[(i, k, -v - 1), (jn, u, -s - a), (u, i, m3)])
                - w(kd(u, i), &[(i, k, -v - 1), (jn, u, -s - a), (k, jn, m3)])
                + w(kd(u, k), &[(i, k, -v - 1), (jn, i, m4), (u, jn, s + a)])
                - w(kd(i, jn), &[(i, k, -v - 1), (k, u, m4), (u, jn, s + a)]);
            (lhs, rhs)
        }
        CommutatorFormula::AP2 => {
            let k = x;
            let lhs = &w(one.clone(), &[(u, jn, -s - a), (jn, u, s + a)])
                * &w(one.clone(), &[(i, k, -v - 1), (k, i, v + 1)])
                - &w(one.clone(), &[(i, k, -v - 1), (k, i, v + 1)])
                    * &w(one.clone(), &[(u, jn, -s - a), (jn, u, s + a)]);
            let m1 = s + a - v - 1;
            let m2 = -s - v - a - 1;
            let m3 = s + v + a + 1;
            let m4 = v - s - a + 1;
            let rhs = w(kd(u, i), &[(u, jn, -s - a), (jn, k, m1), (k, i, v + 1)])
                - w(kd(k, jn), &[(u, jn, -s - a), (i, u, m1), (k, i, v + 1)])
                + w(kd(i, jn), &[(u, k, m2), (jn, u, s + a), (k, i, v + 1)])
                - w(kd(k, u), &[(i, jn, m2), (jn, u, s + a), (k, i, v + 1)])
                + w(kd(u, k), &[(i, k, -v - 1), (u, jn, -s - a), (jn, i, m3)])
                - w(kd(i, jn), &[(i, k, -v - 1), (u, jn, -s - a), (k, u, m3)])
                + w(kd(jn, k), &[(i, k, -v - 1), (u, i, m4), (jn, u, s + a)])
                - w(kd(i, u), &[(i, k, -v - 1), (k, jn, m4), (jn, u, s + a)]);
            (lhs, rhs)
        }
        CommutatorFormula::AQ1 => {
            let l = x;
            let lhs = &w(one.clone(), &[(u, i, -s - a), (i, u, s + a)])
                * &w(one.clone(), &[(l, jn, -v - b), (jn, l, v + b)])
                - &w(one.clone(), &[(l, jn, -v - b), (jn, l, v + b)])
                    * &w(one.clone(), &[(u, i, -s - a), (i, u, s + a)]);
            let m1 = s - v + a - b;
            let m2 = -s - v - a - b;
            let m3 = s + v + a + b;
            let m4 = v - s + b - a;
            let rhs = w(kd(u, l), &[(u, i, -s - a), (i, jn, m1), (jn, l, v + b)])
                - w(kd(i, jn), &[(u, i, -s - a), (l, u, m1), (jn, l, v + b)])
                + w(kd(l, i), &[(u, jn, m2), (i, u, s + a), (jn, l, v + b)])
                - w(kd(u, jn), &[(l, i, m2), (i, u, s + a), (jn, l, v + b)])
                + w(kd(u, jn), &[(l, jn, -v - b), (u, i, -s - a), (i, l, m3)])
                - w(kd(i, l), &[(l, jn, -v - b), (u, i, -s - a), (jn, u, m3)])
                + w(kd(i, jn), &[(l, jn, -v - b), (u, l, m4), (i, u, s + a)])
                - w(kd(u, l), &[(l, jn, -v - b), (jn, i, m4), (i, u, s + a)]);
            (lhs, rhs)
        }
        CommutatorFormula::AQ2 => {
            let l = x;
            let lhs = &w(one.clone(), &[(i, u, -s - a), (u, i, s + a)])
                * &w(one.clone(), &[(l, jn, -v - b), (jn, l, v + b)])
                - &w(one.clone(), &[(l, jn, -v - b), (jn, l, v + b)])
                    * &w(one.clone(), &[(i, u, -s - a), (u, i, s + a)]);
            let m1 = s - v + a - b;
            let m2 = -s - v - a - b;
            let m3 = s + v + a + b;
            let m4 = v - s + b - a;
            let rhs = w(kd(i, l), &[(i, u, -s - a), (u, jn, m1), (jn, l, v + b)])
                - w(kd(jn, u), &[(i, u, -s - a), (l, i, m1), (jn, l, v + b)])
                + w(kd(u, l), &[(i, jn, m2), (u, i, s + a), (jn, l, v + b)])
                - w(kd(i, jn), &[(l, u, m2), (u, i, s + a), (jn, l, v + b)])
                + w(kd(i, jn), &[(l, jn, -v - b), (i, u, -s - a), (u, l, m3)])
                - w(kd(u, l), &[(l, jn, -v - b), (i, u, -s - a), (jn, i, m3)])
                + w(kd(u, jn), &[(l, jn, -v - b), (i, l, m4), (u, i, s + a)])
                - w(kd(i, l), &[(l, jn, -v - b), (jn, u, m4), (u, i, s + a)]);
            (lhs, rhs)
        }
    };
    let rhs = if flip { -rhs } else { rhs };
    let mut idx = indices(&[
        ("jn", jn as i64),
        ("u", u as i64),
        ("i", i as i64),
        ("x", x as i64),
        ("s", s as i64),
        ("v", v as i64),
        ("a", a as i64),
    ]);
    if matches!(t.formula, CommutatorFormula::AQ1 | CommutatorFormula::AQ2) {
        idx.insert("b".into(), b as i64);
    }
    Relation::new(t.formula.id(), idx, Op::expr(lhs.simplified()), Op::expr(rhs.simplified()))
}

/// Every in-domain sample with indices in 1..=n and s, v, a, b ∈ {0, 1}.
pub fn commutator_exhaustive(n: usize) -> Vec<CommutatorSample> {
    let mut out = Vec::new();
    for formula in CommutatorFormula::ALL {
        let bs: &[i32] = match formula {
            CommutatorFormula::AP1 | CommutatorFormula::AP2 => &[0],
            _ => &[0, 1],
        };
        for jn in 1..=n {
            for u in 1..=n {
                for i in 1..=n {
                    for x in 1..=n {
                        for s in 0..2 {
                            for v in 0..2 {
                                for a in 0..2 {
                                    for &b in bs {
                                        let t = CommutatorSample { formula, jn, u, i, x, s, v, a, b };
                                        if t.in_domain() {
                                            out.push(t);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `count` seeded random in-domain samples with indices in 1..=n.
pub fn commutator_random(n: usize, count: usize, seed: u64) -> Vec<CommutatorSample> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let formula = CommutatorFormula::ALL[rng.gen_range(0..4)];
        let t = CommutatorSample {
            formula,
            jn: rng.gen_range(1..=n),
            u: rng.gen_range(1..=n),
            i: rng.gen_range(1..=n),
            x: rng.gen_range(1..=n),
            s: rng.gen_range(0..2),
            v: rng.gen_range(0..2),
            a: rng.gen_range(0..2),
            b: if matches!(formula, CommutatorFormula::AQ1 | CommutatorFormula::AQ2) { rng.gen_range(0..2) } else { 0 },
        };
        if t.in_domain() {
            out.push(t);
        }
    }
    out
}

pub fn check_commutator_formulas(
    m: &TruncatedModule,
    samples: &[CommutatorSample],
    source_degree: usize,
    flip: bool,
) -> CheckReport {
    let rels: Vec<Relation> = samples.iter().map(|t| commutator_relation(t, flip)).collect();
    run_relations("appendix", m, &rels, source_degree)
}

/// −[A_{1+i}, R_j] + [A_{1+j}, R_i] + [R_i, R_j] on ambient gl(n+1), and
/// [P_i, Q_j] + [A_i, Q_j] + [A_{j+n}, P_i] on ambient gl(m+n).
/// `drop_last` removes the final bracket of each (negative control).
pub fn proof_identity_relations(
    n: usize,
    m: usize,
    q: QVariant,
    hbar: &Rational,
    which: ProofIdentity,
    drop_last: bool,
) -> Result<Vec<Relation>> {
    let mut out = Vec::new();
    let keep = if drop_last { Rational::ZERO } else { Rational::ONE };
    match which {
        ProofIdentity::RSeries => {
            let amb = n + 1;
            let a = |i| build_series(SeriesKind::A, i, 0, amb, hbar).map(Op::expr);
            let rr = |i| build_series(SeriesKind::R, i, 0, amb, hbar).map(Op::expr);
            for i in 1..=n {
                for j in 1..=n {
                    let lhs = Op::lin(vec![
                        (-Rational::ONE, Op::comm(&a(1 + i)?, &rr(j)?)),
                        (Rational::ONE, Op::comm(&a(1 + j)?, &rr(i)?)),
                        (keep.clone(), Op::comm(&rr(i)?, &rr(j)?)),
                    ]);
                    out.push(Relation::zero("r-series", indices(&[("i", i as i64), ("j", j as i64)]), lhs));
                }
            }
        }
        ProofIdentity::PQ => {
            let amb = m + n;
            let a = |i| build_series(SeriesKind::A, i, n, amb, hbar).map(Op::expr);
            let p = |i| build_series(SeriesKind::P, i, n, amb, hbar).map(Op::expr);
            let qq = |i| build_series(SeriesKind::Q(q), i, n, amb, hbar).map(Op::expr);
            for i in 1..=n {
                for j in 1..m {
                    let lhs = Op::lin(vec![
                        (Rational::ONE, Op::comm(&p(i)?, &qq(j)?)),
                        (Rational::ONE, Op::comm(&a(i)?, &qq(j)?)),
                        (keep.clone(), Op::comm(&a(j + n)?, &p(i)?)),
                    ]);
                    out.push(Relation::zero("pq", indices(&[("i", i as i64), ("j", j as i64)]), lhs));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofIdentity {
    /// −[A_{1+i}, R_j] + [A_{1+j}, R_i] + [R_i, R_j] = 0
    RSeries,
    /// [P_i, Q_j] + [A_i, Q_j] + [A_{j+n}, P_i] = 0
    PQ,
}

fn coset_instance(
    relation: &str,
    idx: Indices,
    m: &TruncatedModule,
    candidate: &VAState,
    gens: &[VAState],
    r_max: i64,
) -> InstanceResult {
    let (ok, w) = coset_membership(m, &candidate.to_state(m), gens, r_max);
    InstanceResult {
        relation: relation.to_string(),
        indices: idx,
        status: if ok { Status::Pass } else { Status::Fail },
        source_degree: 0,
        residual_witness: w.map(|w| Witness {
            input: format!("generator {} mode ({})", w.generator, w.r),
            output: w.output,
            lhs: w.coefficient,
            rhs: Rational::ZERO,
        }),
    }
}

/// x_{(r)} Σ_{u≤n} (E_{u,i}[−1])_{(−1)} E_{j,u}[−1] = 0 for x in the sl(n) currents,
/// 0 ≤ r ≤ r_max and n < i, j ≤ N. With `differences`, the diagonal candidates are
/// replaced by the differences (i,i) − (i+1,i+1) that enter Q_i − Q_{i+1}.
pub fn check_coset_affine(m: &TruncatedModule, n: usize, r_max: i64, differences: bool) -> CheckReport {
    let t = Instant::now();
    let big = m.n;
    let gens = sl_currents(n, crate::loopalg::SLOT1);
    let mut jobs = Vec::new();
    for i in n + 1..=big {
        for j in n + 1..=big {
            if differences && i == j {
                if i < big {
                    let c = VAState::Sum(vec![
                        (Rational::ONE, bilinear_candidate(i, i, 1..=n)),
                        (-Rational::ONE, bilinear_candidate(i + 1, i + 1, 1..=n)),
                    ]);
                    jobs.push(("coset-affine-diff", i, j, c));
                }
            } else {
                jobs.push(("coset-affine", i, j, bilinear_candidate(i, j, 1..=n)));
            }
        }
    }
    let mut rep = CheckReport::new(if differences { "coset-affine-differences" } else { "coset-affine" }, m);
    rep.instances = jobs
        .par_iter()
        .map(|(id, i, j, c)| coset_instance(id, indices(&[("i", *i as i64), ("j", *j as i64)]), m, c, &gens, r_max))
        .collect();
    rep.sort();
    rep.wall_ms = t.elapsed().as_millis();
    rep
}

/// Strong generators of the sl-block W-algebra inside the tensor square of
/// gl(N): the traceless block currents W⁽¹⁾ and, for p, q ≤ n, the block W⁽²⁾_{pq}
/// corrected by J_{(−1)}W⁽¹⁾_{pq}, ∂W⁽¹⁾_{pq}, W⁽¹⁾_{pq} and the δ_{pq} terms J_{(−1)}J,
/// ∂J and J so that
/// the block trace J = Σ_{p≤n} W⁽¹⁾_{pp} has no nonnegative modes on it.
pub fn sl_block_generators(m: &TruncatedModule, n: usize, form: W2Form) -> Result<Vec<(String, VAState)>> {
    let mut out: Vec<(String, VAState)> =
        sl_currents(n, crate::loopalg::BOTH).into_iter().enumerate().map(|(k, s)| (format!("W1sl[{k}]"), s)).collect();
    let j_lab: Vec<Label> = (1..=n).map(|p| Label::w(p, p)).collect();
    let j = VAState::Sum(j_lab.iter().map(|l| (Rational::ONE, VAState::current(*l))).collect());
    let jj = VAState::Sum(
        j_lab
            .iter()
            .flat_map(|a| j_lab.iter().map(move |b| (Rational::ONE, VAState::Quadratic { a: *a, b: *b })))
            .collect(),
    );
    let dj = VAState::Sum(j_lab.iter().map(|l| (Rational::ONE, VAState::Current { label: *l, k: 1 })).collect());
    for p in 1..=n {
        for q in 1..=n {
            let base = w_state(WKind::W2, p, q, n, form);
            let w1 = Label::w(p, q);
            let mut corr = vec![
                VAState::Sum(j_lab.iter().map(|l| (Rational::ONE, VAState::Quadratic { a: *l, b: w1 })).collect()),
                VAState::Current { label: w1, k: 1 },
                VAState::current(w1),
            ];
            if p == q {
                corr.push(jj.clone());
                corr.push(dj.clone());
                corr.push(j.clone());
            }
            let g = orthogonalize(m, &base, &corr, std::slice::from_ref(&j), 3)
                .ok_or_else(|| crate::Error::Config(format!("no trace-orthogonal correction of W2[{p},{q}]")))?;
            out.push((format!("W2sl[{p},{q}]"), g));
        }
    }
    Ok(out)
}

/// W⁽¹⁾_{ij}, n < i, j ≤ N, against the sl-block generators: state level
/// (W⁽¹⁾_{ij})_{(r)} G = 0 for 0 ≤ r ≤ r_max, and operator level
/// [W⁽¹⁾_{ij} t^s, G_{(a)}] = 0 on the module block for the given modes.
/// `raw_w2` skips the trace correction (negative control).
pub fn check_coset_w(
    m: &TruncatedModule,
    n: usize,
    form: W2Form,
    r_max: i64,
    modes: &[(i64, i64)],
    source_degree: usize,
    raw_w2: bool,
) -> Result<CheckReport> {
    let t = Instant::now();
    let big = m.n;
    let gens = if raw_w2 {
        (1..=n)
            .flat_map(|p| (1..=n).map(move |q| (p, q)))
            .map(|(p, q)| (format!("W2[{p},{q}]"), w_state(WKind::W2, p, q, n, form)))
            .collect()
    } else {
        sl_block_generators(m, n, form)?
    };
    let mut rep = CheckReport::new("coset-w", m);
    let mut rels = Vec::new();
    let g_modes: Vec<Vec<Op>> =
        gens.iter().map(|(_, g)| modes.iter().map(|&(_, a)| g.mode(a).memoized()).collect()).collect();
    for i in n + 1..=big {
        for j in n + 1..=big {
            let w1 = VAState::current(Label::w(i, j));
            for (k, (_, g)) in gens.iter().enumerate() {
                let idx = indices(&[("i", i as i64), ("j", j as i64), ("g", k as i64)]);
                rep.instances.push(coset_instance("coset-w", idx.clone(), m, g, std::slice::from_ref(&w1), r_max));
                for (&(s, a), ga) in modes.iter().zip(&g_modes[k]) {
                    let mut idx = idx.clone();
                    idx.insert("s".into(), s);
                    idx.insert("a".into(), a);
                    rels.push(Relation::zero("coset-w-modes", idx, Op::comm(&w1.mode(s), ga)));
                }
            }
            rep.notes
                .push(format!("generators: {}", gens.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(" ")));
        }
    }
    rep.notes.dedup();
    rep.instances.extend(decide_all(m, &rels, source_degree));
    rep.sort();
    rep.wall_ms = t.elapsed().as_millis();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{make_param_point, EpsConvention, ModuleFlavor};
    use crate::modules::build_module;
    use crate::morphisms::build_ev;

    fn q(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    fn ev_module(n: usize, d: usize) -> TruncatedModule {
        let p = make_param_point(q(3, 7), q(5, 11), ModuleFlavor::Evaluation, n, EpsConvention::Maim).unwrap();
        build_module(n, d, 1, p).unwrap()
    }

    #[test]
    fn ev_satisfies_relations() {
        let m = ev_module(3, 2);
        let g = build_ev(3, &q(3, 7), &q(5, 11)).unwrap();
        let rep = check_yangian_relations(&g, &m, 2);
        assert!(!rep.instances.is_empty());
        assert!(rep.passed(), "{:?}", rep.failures().next());
    }

    #[test]
    fn wrong_eps_is_caught() {
        let m = ev_module(3, 2);
        let g = build_ev(3, &q(3, 7), &q(5, 11)).unwrap().with_eps_eff(q(5, 11) + q(3, 7));
        assert!(check_yangian_relations(&g, &m, 2).failure_count() > 0);
    }

    #[test]
    fn report_absorb_merges_points() {
        let m = ev_module(3, 1);
        let mut a = CheckReport::new("x", &m);
        let b = CheckReport::new("x", &m);
        a.absorb(b);
        assert_eq!(a.points.len(), 1);
        assert!(a.passed());
    }

    #[test]
    fn commutator_samples_stay_in_domain() {
        let all = commutator_exhaustive(3);
        assert!(!all.is_empty());
        assert!(all.iter().all(|t| t.in_domain()));
        for f in CommutatorFormula::ALL {
            assert!(all.iter().any(|t| t.formula == f));
        }
        assert_eq!(commutator_random(5, 20, 3), commutator_random(5, 20, 3));
        assert!(commutator_random(5, 20, 3).iter().all(|t| t.in_domain() && t.jn <= 5));
    }

    #[test]
    fn commutator_formulas_hold_and_flip_fails() {
        let m = ev_module(3, 1);
        let samples: Vec<_> = commutator_exhaustive(3).into_iter().step_by(97).collect();
        assert!(check_commutator_formulas(&m, &samples, 1, false).passed());
        assert!(check_commutator_formulas(&m, &samples, 1, true).failure_count() > 0);
    }

    #[test]
    fn r_series_identity() {
        let m = ev_module(4, 2);
        let rels = proof_identity_relations(3, 3, QVariant::Shifted, &q(3, 7), ProofIdentity::RSeries, false).unwrap();
        assert!(run_relations("r", &m, &rels, 2).passed());
        let cut = proof_identity_relations(3, 3, QVariant::Shifted, &q(3, 7), ProofIdentity::RSeries, true).unwrap();
        assert!(run_relations("r", &m, &cut, 2).failure_count() > 0);
    }

    #[test]
    fn commute_relation_ids() {
        let g = build_ev(3, &q(3, 7), &q(5, 11)).unwrap();
        let reduced = commute_relations(&g, &g, false);
        let full = commute_relations(&g, &g, true);
        assert!(reduced.iter().all(|r| r.id == "reduced"));
        assert!(full.iter().all(|r| r.id == "grid"));
        assert!(full.len() > reduced.len());
    }
}
