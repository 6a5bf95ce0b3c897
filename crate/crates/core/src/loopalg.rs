//! Loop algebra of gl(N) at z = 1 and the formal operator expressions built on it.
//!
//! Generators carry a tensor slot so the same machinery serves V(gl(N)) and
//! V(gl(N))⊗V(gl(N)); distinct slots commute.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A single loop generator E^{(slot)}_{row,col} t^mode (1-based row, col, slot).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopGen {
    pub slot: u8,
    pub row: u8,
    pub col: u8,
    pub mode: i32,
}

impl LoopGen {
    pub fn new(row: usize, col: usize, mode: i32) -> Self {
        LoopGen { slot: 1, row: row as u8, col: col as u8, mode }
    }

    pub fn in_slot(slot: usize, row: usize, col: usize, mode: i32) -> Self {
        LoopGen { slot: slot as u8, row: row as u8, col: col as u8, mode }
    }
}

pub const SLOT1: u8 = 0b01;
pub const SLOT2: u8 = 0b10;
pub const BOTH: u8 = 0b11;

/// A matrix unit summed over the tensor slots in `slots` (a bit mask).
/// `slots = BOTH` is the diagonal current E⁽¹⁾ + E⁽²⁾.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub row: u8,
    pub col: u8,
    pub slots: u8,
}

impl Label {
    pub fn e(row: usize, col: usize) -> Self {
        Label { row: row as u8, col: col as u8, slots: SLOT1 }
    }

    pub fn slot(slot: usize, row: usize, col: usize) -> Self {
        Label { row: row as u8, col: col as u8, slots: 1 << (slot - 1) }
    }

    pub fn w(row: usize, col: usize) -> Self {
        Label { row: row as u8, col: col as u8, slots: BOTH }
    }

    pub fn slot_list(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=2u8).filter(move |s| self.slots & (1 << (s - 1)) != 0)
    }

    pub fn at(&self, mode: i32) -> Factor {
        Factor::Gen { label: *self, mode }
    }

    pub fn shifted(&self, by: usize) -> Self {
        Label { row: self.row + by as u8, col: self.col + by as u8, slots: self.slots }
    }
}

/// Σ_{s≥0} L t^{−s−a} R t^{s+b}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeriesNode {
    pub left: Label,
    pub a: i32,
    pub right: Label,
    pub b: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    Gen {
        label: Label,
        mode: i32,
    },
    /// The central level of the carrier module (c̃ or α).
    Level,
    Series(SeriesNode),
}

impl Factor {
    /// Net degree raise of the factor (t^m lowers degree by m).
    pub fn net_raise(&self) -> i64 {
        match self {
            Factor::Gen { mode, .. } => -(*mode as i64),
            Factor::Level => 0,
            Factor::Series(s) => (s.a - s.b) as i64,
        }
    }

    fn relabel(&self, f: &impl Fn(Label) -> Label) -> Factor {
        match self {
            Factor::Gen { label, mode } => Factor::Gen { label: f(*label), mode: *mode },
            Factor::Level => Factor::Level,
            Factor::Series(s) => Factor::Series(SeriesNode { left: f(s.left), a: s.a, right: f(s.right), b: s.b }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coef: Rational,
    pub word: Vec<Factor>,
}

/// Finite formal sum of scaled words; words act right-to-left.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpExpr {
    pub terms: Vec<Term>,
}

impl OpExpr {
    pub fn zero() -> Self {
        OpExpr { terms: Vec::new() }
    }

    pub fn scalar(c: Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        OpExpr { terms: vec![Term { coef: c, word: Vec::new() }] }
    }

    pub fn word(coef: Rational, word: Vec<Factor>) -> Self {
        if coef.is_zero() {
            return Self::zero();
        }
        OpExpr { terms: vec![Term { coef, word }] }
    }

    pub fn factor(f: Factor) -> Self {
        Self::word(Rational::ONE, vec![f])
    }

    pub fn gen(label: Label, mode: i32) -> Self {
        Self::factor(label.at(mode))
    }

    pub fn level() -> Self {
        Self::factor(Factor::Level)
    }

    pub fn series(coef: Rational, left: Label, a: i32, right: Label, b: i32) -> Self {
        Self::word(coef, vec![Factor::Series(SeriesNode { left, a, right, b })])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        OpExpr { terms: self.terms.iter().map(|t| Term { coef: &t.coef * c, word: t.word.clone() }).collect() }
    }

    /// Merge equal words and drop zero coefficients.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<Term> = Vec::new();
        for t in &self.terms {
            if let Some(o) = out.iter_mut().find(|o| o.word == t.word) {
                o.coef += &t.coef;
            } else {
                out.push(t.clone());
            }
        }
        out.retain(|t| !t.coef.is_zero());
        OpExpr { terms: out }
    }

    pub fn relabel(&self, f: impl Fn(Label) -> Label) -> Self {
        OpExpr {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: t.coef.clone(), word: t.word.iter().map(|x| x.relabel(&f)).collect() })
                .collect(),
        }
    }

    /// Upper bounds (net raise, peak raise over every right-to-left prefix).
    pub fn degree_profile(&self) -> (i64, i64) {
        let mut net = i64::MIN;
        let mut peak = 0i64;
        for t in &self.terms {
            let mut cur = 0i64;
            for f in t.word.iter().rev() {
                cur += f.net_raise();
                peak = peak.max(cur);
            }
            net = net.max(cur);
        }
        (if net == i64::MIN { 0 } else { net }, peak)
    }

    pub fn has_series(&self) -> bool {
        self.terms.iter().any(|t| t.word.iter().any(|f| matches!(f, Factor::Series(_))))
    }
}

impl Add for OpExpr {
    type Output = OpExpr;
    fn add(mut self, rhs: OpExpr) -> OpExpr {
        self.terms.extend(rhs.terms);
        self
    }
}

impl Sub for OpExpr {
    type Output = OpExpr;
    fn sub(self, rhs: OpExpr) -> OpExpr {
        self + (-rhs)
    }
}

impl Neg for OpExpr {
    type Output = OpExpr;
    fn neg(self) -> OpExpr {
        self.scale(&-Rational::ONE)
    }
}

impl Mul for &OpExpr {
    type Output = OpExpr;
    fn mul(self, rhs: &OpExpr) -> OpExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for x in &self.terms {
            for y in &rhs.terms {
                let mut word = x.word.clone();
                word.extend_from_slice(&y.word);
                terms.push(Term { coef: &x.coef * &y.coef, word });
            }
        }
        OpExpr { terms }
    }
}

impl Mul for OpExpr {
    type Output = OpExpr;
    fn mul(self, rhs: OpExpr) -> OpExpr {
        &self * &rhs
    }
}

/// Output of the loop bracket: a sum of generators plus a central scalar
/// `level_coef·level + unit_coef`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BracketResult {
    pub gens: Vec<(i64, LoopGen)>,
    pub level_coef: i64,
    pub unit_coef: i64,
}

impl BracketResult {
    pub fn is_zero(&self) -> bool {
        self.gens.is_empty() && self.level_coef == 0 && self.unit_coef == 0
    }

    pub fn scalar(&self, level: &Rational) -> Rational {
        &(level * &Rational::from_int(self.level_coef)) + &Rational::from_int(self.unit_coef)
    }

    pub fn to_expr(&self) -> OpExpr {
        let mut e = OpExpr::zero();
        for (c, g) in &self.gens {
            e = e + OpExpr::gen(Label::slot(g.slot as usize, g.row as usize, g.col as usize), g.mode)
                .scale(&Rational::from_int(*c));
        }
        e = e + OpExpr::level().scale(&Rational::from_int(self.level_coef));
        e + OpExpr::scalar(Rational::from_int(self.unit_coef))
    }

    fn normalized(mut self) -> Self {
        self.gens.sort_by_key(|a| a.1);
        let mut out: Vec<(i64, LoopGen)> = Vec::new();
        for (c, g) in self.gens {
            match out.last_mut() {
                Some((c2, g2)) if *g2 == g => *c2 += c,
                _ => out.push((c, g)),
            }
        }
        out.retain(|(c, _)| *c != 0);
        self.gens = out;
        self
    }
}

/// [E_{ij}t^u, E_{kl}t^v] = δ_{jk}E_{il}t^{u+v} − δ_{li}E_{kj}t^{u+v}
///   + u·δ_{u+v,0}(δ_{jk}δ_{il}·level + δ_{ij}δ_{kl}).
pub fn bracket(x: LoopGen, y: LoopGen) -> BracketResult {
    if x.slot != y.slot {
        return BracketResult::default();
    }
    let mode = x.mode + y.mode;
    let mut r = BracketResult::default();
    if x.col == y.row {
        r.gens.push((1, LoopGen { slot: x.slot, row: x.row, col: y.col, mode }));
    }
    if y.col == x.row {
        r.gens.push((-1, LoopGen { slot: x.slot, row: y.row, col: x.col, mode }));
    }
    if mode == 0 && x.mode != 0 {
        let u = x.mode as i64;
        if x.col == y.row && x.row == y.col {
            r.level_coef = u;
        }
        if x.row == x.col && y.row == y.col {
            r.unit_coef = u;
        }
    }
    r.normalized()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    /// Exponents (−s, s)
    Printed,
    /// Exponents (−s−1, s+1)
    Shifted,
}

impl std::str::FromStr for QVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(QVariant::Printed),
            "shifted" => Ok(QVariant::Shifted),
            _ => Err(Error::Config(format!("unknown q variant {s:?} (printed|shifted)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    A,
    P,
    Q(QVariant),
    R,
}

/// The normally ordered series A_i, P_i, Q_i, R_i on ambient gl(`ambient`).
/// `split` is the size n of the upper-left block for P and Q.
pub fn build_series(kind: SeriesKind, index: usize, split: usize, ambient: usize, hbar: &Rational) -> Result<OpExpr> {
    let bad = |msg: &str| Err(Error::Config(format!("{kind:?}_{index}: {msg}")));
    let e = Label::e;
    let mut out = OpExpr::zero();
    match kind {
        SeriesKind::A => {
            if index < 1 || index > ambient {
                return bad("index out of range");
            }
            let half = hbar / &Rational::from_int(2);
            let i = index;
            for u in 1..=ambient {
                if u > i {
                    out = out + OpExpr::series(half.clone(), e(u, i), 0, e(i, u), 0);
                    out = out + OpExpr::series(-&half, e(i, u), 1, e(u, i), 1);
                }
                if u < i {
                    out = out + OpExpr::series(-&half, e(i, u), 0, e(u, i), 0);
                    out = out + OpExpr::series(half.clone(), e(u, i), 1, e(i, u), 1);
                }
            }
        }
        SeriesKind::P => {
            if split >= ambient || index < 1 || index > split {
                return bad("index out of range");
            }
            for k in split + 1..=ambient {
                out = out + OpExpr::series(hbar.clone(), e(index, k), 1, e(k, index), 1);
            }
        }
        SeriesKind::Q(v) => {
            if split >= ambient || index < 1 || split + index > ambient {
                return bad("index out of range");
            }
            let off = if v == QVariant::Printed { 0 } else { 1 };
            let p = split + index;
            for k in 1..=split {
                out = out + OpExpr::series(hbar.clone(), e(k, p), off, e(p, k), off);
            }
        }
        SeriesKind::R => {
            if index < 1 || index + 1 > ambient {
                return bad("index out of range");
            }
            out = OpExpr::series(hbar.clone(), e(1, 1 + index), 1, e(1 + index, 1), 1);
        }
    }
    Ok(out)
}

/// Largest summation index s that can contribute when `e` acts on states of
/// degree ≤ `target_degree`: a right factor of mode s+b annihilates every state
/// of degree < s+b.
pub fn series_truncation_bound(e: &OpExpr, target_degree: i64) -> i64 {
    let mut bound = 0i64;
    for t in &e.terms {
        let mut deg = target_degree;
        for f in t.word.iter().rev() {
            if let Factor::Series(s) = f {
                bound = bound.max(deg - s.b as i64);
            }
            deg += f.net_raise().max(0);
        }
    }
    bound
}

fn fmt_label(l: &Label, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{},{}", l.row, l.col)?;
    match l.slots {
        SLOT1 => Ok(()),
        SLOT2 => write!(f, "@2"),
        _ => write!(f, "@12"),
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Gen { label, mode } => {
                write!(f, "E[")?;
                fmt_label(label, f)?;
                write!(f, ";{mode}]")
            }
            Factor::Level => write!(f, "c"),
            Factor::Series(s) => {
                write!(f, "SUM(s>=0; {},{}; ", s.a, s.b)?;
                fmt_label(&s.left, f)?;
                write!(f, "; ")?;
                fmt_label(&s.right, f)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let neg = t.coef.signum() < 0;
            let mag = t.coef.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if t.word.is_empty() {
                write!(f, "{mag}")?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            for (m, x) in t.word.iter().enumerate() {
                if m > 0 {
                    write!(f, "*")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse(format!("{msg} at byte {}", self.pos)))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        self.ws();
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            Ok(())
        } else {
            self.err(&format!("expected {lit:?}"))
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.ws();
        let start = self.pos;
        if self.pos < self.s.len() && self.s[self.pos] == b'-' {
            self.pos += 1;
        }
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .map_or_else(|| self.err("expected integer"), Ok)
    }

    fn rational(&mut self) -> Result<Rational> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'/') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse()
    }

    fn label(&mut self) -> Result<Label> {
        let row = self.int()?;
        self.expect(",")?;
        let col = self.int()?;
        let slots = if self.eat(b'@') {
            match self.int()? {
                1 => SLOT1,
                2 => SLOT2,
                12 => BOTH,
                _ => return self.err("slot must be 1, 2 or 12"),
            }
        } else {
            SLOT1
        };
        if row < 1 || col < 1 || row > 255 || col > 255 {
            return self.err("matrix index out of range");
        }
        Ok(Label { row: row as u8, col: col as u8, slots })
    }

    fn factor(&mut self) -> Result<Factor> {
        match self.peek() {
            Some(b'E') => {
                self.pos += 1;
                self.expect("[")?;
                let label = self.label()?;
                self.expect(";")?;
                let mode = self.int()? as i32;
                self.expect("]")?;
                Ok(Factor::Gen { label, mode })
            }
            Some(b'c') => {
                self.pos += 1;
                Ok(Factor::Level)
            }
            Some(b'S') => {
                self.expect("SUM(")?;
                self.expect("s")?;
                self.expect(">=")?;
                self.expect("0")?;
                self.expect(";")?;
                let a = self.int()? as i32;
                self.expect(",")?;
                let b = self.int()? as i32;
                self.expect(";")?;
                let left = self.label()?;
                self.expect(";")?;
                let right = self.label()?;
                self.expect(")")?;
                Ok(Factor::Series(SeriesNode { left, a, right, b }))
            }
            _ => self.err("expected factor"),
        }
    }

    fn term(&mut self, negative: bool) -> Result<Term> {
        let mut coef = Rational::ONE;
        let mut word = Vec::new();
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            coef = self.rational()?;
            if !self.eat(b'*') {
                return Ok(Term { coef: if negative { -coef } else { coef }, word });
            }
        }
        loop {
            word.push(self.factor()?);
            if !self.eat(b'*') {
                break;
            }
        }
        Ok(Term { coef: if negative { -coef } else { coef }, word })
    }

    fn expr(&mut self) -> Result<OpExpr> {
        let mut terms = Vec::new();
        if self.peek() == Some(b'0') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().is_none() {
                return Ok(OpExpr::zero());
            }
            self.pos = save;
        }
        let mut neg = self.eat(b'-');
        loop {
            terms.push(self.term(neg)?);
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    neg = false;
                }
                Some(b'-') => {
                    self.pos += 1;
                    neg = true;
                }
                None => break,
                _ => return self.err("expected '+', '-' or end"),
            }
        }
        Ok(OpExpr { terms })
    }
}

impl std::str::FromStr for OpExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Parser { s: s.as_bytes(), pos: 0 }.expr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(i: u8, j: u8, s: i32) -> LoopGen {
        LoopGen { slot: 1, row: i, col: j, mode: s }
    }

    #[test]
    fn bracket_examples() {
        let r = bracket(g(1, 2, 1), g(2, 1, -1));
        assert_eq!(r.gens, vec![(1, g(1, 1, 0)), (-1, g(2, 2, 0))]);
        assert_eq!((r.level_coef, r.unit_coef), (1, 0));

        let r = bracket(g(1, 1, 1), g(2, 2, -1));
        assert!(r.gens.is_empty());
        assert_eq!((r.level_coef, r.unit_coef), (0, 1));

        assert!(bracket(g(1, 2, 0), g(3, 4, 5)).is_zero());
        let other = LoopGen { slot: 2, ..g(2, 1, -1) };
        assert!(bracket(g(1, 2, 1), other).is_zero());
    }

    #[test]
    fn diagonal_self_bracket_keeps_both_central_terms() {
        // [E_11 t^2, E_11 t^-2] = 2(level + 1)
        let r = bracket(g(1, 1, 2), g(1, 1, -2));
        assert!(r.gens.is_empty());
        assert_eq!((r.level_coef, r.unit_coef), (2, 2));
    }

    #[test]
    fn antisymmetry_exhaustive_n4() {
        let modes = [-2, -1, 0, 1, 2];
        for i in 1..=4 {
            for j in 1..=4 {
                for k in 1..=4 {
                    for l in 1..=4 {
                        for &u in &modes {
                            for &v in &modes {
                                let a = bracket(g(i, j, u), g(k, l, v));
                                let b = bracket(g(k, l, v), g(i, j, u));
                                let neg = BracketResult {
                                    gens: b.gens.iter().map(|(c, x)| (-c, *x)).collect(),
                                    level_coef: -b.level_coef,
                                    unit_coef: -b.unit_coef,
                                }
                                .normalized();
                                assert_eq!(a, neg, "[E{i}{j}t{u}, E{k}{l}t{v}]");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn series_shapes() {
        let h = Rational::new(3, 7);
        let r = build_series(SeriesKind::R, 2, 0, 4, &h).unwrap();
        assert_eq!(r.to_string(), "3/7*SUM(s>=0; 1,1; 1,3; 3,1)");
        let p = build_series(SeriesKind::P, 1, 3, 5, &h).unwrap();
        assert_eq!(p.terms.len(), 2);
        assert_eq!(p.to_string(), "3/7*SUM(s>=0; 1,1; 1,4; 4,1) + 3/7*SUM(s>=0; 1,1; 1,5; 5,1)");
        let q = build_series(SeriesKind::Q(QVariant::Printed), 1, 2, 4, &h).unwrap();
        assert_eq!(q.to_string(), "3/7*SUM(s>=0; 0,0; 1,3; 3,1) + 3/7*SUM(s>=0; 0,0; 2,3; 3,2)");
        assert!(build_series(SeriesKind::P, 4, 3, 5, &h).is_err());
        assert!(build_series(SeriesKind::R, 4, 0, 4, &h).is_err());
    }

    #[test]
    fn a_series_for_gl2_by_hand() {
        // A_1 on gl(2): (ħ/2)Σ E21 t^-s E12 t^s − (ħ/2)Σ E12 t^{-s-1} E21 t^{s+1}
        let h = Rational::from_int(2);
        let a = build_series(SeriesKind::A, 1, 0, 2, &h).unwrap();
        assert_eq!(a.to_string(), "SUM(s>=0; 0,0; 2,1; 1,2) - SUM(s>=0; 1,1; 1,2; 2,1)");
        let a2 = build_series(SeriesKind::A, 2, 0, 2, &h).unwrap();
        assert_eq!(a2.to_string(), "-SUM(s>=0; 0,0; 2,1; 1,2) + SUM(s>=0; 1,1; 1,2; 2,1)");
    }

    #[test]
    fn truncation_bounds() {
        let e: OpExpr = "SUM(s>=0; 1,1; 1,2; 2,1)".parse().unwrap();
        assert_eq!(series_truncation_bound(&e, 3), 2);
        let q: OpExpr = "SUM(s>=0; 0,0; 1,2; 2,1)".parse().unwrap();
        assert_eq!(series_truncation_bound(&q, 3), 3);
        assert_eq!(series_truncation_bound(&q, 0), 0);
        // a creation operator to the right raises the reachable degree
        let w: OpExpr = "SUM(s>=0; 1,1; 1,2; 2,1)*E[1,3;-1]".parse().unwrap();
        assert_eq!(series_truncation_bound(&w, 2), 2);
    }

    #[test]
    fn degree_profile() {
        let e: OpExpr = "E[1,2;1]*E[2,1;-2] + E[3,1;-1]".parse().unwrap();
        assert_eq!(e.degree_profile(), (1, 2));
    }

    #[test]
    fn notation_round_trip() {
        for s in
            ["E[1,2;-1]", "-3/2*E[1,2@2;0]*c", "E[1,1;0] - E[2,2;0] + c", "2*SUM(s>=0; 1,-1; 1,2@12; 2,1@2) + 7", "0"]
        {
            let e: OpExpr = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert!("E[1,2]".parse::<OpExpr>().is_err());
        assert!("E[1,2;0] +".parse::<OpExpr>().is_err());
    }

    fn arb_factor() -> impl Strategy<Value = Factor> {
        let label = (1u8..7, 1u8..7, prop_oneof![Just(SLOT1), Just(SLOT2), Just(BOTH)])
            .prop_map(|(row, col, slots)| Label { row, col, slots });
        prop_oneof![
            (label.clone(), -4i32..4).prop_map(|(label, mode)| Factor::Gen { label, mode }),
            Just(Factor::Level),
            (label.clone(), -2i32..3, label, -2i32..3).prop_map(|(left, a, right, b)| Factor::Series(SeriesNode {
                left,
                a,
                right,
                b
            })),
        ]
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(
            terms in prop::collection::vec(((-9i64..9, 1i64..5), prop::collection::vec(arb_factor(), 0..4)), 1..4)
        ) {
            let e = OpExpr {
                terms: terms
                    .into_iter()
                    .filter(|((n, _), _)| *n != 0)
                    .map(|((n, d), word)| Term { coef: Rational::new(n, d), word })
                    .collect(),
            };
            let back: OpExpr = e.to_string().parse().unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
