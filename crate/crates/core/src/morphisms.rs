//! Generator images of the affine Yangian under ev, Ψ, Ψ₁, Ψ₂, Φⁿ and ι∘Φⁿ,
//! and completion of partial level-1 data through [H̃_i, X±_j] and [X⁺_{j,1}, X⁻_{j,0}].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loopalg::{build_series, Label, OpExpr, QVariant, SeriesKind};
use crate::ops::Op;
use crate::rational::Rational;
use crate::vertexmodes::{w_generator_expr, W2Form, W2Variant, WKind};

/// Which currents carry the images: loop generators E_{ij} of one factor, or
/// the diagonal W⁽¹⁾ = E⁽¹⁾ + E⁽²⁾ of the tensor square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Carrier {
    Loop,
    W(PhiForm),
}

impl Carrier {
    pub fn label(&self, row: usize, col: usize) -> Label {
        match self {
            Carrier::Loop => Label::e(row, col),
            Carrier::W(_) => Label::w(row, col),
        }
    }

    /// Multiple of the level in the image of H_{0,0}.
    fn level_weight(&self) -> i64 {
        match self {
            Carrier::Loop => 1,
            Carrier::W(_) => 2,
        }
    }

    /// Moves a loop-current expression onto this carrier.
    pub fn carry(&self, e: &OpExpr) -> OpExpr {
        match self {
            Carrier::Loop => e.clone(),
            Carrier::W(_) => e.relabel(|l| Label { slots: crate::loopalg::BOTH, ..l }),
        }
    }
}

/// Corner of the gl(m+n) indices that receives the small algebra under ι.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IotaCorner {
    UpperLeft,
    LowerRight,
}

impl std::str::FromStr for IotaCorner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper-left" | "upper_left" => Ok(IotaCorner::UpperLeft),
            "lower-right" | "lower_right" => Ok(IotaCorner::LowerRight),
            _ => Err(Error::Config(format!("unknown iota corner {s:?} (upper-left|lower-right)"))),
        }
    }
}

/// Level-0 images and whatever level-1 images a construction supplies.
#[derive(Clone)]
pub struct PartialSet {
    pub name: String,
    pub rank: usize,
    pub hbar: Rational,
    pub eps_eff: Rational,
    pub h0: Vec<Op>,
    pub xp0: Vec<Op>,
    pub xm0: Vec<Op>,
    pub h1: Vec<Option<Op>>,
    pub xp1: Vec<Option<Op>>,
    pub xm1: Vec<Option<Op>>,
}

/// Two derivations of the same generator that must agree.
#[derive(Clone)]
pub struct RouteCheck {
    pub generator: String,
    pub index: usize,
    pub plus: bool,
    pub via: usize,
    pub primary: String,
    pub alternate: String,
    pub lhs: Op,
    pub rhs: Op,
}

#[derive(Clone)]
pub struct GeneratorSet {
    pub name: String,
    pub rank: usize,
    pub hbar: Rational,
    pub eps_eff: Rational,
    pub h0: Vec<Op>,
    pub h1: Vec<Op>,
    pub xp0: Vec<Op>,
    pub xm0: Vec<Op>,
    pub xp1: Vec<Op>,
    pub xm1: Vec<Op>,
    pub ht1: Vec<Op>,
    pub routes: Vec<String>,
    pub alternates: Vec<RouteCheck>,
}

fn half(x: &Rational) -> Rational {
    x / &Rational::from_int(2)
}

/// H̃_{i,1} = H_{i,1} − (ħ/2) H_{i,0}².
fn tilde(h1: &Op, h0: &Op, hbar: &Rational) -> Op {
    h1.sub(&h0.mul(h0).scale(&half(hbar))).memoized()
}

fn excluded(i: usize, j: usize, n: usize) -> bool {
    (i == 0 && j == n - 1) || (i == n - 1 && j == 0)
}

fn adjacent(i: usize, j: usize, n: usize) -> bool {
    (i + 1) % n == j || (j + 1) % n == i
}

/// Cartan matrix of affine sl(n), n ≥ 3.
pub fn cartan(i: usize, j: usize, n: usize) -> i64 {
    if i == j {
        2
    } else if adjacent(i, j, n) {
        -1
    } else {
        0
    }
}

impl GeneratorSet {
    pub fn x0(&self, plus: bool, i: usize) -> &Op {
        if plus {
            &self.xp0[i]
        } else {
            &self.xm0[i]
        }
    }

    pub fn x1(&self, plus: bool, i: usize) -> &Op {
        if plus {
            &self.xp1[i]
        } else {
            &self.xm1[i]
        }
    }

    pub fn x(&self, plus: bool, i: usize, r: usize) -> &Op {
        if r == 0 {
            self.x0(plus, i)
        } else {
            self.x1(plus, i)
        }
    }

    pub fn h(&self, i: usize, r: usize) -> &Op {
        if r == 0 {
            &self.h0[i]
        } else {
            &self.h1[i]
        }
    }

    /// The same images tagged with a different ε_eff.
    pub fn with_eps_eff(&self, eps: Rational) -> GeneratorSet {
        GeneratorSet { eps_eff: eps, ..self.clone() }
    }

    /// All six generators per index, named.
    pub fn named_generators(&self) -> Vec<(String, usize, Op)> {
        let mut out = Vec::new();
        for i in 0..self.rank {
            out.push(("H0".to_string(), i, self.h0[i].clone()));
            out.push(("H1".to_string(), i, self.h1[i].clone()));
            out.push(("X+0".to_string(), i, self.xp0[i].clone()));
            out.push(("X-0".to_string(), i, self.xm0[i].clone()));
            out.push(("X+1".to_string(), i, self.xp1[i].clone()));
            out.push(("X-1".to_string(), i, self.xm1[i].clone()));
        }
        out
    }
}

/// Fills X±_{j,1} from [H̃_i, X±_j] = ±a_ij X±_{j,1} using an adjacent (or the same) index with a known
/// H_{i,1}, then H_{j,1} as [X⁺_{j,1}, X⁻_{j,0}]. Every unused candidate route is kept as a
/// cross-check.
pub fn complete_generators(p: PartialSet) -> Result<GeneratorSet> {
    let n = p.rank;
    let hbar = p.hbar.clone();
    let given: Vec<Option<Op>> = (0..n).map(|i| p.h1[i].as_ref().map(|h| tilde(h, &p.h0[i], &hbar))).collect();
    let mut routes = Vec::new();
    let mut alternates = Vec::new();
    let mut xp1 = Vec::with_capacity(n);
    let mut xm1 = Vec::with_capacity(n);
    for j in 0..n {
        let mut cands: Vec<usize> =
            (0..n).filter(|&i| i != j && adjacent(i, j, n) && !excluded(i, j, n) && given[i].is_some()).collect();
        if given[j].is_some() {
            cands.push(j);
        }
        let derive = |i: usize, plus: bool| -> Op {
            let x = if plus { &p.xp0[j] } else { &p.xm0[j] };
            let c = Op::comm(given[i].as_ref().unwrap(), x);
            // [H̃_i, X±_j] = ±a_ij X±_{j,1}
            let a = Rational::from_int(if plus { cartan(i, j, n) } else { -cartan(i, j, n) });
            c.scale(&a.recip().expect("nonzero Cartan entry")).memoized()
        };
        let route = |i: usize| {
            if i == j {
                format!("self H~_{{{j},1}}")
            } else {
                format!("H~_{{{i},1}}")
            }
        };
        for (plus, given_x, out) in [(true, &p.xp1[j], &mut xp1), (false, &p.xm1[j], &mut xm1)] {
            let sgn = if plus { "+" } else { "-" };
            let gen = format!("X{sgn}_{{{j},1}}");
            match given_x {
                Some(x) => {
                    out.push(x.memoized());
                    for &i in &cands {
                        alternates.push(RouteCheck {
                            generator: gen.clone(),
                            index: j,
                            plus,
                            via: i,
                            primary: "explicit".into(),
                            alternate: route(i),
                            lhs: out[j].clone(),
                            rhs: derive(i, plus),
                        });
                    }
                }
                None => {
                    let Some(&first) = cands.first() else {
                        return Err(Error::Completion(format!(
                            "{}: no index with known H_{{i,1}} reaches {gen}",
                            p.name
                        )));
                    };
                    let x = derive(first, plus);
                    routes.push(format!("{gen} <- {}", route(first)));
                    for &i in &cands[1..] {
                        alternates.push(RouteCheck {
                            generator: gen.clone(),
                            index: j,
                            plus,
                            via: i,
                            primary: route(first),
                            alternate: route(i),
                            lhs: x.clone(),
                            rhs: derive(i, plus),
                        });
                    }
                    out.push(x);
                }
            }
        }
    }
    let mut h1 = Vec::with_capacity(n);
    for (j, (given_h, x)) in p.h1.iter().zip(&xp1).enumerate() {
        match given_h {
            Some(h) => h1.push(h.memoized()),
            None => {
                routes.push(format!("H_{{{j},1}} <- [X+_{{{j},1}}, X-_{{{j},0}}]"));
                h1.push(Op::comm(x, &p.xm0[j]).memoized());
            }
        }
    }
    let h0: Vec<Op> = p.h0.iter().map(|o| o.memoized()).collect();
    let ht1 = (0..n)
        .map(|i| match &given[i] {
            Some(t) if p.h1[i].is_some() => t.clone(),
            _ => tilde(&h1[i], &h0[i], &hbar),
        })
        .collect();
    Ok(GeneratorSet {
        name: p.name,
        rank: n,
        hbar,
        eps_eff: p.eps_eff,
        h0,
        h1,
        xp0: p.xp0.iter().map(|o| o.memoized()).collect(),
        xm0: p.xm0.iter().map(|o| o.memoized()).collect(),
        xp1,
        xm1,
        ht1,
        routes,
        alternates,
    })
}

fn gen(l: Label, mode: i32) -> OpExpr {
    OpExpr::gen(l, mode)
}

/// Sign of the (i/2)ħ H_{i,0} term in the W-algebra image of H_{i,1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfTermSign {
    /// +(i/2)ħ.
    Displayed,
    /// −(i/2)ħ, the sign carried by the evaluation map.
    Evaluation,
}

impl HalfTermSign {
    pub fn sign(self) -> i64 {
        match self {
            HalfTermSign::Displayed => 1,
            HalfTermSign::Evaluation => -1,
        }
    }
}

impl std::str::FromStr for HalfTermSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "displayed" => Ok(HalfTermSign::Displayed),
            "evaluation" => Ok(HalfTermSign::Evaluation),
            _ => Err(Error::Config(format!("unknown half-term sign {s:?} (displayed|evaluation)"))),
        }
    }
}

/// Choices fixing the W-algebra images: the W⁽²⁾ reading and the half-term sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PhiForm {
    pub w2: W2Form,
    pub half: HalfTermSign,
}

impl PhiForm {
    pub fn new(variant: W2Variant) -> Self {
        PhiForm { w2: W2Form::new(variant), half: HalfTermSign::Evaluation }
    }

    pub fn with_half(self, half: HalfTermSign) -> Self {
        PhiForm { half, ..self }
    }

    /// α-term sign flipped (negative control).
    pub fn flipped(self) -> Self {
        PhiForm { w2: self.w2.flipped(), ..self }
    }
}

/// Shape of an ev-type construction: rank n placed at indices off+1..=off+n.
/// `w2_ambient` is the size over which W⁽²⁾ sums its inner index.
#[derive(Clone, Copy, Debug)]
pub struct EvShape {
    pub n: usize,
    pub offset: usize,
    pub carrier: Carrier,
    pub w2_ambient: usize,
}

impl EvShape {
    pub fn loop_algebra(n: usize) -> Self {
        EvShape { n, offset: 0, carrier: Carrier::Loop, w2_ambient: n }
    }

    pub fn w_algebra(n: usize, form: PhiForm) -> Self {
        EvShape { n, offset: 0, carrier: Carrier::W(form), w2_ambient: n }
    }
}

/// H_{i,1} for ev (loop carrier) or Φⁿ (W carrier), i ≠ 0.
fn ev_h1(s: &EvShape, i: usize, h0: &OpExpr, hbar: &Rational) -> OpExpr {
    let n = s.n;
    let lab = |a: usize, b: usize| s.carrier.label(a + s.offset, b + s.offset);
    let mut e = OpExpr::zero();
    let sign = match s.carrier {
        Carrier::Loop => -1,
        Carrier::W(f) => f.half.sign(),
    };
    e = e + h0.scale(&(&Rational::new(sign * i as i64, 2) * hbar));
    e = e - (gen(lab(i, i), 0) * gen(lab(i + 1, i + 1), 0)).scale(hbar);
    for (p, sg) in [(i, Rational::ONE), (i + 1, -Rational::ONE)] {
        let c = &sg * hbar;
        for k in 1..=n {
            let off = if k <= i { 0 } else { 1 };
            e = e + OpExpr::series(c.clone(), lab(p, k), off, lab(k, p), off);
        }
    }
    if let Carrier::W(PhiForm { w2: form, .. }) = s.carrier {
        let (a, b) = (i + s.offset, i + 1 + s.offset);
        e = e - w_generator_expr(WKind::W2, a, a, s.w2_ambient, form, 1).scale(hbar);
        e = e + w_generator_expr(WKind::W2, b, b, s.w2_ambient, form, 1).scale(hbar);
    }
    e
}

/// Degree-0 images and H_{i,1} (i ≠ 0) of ev or Φⁿ; X±_{i,1} and H_{0,1} are
/// left for completion.
pub fn ev_partial(name: &str, s: EvShape, hbar: &Rational, eps_eff: &Rational) -> PartialSet {
    let n = s.n;
    let lab = |a: usize, b: usize| s.carrier.label(a + s.offset, b + s.offset);
    let mut h0 = Vec::new();
    let mut xp0 = Vec::new();
    let mut xm0 = Vec::new();
    let mut h1 = vec![None];
    let lw = Rational::from_int(s.carrier.level_weight());
    h0.push(gen(lab(n, n), 0) - gen(lab(1, 1), 0) + OpExpr::level().scale(&lw));
    xp0.push(gen(lab(n, 1), 1));
    xm0.push(gen(lab(1, n), -1));
    for i in 1..n {
        let h = gen(lab(i, i), 0) - gen(lab(i + 1, i + 1), 0);
        h1.push(Some(Op::expr(ev_h1(&s, i, &h, hbar))));
        h0.push(h);
        xp0.push(gen(lab(i, i + 1), 0));
        xm0.push(gen(lab(i + 1, i), 0));
    }
    PartialSet {
        name: name.to_string(),
        rank: n,
        hbar: hbar.clone(),
        eps_eff: eps_eff.clone(),
        h0: h0.into_iter().map(Op::expr).collect(),
        xp0: xp0.into_iter().map(Op::expr).collect(),
        xm0: xm0.into_iter().map(Op::expr).collect(),
        h1,
        xp1: vec![None; n],
        xm1: vec![None; n],
    }
}

/// ev^n_{ħ,ε}; the carrier module must have c̃ = ε/ħ.
pub fn build_ev(n: usize, hbar: &Rational, eps: &Rational) -> Result<GeneratorSet> {
    check_rank(n)?;
    complete_generators(ev_partial("ev", EvShape::loop_algebra(n), hbar, eps))
}

/// ev^n placed on the first n indices of a larger gl(N) module.
pub fn build_embedded_ev(n: usize, hbar: &Rational, eps: &Rational) -> Result<GeneratorSet> {
    build_embedded_ev_at(n, 0, hbar, eps)
}

/// ev^n placed on the indices offset+1..=offset+n.
pub fn build_embedded_ev_at(n: usize, offset: usize, hbar: &Rational, eps: &Rational) -> Result<GeneratorSet> {
    check_rank(n)?;
    let s = EvShape { offset, ..EvShape::loop_algebra(n) };
    complete_generators(ev_partial("embedded ev", s, hbar, eps))
}

/// Φⁿ on the tensor square; the carrier level is α with ε = ħα.
pub fn build_phi(n: usize, form: PhiForm, hbar: &Rational, eps: &Rational) -> Result<GeneratorSet> {
    check_rank(n)?;
    complete_generators(ev_partial("phi", EvShape::w_algebra(n, form), hbar, eps))
}

/// ι∘Φⁿ inside the W-algebra of gl(ambient).
pub fn build_iota_phi(
    n: usize,
    ambient: usize,
    corner: IotaCorner,
    form: PhiForm,
    hbar: &Rational,
    eps: &Rational,
) -> Result<GeneratorSet> {
    check_rank(n)?;
    if ambient < n {
        return Err(Error::Config(format!("iota: ambient {ambient} smaller than rank {n}")));
    }
    let offset = match corner {
        IotaCorner::UpperLeft => 0,
        IotaCorner::LowerRight => ambient - n,
    };
    let s = EvShape { n, offset, carrier: Carrier::W(form), w2_ambient: ambient };
    complete_generators(ev_partial("iota phi", s, hbar, eps))
}

fn check_rank(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Config(format!("rank {n} below 3")));
    }
    Ok(())
}

/// Mutations used as negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiVariant {
    Faithful,
    /// H_{i,1} images without their series tail.
    DropSeries,
}

impl std::str::FromStr for XMinusReading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(XMinusReading::Printed),
            "mirrored" => Ok(XMinusReading::Mirrored),
            _ => Err(Error::Config(format!("unknown X- reading {s:?} (printed|mirrored)"))),
        }
    }
}

/// Closed form used for Ψ(X⁻_{0,1}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XMinusReading {
    /// [X⁻_{1,0}, X⁻_{0,1}] + ħ Σ E_{1,n+1}t^{−s−2} E_{2,1}t^{s+1}.
    Printed,
    /// [X⁻_{1,1}, X⁻_{0,0}] + the same series, the mirror of the X⁺ form.
    Mirrored,
}

/// Ψ images over the ambient ev^{n+1}, before completion. With `closed_form`
/// the i = 0 level-1 images come from closed forms; without
/// it they are left for completion.
pub fn psi_partial(
    n: usize,
    hbar: &Rational,
    eps: &Rational,
    closed_form: Option<XMinusReading>,
    variant: PsiVariant,
) -> Result<PartialSet> {
    check_rank(n)?;
    let g = build_ev(n + 1, hbar, eps)?;
    let e = |a: usize, b: usize, m: i32| OpExpr::gen(Label::e(a, b), m);
    let r = |i: usize| build_series(SeriesKind::R, i, 0, n + 1, hbar);
    let ser = |l: (usize, usize), a: i32, rt: (usize, usize), b: i32| {
        OpExpr::series(hbar.clone(), Label::e(l.0, l.1), a, Label::e(rt.0, rt.1), b)
    };
    let mut p = PartialSet {
        name: "psi".into(),
        rank: n,
        hbar: hbar.clone(),
        eps_eff: eps + hbar,
        h0: vec![g.h0[0].add(&g.h0[1])],
        xp0: vec![Op::expr(e(n + 1, 2, 1))],
        xm0: vec![Op::expr(e(2, n + 1, -1))],
        h1: vec![None],
        xp1: vec![None],
        xm1: vec![None],
    };
    for i in 1..n {
        p.h0.push(g.h0[i + 1].clone());
        p.xp0.push(Op::expr(e(i + 1, i + 2, 0)));
        p.xm0.push(Op::expr(e(i + 2, i + 1, 0)));
        let tail = match variant {
            PsiVariant::Faithful => r(i)? - r(i + 1)?,
            PsiVariant::DropSeries => OpExpr::zero(),
        };
        p.h1.push(Some(g.h1[i + 1].add(&Op::expr(tail))));
        p.xp1.push(Some(g.xp1[i + 1].add(&Op::expr(ser((1, i + 2), 1, (i + 1, 1), 1)))));
        p.xm1.push(Some(g.xm1[i + 1].add(&Op::expr(ser((1, i + 1), 1, (i + 2, 1), 1)))));
    }
    if let Some(reading) = closed_form {
        let h = Op::sum([
            g.h1[0].clone(),
            g.h1[1].clone(),
            g.h0[0].mul(&g.h0[1]).scale(hbar),
            g.h0[0].scale(&half(hbar)),
            Op::expr(ser((1, n + 1), 1, (n + 1, 1), 1) - ser((1, 2), 1, (2, 1), 1)),
        ]);
        p.h1[0] = Some(h);
        p.xp1[0] = Some(Op::comm(&g.xp0[0], &g.xp1[1]).add(&Op::expr(ser((1, 2), 1, (n + 1, 1), 2))));
        let head = match reading {
            XMinusReading::Printed => Op::comm(&g.xm0[1], &g.xm1[0]),
            XMinusReading::Mirrored => Op::comm(&g.xm1[1], &g.xm0[0]),
        };
        p.xm1[0] = Some(head.add(&Op::expr(ser((1, n + 1), 2, (2, 1), 1))));
    }
    Ok(p)
}

/// Ψ: Y_{ħ,ε+ħ}(ŝl(n)) → Y_{ħ,ε}(ŝl(n+1)) composed with ev^{n+1}. Without a
/// reading the i = 0 level-1 images are obtained by completion.
pub fn build_psi(
    n: usize,
    hbar: &Rational,
    eps: &Rational,
    reading: Option<XMinusReading>,
    variant: PsiVariant,
) -> Result<GeneratorSet> {
    complete_generators(psi_partial(n, hbar, eps, reading, variant)?)
}

/// The ambient generator set that Ψ₁ and Ψ₂ are composed with.
#[derive(Clone, Copy, Debug)]
pub enum Ambient {
    Ev,
    Phi(PhiForm),
}

impl Ambient {
    fn carrier(&self) -> Carrier {
        match self {
            Ambient::Ev => Carrier::Loop,
            Ambient::Phi(f) => Carrier::W(*f),
        }
    }

    fn partial(&self, total: usize, hbar: &Rational, eps: &Rational) -> PartialSet {
        match self {
            Ambient::Ev => ev_partial("ev", EvShape::loop_algebra(total), hbar, eps),
            Ambient::Phi(f) => ev_partial("phi", EvShape::w_algebra(total, *f), hbar, eps),
        }
    }
}

fn h0_from_bracket(xp: &[Op], xm: &[Op]) -> Vec<Op> {
    xp.iter().zip(xm).map(|(a, b)| Op::comm(a, b)).collect()
}

/// Ψ₁: Y_{ħ,ε}(ŝl(n)) → Y_{ħ,ε}(ŝl(m+n)) composed with the ambient map.
/// H_{i,0} is taken as [X⁺_{i,0}, X⁻_{i,0}].
pub fn build_psi1(n: usize, total: usize, ambient: Ambient, hbar: &Rational, eps: &Rational) -> Result<GeneratorSet> {
    build_psi1_with(n, total, ambient, hbar, eps, PsiVariant::Faithful)
}

/// Ψ₁ with the P_{i+1} − P_i tail optionally dropped.
pub fn build_psi1_with(
    n: usize,
    total: usize,
    ambient: Ambient,
    hbar: &Rational,
    eps: &Rational,
    variant: PsiVariant,
) -> Result<GeneratorSet> {
    check_rank(n)?;
    if total <= n {
        return Err(Error::Config(format!("psi1: ambient {total} must exceed n = {n}")));
    }
    let g = ambient.partial(total, hbar, eps);
    let c = ambient.carrier();
    let lab = |a: usize, b: usize, m: i32| Op::expr(OpExpr::gen(c.label(a, b), m));
    let p_ser = |i: usize| build_series(SeriesKind::P, i, n, total, hbar).map(|e| c.carry(&e));
    let mut xp0 = vec![lab(n, 1, 1)];
    let mut xm0 = vec![lab(1, n, -1)];
    let mut h1 = vec![None];
    for i in 1..n {
        xp0.push(lab(i, i + 1, 0));
        xm0.push(lab(i + 1, i, 0));
        let gh = g.h1[i].clone().expect("ambient H_{i,1} for i != 0");
        let tail = match variant {
            PsiVariant::Faithful => p_ser(i + 1)? - p_ser(i)?,
            PsiVariant::DropSeries => OpExpr::zero(),
        };
        h1.push(Some(gh.add(&Op::expr(tail))));
    }
    complete_generators(PartialSet {
        name: "psi1".into(),
        rank: n,
        hbar: hbar.clone(),
        eps_eff: eps.clone(),
        h0: h0_from_bracket(&xp0, &xm0),
        xp0,
        xm0,
        h1,
        xp1: vec![None; n],
        xm1: vec![None; n],
    })
}

/// Ψ₂: Y_{ħ,ε+nħ}(ŝl(m)) → Y_{ħ,ε}(ŝl(m+n)) composed with the ambient map.
pub fn build_psi2(
    m: usize,
    n: usize,
    ambient: Ambient,
    q: QVariant,
    hbar: &Rational,
    eps: &Rational,
) -> Result<GeneratorSet> {
    check_rank(m)?;
    check_rank(n)?;
    let total = m + n;
    let g = ambient.partial(total, hbar, eps);
    let c = ambient.carrier();
    let lab = |a: usize, b: usize, md: i32| Op::expr(OpExpr::gen(c.label(a, b), md));
    let q_ser = |i: usize| build_series(SeriesKind::Q(q), i, n, total, hbar).map(|e| c.carry(&e));
    let mut xp0 = vec![lab(total, n + 1, 1)];
    let mut xm0 = vec![lab(n + 1, total, -1)];
    let mut h1 = vec![None];
    for i in 1..m {
        xp0.push(lab(n + i, n + i + 1, 0));
        xm0.push(lab(n + i + 1, n + i, 0));
        let gh = g.h1[i + n].clone().expect("ambient H_{i,1} for i != 0");
        h1.push(Some(gh.add(&Op::expr(q_ser(i)? - q_ser(i + 1)?))));
    }
    complete_generators(PartialSet {
        name: "psi2".into(),
        rank: m,
        hbar: hbar.clone(),
        eps_eff: eps + &(hbar * &Rational::from_int(n as i64)),
        h0: h0_from_bracket(&xp0, &xm0),
        xp0,
        xm0,
        h1,
        xp1: vec![None; m],
        xm1: vec![None; m],
    })
}
