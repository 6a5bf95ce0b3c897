//! Wiring of targets to suites, parameter points and negative controls.

use std::path::PathBuf;

use serde::Serialize;

use crate::checks::{
    check_commutator_formulas, check_composition, check_coset_affine, check_coset_w, check_pairwise_commute,
    check_yangian_relations, closed_form_relations, commutator_exhaustive, commutator_random, composition_relations,
    proof_identity_relations, run_relations, yangian_relations, CheckReport, ProofIdentity, Relation,
};
use crate::coeffs::{generic_pairs, make_param_point, EpsConvention, ModuleFlavor, ParamPoint};
use crate::error::{Error, Result};
use crate::loopalg::QVariant;
use crate::modules::{build_module_with_cap, TruncatedModule};
use crate::morphisms::{
    build_embedded_ev, build_embedded_ev_at, build_ev, build_iota_phi, build_phi, build_psi, build_psi1,
    build_psi1_with, build_psi2, Ambient, GeneratorSet, HalfTermSign, IotaCorner, PhiForm, PsiVariant, XMinusReading,
};
use crate::rational::Rational;
use crate::report::{RunReport, SuiteRole};
use crate::vertexmodes::{coset_membership, VAState, W2Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Ev,
    Psi,
    Psi1,
    Psi2,
    Phi,
    Psi1Psi2Commute,
    EvPsi1Compose,
    PhiPsi1Compose,
    Coset,
    Appendix,
    ProofIdentities,
    All,
}

impl Target {
    pub const EACH: [Target; 11] = [
        Target::Ev,
        Target::Psi,
        Target::Psi1,
        Target::Psi2,
        Target::Phi,
        Target::Psi1Psi2Commute,
        Target::EvPsi1Compose,
        Target::PhiPsi1Compose,
        Target::Coset,
        Target::Appendix,
        Target::ProofIdentities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Ev => "ev",
            Target::Psi => "psi",
            Target::Psi1 => "psi1",
            Target::Psi2 => "psi2",
            Target::Phi => "phi",
            Target::Psi1Psi2Commute => "psi1-psi2-commute",
            Target::EvPsi1Compose => "ev-psi1-compose",
            Target::PhiPsi1Compose => "phi-psi1-compose",
            Target::Coset => "coset",
            Target::Appendix => "appendix",
            Target::ProofIdentities => "proof-identities",
            Target::All => "all",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::EACH
            .iter()
            .chain(std::iter::once(&Target::All))
            .find(|t| t.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown target {s:?}")))
    }
}

/// Everything that determines a run. Serialized into every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub target: Target,
    pub n: usize,
    pub m: usize,
    pub degree: usize,
    pub points: usize,
    pub seed: u64,
    /// Explicit (ħ, ε) pairs; when empty, `points` pairs are sampled from `seed`.
    pub explicit_points: Vec<(Rational, Rational)>,
    pub eps_convention: EpsConvention,
    /// None scans both corners (and both conventions) for the Φ composition.
    pub iota_corner: Option<IotaCorner>,
    pub q_variant: QVariant,
    pub xminus_reading: XMinusReading,
    pub w2_variant: W2Variant,
    pub half_term: HalfTermSign,
    /// Also run the alternative readings as recorded, non-deciding suites.
    pub scan_alternatives: bool,
    pub full_grid: bool,
    pub appendix_samples: usize,
    pub basis_cap: u128,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: Target::All,
            n: 3,
            m: 3,
            degree: 2,
            points: 4,
            seed: 7,
            explicit_points: Vec::new(),
            eps_convention: EpsConvention::Maim,
            iota_corner: None,
            q_variant: QVariant::Shifted,
            xminus_reading: XMinusReading::Printed,
            w2_variant: W2Variant::Literal,
            half_term: HalfTermSign::Evaluation,
            scan_alternatives: true,
            full_grid: true,
            appendix_samples: 50,
            basis_cap: 5_000_000,
            threads: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let needs_m = matches!(
            self.target,
            Target::Psi1
                | Target::Psi2
                | Target::Psi1Psi2Commute
                | Target::EvPsi1Compose
                | Target::PhiPsi1Compose
                | Target::Coset
                | Target::ProofIdentities
                | Target::All
        );
        if self.n < 3 {
            return Err(Error::Config(format!("rank n = {} is below 3", self.n)));
        }
        if needs_m && self.m < 3 {
            return Err(Error::Config(format!("rank m = {} is below 3", self.m)));
        }
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if self.explicit_points.is_empty() && self.points == 0 {
            return Err(Error::Config("at least one parameter point is required".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<(Rational, Rational)> {
        if self.explicit_points.is_empty() {
            generic_pairs(self.points, self.seed)
        } else {
            self.explicit_points.clone()
        }
    }

    pub fn phi_form(&self) -> PhiForm {
        PhiForm::new(self.w2_variant).with_half(self.half_term)
    }
}

pub type Report = RunReport<RunConfig>;

/// Exit code and report of one run. The report is absent on configuration
/// errors and resource-cap refusals.
pub struct Outcome {
    pub exit_code: i32,
    pub report: Option<Report>,
    pub error: Option<String>,
}

enum Stop {
    Abort,
    Err(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Err(e)
    }
}

type Step = std::result::Result<(), Stop>;

struct Run<'a> {
    cfg: &'a RunConfig,
    report: Report,
}

fn relations_with_id(g: &GeneratorSet, id: &str) -> Vec<Relation> {
    yangian_relations(g).into_iter().filter(|r| r.id == id).collect()
}

impl<'a> Run<'a> {
    fn module(&self, n: usize, factors: usize, pt: ParamPoint) -> Result<TruncatedModule> {
        build_module_with_cap(n, self.cfg.degree, factors, pt, self.cfg.basis_cap)
    }

    fn point(
        &self,
        (h, e): &(Rational, Rational),
        flavor: ModuleFlavor,
        n: usize,
        conv: EpsConvention,
    ) -> Result<ParamPoint> {
        make_param_point(h.clone(), e.clone(), flavor, n, conv)
    }

    fn check(&mut self, name: &str, reports: Vec<CheckReport>, role: SuiteRole) {
        let mut it = reports.into_iter();
        let Some(mut first) = it.next() else { return };
        for r in it {
            first.absorb(r);
        }
        first.name = name.to_string();
        first.sort();
        self.report.push_suite(first, role);
    }

    fn control(&mut self, suite: &str, mutation: &str, mut rep: CheckReport) -> Step {
        rep.name = format!("{suite} [{mutation}]");
        if self.report.push_control(suite, mutation, rep) {
            Ok(())
        } else {
            self.report.overall.aborted_by = Some(format!("{suite}: control {mutation} passed"));
            Err(Stop::Abort)
        }
    }

    fn target(&mut self, t: Target) -> Step {
        match t {
            Target::Ev => self.ev(),
            Target::Psi => self.psi(),
            Target::Psi1 => self.psi1(),
            Target::Psi2 => self.psi2(),
            Target::Phi => self.phi(),
            Target::Psi1Psi2Commute => self.commute(),
            Target::EvPsi1Compose => self.ev_compose(),
            Target::PhiPsi1Compose => self.phi_compose(),
            Target::Coset => self.coset(),
            Target::Appendix => self.appendix(),
            Target::ProofIdentities => self.proof_identities(),
            Target::All => {
                for t in Target::EACH {
                    self.target(t)?;
                }
                Ok(())
            }
        }
    }

    fn ev(&mut self) -> Step {
        let (n, d) = (self.cfg.n, self.cfg.degree);
        let mut reps = Vec::new();
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(n, 1, self.point(pair, ModuleFlavor::Evaluation, n, EpsConvention::Maim)?)?;
            let g = build_ev(n, &pair.0, &pair.1)?;
            reps.push(check_yangian_relations(&g, &m, d));
            if k == 0 {
                let bad = g.with_eps_eff(&pair.1 + &pair.0);
                control = Some(run_relations("ev", &m, &relations_with_id(&bad, "xx-sym-edge"), d));
            }
        }
        self.check("ev", reps, SuiteRole::Check);
        self.control("ev", "eps_eff off by hbar", control.expect("at least one point"))
    }

    fn psi(&mut self) -> Step {
        let (n, d) = (self.cfg.n, self.cfg.degree);
        let readings = [self.cfg.xminus_reading, other_reading(self.cfg.xminus_reading)];
        let mut reps = Vec::new();
        let mut closed: Vec<Vec<CheckReport>> = vec![Vec::new(), Vec::new()];
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(n + 1, 1, self.point(pair, ModuleFlavor::Evaluation, n + 1, EpsConvention::Maim)?)?;
            let g = build_psi(n, &pair.0, &pair.1, None, PsiVariant::Faithful)?;
            reps.push(check_yangian_relations(&g, &m, d));
            for (slot, r) in readings.iter().enumerate() {
                if slot == 1 && !self.cfg.scan_alternatives {
                    continue;
                }
                let shown = build_psi(n, &pair.0, &pair.1, Some(*r), PsiVariant::Faithful)?;
                closed[slot].push(run_relations("psi closed forms", &m, &closed_form_relations(&g, &shown), d));
            }
            if k == 0 {
                let bad = build_psi(n, &pair.0, &pair.1, None, PsiVariant::DropSeries)?;
                control = Some(check_yangian_relations(&bad, &m, d));
            }
        }
        self.check("psi", reps, SuiteRole::Check);
        let [main, alt] = [closed.remove(0), closed.remove(0)];
        self.check(&format!("psi closed forms ({})", reading_name(readings[0])), main, SuiteRole::Check);
        self.check(&format!("psi closed forms ({})", reading_name(readings[1])), alt, SuiteRole::Scan);
        self.control("psi", "series tail dropped from H_{i,1}", control.expect("at least one point"))
    }

    fn psi1(&mut self) -> Step {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let mut reps = Vec::new();
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            let g = build_psi1(n, total, Ambient::Ev, &pair.0, &pair.1)?;
            reps.push(check_yangian_relations(&g, &m, d));
            if k == 0 {
                let bad = g.with_eps_eff(&pair.1 + &pair.0);
                control = Some(run_relations("psi1", &m, &relations_with_id(&bad, "xx-sym-edge"), d));
            }
        }
        self.check("psi1", reps, SuiteRole::Check);
        self.control("psi1", "eps_eff off by hbar", control.expect("at least one point"))
    }

    fn psi2(&mut self) -> Step {
        let (n, mm, total, d) = (self.cfg.n, self.cfg.m, self.cfg.n + self.cfg.m, self.cfg.degree);
        let variants = [self.cfg.q_variant, other_q(self.cfg.q_variant)];
        let mut reps: Vec<Vec<CheckReport>> = vec![Vec::new(), Vec::new()];
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            for (slot, q) in variants.iter().enumerate() {
                if slot == 1 && !self.cfg.scan_alternatives {
                    continue;
                }
                let g = build_psi2(mm, n, Ambient::Ev, *q, &pair.0, &pair.1)?;
                reps[slot].push(check_yangian_relations(&g, &m, d));
                if k == 0 && slot == 0 {
                    let bad = g.with_eps_eff(&g.eps_eff - &pair.0);
                    control = Some(run_relations("psi2", &m, &relations_with_id(&bad, "xx-sym-edge"), d));
                }
            }
        }
        let [main, alt] = [reps.remove(0), reps.remove(0)];
        self.check(&format!("psi2 (q {})", q_name(variants[0])), main, SuiteRole::Check);
        self.check(&format!("psi2 (q {})", q_name(variants[1])), alt, SuiteRole::Scan);
        self.control("psi2", "eps_eff off by hbar", control.expect("at least one point"))
    }

    fn phi(&mut self) -> Step {
        let (n, d) = (self.cfg.n, self.cfg.degree);
        let form = self.cfg.phi_form();
        let alt_form = form.with_half(other_half(form.half));
        let mut reps: Vec<Vec<CheckReport>> = vec![Vec::new(), Vec::new()];
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(n, 2, self.point(pair, ModuleFlavor::WAlgebra, n, EpsConvention::Maim)?)?;
            for (slot, f) in [form, alt_form].iter().enumerate() {
                if slot == 1 && !self.cfg.scan_alternatives {
                    continue;
                }
                let g = build_phi(n, *f, &pair.0, &pair.1)?;
                reps[slot].push(check_yangian_relations(&g, &m, d));
                if k == 0 && slot == 0 {
                    let bad = g.with_eps_eff(&pair.1 + &pair.0);
                    control = Some(run_relations("phi", &m, &relations_with_id(&bad, "xx-sym-edge"), d));
                }
            }
        }
        let [main, alt] = [reps.remove(0), reps.remove(0)];
        self.check(&format!("phi ({} half term)", half_name(form.half)), main, SuiteRole::Check);
        self.check(&format!("phi ({} half term)", half_name(alt_form.half)), alt, SuiteRole::Scan);
        self.control("phi", "eps_eff off by hbar", control.expect("at least one point"))
    }

    fn commute(&mut self) -> Step {
        let (n, mm, total, d) = (self.cfg.n, self.cfg.m, self.cfg.n + self.cfg.m, self.cfg.degree);
        let mut reps = Vec::new();
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            let g1 = build_psi1(n, total, Ambient::Ev, &pair.0, &pair.1)?;
            let g2 = build_psi2(mm, n, Ambient::Ev, self.cfg.q_variant, &pair.0, &pair.1)?;
            reps.push(check_pairwise_commute(&g1, &g2, &m, d, self.cfg.full_grid));
            if k == 0 {
                let bad = build_psi1_with(n, total, Ambient::Ev, &pair.0, &pair.1, PsiVariant::DropSeries)?;
                control = Some(check_pairwise_commute(&bad, &g2, &m, d, false));
            }
        }
        self.check("psi1-psi2-commute", reps, SuiteRole::Check);
        self.control("psi1-psi2-commute", "P series dropped from psi1", control.expect("at least one point"))
    }

    fn ev_compose(&mut self) -> Step {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let mut reps = Vec::new();
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            let lhs = build_psi1(n, total, Ambient::Ev, &pair.0, &pair.1)?;
            let rhs = build_embedded_ev(n, &pair.0, &pair.1)?;
            reps.push(check_composition(&lhs, &rhs, &m, d)?);
            if k == 0 {
                let bad = build_embedded_ev_at(n, total - n, &pair.0, &pair.1)?;
                control = Some(check_composition(&lhs, &bad, &m, d)?);
            }
        }
        self.check("ev-psi1-compose", reps, SuiteRole::Check);
        self.control("ev-psi1-compose", "ev placed in the lower-right corner", control.expect("at least one point"))
    }

    /// Φ^{m+n}∘Ψ₁ = ι∘Φⁿ plus the ε-bearing relations of the composite at the
    /// point's ε, for one (corner, convention).
    fn phi_compose_once(
        &self,
        pair: &(Rational, Rational),
        corner: IotaCorner,
        conv: EpsConvention,
    ) -> Result<CheckReport> {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let form = self.cfg.phi_form();
        let m = self.module(total, 2, self.point(pair, ModuleFlavor::WAlgebra, total, conv)?)?;
        let lhs = build_psi1(n, total, Ambient::Phi(form), &pair.0, &pair.1)?;
        let rhs = build_iota_phi(n, total, corner, form, &pair.0, &pair.1)?;
        let mut rels = composition_relations(&lhs, &rhs)?;
        rels.extend(
            yangian_relations(&lhs)
                .into_iter()
                .filter(|r| matches!(r.id.as_str(), "htx-first" | "htx-last" | "xx-sym-edge")),
        );
        Ok(run_relations("phi-psi1-compose", &m, &rels, d))
    }

    fn phi_compose(&mut self) -> Step {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let pairs = self.cfg.pairs();
        let combos: Vec<(IotaCorner, EpsConvention)> = match self.cfg.iota_corner {
            Some(c) => vec![(c, self.cfg.eps_convention)],
            None => [IotaCorner::UpperLeft, IotaCorner::LowerRight]
                .into_iter()
                .flat_map(|c| [EpsConvention::Maim, EpsConvention::U8].map(|e| (c, e)))
                .collect(),
        };
        let mut passing = Vec::new();
        for &(corner, conv) in &combos {
            let mut reps = Vec::new();
            for pair in &pairs {
                reps.push(self.phi_compose_once(pair, corner, conv)?);
            }
            let name = format!("phi-psi1-compose ({}, {})", corner_name(corner), conv_name(conv));
            let role = if combos.len() == 1 { SuiteRole::Check } else { SuiteRole::Scan };
            self.check(&name, reps, role);
            if self.report.suites.last().map(|s| s.failure_count == 0).unwrap_or(false) {
                passing.push(name);
            }
        }
        if combos.len() > 1 {
            let ok = passing.len() == 1;
            let value = if passing.is_empty() { "none".to_string() } else { passing.join("; ") };
            self.report.push_finding("phi-psi1-compose passing combination", value, ok);
        }
        let pair = &pairs[0];
        let form = self.cfg.phi_form();
        let m = self.module(total, 2, self.point(pair, ModuleFlavor::WAlgebra, total, EpsConvention::Maim)?)?;
        let lhs = build_psi1(n, total, Ambient::Phi(form), &pair.0, &pair.1)?;
        let bad = build_iota_phi(n, total, IotaCorner::UpperLeft, form.flipped(), &pair.0, &pair.1)?;
        let control = check_composition(&lhs, &bad, &m, d)?;
        self.control("phi-psi1-compose", "alpha-term sign flipped in the small W-algebra", control)
    }

    fn coset(&mut self) -> Step {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let r_max = 2 * d as i64;
        let form = self.cfg.phi_form().w2;
        let modes = [(1, -1), (-1, 1)];
        let (mut affine, mut diffs, mut w) = (Vec::new(), Vec::new(), Vec::new());
        let mut controls = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            affine.push(check_coset_affine(&m, n, r_max, false));
            diffs.push(check_coset_affine(&m, n, r_max, true));
            let mw = self.module(total, 2, self.point(pair, ModuleFlavor::WAlgebra, total, EpsConvention::Maim)?)?;
            w.push(check_coset_w(&mw, n, form, r_max, &modes, d, false)?);
            if k == 0 {
                let mut bad = CheckReport::new("coset-affine", &m);
                let cand = VAState::current(crate::loopalg::Label::e(1, 2));
                let gens = crate::vertexmodes::sl_currents(n, crate::loopalg::SLOT1);
                let (ok, _) = coset_membership(&m, &cand.to_state(&m), &gens, r_max);
                bad.instances.push(crate::checks::InstanceResult {
                    relation: "coset-affine".into(),
                    indices: crate::checks::indices(&[("i", 1), ("j", 2)]),
                    status: if ok { crate::checks::Status::Pass } else { crate::checks::Status::Fail },
                    source_degree: 0,
                    residual_witness: None,
                });
                let raw = check_coset_w(&mw, n, form, r_max, &[], d, true)?;
                controls = Some((bad, raw));
            }
        }
        self.check("coset-affine", affine, SuiteRole::Check);
        self.check("coset-affine-differences", diffs, SuiteRole::Check);
        self.check("coset-w", w, SuiteRole::Check);
        let (bad, raw) = controls.expect("at least one point");
        self.control("coset-affine", "candidate E_{1,2}[-1]", bad)?;
        self.control("coset-w", "block W2 without trace correction", raw)
    }

    fn appendix(&mut self) -> Step {
        let (n, total, d) = (self.cfg.n, self.cfg.n + self.cfg.m, self.cfg.degree);
        let small = n + 1;
        let exhaustive = commutator_exhaustive(small);
        let random = commutator_random(total, self.cfg.appendix_samples, self.cfg.seed);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let m = self.module(small, 1, self.point(pair, ModuleFlavor::Evaluation, small, EpsConvention::Maim)?)?;
            a.push(check_commutator_formulas(&m, &exhaustive, d, false));
            let mb = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            b.push(check_commutator_formulas(&mb, &random, d, false));
            if k == 0 {
                control = Some(check_commutator_formulas(&m, &exhaustive[..exhaustive.len().min(64)], d, true));
            }
        }
        self.check(&format!("appendix (N={small}, exhaustive)"), a, SuiteRole::Check);
        self.check(&format!("appendix (N={total}, sampled)"), b, SuiteRole::Check);
        self.control("appendix", "right-hand side negated", control.expect("at least one point"))
    }

    fn proof_identities(&mut self) -> Step {
        let (n, mm, total, d) = (self.cfg.n, self.cfg.m, self.cfg.n + self.cfg.m, self.cfg.degree);
        let variants = [self.cfg.q_variant, other_q(self.cfg.q_variant)];
        let (mut r_reps, mut pq): (Vec<CheckReport>, Vec<Vec<CheckReport>>) =
            (Vec::new(), vec![Vec::new(), Vec::new()]);
        let mut control = None;
        for (k, pair) in self.cfg.pairs().iter().enumerate() {
            let h = &pair.0;
            let m = self.module(n + 1, 1, self.point(pair, ModuleFlavor::Evaluation, n + 1, EpsConvention::Maim)?)?;
            let rels = proof_identity_relations(n, mm, self.cfg.q_variant, h, ProofIdentity::RSeries, false)?;
            r_reps.push(run_relations("r-series", &m, &rels, d));
            let mb = self.module(total, 1, self.point(pair, ModuleFlavor::Evaluation, total, EpsConvention::Maim)?)?;
            for (slot, q) in variants.iter().enumerate() {
                if slot == 1 && !self.cfg.scan_alternatives {
                    continue;
                }
                let rels = proof_identity_relations(n, mm, *q, h, ProofIdentity::PQ, false)?;
                pq[slot].push(run_relations("pq", &mb, &rels, d));
            }
            if k == 0 {
                let rels = proof_identity_relations(n, mm, self.cfg.q_variant, h, ProofIdentity::RSeries, true)?;
                control = Some(run_relations("r-series", &m, &rels, d));
            }
        }
        self.check("proof identity R-series", r_reps, SuiteRole::Check);
        let [main, alt] = [pq.remove(0), pq.remove(0)];
        self.check(&format!("proof identity PQ (q {})", q_name(variants[0])), main, SuiteRole::Check);
        self.check(&format!("proof identity PQ (q {})", q_name(variants[1])), alt, SuiteRole::Scan);
        self.control("proof identity R-series", "[R_i, R_j] dropped", control.expect("at least one point"))
    }
}

fn other_q(q: QVariant) -> QVariant {
    match q {
        QVariant::Printed => QVariant::Shifted,
        QVariant::Shifted => QVariant::Printed,
    }
}

fn q_name(q: QVariant) -> &'static str {
    match q {
        QVariant::Printed => "printed",
        QVariant::Shifted => "shifted",
    }
}

fn other_reading(r: XMinusReading) -> XMinusReading {
    match r {
        XMinusReading::Printed => XMinusReading::Mirrored,
        XMinusReading::Mirrored => XMinusReading::Printed,
    }
}

fn reading_name(r: XMinusReading) -> &'static str {
    match r {
        XMinusReading::Printed => "printed",
        XMinusReading::Mirrored => "mirrored",
    }
}

fn other_half(h: HalfTermSign) -> HalfTermSign {
    match h {
        HalfTermSign::Displayed => HalfTermSign::Evaluation,
        HalfTermSign::Evaluation => HalfTermSign::Displayed,
    }
}

fn half_name(h: HalfTermSign) -> &'static str {
    match h {
        HalfTermSign::Displayed => "displayed",
        HalfTermSign::Evaluation => "evaluation",
    }
}

fn corner_name(c: IotaCorner) -> &'static str {
    match c {
        IotaCorner::UpperLeft => "upper-left",
        IotaCorner::LowerRight => "lower-right",
    }
}

fn conv_name(c: EpsConvention) -> &'static str {
    match c {
        EpsConvention::Maim => "maim",
        EpsConvention::U8 => "u8",
    }
}

/// Runs a target. Exit codes: 0 all checks pass and all controls fail,
/// 1 a check failed or a control passed, 2 configuration error, 3 basis cap.
/// The report is written to `cfg.output` on exits 0 and 1.
pub fn verify(cfg: &RunConfig) -> Outcome {
    if let Err(e) = cfg.validate() {
        return Outcome { exit_code: 2, report: None, error: Some(e.to_string()) };
    }
    let pool = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().ok(),
        None => None,
    };
    let body = || {
        let mut run = Run { cfg, report: RunReport::new(cfg.clone()) };
        let res = run.target(cfg.target);
        (run.report, res)
    };
    let (mut report, res) = match &pool {
        Some(p) => p.install(body),
        None => body(),
    };
    match res {
        Err(Stop::Err(e)) => {
            let code = match e {
                Error::ResourceCap { .. } => 3,
                Error::Config(_) | Error::Parse(_) => 2,
                _ => 1,
            };
            return Outcome { exit_code: code, report: None, error: Some(e.to_string()) };
        }
        Ok(()) | Err(Stop::Abort) => report.finalize(),
    }
    let mut error = None;
    if let Some(path) = &cfg.output {
        if let Err(e) = report.write(path) {
            error = Some(e.to_string());
        }
    }
    Outcome { exit_code: report.overall.exit_code, report: Some(report), error }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(target: Target) -> RunConfig {
        RunConfig { target, degree: 1, points: 1, output: None, ..RunConfig::default() }
    }

    #[test]
    fn target_names_round_trip() {
        for t in Target::EACH.into_iter().chain([Target::All]) {
            assert_eq!(t.name().parse::<Target>().unwrap(), t);
        }
        assert!("nope".parse::<Target>().is_err());
    }

    #[test]
    fn small_rank_is_a_config_error() {
        let out = verify(&RunConfig { n: 2, ..cfg(Target::Ev) });
        assert_eq!(out.exit_code, 2);
        assert!(out.report.is_none());
        let out = verify(&RunConfig { m: 2, ..cfg(Target::Psi1) });
        assert_eq!(out.exit_code, 2);
    }

    #[test]
    fn basis_cap_refuses() {
        let out = verify(&RunConfig { basis_cap: 3, ..cfg(Target::Ev) });
        assert_eq!(out.exit_code, 3);
        assert!(out.report.is_none());
    }

    #[test]
    fn ev_run_passes_with_failing_control() {
        let out = verify(&cfg(Target::Ev));
        assert_eq!(out.exit_code, 0, "{:?}", out.error);
        let r = out.report.unwrap();
        assert!(r.suite("ev").is_some_and(|s| s.status == crate::checks::Status::Pass));
        assert_eq!(r.negative_controls.len(), 1);
        assert_eq!(r.negative_controls[0].status, crate::report::ControlStatus::FailedAsExpected);
    }

    #[test]
    fn explicit_points_override_sampling() {
        let p = (Rational::new(1, 3), Rational::new(2, 5));
        let c = RunConfig { explicit_points: vec![p.clone()], points: 0, ..cfg(Target::Ev) };
        assert!(c.validate().is_ok());
        assert_eq!(c.pairs(), vec![p]);
    }
}
