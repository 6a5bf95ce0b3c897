//! Parameter points (ħ, ε) and the scalars derived from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleFlavor {
    /// Level c̃ in the pairing; carrier of evaluation-map images.
    Evaluation,
    /// Level α in the pairing; carrier of W-algebra images.
    WAlgebra,
}

/// How α is read off from (ħ, ε) for W-algebra points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsConvention {
    /// ε = ħα
    Maim,
    /// ε = −ħα
    U8,
}

impl std::str::FromStr for EpsConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maim" => Ok(EpsConvention::Maim),
            "u8" => Ok(EpsConvention::U8),
            _ => Err(Error::Config(format!("unknown eps convention {s:?} (maim|u8)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamPoint {
    pub hbar: Rational,
    pub eps: Rational,
    pub ctilde: Rational,
    pub alpha: Rational,
    pub level_k: Rational,
    pub n_size: usize,
    pub flavor: ModuleFlavor,
    pub convention: EpsConvention,
}

pub fn make_param_point(
    hbar: Rational,
    eps: Rational,
    flavor: ModuleFlavor,
    n_size: usize,
    convention: EpsConvention,
) -> Result<ParamPoint> {
    if hbar.is_zero() {
        return Err(Error::Config("hbar must be nonzero".into()));
    }
    if n_size == 0 {
        return Err(Error::Config("n_size must be at least 1".into()));
    }
    let ctilde = &eps / &hbar;
    let alpha = match convention {
        EpsConvention::Maim => ctilde.clone(),
        EpsConvention::U8 => -&ctilde,
    };
    let level_k = &alpha - &Rational::from_int(n_size as i64);
    Ok(ParamPoint { hbar, eps, ctilde, alpha, level_k, n_size, flavor, convention })
}

/// Copy with ε replaced by ε + delta·ħ. The derived levels are kept, since the
/// shifted point only tags the source algebra of a map.
pub fn shift_eps(p: &ParamPoint, delta_multiple_of_hbar: i64) -> ParamPoint {
    let mut q = p.clone();
    q.eps = &p.eps + &(&Rational::from_int(delta_multiple_of_hbar) * &p.hbar);
    q
}

impl ParamPoint {
    /// The level entering κ for this point's flavour.
    pub fn level(&self) -> &Rational {
        match self.flavor {
            ModuleFlavor::Evaluation => &self.ctilde,
            ModuleFlavor::WAlgebra => &self.alpha,
        }
    }

    pub fn with_flavor(&self, flavor: ModuleFlavor, n_size: usize) -> ParamPoint {
        make_param_point(self.hbar.clone(), self.eps.clone(), flavor, n_size, self.convention)
            .expect("hbar already validated")
    }

    pub fn with_convention(&self, convention: EpsConvention) -> ParamPoint {
        make_param_point(self.hbar.clone(), self.eps.clone(), self.flavor, self.n_size, convention)
            .expect("hbar already validated")
    }

    /// Short stable text used in fingerprints and cache keys.
    pub fn fingerprint(&self) -> String {
        format!("hbar={};eps={};level={};flavor={:?}", self.hbar, self.eps, self.level(), self.flavor)
    }
}

const DENOMINATORS: [i64; 6] = [2, 3, 5, 7, 11, 13];

fn sample_nonzero(rng: &mut ChaCha8Rng) -> Rational {
    let d = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
    loop {
        let n: i64 = rng.gen_range(-29..=29);
        if n != 0 {
            return Rational::new(n, d);
        }
    }
}

/// `count` seeded (ħ, ε) pairs with both coordinates nonzero and pairwise distinct.
pub fn generic_pairs(count: usize, seed: u64) -> Vec<(Rational, Rational)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(count);
    while out.len() < count {
        let h = sample_nonzero(&mut rng);
        let e = sample_nonzero(&mut rng);
        if out.iter().all(|(h2, e2)| *h2 != h && *e2 != e) {
            out.push((h, e));
        }
    }
    out
}

pub fn generic_points(
    count: usize,
    seed: u64,
    flavor: ModuleFlavor,
    n_size: usize,
    convention: EpsConvention,
) -> Vec<ParamPoint> {
    generic_pairs(count, seed)
        .into_iter()
        .map(|(h, e)| make_param_point(h, e, flavor, n_size, convention).expect("nonzero hbar"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn evaluation_level() {
        let p = make_param_point(r(3, 7), r(5, 11), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
        assert_eq!(p.ctilde, r(35, 33));
        let p = make_param_point(r(1, 1), r(0, 1), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
        assert_eq!(p.ctilde, Rational::ZERO);
    }

    #[test]
    fn w_algebra_level() {
        let p = make_param_point(r(2, 1), r(6, 1), ModuleFlavor::WAlgebra, 3, EpsConvention::Maim).unwrap();
        assert_eq!(p.alpha, r(3, 1));
        assert_eq!(p.level_k, Rational::ZERO);
        assert_eq!(p.level(), &r(3, 1));
        let q = p.with_convention(EpsConvention::U8);
        assert_eq!(q.alpha, r(-3, 1));
        assert_eq!(q.level_k, r(-6, 1));
    }

    #[test]
    fn zero_hbar_rejected() {
        let e = make_param_point(Rational::ZERO, r(1, 1), ModuleFlavor::Evaluation, 3, EpsConvention::Maim);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn shifts() {
        let p = make_param_point(r(3, 7), r(5, 11), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
        let q = shift_eps(&p, 1);
        assert_eq!(q.eps, r(68, 77));
        assert_eq!(q.ctilde, p.ctilde);
        let p = make_param_point(r(1, 1), r(0, 1), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
        assert_eq!(shift_eps(&p, 3).eps, r(3, 1));
        assert_eq!(shift_eps(&p, 0), p);
    }

    #[test]
    fn sampling_is_seeded() {
        assert_eq!(generic_pairs(4, 7), generic_pairs(4, 7));
        assert_ne!(generic_pairs(4, 7), generic_pairs(4, 8));
        let pts = generic_pairs(8, 1);
        assert!(pts.iter().all(|(h, e)| !h.is_zero() && !e.is_zero()));
    }

    proptest! {
        #[test]
        fn ctilde_times_hbar_is_eps(hn in -40i64..40, hd in 1i64..20, en in -40i64..40, ed in 1i64..20) {
            prop_assume!(hn != 0);
            let p = make_param_point(r(hn, hd), r(en, ed), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
            prop_assert_eq!(&p.ctilde * &p.hbar, p.eps.clone());
        }

        #[test]
        fn shift_is_additive(a in -5i64..5, b in -5i64..5, hn in 1i64..30, en in -30i64..30) {
            let p = make_param_point(r(hn, 7), r(en, 5), ModuleFlavor::Evaluation, 3, EpsConvention::Maim).unwrap();
            prop_assert_eq!(shift_eps(&p, a + b), shift_eps(&shift_eps(&p, a), b));
        }

        #[test]
        fn alpha_is_k_plus_n(hn in 1i64..30, en in -30i64..30, n in 1usize..8) {
            let p = make_param_point(r(hn, 3), r(en, 2), ModuleFlavor::WAlgebra, n, EpsConvention::U8).unwrap();
            prop_assert_eq!(&p.level_k + &Rational::from_int(n as i64), p.alpha.clone());
        }
    }
}
