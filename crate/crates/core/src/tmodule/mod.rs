//! Anderson t-modules φ_t = Σ G_k σ^k at a point, with t ↦ θ.

mod exp;
mod lie;
mod points;

pub use exp::{exp_apply, exp_coefficients, exp_coefficients_split, functional_equation_check, kernel_valuations, ExpCoeffs, FunctionalReport};
pub use lie::{lie_quotient_check, LieReport};
pub use points::{torsion_comparison, torsion_points, ComparisonReport, TorsionPoints};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rat::q;
use crate::scan::gl2;
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tate::TateMatrix;
use crate::tau::TauSpec;
use crate::torsion::torsion_invariants;

#[derive(Debug, Clone, PartialEq)]
pub struct TModuleSpec {
    pub d: usize,
    /// G_0, …, G_s.
    pub g: Vec<Mat>,
    pub theta: ValSeries,
}

impl TModuleSpec {
    pub fn new(g: Vec<Mat>, theta: ValSeries) -> Result<Self> {
        let Some(g0) = g.first() else {
            return Err(Error::DegenerateInput("t-module needs G_0".into()));
        };
        let d = g0.rows();
        if g.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::DimensionMismatch("G_k must all be d×d".into()));
        }
        if !theta.val().is_some_and(|v| v < q(0)) {
            return Err(Error::HypothesisViolated("|θ| > 1 required".into()));
        }
        let spec = TModuleSpec { d, g, theta };
        spec.nil_order()?;
        Ok(spec)
    }

    pub fn ctx(&self) -> &Ctx {
        self.theta.ctx()
    }

    pub fn carlitz(theta: &ValSeries) -> Result<Self> {
        Self::drinfeld(theta, &[ValSeries::one(theta.ctx())])
    }

    /// d = 1: φ_t = θ + g_1σ + … + g_rσ^r.
    pub fn drinfeld(theta: &ValSeries, coeffs: &[ValSeries]) -> Result<Self> {
        let mut g = vec![Mat::scalar(theta, 1)];
        g.extend(coeffs.iter().map(|c| Mat::scalar(c, 1)));
        Self::new(g, theta.clone())
    }

    /// φ_t = -Δ_1^{-1} + Δ_1^{-1}σ with θ = ζ^{-1}.
    pub fn pink(delta1: &Mat, zeta: &ValSeries) -> Result<Self> {
        let inv = delta1.inv()?;
        Self::new(vec![inv.neg(), inv], zeta.invert()?)
    }

    /// Top σ-degree with G_s ≠ 0.
    pub fn s(&self) -> usize {
        (0..self.g.len()).rev().find(|&k| !self.g[k].is_exact_zero()).unwrap_or(0)
    }

    /// N = G_0 - θ·Id.
    pub fn nilpotent(&self) -> Mat {
        self.g[0].sub(&Mat::scalar(&self.theta, self.d))
    }

    /// Least m with N^{m+1} = 0.
    pub fn nil_order(&self) -> Result<usize> {
        let n = self.nilpotent();
        let mut pw = n.clone();
        for m in 0..=self.d {
            if pw.is_zero_to_prec() {
                return Ok(m);
            }
            pw = pw.mul(&n);
        }
        Err(Error::NotNilpotent)
    }

    /// Rank of the motive for the supported shapes.
    pub fn rank(&self) -> Option<usize> {
        match (self.d, self.s()) {
            (1, s) if s > 0 => Some(s),
            (2, 1) => Some(2),
            _ => None,
        }
    }
}

/// τ-matrix of Hom(E, G_a) in column coordinates: t acts by composing with
/// φ_t on the right, τ by σ on the left.
pub fn motive_of(spec: &TModuleSpec) -> Result<TauSpec> {
    let ctx = spec.ctx().clone();
    let s = spec.s();
    match (spec.d, s) {
        (1, s) if s > 0 => {
            // basis 1, σ, …, σ^{s-1}; σ^s = g_s^{-1}(t - Σ_{k<s} g_k σ^k)
            let gs_inv = spec.g[s].get(0, 0).invert()?;
            let mut l0 = Mat::zero(&ctx, s, s);
            let mut l1 = Mat::zero(&ctx, s, s);
            for i in 0..s - 1 {
                l0.set(i + 1, i, ValSeries::one(&ctx));
            }
            for k in 0..s {
                l0.set(k, s - 1, spec.g[k].get(0, 0).mul(&gs_inv).neg());
            }
            l1.set(0, s - 1, gs_inv);
            TauSpec::from_levels(vec![l0, l1])
        }
        (2, 1) => {
            // τ e_i^* = e_i^* σ = t·(e_i^* G_1^{-1}) - e_i^* G_1^{-1} G_0
            let g1inv = spec.g[1].inv()?;
            let l0 = g1inv.mul(&spec.g[0]).neg().transpose();
            TauSpec::from_levels(vec![l0, g1inv.transpose()])
        }
        (d, s) => Err(Error::UnsupportedShape(format!("motive for d = {d}, s = {s}"))),
    }
}

/// Base change S with S^{-1}·Δ_M·σS = Id + tΔ_1 mod t^{N+1}, for the motive
/// Δ_M of the Pink t-module. A constant S in GL_2(F_q) is tried first;
/// otherwise S = Φ_M Φ^{-1} from torsion bases of both sides.
pub fn pink_base_change(motive: &TauSpec, delta1: &Mat, n: usize) -> Result<TateMatrix> {
    let ctx = motive.ctx().clone();
    let target = TauSpec::from_levels(vec![Mat::identity(&ctx, 2), delta1.clone()])?;
    let dm = motive.padded(n);
    let dt = target.padded(n);
    for g in gl2(&ctx) {
        let s = TateMatrix::constant(&Mat::from_fe(&ctx, 2, 2, &g)?, n);
        if s.inv()?.mul(&dm).mul(&s).agrees(&dt) {
            return Ok(s);
        }
    }
    let pm = torsion_invariants(motive, n)?.phi;
    let pt = torsion_invariants(&target, n)?.phi;
    let s = pm.mul(&pt.inv()?);
    if !s.inv()?.mul(&dm).mul(&s.sigma()).agrees(&dt) {
        return Err(Error::MismatchDetected("motive is not conjugate to Id + tΔ_1".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::pink_delta1;
    use crate::session::SessionConfig;

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(32)).build().unwrap()
    }

    #[test]
    fn carlitz_motive() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let m = motive_of(&TModuleSpec::carlitz(&th).unwrap()).unwrap();
        assert_eq!(m.delta.level(0).get(0, 0), &th.neg());
        assert_eq!(m.delta.level(1).get(0, 0), &ValSeries::one(&c));
    }

    #[test]
    fn rank_two_motive() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let g = ValSeries::one(&c);
        let m = motive_of(&TModuleSpec::drinfeld(&th, &[g.clone(), ValSeries::one(&c)]).unwrap()).unwrap();
        let l0 = m.delta.level(0);
        assert!(l0.get(0, 0).is_exact_zero());
        assert_eq!(l0.get(0, 1), &th.neg());
        assert_eq!(l0.get(1, 0), &ValSeries::one(&c));
        assert_eq!(l0.get(1, 1), &g.neg());
    }

    #[test]
    fn pink_motive_matches_family() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let d1 = pink_delta1(&c, &u, &u, &ValSeries::one(&c)).unwrap();
        let e = TModuleSpec::pink(&d1, &u).unwrap();
        assert_eq!(e.nil_order().unwrap(), 1);
        let m = motive_of(&e).unwrap();
        assert!(m.delta0().agrees(&Mat::identity(&c, 2)));
        let s = pink_base_change(&m, &d1, 2).unwrap();
        assert_eq!(s.tprec(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let c = ctx();
        let one = ValSeries::one(&c);
        assert!(matches!(TModuleSpec::carlitz(&one), Err(Error::HypothesisViolated(_))));
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let g0 = Mat::new(2, 2, vec![th.clone(), one.clone(), one.clone(), th.clone()]).unwrap();
        assert_eq!(TModuleSpec::new(vec![g0], th).unwrap_err(), Error::NotNilpotent);
    }
}
