use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::reduce::twist_scalar;
use super::verdict::InvariantReport;
use super::{residual, TauSpec};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rat::q;
use crate::roots::{artin_schreier_deep, RootSet};
use crate::series::ValSeries;
use crate::tate::TateMatrix;

/// What to do when a level equation has no distinguished root (|Ψ| ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootPolicy {
    /// Least absolute value, ties broken by the smallest leading coefficient code.
    #[default]
    MinimalNorm,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Identity,
    UpperTriangular,
    NearIdentity,
    Other,
}

fn shape(d0: &Mat) -> Shape {
    let r = d0.rows();
    let exact_zero = |i: usize, j: usize| d0.get(i, j).is_exact_zero();
    let is_one = |i: usize| d0.get(i, i).is_exact() && d0.get(i, i).as_constant() == Some(1);
    if (0..r).all(|i| is_one(i) && (0..r).all(|j| i == j || exact_zero(i, j))) {
        return Shape::Identity;
    }
    if (0..r).all(|i| (0..i).all(|j| exact_zero(i, j))) {
        return Shape::UpperTriangular;
    }
    match d0.sub(&Mat::identity(d0.ctx(), r)).val() {
        Some(v) if v > q(0) => Shape::NearIdentity,
        None => Shape::NearIdentity,
        _ => Shape::Other,
    }
}

/// Orders candidate roots: larger valuation first, then smaller leading code.
fn root_order(a: &ValSeries, b: &ValSeries) -> Ordering {
    let key = |x: &ValSeries| x.leading();
    match (key(a), key(b)) {
        (None, None) => Ordering::Equal,
        (None, _) => Ordering::Less,
        (_, None) => Ordering::Greater,
        (Some((va, ca)), Some((vb, cb))) => vb.cmp(&va).then(ca.cmp(&cb)),
    }
}

fn choose(rs: RootSet, psi: &ValSeries, policy: RootPolicy, level: usize) -> Result<ValSeries> {
    let distinguished = psi.val_lb().is_none_or(|v| v > q(0));
    if policy == RootPolicy::Strict && !distinguished && rs.count() > 1 {
        return Err(Error::RootChoiceAmbiguous(level));
    }
    let mut roots = rs.roots;
    roots.sort_by(root_order);
    Ok(roots.remove(0))
}

/// x - x^q = ψ.
fn as_step(psi: &ValSeries, policy: RootPolicy, level: usize) -> Result<ValSeries> {
    choose(artin_schreier_deep(psi)?, psi, policy, level)
}

/// x - δ x^q = ψ for a scalar δ.
fn twisted_step(delta: &ValSeries, psi: &ValSeries, policy: RootPolicy, level: usize) -> Result<ValSeries> {
    if delta.is_exact_zero() {
        return Ok(psi.clone());
    }
    if delta.is_exact() && delta.as_constant() == Some(1) {
        return as_step(psi, policy, level);
    }
    // x = κ y with κ = δ κ^q turns the equation into y - y^q = ψ/κ
    let kappa = twist_scalar(delta)?;
    let y = as_step(&psi.div(&kappa)?, policy, level)?;
    Ok(kappa.mul(&y))
}

/// Solves X - Δ_0·σX = Ψ for one t-level.
pub fn solve_level(d0: &Mat, psi: &Mat, policy: RootPolicy, level: usize) -> Result<Mat> {
    let ctx = d0.ctx().clone();
    let (r, k) = (psi.rows(), psi.cols());
    match shape(d0) {
        Shape::Identity => psi.try_map(|x| as_step(x, policy, level)),
        Shape::UpperTriangular => {
            let mut out = Mat::zero(&ctx, r, k);
            for j in 0..k {
                for i in (0..r).rev() {
                    let mut rhs = psi.get(i, j).clone();
                    for m in i + 1..r {
                        rhs = rhs.add(&d0.get(i, m).mul(&out.get(m, j).frobenius()));
                    }
                    out.set(i, j, twisted_step(d0.get(i, i), &rhs, policy, level)?);
                }
            }
            Ok(out)
        }
        Shape::NearIdentity => {
            let Some(v) = psi.val() else {
                return Ok(psi.clone());
            };
            if v <= q(0) {
                return Err(Error::NotReduced(format!("level {level}: |Ψ| ≥ 1 with Δ_0 ≠ Id")));
            }
            // X = Σ_k Δ_0 σΔ_0 … σ^{k-1}Δ_0 · σ^k Ψ
            let target = v + ctx.prec;
            let mut prod = Mat::identity(&ctx, r);
            let mut d0k = d0.clone();
            let mut sk = psi.truncate(target);
            let mut sum = sk.clone();
            for _ in 0..64 {
                prod = prod.mul(&d0k);
                d0k = d0k.sigma();
                sk = sk.sigma().truncate(target);
                let term = prod.mul(&sk).truncate(target);
                if term.val().is_none() {
                    return Ok(sum.add(&term));
                }
                sum = sum.add(&term);
            }
            Err(Error::NotConvergent(format!("level {level} series")))
        }
        Shape::Other => Err(Error::NotReduced(format!("level {level}: Δ_0 needs reduction first"))),
    }
}

/// Level-by-level solution of Φ - Δ·σΦ = Ω mod t^{N+1}, N = delta.tprec().
pub(crate) fn solve_levels(
    delta: &TateMatrix,
    omega: Option<&TateMatrix>,
    seed: &Mat,
    policy: RootPolicy,
) -> Result<TateMatrix> {
    let n = delta.tprec();
    let d0 = delta.level(0);
    let ctx = d0.ctx().clone();
    let (r, k) = (seed.rows(), seed.cols());
    let mut phi: Vec<Mat> = Vec::with_capacity(n + 1);
    let mut sig: Vec<Mat> = Vec::with_capacity(n + 1);
    for lvl in 0..=n {
        let mut psi = match omega {
            Some(o) => o.level(lvl).clone(),
            None => Mat::zero(&ctx, r, k),
        };
        for nu in 1..=lvl {
            let dn = delta.level(nu);
            if !dn.is_exact_zero() {
                psi = psi.add(&dn.mul(&sig[lvl - nu]));
            }
        }
        let x = if lvl == 0 {
            if omega.is_some() {
                solve_level(d0, &psi, policy, 0)?.add(seed)
            } else {
                seed.clone()
            }
        } else {
            solve_level(d0, &psi, policy, lvl)?
        };
        sig.push(x.sigma());
        phi.push(x);
    }
    let out = TateMatrix::from_levels(phi)?;
    let res = residual(delta, &out, omega);
    if !res.is_zero_to_prec() {
        let bad = res.level_vals().iter().position(|v| v.is_some()).unwrap_or(0);
        return Err(Error::MismatchDetected(format!("residual nonzero at level {bad}")));
    }
    Ok(out)
}

/// Solutions Φ = Δ·σΦ mod t^{N+1} grown from a level-0 seed.
pub fn solve_invariants(spec: &TauSpec, seed: &Mat, horizon: usize, policy: RootPolicy) -> Result<InvariantReport> {
    if seed.rows() != spec.r {
        return Err(Error::DimensionMismatch("seed height differs from rank".into()));
    }
    let phi = solve_levels(&spec.padded(horizon), None, seed, policy)?;
    Ok(InvariantReport::unverified(phi, horizon))
}

/// Columns f with f - Δ·σf = Ω mod t^{N+1}, N = Ω's t-precision.
pub fn solve_inhomogeneous(
    spec: &TauSpec,
    omega: &TateMatrix,
    seed: Option<&Mat>,
    policy: RootPolicy,
) -> Result<InvariantReport> {
    if omega.rows() != spec.r {
        return Err(Error::DimensionMismatch("right-hand side height differs from rank".into()));
    }
    let n = omega.tprec();
    let zero = Mat::zero(spec.ctx(), spec.r, omega.cols());
    let phi = solve_levels(&spec.padded(n), Some(omega), seed.unwrap_or(&zero), policy)?;
    Ok(InvariantReport::unverified(phi, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{qf, Q};
    use crate::session::{Ctx, SessionConfig};

    fn ctx(p: u64) -> Ctx {
        SessionConfig::new(p, 1).with_prec(q(32)).build().unwrap()
    }

    #[test]
    fn example_recursion_norms() {
        let c = ctx(2);
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 1), Mat::scalar(&u, 1)]).unwrap();
        let rep = solve_invariants(&spec, &Mat::identity(&c, 1), 5, RootPolicy::MinimalNorm).unwrap();
        let vals: Vec<Q> = rep.level_vals.iter().map(|v| v.unwrap()).collect();
        assert_eq!(vals, vec![q(0), q(1), q(3), q(7), q(15), q(31)]);
    }

    #[test]
    fn trivial_sheaf() {
        let c = ctx(3);
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 2)]).unwrap();
        let rep = solve_invariants(&spec, &Mat::identity(&c, 2), 4, RootPolicy::MinimalNorm).unwrap();
        assert!(rep.phi.agrees(&TateMatrix::identity(&c, 2, 4)));
    }

    #[test]
    fn inhomogeneous_principal() {
        let c = ctx(2);
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 1)]).unwrap();
        let omega = TateMatrix::constant(&Mat::scalar(&u, 1), 0);
        let rep = solve_inhomogeneous(&spec, &omega, None, RootPolicy::MinimalNorm).unwrap();
        let f = rep.phi.level(0).get(0, 0);
        assert_eq!(f.terms()[..3], [(q(1), 1), (q(2), 1), (q(4), 1)]);
    }

    #[test]
    fn nilpotent_terminates() {
        let c = ctx(2);
        let u = ValSeries::u_pow(&c, qf(1, 2)).unwrap();
        let d0 = Mat::from_fe(&c, 2, 2, &[0, 1, 0, 0]).unwrap();
        let spec = TauSpec::from_levels(vec![d0.clone()]).unwrap();
        let om = Mat::new(2, 1, vec![u.clone(), u.clone()]).unwrap();
        let rep = solve_inhomogeneous(&spec, &TateMatrix::constant(&om, 0), None, RootPolicy::MinimalNorm).unwrap();
        let expect = om.add(&d0.mul(&om.sigma()));
        assert_eq!(rep.phi.level(0), &expect);
    }

    #[test]
    fn strict_policy_flags_choice() {
        let c = ctx(2);
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 1), Mat::identity(&c, 1)]).unwrap();
        let err = solve_invariants(&spec, &Mat::identity(&c, 1), 2, RootPolicy::Strict).unwrap_err();
        assert_eq!(err, Error::RootChoiceAmbiguous(1));
    }
}
