//! The finite splitting tower of Φ = (Id + tΔ_1)σΦ with Φ_0 = Id when
//! |a|, |c|, |d| ≤ |r| < 1 and |r| ≤ |b|.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::mat::Mat;
use crate::rat::{q, Q};
use crate::scan::pink_spec;
use crate::series::ValSeries;
use crate::tate::TateMatrix;
use crate::tau::residual;
use crate::torsion::{conjugate_basis, torsion_invariants, torsor_twist_check, TorsionBasis};

#[derive(Debug, Clone, Serialize)]
pub struct TowerReport {
    #[serde(with = "crate::report::qser")]
    pub r_val: Q,
    /// val(s) in the limit |s| ↓ max(1, |b|).
    #[serde(with = "crate::report::qser")]
    pub s_val: Q,
    /// Least N with |r^N s| < 1.
    pub n_tower: usize,
    pub horizon: usize,
    /// val(v_n) for n = 1..=N.
    #[serde(with = "crate::report::qoptvec")]
    pub v_vals: Vec<Option<Q>>,
    pub tower_degree: u32,
    pub trace: Vec<String>,
    pub bounds_ok: bool,
    pub rank_two: bool,
    /// g_1..g_N of each unipotent g checked, with whether Φ·g solves.
    pub action: Vec<(Vec<Fe>, bool)>,
    /// g realizing the residue Frobenius conjugates of Φ.
    pub galois_twists: Vec<Vec<Fe>>,
}

/// g = (1, Σ g_n t^n; 0, 1) mod t^{n+1}.
pub fn unipotent(ctx: &crate::session::Ctx, g: &[Fe], n: usize) -> TateMatrix {
    let mut levels = vec![Mat::identity(ctx, 2)];
    for k in 1..=n {
        let mut m = Mat::zero(ctx, 2, 2);
        if let Some(&gk) = g.get(k - 1) {
            m.set(0, 1, ValSeries::constant(ctx, gk));
        }
        levels.push(m);
    }
    TateMatrix::from_levels(levels).expect("levels share a shape")
}

/// Upper-right coefficients of X when X has the unipotent shape.
fn unipotent_part(x: &TateMatrix) -> Option<Vec<Fe>> {
    let id = x.level(0);
    if id.as_fq()? != [1, 0, 0, 1] {
        return None;
    }
    let mut g = Vec::new();
    for m in &x.levels()[1..] {
        let e = m.as_fq()?;
        if e[0] != 0 || e[2] != 0 || e[3] != 0 {
            return None;
        }
        g.push(e[1]);
    }
    Some(g)
}

/// Every tuple in F_q^n.
fn tuples(fq: &[Fe], n: usize) -> Vec<Vec<Fe>> {
    (0..n).fold(vec![vec![]], |acc, _| {
        acc.iter().flat_map(|p| fq.iter().map(move |&x| { let mut v = p.clone(); v.push(x); v })).collect()
    })
}

pub fn finite_tower(delta1: &Mat, zeta: &ValSeries, horizon: usize) -> Result<TowerReport> {
    let ctx = delta1.ctx().clone();
    let vz = zeta.val().filter(|v| *v > q(0)).ok_or_else(|| Error::HypothesisViolated("|ζ| < 1 required".into()))?;
    let val = |i, j| delta1.get(i, j).val();
    let vb = val(0, 1).ok_or_else(|| Error::HypothesisViolated("b = 0".into()))?;
    let r_val = [val(0, 0), val(1, 0), val(1, 1)].into_iter().flatten().fold(vz, Q::min);
    if r_val <= q(0) || vb > r_val {
        return Err(Error::HypothesisViolated("need |a|, |c|, |d| ≤ |r| ≤ |b| with |ζ| ≤ |r| < 1".into()));
    }
    let s_val = vb.min(q(0));
    // |r^N s| < 1 for s just above max(1, |b|)
    let n_tower = ((-s_val) / r_val).floor().to_integer() as usize + 1;
    if horizon < n_tower {
        return Err(Error::HypothesisViolated(format!("horizon {horizon} below tower height {n_tower}")));
    }
    let spec = pink_spec(&ctx, delta1)?;
    let basis = torsion_invariants(&spec, horizon)?;
    let phi = &basis.phi;
    if !phi.level(0).agrees(&Mat::identity(&ctx, 2)) {
        return Err(Error::MismatchDetected("Φ_0 is not Id".into()));
    }
    let qq = q(ctx.q as i64);
    let ge = |x: &ValSeries, b: Q| x.val().is_none_or(|v| v >= b);
    let mut bounds_ok = true;
    for n in 1..=horizon {
        let m = phi.level(n);
        let small = q(n as i64) * r_val / qq;
        bounds_ok &= ge(m.get(0, 0), small) && ge(m.get(1, 0), small) && ge(m.get(1, 1), small);
        bounds_ok &= ge(m.get(0, 1), (s_val + q(n as i64 - 1) * r_val) / qq);
    }
    let v_vals = (1..=n_tower).map(|n| phi.level(n).get(0, 1).val()).collect();
    let full = spec.padded(horizon);
    let solves = |p: &TateMatrix| residual(&full, p, None).is_zero_to_prec();
    let rank_two = solves(phi) && phi.level(0).det()?.val() == Some(q(0));
    let action = tuples(&ctx.fq(), n_tower)
        .into_iter()
        .map(|g| {
            let moved = phi.mul(&unipotent(&ctx, &g, horizon));
            // g(v_n, x_n) = (v_n, x_n) + Σ g_i (u_{n-i}, w_{n-i})
            let formula = (1..=horizon).all(|n| {
                let (mut v, mut x) = (phi.level(n).get(0, 1).clone(), phi.level(n).get(1, 1).clone());
                for (i, &gi) in g.iter().enumerate().take(n) {
                    v = v.add(&phi.level(n - i - 1).get(0, 0).scale(gi));
                    x = x.add(&phi.level(n - i - 1).get(1, 0).scale(gi));
                }
                v.agrees(moved.level(n).get(0, 1)) && x.agrees(moved.level(n).get(1, 1))
            });
            let ok = formula && solves(&moved);
            (g, ok)
        })
        .collect();
    let mut galois_twists = Vec::new();
    for k in 1..basis.tower_degree as i64 {
        let conj: TorsionBasis = conjugate_basis(&basis, k);
        let x = torsor_twist_check(&basis, &conj)?;
        let g = unipotent_part(&x).ok_or_else(|| Error::MismatchDetected("Galois twist is not unipotent".into()))?;
        if g.iter().skip(n_tower).any(|&c| c != 0) {
            return Err(Error::MismatchDetected("Galois twist reaches beyond t^N".into()));
        }
        galois_twists.push(g);
    }
    Ok(TowerReport {
        r_val,
        s_val,
        n_tower,
        horizon,
        v_vals,
        tower_degree: basis.tower_degree,
        trace: basis.trace,
        bounds_ok,
        rank_two,
        action,
        galois_twists,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::pink_delta1;
    use crate::session::{Ctx, SessionConfig};

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(24)).build().unwrap()
    }

    #[test]
    fn height_one_tower() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let d1 = pink_delta1(&c, &u, &u, &ValSeries::one(&c)).unwrap();
        assert!(d1.get(1, 0).is_zero_to_prec());
        let rep = finite_tower(&d1, &u, 3).unwrap();
        assert_eq!(rep.n_tower, 1);
        assert_eq!(rep.v_vals, vec![Some(q(0))]);
        assert_eq!(rep.tower_degree, 2);
        assert!(rep.rank_two && rep.bounds_ok);
        assert_eq!(rep.action.len(), 2);
        assert!(rep.action.iter().all(|(_, ok)| *ok));
        // Frobenius swaps the two roots of v - v^2 = 1
        assert_eq!(rep.galois_twists, vec![vec![1, 0, 0]]);
    }

    #[test]
    fn identity_fixes_phi() {
        let c = ctx();
        let g = unipotent(&c, &[0], 2);
        assert!(g.agrees(&TateMatrix::identity(&c, 2, 2)));
    }

    #[test]
    fn taller_tower() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let b = ValSeries::u_pow(&c, q(-1)).unwrap();
        // c = a d / b stays small
        let d1 = pink_delta1(&c, &u, &u, &b).unwrap();
        let rep = finite_tower(&d1, &u, 4).unwrap();
        assert_eq!(rep.n_tower, 2);
        assert!(rep.rank_two && rep.bounds_ok);
        assert!(rep.action.iter().all(|(_, ok)| *ok));
    }

    #[test]
    fn outside_region() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let one = ValSeries::one(&c);
        let d1 = pink_delta1(&c, &u, &one, &one).unwrap();
        assert!(matches!(finite_tower(&d1, &u, 3), Err(Error::HypothesisViolated(_))));
    }
}
