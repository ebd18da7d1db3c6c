use serde::Serialize;

use super::{motive_of, TModuleSpec};
use crate::additive::{additive_polygon, additive_roots, compose, eval_additive, Additive};
use crate::error::{Error, Result};
use crate::newton::NewtonPolygon;
use crate::series::ValSeries;
use crate::tau::{reduce_delta0, TauSpec};
use crate::torsion::{generating_subset, pairing_check, torsion_invariants, Functional, PairingMatrix};

#[derive(Debug, Clone, Serialize)]
pub struct TorsionPoints {
    pub n: usize,
    /// |E[t^{k+1}]| for k = 0..=N.
    pub level_counts: Vec<u64>,
    pub polygon: Option<NewtonPolygon>,
    /// F_q-basis of E[t^{N+1}] in value mode.
    #[serde(skip)]
    pub basis: Option<Vec<ValSeries>>,
}

impl TorsionPoints {
    pub fn count(&self) -> u64 {
        *self.level_counts.last().expect("at least one level")
    }
}

/// φ_{t^k} as an additive polynomial, d = 1.
fn phi_power(spec: &TModuleSpec, k: usize) -> Additive {
    let ctx = spec.ctx();
    let phi: Additive = spec.g.iter().map(|m| m.get(0, 0).clone()).collect();
    (0..k).fold(vec![ValSeries::one(ctx)], |acc, _| compose(&phi, &acc))
}

fn q_degree(p: &[ValSeries]) -> usize {
    (0..p.len()).rev().find(|&i| p[i].val().is_some()).unwrap_or(0)
}

/// Solutions of φ_{t^{N+1}}(x) = 0. For d = 1 the additive polynomial is
/// solved (values when `values`); for the d = 2, s = 1 shape E[t] is found
/// from σx = -G_1^{-1}G_0 x and the higher counts follow from surjectivity
/// of φ_t.
pub fn torsion_points(spec: &TModuleSpec, n: usize, values: bool) -> Result<TorsionPoints> {
    let qq = spec.ctx().q;
    let r = spec.rank().ok_or_else(|| Error::UnsupportedShape(format!("torsion of d = {}, s = {}", spec.d, spec.s())))?;
    let pow = |e: usize| qq.checked_pow(e as u32).ok_or_else(|| Error::ExtensionCapExceeded("torsion count overflows".into()));
    if spec.d == 1 {
        let mut level_counts = Vec::new();
        for k in 0..=n {
            level_counts.push(pow(q_degree(&phi_power(spec, k + 1)))?);
        }
        let p = phi_power(spec, n + 1);
        let polygon = additive_polygon(&p)?;
        let basis = if values {
            let b = additive_roots(&p)?.basis;
            if b.iter().any(|x| !eval_additive(&p, x).is_zero_to_prec()) {
                return Err(Error::MismatchDetected("torsion point does not vanish".into()));
            }
            Some(b)
        } else {
            None
        };
        let out = TorsionPoints { n, level_counts, polygon: Some(polygon), basis };
        if out.count() != pow(r * (n + 1))? {
            return Err(Error::MismatchDetected(format!("|E[t^{}]| = {}", n + 1, out.count())));
        }
        return Ok(out);
    }
    // σx = A x, A = -G_1^{-1}G_0, i.e. x = A^{-1}σx
    let a = spec.g[1].inv()?.mul(&spec.g[0]).neg();
    let lang = TauSpec::from_levels(vec![a.inv()?])?;
    let red = reduce_delta0(&lang)?;
    let x = &red.d;
    if !a.mul(x).agrees(&x.sigma()) || x.det()?.val().is_none() {
        return Err(Error::MismatchDetected("t-torsion basis".into()));
    }
    let level_counts = (0..=n).map(|k| pow(spec.d * (k + 1))).collect::<Result<_>>()?;
    Ok(TorsionPoints { n, level_counts, polygon: None, basis: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub module_counts: Vec<u64>,
    pub motive_counts: Vec<u64>,
    /// Pairing h_s(f) = f(s) on generators, d = 1.
    pub pairing: Option<PairingMatrix>,
}

/// E[t^{N+1}] against the τ-invariants of M(E)/t^{N+1}: counts level by
/// level, and for d = 1 the evaluation pairing.
pub fn torsion_comparison(spec: &TModuleSpec, motive: &TauSpec, n: usize) -> Result<ComparisonReport> {
    if motive_of(spec)? != *motive {
        return Err(Error::DimensionMismatch("motive does not belong to the t-module".into()));
    }
    let qq = spec.ctx().q;
    // value mode can exceed the denominator or extension caps; the counts
    // are still available then
    let pts = match torsion_points(spec, n, spec.d == 1) {
        Err(Error::DenominatorCapExceeded { .. } | Error::ExtensionCapExceeded(_)) => torsion_points(spec, n, false)?,
        other => other?,
    };
    let basis = torsion_invariants(motive, n)?;
    if basis.phi.level(0).det()?.val().is_none() {
        return Err(Error::MismatchDetected("motive invariants are not free".into()));
    }
    let motive_counts: Vec<u64> = (0..=n).map(|k| qq.pow((motive.r * (k + 1)) as u32)).collect();
    if motive_counts != pts.level_counts {
        return Err(Error::MismatchDetected(format!("counts {:?} vs {:?}", pts.level_counts, motive_counts)));
    }
    let pairing = match &pts.basis {
        Some(b) => {
            let r = motive.r;
            let evals: Vec<Functional> = b
                .iter()
                .map(|s| {
                    let mut coeffs = Vec::with_capacity(r * (n + 1));
                    for k in 0..=n {
                        let y = eval_additive(&phi_power(spec, k), s);
                        let mut yi = y;
                        for _ in 0..r {
                            coeffs.push(yi.clone());
                            yi = yi.frobenius();
                        }
                    }
                    Functional { coeffs }
                })
                .collect();
            let gens = generating_subset(&basis, &evals)?;
            let pm = pairing_check(&basis, &gens);
            if !pm.perfect {
                return Err(Error::MismatchDetected("evaluation pairing is degenerate".into()));
            }
            Some(pm)
        }
        None => None,
    };
    Ok(ComparisonReport { n, module_counts: pts.level_counts, motive_counts, pairing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::scan::pink_delta1;
    use crate::session::{Ctx, SessionConfig};

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(32)).build().unwrap()
    }

    #[test]
    fn carlitz_t_torsion() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TModuleSpec::carlitz(&th).unwrap();
        let pts = torsion_points(&spec, 0, true).unwrap();
        assert_eq!(pts.count(), 2);
        let x = &pts.basis.as_ref().unwrap()[0];
        assert_eq!(x.val(), Some(q(-1)));
        assert!(x.pow(c.q - 1).agrees(&th.neg()));
        let rep = torsion_comparison(&spec, &motive_of(&spec).unwrap(), 0).unwrap();
        assert_eq!(rep.motive_counts, vec![2]);
        assert!(rep.pairing.unwrap().perfect);
    }

    #[test]
    fn carlitz_higher_level() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TModuleSpec::carlitz(&th).unwrap();
        let rep = torsion_comparison(&spec, &motive_of(&spec).unwrap(), 2).unwrap();
        assert_eq!(rep.module_counts, vec![2, 4, 8]);
        let rep = torsion_comparison(&spec, &motive_of(&spec).unwrap(), 1).unwrap();
        assert!(rep.pairing.unwrap().perfect);
    }

    #[test]
    fn rank_two_counts() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let one = ValSeries::one(&c);
        let spec = TModuleSpec::drinfeld(&th, &[one.clone(), one]).unwrap();
        let pts = torsion_points(&spec, 0, true).unwrap();
        assert_eq!(pts.count(), 4);
        assert_eq!(pts.polygon.unwrap().total_length(), q(3));
        let rep = torsion_comparison(&spec, &motive_of(&spec).unwrap(), 0).unwrap();
        assert_eq!(rep.motive_counts, vec![4]);
    }

    #[test]
    fn pink_counts() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let d1 = pink_delta1(&c, &u, &u, &ValSeries::one(&c)).unwrap();
        let spec = TModuleSpec::pink(&d1, &u).unwrap();
        let rep = torsion_comparison(&spec, &motive_of(&spec).unwrap(), 1).unwrap();
        assert_eq!(rep.module_counts, vec![4, 16]);
    }
}
