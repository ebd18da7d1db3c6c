use super::TModuleSpec;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tate::TateMatrix;
use crate::tau::TauSpec;

type Poly = Vec<ValSeries>;

fn deg(p: &Poly) -> Option<usize> {
    (0..p.len()).rev().find(|&i| !p[i].is_zero_to_prec())
}

/// a - c·t^k·b, with the cancelled leading coefficient set to exact zero.
fn sub_shifted(ctx: &Ctx, a: &Poly, b: &Poly, c: &ValSeries, k: usize, kill: Option<usize>) -> Poly {
    let len = a.len().max(b.len() + k);
    let mut out: Poly = (0..len).map(|i| a.get(i).cloned().unwrap_or_else(|| ValSeries::zero(ctx))).collect();
    for (i, bi) in b.iter().enumerate() {
        out[i + k] = out[i + k].sub(&c.mul(bi));
    }
    if let Some(i) = kill {
        out[i] = ValSeries::zero(ctx);
    }
    out
}

/// Column operations bringing Δ to lower-triangular form H = Δ·U, U unimodular.
fn hermite(ctx: &Ctx, mut cols: Vec<Vec<Poly>>) -> Result<Vec<Vec<Poly>>> {
    let r = cols.len();
    for i in 0..r {
        loop {
            let live: Vec<usize> = (i..r).filter(|&j| deg(&cols[j][i]).is_some()).collect();
            let Some(&piv) = live.iter().min_by_key(|&&j| deg(&cols[j][i])) else {
                return Err(Error::MismatchDetected("Δ is not invertible over L(t)".into()));
            };
            cols.swap(i, piv);
            if live.len() == 1 {
                break;
            }
            let dp = deg(&cols[i][i]).expect("pivot");
            let lc = cols[i][i][dp].invert()?;
            for j in i + 1..r {
                while let Some(dj) = deg(&cols[j][i]) {
                    if dj < dp {
                        break;
                    }
                    let c = cols[j][i][dj].mul(&lc);
                    let pivot = cols[i].clone();
                    for (row, entry) in cols[j].iter_mut().enumerate() {
                        let kill = (row == i).then_some(dj);
                        *entry = sub_shifted(ctx, entry, &pivot[row], &c, dj - dp, kill);
                    }
                }
            }
        }
    }
    Ok(cols)
}

#[derive(Debug, Clone)]
pub struct LieReport {
    /// Action of t on M/τM in the basis e_i t^k, k < deg h_ii.
    pub t_action: Mat,
    /// Coefficients of det(x - T) and det(x - G_0), constant term first.
    pub charpoly_t: Vec<ValSeries>,
    pub charpoly_g0: Vec<ValSeries>,
    pub scalar_t: bool,
    pub scalar_g0: bool,
}

fn charpoly(m: &Mat) -> Result<Vec<ValSeries>> {
    let ctx = m.ctx();
    let d = m.rows();
    let xm = TateMatrix::from_levels(vec![m.neg(), Mat::identity(ctx, d)])?;
    let xm = TateMatrix::from_levels_padded(xm.levels().to_vec(), d)?;
    Ok(xm.det()?.coeffs().to_vec())
}

fn is_scalar(m: &Mat) -> bool {
    let c = m.get(0, 0);
    m.sub(&Mat::scalar(c, m.rows())).is_zero_to_prec()
}

/// t acting on M/τM = L[t]^r / Δ·L[t]^r, compared with G_0 through the
/// characteristic polynomial and scalar-ness.
pub fn lie_quotient_check(spec: &TModuleSpec, motive: &TauSpec) -> Result<LieReport> {
    let ctx = spec.ctx().clone();
    let t_action = if spec.s() == 0 {
        spec.g[0].transpose()
    } else {
        let r = motive.r;
        let levels = motive.delta.levels();
        let cols: Vec<Vec<Poly>> =
            (0..r).map(|j| (0..r).map(|i| levels.iter().map(|m| m.get(i, j).clone()).collect()).collect()).collect();
        let h = hermite(&ctx, cols)?;
        let degs: Vec<usize> = (0..r).map(|i| deg(&h[i][i]).expect("nonzero diagonal")).collect();
        let dim: usize = degs.iter().sum();
        if dim != spec.d {
            return Err(Error::MismatchDetected(format!("quotient has dimension {dim}, expected {}", spec.d)));
        }
        let offsets: Vec<usize> = degs.iter().scan(0, |a, &d| { let o = *a; *a += d; Some(o) }).collect();
        let normal_form = |mut v: Vec<Poly>| -> Result<Vec<ValSeries>> {
            for i in 0..r {
                let lc = h[i][i][degs[i]].invert()?;
                while let Some(dv) = deg(&v[i]) {
                    if dv < degs[i] {
                        break;
                    }
                    let c = v[i][dv].mul(&lc);
                    for (row, entry) in v.iter_mut().enumerate() {
                        let kill = (row == i).then_some(dv);
                        *entry = sub_shifted(&ctx, entry, &h[i][row], &c, dv - degs[i], kill);
                    }
                }
            }
            Ok((0..r)
                .flat_map(|i| (0..degs[i]).map(move |k| (i, k)))
                .map(|(i, k)| v[i].get(k).cloned().unwrap_or_else(|| ValSeries::zero(&ctx)))
                .collect())
        };
        let mut t = Mat::zero(&ctx, dim, dim);
        for i in 0..r {
            for k in 0..degs[i] {
                let mut v: Vec<Poly> = vec![vec![]; r];
                v[i] = vec![ValSeries::zero(&ctx); k + 2];
                v[i][k + 1] = ValSeries::one(&ctx);
                for (row, x) in normal_form(v)?.into_iter().enumerate() {
                    t.set(row, offsets[i] + k, x);
                }
            }
        }
        t
    };
    let charpoly_t = charpoly(&t_action)?;
    let charpoly_g0 = charpoly(&spec.g[0])?;
    let rep = LieReport {
        scalar_t: is_scalar(&t_action),
        scalar_g0: is_scalar(&spec.g[0]),
        t_action,
        charpoly_t,
        charpoly_g0,
    };
    let same = rep.charpoly_t.iter().zip(&rep.charpoly_g0).all(|(a, b)| a.agrees(b));
    if !same || rep.scalar_t != rep.scalar_g0 {
        return Err(Error::MismatchDetected("t on M/τM is not equivalent to G_0".into()));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::scan::pink_delta1;
    use crate::session::SessionConfig;
    use crate::tmodule::motive_of;

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(32)).build().unwrap()
    }

    #[test]
    fn carlitz_quotient() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TModuleSpec::carlitz(&th).unwrap();
        let rep = lie_quotient_check(&spec, &motive_of(&spec).unwrap()).unwrap();
        assert_eq!(rep.t_action.get(0, 0), &th);
    }

    #[test]
    fn rank_two_quotient() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let g = ValSeries::u_pow(&c, q(2)).unwrap();
        let spec = TModuleSpec::drinfeld(&th, &[g, ValSeries::one(&c)]).unwrap();
        let rep = lie_quotient_check(&spec, &motive_of(&spec).unwrap()).unwrap();
        assert!(rep.t_action.get(0, 0).agrees(&th));
    }

    #[test]
    fn pink_double_eigenvalue() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let d1 = pink_delta1(&c, &u, &u, &ValSeries::one(&c)).unwrap();
        let spec = TModuleSpec::pink(&d1, &u).unwrap();
        let rep = lie_quotient_check(&spec, &motive_of(&spec).unwrap()).unwrap();
        let zi = u.invert().unwrap();
        // (x - ζ^{-1})^2 = x^2 + ζ^{-2} in characteristic 2
        assert!(rep.charpoly_t[0].agrees(&zi.mul(&zi)));
        assert!(rep.charpoly_t[1].is_zero_to_prec());
        assert!(!rep.scalar_t);
    }

    #[test]
    fn degenerate_theta_only() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TModuleSpec::new(vec![Mat::scalar(&th, 1)], th.clone()).unwrap();
        let dummy = TauSpec::from_levels(vec![Mat::identity(&c, 1)]).unwrap();
        let rep = lie_quotient_check(&spec, &dummy).unwrap();
        assert_eq!(rep.t_action.get(0, 0), &th);
    }
}
