use serde::Serialize;

use super::TauSpec;
use crate::additive::additive_roots;
use crate::error::{Error, Result};
use crate::field::Fe;
use crate::mat::Mat;
use crate::rat::{check_den, q};
use crate::roots::kummer_root;
use crate::series::ValSeries;
use crate::session::Ctx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Identity,
    Kummer,
    Diagonal,
    ScalarLang,
    Additive,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    /// Conjugated spec D^{-1} Δ σD with constant term Id.
    pub spec: TauSpec,
    /// D = Δ_0 σD.
    pub d: Mat,
    pub strategy: Strategy,
    pub tower_degree: u32,
}

fn is_identity(m: &Mat) -> bool {
    (0..m.rows()).all(|i| {
        (0..m.cols()).all(|j| {
            let x = m.get(i, j);
            if i == j {
                x.is_exact() && x.as_constant() == Some(1)
            } else {
                x.is_exact_zero()
            }
        })
    })
}

fn is_diagonal(m: &Mat) -> bool {
    (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m.get(i, j).is_exact_zero()))
}

/// Some κ with κ = δ κ^q.
pub(super) fn twist_scalar(delta: &ValSeries) -> Result<ValSeries> {
    let ctx = delta.ctx();
    let inv = delta.invert()?;
    Ok(kummer_root(&inv, ctx.q - 1)?.roots.remove(0))
}

/// Invertible X over the residue universe with X = C·σX, C row-major r×r.
pub fn lang_residue(ctx: &Ctx, r: usize, c: &[Fe]) -> Result<Vec<Fe>> {
    let f = &ctx.field;
    let map = |x: &[Fe]| -> Vec<Fe> {
        let sx: Vec<Fe> = x.iter().map(|&v| ctx.frob_q(v)).collect();
        (0..r)
            .map(|i| {
                let cs = (0..r).fold(0, |acc, j| f.add(acc, f.mul(c[i * r + j], sx[j])));
                f.sub(x[i], cs)
            })
            .collect()
    };
    let (_, kernel) = f.solve_linear(r, &map, &vec![0; r]).expect("homogeneous system");
    let fq = ctx.fq();
    let mut span: Vec<Vec<Fe>> = vec![vec![0; r]];
    let mut cols: Vec<Vec<Fe>> = Vec::new();
    for v in kernel {
        if span.contains(&v) {
            continue;
        }
        span = span
            .iter()
            .flat_map(|s| fq.iter().map(move |&a| (s, a)))
            .map(|(s, a)| s.iter().zip(&v).map(|(&x, &y)| f.add(x, f.mul(a, y))).collect())
            .collect();
        cols.push(v);
        if cols.len() == r {
            break;
        }
    }
    if cols.len() < r {
        return Err(Error::LangSearchExhausted);
    }
    Ok((0..r).flat_map(|i| cols.iter().map(move |col| col[i])).collect())
}

/// Fixed point D = E·σD for E ≡ Id.
fn contract_unit(e: &Mat) -> Result<Mat> {
    let ctx = e.ctx().clone();
    let mut d = Mat::identity(&ctx, e.rows());
    for _ in 0..128 {
        let next = e.mul(&d.sigma()).truncate(ctx.prec);
        if next == d {
            return Ok(d);
        }
        d = next;
    }
    Err(Error::NotConvergent("unit part of Δ_0".into()))
}

/// Δ_0 = u^v·U with U of invertible residue.
fn scalar_lang(d0: &Mat) -> Result<Option<Mat>> {
    let ctx = d0.ctx().clone();
    let Some(v) = d0.val() else { return Ok(None) };
    let s_inv = ValSeries::u_pow(&ctx, -v)?;
    let unit = d0.scale(&s_inv);
    let cbar = Mat::from_fe(&ctx, d0.rows(), d0.cols(), &unit.residue())?;
    if cbar.det()?.is_exact_zero() {
        return Ok(None);
    }
    let kv = -v / q(ctx.q as i64 - 1);
    check_den(&kv, ctx.denom_cap())?;
    let kappa = ValSeries::u_pow(&ctx, kv)?;
    let xbar = Mat::from_fe(&ctx, d0.rows(), d0.cols(), &lang_residue(&ctx, d0.rows(), &cbar.residue())?)?;
    let e = xbar.inv()?.mul(&unit).mul(&xbar.sigma());
    if e.sub(&Mat::identity(&ctx, d0.rows())).val().is_some_and(|x| x <= q(0)) {
        return Err(Error::MismatchDetected("residual of the residue Lang step is not small".into()));
    }
    let d2 = contract_unit(&e)?;
    Ok(Some(xbar.mul(&d2).scale(&kappa)))
}

/// Rank 2: σd = A d with A = Δ_0^{-1}; one coordinate satisfies an
/// additive polynomial of q-degree 2.
fn additive_basis(d0: &Mat) -> Result<Mat> {
    let ctx = d0.ctx().clone();
    let a = d0.inv()?;
    let (swap, a) = if a.get(0, 1).val().is_some() {
        (false, a)
    } else {
        let p = Mat::from_fe(&ctx, 2, 2, &[0, 1, 1, 0])?;
        (true, p.mul(&a).mul(&p))
    };
    let (a11, a12, a21, a22) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    if a12.val().is_none() {
        return Err(Error::NotInvertible("Δ_0 has a zero off-diagonal pair".into()));
    }
    let qq = ctx.q;
    let a12p = a12.pow(qq - 1);
    let det = a11.mul(a22).sub(&a12.mul(a21));
    let c0 = a12p.mul(&det);
    let c1 = a11.frobenius().add(&a12p.mul(a22)).neg();
    let roots = additive_roots(&[c0, c1, ValSeries::one(&ctx)])?;
    if roots.basis.len() != 2 {
        return Err(Error::ExtensionCapExceeded("additive polynomial for Δ_0 lacks roots".into()));
    }
    let a12inv = a12.invert()?;
    let mut data = vec![ValSeries::zero(&ctx); 4];
    for (j, x) in roots.basis.iter().enumerate() {
        let y = x.frobenius().sub(&a11.mul(x)).mul(&a12inv);
        let (top, bot) = if swap { (y, x.clone()) } else { (x.clone(), y) };
        data[j] = top;
        data[2 + j] = bot;
    }
    Mat::new(2, 2, data)
}

pub fn reduce_delta0(spec: &TauSpec) -> Result<Reduction> {
    let ctx = spec.ctx().clone();
    let d0 = spec.delta0();
    let r = spec.r;
    if d0.det()?.val().is_none() {
        return Err(Error::NotInvertible("Δ_0 is singular".into()));
    }
    let (d, strategy) = if is_identity(d0) {
        (Mat::identity(&ctx, r), Strategy::Identity)
    } else if r == 1 {
        (Mat::scalar(&twist_scalar(d0.get(0, 0))?, 1), Strategy::Kummer)
    } else if is_diagonal(d0) {
        let mut m = Mat::zero(&ctx, r, r);
        for i in 0..r {
            m.set(i, i, twist_scalar(d0.get(i, i))?);
        }
        (m, Strategy::Diagonal)
    } else if let Some(m) = scalar_lang(d0)? {
        (m, Strategy::ScalarLang)
    } else if r == 2 {
        (additive_basis(d0)?, Strategy::Additive)
    } else {
        return Err(Error::UnsupportedShape(format!("no Δ_0 reduction for rank {r} with this shape")));
    };
    let dinv = d.inv()?;
    let sd = d.sigma();
    let mut levels: Vec<Mat> = spec.delta.levels().iter().map(|m| dinv.mul(m).mul(&sd)).collect();
    if !levels[0].agrees(&Mat::identity(&ctx, r)) {
        return Err(Error::MismatchDetected("conjugated constant term is not the identity".into()));
    }
    levels[0] = Mat::identity(&ctx, r);
    let mut out = TauSpec::from_levels(levels)?;
    out.delta0_reduced = true;
    out.norm_scale = spec.norm_scale.clone();
    let tower_degree = d.tower_degree();
    Ok(Reduction { spec: out, d, strategy, tower_degree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::SessionConfig;

    fn ctx(p: u64) -> Ctx {
        SessionConfig::new(p, 1).with_prec(q(24)).build().unwrap()
    }

    fn check(spec: &TauSpec, red: &Reduction) {
        let d0 = spec.delta0();
        assert!(d0.mul(&red.d.sigma()).sub(&red.d).is_zero_to_prec());
        assert!(red.spec.delta0_reduced);
    }

    #[test]
    fn identity_and_scalar() {
        let c = ctx(3);
        let id = TauSpec::from_levels(vec![Mat::identity(&c, 2)]).unwrap();
        let red = reduce_delta0(&id).unwrap();
        assert_eq!(red.strategy, Strategy::Identity);
        let g = TauSpec::from_levels(vec![Mat::from_fe(&c, 1, 1, &[2]).unwrap()]).unwrap();
        let red = reduce_delta0(&g).unwrap();
        let d = red.d.get(0, 0);
        // d^{q-1} = γ^{-1} = 2
        assert_eq!(d.pow(2).as_constant(), Some(2));
        check(&g, &red);
    }

    #[test]
    fn unit_perturbation() {
        let c = ctx(2);
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let one = ValSeries::one(&c);
        let d0 = Mat::new(2, 2, vec![one.add(&u), u.clone(), ValSeries::zero(&c), one.clone()]).unwrap();
        let spec = TauSpec::from_levels(vec![d0]).unwrap();
        let red = reduce_delta0(&spec).unwrap();
        assert_eq!(red.strategy, Strategy::ScalarLang);
        check(&spec, &red);
    }

    #[test]
    fn residue_lang_in_gl2() {
        let c = ctx(2);
        // an element of order 3 in GL_2(F_2)
        let d0 = Mat::from_fe(&c, 2, 2, &[0, 1, 1, 1]).unwrap();
        let spec = TauSpec::from_levels(vec![d0]).unwrap();
        let red = reduce_delta0(&spec).unwrap();
        check(&spec, &red);
        assert_eq!(red.tower_degree, 3);
    }

    #[test]
    fn drinfeld_rank_two() {
        let c = ctx(2);
        // Δ_0 of the rank-2 motive with θ = u^{-1}, g = 1
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let one = ValSeries::one(&c);
        let d0 = Mat::new(2, 2, vec![ValSeries::zero(&c), one.clone(), th.neg(), one.neg()]).unwrap();
        let spec = TauSpec::from_levels(vec![d0]).unwrap();
        let red = reduce_delta0(&spec).unwrap();
        assert_eq!(red.strategy, Strategy::Additive);
        check(&spec, &red);
    }
}
