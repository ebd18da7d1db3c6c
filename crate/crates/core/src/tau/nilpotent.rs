use super::TauSpec;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::tate::TateMatrix;

/// Least k ≤ bound with Δ·σΔ·…·σ^{k-1}Δ ≡ 0 mod t^{N+1}, if any.
pub fn nilpotency_test(spec: &TauSpec, bound: usize, horizon: usize) -> Option<usize> {
    let delta = spec.padded(horizon);
    let mut prod = delta.clone();
    let mut twisted = delta.clone();
    for k in 1..=bound {
        if prod.is_zero_to_prec() {
            return Some(k);
        }
        twisted = twisted.sigma();
        prod = prod.mul(&twisted);
    }
    None
}

fn vstack(top: &TateMatrix, bottom: &TateMatrix) -> Result<TateMatrix> {
    let levels = top
        .levels()
        .iter()
        .zip(bottom.levels())
        .map(|(a, b)| {
            let data = a.entries().iter().chain(b.entries()).cloned().collect();
            Mat::new(a.rows() + b.rows(), a.cols(), data)
        })
        .collect::<Result<_>>()?;
    TateMatrix::from_levels(levels)
}

/// For Δ = [[Δ_F, B], [0, Δ_G]] with Δ_F of nilpotency order ≤ n, returns
/// s = (x; Id) with Δ·σs = s·Δ_G mod t^{N+1}.
pub fn split_nilpotent_extension(spec: &TauSpec, rf: usize, n: usize, horizon: usize) -> Result<TateMatrix> {
    let r = spec.r;
    if rf == 0 || rf >= r {
        return Err(Error::DimensionMismatch(format!("block size {rf} for rank {r}")));
    }
    let delta = spec.padded(horizon);
    if !delta.levels().iter().all(|m| m.block(rf, r, 0, rf).is_exact_zero()) {
        return Err(Error::NotBlockTriangular);
    }
    let df = delta.map_levels(|m| m.block(0, rf, 0, rf));
    let b = delta.map_levels(|m| m.block(0, rf, rf, r));
    let dg = delta.map_levels(|m| m.block(rf, r, rf, r));
    let fspec = TauSpec::new(df.clone())?;
    if nilpotency_test(&fspec, n, horizon).is_none() {
        return Err(Error::NilpotencyBoundExceeded(n));
    }
    // x Δ_G - Δ_F σx = B, i.e. x = (B + Δ_F σx) Δ_G^{-1}
    let dginv = dg.inv()?;
    let x0 = b.mul(&dginv);
    let mut x = x0.clone();
    for _ in 0..=n {
        let next = x0.add(&df.mul(&x.sigma()).mul(&dginv));
        if next == x {
            break;
        }
        x = next;
    }
    let ctx = spec.ctx().clone();
    let s = vstack(&x, &TateMatrix::identity(&ctx, r - rf, horizon))?;
    let defect = delta.mul(&s.sigma()).sub(&s.mul(&dg));
    if !defect.is_zero_to_prec() {
        return Err(Error::MismatchDetected("section does not intertwine Δ and Δ_G".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::series::ValSeries;
    use crate::session::SessionConfig;

    #[test]
    fn nilpotency() {
        let c = SessionConfig::new(2, 1).build().unwrap();
        let z = TauSpec::from_levels(vec![Mat::zero(&c, 1, 1)]).unwrap();
        assert_eq!(nilpotency_test(&z, 3, 2), Some(1));
        let id = TauSpec::from_levels(vec![Mat::identity(&c, 1)]).unwrap();
        assert_eq!(nilpotency_test(&id, 5, 2), None);
        let j = TauSpec::from_levels(vec![Mat::from_fe(&c, 2, 2, &[0, 1, 0, 0]).unwrap()]).unwrap();
        assert_eq!(nilpotency_test(&j, 5, 2), Some(2));
    }

    #[test]
    fn sections() {
        let c = SessionConfig::new(2, 1).build().unwrap();
        let spec = TauSpec::from_levels(vec![Mat::from_fe(&c, 2, 2, &[0, 1, 0, 1]).unwrap()]).unwrap();
        let s = split_nilpotent_extension(&spec, 1, 2, 0).unwrap();
        assert_eq!(s.level(0), &Mat::from_fe(&c, 2, 1, &[1, 1]).unwrap());
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let m = Mat::new(2, 2, vec![ValSeries::zero(&c), u.clone(), ValSeries::zero(&c), ValSeries::one(&c)]).unwrap();
        let s = split_nilpotent_extension(&TauSpec::from_levels(vec![m]).unwrap(), 1, 1, 3).unwrap();
        assert_eq!(s.level(0).get(0, 0), &u);
        let bad = TauSpec::from_levels(vec![Mat::from_fe(&c, 2, 2, &[0, 0, 1, 1]).unwrap()]).unwrap();
        assert_eq!(split_nilpotent_extension(&bad, 1, 1, 0).unwrap_err(), Error::NotBlockTriangular);
    }
}
