//! τ = Δ·σ at a point: normalization, constant-term reduction, level-wise
//! invariant solving and triviality verdicts.

mod level;
mod reduce;
mod verdict;
mod nilpotent;

pub use level::{solve_inhomogeneous, solve_invariants, solve_level, RootPolicy};
pub use nilpotent::{nilpotency_test, split_nilpotent_extension};
pub use reduce::{lang_residue, reduce_delta0, Reduction, Strategy};
pub use verdict::{triviality_verdict, ContractionCert, DivergenceWitness, InvariantReport, Verdict};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rat::{check_den, q, Q};
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tate::TateMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TauSpec {
    pub r: usize,
    /// Δ as a polynomial in t; levels past the stored ones are zero.
    pub delta: TateMatrix,
    pub norm_scale: Option<ValSeries>,
    pub delta0_reduced: bool,
}

impl TauSpec {
    pub fn new(delta: TateMatrix) -> Result<Self> {
        if delta.rows() != delta.cols() {
            return Err(Error::DimensionMismatch("Δ must be square".into()));
        }
        Ok(TauSpec { r: delta.rows(), delta, norm_scale: None, delta0_reduced: false })
    }

    pub fn from_levels(levels: Vec<Mat>) -> Result<Self> {
        Self::new(TateMatrix::from_levels(levels)?)
    }

    pub fn ctx(&self) -> &Ctx {
        self.delta.ctx()
    }

    pub fn delta0(&self) -> &Mat {
        self.delta.level(0)
    }

    /// Highest level with a nonzero coefficient matrix.
    pub fn degree(&self) -> usize {
        (0..=self.delta.tprec()).rev().find(|&n| !self.delta.level(n).is_exact_zero()).unwrap_or(0)
    }

    /// Δ padded with zero levels (or cut) to t-precision n.
    pub fn padded(&self, n: usize) -> TateMatrix {
        TateMatrix::from_levels_padded(self.delta.levels().to_vec(), n).expect("nonempty levels")
    }

    /// Valuation of sup_n |Δ_n|.
    pub fn sup_val(&self) -> Option<Q> {
        self.delta.norm_val()
    }
}

/// Rescales the basis by α with val(α) = min_n val(Δ_n)/(q-1), giving
/// Δ~_n = α^{1-q} Δ_n of sup-norm 1.
pub fn normalize_basis(spec: &TauSpec) -> Result<TauSpec> {
    let ctx = spec.ctx().clone();
    let Some(m) = spec.sup_val() else {
        return Err(Error::DegenerateInput("Δ is zero to precision".into()));
    };
    if m == q(0) {
        return Ok(spec.clone());
    }
    let qm1 = q(ctx.q as i64 - 1);
    let av = m / qm1;
    check_den(&av, ctx.denom_cap())?;
    let alpha = ValSeries::u_pow(&ctx, av)?;
    let factor = ValSeries::u_pow(&ctx, -m)?;
    let scale = match &spec.norm_scale {
        Some(s) => s.mul(&alpha),
        None => alpha,
    };
    Ok(TauSpec { r: spec.r, delta: spec.delta.scale(&factor), norm_scale: Some(scale), delta0_reduced: false })
}

/// Φ - Δ·σΦ - Ω, which a solution makes zero to precision.
pub fn residual(delta: &TateMatrix, phi: &TateMatrix, omega: Option<&TateMatrix>) -> TateMatrix {
    let n = phi.tprec();
    let d = delta.truncate_t(n);
    let res = phi.sub(&d.mul(&phi.sigma()));
    match omega {
        Some(o) => res.sub(o),
        None => res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::SessionConfig;

    #[test]
    fn normalize_scalar() {
        let c = SessionConfig::new(2, 1).build().unwrap();
        let ui = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TauSpec::from_levels(vec![Mat::scalar(&ui, 2)]).unwrap();
        let n = normalize_basis(&spec).unwrap();
        assert_eq!(n.sup_val(), Some(q(0)));
        assert_eq!(n.norm_scale.as_ref().unwrap().val(), Some(q(-1)));
        assert_eq!(normalize_basis(&n).unwrap(), n);
    }
}
