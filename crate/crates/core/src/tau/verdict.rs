use serde::Serialize;

use super::level::{solve_levels, RootPolicy};
use super::reduce::{reduce_delta0, Strategy};
use super::TauSpec;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rat::{q, Q};
use crate::tate::TateMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCert {
    pub column: usize,
    pub l: usize,
    /// Valuations (log base |u|^{-1}) of Θ and ε.
    #[serde(with = "crate::report::qser")]
    pub theta_val: Q,
    #[serde(with = "crate::report::qser")]
    pub eps_val: Q,
    /// Valuation of sup_{n≥1} |Δ_n| after reduction.
    #[serde(with = "crate::report::qopt")]
    pub sup_delta_val: Option<Q>,
    /// Column valuations at levels 0..=2l.
    #[serde(with = "crate::report::qoptvec")]
    pub prefix_vals: Vec<Option<Q>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceWitness {
    pub level: usize,
    #[serde(with = "crate::report::qser")]
    pub c_val: Q,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Trivial { certificates: Vec<ContractionCert> },
    Divergent { witness: DivergenceWitness },
    Undetermined { horizon: usize },
}

impl Verdict {
    pub fn code(&self) -> char {
        match self {
            Verdict::Trivial { .. } => 'T',
            Verdict::Divergent { .. } => 'D',
            Verdict::Undetermined { .. } => 'U',
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantReport {
    /// Solution columns in the coordinates of the input spec.
    pub phi: TateMatrix,
    /// Per-level valuation of the solved (reduced) levels.
    pub level_vals: Vec<Option<Q>>,
    pub verdict: Verdict,
    /// Number of certified invariant columns.
    pub rank: usize,
    pub reduction: Option<Strategy>,
    pub tower_degree: u32,
    pub dominant_only: bool,
    pub horizon: usize,
}

impl InvariantReport {
    pub(crate) fn unverified(phi: TateMatrix, horizon: usize) -> Self {
        let level_vals = phi.level_vals();
        let tower_degree = phi.levels().iter().fold(1, |a, m| num_integer::lcm(a, m.tower_degree()));
        let dominant_only = phi.levels().iter().any(|m| m.dominant_only());
        InvariantReport {
            phi,
            level_vals,
            verdict: Verdict::Undetermined { horizon },
            rank: 0,
            reduction: None,
            tower_degree,
            dominant_only,
            horizon,
        }
    }
}

fn column_vals(phi: &TateMatrix, j: usize) -> Vec<Option<Q>> {
    phi.levels().iter().map(|m| m.column(j).val_lb()).collect()
}

fn ge(v: Option<Q>, bound: Q) -> bool {
    v.is_none_or(|x| x >= bound)
}

/// Θ, strictly inside both |Θ| < 1/2 and |Θ|^{q-1} sup|Δ_n| < 1.
fn theta_val(spec: &TauSpec) -> (Q, Option<Q>) {
    let ctx = spec.ctx();
    let step = Q::new(1, ctx.denom_cap());
    let sup = spec.delta.levels()[1..].iter().filter_map(|m| m.val_lb()).min();
    let mut theta = q(1) + step;
    if let Some(s) = sup {
        if s < q(0) {
            theta = theta.max(-s / q(ctx.q as i64 - 1) + step);
        }
    }
    (theta, sup)
}

/// Contraction conditions for column j at level l of a reduced spec.
fn certify(spec: &TauSpec, cols: &[Option<Q>], j: usize, l: usize, theta: Q, sup: Option<Q>) -> Option<ContractionCert> {
    if 2 * l >= cols.len() {
        return None;
    }
    let qq = q(spec.ctx().q as i64);
    let pre = cols[..=l].iter().flatten().min().copied().unwrap_or(theta);
    let eps = theta.max(theta - qq * pre);
    let deg = spec.degree();
    let tail_small = (l + 1..=deg).all(|n| ge(spec.delta.level(n).val_lb(), eps));
    let window_small = (l + 1..=2 * l).all(|n| ge(cols[n], theta));
    (tail_small && window_small).then(|| ContractionCert {
        column: j,
        l,
        theta_val: theta,
        eps_val: eps,
        sup_delta_val: sup,
        prefix_vals: cols[..=2 * l].to_vec(),
    })
}

/// Rank one, Δ = 1 + c t with val(c) ≤ 0: every nonzero invariant has
/// val(Φ_n) ≤ 0 at all levels past its first, whatever the root choices.
fn divergence(spec: &TauSpec) -> Option<DivergenceWitness> {
    if spec.r != 1 || spec.degree() != 1 {
        return None;
    }
    let c = spec.delta.level(1).get(0, 0);
    let v = c.val()?;
    (v <= q(0)).then(|| DivergenceWitness {
        level: 1,
        c_val: v,
        rule: "rank one, Δ = 1 + c t with val(c) ≤ 0".into(),
    })
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::DenominatorCapExceeded { .. } | Error::ExtensionCapExceeded(_))
}

/// Reduces Δ_0 to Id, solves from the seed Id and tries to certify each
/// column; falls back to the divergence rule, then to Undetermined.
pub fn triviality_verdict(spec: &TauSpec, horizon: usize, policy: RootPolicy) -> Result<InvariantReport> {
    let red = reduce_delta0(spec)?;
    let rs = &red.spec;
    let ctx = rs.ctx().clone();
    let seed = Mat::identity(&ctx, rs.r);
    let mut h = horizon.max(2);
    let phi = loop {
        match solve_levels(&rs.padded(h), None, &seed, policy) {
            Ok(p) => break p,
            Err(e) if recoverable(&e) && h > 2 => h = h * 3 / 4,
            Err(e) => return Err(e),
        }
    };
    let (theta, sup) = theta_val(rs);
    let mut certs = Vec::new();
    for j in 0..rs.r {
        let cols = column_vals(&phi, j);
        if let Some(c) = (1..=h / 2).find_map(|l| certify(rs, &cols, j, l, theta, sup)) {
            certs.push(c);
        }
    }
    let rank = certs.len();
    let verdict = if rank == rs.r {
        Verdict::Trivial { certificates: certs }
    } else if let Some(w) = divergence(rs) {
        Verdict::Divergent { witness: w }
    } else {
        Verdict::Undetermined { horizon: h }
    };
    let mut rep = InvariantReport::unverified(phi.map_levels(|m| red.d.mul(m)), h);
    rep.level_vals = phi.level_vals();
    rep.verdict = verdict;
    rep.rank = rank;
    rep.reduction = Some(red.strategy);
    rep.tower_degree = num_integer::lcm(rep.tower_degree, red.tower_degree);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ValSeries;
    use crate::session::{Ctx, SessionConfig};

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(32)).build().unwrap()
    }

    fn example(c: &Ctx, va: i64, vb: i64) -> TauSpec {
        let a = ValSeries::u_pow(c, q(va)).unwrap();
        let b = ValSeries::u_pow(c, q(vb)).unwrap();
        TauSpec::from_levels(vec![Mat::scalar(&a, 1), Mat::scalar(&b, 1)]).unwrap()
    }

    #[test]
    fn example_grid_corners() {
        let c = ctx();
        let t = triviality_verdict(&example(&c, 0, 1), 8, RootPolicy::MinimalNorm).unwrap();
        assert_eq!(t.verdict.code(), 'T');
        assert_eq!(t.rank, 1);
        let d = triviality_verdict(&example(&c, 1, 0), 8, RootPolicy::MinimalNorm).unwrap();
        assert_eq!(d.verdict.code(), 'D');
        let e = triviality_verdict(&example(&c, 2, 2), 8, RootPolicy::MinimalNorm).unwrap();
        assert_eq!(e.verdict.code(), 'D');
    }

    #[test]
    fn identity_is_trivial() {
        let c = ctx();
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 2)]).unwrap();
        let rep = triviality_verdict(&spec, 4, RootPolicy::MinimalNorm).unwrap();
        assert_eq!(rep.verdict.code(), 'T');
        assert_eq!(rep.rank, 2);
    }

    #[test]
    fn pink_point_inside() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let one = ValSeries::one(&c);
        let d1 = Mat::new(2, 2, vec![u.clone(), one, ValSeries::zero(&c), u]).unwrap();
        let spec = TauSpec::from_levels(vec![Mat::identity(&c, 2), d1]).unwrap();
        let rep = triviality_verdict(&spec, 12, RootPolicy::MinimalNorm).unwrap();
        assert_eq!(rep.verdict.code(), 'T');
    }
}
