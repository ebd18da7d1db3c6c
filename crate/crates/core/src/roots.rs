//! Artin–Schreier equations x - x^q = α and Kummer equations x^n = a.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::rat::{check_den, q, qmin};
use crate::series::ValSeries;
use crate::session::Ctx;

#[derive(Debug, Clone)]
pub struct RootSet {
    pub roots: Vec<ValSeries>,
    /// Number of actual roots each listed value stands for. Above 1 when
    /// the F_q shifts are below the precision of a dominant-only root.
    pub multiplicity: u64,
    pub dominant_only: bool,
}

impl RootSet {
    pub fn count(&self) -> u64 {
        self.roots.len() as u64 * self.multiplicity
    }

    pub fn tower_degree(&self) -> u32 {
        self.roots.iter().fold(1, |acc, r| num_integer::lcm(acc, r.tower_degree()))
    }
}

fn fq_shifts(x: &ValSeries) -> Vec<ValSeries> {
    let ctx = x.ctx();
    ctx.fq().into_iter().map(|c| x.add(&ValSeries::constant(ctx, c))).collect()
}

/// Σ_{ν≥0} α^{q^ν} for val(α) > 0.
pub fn principal_as_root(alpha: &ValSeries) -> Result<ValSeries> {
    let ctx = alpha.ctx();
    if alpha.is_exact_zero() {
        return Ok(ValSeries::zero(ctx));
    }
    let Some(v) = alpha.val() else {
        return Ok(alpha.clone());
    };
    if v <= q(0) {
        return Err(Error::DegenerateInput("principal root needs val(alpha) > 0".into()));
    }
    let target = qmin(alpha.prec(), Some(v + ctx.prec)).unwrap();
    let mut term = alpha.truncate(target);
    let mut sum = ValSeries::big_o(ctx, target).with_dominant(alpha.dominant_only());
    while term.val().is_some() {
        sum = sum.add(&term);
        term = term.frobenius().truncate(target);
    }
    Ok(sum)
}

/// Solves x - x^q = c in the residue universe.
pub fn residue_as_root(ctx: &Ctx, c: Fe) -> Result<Fe> {
    let f = &ctx.field;
    let map = |x: &[Fe]| vec![f.sub(x[0], ctx.frob_q(x[0]))];
    match f.solve_linear(1, &map, &[c]) {
        Some((x, _)) => Ok(x[0]),
        None => Err(Error::ExtensionCapExceeded(format!(
            "x - x^q = {c} has no root in F_{}^{}",
            f.p(),
            f.degree()
        ))),
    }
}

/// Dominant-only refinement for val(α) < 0: `depth` steps of
/// x <- (x - α)^{1/q} from x = 0.
fn wild_root(alpha: &ValSeries, depth: u32, lenient: bool) -> Result<ValSeries> {
    let ctx = alpha.ctx();
    let v = alpha.val().expect("caller checked");
    let qq = q(ctx.q as i64);
    let mut x = ValSeries::zero(ctx);
    let mut prec_k = v / qq; // precision of the current iterate
    let mut done = 0;
    while done < depth {
        let y = x.sub(alpha).truncate(prec_k);
        let step = check_den(&(prec_k / qq), ctx.denom_cap()).and_then(|_| y.inv_frobenius());
        match step {
            Ok(next) => {
                x = next;
                prec_k /= qq;
                done += 1;
            }
            Err(e) => {
                if lenient && done > 0 {
                    break;
                }
                return Err(e);
            }
        }
    }
    Ok(x.with_dominant(true))
}

/// All roots of x - x^q = α, with exactly `depth` refinements when val(α) < 0.
pub fn artin_schreier(alpha: &ValSeries, depth: u32) -> Result<RootSet> {
    as_roots(alpha, depth, false)
}

/// As `artin_schreier`, refining wild roots as far as the denominator cap allows.
pub fn artin_schreier_deep(alpha: &ValSeries) -> Result<RootSet> {
    as_roots(alpha, 64, true)
}

fn as_roots(alpha: &ValSeries, depth: u32, lenient: bool) -> Result<RootSet> {
    let ctx = alpha.ctx();
    let fq = ctx.fq().len() as u64;
    let Some(v) = alpha.val() else {
        return match alpha.prec() {
            None => Ok(RootSet { roots: fq_shifts(&ValSeries::zero(ctx)), multiplicity: 1, dominant_only: false }),
            Some(p) if p > q(0) => {
                Ok(RootSet { roots: fq_shifts(&ValSeries::big_o(ctx, p)), multiplicity: 1, dominant_only: false })
            }
            Some(_) => Err(Error::DegenerateInput("alpha is zero to a non-positive precision".into())),
        };
    };
    if v > q(0) {
        let x = principal_as_root(alpha)?;
        let dom = x.dominant_only();
        return Ok(RootSet { roots: fq_shifts(&x), multiplicity: 1, dominant_only: dom });
    }
    if v.is_zero() {
        let c = alpha.residue();
        let rest = alpha.sub(&ValSeries::constant(ctx, c));
        let x0 = residue_as_root(ctx, c)?;
        let x = principal_as_root(&rest)?.add(&ValSeries::constant(ctx, x0));
        let dom = x.dominant_only();
        return Ok(RootSet { roots: fq_shifts(&x), multiplicity: 1, dominant_only: dom });
    }
    let x = wild_root(alpha, depth.max(1), lenient)?;
    Ok(RootSet { roots: vec![x], multiplicity: fq, dominant_only: true })
}

/// All x with x^n = a, n prime to p.
pub fn kummer_root(a: &ValSeries, n: u64) -> Result<RootSet> {
    let ctx = a.ctx();
    if n == 0 || n.is_multiple_of(ctx.p()) {
        return Err(Error::DegenerateInput(format!("Kummer degree {n} must be prime to p")));
    }
    let Some((v, c)) = a.leading() else {
        return Err(Error::DegenerateInput("Kummer root of a value that is zero to precision".into()));
    };
    if n == 1 {
        return Ok(RootSet { roots: vec![a.clone()], multiplicity: 1, dominant_only: a.dominant_only() });
    }
    let ev = v / q(n as i64);
    check_den(&ev, ctx.denom_cap())?;
    let f = &ctx.field;
    let croots = f.nth_roots(c, n)?;
    if croots.is_empty() {
        return Err(Error::ExtensionCapExceeded(format!("{c} has no {n}-th root in the universe")));
    }
    let norm = ValSeries::monomial(ctx, c, v)?.invert()?;
    let mut b = a.mul(&norm);
    let rel = match a.prec() {
        Some(p) => (p - v).min(ctx.prec),
        None => ctx.prec,
    };
    let unit_exact = b.is_exact() && b.terms().len() == 1;
    let y = if unit_exact {
        ValSeries::one(ctx)
    } else {
        b = b.truncate(rel);
        let nn = ValSeries::constant(ctx, f.from_int(n as i64));
        let mut y = ValSeries::one(ctx);
        for _ in 0..64 {
            let resid = y.pow(n).sub(&b);
            if resid.is_zero_to_prec() {
                break;
            }
            let step = resid.div(&nn.mul(&y.pow(n - 1)))?;
            let next = y.sub(&step).truncate(rel);
            if next == y {
                break;
            }
            y = next;
        }
        y.truncate(rel)
    };
    let mut roots: Vec<ValSeries> = croots
        .into_iter()
        .map(|r| Ok(y.mul(&ValSeries::monomial(ctx, r, ev)?)))
        .collect::<Result<_>>()?;
    roots.sort_by_key(|r| r.leading().map(|t| t.1));
    Ok(RootSet { roots, multiplicity: 1, dominant_only: a.dominant_only() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qf;
    use crate::session::SessionConfig;

    fn ctx(p: u64, prec: i64) -> Ctx {
        SessionConfig::new(p, 1).with_prec(q(prec)).build().unwrap()
    }

    #[test]
    fn principal_root_of_u() {
        let c = ctx(2, 4);
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let rs = artin_schreier(&u, 1).unwrap();
        assert_eq!(rs.roots.len(), 2);
        let x = &rs.roots[0];
        assert_eq!(x.to_literal(), "2^1 {1:1, 2:1, 4:1} prec:5");
        assert!(x.sub(&x.frobenius()).sub(&u).is_zero_to_prec());
    }

    #[test]
    fn kernel_is_fq() {
        let c = ctx(3, 4);
        let rs = artin_schreier(&ValSeries::zero(&c), 1).unwrap();
        let consts: Vec<Fe> = rs.roots.iter().map(|r| r.residue()).collect();
        assert_eq!(consts, vec![0, 1, 2]);
    }

    #[test]
    fn residue_root_in_f4() {
        let c = ctx(2, 4);
        let rs = artin_schreier(&ValSeries::one(&c), 1).unwrap();
        assert_eq!(rs.roots.len(), 2);
        for r in &rs.roots {
            let w = r.as_constant().unwrap();
            let f = &c.field;
            assert_eq!(f.add(f.add(f.mul(w, w), w), 1), 0);
            assert_eq!(r.tower_degree(), 2);
        }
    }

    #[test]
    fn wild_root_depth_two() {
        let c = ctx(2, 8);
        let a = ValSeries::u_pow(&c, q(-1)).unwrap();
        let rs = artin_schreier(&a, 2).unwrap();
        let x = &rs.roots[0];
        assert!(x.dominant_only());
        assert_eq!(x.to_literal(), "2^1 {-1/2:1, -1/4:1} prec:-1/8 dominant");
        let resid = x.sub(&x.frobenius()).sub(&a);
        assert!(resid.is_zero_to_prec());
        assert_eq!(resid.prec(), Some(qf(-1, 4)));
        assert_eq!(rs.count(), 2);
    }

    #[test]
    fn kummer_examples() {
        let c = ctx(3, 8);
        let rs = kummer_root(&ValSeries::u_pow(&c, q(2)).unwrap(), 2).unwrap();
        let lits: Vec<String> = rs.roots.iter().map(|r| r.to_literal()).collect();
        assert_eq!(lits, vec!["3^1 {1:1} prec:exact", "3^1 {1:2} prec:exact"]);
        let units = kummer_root(&ValSeries::one(&c), 2).unwrap();
        assert_eq!(units.roots.len(), 2);
        let c2 = ctx(2, 8);
        let a = ValSeries::u_pow(&c2, q(-1)).unwrap();
        assert_eq!(kummer_root(&a, 1).unwrap().roots, vec![a]);
    }

    #[test]
    fn kummer_of_unit_series() {
        let c = ctx(3, 12);
        let a = ValSeries::from_terms(&c, [(q(0), 1), (q(1), 1)], None).unwrap();
        for r in kummer_root(&a, 2).unwrap().roots {
            assert!(r.pow(2).sub(&a).is_zero_to_prec());
        }
    }
}
