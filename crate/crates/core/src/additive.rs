//! Roots of additive polynomials P(x) = Σ c_i x^{q^i} with c_0 ≠ 0.
//!
//! The kernel is an F_q-space of dimension deg_q P. The roots of least
//! absolute value (first Newton segment) are found by solving the residue
//! polynomial over the universe and Hensel lifting; P is then right-divided
//! by the additive polynomial vanishing on them and the quotient is solved
//! recursively, pulling its roots back through a chain of Artin–Schreier
//! equations.

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::newton::{newton_polygon, NewtonPolygon};
use crate::rat::{check_den, q, Q};
use crate::roots::artin_schreier_deep;
use crate::series::ValSeries;
use crate::session::Ctx;

#[derive(Debug, Clone)]
pub struct AdditiveRoots {
    /// F_q-basis of the kernel.
    pub basis: Vec<ValSeries>,
    /// Polygon over the points (q^i, val c_i).
    pub polygon: NewtonPolygon,
    pub dominant_only: bool,
}

pub type Additive = Vec<ValSeries>;

fn known(c: &ValSeries) -> bool {
    c.val().is_some()
}

/// Evaluates Σ c_i x^{q^i}.
pub fn eval_additive(p: &[ValSeries], x: &ValSeries) -> ValSeries {
    let ctx = x.ctx();
    let mut acc = ValSeries::zero(ctx);
    let mut xp = x.clone();
    for (i, c) in p.iter().enumerate() {
        if i > 0 {
            xp = xp.frobenius();
        }
        acc = acc.add(&c.mul(&xp));
    }
    acc
}

/// (a ∘ b)(x) = a(b(x)).
pub fn compose(a: &[ValSeries], b: &[ValSeries]) -> Additive {
    let ctx = a[0].ctx();
    let mut out = vec![ValSeries::zero(ctx); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&ai.mul(&bj.frobenius_k(i as u32)));
        }
    }
    out
}

fn trim_top(p: &[ValSeries]) -> Additive {
    let mut v = p.to_vec();
    while v.len() > 1 && v.last().is_some_and(|c| !known(c)) {
        v.pop();
    }
    v
}

pub fn additive_polygon(p: &[ValSeries]) -> Result<NewtonPolygon> {
    let ctx = p[0].ctx();
    let qq = ctx.q as i64;
    let pts: Vec<(Q, Q)> = p
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.val().map(|v| (q(qq.pow(i as u32)), v)))
        .collect();
    newton_polygon(&pts)
}

pub fn additive_roots(p: &[ValSeries]) -> Result<AdditiveRoots> {
    let p = trim_top(p);
    if p.is_empty() || !known(&p[0]) {
        return Err(Error::DegenerateInput("additive polynomial needs a nonzero linear term".into()));
    }
    let ctx = p[0].ctx().clone();
    if p.len() == 1 {
        return Ok(AdditiveRoots { basis: vec![], polygon: NewtonPolygon::default(), dominant_only: false });
    }
    let polygon = additive_polygon(&p)?;
    let first = &polygon.segments[0];
    let qq = ctx.q as i64;
    // q-degree reached by the first segment
    let end = first.length + q(1);
    let j = (1..p.len()).find(|&i| q(qq.pow(i as u32)) == end).expect("segment ends on a support point");
    let rho = -first.slope;
    check_den(&rho, ctx.denom_cap())?;
    let w = first_segment_roots(&ctx, &p, j, rho)?;
    let mut dominant = w.iter().any(|x| x.dominant_only());
    let mut basis = w.clone();
    if j + 1 < p.len() {
        let (pw, chain) = vanishing_polynomial(&w)?;
        let psi = right_divide(&p, &pw)?;
        let sub = additive_roots(&psi)?;
        dominant |= sub.dominant_only;
        for z in &sub.basis {
            let x = pull_back(&chain, z)?;
            dominant |= x.dominant_only();
            basis.push(x);
        }
    }
    Ok(AdditiveRoots { basis, polygon, dominant_only: dominant })
}

fn first_segment_roots(ctx: &Ctx, p: &[ValSeries], j: usize, rho: Q) -> Result<Vec<ValSeries>> {
    let f = &ctx.field;
    let lambda = ValSeries::u_pow(ctx, rho)?;
    let denom = p[0].mul(&lambda).invert()?;
    // scaled polynomial Q(y) = P(λy) / (c_0 λ), with Q_0 = 1
    let mut qs: Additive = vec![ValSeries::one(ctx)];
    let mut lp = lambda.clone();
    for c in &p[1..] {
        lp = lp.frobenius();
        qs.push(c.mul(&lp).mul(&denom));
    }
    let residues: Vec<Fe> = qs[..=j]
        .iter()
        .map(|c| if c.val() == Some(q(0)) { c.residue() } else { 0 })
        .collect();
    let map = |x: &[Fe]| {
        let mut acc = 0;
        let mut xp = x[0];
        for (i, &r) in residues.iter().enumerate() {
            if i > 0 {
                xp = ctx.frob_q(xp);
            }
            acc = f.add(acc, f.mul(r, xp));
        }
        vec![acc]
    };
    let (_, kernel) = f.solve_linear(1, &map, &[0]).expect("homogeneous system");
    let fq = ctx.fq();
    let mut span: Vec<Fe> = vec![0];
    let mut chosen = Vec::new();
    for v in kernel.iter().map(|k| k[0]) {
        if span.contains(&v) {
            continue;
        }
        chosen.push(v);
        span = span.iter().flat_map(|&s| fq.iter().map(move |&c| (s, c))).map(|(s, c)| f.add(s, f.mul(c, v))).collect();
        if chosen.len() == j {
            break;
        }
    }
    if chosen.len() < j {
        return Err(Error::ExtensionCapExceeded(format!(
            "residue polynomial has only q^{} roots in the universe, need q^{j}",
            chosen.len()
        )));
    }
    chosen
        .into_iter()
        .map(|r| {
            // y is a unit, so relative and absolute precision agree
            let mut y = ValSeries::constant(ctx, r).truncate(ctx.prec);
            for _ in 0..200 {
                let val = eval_additive(&qs, &y);
                if val.is_zero_to_prec() {
                    break;
                }
                let next = y.sub(&val);
                if next == y {
                    break;
                }
                y = next;
            }
            Ok(y.mul(&lambda))
        })
        .collect()
}

/// Monic additive polynomial with kernel span_Fq(w), together with the
/// chain β_1..β_k with P_W = L_k ∘ .. ∘ L_1, L_i(x) = x^q - β_i^{q-1} x.
fn vanishing_polynomial(w: &[ValSeries]) -> Result<(Additive, Vec<ValSeries>)> {
    let ctx = w[0].ctx();
    let qm1 = ctx.q - 1;
    let mut pw: Additive = vec![ValSeries::one(ctx)];
    let mut chain = Vec::new();
    for wi in w {
        let beta = eval_additive(&pw, wi);
        if beta.is_zero_to_prec() {
            return Err(Error::DegenerateInput("dependent kernel elements".into()));
        }
        let l = vec![beta.pow(qm1).neg(), ValSeries::one(ctx)];
        pw = compose(&l, &pw);
        chain.push(beta);
    }
    Ok((pw, chain))
}

/// ψ with p = ψ ∘ pw, for monic pw.
fn right_divide(p: &[ValSeries], pw: &[ValSeries]) -> Result<Additive> {
    let ctx = p[0].ctx();
    let k = p.len() - 1;
    let j = pw.len() - 1;
    let mut psi = vec![ValSeries::zero(ctx); k - j + 1];
    for a in (0..=k - j).rev() {
        let m = a + j;
        let mut rest = p[m].clone();
        for (a2, coeff) in psi.iter().enumerate().skip(a + 1) {
            if m >= a2 && m - a2 <= j {
                rest = rest.sub(&coeff.mul(&pw[m - a2].frobenius_k(a2 as u32)));
            }
        }
        psi[a] = rest;
    }
    Ok(psi)
}

/// Some x with P_W(x) = z, through the Artin–Schreier chain.
fn pull_back(chain: &[ValSeries], z: &ValSeries) -> Result<ValSeries> {
    let mut y = z.clone();
    for beta in chain.iter().rev() {
        // x^q - β^{q-1} x = y with x = β s  ⇔  s - s^q = -y / β^q
        let rhs = y.neg().div(&beta.frobenius())?;
        let s = artin_schreier_deep(&rhs)?.roots.remove(0);
        y = beta.mul(&s);
    }
    Ok(y)
}
