//! Invariants of τ on F/t^{N+1}F, their duals, and the pairing between them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::mat::Mat;
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tate::TateMatrix;
use crate::tau::{reduce_delta0, residual, RootPolicy, TauSpec};

#[derive(Debug, Clone)]
pub struct TorsionBasis {
    pub n: usize,
    /// Columns generate the invariants freely over F_q[t]/t^{N+1}.
    pub phi: TateMatrix,
    pub trace: Vec<String>,
    pub tower_degree: u32,
}

impl TorsionBasis {
    pub fn rank(&self) -> usize {
        self.phi.cols()
    }

    /// Number of invariants, q^{r(N+1)}, if it fits.
    pub fn count(&self) -> Option<u64> {
        let q = self.phi.ctx().q;
        q.checked_pow((self.rank() * (self.n + 1)) as u32)
    }
}

pub fn torsion_invariants(spec: &TauSpec, n: usize) -> Result<TorsionBasis> {
    let red = reduce_delta0(spec)?;
    let ctx = spec.ctx().clone();
    let seed = Mat::identity(&ctx, spec.r);
    let reduced = crate::tau::solve_invariants(&red.spec, &seed, n, RootPolicy::MinimalNorm)?;
    let phi = reduced.phi.map_levels(|m| red.d.mul(m));
    if !residual(&spec.padded(n), &phi, None).is_zero_to_prec() {
        return Err(Error::MismatchDetected("torsion basis fails Φ = Δ σΦ".into()));
    }
    let mut trace = vec![format!("delta0: {:?} over F_q^{}", red.strategy, red.tower_degree)];
    for (k, m) in reduced.phi.levels().iter().enumerate().skip(1) {
        let dom = if m.dominant_only() { ", dominant terms only" } else { "" };
        trace.push(format!("level {k}: coefficients over F_q^{}{dom}", m.tower_degree()));
    }
    let tower_degree = phi.levels().iter().fold(red.tower_degree, |a, m| num_integer::lcm(a, m.tower_degree()));
    Ok(TorsionBasis { n, phi, trace, tower_degree })
}

/// Columns t^k f_j stacked level by level: an F_q-basis of the invariants
/// as an s×s matrix, s = r(N+1).
pub fn stacked_basis(basis: &TorsionBasis) -> Result<Mat> {
    let n = basis.n;
    let r = basis.rank();
    let ctx = basis.phi.ctx();
    let s = r * (n + 1);
    let mut out = Mat::zero(ctx, s, s);
    for k in 0..=n {
        let shifted = basis.phi.shift_t(k);
        for j in 0..r {
            for (lvl, m) in shifted.levels().iter().enumerate() {
                for i in 0..r {
                    out.set(lvl * r + i, k * r + j, m.get(i, j).clone());
                }
            }
        }
    }
    Ok(out)
}

/// 1 = det T · (det Φ)^{q-1} for τ = T·σ on F/t^{N+1}F and Φ the stacked basis.
pub fn unit_identity_holds(spec: &TauSpec, basis: &TorsionBasis) -> Result<bool> {
    let ctx = spec.ctx();
    let dt = stacked(spec, basis.n)?.det()?;
    let dp = stacked_basis(basis)?.det()?;
    Ok(dt.mul(&dp.pow(ctx.q - 1)).agrees(&ValSeries::one(ctx)))
}

/// Counts solutions of Φ = Δ σΦ mod t^{N+1} with entries in the residue
/// universe by enumeration, each level solved as an F_p-linear system. Needs
/// Δ with constant entries; None past `limit`.
pub fn brute_force_count(spec: &TauSpec, n: usize, limit: u64) -> Option<u64> {
    let ctx = spec.ctx().clone();
    let r = spec.r;
    let levels: Vec<Vec<Fe>> = (0..=n)
        .map(|k| {
            if k > spec.delta.tprec() {
                Some(vec![0; r * r])
            } else {
                spec.delta.level(k).entries().iter().map(|x| x.as_constant()).collect()
            }
        })
        .collect::<Option<_>>()?;
    let f = &ctx.field;
    let apply = |m: &[Fe], x: &[Fe]| -> Vec<Fe> {
        (0..r).map(|i| (0..r).fold(0, |acc, j| f.add(acc, f.mul(m[i * r + j], x[j])))).collect()
    };
    let d0 = levels[0].clone();
    let map = |x: &[Fe]| -> Vec<Fe> {
        let sx: Vec<Fe> = x.iter().map(|&v| ctx.frob_q(v)).collect();
        x.iter().zip(apply(&d0, &sx)).map(|(&a, b)| f.sub(a, b)).collect()
    };
    let (_, kernel) = f.solve_linear(r, &map, &vec![0; r])?;
    let p = ctx.p();
    let size = p.checked_pow(kernel.len() as u32).filter(|&s| s <= limit)?;
    let elems: Vec<Vec<Fe>> = (0..size)
        .map(|mut idx| {
            let mut v = vec![0; r];
            for b in &kernel {
                let c = f.from_int((idx % p) as i64);
                idx /= p;
                v = v.iter().zip(b).map(|(&x, &y)| f.add(x, f.mul(c, y))).collect();
            }
            v
        })
        .collect();
    let mut count = 0u64;
    let mut stack: Vec<Vec<Vec<Fe>>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        let lvl = prefix.len();
        if lvl == n + 1 {
            count += 1;
            if count > limit {
                return None;
            }
            continue;
        }
        let mut psi = vec![0; r];
        for nu in 1..=lvl {
            let sx: Vec<Fe> = prefix[lvl - nu].iter().map(|&v| ctx.frob_q(v)).collect();
            psi = psi.iter().zip(apply(&levels[nu], &sx)).map(|(&a, b)| f.add(a, b)).collect();
        }
        let Some((part, _)) = f.solve_linear(r, &map, &psi) else { continue };
        for e in &elems {
            let x: Vec<Fe> = part.iter().zip(e).map(|(&a, &b)| f.add(a, b)).collect();
            let mut next = prefix.clone();
            next.push(x);
            stack.push(next);
        }
    }
    Some(count)
}

/// F_q-linear functional x ↦ Σ_{k,i} c_{k,i} x_{k,i} on vectors mod t^{N+1};
/// coefficient (k, i) sits at index k·r + i.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub coeffs: Vec<ValSeries>,
}

impl Functional {
    /// Value on column j of x.
    pub fn eval(&self, x: &TateMatrix, j: usize) -> ValSeries {
        let r = x.rows();
        let mut acc = ValSeries::zero(x.ctx());
        for (k, lvl) in x.levels().iter().enumerate() {
            for i in 0..r {
                if let Some(c) = self.coeffs.get(k * r + i) {
                    acc = acc.add(&c.mul(lvl.get(i, j)));
                }
            }
        }
        acc
    }
}

/// Indices of the first F_q-independent rows, up to `want` of them.
fn pick_independent(ctx: &Ctx, rows: &[Vec<Fe>], want: usize) -> Vec<usize> {
    let f = &ctx.field;
    let fq = ctx.fq();
    let mut span: Vec<Vec<Fe>> = vec![vec![0; rows.first().map_or(0, Vec::len)]];
    let mut out = Vec::new();
    for (idx, v) in rows.iter().enumerate() {
        if out.len() == want || span.contains(v) {
            continue;
        }
        span = span
            .iter()
            .flat_map(|s| fq.iter().map(move |&a| s.iter().zip(v).map(|(&x, &y)| f.add(x, f.mul(a, y))).collect()))
            .collect();
        out.push(idx);
    }
    out
}

/// Block matrix of τ on F/t^{N+1}F with levels stacked: block (a, b) = Δ_{a-b}.
fn stacked(spec: &TauSpec, n: usize) -> Result<Mat> {
    let ctx = spec.ctx();
    let r = spec.r;
    let delta = spec.padded(n);
    let dim = r * (n + 1);
    let mut t = Mat::zero(ctx, dim, dim);
    for a in 0..=n {
        for b in 0..=a {
            let blk = delta.level(a - b);
            for i in 0..r {
                for j in 0..r {
                    t.set(a * r + i, b * r + j, blk.get(i, j).clone());
                }
            }
        }
    }
    Ok(t)
}

/// Generators of the F_q-dual of the invariants, from η = σ(η)·T^{-1}: such
/// η take F_q values on invariants. The r returned generate the dual as an
/// F_q[t]/t^{N+1}-module.
pub fn dual_functionals(spec: &TauSpec, basis: &TorsionBasis) -> Result<Vec<Functional>> {
    let n = basis.n;
    let r = spec.r;
    let tinv_t = stacked(spec, n)?.inv()?.transpose();
    let dual = reduce_delta0(&TauSpec::from_levels(vec![tinv_t])?)?;
    let etas: Vec<Functional> = (0..r * (n + 1))
        .map(|c| Functional { coeffs: (0..r * (n + 1)).map(|i| dual.d.get(i, c).clone()).collect() })
        .collect();
    generating_subset(basis, &etas)
}

/// The first r functionals whose restrictions to the t-torsion t^N·Φ_0 are
/// F_q-independent; these generate the dual over F_q[t]/t^{N+1}.
pub fn generating_subset(basis: &TorsionBasis, etas: &[Functional]) -> Result<Vec<Functional>> {
    let n = basis.n;
    let r = basis.rank();
    let ctx = basis.phi.ctx();
    let socle = TateMatrix::from_levels_padded(vec![basis.phi.level(0).clone()], n)?.shift_t(n);
    let rows: Vec<Vec<Fe>> = etas
        .iter()
        .map(|e| (0..r).map(|j| fq_value(&e.eval(&socle, j))).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let pick = pick_independent(ctx, &rows, r);
    if pick.len() < r {
        return Err(Error::MismatchDetected("functionals do not separate the t-torsion".into()));
    }
    Ok(pick.into_iter().map(|i| etas[i].clone()).collect())
}

fn fq_value(x: &ValSeries) -> Result<Fe> {
    if x.in_fq() || (x.is_zero_to_prec() && x.prec().is_some()) {
        Ok(x.as_constant().unwrap_or(0))
    } else {
        Err(Error::MismatchDetected("pairing value outside F_q".into()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingMatrix {
    pub n: usize,
    /// gram[i][j][k]: coefficient of t^k in ⟨η_i, f_j⟩; None outside F_q.
    pub gram: Vec<Vec<Vec<Option<Fe>>>>,
    /// det of the constant term, when all entries are in F_q.
    pub det0: Option<Fe>,
    pub perfect: bool,
}

/// ⟨η, f⟩ = Σ_k η(t^{N-k} f) t^k over F_q[t]/t^{N+1}; perfect iff its
/// determinant is a unit.
pub fn pairing_check(basis: &TorsionBasis, duals: &[Functional]) -> PairingMatrix {
    let n = basis.n;
    let ctx = basis.phi.ctx().clone();
    let r = basis.rank();
    let gram: Vec<Vec<Vec<Option<Fe>>>> = duals
        .iter()
        .map(|eta| {
            (0..r)
                .map(|j| (0..=n).map(|k| fq_value(&eta.eval(&basis.phi.shift_t(n - k), j)).ok()).collect())
                .collect()
        })
        .collect();
    let g0: Option<Vec<Fe>> = gram.iter().flat_map(|row| row.iter().map(|e| e[0])).collect();
    let all_fq = gram.iter().flatten().flatten().all(Option::is_some);
    let det0 = match g0 {
        Some(v) if all_fq && duals.len() == r => Mat::from_fe(&ctx, r, r, &v).ok().and_then(|m| m.det().ok()).and_then(|d| d.as_constant()),
        _ => None,
    };
    let perfect = det0.is_some_and(|d| d != 0);
    PairingMatrix { n, gram, det0, perfect }
}

/// X = Φ_1^{-1} Φ_2, required to have F_q entries and unit determinant.
pub fn torsor_twist_check(b1: &TorsionBasis, b2: &TorsionBasis) -> Result<TateMatrix> {
    if b1.n != b2.n || b1.rank() != b2.rank() {
        return Err(Error::DimensionMismatch("bases of different shape".into()));
    }
    let x = b1.phi.inv()?.mul(&b2.phi);
    for m in x.levels() {
        if m.entries().iter().any(|e| fq_value(e).is_err()) {
            return Err(Error::BasesInequivalent("transition matrix has entries outside F_q".into()));
        }
    }
    let det0 = x.level(0).det()?;
    if det0.val() != Some(crate::rat::q(0)) {
        return Err(Error::BasesInequivalent("transition matrix is not invertible mod t".into()));
    }
    Ok(x.map_levels(|m| m.map(|e| ValSeries::constant(e.ctx(), e.as_constant().unwrap_or(0)))))
}

/// Applies c ↦ c^{q^k} to every coefficient of the basis.
pub fn conjugate_basis(basis: &TorsionBasis, k: i64) -> TorsionBasis {
    let phi = basis.phi.map_levels(|m| m.map(|e| e.residue_frobenius(k)));
    TorsionBasis { phi, ..basis.clone() }
}
