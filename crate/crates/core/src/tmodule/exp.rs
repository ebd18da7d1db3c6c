use serde::Serialize;

use super::TModuleSpec;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::newton::{newton_polygon, NewtonPolygon};
use crate::rat::{fmt_q, q, Q};
use crate::series::ValSeries;

#[derive(Debug, Clone)]
pub struct ExpCoeffs {
    /// e_0 = Id, e_1, …, e_J.
    pub e: Vec<Mat>,
    pub vals: Vec<Option<Q>>,
    /// Lower bounds val(e_j) ≥ q^j·j·w/s - 2λ(q^j - 1)/(q - 1) - q^j·λ with
    /// w = -val θ and λ = log M ≥ 0.
    pub bounds: Vec<Q>,
    pub log_m: Q,
    pub passes: Vec<usize>,
    pub q: u64,
    pub s: usize,
    pub theta_val: Q,
}

impl ExpCoeffs {
    pub fn j_max(&self) -> usize {
        self.e.len() - 1
    }

    /// Every computed e_j respects its bound.
    pub fn bound_holds(&self) -> bool {
        self.vals.iter().zip(&self.bounds).all(|(v, b)| v.is_none_or(|v| v >= *b))
    }

    /// q^{-j} val(e_j) for the nonzero e_j.
    pub fn normalized(&self) -> Vec<Option<Q>> {
        let qq = q(self.q as i64);
        self.vals.iter().enumerate().map(|(j, v)| v.map(|v| v / qq.pow(j as i32))).collect()
    }
}

fn log_m(spec: &TModuleSpec, m: usize) -> Q {
    let n = spec.nilpotent();
    let mut vals: Vec<Q> = spec.g[1..].iter().filter_map(|g| g.val()).collect();
    let mut pw = n.clone();
    for _ in 0..m {
        vals.extend(pw.val());
        pw = pw.mul(&n);
    }
    vals.into_iter().map(|v| -v).fold(q(0), Q::max)
}

fn bound(j: usize, qq: i64, s: usize, w: Q, lm: Q) -> Q {
    let qj = q(qq.pow(j as u32));
    qj * q(j as i64) * w / q(s as i64) - q(2) * lm * (qj - q(1)) / q(qq - 1) - qj * lm
}

/// Solves e(θ^{q^j} + N^{(j)}) - (θ + N)e = rhs. `split` runs the N·e
/// correction in an outer loop and e·N^{(j)} in an inner one.
fn sylvester(rhs: &Mat, n: &Mat, nj: &Mat, inv: &ValSeries, m: usize, split: bool) -> Result<(Mat, usize)> {
    let limit = 2 * m + 2;
    let mut e = rhs.scale(inv);
    if !split {
        for pass in 1..=limit {
            let next = rhs.add(&n.mul(&e)).sub(&e.mul(nj)).scale(inv);
            if next.agrees(&e) {
                return Ok((next, pass));
            }
            e = next;
        }
    } else {
        let mut passes = 0;
        for _ in 0..=limit {
            let b = rhs.add(&n.mul(&e));
            let mut f = b.scale(inv);
            for _ in 0..=limit {
                passes += 1;
                let next = b.sub(&f.mul(nj)).scale(inv);
                let done = next.agrees(&f);
                f = next;
                if done {
                    break;
                }
            }
            if f.agrees(&e) {
                return Ok((f, passes));
            }
            e = f;
        }
    }
    Err(Error::NotConvergent("nilpotent iteration for e_j".into()))
}

fn exp_impl(spec: &TModuleSpec, j_max: usize, split: bool) -> Result<ExpCoeffs> {
    let ctx = spec.ctx().clone();
    let m = spec.nil_order()?;
    let s = spec.s();
    let n = spec.nilpotent();
    let qq = ctx.q as i64;
    let w = -spec.theta.val().expect("|θ| > 1");
    let lm = log_m(spec, m);
    let mut e = vec![Mat::identity(&ctx, spec.d)];
    let mut passes = vec![0];
    for j in 1..=j_max {
        let mut rhs = Mat::zero(&ctx, spec.d, spec.d);
        for k in 1..=s.min(j) {
            rhs = rhs.add(&spec.g[k].mul(&e[j - k].sigma_k(k as u32)));
        }
        let den = spec.theta.frobenius_k(j as u32).sub(&spec.theta);
        let inv = den.invert()?;
        let (ej, p) = sylvester(&rhs, &n, &n.sigma_k(j as u32), &inv, m, split)?;
        e.push(ej);
        passes.push(p);
    }
    let vals = e.iter().map(|x| x.val()).collect();
    let bounds = (0..=j_max).map(|j| if j == 0 { q(0) } else { bound(j, qq, s.max(1), w, lm) }).collect();
    Ok(ExpCoeffs { e, vals, bounds, log_m: lm, passes, q: ctx.q, s, theta_val: -w })
}

/// e_0, …, e_J of exp = Σ e_j σ^j with exp·G_0 = φ_t·exp.
pub fn exp_coefficients(spec: &TModuleSpec, j_max: usize) -> Result<ExpCoeffs> {
    exp_impl(spec, j_max, false)
}

/// Same coefficients with the two nilpotent corrections applied in nested
/// loops instead of jointly.
pub fn exp_coefficients_split(spec: &TModuleSpec, j_max: usize) -> Result<ExpCoeffs> {
    exp_impl(spec, j_max, true)
}

/// Σ_j e_j z^{(j)} to absolute precision `target`, the tail past J bounded
/// through the coefficient bounds.
pub fn exp_apply(c: &ExpCoeffs, z: &[ValSeries], target: Q) -> Result<Vec<ValSeries>> {
    let ctx = c.e[0].ctx().clone();
    let d = c.e[0].rows();
    if z.len() != d {
        return Err(Error::DimensionMismatch(format!("argument of length {} for d = {d}", z.len())));
    }
    let Some(vz) = z.iter().filter_map(|x| x.val_lb()).min() else {
        return Ok(vec![ValSeries::zero(&ctx); d]);
    };
    let qq = c.q as i64;
    let jn = c.j_max() + 1;
    let slope = q(jn as i64) * (-c.theta_val) / q(c.s.max(1) as i64) - c.log_m * (q(1) + q(2) / q(qq - 1)) + vz;
    let tail = q(qq.pow(jn as u32)) * slope;
    if slope <= q(0) || tail < target {
        return Err(Error::TailNotDominated { bound: fmt_q(&tail), target: fmt_q(&target) });
    }
    let mut out = vec![ValSeries::zero(&ctx); d];
    let mut zj = z.to_vec();
    for (j, ej) in c.e.iter().enumerate() {
        if j > 0 {
            zj = zj.iter().map(|x| x.frobenius().truncate(target)).collect();
        }
        for (i, o) in out.iter_mut().enumerate() {
            for (k, x) in zj.iter().enumerate() {
                *o = o.add(&ej.get(i, k).mul(x));
            }
        }
    }
    Ok(out.into_iter().map(|x| x.truncate(target)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    #[serde(with = "crate::report::qoptvec")]
    pub defect_vals: Vec<Option<Q>>,
    /// Smallest defect valuation; None when every defect vanishes.
    #[serde(with = "crate::report::qopt")]
    pub max_defect_val: Option<Q>,
    pub zero: bool,
}

/// Compares exp·G_0 with φ_t·exp coefficientwise in σ up to degree J.
pub fn functional_equation_check(spec: &TModuleSpec, c: &ExpCoeffs) -> FunctionalReport {
    let mut defect_vals = Vec::new();
    let mut zero = true;
    for j in 0..=c.j_max() {
        let mut d = c.e[j].mul(&spec.g[0].sigma_k(j as u32));
        for k in 0..=j.min(spec.g.len() - 1) {
            d = d.sub(&spec.g[k].mul(&c.e[j - k].sigma_k(k as u32)));
        }
        zero &= d.is_zero_to_prec();
        defect_vals.push(if d.is_zero_to_prec() { None } else { d.val() });
    }
    let max_defect_val = defect_vals.iter().flatten().min().copied();
    FunctionalReport { defect_vals, max_defect_val, zero }
}

/// Newton polygon of Σ e_j z^{q^j}, d = 1. Its first segment gives the
/// smallest nonzero kernel elements of exp within the computed range.
pub fn kernel_valuations(spec: &TModuleSpec, c: &ExpCoeffs) -> Result<NewtonPolygon> {
    if spec.d != 1 {
        return Err(Error::UnsupportedShape(format!("kernel polygon for d = {}", spec.d)));
    }
    let qq = c.q as i64;
    let pts: Vec<(Q, Q)> = c.vals.iter().enumerate().filter_map(|(j, v)| v.map(|v| (q(qq.pow(j as u32)), v))).collect();
    if pts.len() < 2 {
        return Ok(NewtonPolygon::default());
    }
    newton_polygon(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::pink_delta1;
    use crate::session::{Ctx, SessionConfig};

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(64)).build().unwrap()
    }

    fn carlitz(c: &Ctx) -> TModuleSpec {
        TModuleSpec::carlitz(&ValSeries::u_pow(c, q(-1)).unwrap()).unwrap()
    }

    #[test]
    fn carlitz_coefficients() {
        let c = ctx();
        let spec = carlitz(&c);
        let ex = exp_coefficients(&spec, 4).unwrap();
        let want: Vec<Option<Q>> = (0..=4).map(|j| Some(q(j * 2i64.pow(j as u32)))).collect();
        assert_eq!(ex.vals, want);
        assert!(ex.bound_holds());
        assert_eq!(ex.bounds[3], q(24));
        // closed form e_j = e_{j-1}^q / (θ^{q^j} - θ)
        let th = &spec.theta;
        let e2 = ex.e[1].get(0, 0).frobenius().div(&th.frobenius_k(2).sub(th)).unwrap();
        assert!(e2.agrees(ex.e[2].get(0, 0)));
        assert!(functional_equation_check(&spec, &ex).zero);
    }

    #[test]
    fn perturbed_coefficient_is_caught() {
        let c = ctx();
        let spec = carlitz(&c);
        let mut ex = exp_coefficients(&spec, 3).unwrap();
        let bump = ValSeries::u_pow(&c, q(10)).unwrap();
        ex.e[1] = ex.e[1].add(&Mat::scalar(&bump, 1));
        let rep = functional_equation_check(&spec, &ex);
        assert!(!rep.zero);
        assert_eq!(rep.defect_vals[0], None);
    }

    #[test]
    fn kernel_polygon() {
        let c = ctx();
        let spec = carlitz(&c);
        let ex = exp_coefficients(&spec, 4).unwrap();
        let poly = kernel_valuations(&spec, &ex).unwrap();
        assert_eq!(poly.slopes(), vec![q(2), q(3), q(4), q(5)]);
        assert_eq!(poly.segments[0].length, q(1));
        let one = kernel_valuations(&spec, &exp_coefficients(&spec, 1).unwrap()).unwrap();
        assert_eq!(one.slopes(), vec![q(2)]);
    }

    #[test]
    fn trivial_module() {
        let c = ctx();
        let th = ValSeries::u_pow(&c, q(-1)).unwrap();
        let spec = TModuleSpec::new(vec![Mat::scalar(&th, 1)], th).unwrap();
        let ex = exp_coefficients(&spec, 3).unwrap();
        assert!(ex.e[1..].iter().all(|m| m.is_exact_zero()));
        assert!(kernel_valuations(&spec, &ex).unwrap().segments.is_empty());
        assert!(functional_equation_check(&spec, &ex).zero);
    }

    #[test]
    fn apply_matches_direct_sum() {
        let c = ctx();
        let spec = carlitz(&c);
        let ex = exp_coefficients(&spec, 4).unwrap();
        let z = ValSeries::u_pow(&c, q(3)).unwrap();
        let got = exp_apply(&ex, std::slice::from_ref(&z), q(40)).unwrap();
        let e1 = ex.e[1].get(0, 0);
        let direct = z.add(&e1.mul(&z.frobenius())).add(&ex.e[2].get(0, 0).mul(&z.frobenius_k(2)));
        assert!(got[0].sub(&direct).val_lb().is_none_or(|v| v >= q(40)));
        assert!(exp_apply(&ex, &[ValSeries::zero(&c)], q(40)).unwrap()[0].is_exact_zero());
        // exp(θz) = φ_t(exp z)
        let lhs = exp_apply(&ex, &[spec.theta.mul(&z)], q(30)).unwrap();
        let rhs = spec.theta.mul(&got[0]).add(&got[0].frobenius());
        assert!(lhs[0].sub(&rhs).val_lb().is_none_or(|v| v >= q(30)));
        let far = ValSeries::u_pow(&c, q(-8)).unwrap();
        assert!(matches!(exp_apply(&ex, &[far], q(40)), Err(Error::TailNotDominated { .. })));
    }

    #[test]
    fn pink_nilpotent_iteration() {
        let c = SessionConfig::new(2, 1).with_prec(q(48)).build().unwrap();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let d1 = pink_delta1(&c, &u, &u, &ValSeries::one(&c)).unwrap();
        let spec = TModuleSpec::pink(&d1, &u).unwrap();
        let ex = exp_coefficients(&spec, 4).unwrap();
        assert!(ex.passes[1..].iter().any(|&p| p > 1));
        assert!(ex.bound_holds());
        assert!(functional_equation_check(&spec, &ex).zero);
        let split = exp_coefficients_split(&spec, 4).unwrap();
        assert!(ex.e.iter().zip(&split.e).all(|(a, b)| a.agrees(b)));
    }
}
