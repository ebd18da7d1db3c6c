//! Truncated Tate series Σ a_n t^n and matrices over them.
//!
//! A value with t-precision N stores a_0..a_N; everything is computed
//! modulo t^{N+1}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rat::Q;
use crate::series::ValSeries;
use crate::session::Ctx;

#[derive(Clone, Debug, PartialEq)]
pub struct TateElem {
    coeffs: Vec<ValSeries>,
}

impl TateElem {
    pub fn new(coeffs: Vec<ValSeries>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DegenerateInput("a Tate element needs a constant term".into()));
        }
        Ok(TateElem { coeffs })
    }

    pub fn zero(ctx: &Ctx, n: usize) -> Self {
        TateElem { coeffs: vec![ValSeries::zero(ctx); n + 1] }
    }

    pub fn constant(x: &ValSeries, n: usize) -> Self {
        let mut e = Self::zero(x.ctx(), n);
        e.coeffs[0] = x.clone();
        e
    }

    pub fn t(ctx: &Ctx, n: usize) -> Self {
        let mut e = Self::zero(ctx, n);
        if n >= 1 {
            e.coeffs[1] = ValSeries::one(ctx);
        }
        e
    }

    pub fn ctx(&self) -> &Ctx {
        self.coeffs[0].ctx()
    }

    pub fn tprec(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[ValSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &ValSeries {
        &self.coeffs[n]
    }

    pub fn truncate_t(&self, n: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.truncate(n + 1);
        TateElem { coeffs: c }
    }

    fn zip(&self, o: &Self, f: impl Fn(&ValSeries, &ValSeries) -> ValSeries) -> Self {
        let n = self.tprec().min(o.tprec());
        TateElem { coeffs: (0..=n).map(|i| f(&self.coeffs[i], &o.coeffs[i])).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        TateElem { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn scale(&self, x: &ValSeries) -> Self {
        TateElem { coeffs: self.coeffs.iter().map(|c| c.mul(x)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.tprec().min(o.tprec());
        let ctx = self.ctx();
        let coeffs = (0..=n)
            .map(|k| (0..=k).fold(ValSeries::zero(ctx), |acc, i| acc.add(&self.coeffs[i].mul(&o.coeffs[k - i]))))
            .collect();
        TateElem { coeffs }
    }

    /// σ acts on the coefficients only.
    pub fn sigma(&self) -> Self {
        TateElem { coeffs: self.coeffs.iter().map(|c| c.frobenius()).collect() }
    }

    /// Gauss norm as (valuation, first index attaining it); None when zero
    /// to precision.
    pub fn gauss_val(&self) -> Option<(Q, usize)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.val().map(|v| (v, i)))
            .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero_to_prec())
    }

    /// Whether a_n → 0 is plausible from the stored range: valuations are
    /// non-decreasing over the second half of the stored terms.
    pub fn tail_decays(&self) -> bool {
        let n = self.coeffs.len();
        let vals: Vec<Option<Q>> = self.coeffs[n / 2..].iter().map(|c| c.val()).collect();
        non_decreasing(&vals)
    }
}

/// None plays the role of +∞.
fn non_decreasing(vals: &[Option<Q>]) -> bool {
    vals.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b >= a,
        (None, Some(_)) => false,
        _ => true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    #[serde(with = "crate::report::qser")]
    pub rho_log: Q,
    /// val(a_n) - n ρlog, i.e. -log|a_n ρ^n|; "inf" for zero terms.
    #[serde(with = "crate::report::qoptvec")]
    pub log_terms: Vec<Option<Q>>,
    /// First index from which |a_n| ρ^n is non-increasing.
    pub tail_start: usize,
    pub eventually_nonincreasing: bool,
}

/// Advisory finite-range check that |a_n| ρ^n is eventually bounded, with
/// ρ = |u|^{-ρlog}.
pub fn entire_growth_check(x: &TateElem, rho_log: Q) -> Result<GrowthReport> {
    if x.tprec() < 4 {
        return Err(Error::DegenerateInput("growth check needs t-precision at least 4".into()));
    }
    let log_terms: Vec<Option<Q>> =
        x.coeffs.iter().enumerate().map(|(n, c)| c.val().map(|v| v - rho_log * Q::from_integer(n as i64))).collect();
    let mut tail_start = log_terms.len() - 1;
    while tail_start > 0 && non_decreasing(&log_terms[tail_start - 1..]) {
        tail_start -= 1;
    }
    let eventually_nonincreasing = tail_start <= x.tprec() / 2;
    Ok(GrowthReport { rho_log, log_terms, tail_start, eventually_nonincreasing })
}

/// Matrix over truncated Tate series, stored by t-level: M = Σ M_n t^n.
#[derive(Clone, Debug, PartialEq)]
pub struct TateMatrix {
    levels: Vec<Mat>,
}

impl TateMatrix {
    pub fn from_levels(levels: Vec<Mat>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::DegenerateInput("a Tate matrix needs a constant term".into()));
        };
        let (r, c) = (first.rows(), first.cols());
        if levels.iter().any(|m| m.rows() != r || m.cols() != c) {
            return Err(Error::DimensionMismatch("levels of different shapes".into()));
        }
        Ok(TateMatrix { levels })
    }

    /// Pads or cuts the level list to t-precision n.
    pub fn from_levels_padded(mut levels: Vec<Mat>, n: usize) -> Result<Self> {
        let first = levels.first().ok_or_else(|| Error::DegenerateInput("no levels".into()))?.clone();
        levels.resize(n + 1, Mat::zero(first.ctx(), first.rows(), first.cols()));
        Self::from_levels(levels)
    }

    pub fn constant(m: &Mat, n: usize) -> Self {
        let mut levels = vec![Mat::zero(m.ctx(), m.rows(), m.cols()); n + 1];
        levels[0] = m.clone();
        TateMatrix { levels }
    }

    pub fn identity(ctx: &Ctx, r: usize, n: usize) -> Self {
        Self::constant(&Mat::identity(ctx, r), n)
    }

    pub fn zero(ctx: &Ctx, rows: usize, cols: usize, n: usize) -> Self {
        TateMatrix { levels: vec![Mat::zero(ctx, rows, cols); n + 1] }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: &[TateElem]) -> Result<Self> {
        if entries.len() != rows * cols || entries.is_empty() {
            return Err(Error::DimensionMismatch("entry count".into()));
        }
        let n = entries.iter().map(|e| e.tprec()).min().unwrap();
        let levels = (0..=n)
            .map(|k| Mat::new(rows, cols, entries.iter().map(|e| e.coeff(k).clone()).collect()))
            .collect::<Result<_>>()?;
        Ok(TateMatrix { levels })
    }

    pub fn entry(&self, i: usize, j: usize) -> TateElem {
        TateElem { coeffs: self.levels.iter().map(|m| m.get(i, j).clone()).collect() }
    }

    pub fn ctx(&self) -> &Ctx {
        self.levels[0].ctx()
    }

    pub fn rows(&self) -> usize {
        self.levels[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.levels[0].cols()
    }

    pub fn tprec(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Mat] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &Mat {
        &self.levels[n]
    }

    pub fn set_level(&mut self, n: usize, m: Mat) {
        self.levels[n] = m;
    }

    pub fn truncate_t(&self, n: usize) -> Self {
        TateMatrix { levels: self.levels[..=n.min(self.tprec())].to_vec() }
    }

    pub fn map_levels(&self, f: impl Fn(&Mat) -> Mat) -> Self {
        TateMatrix { levels: self.levels.iter().map(f).collect() }
    }

    fn zip(&self, o: &Self, f: impl Fn(&Mat, &Mat) -> Mat) -> Self {
        let n = self.tprec().min(o.tprec());
        TateMatrix { levels: (0..=n).map(|k| f(&self.levels[k], &o.levels[k])).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        self.map_levels(|m| m.neg())
    }

    pub fn scale(&self, x: &ValSeries) -> Self {
        self.map_levels(|m| m.scale(x))
    }

    /// # Panics
    /// If the inner dimensions differ.
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.tprec().min(o.tprec());
        let levels = (0..=n)
            .map(|k| {
                (0..=k).fold(Mat::zero(self.ctx(), self.rows(), o.cols()), |acc, i| {
                    if self.levels[i].is_exact_zero() || o.levels[k - i].is_exact_zero() {
                        acc
                    } else {
                        acc.add(&self.levels[i].mul(&o.levels[k - i]))
                    }
                })
            })
            .collect();
        TateMatrix { levels }
    }

    /// Multiplication by t^k.
    pub fn shift_t(&self, k: usize) -> Self {
        let z = Mat::zero(self.ctx(), self.rows(), self.cols());
        let n = self.tprec();
        let levels = (0..=n).map(|i| if i < k { z.clone() } else { self.levels[i - k].clone() }).collect();
        TateMatrix { levels }
    }

    pub fn sigma(&self) -> Self {
        self.map_levels(|m| m.sigma())
    }

    pub fn inv_sigma(&self) -> Result<Self> {
        Ok(TateMatrix { levels: self.levels.iter().map(|m| m.inv_sigma()).collect::<Result<_>>()? })
    }

    pub fn transpose(&self) -> Self {
        self.map_levels(|m| m.transpose())
    }

    pub fn column(&self, j: usize) -> Self {
        self.map_levels(|m| m.column(j))
    }

    /// Gauss norm valuation over all entries and levels.
    pub fn norm_val(&self) -> Option<Q> {
        self.levels.iter().filter_map(|m| m.val()).min()
    }

    pub fn level_vals(&self) -> Vec<Option<Q>> {
        self.levels.iter().map(|m| m.val()).collect()
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.levels.iter().all(|m| m.is_zero_to_prec())
    }

    pub fn agrees(&self, o: &Self) -> bool {
        let n = self.tprec().min(o.tprec());
        (0..=n).all(|k| self.levels[k].agrees(&o.levels[k]))
    }

    /// Inverse modulo t^{N+1}: M = M_0 (Id + M_0^{-1} (M - M_0)) and the
    /// second factor is inverted by a terminating Neumann series.
    pub fn inv(&self) -> Result<Self> {
        let m0inv = self.levels[0].inv()?;
        let n = self.tprec();
        let r = self.rows();
        let ctx = self.ctx().clone();
        let mut x = self.map_levels(|m| m0inv.mul(m));
        x.levels[0] = Mat::zero(&ctx, r, r);
        let mut term = Self::identity(&ctx, r, n);
        let mut sum = term.clone();
        for _ in 0..n {
            term = term.mul(&x).neg();
            sum = sum.add(&term);
        }
        let out = sum.mul(&Self::constant(&m0inv, n));
        debug_assert!(out.mul(self).sub(&Self::identity(&ctx, r, n)).is_zero_to_prec());
        Ok(out)
    }

    /// Laplace expansion over Tate entries.
    pub fn det(&self) -> Result<TateElem> {
        if self.rows() != self.cols() {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        let r = self.rows();
        let entries: Vec<TateElem> = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).map(|(i, j)| self.entry(i, j)).collect();
        Ok(tdet(&entries, r))
    }
}

fn tdet(m: &[TateElem], n: usize) -> TateElem {
    if n == 1 {
        return m[0].clone();
    }
    let mut acc = TateElem::zero(m[0].ctx(), m[0].tprec());
    for j in 0..n {
        let minor: Vec<TateElem> =
            (1..n).flat_map(|i| (0..n).filter(move |&k| k != j).map(move |k| i * n + k)).map(|i| m[i].clone()).collect();
        let term = m[j].mul(&tdet(&minor, n - 1));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::session::SessionConfig;

    fn ctx() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(16)).build().unwrap()
    }

    #[test]
    fn sigma_rules() {
        let c = ctx();
        let t = TateElem::t(&c, 3);
        assert_eq!(t.sigma(), t);
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let ut = t.scale(&u).sigma();
        assert_eq!(ut.coeff(1).to_literal(), "2^1 {2:1} prec:exact");
    }

    #[test]
    fn growth_of_geometric_coefficients() {
        let c = ctx();
        let coeffs = (0..8).map(|n| ValSeries::u_pow(&c, q(n)).unwrap()).collect();
        let x = TateElem::new(coeffs).unwrap();
        let rep = entire_growth_check(&x, Q::new(1, 2)).unwrap();
        assert!(rep.eventually_nonincreasing);
        assert_eq!(rep.tail_start, 0);
        let k = TateElem::constant(&ValSeries::one(&c), 6);
        let k = k.add(&TateElem::new(vec![ValSeries::one(&c); 7]).unwrap());
        let ones = TateElem::new(vec![ValSeries::one(&c); 7]).unwrap();
        assert!(entire_growth_check(&ones, q(0)).unwrap().eventually_nonincreasing);
        assert!(!entire_growth_check(&ones, q(1)).unwrap().eventually_nonincreasing);
        assert!(entire_growth_check(&k, q(-1)).unwrap().eventually_nonincreasing);
    }

    #[test]
    fn neumann_inverse() {
        let c = ctx();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let one = ValSeries::one(&c);
        let d1 = Mat::new(2, 2, vec![u.clone(), one.clone(), ValSeries::zero(&c), u.clone()]).unwrap();
        let m = TateMatrix::from_levels(vec![Mat::identity(&c, 2), d1]).unwrap();
        let m = TateMatrix::from_levels_padded(m.levels().to_vec(), 5).unwrap();
        let inv = m.inv().unwrap();
        assert!(inv.mul(&m).agrees(&TateMatrix::identity(&c, 2, 5)));
        // det(Id + tΔ_1) = (1 + u t)^2 = 1 + u^2 t^2 in characteristic 2
        let det = m.det().unwrap();
        assert!(det.coeff(1).is_exact_zero());
        assert_eq!(det.coeff(2).to_literal(), "2^1 {2:1} prec:exact");
    }
}
