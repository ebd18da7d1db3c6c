//! Dense matrices over `ValSeries`.

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::rat::Q;
use crate::series::{min_val_lb, ValSeries};
use crate::session::Ctx;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<ValSeries>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<ValSeries>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zero(ctx: &Ctx, rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![ValSeries::zero(ctx); rows * cols] }
    }

    pub fn identity(ctx: &Ctx, r: usize) -> Self {
        let mut m = Self::zero(ctx, r, r);
        for i in 0..r {
            m.data[i * r + i] = ValSeries::one(ctx);
        }
        m
    }

    /// Matrix of constants, row-major.
    pub fn from_fe(ctx: &Ctx, rows: usize, cols: usize, codes: &[Fe]) -> Result<Self> {
        Self::new(rows, cols, codes.iter().map(|&c| ValSeries::constant(ctx, c)).collect())
    }

    pub fn scalar(x: &ValSeries, r: usize) -> Self {
        let mut m = Self::zero(x.ctx(), r, r);
        for i in 0..r {
            m.data[i * r + i] = x.clone();
        }
        m
    }

    pub fn ctx(&self) -> &Ctx {
        self.data[0].ctx()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ValSeries {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: ValSeries) {
        self.data[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[ValSeries] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&ValSeries) -> ValSeries) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&ValSeries) -> Result<ValSeries>) -> Result<Self> {
        let data = self.data.iter().map(f).collect::<Result<_>>()?;
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    fn same_shape(&self, o: &Self) {
        assert!(self.rows == o.rows && self.cols == o.cols, "matrix shapes differ");
    }

    /// # Panics
    /// If the shapes differ.
    pub fn add(&self, o: &Self) -> Self {
        self.same_shape(o);
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// # Panics
    /// If the shapes differ.
    pub fn sub(&self, o: &Self) -> Self {
        self.same_shape(o);
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| x.neg())
    }

    pub fn scale(&self, c: &ValSeries) -> Self {
        self.map(|x| x.mul(c))
    }

    /// # Panics
    /// If the inner dimensions differ.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        let ctx = self.ctx();
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = ValSeries::zero(ctx);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
                }
                data.push(acc);
            }
        }
        Mat { rows: self.rows, cols: o.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Mat { rows: self.cols, cols: self.rows, data }
    }

    pub fn sigma(&self) -> Self {
        self.map(|x| x.frobenius())
    }

    pub fn sigma_k(&self, k: u32) -> Self {
        self.map(|x| x.frobenius_k(k))
    }

    pub fn inv_sigma(&self) -> Result<Self> {
        self.try_map(|x| x.inv_frobenius())
    }

    pub fn truncate(&self, p: Q) -> Self {
        self.map(|x| x.truncate(p))
    }

    pub fn with_dominant(&self, flag: bool) -> Self {
        self.map(|x| x.clone().with_dominant(flag))
    }

    pub fn dominant_only(&self) -> bool {
        self.data.iter().any(|x| x.dominant_only())
    }

    /// Minimal entry valuation; None when every entry is zero to precision.
    pub fn val(&self) -> Option<Q> {
        self.data.iter().filter_map(|x| x.val()).min()
    }

    pub fn val_lb(&self) -> Option<Q> {
        min_val_lb(&self.data)
    }

    pub fn prec(&self) -> Option<Q> {
        self.data.iter().filter_map(|x| x.prec()).min()
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.data.iter().all(|x| x.is_zero_to_prec())
    }

    pub fn is_exact_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_exact_zero())
    }

    /// Entries as F_q constants, if they all are.
    pub fn as_fq(&self) -> Option<Vec<Fe>> {
        self.data.iter().map(|x| if x.in_fq() { x.as_constant() } else { None }).collect()
    }

    pub fn residue(&self) -> Vec<Fe> {
        self.data.iter().map(|x| x.residue()).collect()
    }

    pub fn tower_degree(&self) -> u32 {
        self.data.iter().fold(1, |acc, x| num_integer::lcm(acc, x.tower_degree()))
    }

    pub fn column(&self, j: usize) -> Mat {
        let data = (0..self.rows).map(|i| self.get(i, j).clone()).collect();
        Mat { rows: self.rows, cols: 1, data }
    }

    pub fn from_columns(cols: &[Mat]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.rows);
        if cols.iter().any(|c| c.rows != rows || c.cols != 1) {
            return Err(Error::DimensionMismatch("columns of unequal height".into()));
        }
        let mut data = Vec::with_capacity(rows * cols.len());
        for i in 0..rows {
            for c in cols {
                data.push(c.data[i].clone());
            }
        }
        Self::new(rows, cols.len(), data)
    }

    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        let mut data = Vec::new();
        for i in r0..r1 {
            for j in c0..c1 {
                data.push(self.get(i, j).clone());
            }
        }
        Mat { rows: r1 - r0, cols: c1 - c0, data }
    }

    /// Laplace expansion; fine for the small ranks used here and free of
    /// divisions, so exact inputs give exact results.
    pub fn det(&self) -> Result<ValSeries> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        Ok(det_rec(self))
    }

    /// Gauss-Jordan elimination, pivoting on the entry of least valuation.
    pub fn inv(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let ctx = self.ctx().clone();
        let mut a = self.clone();
        let mut b = Self::identity(&ctx, n);
        for col in 0..n {
            let piv = (col..n)
                .filter_map(|i| a.get(i, col).val().map(|v| (v, i)))
                .min()
                .map(|(_, i)| i)
                .ok_or(Error::SingularMatrix)?;
            a.swap_rows(col, piv);
            b.swap_rows(col, piv);
            let pinv = a.get(col, col).invert()?;
            a.scale_row(col, &pinv);
            b.scale_row(col, &pinv);
            for i in 0..n {
                if i == col || a.get(i, col).is_exact_zero() {
                    continue;
                }
                let f = a.get(i, col).clone();
                a.axpy_row(i, col, &f);
                b.axpy_row(i, col, &f);
            }
        }
        Ok(b)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for k in 0..self.cols {
                self.data.swap(i * self.cols + k, j * self.cols + k);
            }
        }
    }

    fn scale_row(&mut self, i: usize, c: &ValSeries) {
        for k in 0..self.cols {
            let x = self.get(i, k).mul(c);
            self.set(i, k, x);
        }
    }

    /// row_i -= f * row_j
    fn axpy_row(&mut self, i: usize, j: usize, f: &ValSeries) {
        for k in 0..self.cols {
            let x = self.get(i, k).sub(&f.mul(self.get(j, k)));
            self.set(i, k, x);
        }
    }

    /// Entrywise agreement within the joint precision.
    pub fn agrees(&self, o: &Self) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.data.iter().zip(&o.data).all(|(a, b)| a.agrees(b))
    }
}

fn det_rec(m: &Mat) -> ValSeries {
    let n = m.rows;
    match n {
        1 => m.get(0, 0).clone(),
        2 => m.get(0, 0).mul(m.get(1, 1)).sub(&m.get(0, 1).mul(m.get(1, 0))),
        _ => {
            let mut acc = ValSeries::zero(m.ctx());
            for j in 0..n {
                if m.get(0, j).is_exact_zero() {
                    continue;
                }
                let minor_data = (1..n)
                    .flat_map(|i| (0..n).filter(move |&k| k != j).map(move |k| (i, k)))
                    .map(|(i, k)| m.get(i, k).clone())
                    .collect();
                let minor = Mat { rows: n - 1, cols: n - 1, data: minor_data };
                let term = m.get(0, j).mul(&det_rec(&minor));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::session::SessionConfig;

    #[test]
    fn inverse_round_trip() {
        let c = SessionConfig::new(3, 1).with_prec(q(12)).build().unwrap();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let one = ValSeries::one(&c);
        let m = Mat::new(2, 2, vec![u.clone(), one.clone(), one.add(&one), u.mul(&u)]).unwrap();
        let inv = m.inv().unwrap();
        assert!(m.mul(&inv).sub(&Mat::identity(&c, 2)).is_zero_to_prec());
        let det = m.det().unwrap();
        assert_eq!(det.to_literal(), "3^1 {0:1, 3:1} prec:exact");
    }

    #[test]
    fn singular() {
        let c = SessionConfig::new(2, 1).build().unwrap();
        let m = Mat::from_fe(&c, 2, 2, &[1, 1, 1, 1]).unwrap();
        assert!(matches!(m.inv(), Err(Error::SingularMatrix | Error::DegenerateInput(_))));
        assert!(m.det().unwrap().is_exact_zero());
    }

    #[test]
    fn three_by_three_det() {
        let c = SessionConfig::new(3, 1).build().unwrap();
        let m = Mat::from_fe(&c, 3, 3, &[1, 2, 0, 0, 1, 1, 1, 0, 1]).unwrap();
        // 1*(1) - 2*(0 - 1) = 3 = 0 mod 3
        assert!(m.det().unwrap().is_exact_zero());
    }
}
