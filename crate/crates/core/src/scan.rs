//! Valuation-grid scans over parametrized families with closed-form oracles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::mat::Mat;
use crate::rat::{fmt_q, q, Q};
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tau::{triviality_verdict, RootPolicy, TauSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub name: String,
    #[serde(with = "crate::report::qvec")]
    pub values: Vec<Q>,
}

impl Axis {
    pub fn new(name: &str, values: Vec<Q>) -> Self {
        Axis { name: name.into(), values }
    }

    pub fn range(name: &str, lo: i64, hi: i64) -> Self {
        Self::new(name, (lo..=hi).map(q).collect())
    }
}

/// Entry positions (level, row, col) scaled by u^v along a custom axis.
pub type Positions = Vec<(usize, usize, usize)>;

#[derive(Debug, Clone)]
pub enum Family {
    /// τ = (a + b t)σ with a = u^{x}, b = u^{y}.
    Example56,
    /// Δ = Id + tΔ_1 subject to a + d + 2ζ = 0, ad - bc = ζ², with
    /// val(a) and val(b) on the axes and ζ = u^{zeta_val}.
    Pink { zeta_val: Q, a_lead: Fe },
    Custom { base: TauSpec, positions: Vec<Positions> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Example56 => "example56",
            Family::Pink { .. } => "pink",
            Family::Custom { .. } => "custom",
        }
    }
}

pub fn example56_spec(ctx: &Ctx, va: Q, vb: Q) -> Result<TauSpec> {
    let a = ValSeries::u_pow(ctx, va)?;
    let b = ValSeries::u_pow(ctx, vb)?;
    TauSpec::from_levels(vec![Mat::scalar(&a, 1), Mat::scalar(&b, 1)])
}

/// Δ_1 of the Pink family at the given point; c is solved from the relations.
pub fn pink_delta1(ctx: &Ctx, zeta: &ValSeries, a: &ValSeries, b: &ValSeries) -> Result<Mat> {
    let f = &ctx.field;
    let two = ValSeries::constant(ctx, f.from_int(2));
    let d = a.add(&two.mul(zeta)).neg();
    let c = a.mul(&d).sub(&zeta.mul(zeta)).div(b)?;
    Mat::new(2, 2, vec![a.clone(), b.clone(), c, d])
}

pub fn pink_spec(ctx: &Ctx, delta1: &Mat) -> Result<TauSpec> {
    TauSpec::from_levels(vec![Mat::identity(ctx, 2), delta1.clone()])
}

/// All elements of GL_2(F_q), as [a, b, c, d] row-major.
pub fn gl2(ctx: &Ctx) -> Vec<[Fe; 4]> {
    let f = &ctx.field;
    let fq = ctx.fq();
    let mut out = Vec::new();
    for &a in &fq {
        for &b in &fq {
            for &c in &fq {
                for &d in &fq {
                    if f.sub(f.mul(a, d), f.mul(b, c)) != 0 {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Whether some U^{-1}Δ_1U has |a|, |c|, |d| < 1.
pub fn pink_oracle(delta1: &Mat) -> Result<bool> {
    let ctx = delta1.ctx().clone();
    for g in gl2(&ctx) {
        let u = Mat::from_fe(&ctx, 2, 2, &g)?;
        let m = u.inv()?.mul(delta1).mul(&u);
        let small = |i: usize, j: usize| m.get(i, j).val_lb().is_none_or(|v| v > q(0));
        if small(0, 0) && small(1, 0) && small(1, 1) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    #[serde(with = "crate::report::qvec")]
    pub coords: Vec<Q>,
    /// T, D or U; None for infeasible cells.
    pub verdict: Option<char>,
    pub oracle: Option<char>,
    pub agree: Option<bool>,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    pub family: String,
    pub axes: Vec<Axis>,
    pub horizon: usize,
    pub cells: Vec<Cell>,
    /// Indices of certified cells contradicting the oracle.
    pub disagreements: Vec<usize>,
    pub undetermined: Vec<usize>,
    pub infeasible: Vec<usize>,
}

impl RegionMap {
    pub fn to_tsv(&self) -> String {
        let mut s: String = self.axes.iter().map(|a| format!("{}\t", a.name)).collect();
        s.push_str("verdict\toracle\tagree\n");
        let opt = |c: Option<char>| c.map_or("-".to_string(), |c| c.to_string());
        for cell in &self.cells {
            for x in &cell.coords {
                s.push_str(&fmt_q(x));
                s.push('\t');
            }
            let agree = match cell.agree {
                Some(true) => "yes",
                Some(false) => "NO",
                None => "-",
            };
            s.push_str(&format!("{}\t{}\t{}\n", opt(cell.verdict), opt(cell.oracle), agree));
        }
        s
    }

    pub fn count(&self, v: char) -> usize {
        self.cells.iter().filter(|c| c.verdict == Some(v)).count()
    }
}

fn cell_spec(ctx: &Ctx, family: &Family, coords: &[Q]) -> Result<(TauSpec, Option<char>)> {
    match family {
        Family::Example56 => {
            let spec = example56_spec(ctx, coords[0], coords[1])?;
            let oracle = if coords[1] > coords[0] { 'T' } else { 'D' };
            Ok((spec, Some(oracle)))
        }
        Family::Pink { zeta_val, a_lead } => {
            let zeta = ValSeries::u_pow(ctx, *zeta_val)?;
            let a = ValSeries::monomial(ctx, *a_lead, coords[0])?;
            let b = ValSeries::u_pow(ctx, coords[1])?;
            let d1 = pink_delta1(ctx, &zeta, &a, &b)?;
            if d1.get(1, 1).val() != Some(coords[0]) {
                return Err(Error::InfeasibleCell(format!("val(d) differs from val(a) = {}", fmt_q(&coords[0]))));
            }
            let oracle = if pink_oracle(&d1)? { 'T' } else { 'D' };
            Ok((pink_spec(ctx, &d1)?, Some(oracle)))
        }
        Family::Custom { base, positions } => {
            let mut levels = base.delta.levels().to_vec();
            for (axis, pos) in positions.iter().enumerate() {
                let s = ValSeries::u_pow(ctx, coords[axis])?;
                for &(lvl, i, j) in pos {
                    let m = levels.get_mut(lvl).ok_or_else(|| Error::DimensionMismatch(format!("level {lvl}")))?;
                    let x = m.get(i, j).mul(&s);
                    m.set(i, j, x);
                }
            }
            Ok((TauSpec::from_levels(levels)?, None))
        }
    }
}

fn grid(axes: &[Axis]) -> Vec<Vec<Q>> {
    axes.iter().fold(vec![vec![]], |acc, ax| {
        acc.iter().flat_map(|p| ax.values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect()
    })
}

/// Runs the triviality verdict on every grid cell. Errors inside a cell
/// leave it undetermined with a note; infeasible cells are marked.
pub fn scan(ctx: &Ctx, family: &Family, axes: &[Axis], horizon: usize, policy: RootPolicy) -> Result<RegionMap> {
    let want = match family {
        Family::Custom { positions, .. } => positions.len(),
        _ => 2,
    };
    if axes.len() != want {
        return Err(Error::DimensionMismatch(format!("{} family needs {want} axes", family.name())));
    }
    let mut map = RegionMap {
        family: family.name().into(),
        axes: axes.to_vec(),
        horizon,
        cells: Vec::new(),
        disagreements: Vec::new(),
        undetermined: Vec::new(),
        infeasible: Vec::new(),
    };
    for (idx, coords) in grid(axes).into_iter().enumerate() {
        let mut cell = Cell { coords: coords.clone(), verdict: None, oracle: None, agree: None, rank: 0, note: None };
        match cell_spec(ctx, family, &coords) {
            Err(Error::InfeasibleCell(msg)) => {
                cell.note = Some(msg);
                map.infeasible.push(idx);
            }
            Err(e) => return Err(e),
            Ok((spec, oracle)) => {
                cell.oracle = oracle;
                match triviality_verdict(&spec, horizon, policy) {
                    Ok(rep) => {
                        let v = rep.verdict.code();
                        cell.verdict = Some(v);
                        cell.rank = rep.rank;
                        if v == 'U' {
                            map.undetermined.push(idx);
                        } else if let Some(o) = oracle {
                            cell.agree = Some(o == v);
                            if o != v {
                                map.disagreements.push(idx);
                            }
                        }
                    }
                    Err(e) => {
                        cell.verdict = Some('U');
                        cell.note = Some(e.to_string());
                        map.undetermined.push(idx);
                    }
                }
            }
        }
        map.cells.push(cell);
    }
    Ok(map)
}
