//! Truncated generalized Laurent series in u with rational exponents.
//!
//! A value is a finite sum of terms c·u^e plus an absolute cutoff: every
//! exponent at or above `prec` is unknown. `prec = None` means exact.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::rat::{check_den, fmt_q, parse_q, q, qmin, Q};
use crate::session::Ctx;

#[derive(Clone)]
pub struct ValSeries {
    ctx: Ctx,
    terms: Vec<(Q, Fe)>,
    prec: Option<Q>,
    dominant: bool,
}

/// Outcome of comparing values known only to finite precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    True,
    False,
    Indeterminate,
}

type Terms = Vec<(Q, Fe)>;

fn cut_terms(terms: &mut Terms, cut: Option<Q>) {
    if let Some(c) = cut {
        terms.retain(|(e, _)| *e < c);
    }
}

impl ValSeries {
    /// Builds a series from arbitrary terms: sorts, merges equal exponents,
    /// drops zero coefficients and terms at or beyond the cutoff.
    pub fn from_terms(ctx: &Ctx, terms: impl IntoIterator<Item = (Q, Fe)>, prec: Option<Q>) -> Result<Self> {
        let f = &ctx.field;
        let mut map: BTreeMap<Q, Fe> = BTreeMap::new();
        for (e, c) in terms {
            check_den(&e, ctx.denom_cap())?;
            if c >= f.size() {
                return Err(Error::DegenerateInput(format!("coefficient code {c} outside the field")));
            }
            let slot = map.entry(e).or_insert(0);
            *slot = f.add(*slot, c);
        }
        if let Some(p) = &prec {
            check_den(p, ctx.denom_cap())?;
        }
        let mut terms: Terms = map.into_iter().filter(|(_, c)| *c != 0).collect();
        cut_terms(&mut terms, prec);
        Ok(ValSeries { ctx: ctx.clone(), terms, prec, dominant: false })
    }

    fn raw(ctx: &Ctx, terms: Terms, prec: Option<Q>, dominant: bool) -> Self {
        let mut terms = terms;
        cut_terms(&mut terms, prec);
        ValSeries { ctx: ctx.clone(), terms, prec, dominant }
    }

    pub fn zero(ctx: &Ctx) -> Self {
        Self::raw(ctx, vec![], None, false)
    }

    pub fn one(ctx: &Ctx) -> Self {
        Self::constant(ctx, 1)
    }

    pub fn constant(ctx: &Ctx, c: Fe) -> Self {
        let terms = if c == 0 { vec![] } else { vec![(q(0), c)] };
        Self::raw(ctx, terms, None, false)
    }

    /// c·u^e, exact.
    pub fn monomial(ctx: &Ctx, c: Fe, e: Q) -> Result<Self> {
        Self::from_terms(ctx, [(e, c)], None)
    }

    /// u^e, exact.
    pub fn u_pow(ctx: &Ctx, e: Q) -> Result<Self> {
        Self::monomial(ctx, 1, e)
    }

    /// O(u^p): zero known to precision p.
    pub fn big_o(ctx: &Ctx, p: Q) -> Self {
        Self::raw(ctx, vec![], Some(p), false)
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn terms(&self) -> &[(Q, Fe)] {
        &self.terms
    }

    pub fn prec(&self) -> Option<Q> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    pub fn dominant_only(&self) -> bool {
        self.dominant
    }

    pub fn with_dominant(mut self, flag: bool) -> Self {
        self.dominant = flag;
        self
    }

    /// Valuation of the first known term; None when no term is known.
    pub fn val(&self) -> Option<Q> {
        self.terms.first().map(|t| t.0)
    }

    /// Lower bound for the valuation: the valuation if known, else the
    /// cutoff; None stands for +infinity (exact zero).
    pub fn val_lb(&self) -> Option<Q> {
        self.val().or(self.prec)
    }

    pub fn leading(&self) -> Option<(Q, Fe)> {
        self.terms.first().copied()
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.prec.is_none()
    }

    pub fn coeff(&self, e: &Q) -> Fe {
        self.terms.iter().find(|t| t.0 == *e).map_or(0, |t| t.1)
    }

    /// The u^0 coefficient; meaningful when val >= 0.
    pub fn residue(&self) -> Fe {
        self.coeff(&q(0))
    }

    /// True when the value is a known element of the coefficient field.
    pub fn as_constant(&self) -> Option<Fe> {
        if self.prec.is_none_or(|p| p > q(0)) && self.terms.iter().all(|t| t.0.is_zero()) {
            return Some(self.residue());
        }
        None
    }

    /// Whether the value is an exact element of F_q.
    pub fn in_fq(&self) -> bool {
        self.as_constant().is_some_and(|c| self.ctx.in_fq(c))
    }

    /// Degree over F_q of the smallest F_{q^k} holding all coefficients.
    pub fn tower_degree(&self) -> u32 {
        self.terms.iter().fold(1, |acc, t| num_integer::lcm(acc, self.ctx.q_degree(t.1)))
    }

    pub fn truncate(&self, p: Q) -> Self {
        let prec = qmin(self.prec, Some(p));
        Self::raw(&self.ctx, self.terms.clone(), prec, self.dominant)
    }

    pub fn add(&self, y: &Self) -> Self {
        let f = &self.ctx.field;
        let prec = qmin(self.prec, y.prec);
        let mut out = Vec::with_capacity(self.terms.len() + y.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < y.terms.len() {
            let ord = match (self.terms.get(i), y.terms.get(j)) {
                (Some(a), Some(b)) => a.0.cmp(&b.0),
                (Some(_), None) => Ordering::Less,
                _ => Ordering::Greater,
            };
            match ord {
                Ordering::Less => {
                    out.push(self.terms[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(y.terms[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let c = f.add(self.terms[i].1, y.terms[j].1);
                    if c != 0 {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Self::raw(&self.ctx, out, prec, self.dominant || y.dominant)
    }

    pub fn neg(&self) -> Self {
        let f = &self.ctx.field;
        let terms = self.terms.iter().map(|&(e, c)| (e, f.neg(c))).collect();
        Self::raw(&self.ctx, terms, self.prec, self.dominant)
    }

    pub fn sub(&self, y: &Self) -> Self {
        self.add(&y.neg())
    }

    pub fn scale(&self, c: Fe) -> Self {
        if c == 0 {
            return Self::zero(&self.ctx);
        }
        let f = &self.ctx.field;
        let terms = self.terms.iter().map(|&(e, d)| (e, f.mul(c, d))).collect();
        Self::raw(&self.ctx, terms, self.prec, self.dominant)
    }

    /// Multiplication by u^e.
    pub fn shift(&self, e: Q) -> Self {
        let terms = self.terms.iter().map(|&(x, c)| (x + e, c)).collect();
        Self::raw(&self.ctx, terms, self.prec.map(|p| p + e), self.dominant)
    }

    pub fn mul(&self, y: &Self) -> Self {
        if self.is_exact_zero() || y.is_exact_zero() {
            return Self::zero(&self.ctx);
        }
        let bound = |p: Option<Q>, v: Option<Q>| match (p, v) {
            (Some(p), Some(v)) => Some(p + v),
            _ => None,
        };
        let prec = qmin(bound(self.prec, y.val_lb()), bound(y.prec, self.val_lb()));
        let terms = raw_mul(&self.ctx, &self.terms, &y.terms, prec);
        Self::raw(&self.ctx, terms, prec, self.dominant || y.dominant)
    }

    pub fn pow(&self, n: u64) -> Self {
        let mut acc = Self::one(&self.ctx);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse. Non-terminating expansions are cut at
    /// val(result) + session precision.
    pub fn invert(&self) -> Result<Self> {
        let Some((v, c)) = self.leading() else {
            return Err(Error::DegenerateInput("inverse of a value that is zero to precision".into()));
        };
        let f = &self.ctx.field;
        let rel = match self.prec {
            Some(p) => (p - v).min(self.ctx.prec),
            None => self.ctx.prec,
        };
        let cinv = f.inv(c)?;
        // x = c u^v (1 + w)
        let unit: Terms = self.terms.iter().map(|&(e, d)| (e - v, f.mul(d, cinv))).collect();
        let inv_unit = if unit.len() == 1 {
            vec![(q(0), 1)]
        } else {
            unit_inverse(&self.ctx, &unit, rel)
        };
        let prec = if self.is_exact() && unit.len() == 1 { None } else { Some(rel - v) };
        let terms = inv_unit.into_iter().map(|(e, d)| (e - v, f.mul(d, cinv))).collect();
        Ok(Self::raw(&self.ctx, terms, prec, self.dominant))
    }

    pub fn div(&self, y: &Self) -> Result<Self> {
        Ok(self.mul(&y.invert()?))
    }

    /// σ: coefficients to the q-th power, exponents times q.
    pub fn frobenius(&self) -> Self {
        let qq = q(self.ctx.q as i64);
        let terms = self.terms.iter().map(|&(e, c)| (e * qq, self.ctx.frob_q(c))).collect();
        Self::raw(&self.ctx, terms, self.prec.map(|p| p * qq), self.dominant)
    }

    pub fn frobenius_k(&self, k: u32) -> Self {
        (0..k).fold(self.clone(), |x, _| x.frobenius())
    }

    pub fn inv_frobenius(&self) -> Result<Self> {
        let qq = q(self.ctx.q as i64);
        let cap = self.ctx.denom_cap();
        let mut terms = Vec::with_capacity(self.terms.len());
        for &(e, c) in &self.terms {
            let ne = e / qq;
            check_den(&ne, cap)?;
            terms.push((ne, self.ctx.inv_frob_q(c)));
        }
        let prec = match self.prec {
            Some(p) => {
                let np = p / qq;
                check_den(&np, cap)?;
                Some(np)
            }
            None => None,
        };
        Ok(Self::raw(&self.ctx, terms, prec, self.dominant))
    }

    /// Residue-field Frobenius c ↦ c^{q^k} on coefficients, u fixed.
    pub fn residue_frobenius(&self, k: i64) -> Self {
        let f = &self.ctx.field;
        let terms = self.terms.iter().map(|&(e, c)| (e, f.frob(c, k * self.ctx.e() as i64))).collect();
        Self::raw(&self.ctx, terms, self.prec, self.dominant)
    }

    pub fn eq_tri(&self, y: &Self) -> Tri {
        let d = self.sub(y);
        if !d.is_zero_to_prec() {
            Tri::False
        } else if d.is_exact() {
            Tri::True
        } else {
            Tri::Indeterminate
        }
    }

    /// Compares two values as equal up to their joint precision.
    pub fn agrees(&self, y: &Self) -> bool {
        self.sub(y).is_zero_to_prec()
    }

    /// Canonical text literal `q^m {e:c, ...} prec:P`.
    pub fn to_literal(&self) -> String {
        let body: Vec<String> = self.terms.iter().map(|(e, c)| format!("{}:{}", fmt_q(e), c)).collect();
        let prec = self.prec.map_or("exact".to_string(), |p| fmt_q(&p));
        let dom = if self.dominant { " dominant" } else { "" };
        format!("{}^{} {{{}}} prec:{}{}", self.ctx.q, self.tower_degree(), body.join(", "), prec, dom)
    }

    pub fn parse_literal(ctx: &Ctx, s: &str) -> Result<Self> {
        parse_literal(ctx, s)
    }
}

impl fmt::Debug for ValSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl fmt::Display for ValSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}

impl PartialEq for ValSeries {
    fn eq(&self, o: &Self) -> bool {
        self.terms == o.terms && self.prec == o.prec && self.dominant == o.dominant
    }
}

pub(crate) fn raw_mul(ctx: &Ctx, a: &[(Q, Fe)], b: &[(Q, Fe)], cut: Option<Q>) -> Terms {
    let f = &ctx.field;
    let mut map: BTreeMap<Q, Fe> = BTreeMap::new();
    for &(ea, ca) in a {
        if let (Some(c), Some(&(eb0, _))) = (cut, b.first()) {
            if ea + eb0 >= c {
                break;
            }
        }
        for &(eb, cb) in b {
            let e = ea + eb;
            if cut.is_some_and(|c| e >= c) {
                break;
            }
            let slot = map.entry(e).or_insert(0);
            *slot = f.add(*slot, f.mul(ca, cb));
        }
    }
    map.into_iter().filter(|(_, c)| *c != 0).collect()
}

/// Inverse of a unit 1 + w (val w > 0) to relative precision `rel`, by
/// Newton iteration y <- y(2 - xy).
fn unit_inverse(ctx: &Ctx, unit: &[(Q, Fe)], rel: Q) -> Terms {
    let f = &ctx.field;
    let two = f.from_int(2);
    let mut y: Terms = vec![(q(0), 1)];
    loop {
        let xy = raw_mul(ctx, unit, &y, Some(rel));
        // 2 - xy
        let mut corr: BTreeMap<Q, Fe> = xy.into_iter().map(|(e, c)| (e, f.neg(c))).collect();
        let slot = corr.entry(q(0)).or_insert(0);
        *slot = f.add(*slot, two);
        let corr: Terms = corr.into_iter().filter(|(_, c)| *c != 0).collect();
        let next = raw_mul(ctx, &y, &corr, Some(rel));
        if next == y {
            return y;
        }
        y = next;
    }
}

fn parse_literal(ctx: &Ctx, s: &str) -> Result<ValSeries> {
    let err = |col: usize, msg: &str| Error::parse(1, col + 1, msg);
    let s_trim = s.trim_end();
    let open = s_trim.find('{').ok_or_else(|| err(0, "expected '{'"))?;
    let close = s_trim.rfind('}').ok_or_else(|| err(s_trim.len(), "expected '}'"))?;
    if close < open {
        return Err(err(close, "'}' before '{'"));
    }
    let header = s_trim[..open].trim();
    let (qs, ms) = header.split_once('^').ok_or_else(|| err(0, "header must be q^m"))?;
    let qv: u64 = qs.trim().parse().map_err(|_| err(0, "bad q in header"))?;
    let mv: u32 = ms.trim().parse().map_err(|_| err(qs.len() + 1, "bad m in header"))?;
    if qv != ctx.q {
        return Err(err(0, &format!("header q = {qv} but session q = {}", ctx.q)));
    }
    let qdeg_universe = ctx.field.degree() / ctx.e();
    if mv == 0 || !qdeg_universe.is_multiple_of(mv) {
        return Err(err(qs.len() + 1, &format!("F_{qv}^{mv} is not inside the coefficient universe")));
    }
    let mut terms = Vec::new();
    let body = &s_trim[open + 1..close];
    let mut offset = open + 1;
    for piece in body.split(',') {
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            let col = offset + piece.find(trimmed).unwrap_or(0);
            let (es, cs) = trimmed.rsplit_once(':').ok_or_else(|| err(col, "term must be exponent:coeff"))?;
            let e = parse_q(es).ok_or_else(|| err(col, &format!("bad exponent '{es}'")))?;
            if !(cs.bytes().all(|b| b.is_ascii_digit()) && !cs.is_empty() && cs.len() <= 15) {
                return Err(err(col + es.len() + 1, &format!("bad coefficient '{cs}'")));
            }
            let c: u64 = cs.parse().map_err(|_| err(col, "bad coefficient"))?;
            if c >= ctx.field.size() {
                return Err(err(col + es.len() + 1, "coefficient code outside the field"));
            }
            if !mv.is_multiple_of(ctx.q_degree(c)) {
                return Err(err(col + es.len() + 1, &format!("coefficient {c} not in F_{qv}^{mv}")));
            }
            check_den(&e, ctx.denom_cap()).map_err(|_| err(col, "exponent denominator exceeds cap"))?;
            terms.push((e, c));
        }
        offset += piece.len() + 1;
    }
    let tail = s_trim[close + 1..].trim();
    let rest = tail.strip_prefix("prec:").ok_or_else(|| err(close + 1, "expected prec:"))?;
    let mut parts = rest.split_whitespace();
    let ps = parts.next().ok_or_else(|| err(close + 1, "missing precision"))?;
    let prec = if ps == "exact" {
        None
    } else {
        let p = parse_q(ps).ok_or_else(|| err(close + 1, &format!("bad precision '{ps}'")))?;
        check_den(&p, ctx.denom_cap()).map_err(|_| err(close + 1, "precision denominator exceeds cap"))?;
        Some(p)
    };
    let dominant = match parts.next() {
        None => false,
        Some("dominant") => true,
        Some(other) => return Err(err(close + 1, &format!("unexpected '{other}'"))),
    };
    if parts.next().is_some() {
        return Err(err(close + 1, "trailing input"));
    }
    let mut sorted = terms.clone();
    sorted.sort_by_key(|a| a.0);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(err(open, "repeated exponent"));
    }
    if sorted.iter().any(|t| t.1 == 0) {
        return Err(err(open, "zero coefficient"));
    }
    if let Some(p) = prec {
        if sorted.iter().any(|t| t.0 >= p) {
            return Err(err(open, "term at or beyond precision"));
        }
    }
    Ok(ValSeries::raw(ctx, sorted, prec, dominant))
}

/// Max of log-norms = min of valuations lower bounds over a set.
pub fn min_val_lb<'a>(xs: impl IntoIterator<Item = &'a ValSeries>) -> Option<Q> {
    xs.into_iter().fold(None, |acc, x| qmin(acc, x.val_lb()))
}

pub fn is_negative(x: &Q) -> bool {
    x.is_negative()
}

pub fn is_one_val(x: &ValSeries) -> bool {
    x.is_exact() && x.terms.len() == 1 && x.terms[0].0.is_zero() && x.terms[0].1.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qf;
    use crate::session::SessionConfig;

    fn ctx2() -> Ctx {
        SessionConfig::new(2, 1).with_prec(q(16)).with_universe(4).build().unwrap()
    }

    #[test]
    fn char2_cancellation() {
        let c = ctx2();
        let x = ValSeries::u_pow(&c, q(1)).unwrap().add(&ValSeries::big_o(&c, q(3)));
        let s = x.add(&ValSeries::u_pow(&c, q(1)).unwrap());
        assert!(s.is_zero_to_prec());
        assert_eq!(s.prec(), Some(q(3)));
    }

    #[test]
    fn inverse_of_u() {
        let c = ctx2();
        let u = ValSeries::u_pow(&c, q(1)).unwrap();
        let ui = ValSeries::u_pow(&c, q(-1)).unwrap();
        assert_eq!(u.mul(&ui), ValSeries::one(&c));
        assert_eq!(u.invert().unwrap(), ui);
    }

    #[test]
    fn invert_one_plus_u() {
        let c = ctx2();
        let x = ValSeries::from_terms(&c, [(q(0), 1), (q(1), 1)], None).unwrap();
        let y = x.invert().unwrap();
        assert_eq!(y.prec(), Some(q(16)));
        assert_eq!(y.terms().len(), 16);
        assert!(x.mul(&y).sub(&ValSeries::one(&c)).is_zero_to_prec());
    }

    #[test]
    fn frobenius_rules() {
        let c = ctx2();
        let x = ValSeries::from_terms(&c, [(q(1), 1), (q(2), 1)], None).unwrap();
        let y = ValSeries::from_terms(&c, [(q(2), 1), (q(4), 1)], None).unwrap();
        assert_eq!(x.frobenius(), y);
        assert_eq!(ValSeries::u_pow(&c, q(2)).unwrap().inv_frobenius().unwrap(), ValSeries::u_pow(&c, q(1)).unwrap());
        // c in F_4 inside F_16
        let f4 = c.field.subfield(2).unwrap();
        let w = *f4.iter().find(|&&z| z > 1).unwrap();
        let r = ValSeries::monomial(&c, w, q(1)).unwrap().inv_frobenius().unwrap();
        assert_eq!(r.leading().unwrap().0, qf(1, 2));
        assert_eq!(r.frobenius(), ValSeries::monomial(&c, w, q(1)).unwrap());
    }

    #[test]
    fn denominator_cap() {
        let c = SessionConfig::new(2, 1).with_denom_cap(2).with_universe(2).build().unwrap();
        let x = ValSeries::u_pow(&c, qf(1, 2)).unwrap();
        assert!(matches!(x.inv_frobenius(), Err(Error::DenominatorCapExceeded { .. })));
    }

    #[test]
    fn literal_round_trip() {
        let c = ctx2();
        let w = *c.field.subfield(2).unwrap().iter().find(|&&z| z > 1).unwrap();
        let f4 = format!("2^2 {{0:{w}}} prec:1/4 dominant");
        for s in ["2^1 {-1/2:1, 3:1} prec:5", "2^1 {} prec:exact", f4.as_str()] {
            let x = ValSeries::parse_literal(&c, s).unwrap();
            assert_eq!(x.to_literal(), s);
        }
        assert!(ValSeries::parse_literal(&c, "2^2 {0:2} prec:1").is_err());
        assert!(ValSeries::parse_literal(&c, "2^1 {1/x:1} prec:3").is_err());
        assert!(ValSeries::parse_literal(&c, "3^1 {} prec:3").is_err());
    }

    #[test]
    fn zero_to_precision_is_indeterminate() {
        let c = ctx2();
        let a = ValSeries::big_o(&c, q(2));
        assert_eq!(a.eq_tri(&ValSeries::zero(&c)), Tri::Indeterminate);
        assert_eq!(ValSeries::one(&c).eq_tri(&ValSeries::one(&c)), Tri::True);
        assert_eq!(ValSeries::one(&c).eq_tri(&a), Tri::False);
    }
}
