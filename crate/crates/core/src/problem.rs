//! TOML problem files: a session block, named objects and command blocks.
//!
//! ```toml
//! [session]
//! p = 2
//! prec = "32"
//!
//! [objects.E]
//! kind = "tau"
//! levels = { 0 = [["1"]], 1 = [["u^1"]] }
//!
//! [[command]]
//! verb = "trivial"
//! object = "E"
//! horizon = 12
//! ```
//!
//! Matrix entries are element literals: either the canonical form
//! `q^m {e:c, ...} prec:P` or a short sum such as `1 + 3*u^1/2 - u^2 + O(u^8)`
//! where coefficients are field codes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::normlaw::Laws;
use crate::rat::{check_den, parse_q, Q};
use crate::series::ValSeries;
use crate::session::{Ctx, SessionConfig};
use crate::tau::{RootPolicy, TauSpec};
use crate::tmodule::TModuleSpec;

/// An element literal, remembering where it sits in the source.
pub type Literal = toml::Spanned<String>;

pub type MatrixLit = Vec<Vec<Literal>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub session: SessionConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub objects: BTreeMap<String, ObjectDef>,
    #[serde(default, rename = "command", skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<CommandBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    /// Δ_n keyed by n.
    Tau,
    /// G_k keyed by k, with θ.
    Tmodule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDef {
    pub kind: ObjectKind,
    pub levels: BTreeMap<String, MatrixLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Solve,
    Trivial,
    Torsion,
    Exp,
    Periods,
    Scan,
    VerifyNormLaw,
    #[serde(alias = "finite-tower")]
    Remark72,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Solve => "solve",
            Verb::Trivial => "trivial",
            Verb::Torsion => "torsion",
            Verb::Exp => "exp",
            Verb::Periods => "periods",
            Verb::Scan => "scan",
            Verb::VerifyNormLaw => "verify-norm-law",
            Verb::Remark72 => "remark72",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Example56,
    Pink,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDef {
    pub name: String,
    /// Explicit rational values; otherwise the integers from..=to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<i64>,
}

impl AxisDef {
    pub fn values(&self) -> Result<Vec<Q>> {
        match (&self.values, self.from, self.to) {
            (Some(vs), None, None) => vs
                .iter()
                .map(|s| parse_q(s).ok_or_else(|| Error::Config(format!("axis {}: bad value '{s}'", self.name))))
                .collect(),
            (None, Some(lo), Some(hi)) if lo <= hi && hi - lo <= 1000 => Ok((lo..=hi).map(Q::from_integer).collect()),
            _ => Err(Error::Config(format!("axis {} needs either values or from <= to", self.name))),
        }
    }
}

/// One command; which fields are required depends on the verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandBlock {
    pub verb: Verb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Torsion level N or number of exponential terms J.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tprec: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<RootPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<AxisDef>>,
    /// Custom scans: (level, row, col) entries scaled along each axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<[usize; 3]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Literal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_lead: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laws: Option<Laws>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, col)
}

impl ProblemFile {
    /// Parses the file and every element literal in it, reporting literal
    /// errors at their position in `src`.
    pub fn parse(src: &str) -> Result<Self> {
        let pf: ProblemFile = toml::from_str(src).map_err(|e| {
            let (line, col) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            Error::parse(line, col, e.message().to_string())
        })?;
        let ctx = pf.session.build()?;
        let check = |what: &str, lit: &Literal| -> Result<()> {
            match parse_element(&ctx, lit.get_ref()) {
                Err(Error::Parse { col, msg, .. }) => {
                    let span = lit.span();
                    // skip the opening quote, then col - 1 characters
                    let inner = src.get(span.start + 1..span.end).unwrap_or("");
                    let off = inner.char_indices().nth(col - 1).map_or(inner.len(), |(i, _)| i);
                    let (line, col) = line_col(src, span.start + 1 + off);
                    Err(Error::parse(line, col, format!("{what}: {msg}")))
                }
                _ => Ok(()),
            }
        };
        for (name, def) in &pf.objects {
            let what = format!("object {name}");
            def.levels.values().flatten().flatten().chain(&def.theta).try_for_each(|l| check(&what, l))?;
        }
        for (i, cmd) in pf.commands.iter().enumerate() {
            let what = format!("command {i}");
            [&cmd.zeta, &cmd.a, &cmd.b].into_iter().flatten().try_for_each(|l| check(&what, l))?;
        }
        Ok(pf)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files serialize")
    }
}

/// A resolved object.
#[derive(Debug, Clone)]
pub enum Object {
    Tau(TauSpec),
    TModule(TModuleSpec),
}

fn parse_levels(ctx: &Ctx, levels: &BTreeMap<String, MatrixLit>) -> Result<Vec<Mat>> {
    let mut keyed = BTreeMap::new();
    for (k, m) in levels {
        let n: usize = k.parse().map_err(|_| Error::Config(format!("level key '{k}' is not a degree")))?;
        if n > 64 {
            return Err(Error::Config(format!("level {n} too large")));
        }
        keyed.insert(n, parse_matrix(ctx, m)?);
    }
    let Some((&top, first)) = keyed.iter().next_back() else {
        return Err(Error::Config("object has no levels".into()));
    };
    let (r, c) = (first.rows(), first.cols());
    (0..=top)
        .map(|n| match keyed.remove(&n) {
            Some(m) if m.rows() == r && m.cols() == c => Ok(m),
            Some(_) => Err(Error::DimensionMismatch(format!("level {n} has a different shape"))),
            None => Ok(Mat::zero(ctx, r, c)),
        })
        .collect()
}

pub fn parse_matrix(ctx: &Ctx, m: &MatrixLit) -> Result<Mat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || m.iter().any(|row| row.len() != cols) {
        return Err(Error::DimensionMismatch("matrix rows must be nonempty and of equal length".into()));
    }
    let data = m.iter().flatten().map(|s| parse_element(ctx, s.get_ref())).collect::<Result<Vec<_>>>()?;
    Mat::new(rows, cols, data)
}

pub fn build(pf: &ProblemFile) -> Result<(Ctx, BTreeMap<String, Object>)> {
    let ctx = pf.session.build()?;
    let mut objects = BTreeMap::new();
    for (name, def) in &pf.objects {
        let levels = parse_levels(&ctx, &def.levels).map_err(|e| in_object(name, e))?;
        let obj = match def.kind {
            ObjectKind::Tau => {
                if def.theta.is_some() {
                    return Err(Error::Config(format!("object {name}: theta only applies to t-modules")));
                }
                Object::Tau(TauSpec::from_levels(levels).map_err(|e| in_object(name, e))?)
            }
            ObjectKind::Tmodule => {
                let th = def.theta.as_ref().map(|t| t.get_ref()).ok_or_else(|| Error::Config(format!("object {name}: missing theta")))?;
                let theta = parse_element(&ctx, th).map_err(|e| in_object(name, e))?;
                Object::TModule(TModuleSpec::new(levels, theta).map_err(|e| in_object(name, e))?)
            }
        };
        objects.insert(name.clone(), obj);
    }
    Ok((ctx, objects))
}

fn in_object(name: &str, e: Error) -> Error {
    match e {
        Error::Parse { line, col, msg } => Error::Parse { line, col, msg: format!("object {name}: {msg}") },
        Error::Config(msg) => Error::Config(format!("object {name}: {msg}")),
        other => other,
    }
}

/// Canonical literal when the text contains '{', otherwise a short sum.
pub fn parse_element(ctx: &Ctx, s: &str) -> Result<ValSeries> {
    if s.contains('{') {
        ValSeries::parse_literal(ctx, s)
    } else {
        parse_short(ctx, s)
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.s.get(self.i).is_some_and(|b| b.is_ascii_whitespace()) {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::parse(1, self.i + 1, msg)
    }

    fn digits(&mut self) -> &str {
        let start = self.i;
        while self.s.get(self.i).is_some_and(u8::is_ascii_digit) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).expect("ascii digits")
    }

    /// [-]digits[/digits], no inner whitespace.
    fn rational(&mut self) -> Result<Q> {
        self.skip_ws();
        let start = self.i;
        if self.s.get(self.i) == Some(&b'-') {
            self.i += 1;
        }
        self.digits();
        if self.s.get(self.i) == Some(&b'/') {
            self.i += 1;
            self.digits();
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).expect("ascii");
        parse_q(text).ok_or_else(|| Error::parse(1, start + 1, format!("bad exponent '{text}'")))
    }
}

fn parse_short(ctx: &Ctx, s: &str) -> Result<ValSeries> {
    let mut cur = Cursor { s: s.as_bytes(), i: 0 };
    let f = &ctx.field;
    let mut acc = ValSeries::zero(ctx);
    let mut negate = cur.eat(b'-');
    let mut first = true;
    loop {
        if cur.peek().is_none() {
            return Err(cur.err(if first { "empty element" } else { "expected a term" }));
        }
        if cur.peek() == Some(b'O') {
            cur.i += 1;
            if negate || !cur.eat(b'(') || !cur.eat(b'u') || !cur.eat(b'^') {
                return Err(cur.err("expected O(u^P)"));
            }
            let p = cur.rational()?;
            if !cur.eat(b')') {
                return Err(cur.err("expected ')'"));
            }
            check_den(&p, ctx.denom_cap()).map_err(|_| cur.err("precision denominator exceeds cap"))?;
            if acc.terms().iter().any(|(e, _)| *e >= p) {
                return Err(cur.err("term at or beyond O(u^P)"));
            }
            acc = acc.add(&ValSeries::big_o(ctx, p));
            if cur.peek().is_some() {
                return Err(cur.err("O(u^P) must come last"));
            }
            break;
        }
        let mut coeff = 1;
        let mut has_coeff = false;
        if cur.peek().is_some_and(|b| b.is_ascii_digit()) {
            let start = cur.i;
            let ds = cur.digits();
            if ds.len() > 15 {
                return Err(Error::parse(1, start + 1, "coefficient too long"));
            }
            coeff = ds.parse::<u64>().expect("digits");
            if coeff >= f.size() {
                return Err(Error::parse(1, start + 1, "coefficient code outside the field"));
            }
            has_coeff = true;
        }
        let mut e = Q::from_integer(0);
        let star = has_coeff && cur.eat(b'*');
        if cur.eat(b'u') {
            if cur.eat(b'^') {
                e = cur.rational()?;
            } else {
                e = Q::from_integer(1);
            }
        } else if star || !has_coeff {
            return Err(cur.err("expected 'u'"));
        }
        if coeff != 0 {
            let c = if negate { f.neg(coeff) } else { coeff };
            let m = ValSeries::monomial(ctx, c, e).map_err(|_| cur.err("exponent denominator exceeds cap"))?;
            if acc.terms().iter().any(|(x, _)| *x == e) {
                return Err(cur.err("repeated exponent"));
            }
            acc = acc.add(&m);
        }
        first = false;
        match cur.peek() {
            None => break,
            Some(b'+') => negate = false,
            Some(b'-') => negate = true,
            Some(_) => return Err(cur.err("expected '+' or '-'")),
        }
        cur.i += 1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    fn ctx() -> Ctx {
        SessionConfig::new(3, 1).build().unwrap()
    }

    #[test]
    fn short_elements() {
        let c = ctx();
        let x = parse_element(&c, "1 + 2*u^1/2 - u^-1").unwrap();
        assert_eq!(x.terms(), &[(q(-1), 2), (q(0), 1), (qf(1, 2), 2)]);
        assert!(x.is_exact());
        let y = parse_element(&c, "u + O(u^4)").unwrap();
        assert_eq!(y.prec(), Some(q(4)));
        assert_eq!(parse_element(&c, "0").unwrap(), ValSeries::zero(&c));
        let canon = parse_element(&c, &x.to_literal()).unwrap();
        assert_eq!(canon, x);
    }

    #[test]
    fn short_errors_have_columns() {
        let c = ctx();
        for (s, col) in [("u^1/0", 3), ("1 +", 4), ("u^1 u", 5), ("", 1), ("u + u", 6), ("u^1/7", 6)] {
            match parse_element(&c, s) {
                Err(Error::Parse { col: got, .. }) => assert_eq!(got, col, "{s}"),
                other => panic!("{s}: {other:?}"),
            }
        }
    }

    const SAMPLE: &str = r#"
[session]
p = 2
prec = "32"

[objects.E]
kind = "tau"
levels = { 0 = [["1"]], 1 = [["u^1"]] }

[objects.C]
kind = "tmodule"
theta = "u^-1"
levels = { 0 = [["u^-1"]], 1 = [["1"]] }

[[command]]
verb = "trivial"
object = "E"
horizon = 12

[[command]]
verb = "scan"
family = "example56"
axes = [{ name = "va", from = 0, to = 3 }, { name = "vb", values = ["0", "1/2"] }]
"#;

    #[test]
    fn round_trip() {
        let pf = ProblemFile::parse(SAMPLE).unwrap();
        assert_eq!(pf.commands.len(), 2);
        let again = ProblemFile::parse(&pf.to_toml()).unwrap();
        assert_eq!(again, pf);
        let (_, objs) = build(&pf).unwrap();
        assert!(matches!(objs["E"], Object::Tau(_)));
        assert!(matches!(objs["C"], Object::TModule(_)));
        assert_eq!(pf.commands[1].axes.as_ref().unwrap()[1].values().unwrap(), vec![q(0), qf(1, 2)]);
    }

    #[test]
    fn literal_errors_located_in_file() {
        let src = "[session]\np = 2\n\n[objects.x]\nkind = \"tau\"\nlevels = { 0 = [[\"1\", \"u^1/\"]] }\n";
        match ProblemFile::parse(src) {
            Err(Error::Parse { line, col, msg }) => {
                assert_eq!((line, col), (6, 26));
                assert!(msg.starts_with("object x:"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = SAMPLE.replace("horizon = 12", "horizon = 12\nhorizn = 3");
        match ProblemFile::parse(&bad) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        assert!(ProblemFile::parse(&SAMPLE.replace("verb = \"scan\"", "verb = \"plot\"")).is_err());
    }

    #[test]
    fn level_gaps_are_zero() {
        let pf = ProblemFile::parse(&SAMPLE.replace("1 = [[\"u^1\"]]", "2 = [[\"u^1\"]]")).unwrap();
        let (_, objs) = build(&pf).unwrap();
        let Object::Tau(t) = &objs["E"] else { panic!() };
        assert_eq!(t.delta.tprec(), 2);
        assert!(t.delta.level(1).is_exact_zero());
    }
}
