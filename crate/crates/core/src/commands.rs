//! Dispatch of problem-file command blocks to JSON reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::newton::NewtonPolygon;
use crate::normlaw::{verify_norm_law, Laws, NormLawPoint};
use crate::problem::{build, parse_element, CommandBlock, FamilyName, Literal, Object, ProblemFile, Verb};
use crate::rat::{fmt_q, Q};
use crate::report::Envelope;
use crate::scan::{pink_delta1, scan, Axis, Family, RegionMap};
use crate::series::ValSeries;
use crate::session::Ctx;
use crate::tau::{triviality_verdict, RootPolicy, Strategy, TauSpec, Verdict};
use crate::tmodule::{
    exp_coefficients, functional_equation_check, kernel_valuations, motive_of, torsion_comparison, ComparisonReport,
    FunctionalReport, TModuleSpec,
};
use crate::torsion::{
    brute_force_count, dual_functionals, generating_subset, pairing_check, torsion_invariants, unit_identity_holds,
    PairingMatrix,
};
use crate::tower::{finite_tower, TowerReport};

/// Command-line values that take precedence over the problem file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub horizon: Option<usize>,
    pub tprec: Option<usize>,
    pub uprec: Option<Q>,
    pub denom_cap: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: String,
    pub tsv: Option<String>,
    /// Verdicts produced, as T/D/U codes.
    pub verdicts: Vec<char>,
    /// Certified verdicts contradicting an oracle.
    pub hard_failures: Vec<String>,
}

impl Outcome {
    pub fn only_undetermined(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|&v| v == 'U')
    }
}

/// Brute-force enumeration stops above this many invariants.
const BRUTE_LIMIT: u64 = 1 << 16;

#[derive(Serialize)]
struct SolveReport {
    object: String,
    horizon: usize,
    tower_degree: u32,
    trace: Vec<String>,
    #[serde(with = "crate::report::qoptvec")]
    level_vals: Vec<Option<Q>>,
    /// Φ_n entries as canonical literals, row-major per level.
    phi: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct TrivialReport {
    object: String,
    horizon: usize,
    verdict: Verdict,
    rank: usize,
    reduction: Option<Strategy>,
    tower_degree: u32,
    dominant_only: bool,
    #[serde(with = "crate::report::qoptvec")]
    level_vals: Vec<Option<Q>>,
}

#[derive(Serialize)]
struct TauTorsionReport {
    object: String,
    n: usize,
    count: Option<u64>,
    brute_force_count: Option<u64>,
    unit_identity: bool,
    tower_degree: u32,
    trace: Vec<String>,
    pairing: PairingMatrix,
}

#[derive(Serialize)]
struct ModuleTorsionReport {
    object: String,
    #[serde(flatten)]
    comparison: ComparisonReport,
}

#[derive(Serialize)]
struct ExpReport {
    object: String,
    terms: usize,
    #[serde(with = "crate::report::qoptvec")]
    vals: Vec<Option<Q>>,
    #[serde(with = "crate::report::qvec")]
    bounds: Vec<Q>,
    bound_holds: bool,
    #[serde(with = "crate::report::qser")]
    log_m: Q,
    passes: Vec<usize>,
    functional_equation: FunctionalReport,
}

#[derive(Serialize)]
struct PeriodsReport {
    object: String,
    terms: usize,
    #[serde(with = "crate::report::qvec")]
    slopes: Vec<Q>,
    polygon: NewtonPolygon,
}

fn object<'a>(objs: &'a BTreeMap<String, Object>, cmd: &CommandBlock) -> Result<(&'a str, &'a Object)> {
    let name = match &cmd.object {
        Some(n) => n.as_str(),
        None if objs.len() == 1 => objs.keys().next().expect("one object").as_str(),
        None => return Err(Error::Config("command needs an object name".into())),
    };
    let (k, v) = objs.get_key_value(name).ok_or_else(|| Error::Config(format!("unknown object '{name}'")))?;
    Ok((k.as_str(), v))
}

fn tau_of(obj: &Object) -> Result<TauSpec> {
    match obj {
        Object::Tau(t) => Ok(t.clone()),
        Object::TModule(m) => motive_of(m),
    }
}

fn module_of<'a>(name: &str, obj: &'a Object) -> Result<&'a TModuleSpec> {
    match obj {
        Object::TModule(m) => Ok(m),
        Object::Tau(_) => Err(Error::Config(format!("object {name} is not a t-module"))),
    }
}

fn element(ctx: &Ctx, field: &Option<Literal>, what: &str) -> Result<ValSeries> {
    let s = field.as_ref().map(|l| l.get_ref()).ok_or_else(|| Error::Config(format!("missing '{what}'")))?;
    parse_element(ctx, s)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

struct Run<'a> {
    ctx: Ctx,
    objs: BTreeMap<String, Object>,
    ov: &'a Overrides,
    verdicts: Vec<char>,
    hard: Vec<String>,
    tsv: Vec<String>,
}

impl Run<'_> {
    fn horizon(&self, cmd: &CommandBlock, default: usize) -> usize {
        self.ov.horizon.or(cmd.horizon).unwrap_or(default)
    }

    fn tprec(&self, cmd: &CommandBlock, default: usize) -> usize {
        self.ov.tprec.or(cmd.tprec).unwrap_or(default)
    }

    fn pink_point(&self, cmd: &CommandBlock) -> Result<(ValSeries, crate::mat::Mat)> {
        let zeta = element(&self.ctx, &cmd.zeta, "zeta")?;
        let a = element(&self.ctx, &cmd.a, "a")?;
        let b = element(&self.ctx, &cmd.b, "b")?;
        let d1 = pink_delta1(&self.ctx, &zeta, &a, &b)?;
        Ok((zeta, d1))
    }

    fn dispatch(&mut self, cmd: &CommandBlock) -> Result<Value> {
        let policy = cmd.policy.unwrap_or(RootPolicy::MinimalNorm);
        match cmd.verb {
            Verb::Solve => {
                let (name, obj) = object(&self.objs, cmd)?;
                let h = self.horizon(cmd, 8);
                let basis = torsion_invariants(&tau_of(obj)?, h)?;
                let phi = basis.phi.levels().iter().map(|m| m.entries().iter().map(|e| e.to_literal()).collect()).collect();
                Ok(to_value(&SolveReport {
                    object: name.into(),
                    horizon: h,
                    tower_degree: basis.tower_degree,
                    level_vals: basis.phi.level_vals(),
                    trace: basis.trace,
                    phi,
                }))
            }
            Verb::Trivial => {
                let (name, obj) = object(&self.objs, cmd)?;
                let h = self.horizon(cmd, 12);
                let rep = triviality_verdict(&tau_of(obj)?, h, policy)?;
                self.verdicts.push(rep.verdict.code());
                Ok(to_value(&TrivialReport {
                    object: name.into(),
                    horizon: rep.horizon,
                    verdict: rep.verdict,
                    rank: rep.rank,
                    reduction: rep.reduction,
                    tower_degree: rep.tower_degree,
                    dominant_only: rep.dominant_only,
                    level_vals: rep.level_vals,
                }))
            }
            Verb::Torsion => {
                let (name, obj) = object(&self.objs, cmd)?;
                let n = self.tprec(cmd, 1);
                match obj {
                    Object::TModule(m) => {
                        let comparison = torsion_comparison(m, &motive_of(m)?, n)?;
                        Ok(to_value(&ModuleTorsionReport { object: name.into(), comparison }))
                    }
                    Object::Tau(spec) => {
                        let basis = torsion_invariants(spec, n)?;
                        let duals = dual_functionals(spec, &basis)?;
                        let gens = generating_subset(&basis, &duals)?;
                        Ok(to_value(&TauTorsionReport {
                            object: name.into(),
                            n,
                            count: basis.count(),
                            brute_force_count: brute_force_count(spec, n, BRUTE_LIMIT),
                            unit_identity: unit_identity_holds(spec, &basis)?,
                            pairing: pairing_check(&basis, &gens),
                            tower_degree: basis.tower_degree,
                            trace: basis.trace,
                        }))
                    }
                }
            }
            Verb::Exp => {
                let (name, obj) = object(&self.objs, cmd)?;
                let m = module_of(name, obj)?;
                let j = self.tprec(cmd, 6);
                let c = exp_coefficients(m, j)?;
                Ok(to_value(&ExpReport {
                    object: name.into(),
                    terms: j,
                    bound_holds: c.bound_holds(),
                    functional_equation: functional_equation_check(m, &c),
                    vals: c.vals,
                    bounds: c.bounds,
                    log_m: c.log_m,
                    passes: c.passes,
                }))
            }
            Verb::Periods => {
                let (name, obj) = object(&self.objs, cmd)?;
                let m = module_of(name, obj)?;
                let j = self.tprec(cmd, 4);
                let polygon = kernel_valuations(m, &exp_coefficients(m, j)?)?;
                Ok(to_value(&PeriodsReport { object: name.into(), terms: j, slopes: polygon.slopes(), polygon }))
            }
            Verb::Scan => {
                let axes_def = cmd.axes.as_ref().ok_or_else(|| Error::Config("scan needs axes".into()))?;
                let axes = axes_def.iter().map(|a| Ok(Axis::new(&a.name, a.values()?))).collect::<Result<Vec<_>>>()?;
                let family = match cmd.family.ok_or_else(|| Error::Config("scan needs a family".into()))? {
                    FamilyName::Example56 => Family::Example56,
                    FamilyName::Pink => {
                        let zeta = element(&self.ctx, &cmd.zeta, "zeta")?;
                        let zeta_val = zeta.val().ok_or_else(|| Error::Config("zeta must be nonzero".into()))?;
                        Family::Pink { zeta_val, a_lead: cmd.a_lead.unwrap_or(1) }
                    }
                    FamilyName::Custom => {
                        let (_, obj) = object(&self.objs, cmd)?;
                        let positions = cmd.positions.as_ref().ok_or_else(|| Error::Config("custom scan needs positions".into()))?;
                        let positions = positions.iter().map(|ps| ps.iter().map(|p| (p[0], p[1], p[2])).collect()).collect();
                        Family::Custom { base: tau_of(obj)?, positions }
                    }
                };
                let map = scan(&self.ctx, &family, &axes, self.horizon(cmd, 12), policy)?;
                self.record_scan(&map);
                Ok(to_value(&map))
            }
            Verb::VerifyNormLaw => {
                let (zeta, d1) = self.pink_point(cmd)?;
                let point = NormLawPoint::from_pink(&zeta, &d1)?;
                let rep = verify_norm_law(&self.ctx, &point, cmd.laws.unwrap_or(Laws::Claimed), self.horizon(cmd, 10))?;
                Ok(to_value(&rep))
            }
            Verb::Remark72 => {
                let (zeta, d1) = self.pink_point(cmd)?;
                let rep: TowerReport = finite_tower(&d1, &zeta, self.horizon(cmd, 3))?;
                Ok(to_value(&rep))
            }
        }
    }

    fn record_scan(&mut self, map: &RegionMap) {
        self.verdicts.extend(map.cells.iter().filter_map(|c| c.verdict));
        for &i in &map.disagreements {
            let coords: Vec<String> = map.cells[i].coords.iter().map(fmt_q).collect();
            self.hard.push(format!("{} cell ({}) contradicts the oracle", map.family, coords.join(", ")));
        }
        self.tsv.push(map.to_tsv());
    }
}

/// Runs the command blocks whose verb matches `only` (all when None). When
/// no block matches, a bare block for the verb is run against the file's
/// single object.
pub fn run_problem(pf: &ProblemFile, only: Option<Verb>, ov: &Overrides) -> Result<Outcome> {
    let mut pf = pf.clone();
    if let Some(p) = ov.uprec {
        pf.session.prec = fmt_q(&p);
    }
    if let Some(d) = ov.denom_cap {
        pf.session.denom_cap = d;
    }
    let (ctx, objs) = build(&pf)?;
    let mut blocks: Vec<CommandBlock> = pf.commands.iter().filter(|c| only.is_none_or(|v| c.verb == v)).cloned().collect();
    if blocks.is_empty() {
        let verb = only.ok_or_else(|| Error::Config("problem file has no commands".into()))?;
        blocks.push(CommandBlock {
            verb,
            object: None,
            horizon: None,
            tprec: None,
            policy: None,
            family: None,
            axes: None,
            positions: None,
            zeta: None,
            a: None,
            b: None,
            a_lead: None,
            laws: None,
        });
    }
    let mut run = Run { ctx, objs, ov, verdicts: Vec::new(), hard: Vec::new(), tsv: Vec::new() };
    let mut results = Vec::new();
    for (i, cmd) in blocks.iter().enumerate() {
        let v = run.dispatch(cmd).map_err(|e| Error::InCommand { context: format!("command {} ({})", i + 1, cmd.verb.name()), source: Box::new(e) })?;
        results.push(v);
    }
    let label = match only {
        Some(v) => v.name(),
        None => "run",
    };
    Ok(Outcome {
        json: Envelope::new(label, results).to_json(),
        tsv: (!run.tsv.is_empty()).then(|| run.tsv.concat()),
        verdicts: run.verdicts,
        hard_failures: run.hard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, verb: Verb) -> Outcome {
        run_problem(&ProblemFile::parse(src).unwrap(), Some(verb), &Overrides::default()).unwrap()
    }

    #[test]
    fn example56_trivial() {
        let src = "[session]\np = 2\nprec = \"32\"\n[objects.E]\nkind = \"tau\"\nlevels = { 0 = [[\"1\"]], 1 = [[\"u^1\"]] }\n";
        let out = run(src, Verb::Trivial);
        assert_eq!(out.verdicts, vec!['T']);
        let v: Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["schema"], "tau-report/1");
        assert_eq!(v["results"][0]["verdict"]["kind"], "trivial");
        // byte-deterministic
        assert_eq!(run(src, Verb::Trivial).json, out.json);
    }

    #[test]
    fn carlitz_periods() {
        let src = "[session]\np = 2\nprec = \"32\"\n[objects.C]\nkind = \"tmodule\"\ntheta = \"u^-1\"\nlevels = { 0 = [[\"u^-1\"]], 1 = [[\"1\"]] }\n[[command]]\nverb = \"periods\"\ntprec = 1\n";
        let v: Value = serde_json::from_str(&run(src, Verb::Periods).json).unwrap();
        assert_eq!(v["results"][0]["slopes"], serde_json::json!(["2"]));
    }

    #[test]
    fn errors_carry_context() {
        let src = "[session]\np = 2\n[[command]]\nverb = \"trivial\"\nobject = \"X\"\n";
        let err = run_problem(&ProblemFile::parse(src).unwrap(), None, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("command 1 (trivial)"), "{err}");
    }

    #[test]
    fn custom_identity_scan() {
        let src = r#"
[session]
p = 2
prec = "24"
[objects.I]
kind = "tau"
levels = { 0 = [["1", "0"], ["0", "1"]] }
[[command]]
verb = "scan"
family = "custom"
object = "I"
positions = [[[0, 0, 1]]]
axes = [{ name = "v", from = 0, to = 2 }]
"#;
        let out = run(src, Verb::Scan);
        assert_eq!(out.verdicts, vec!['T'; 3]);
        assert!(out.tsv.unwrap().starts_with("v\tverdict\toracle\tagree\n"));
    }
}
