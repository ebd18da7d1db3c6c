use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, Field};
use crate::rat::{fmt_q, parse_q, Q};

/// User-facing session parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub p: u64,
    #[serde(default = "one")]
    pub e: u32,
    /// Degree over F_q of the field holding input coefficients.
    #[serde(default = "one")]
    pub m: u32,
    #[serde(default = "default_cap")]
    pub denom_cap: i64,
    /// Default precision, as a rational literal.
    #[serde(default = "default_prec")]
    pub prec: String,
    /// Degree over F_p of the coefficient universe; chosen from p when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<u32>,
}

fn one() -> u32 {
    1
}

fn default_cap() -> i64 {
    // 2^8 * 3^4: room for wild roots at q = 2, 3 and cube roots at q = 2
    20736
}

fn default_prec() -> String {
    "64".into()
}

impl SessionConfig {
    pub fn new(p: u64, e: u32) -> Self {
        SessionConfig { p, e, m: 1, denom_cap: default_cap(), prec: default_prec(), universe: None }
    }

    pub fn with_prec(mut self, prec: Q) -> Self {
        self.prec = fmt_q(&prec);
        self
    }

    pub fn with_denom_cap(mut self, d: i64) -> Self {
        self.denom_cap = d;
        self
    }

    pub fn with_universe(mut self, n: u32) -> Self {
        self.universe = Some(n);
        self
    }

    pub fn build(&self) -> Result<Ctx> {
        Session::new(self.clone()).map(Arc::new)
    }
}

fn default_universe(p: u64) -> u32 {
    match p {
        2 => 24,
        3 => 18,
        5 => 8,
        7 => 6,
        _ => 4,
    }
}

#[derive(Debug)]
pub struct Session {
    pub cfg: SessionConfig,
    pub field: Field,
    pub q: u64,
    pub prec: Q,
}

pub type Ctx = Arc<Session>;

impl Session {
    fn new(cfg: SessionConfig) -> Result<Self> {
        if cfg.e == 0 || cfg.m == 0 {
            return Err(Error::Config("e and m must be positive".into()));
        }
        if cfg.denom_cap < 1 {
            return Err(Error::Config("denominator cap must be positive".into()));
        }
        let prec = parse_q(&cfg.prec).ok_or_else(|| Error::Config(format!("bad precision {}", cfg.prec)))?;
        let base = cfg.e * cfg.m;
        let n = match cfg.universe {
            Some(n) => n,
            None => num_integer::lcm(default_universe(cfg.p), base),
        };
        if n % base != 0 {
            return Err(Error::Config(format!("universe degree {n} is not a multiple of e*m = {base}")));
        }
        let field = Field::new(cfg.p, n)?;
        let q = cfg.p.checked_pow(cfg.e).ok_or_else(|| Error::Config("q too large".into()))?;
        Ok(Session { cfg, field, q, prec })
    }

    pub fn p(&self) -> u64 {
        self.cfg.p
    }

    pub fn e(&self) -> u32 {
        self.cfg.e
    }

    pub fn denom_cap(&self) -> i64 {
        self.cfg.denom_cap
    }

    /// Elements of F_q, sorted by code.
    pub fn fq(&self) -> Vec<Fe> {
        self.field.subfield(self.cfg.e).expect("F_q sits in the universe")
    }

    pub fn in_fq(&self, x: Fe) -> bool {
        self.frob_q(x) == x
    }

    pub fn frob_q(&self, x: Fe) -> Fe {
        self.field.frob(x, self.cfg.e as i64)
    }

    pub fn inv_frob_q(&self, x: Fe) -> Fe {
        self.field.frob(x, -(self.cfg.e as i64))
    }

    /// Degree over F_q of the smallest field F_{q^k} containing x.
    pub fn q_degree(&self, x: Fe) -> u32 {
        let d = self.field.elem_degree(x);
        num_integer::lcm(d, self.cfg.e) / self.cfg.e
    }
}
