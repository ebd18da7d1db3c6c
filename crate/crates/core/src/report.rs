//! JSON report helpers. Rationals are serialized as strings `a` or `a/b`.

use serde::Serialize;

pub const SCHEMA_VERSION: &str = "tau-report/1";

pub mod qser {
    use serde::Serializer;

    use crate::rat::{fmt_q, Q};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }
}

pub mod qopt {
    use serde::Serializer;

    use crate::rat::{fmt_q, Q};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&fmt_q(v)),
            None => s.serialize_str("inf"),
        }
    }
}

pub mod qvec {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use crate::rat::{fmt_q, Q};

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(x.len()))?;
        for v in x {
            seq.serialize_element(&fmt_q(v))?;
        }
        seq.end()
    }
}

pub mod qoptvec {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use crate::rat::{fmt_q, Q};

    pub fn serialize<S: Serializer>(x: &[Option<Q>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(x.len()))?;
        for v in x {
            seq.serialize_element(&v.map_or("inf".to_string(), |q| fmt_q(&q)))?;
        }
        seq.end()
    }
}

/// Top-level envelope of every CLI report.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: &'static str,
    pub command: String,
    pub results: Vec<T>,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, results: Vec<T>) -> Self {
        Envelope { schema: SCHEMA_VERSION, command: command.to_string(), results }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types serialize") + "\n"
    }
}
