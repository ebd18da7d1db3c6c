//! Lower convex hulls of (support, valuation) point sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rat::Q;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    #[serde(with = "crate::report::qser")]
    pub slope: Q,
    #[serde(with = "crate::report::qser")]
    pub length: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct NewtonPolygon {
    pub segments: Vec<Segment>,
}

impl NewtonPolygon {
    /// (root valuation, number of roots) per segment: slope s gives roots of
    /// valuation -s.
    pub fn root_valuations(&self) -> Vec<(Q, Q)> {
        self.segments.iter().map(|s| (-s.slope, s.length)).collect()
    }

    pub fn total_length(&self) -> Q {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn slopes(&self) -> Vec<Q> {
        self.segments.iter().map(|s| s.slope).collect()
    }
}

pub fn newton_polygon(points: &[(Q, Q)]) -> Result<NewtonPolygon> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    if pts.len() < 2 {
        return Err(Error::DegenerateInput("a Newton polygon needs two support points".into()));
    }
    let cross = |o: &(Q, Q), a: &(Q, Q), b: &(Q, Q)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(Q, Q)> = Vec::new();
    for p in pts {
        // pop while the last turn is not strictly convex
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) <= Q::from_integer(0) {
            hull.pop();
        }
        hull.push(p);
    }
    let segments = hull
        .windows(2)
        .map(|w| Segment { slope: (w[1].1 - w[0].1) / (w[1].0 - w[0].0), length: w[1].0 - w[0].0 })
        .collect();
    Ok(NewtonPolygon { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn carlitz_t() {
        let np = newton_polygon(&[(q(1), q(-1)), (q(2), q(0))]).unwrap();
        assert_eq!(np.root_valuations(), vec![(q(-1), q(1))]);
    }

    #[test]
    fn flat() {
        let np = newton_polygon(&[(q(0), q(0)), (q(1), q(0))]).unwrap();
        assert_eq!(np.slopes(), vec![q(0)]);
    }

    #[test]
    fn exp_points() {
        let np = newton_polygon(&[(q(1), q(0)), (q(2), q(2)), (q(4), q(8))]).unwrap();
        assert_eq!(np.slopes(), vec![q(2), q(3)]);
    }

    #[test]
    fn collinear_points_merge() {
        let np = newton_polygon(&[(q(0), q(0)), (q(1), q(1)), (q(2), q(2)), (q(3), q(5))]).unwrap();
        assert_eq!(np.segments.len(), 2);
        assert_eq!(np.segments[0].length, q(2));
    }

    #[test]
    fn needs_two_points() {
        assert!(newton_polygon(&[(q(0), q(0))]).is_err());
    }
}
