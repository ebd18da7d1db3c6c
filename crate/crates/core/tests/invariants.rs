use std::collections::BTreeMap;

use proptest::prelude::*;

use tau_core::mat::Mat;
use tau_core::newton::newton_polygon;
use tau_core::problem::{ObjectDef, ObjectKind, ProblemFile};
use tau_core::rat::{q, qf};
use tau_core::roots::{artin_schreier, kummer_root};
use tau_core::scan::example56_spec;
use tau_core::tau::{normalize_basis, residual, triviality_verdict, RootPolicy, TauSpec};
use tau_core::{Ctx, Fe, SessionConfig, ValSeries, Q};

fn ctx(p: u64) -> Ctx {
    SessionConfig::new(p, 1).with_prec(q(24)).build().unwrap()
}

/// (numerator, denominator, coefficient code) triples.
fn terms() -> impl Strategy<Value = Vec<(i64, i64, u64)>> {
    prop::collection::vec((-6i64..30, prop::sample::select(vec![1i64, 2, 4]), 1u64..1 << 20), 0..5)
}

fn series(c: &Ctx, raw: &[(i64, i64, u64)]) -> ValSeries {
    let size = c.field.size();
    raw.iter().fold(ValSeries::zero(c), |acc, &(n, d, code)| {
        let cf = code % (size - 1) + 1;
        acc.add(&ValSeries::monomial(c, cf, qf(n, d)).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn literal_round_trip(raw in terms(), p in prop::sample::select(vec![2u64, 3])) {
        let c = ctx(p);
        let x = series(&c, &raw);
        let lit = x.to_literal();
        let back = ValSeries::parse_literal(&c, &lit).unwrap();
        prop_assert_eq!(back.to_literal(), lit);
        prop_assert_eq!(back.terms(), x.terms());
    }

    #[test]
    fn ultrametric(a in terms(), b in terms()) {
        let c = ctx(2);
        let (x, y) = (series(&c, &a), series(&c, &b));
        let s = x.add(&y);
        match (x.val(), y.val()) {
            (Some(vx), Some(vy)) if vx != vy => prop_assert_eq!(s.val(), Some(vx.min(vy))),
            (Some(vx), Some(vy)) => prop_assert!(s.val_lb().is_none_or(|v| v >= vx.min(vy))),
            _ => {}
        }
    }

    #[test]
    fn valuation_multiplicative(a in terms(), b in terms()) {
        let c = ctx(3);
        let (x, y) = (series(&c, &a), series(&c, &b));
        if let (Some(vx), Some(vy)) = (x.val(), y.val()) {
            prop_assert_eq!(x.mul(&y).val(), Some(vx + vy));
        }
    }

    #[test]
    fn frobenius_ring_hom(a in terms(), b in terms(), p in prop::sample::select(vec![2u64, 3])) {
        let c = ctx(p);
        let (x, y) = (series(&c, &a), series(&c, &b));
        prop_assert!(x.add(&y).frobenius().agrees(&x.frobenius().add(&y.frobenius())));
        prop_assert!(x.mul(&y).frobenius().agrees(&x.frobenius().mul(&y.frobenius())));
        prop_assert!(x.frobenius().inv_frobenius().unwrap().agrees(&x));
        if let Ok(r) = x.inv_frobenius() {
            prop_assert!(r.frobenius().agrees(&x));
        }
    }

    #[test]
    fn field_frobenius(a in any::<u64>(), b in any::<u64>(), k in 0i64..30) {
        let c = ctx(3);
        let f = &c.field;
        let (a, b) = (a % f.size(), b % f.size());
        prop_assert_eq!(f.frob(f.mul(a, b), k), f.mul(f.frob(a, k), f.frob(b, k)));
        prop_assert_eq!(f.frob(f.add(a, b), k), f.add(f.frob(a, k), f.frob(b, k)));
        prop_assert_eq!(f.frob(f.frob(a, k), -k), a);
    }

    #[test]
    fn artin_schreier_roots(raw in terms(), residue in 0u64..3, p in prop::sample::select(vec![2u64, 3])) {
        let c = ctx(p);
        let tail: Vec<_> = raw.into_iter().filter(|t| t.0 > 0).collect();
        let alpha = series(&c, &tail).add(&ValSeries::constant(&c, residue % p));
        let rs = artin_schreier(&alpha, 1).unwrap();
        prop_assert_eq!(rs.count(), p);
        for x in &rs.roots {
            prop_assert!(x.sub(&x.frobenius()).agrees(&alpha));
            let d = x.sub(&rs.roots[0]);
            prop_assert!(d.as_constant().is_some_and(|k| c.field.is_prime_field(k)) || d.is_exact_zero());
        }
    }

    #[test]
    fn kummer_roots_reproduce(raw in terms(), n in prop::sample::select(vec![3u64, 5, 7])) {
        let c = ctx(2);
        let a = series(&c, &raw);
        prop_assume!(a.val().is_some());
        if let Ok(rs) = kummer_root(&a, n) {
            for x in &rs.roots {
                prop_assert!(x.pow(n).agrees(&a));
            }
        }
    }

    #[test]
    fn newton_product(f in prop::collection::vec(-8i64..8, 2..5), g in prop::collection::vec(-8i64..8, 2..5)) {
        let pts = |v: &[i64]| -> Vec<(Q, Q)> { v.iter().enumerate().map(|(i, &x)| (q(i as i64), q(x))).collect() };
        let (pf, pg) = (newton_polygon(&pts(&f)).unwrap(), newton_polygon(&pts(&g)).unwrap());
        let slopes = pf.slopes();
        prop_assert!(slopes.windows(2).all(|w| w[0] < w[1]));
        // product with monomial coefficients u^f_i, u^g_j
        let c = ctx(2);
        let mut prod = vec![ValSeries::zero(&c); f.len() + g.len() - 1];
        for (i, &a) in f.iter().enumerate() {
            for (j, &b) in g.iter().enumerate() {
                let t = ValSeries::u_pow(&c, q(a)).unwrap().mul(&ValSeries::u_pow(&c, q(b)).unwrap());
                prod[i + j] = prod[i + j].add(&t);
            }
        }
        let ppts: Vec<(Q, Q)> = prod.iter().enumerate().filter_map(|(k, x)| x.val().map(|v| (q(k as i64), v))).collect();
        let pp = newton_polygon(&ppts).unwrap();
        let mut want: BTreeMap<Q, Q> = BTreeMap::new();
        for (v, n) in pf.root_valuations().into_iter().chain(pg.root_valuations()) {
            *want.entry(v).or_default() += n;
        }
        let got: BTreeMap<Q, Q> = pp.root_valuations().into_iter().collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn matrix_sigma_and_inverse(codes in prop::collection::vec(0u64..4, 4), raw in terms()) {
        let c = ctx(2);
        let a = Mat::from_fe(&c, 2, 2, &codes.iter().map(|&x| x as Fe).collect::<Vec<_>>()).unwrap();
        let mut b = Mat::identity(&c, 2);
        b.set(0, 1, series(&c, &raw));
        prop_assert!(a.mul(&b).sigma().agrees(&a.sigma().mul(&b.sigma())));
        let inv = b.inv().unwrap();
        prop_assert!(b.mul(&inv).agrees(&Mat::identity(&c, 2)));
    }

    #[test]
    fn verdict_survives_rescaling(va in 0i64..3, vb in 0i64..4, shift in 1i64..4) {
        let c = ctx(2);
        let spec = example56_spec(&c, q(va), q(vb)).unwrap();
        // Δ scaled by u^{(1-q)k} is the same τ-sheaf in the basis u^k e
        let f = ValSeries::u_pow(&c, q(-shift)).unwrap();
        let scaled = TauSpec::from_levels(spec.padded(spec.degree()).levels().iter().map(|m| m.scale(&f)).collect()).unwrap();
        let a = triviality_verdict(&spec, 10, RootPolicy::MinimalNorm).unwrap();
        let b = triviality_verdict(&normalize_basis(&scaled).unwrap(), 10, RootPolicy::MinimalNorm).unwrap();
        prop_assert_eq!(a.verdict.code(), b.verdict.code());
    }

    #[test]
    fn invariant_residual(vb in 1i64..4) {
        let c = ctx(2);
        let spec = example56_spec(&c, q(0), q(vb)).unwrap();
        let rep = triviality_verdict(&spec, 6, RootPolicy::MinimalNorm).unwrap();
        prop_assert!(residual(&spec.padded(rep.phi.tprec()), &rep.phi, None).is_zero_to_prec());
        prop_assert!(rep.rank <= spec.r);
    }

    #[test]
    fn problem_round_trip(entries in prop::collection::vec(terms(), 1..4), p in prop::sample::select(vec![2u64, 3])) {
        let c = ctx(p);
        let mut levels = BTreeMap::new();
        for (n, raw) in entries.iter().enumerate() {
            let lit = series(&c, raw).to_literal();
            levels.insert(n.to_string(), vec![vec![toml::Spanned::new(0..0, lit)]]);
        }
        let mut objects = BTreeMap::new();
        objects.insert("E".to_string(), ObjectDef { kind: ObjectKind::Tau, levels, theta: None });
        let src = format!("[session]\np = {p}\nprec = \"24\"\n");
        let mut pf = ProblemFile::parse(&src).unwrap();
        pf.objects = objects;
        let text = pf.to_toml();
        let back = ProblemFile::parse(&text).unwrap();
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back, pf);
    }
}
