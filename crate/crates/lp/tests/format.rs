use lp::{parse_lp, solve, to_lp_string, Cmp, Problem, Sense};
use proptest::prelude::*;

#[test]
fn parses_handwritten_file() {
    let text = "\\ a comment\n\
        Maximize\n obj: 3 x + 5 y\n\
        Subject To\n c1: x <= 4\n c2: 2 y\n   <= 12\n c3: 3 x + 2 y <= 18\n\
        Bounds\n 0 <= x <= inf\n y >= 0\nEnd\n";
    let p = parse_lp(text).unwrap();
    assert_eq!(p.sense, Sense::Maximize);
    assert_eq!(p.num_constraints(), 3);
    assert_eq!(p.constraints[1].terms, vec![(1, 2.0)]);
    assert!((solve(&p).unwrap().objective - 36.0).abs() < 1e-9);
}

#[test]
fn writes_expected_layout() {
    let mut p = Problem::new("tiny", Sense::Maximize);
    let a = p.add_variable("alpha", f64::NEG_INFINITY, f64::INFINITY);
    let y = p.add_variable("y_0_1", 0.0, 1.0);
    p.set_objective(a, 0.5);
    p.add_constraint("init_1", [(y, 1.0)], Cmp::Eq, 1.0);
    p.add_constraint("cons", [(a, -1.0), (y, 2.5e-7)], Cmp::Ge, -3.0);
    let text = to_lp_string(&p);
    assert_eq!(
        text,
        "\\Problem name: tiny\nMaximize\n obj: 0.5 alpha\nSubject To\n init_1: y_0_1 = 1\n \
         cons: - alpha + 2.5e-7 y_0_1 >= -3\nBounds\n alpha free\n 0 <= y_0_1 <= 1\nEnd\n"
    );
}

#[test]
fn rejects_garbage() {
    assert!(parse_lp("Maximize\n obj: x\nSubject To\n c: x <=\n").is_err());
    assert!(parse_lp("x + y\n").is_err());
}

fn coef() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1e3f64..1e3),
        (1e-12f64..1e-5),
        Just(1.0),
        Just(-1.0),
        (-1e20f64..-1e16),
    ]
}

proptest! {
    #[test]
    fn round_trip_is_exact(
        nvars in 1usize..6,
        obj in prop::collection::vec(coef(), 6),
        rows in prop::collection::vec((prop::collection::vec((0usize..6, coef()), 1..4), 0usize..3, coef()), 0..5),
        bounds in prop::collection::vec((0usize..5, coef(), coef()), 6),
        maximize in any::<bool>(),
    ) {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut p = Problem::new("rt", sense);
        for j in 0..nvars {
            let (kind, a, b) = bounds[j];
            let (lo, hi) = (a.min(b), a.max(b));
            let (lo, hi) = match kind {
                0 => (lo, hi),
                1 => (f64::NEG_INFINITY, f64::INFINITY),
                2 => (lo, f64::INFINITY),
                3 => (f64::NEG_INFINITY, hi),
                _ => (lo, lo),
            };
            p.add_variable(format!("v_{j}"), lo, hi);
            p.set_objective(j, obj[j]);
        }
        for (i, (terms, op, rhs)) in rows.into_iter().enumerate() {
            let terms: Vec<_> = terms.into_iter().map(|(j, a)| (j % nvars, a)).collect();
            p.add_constraint(format!("row{i}"), terms, [Cmp::Le, Cmp::Ge, Cmp::Eq][op], rhs);
        }
        let back = parse_lp(&to_lp_string(&p)).unwrap();
        prop_assert_eq!(back, p);
    }
}
