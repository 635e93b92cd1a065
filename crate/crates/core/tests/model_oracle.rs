//! The right-hand side against a hand-expanded transcription of the model
//! equations (one line per equation, indices substituted by hand).

use l80::model::{l80_rhs, y_energy, y_equation_rhs, ModelParams, Regime, State9};
use proptest::prelude::*;

/// Every equation written out with explicit indices.
fn expanded(s: &State9, p: &ModelParams) -> [f64; 9] {
    let [x1, x2, x3] = s.x;
    let [y1, y2, y3] = s.y;
    let [z1, z2, z3] = s.z;
    let [a1, a2, a3] = p.a;
    let [b1, b2, b3] = p.b;
    let [h1, h2, h3] = p.topography;
    let [f1, f2, f3] = p.forcing;
    let (c, nu, ka, g) = (p.c, p.nu0, p.kappa0, p.g0);
    [
        // (i,j,k) = (1,2,3)
        (-nu * a1 * a1 * x1 - c * (a1 - a3) * x2 * y3 + c * (a1 - a2) * y2 * x3 + a1 * b1 * x2 * x3
            - 2.0 * c * c * y2 * y3
            + a1 * (y1 - z1))
            / a1,
        // (2,3,1)
        (-nu * a2 * a2 * x2 - c * (a2 - a1) * x3 * y1 + c * (a2 - a3) * y3 * x1 + a2 * b2 * x3 * x1
            - 2.0 * c * c * y3 * y1
            + a2 * (y2 - z2))
            / a2,
        // (3,1,2)
        (-nu * a3 * a3 * x3 - c * (a3 - a2) * x1 * y2 + c * (a3 - a1) * y1 * x2 + a3 * b3 * x1 * x2
            - 2.0 * c * c * y1 * y2
            + a3 * (y3 - z3))
            / a3,
        (-a3 * b3 * x2 * y3 - a2 * b2 * y2 * x3 + c * (a3 - a2) * y2 * y3 - a1 * x1 - nu * a1 * a1 * y1) / a1,
        (-a1 * b1 * x3 * y1 - a3 * b3 * y3 * x1 + c * (a1 - a3) * y3 * y1 - a2 * x2 - nu * a2 * a2 * y2) / a2,
        (-a2 * b2 * x1 * y2 - a1 * b1 * y1 * x2 + c * (a2 - a1) * y1 * y2 - a3 * x3 - nu * a3 * a3 * y3) / a3,
        g * a1 * x1 - b3 * x2 * (z3 - h3) - b2 * (z2 - h2) * x3 + c * y2 * (z3 - h3) - c * (z2 - h2) * y3 - ka * a1 * z1 + f1,
        g * a2 * x2 - b1 * x3 * (z1 - h1) - b3 * (z3 - h3) * x1 + c * y3 * (z1 - h1) - c * (z3 - h3) * y1 - ka * a2 * z2 + f2,
        g * a3 * x3 - b2 * x1 * (z2 - h2) - b1 * (z1 - h1) * x2 + c * y1 * (z2 - h2) - c * (z1 - h1) * y2 - ka * a3 * z3 + f3,
    ]
}

fn simple() -> ModelParams {
    ModelParams {
        a: [1.0; 3],
        b: [1.0; 3],
        c: 1.0,
        nu0: 0.0,
        kappa0: 0.0,
        g0: 1.0,
        forcing: [0.0; 3],
        topography: [0.0; 3],
        time_unit_days: 1.0,
    }
}

fn probe() -> State9 {
    State9 { x: [0.3, -0.7, 1.1], y: [0.4, -0.25, 0.45], z: [1.3, -0.6, 0.125] }
}

#[test]
fn frozen_values_simple_params() {
    // exact rationals from a computer-algebra evaluation of the equations
    let expect = [-289.0 / 200.0, 8.0 / 25.0, 63.0 / 200.0, 29.0 / 100.0, 1.0 / 8.0, -149.0 / 200.0, 1029.0 / 800.0, -653.0 / 400.0, 91.0 / 40.0];
    let got = l80_rhs(&probe(), &simple()).unwrap().to_flat();
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() < 1e-14, "{g} vs {e}");
    }
}

#[test]
fn frozen_values_hlf_params() {
    let expect = [
        -0.12809600438419634746,
        -0.63424352568846510129,
        0.082893194816126718276,
        -0.44318904918483202886,
        0.85093918797093542050,
        -1.3056250000000000000,
        1.9361302318202013936,
        -0.95821497727232793294,
        23.997306010267786947,
    ];
    let got = l80_rhs(&probe(), &Regime::Hlf.params()).unwrap().to_flat();
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() < 1e-13 * e.abs().max(1.0), "{g} vs {e}");
    }
}

#[test]
fn full_negation_is_not_a_symmetry() {
    // Quadratic terms are even, linear terms odd: negating all nine
    // components cannot commute with the flow, even with h = 0, F = 0.
    let p = ModelParams { forcing: [0.0; 3], topography: [0.0; 3], ..Regime::Hlf.params() };
    let s = probe();
    let neg = State9::from_flat(&s.to_flat().map(|v| -v));
    let lhs = l80_rhs(&neg, &p).unwrap().to_flat();
    let rhs = l80_rhs(&s, &p).unwrap().to_flat().map(|v| -v);
    assert!(lhs.iter().zip(&rhs).any(|(a, b)| (a - b).abs() > 1e-3));
}

fn flip23(s: &State9) -> State9 {
    let f = |v: [f64; 3]| [v[0], -v[1], -v[2]];
    State9 { x: f(s.x), y: f(s.y), z: f(s.z) }
}

proptest! {
    #[test]
    fn matches_expanded_equations(
        v in prop::array::uniform9(-2.0f64..2.0),
        f1 in 0.0f64..0.5,
        h1 in -1.5f64..0.5,
    ) {
        let s = State9::from_flat(&v);
        let p = ModelParams { forcing: [f1, 0.0, 0.0], topography: [h1, 0.0, 0.0], ..Regime::Hlf.params() };
        let got = l80_rhs(&s, &p).unwrap().to_flat();
        let want = expanded(&s, &p);
        for (g, w) in got.iter().zip(want) {
            prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()), "{} vs {}", g, w);
        }
        let got_simple = l80_rhs(&s, &simple()).unwrap().to_flat();
        let want_simple = expanded(&s, &simple());
        for (g, w) in got_simple.iter().zip(want_simple) {
            prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
        }
    }

    /// The two-lobe symmetry: flipping the sign of modes 2 and 3 commutes
    /// with the flow when forcing and topography act on mode 1 only.
    #[test]
    fn mode_two_three_reflection_symmetry(v in prop::array::uniform9(-2.0f64..2.0)) {
        let p = Regime::Hlf.params();
        let s = State9::from_flat(&v);
        let lhs = l80_rhs(&flip23(&s), &p).unwrap().to_flat();
        let rhs = flip23(&l80_rhs(&s, &p).unwrap()).to_flat();
        for (a, b) in lhs.iter().zip(rhs) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn y_block_consistency(v in prop::array::uniform9(-2.0f64..2.0)) {
        let p = Regime::Slow.params();
        let s = State9::from_flat(&v);
        prop_assert_eq!(y_equation_rhs(&s.y, &s.x, &p).unwrap(), l80_rhs(&s, &p).unwrap().y);
    }

    /// d/dt sum a_i y_i^2 vanishes pointwise for the inviscid uncoupled y-equation.
    #[test]
    fn inviscid_energy_rate_vanishes(y in prop::array::uniform3(-2.0f64..2.0)) {
        let p = ModelParams { nu0: 0.0, ..Regime::Hlf.params() };
        let d = y_equation_rhs(&y, &[0.0; 3], &p).unwrap();
        let rate: f64 = (0..3).map(|i| 2.0 * p.a[i] * y[i] * d[i]).sum();
        prop_assert!(rate.abs() <= 1e-14 * (1.0 + y_energy(&y, &p)));
    }

    #[test]
    fn evaluation_is_pure(v in prop::array::uniform9(-2.0f64..2.0)) {
        let p = Regime::Hlf.params();
        let s = State9::from_flat(&v);
        let a = l80_rhs(&s, &p).unwrap().to_flat().map(f64::to_bits);
        let b = l80_rhs(&s, &p).unwrap().to_flat().map(f64::to_bits);
        prop_assert_eq!(a, b);
    }
}
