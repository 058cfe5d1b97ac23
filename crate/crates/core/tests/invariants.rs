//! Property tests for the structural invariants of the operators and norms.

use lpx::atoms::{synthesize_molecule, Ball, MoleculeParams, TentAtom};
use lpx::grid::{GridSpec, HalfSpaceField, SampledFunction, ScaleGrid};
use lpx::kernels::{build_annular_kernel, calderon_companion};
use lpx::maximal::{hl_maximal, BallFamily};
use lpx::spaces::{AxisExponent, ExponentSpec, OrliczSpec, SpaceDescriptor, WeightSpec};
use lpx::squarefuncs::{g_function, g_lambda_star, lusin_area, tent_functional};
use lpx::transforms::{build_field, ConvolutionPlan};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

const N: usize = 64;

fn grid() -> GridSpec {
    GridSpec::new(1, 2.0, N).unwrap()
}

fn scales() -> ScaleGrid {
    ScaleGrid::new(1.0 / 16.0, 1.0, 4).unwrap()
}

fn plan() -> ConvolutionPlan {
    ConvolutionPlan::new(&build_annular_kernel(grid()).unwrap(), &scales())
}

fn function(values: Vec<(f64, f64)>) -> SampledFunction {
    SampledFunction::new(grid(), values.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), N)
}

fn spaces() -> Vec<SpaceDescriptor> {
    vec![
        SpaceDescriptor::Lebesgue { p: 2.0 },
        SpaceDescriptor::Lebesgue { p: 0.7 },
        SpaceDescriptor::Weighted { p: 1.5, weight: WeightSpec::Power { a: 0.5 } },
        SpaceDescriptor::Morrey { p: 2.0, r: 1.0 },
        SpaceDescriptor::MixedNorm { p: vec![AxisExponent::Finite(3.0)] },
        SpaceDescriptor::Variable { exponent: ExponentSpec::Gaussian { p_inf: 1.5, p_center: 3.0, width: 0.5 } },
        SpaceDescriptor::OrliczSlice { phi: OrliczSpec::PowerLog { p: 1.5 }, r: 2.0, t: 0.5 },
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn field_is_linear(u in samples(), v in samples(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = plan();
        let (f, g) = (function(u), function(v));
        let combo = f.scaled(a.into()).add(&g.scaled(b.into())).unwrap();
        let lhs = build_field(&combo, &p).unwrap();
        let (ff, fg) = (build_field(&f, &p).unwrap(), build_field(&g, &p).unwrap());
        let scale = ff.values().iter().chain(fg.values()).map(|z| z.norm()).fold(1.0, f64::max);
        for ((l, x), y) in lhs.values().iter().zip(ff.values()).zip(fg.values()) {
            prop_assert!((l - (x * a + y * b)).norm() <= 1e-10 * scale * (a.abs() + b.abs() + 1.0));
        }
    }

    #[test]
    fn square_functions_are_sublinear_and_homogeneous(u in samples(), v in samples(), c in -3.0f64..3.0) {
        let p = plan();
        let (f, g) = (function(u), function(v));
        let sum = f.add(&g).unwrap();
        type Op = fn(&SampledFunction, &ConvolutionPlan) -> SampledFunction;
        let ops: [Op; 3] = [
            |f, p| lusin_area(f, p).unwrap(),
            |f, p| g_function(f, p).unwrap(),
            |f, p| g_lambda_star(f, p, 2.0).unwrap(),
        ];
        for op in ops {
            let (a, b, s) = (op(&f, &p), op(&g, &p), op(&sum, &p));
            let scaled = op(&f.scaled(c.into()), &p);
            for i in 0..N {
                prop_assert!(s.values()[i].re <= (a.values()[i].re + b.values()[i].re) * (1.0 + 1e-10) + 1e-12);
                prop_assert!(close(scaled.values()[i].re, c.abs() * a.values()[i].re, 1e-9));
            }
        }
    }

    #[test]
    fn tent_at_unit_aperture_is_lusin_area(u in samples()) {
        let p = plan();
        let f = function(u);
        let a = tent_functional(&build_field(&f, &p).unwrap(), 1.0).unwrap();
        prop_assert_eq!(a, lusin_area(&f, &p).unwrap());
    }

    #[test]
    fn longer_scale_range_never_decreases_g(u in samples()) {
        let k = build_annular_kernel(grid()).unwrap();
        let f = function(u);
        let short = g_function(&f, &ConvolutionPlan::new(&k, &scales())).unwrap();
        let long = ScaleGrid::new(1.0 / 32.0, 2.0, 4).unwrap();
        let wide = g_function(&f, &ConvolutionPlan::new(&k, &long)).unwrap();
        for (s, w) in short.values().iter().zip(wide.values()) {
            prop_assert!(w.re >= s.re * (1.0 - 1e-10));
        }
    }

    #[test]
    fn lattice_property(u in samples(), shrink in prop::collection::vec(0.0f64..=1.0, N)) {
        let f = function(u);
        let g = SampledFunction::new(
            grid(),
            f.values().iter().zip(&shrink).map(|(z, s)| z * s).collect(),
        ).unwrap();
        for x in spaces() {
            let r = x.resolve(&grid()).unwrap();
            prop_assert!(r.norm(&g).unwrap() <= r.norm(&f).unwrap() + 1e-10, "{}", x.label());
        }
    }

    #[test]
    fn fatou_truncations_increase_to_the_norm(u in samples()) {
        let f = function(u).map_modulus(|v| v).unwrap();
        for x in spaces() {
            let r = x.resolve(&grid()).unwrap();
            let full = r.norm(&f).unwrap();
            let mut last = 0.0;
            for m in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let t = f.map_modulus(|v| v.min(m)).unwrap();
                let n = r.norm(&t).unwrap();
                prop_assert!(n >= last - 1e-10 && n <= full + 1e-10, "{}", x.label());
                last = n;
            }
            prop_assert!(close(last, full, 1e-9), "{}", x.label());
        }
    }

    #[test]
    fn triangle_inequality_above_floor_one(u in samples(), v in samples()) {
        let (f, g) = (function(u), function(v));
        let sum = f.add(&g).unwrap();
        for x in spaces() {
            let r = x.resolve(&grid()).unwrap();
            if r.floor_exponent() < 1.0 {
                continue;
            }
            let lhs = r.norm(&sum).unwrap();
            prop_assert!(lhs <= (r.norm(&f).unwrap() + r.norm(&g).unwrap()) * (1.0 + 1e-7), "{}", x.label());
        }
    }

    #[test]
    fn maximal_power_inequality(u in samples(), p in prop::sample::select(vec![1.0, 1.5, 2.0])) {
        let f = function(u);
        let balls = BallFamily::dyadic(&grid());
        let m = hl_maximal(&f, &balls);
        let mp = hl_maximal(&f.map_modulus(|v| v.powf(p)).unwrap(), &balls);
        for (a, b) in m.values().iter().zip(mp.values()) {
            prop_assert!(a.re.powf(p) <= b.re * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn maximal_is_sublinear(u in samples(), v in samples()) {
        let (f, g) = (function(u), function(v));
        let balls = BallFamily::dyadic(&grid());
        let s = hl_maximal(&f.add(&g).unwrap(), &balls);
        let (a, b) = (hl_maximal(&f, &balls), hl_maximal(&g, &balls));
        for i in 0..N {
            prop_assert!(s.values()[i].re <= (a.values()[i].re + b.values()[i].re) * (1.0 + 1e-12));
            prop_assert!(a.values()[i].re >= f.values()[i].norm() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn molecule_synthesis_is_linear(
        u in prop::collection::vec(-1.0f64..1.0, N * 24),
        v in prop::collection::vec(-1.0f64..1.0, N * 24),
        a in -2.0f64..2.0,
    ) {
        let (g, s) = (grid(), ScaleGrid::new(1.0 / 16.0, 4.0, 4).unwrap());
        prop_assert_eq!(s.len(), 24);
        let pair = calderon_companion(&build_annular_kernel(g).unwrap(), &s).unwrap();
        let params = MoleculeParams::default_for(1, 1.0);
        let atom = |vals: Vec<f64>| TentAtom {
            field: HalfSpaceField::new(g, s.clone(), vals.into_iter().map(|x| Complex64::new(x, 0.0)).collect()).unwrap(),
            ball: Ball::new([0.0, 0.0], 1.0),
            coefficient: 1.0,
        };
        let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let m = |vals: Vec<f64>| synthesize_molecule(&atom(vals), &pair.psi, &s, params).unwrap().func;
        let (mu, mv, mc) = (m(u), m(v), m(combo));
        let scale = mu.max_modulus().max(mv.max_modulus()).max(1e-300);
        for i in 0..N {
            let want = mu.values()[i] * a + mv.values()[i];
            prop_assert!((mc.values()[i] - want).norm() <= 1e-10 * scale * (a.abs() + 1.0));
        }
    }

    #[test]
    fn csv_round_trip_is_bit_identical(u in samples()) {
        let f = function(u);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        lpx::io::write_csv(&f, &path).unwrap();
        prop_assert_eq!(lpx::io::read_csv(&path, &grid()).unwrap(), f);
    }
}

#[test]
fn indicators_have_finite_norms() {
    let g = grid();
    for x in spaces() {
        let r = x.resolve(&g).unwrap();
        for radius in BallFamily::dyadic(&g).radii() {
            let n = r.norm(&Ball::new([0.3, 0.0], *radius).indicator(&g)).unwrap();
            assert!(n.is_finite() && n > 0.0, "{}", x.label());
        }
    }
}
