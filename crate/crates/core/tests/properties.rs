use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shiftbeam::config::RunConfig;
use shiftbeam::errors::{energy_norm, eoc};
use shiftbeam::fem::{bilinear_form, DiscreteSpace, PairField};
use shiftbeam::interp::Interpolator;
use shiftbeam::mesh::{mesh_diagnostics, Mesh1D, MeshParams, MeshSpec};
use shiftbeam::problem::{example_by_name, BcOrder};
use shiftbeam::quadrature::GaussRule;
use shiftbeam::run::COMPARED_MESHES;

fn example(idx: usize, m: u32, eps: f64) -> shiftbeam::problem::ProblemSpec {
    let spec = example_by_name(["ex1", "ex2"][idx], eps).unwrap();
    spec.with_m(BcOrder::from_int(m).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bilinear_form_is_coercive(
        ex in 0usize..2,
        m in 1u32..=2,
        fam in 0usize..4,
        q in 1usize..=3,
        log_eps in -6.0f64..-1.0,
        seed in any::<u64>(),
    ) {
        let spec = example(ex, m, 10f64.powf(log_eps));
        let mesh = Mesh1D::build(COMPARED_MESHES[fam], MeshParams::new(32, spec.epsilon, spec.beta, q)).unwrap();
        let space = DiscreteSpace::new(mesh, q, spec.m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = 10f64.powf(rng.gen_range(-3.0..3.0));
        let x: Vec<f64> = (0..space.n_dofs()).map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
        let v = PairField::from_reduced(&space, &x).unwrap();
        let b = bilinear_form(&spec, &v, &v);
        let n2 = energy_norm(&spec, &v).powi(2);
        prop_assert!(b >= n2 - 1e-10 * n2.max(b.abs()), "B = {b}, |||v|||² = {n2}");
    }

    #[test]
    fn interpolation_reproduces_polynomials(
        q in 1usize..=5,
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        fam in 0usize..4,
        log_eps in -6.0f64..-1.0,
    ) {
        let mesh = Mesh1D::build(COMPARED_MESHES[fam], MeshParams::new(16, 10f64.powf(log_eps), 1.0, q)).unwrap();
        let p = |x: f64| coeffs[..=q].iter().rev().fold(0.0, |acc, c| acc * (x - 1.0) + c);
        let ip = Interpolator::new(q);
        let vals = ip.interpolate_on_mesh(&mesh, &p);
        let lgl = shiftbeam::quadrature::LagrangeBasis::new(q);
        for cell in 0..mesh.n_cells() {
            let (a, b) = mesh.cell(cell);
            for (j, s) in lgl.nodes().iter().enumerate() {
                let exact = p(a + (b - a) * s);
                prop_assert!((vals[cell * q + j] - exact).abs() <= 1e-12 * (1.0 + exact.abs()),
                    "cell {cell} node {j}: {} vs {exact}", vals[cell * q + j]);
            }
        }
    }

    #[test]
    fn interpolation_matches_endpoints_and_moments(
        q in 2usize..=5,
        k in 0.5f64..5.0,
        phase in 0.0f64..3.0,
        n in prop::sample::select(vec![8usize, 16, 32]),
    ) {
        let v = |x: f64| (k * x + phase).sin() + (0.3 * x).exp();
        let mesh = Mesh1D::uniform(n).unwrap();
        let ip = Interpolator::new(q);
        let vals = ip.interpolate_on_mesh(&mesh, &v);
        let lgl = shiftbeam::quadrature::LagrangeBasis::new(q);
        let rule = GaussRule::new(30);
        let mut phi = vec![0.0; q + 1];
        for cell in 0..mesh.n_cells() {
            let (a, b) = mesh.cell(cell);
            let c = &vals[cell * q..=cell * q + q];
            prop_assert!((c[0] - v(a)).abs() <= 1e-12);
            prop_assert!((c[q] - v(b)).abs() <= 1e-12);
            for deg in 0..q - 1 {
                let mom = rule.integrate(0.0, 1.0, |s| {
                    lgl.values(s, &mut phi);
                    let iv: f64 = c.iter().zip(&phi).map(|(ci, p)| ci * p).sum();
                    (iv - v(a + (b - a) * s)) * s.powi(deg as i32)
                });
                prop_assert!(mom.abs() <= 1e-12, "cell {cell} moment {deg}: {mom}");
            }
        }
    }

    #[test]
    fn meshes_satisfy_invariants(
        fam in 0usize..10,
        q in 1usize..=4,
        k in 0u32..6,
        log_eps in -8.0f64..-0.5,
    ) {
        let spec = MeshSpec::all()[fam];
        let n = 8 << k;
        let mesh = Mesh1D::build(spec, MeshParams::new(n, 10f64.powf(log_eps), 1.0, q)).unwrap();
        let rep = mesh_diagnostics(&mesh);
        prop_assert!(rep.all_ok(), "{} N = {n} q = {q} ε = 1e{log_eps:.2}: {rep:?}", spec.label());
    }

    #[test]
    fn config_round_trips(
        eps in 1e-8f64..1.0,
        qs in prop::collection::vec(1usize..=6, 1..4),
        ks in prop::collection::vec(1usize..40, 1..5),
        fam in 0usize..10,
        sigma in prop::option::of(0.5f64..6.0),
        gamma in prop::option::of(0.05f64..1.0),
        shift in prop::option::of(-2.0f64..2.0),
    ) {
        let spec = MeshSpec::all()[fam];
        let label = spec.label();
        let (bm, im) = label.split_once('-').unwrap();
        let cfg = RunConfig {
            epsilon: eps,
            q: qs,
            n: ks.iter().map(|k| 8 * k).collect(),
            bmesh: bm.into(),
            imesh: im.into(),
            sigma,
            weak_exponent: gamma,
            shift,
            ..RunConfig::default()
        };
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.mesh_spec().unwrap(), spec);
    }

    #[test]
    fn eoc_of_exact_powers(e in 1e-12f64..1.0, k in 0i32..6) {
        let r = eoc(e, e / 2f64.powi(k)).unwrap();
        prop_assert!((r - k as f64).abs() < 1e-12);
    }
}
