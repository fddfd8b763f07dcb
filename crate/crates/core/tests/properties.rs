use proptest::prelude::*;
use shl::elliptic::{build_singular_field, ShootingOptions};
use shl::evolution::{
    merge_times, perron_iterate, perron_times, solve_heat, CatalogSource, ConcaveExtension, EvolutionConfig,
};
use shl::grid::{lp_norm, RadialField, RadialGrid};
use shl::nonlinearity::{find_beta, NonlinearitySpec, CATALOG};
use shl::semigroup::{smooth_fields, DiscEigenbasis, ModalOps};
use shl::transform::{eval_g_closed, eval_v, ModelPair};
use std::sync::OnceLock;

fn catalog() -> &'static Vec<NonlinearitySpec> {
    static C: OnceLock<Vec<NonlinearitySpec>> = OnceLock::new();
    C.get_or_init(|| CATALOG.iter().map(|k| NonlinearitySpec::parse(k).unwrap()).collect())
}

fn extensions() -> &'static Vec<ConcaveExtension> {
    static E: OnceLock<Vec<ConcaveExtension>> = OnceLock::new();
    E.get_or_init(|| catalog().iter().map(|s| ConcaveExtension::new(s, find_beta(s).unwrap()).unwrap()).collect())
}

// Re-projection of mode k loses accuracy once the wall cells hold only a few
// points per wavelength (≈10⁻⁵ at k = 10 for N = 2048, fourth order in h);
// N = 4096 keeps the composed semigroup within 10⁻⁸ down to t₁ = 10⁻³.
fn ops() -> &'static ModalOps {
    static O: OnceLock<ModalOps> = OnceLock::new();
    O.get_or_init(|| {
        let grid = RadialGrid::new(1.0, 4096, 14.0).unwrap();
        ModalOps::new(DiscEigenbasis::build(1.0, 128).unwrap(), grid).unwrap()
    })
}

#[test]
fn gaussian_tail_matches_erfc() {
    // power_exp(2, 0): f = e^{s²}, F(s) = (√π/2) erfc(s)
    let spec = NonlinearitySpec::parse("power_exp:q=2,r=0").unwrap();
    let half_sqrt_pi = std::f64::consts::PI.sqrt() / 2.0;
    for s in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 20.0] {
        let exact = (half_sqrt_pi * libm::erfc(s)).ln();
        let got = spec.log_big_f(s).unwrap();
        assert!((got - exact).abs() < 1e-9 * exact.abs().max(1.0), "s = {s}: {got} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_positive_and_f_monotone(k in 0usize..5, s1 in 0.05f64..30.0, ds in 1e-3f64..5.0) {
        let spec = &catalog()[k];
        prop_assert!(spec.evaluate(s1, 0).unwrap() > 0.0);
        let (a, b) = (spec.log_big_f(s1).unwrap(), spec.log_big_f(s1 + ds).unwrap());
        prop_assert!(b < a, "{}: log F({}) = {a}, log F({}) = {b}", spec.key, s1, s1 + ds);
    }

    #[test]
    fn f_increasing_at_large_s(k in 0usize..5, s in 2.0f64..30.0) {
        prop_assert!(catalog()[k].evaluate(s, 1).unwrap() > 0.0);
    }

    #[test]
    fn inverse_round_trip(k in 0usize..5, e in -30.0f64..0.0) {
        let spec = &catalog()[k];
        let sup = spec.big_f_at_zero().unwrap();
        let y = (10f64.powf(e)).min(0.5 * sup);
        let s = spec.eval_big_f_inv(y).unwrap();
        let back = spec.eval_big_f(s).unwrap();
        prop_assert!((back - y).abs() <= 10.0 * spec.quad_tol * y, "{}: y {y} back {back}", spec.key);
    }

    #[test]
    fn concave_extension_is_concave(k in 0usize..5, a in 0.0f64..6.0, d in 1e-3f64..1.0) {
        let h = &extensions()[k];
        let (x, y, z) = (h.eval(a).unwrap(), h.eval(a + d).unwrap(), h.eval(a + 2.0 * d).unwrap());
        prop_assert!(x - 2.0 * y + z <= 1e-9 * y.abs().max(1.0), "{}: {x} {y} {z}", h.spec.key);
        prop_assert!(h.at_zero() >= 0.0);
    }

    #[test]
    fn g_closed_scales_with_b(r in 1e-8f64..0.6) {
        let base = eval_g_closed(1.0, r).unwrap() * 4.0;
        for b in [1.5, 2.0, 3.0] {
            let scaled = eval_g_closed(b, r).unwrap() * 4.0 / b;
            prop_assert!((scaled - base).abs() <= 1e-14 * base.max(1e-300));
        }
    }

    #[test]
    fn model_v_decreasing(b in 1.05f64..4.0, r in 1e-6f64..0.9, f in 1.01f64..1.1) {
        let p = ModelPair::new(b).unwrap();
        prop_assert!((1.0 / p.b + 1.0 / p.b_dual - 1.0).abs() < 1e-14);
        prop_assert!(eval_v(b, r).unwrap() > eval_v(b, (r * f).min(0.999)).unwrap());
    }

    #[test]
    fn merged_times_strictly_increasing(mut xs in prop::collection::vec(0.0f64..0.2, 0..20)) {
        xs.push(0.05);
        let m = merge_times(0.1, &[&xs, &xs]);
        prop_assert!(m.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(m.iter().all(|&t| t > 0.0 && t <= 0.1 * (1.0 + 1e-12)));
        prop_assert_eq!(*m.last().unwrap(), 0.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn semigroup_identities(seed in any::<u64>(), t1 in 1e-3f64..0.05, t2 in 1e-3f64..0.05) {
        let o = ops();
        let phi = &smooth_fields(o.grid, 1, seed)[0];
        let a = o.heat_apply(&o.heat_apply(phi, t1).unwrap(), t2).unwrap();
        let b = o.heat_apply(phi, t1 + t2).unwrap();
        let d = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-8, "semigroup defect {d}");
        for p in [1.0, 2.0, f64::INFINITY] {
            prop_assert!(lp_norm(&b, p) <= lp_norm(phi, p) + 1e-8);
        }
    }

    #[test]
    fn heat_kernel_mass_at_most_one(t in 0.005f64..0.5) {
        let o = ops();
        let one = RadialField::constant(o.grid, 1.0);
        let u = o.heat_apply(&one, t).unwrap();
        // the truncated series rings near the wall at small t; the interior is exact
        let interior = &u.values[o.grid.intervals / 8..];
        prop_assert!(interior.iter().all(|&v| (-1e-8..=1.0 + 1e-8).contains(&v)), "t = {t}");
    }

    #[test]
    fn fd_heat_keeps_sign_and_sup(seed in any::<u64>()) {
        let grid = RadialGrid::new(1.0, 256, 8.0).unwrap();
        let u0 = &smooth_fields(grid, 1, seed)[0];
        let cfg = EvolutionConfig { dt: 1e-3, t_end: 0.05, ..Default::default() };
        let tr = solve_heat(u0, &cfg, &[0.01, 0.05]).unwrap();
        for f in &tr.fields {
            prop_assert!(f.min() >= -1e-12);
            prop_assert!(f.max() <= u0.max() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn perron_iterates_monotone(m in 2.0f64..5.0) {
        let spec = NonlinearitySpec::parse("smoothed:B=2").unwrap();
        let (prof, u) = build_singular_field(&spec, &ShootingOptions::default(), 1024, 12.0).unwrap();
        let ops = ModalOps::new(DiscEigenbasis::build(prof.radius, 128).unwrap(), u.grid).unwrap();
        let u0 = u.map(|x| x.min(m)).unwrap();
        let cfg = EvolutionConfig { t_end: 0.02, quad_steps: 16, ..Default::default() };
        let times = perron_times(0.02, 16, &[]);
        let res = perron_iterate(&CatalogSource(&spec), &u0, None, &ops, &times, &cfg).unwrap();
        prop_assert!(res.report.monotone, "min step {}", res.report.min_step);
        prop_assert!(res.report.converged);
    }
}
