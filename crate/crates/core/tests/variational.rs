mod common;

use std::f64::consts::PI;

use bubbletower_core::func_core::{find_critical_points, parse_candidate};
use bubbletower_core::variational::{
    bubble, bubble_energy, build_quadrature, concentrated_rule, energy_constant,
    energy_constant_numeric, energy_jk, energy_jk_subcritical, expansion_sign_check,
    fit_through_origin, gradient_jk, Combination, Constant, ExprFunction, Scaled, TestFunction,
};
use bubbletower_core::{expr, sphere, CriticalPoint, Error, SphereSpec};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Γ(k/2) for positive integers k.
fn gamma_half(k: u32) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// ∫_{Sⁿ} Π xᵢ^{αᵢ} for even exponents: 2ΠΓ((αᵢ+1)/2)/Γ(Σ(αᵢ+1)/2).
fn monomial_integral(alpha: &[u32]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let num: f64 = alpha.iter().map(|a| gamma_half(a + 1)).product();
    2.0 * num / gamma_half(alpha.iter().map(|a| a + 1).sum())
}

fn monomial(alpha: &[u32]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        x.iter()
            .zip(alpha)
            .map(|(v, a)| v.powi(*a as i32))
            .product()
    }
}

fn positive_function(rng: &mut ChaCha8Rng, n: usize) -> ExprFunction {
    ExprFunction(expr::parse(&random_positive_expression(rng, n)).unwrap())
}

#[test]
fn quadrature_volume_and_moments() {
    for level in 1..=6 {
        let q = build_quadrature(3, level).unwrap();
        assert!((q.integrate(|_| 1.0) - 2.0 * PI * PI).abs() < 1e-10 * 2.0 * PI * PI);
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }
    let q = build_quadrature(3, 2).unwrap();
    let vol = sphere::volume(3);
    assert!((q.integrate(|x| x[3] * x[3]) - vol / 4.0).abs() < 1e-12 * vol);
    let q5 = build_quadrature(5, 2).unwrap();
    assert!(q5.integrate(|x| x[0] * x[1]).abs() < 1e-12);
    for i in 0..6 {
        assert!(q5.integrate(|x| x[i]).abs() < 1e-8 * sphere::volume(5));
    }
    assert!(build_quadrature(8, 2).is_err());
    assert!(build_quadrature(3, 0).is_err());
}

#[test]
fn quadrature_growth_is_polynomial() {
    let counts: Vec<usize> = (1..=5)
        .map(|l| build_quadrature(3, l).unwrap().len())
        .collect();
    for w in counts.windows(2) {
        assert!(w[1] > w[0]);
    }
    // Tensor rule on S³ grows like level³.
    assert!(counts[4] <= 20 * 5usize.pow(3));
}

#[test]
fn quadrature_cache_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rule.bin");
    let q = build_quadrature(4, 3).unwrap();
    q.write_cache(&path).unwrap();
    let back = bubbletower_core::variational::QuadratureRule::read_cache(&path).unwrap();
    assert_eq!(q, back);
}

#[test]
fn bubble_at_unit_concentration_is_the_constant_solution() {
    for n in 3..=7 {
        let nf = n as f64;
        let a = {
            let mut a = vec![0.0; n + 1];
            a[0] = 1.0;
            a
        };
        let phi = bubble(&a, 1.0, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let c = phi.value(&random_unit(&mut rng, n + 1));
        // n(n−1)c = c^{(n+2)/(n−2)} solved for c > 0.
        let oracle = (nf * (nf - 1.0)).powf((nf - 2.0) / 4.0);
        assert!((c - oracle).abs() < 1e-12 * oracle);
        assert!((nf * (nf - 1.0) * c - c.powf((nf + 2.0) / (nf - 2.0))).abs() < 1e-9 * c);
    }
}

#[test]
fn bubble_residual_and_symmetry() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_unit(&mut rng, n + 1);
    let phi = bubble(&a, 5.0, n).unwrap();
    let q = build_quadrature(n, 3).unwrap();
    let worst = q.points.iter().map(|x| phi.residual(x)).fold(0.0, f64::max);
    assert!(worst < 1e-6, "residual {worst}");
    for _ in 0..50 {
        let x = random_unit(&mut rng, n + 1);
        assert!(phi.value(&x) > 0.0);
        // Reflect x through the hyperplane spanned by a and a random direction.
        let w = sphere::project_tangent(&a, &random_unit(&mut rng, n + 1));
        let w = sphere::normalize(&w);
        let d = sphere::dot(&x, &w);
        let y: Vec<f64> = x.iter().zip(&w).map(|(xi, wi)| xi - 2.0 * d * wi).collect();
        assert!((phi.value(&x) - phi.value(&y)).abs() < 1e-12 * phi.value(&x));
    }
    assert!(bubble(&a, 0.5, n).is_err());
    assert!(bubble(&a[..3], 2.0, n).is_err());
}

#[test]
fn constant_function_attains_the_yamabe_constant() {
    let n = 5;
    let k = parse_candidate("1", SphereSpec::new(n).unwrap()).unwrap();
    let q = build_quadrature(n, 3).unwrap();
    let j = energy_jk(&k, &Constant(2.5), &q).unwrap();
    let nf = n as f64;
    let oracle = nf * (nf - 1.0) * sphere::volume(n).powf(2.0 / nf);
    assert!((j - oracle).abs() < 1e-10 * oracle);
    assert!((energy_constant(n) - oracle).abs() < 1e-12 * oracle);
    assert!(matches!(
        energy_jk(&k, &Constant(0.0), &q),
        Err(Error::ZeroDenominator)
    ));
}

#[test]
fn energy_constant_is_the_concentrated_limit() {
    for n in [3, 5] {
        let c = energy_constant_numeric(n, 5).unwrap();
        assert!((c - energy_constant(n)).abs() < 1e-8 * c);
    }
}

#[test]
fn subcritical_functional_at_zero_and_first_order() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = parse_candidate(
        &random_positive_expression(&mut rng, n),
        SphereSpec::new(n).unwrap(),
    )
    .unwrap();
    let u = positive_function(&mut rng, n);
    let q = build_quadrature(n, 4).unwrap();
    let j = energy_jk(&k, &u, &q).unwrap();
    let j0 = energy_jk_subcritical(&k, &u, 0.0, &q).unwrap();
    assert!((j - j0).abs() <= 1e-12 * j);
    let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&t| (energy_jk_subcritical(&k, &u, t, &q).unwrap() - j).abs() / t)
        .collect();
    // |J_τ − J|/τ settles to the derivative in τ.
    assert!(ratios.iter().all(|r| r.is_finite() && *r < 1e3 * j));
    assert!((ratios[3] - ratios[2]).abs() < 0.02 * ratios[2]);
    assert!(energy_jk_subcritical(&k, &u, -0.1, &q).is_err());
    assert!(energy_jk_subcritical(&k, &u, 2.0, &q).is_err());
}

#[test]
fn subcritical_bubble_energy_approaches_the_limit() {
    let n = 5;
    let k = candidate("height_s5.txt");
    let mut a = vec![0.0; n + 1];
    a[n] = 1.0;
    let limit = energy_constant(n) / k.value(&a).powf(3.0 / 5.0);
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&tau: &f64| {
            let lambda = tau.powf(-0.5);
            let phi = bubble(&a, lambda, n).unwrap();
            let q = concentrated_rule(n, 5, &a, lambda).unwrap();
            (energy_jk_subcritical(&k, &phi, tau, &q).unwrap() - limit).abs() / limit
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 1e-3, "{errs:?}");
}

#[test]
fn scaling_and_euler_identity() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let k = parse_candidate(
        &random_positive_expression(&mut rng, n),
        SphereSpec::new(n).unwrap(),
    )
    .unwrap();
    let q = build_quadrature(n, 3).unwrap();
    for _ in 0..5 {
        let u = positive_function(&mut rng, n);
        let j = energy_jk(&k, &u, &q).unwrap();
        assert!((energy_jk(&k, &Scaled(&u, 3.0), &q).unwrap() - j).abs() <= 1e-12 * j);
        assert!(
            (energy_jk_subcritical(&k, &Scaled(&u, 0.2), 0.05, &q).unwrap()
                - energy_jk_subcritical(&k, &u, 0.05, &q).unwrap())
            .abs()
                <= 1e-12 * j
        );
        let g = gradient_jk(&k, &u, &u, &q).unwrap();
        assert!(g.abs() <= 1e-12 * j, "∂J(u)u = {g}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let k = parse_candidate(
        &random_positive_expression(&mut rng, n),
        SphereSpec::new(n).unwrap(),
    )
    .unwrap();
    let q = build_quadrature(n, 3).unwrap();
    let h = 1e-5;
    for _ in 0..4 {
        let u = positive_function(&mut rng, n);
        let v = ExprFunction(
            expr::parse(&format!("x1 - 0.5*x3*x4 + {}", rng.gen_range(0.0..1.0))).unwrap(),
        );
        let g = gradient_jk(&k, &u, &v, &q).unwrap();
        let plus = energy_jk(&k, &Combination { u: &u, v: &v, h }, &q).unwrap();
        let minus = energy_jk(
            &k,
            &Combination {
                u: &u,
                v: &v,
                h: -h,
            },
            &q,
        )
        .unwrap();
        let fd = (plus - minus) / (2.0 * h);
        assert!(
            (g - fd).abs() <= 1e-5 * g.abs().max(1e-3),
            "analytic {g}, fd {fd}"
        );
    }
}

#[test]
fn constant_solution_is_critical() {
    let n = 5;
    let k = parse_candidate("1", SphereSpec::new(n).unwrap()).unwrap();
    let q = build_quadrature(n, 3).unwrap();
    let c = (20.0f64).powf(0.75);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..5 {
        let v = positive_function(&mut rng, n);
        let g = gradient_jk(&k, &Constant(c), &v, &q).unwrap();
        assert!(g.abs() < 1e-10, "∂J = {g}");
    }
}

#[test]
fn energy_is_bounded_below_by_the_sobolev_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [3, 5] {
        let q = build_quadrature(n, 4).unwrap();
        let nf = n as f64;
        for _ in 0..10 {
            let k = parse_candidate(
                &random_positive_expression(&mut rng, n),
                SphereSpec::new(n).unwrap(),
            )
            .unwrap();
            let kmax = q.points.iter().map(|x| k.value(x)).fold(0.0, f64::max);
            let bound = energy_constant(n) / kmax.powf((nf - 2.0) / nf);
            let u = positive_function(&mut rng, n);
            let j = energy_jk(&k, &u, &q).unwrap();
            assert!(j >= bound * (1.0 - 1e-9), "J = {j} below {bound}");
        }
        // Concentrated bubbles approach the bound from above near the maximum.
        let k = parse_candidate("2 + x1", SphereSpec::new(n).unwrap()).unwrap();
        let mut a = vec![0.0; n + 1];
        a[0] = 1.0;
        let e = bubble_energy(&k, &a, 32.0, 5).unwrap().energy;
        assert!(e >= energy_constant(n) / 3f64.powf((nf - 2.0) / nf) * (1.0 - 1e-9));
    }
}

#[test]
fn bubble_energy_converges_monotonically_for_the_height_function() {
    let k = candidate("height_s5.txt");
    let pts = find_critical_points(&k, 4).unwrap();
    for p in &pts {
        let limit = energy_constant(5) / p.value.powf(3.0 / 5.0);
        let gaps: Vec<f64> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&l| (bubble_energy(&k, &p.location, l, 6).unwrap().energy - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
}

#[test]
fn expansion_sign_examples() {
    let k = candidate("height_s5.txt");
    let pts = find_critical_points(&k, 4).unwrap();
    let lambdas = [8.0, 16.0, 32.0, 64.0];
    for p in &pts {
        let r = expansion_sign_check(&k, p, &lambdas, 6).unwrap();
        assert!(r.sign_ok);
        assert_eq!(r.coefficient > 0.0, p.laplacian < 0.0);
        assert_eq!(r.samples.len(), 4);
    }
    let c = parse_candidate("3", SphereSpec::new(5).unwrap()).unwrap();
    let mut flat = CriticalPoint::synthetic(5, 3.0, 0, 0.0);
    flat.location = pts[0].location.clone();
    let r = expansion_sign_check(&c, &flat, &lambdas, 6).unwrap();
    assert_eq!(r.expected_sign, 0);
    assert!(r.coefficient.abs() <= 1e-8 * r.limit, "{}", r.coefficient);
    assert!(matches!(
        expansion_sign_check(&k, &pts[0], &lambdas[..2], 6),
        Err(Error::Fit(_))
    ));
    let k3 = candidate("height_s3.txt");
    let p3 = find_critical_points(&k3, 4).unwrap();
    assert!(matches!(
        expansion_sign_check(&k3, &p3[0], &lambdas, 6),
        Err(Error::UnsupportedDimension { .. })
    ));
}

#[test]
fn through_origin_fit_recovers_slope() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [2.0, 4.0, 6.0, 8.0];
    let (b, se) = fit_through_origin(&x, &y).unwrap();
    assert!((b - 2.0).abs() < 1e-15 && se < 1e-15);
    assert!(fit_through_origin(&[0.0; 3], &[1.0; 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_is_exact_for_low_degree_monomials(
        n in 2usize..=5,
        level in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alpha = vec![0u32; n + 1];
        for _ in 0..rng.gen_range(0..=2 * level) {
            alpha[rng.gen_range(0..=n)] += 1;
        }
        let q = build_quadrature(n, level).unwrap();
        let got = q.integrate(monomial(&alpha));
        let want = monomial_integral(&alpha);
        prop_assert!((got - want).abs() <= 1e-10 * sphere::volume(n), "{alpha:?}: {got} vs {want}");
    }

    #[test]
    fn scaling_invariance_holds_for_random_data(seed in any::<u64>(), s in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let k = parse_candidate(&random_positive_expression(&mut rng, n), SphereSpec::new(n).unwrap()).unwrap();
        let q = build_quadrature(n, 3).unwrap();
        let u = positive_function(&mut rng, n);
        let j = energy_jk(&k, &u, &q).unwrap();
        prop_assert!((energy_jk(&k, &Scaled(&u, s), &q).unwrap() - j).abs() <= 1e-12 * j);
    }
}
