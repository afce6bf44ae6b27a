use proptest::prelude::*;

use polystab::constants::{c_coeff, gamma_const, hardy_lambda, rellich_mu};
use polystab::constructions::comparison_oracle;
use polystab::io::fmt_f64;
use polystab::monotone::{compute_cp_prime, monotone_iterate, MonotoneConfig, PolynomialSpec};
use polystab::shooting::classify;
use polystab::{integrate, Dimension, IntegratorConfig, Problem};

fn d(m: u32, n: u32) -> Dimension {
    Dimension::new(m, n).unwrap()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn comparison_holds_for_m2(
        n in prop::sample::select(vec![5u32, 6, 7, 9, 12]),
        a0 in -1.0..1.0f64, a1 in -20.0..-2.0f64,
        g0 in 0.0..1.0f64, g1 in 0.0..1.0f64,
    ) {
        let lo = Problem::new(d(2, n), vec![a0, a1]).unwrap();
        let hi = Problem::new(d(2, n), vec![a0 + g0, a1 + g1]).unwrap();
        let v = comparison_oracle(&hi, &lo, &IntegratorConfig::with_r_max(20.0), 1e-8).unwrap();
        prop_assert!(v.holds, "{:?}", v.report.components);
    }

    #[test]
    fn solution_sits_on_one_side_of_its_polynomial(
        m in 1u32..=3,
        extra in 1u32..6,
        head in prop::collection::vec(-1.0..1.0f64, 3),
        last in -15.0..-1.0f64,
    ) {
        let n = 2 * m + extra;
        let mut a = head[..m as usize - 1].to_vec();
        a.push(last);
        let p = Problem::new(d(m, n), a).unwrap();
        let profile = integrate(&p, &IntegratorConfig::with_r_max(10.0)).unwrap();
        // (-Δ)^m (u - Ψ) = e^u with zero data: u < Ψ for odd m, u > Ψ for even m
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        for (&r, &u) in profile.grid().iter().zip(profile.u()).skip(1) {
            let gap = sign * (p.polynomial_part(r) - u);
            prop_assert!(gap > -1e-9 * (1.0 + u.abs()), "r = {r}, gap = {gap}");
        }
    }

    #[test]
    fn scaling_maps_solutions_to_solutions(
        m in 1u32..=2,
        n in 5u32..9,
        lam in 0.5..2.0f64,
        a0 in -1.0..1.0f64,
        a1 in -8.0..-3.0f64,
    ) {
        // u_λ(r) = u(λr) + 2m ln λ
        let a: Vec<f64> = if m == 1 { vec![a0] } else { vec![a0, a1] };
        let scaled: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(k, &x)| lam.powi(2 * k as i32) * x + if k == 0 { 2.0 * m as f64 * lam.ln() } else { 0.0 })
            .collect();
        let cfg = IntegratorConfig::with_r_max(6.0).tolerances(1e-11, 1e-13);
        let base = integrate(&Problem::new(d(m, n), a).unwrap(), &cfg).unwrap();
        let other = integrate(&Problem::new(d(m, n), scaled).unwrap(), &cfg).unwrap();
        let r_end = base.r_end().min(other.r_end() * lam) * 0.9;
        for i in 0..50 {
            let r = r_end * i as f64 / 49.0;
            let u = base.evaluate_component(0, r).unwrap().0;
            let v = other.evaluate_component(0, r / lam).unwrap().0 - 2.0 * m as f64 * lam.ln();
            prop_assert!((u - v).abs() <= 1e-6 * (1.0 + u.abs()), "r = {r}: {u} vs {v}");
        }
    }

    #[test]
    fn blow_up_radius_shrinks_as_the_last_datum_grows(
        n in 5u32..10,
        b in -1.0..2.0f64,
        step in 0.2..2.0f64,
    ) {
        let radius = |beta: f64| {
            let p = Problem::new(d(2, n), vec![0.0, beta]).unwrap();
            let (rec, _) = classify(&p, &IntegratorConfig::with_r_max(200.0)).unwrap();
            rec.classification.blow_up_radius()
        };
        let (r1, r2) = (radius(b), radius(b + step));
        prop_assert!(r1.is_some() && r2.is_some());
        prop_assert!(r2.unwrap() < r1.unwrap(), "{r1:?} vs {r2:?}");
    }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn float_formatting_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn hardy_constants_are_positive_above_the_critical_dimension(m in 1u32..=6, extra in 1u32..40) {
        let dim = d(m, 2 * m + extra);
        let g = gamma_const(dim).unwrap();
        prop_assert!(g.is_positive());
        let direct = if m % 2 == 1 { hardy_lambda(dim).unwrap() } else { rellich_mu(dim).unwrap() };
        prop_assert_eq!(g.exact(), direct.exact());
    }

    #[test]
    fn c_coeff_is_increasing_in_k(n in 1u32..64, k in 0u32..8) {
        prop_assert!(c_coeff(k + 1, n).exact() > c_coeff(k, n).exact());
    }
}

#[test]
fn monotone_iterate_is_ordered_in_c() {
    let dim = d(2, 6);
    let p = PolynomialSpec::radial(vec![0.0, 1.0]);
    let c0 = compute_cp_prime(&p, dim, 0).unwrap().c_tilde;
    let cfg = MonotoneConfig {
        nodes: 1025,
        ..Default::default()
    };
    let runs: Vec<_> = [0.0, 0.5, 2.0]
        .iter()
        .map(|dc| monotone_iterate(&p, dim, c0 + dc, &cfg).unwrap())
        .collect();
    for w in runs.windows(2) {
        assert!(w[0].sandwich && w[1].sandwich);
        // a larger C weakens the forcing, so z decreases node-wise
        assert!(w[0].z().iter().zip(w[1].z()).all(|(a, b)| *b <= *a + 1e-12));
    }
}
