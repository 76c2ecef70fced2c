//! Randomized invariants. Each property encodes an identity or monotonicity
//! the closed forms must satisfy for every parameter choice, not just the
//! frozen spot values.

use proptest::prelude::*;

use bwmean::binomial::{
    bernoulli_sum, binom_pmf, bound_o_rhs, inverse_moment_coefficients, kl_tail_bound,
    BinomialParams,
};
use bwmean::bwm::{mixture_cdf, BwmProblem, PerKMode};
use bwmean::cramer::{lattice_check_1d, Atom, Verdict};
use bwmean::distributions::{exact_standardized_mean_cdf, make_exponential, standardized_moments};
use bwmean::edgeworth::normal_cdf;
use bwmean::montecarlo::empirical_cdf;
use bwmean::rng::SplitMix64;
use bwmean::special::{gamma_p, gamma_q};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_sums_to_one(n in 1u64..2000, p in 0.01f64..0.99) {
        let b = BinomialParams::new(n, p).unwrap();
        let mut total = 0.0;
        for k in 0..=n {
            total += binom_pmf(&b, k as i64).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-11, "n={n} p={p}: {total}");
    }

    #[test]
    fn moment_identity_holds_for_random_parameters(
        n in 1u64..500,
        p in 0.02f64..0.98,
        alpha in -2.0f64..2.0,
    ) {
        let b = BinomialParams::new(n, p).unwrap();
        let lhs = bernoulli_sum(&b, alpha);
        let rhs = bound_o_rhs(&b, alpha);
        prop_assert!(
            (lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1e-300),
            "n={n} p={p} alpha={alpha}: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn incomplete_gamma_complement(a in 0.1f64..1000.0, mult in 0.05f64..3.0) {
        let x = a * mult;
        let s = gamma_p(a, x) + gamma_q(a, x);
        prop_assert!((s - 1.0).abs() < 1e-13, "a={a} x={x}: {s}");
    }

    #[test]
    fn normal_cdf_symmetry_and_monotonicity(x in -8.0f64..8.0, dx in 0.001f64..2.0) {
        prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        prop_assert!(normal_cdf(x + dx) >= normal_cdf(x));
    }

    #[test]
    fn oracle_cdf_is_a_cdf(k in 1u64..500, x in -6.0f64..6.0, dx in 0.001f64..2.0) {
        let e = make_exponential(1.0).unwrap();
        let lo = exact_standardized_mean_cdf(&e, k, x).unwrap();
        let hi = exact_standardized_mean_cdf(&e, k, x + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo, "k={k}: F({}) = {hi} < F({x}) = {lo}", x + dx);
    }

    #[test]
    fn mixture_jump_equals_atom(n in 1u64..200, p in 0.05f64..0.999, q in 3u32..5) {
        let prob = BwmProblem::new(
            make_exponential(1.0).unwrap(),
            BinomialParams::new(n, p).unwrap(),
            q,
        ).unwrap();
        // left limit taken at -1e-300: the continuous part is bitwise equal
        // to its value at 0 there, so the difference isolates the atom
        let left = mixture_cdf(&prob, -1e-300, PerKMode::Edgeworth).unwrap();
        let right = mixture_cdf(&prob, 0.0, PerKMode::Edgeworth).unwrap();
        let atom = prob.b.atom_at_zero();
        prop_assert!(((right - left) - atom).abs() <= 1e-14, "jump {} atom {atom}", right - left);
    }

    #[test]
    fn kl_tail_bound_dominates(n in 2u64..300, p in 0.05f64..0.95, frac in 0.05f64..0.95) {
        let b = BinomialParams::new(n, p).unwrap();
        let delta = frac * p;
        let (exact, bound) = kl_tail_bound(&b, delta).unwrap();
        prop_assert!(exact <= bound * (1.0 + 1e-12), "n={n} p={p} delta={delta}: {exact} > {bound}");
    }

    #[test]
    fn leading_inverse_moment_coefficient_is_one(
        alpha in 0.1f64..3.0,
        p in 0.05f64..0.95,
        k in 1usize..5,
    ) {
        let t = inverse_moment_coefficients(alpha, k, p).unwrap();
        prop_assert_eq!(t.c[0], 1.0);
        prop_assert_eq!(t.c.len(), k);
    }

    #[test]
    fn expansion_polynomials_have_fixed_parity(l3 in -1.5f64..1.5, extra in 0.0f64..6.0) {
        // any (λ3, λ4) with λ4 ≥ λ3² − 2 is realizable; p1 must be even,
        // p2 odd
        let l4 = l3 * l3 - 2.0 + extra;
        let c = bwmean::distributions::CumulantSet::new(4, vec![l3, l4]).unwrap();
        let set = bwmean::edgeworth::edgeworth_polynomials(&c, 4).unwrap();
        let p1 = &set.terms[0].1;
        let p2 = &set.terms[1].1;
        for (i, &a) in p1.coeffs.iter().enumerate() {
            if i % 2 == 1 {
                prop_assert_eq!(a, 0.0);
            }
        }
        for (i, &a) in p2.coeffs.iter().enumerate() {
            if i % 2 == 0 {
                prop_assert_eq!(a, 0.0);
            }
        }
    }

    #[test]
    fn constructed_rational_lattices_are_detected(
        x0_num in -20i64..20,
        den in 1i64..12,
        mult in 1i64..6,
        steps in proptest::collection::vec(0i64..30, 2..6),
    ) {
        // atoms x0 + δ·m with δ = mult/den: verdict must be Lattice with a
        // span that is an integer multiple of... at least δ·gcd of the m
        // differences, and every atom must sit on the reported lattice
        let delta = Atom::rational(mult, den).unwrap().value();
        let x0 = Atom::rational(x0_num, den).unwrap().value();
        let mut ms: Vec<i64> = steps;
        ms.sort_unstable();
        ms.dedup();
        prop_assume!(ms.len() >= 2);
        let atoms: Vec<Atom> = ms
            .iter()
            .map(|&m| Atom::rational(x0_num + mult * m, den).unwrap())
            .collect();
        let probs = vec![1.0 / atoms.len() as f64; atoms.len()];
        let v = lattice_check_1d(&atoms, &probs).unwrap();
        prop_assert_eq!(v.verdict, Verdict::Lattice);
        let d_rec = v.delta.unwrap();
        let x0_rec = v.x0.unwrap();
        prop_assert!(d_rec > 0.0);
        // recovered span is a multiple of the generating one
        let ratio = d_rec / delta;
        prop_assert!((ratio - ratio.round()).abs() < 1e-9, "ratio {ratio}");
        for a in &atoms {
            let m = (a.value() - x0_rec) / d_rec;
            prop_assert!((m - m.round()).abs() < 1e-9, "atom {} off-lattice", a.value());
        }
        // the anchor is the smallest atom (which itself lies on x0 + δℤ)
        let min_atom = x0 + delta * ms[0] as f64;
        prop_assert!((x0_rec - min_atom).abs() < 1e-12);
    }

    #[test]
    fn empirical_cdf_is_monotone_and_proper(
        samples in proptest::collection::vec(-1e3f64..1e3, 1..200),
        x in -1e3f64..1e3,
        dx in 0.0f64..100.0,
    ) {
        let e = empirical_cdf(&samples).unwrap();
        let lo = e.eval(x);
        let hi = e.eval(x + dx);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo);
        prop_assert_eq!(e.eval(1e9), 1.0);
        prop_assert_eq!(e.eval(-1e9), 0.0);
    }

    #[test]
    fn replication_keying_is_order_free(seed in any::<u64>(), rep in 0u64..1_000_000) {
        // the stream for (seed, rep) never depends on other replications
        let a: Vec<u64> = {
            let mut r = SplitMix64::for_replication(seed, rep);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r0 = SplitMix64::for_replication(seed, rep.wrapping_add(1));
            let _ = r0.next_u64();
            let mut r = SplitMix64::for_replication(seed, rep);
            (0..4).map(|_| r.next_u64()).collect()
        };
        prop_assert_eq!(a, b);
    }

    #[test]
    fn edgeworth_mixture_between_modes(n in 5u64..60, p in 0.2f64..0.9, x in -4.0f64..4.0) {
        // both per-k modes approximate the same law: they must agree to the
        // expansion's own error scale (loose sanity bound, not a rate claim)
        let prob = BwmProblem::new(
            make_exponential(1.0).unwrap(),
            BinomialParams::new(n, p).unwrap(),
            4,
        ).unwrap();
        let a = mixture_cdf(&prob, x, PerKMode::OracleExact).unwrap();
        let b = mixture_cdf(&prob, x, PerKMode::Edgeworth).unwrap();
        prop_assert!((a - b).abs() < 0.2, "n={n} p={p} x={x}: {a} vs {b}");
    }

    #[test]
    fn standardized_moments_match_simple_scaling(shape in 0.2f64..20.0, scale in 0.1f64..5.0) {
        // Gamma(k, θ): skew 2/√k, exkurt 6/k, independent of θ
        let d = bwmean::distributions::make_gamma(shape, scale).unwrap();
        let c = standardized_moments(&d, 4).unwrap();
        prop_assert!((c.lambda(3) - 2.0 / shape.sqrt()).abs() < 1e-12);
        prop_assert!((c.lambda(4) - 6.0 / shape).abs() < 1e-12);
    }
}
