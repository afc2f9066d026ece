use proptest::prelude::*;

use pcdesign::optimizer::{argmax_block, best_fraction};
use pcdesign::{
    conjectured_design, h_values, is_identifiable, log_det, mix_h, optimize_full, variance_at,
    variance_profile, variance_uniform, DepthDesign, ModelSpec, OptimOptions, PairSpace, Profile,
    Rational,
};

fn spec_strategy(max_k: usize) -> impl Strategy<Value = ModelSpec> {
    (4..=max_k)
        .prop_flat_map(|k| (Just(k), 4..=k))
        .prop_map(|(k, s)| ModelSpec::new(k, s).unwrap())
}

/// Raw nonnegative weights for depths 1..=S; identifiability checked later.
fn weights_strategy(s: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], s)
        .prop_filter("all zero", |w| w.iter().sum::<f64>() > 0.0)
}

fn design(spec: ModelSpec, raw: &[f64]) -> DepthDesign {
    let total: f64 = raw.iter().sum();
    DepthDesign::from_weights(spec, raw.iter().map(|w| w / total).collect()).unwrap()
}

fn spec_and_two_designs() -> impl Strategy<Value = (ModelSpec, Vec<f64>, Vec<f64>)> {
    spec_strategy(12).prop_flat_map(|spec| {
        (
            Just(spec),
            weights_strategy(spec.s()),
            weights_strategy(spec.s()),
        )
    })
}

proptest! {
    #[test]
    fn log_det_is_concave((spec, a, b) in spec_and_two_designs(), lambda in 0.0f64..1.0) {
        let (da, db) = (design(spec, &a), design(spec, &b));
        prop_assume!(is_identifiable(&da) && is_identifiable(&db));
        let mixed: Vec<f64> = da.weights().iter().zip(db.weights())
            .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
            .collect();
        let dm = DepthDesign::from_weights(spec, mixed).unwrap();
        let lhs = log_det(&mix_h(&dm)).unwrap();
        let rhs = lambda * log_det(&mix_h(&da)).unwrap() + (1.0 - lambda) * log_det(&mix_h(&db)).unwrap();
        prop_assert!(lhs >= rhs - 1e-9);
    }

    #[test]
    fn variance_equals_gradient_and_averages_to_p((spec, a, _) in spec_and_two_designs()) {
        let d = design(spec, &a);
        prop_assume!(is_identifiable(&d));
        let info = mix_h(&d);
        let dims = spec.dims().blocks();
        let mut weighted = 0.0;
        for depth in 1..=spec.s() {
            let hd = h_values(&spec, depth).unwrap().to_f64();
            let grad: f64 = (0..4).map(|r| dims[r] as f64 * hd.h()[r] / info.h()[r]).sum();
            let v = variance_at(&info, depth);
            prop_assert!((grad - v).abs() <= 1e-9 * v.max(1.0), "d={} grad={} V={}", depth, grad, v);
            weighted += d.weight(depth) * v;
        }
        prop_assert!((weighted - spec.p() as f64).abs() <= 1e-9 * spec.p() as f64);
    }

    #[test]
    fn block_values_are_symmetric_in_depth(k in 4usize..=40, s_off in 0usize..=36, d_raw in 0usize..=40) {
        let s = 4 + s_off % (k - 3);
        let d = d_raw % (s + 1);
        let space = PairSpace::new(k, s).unwrap();
        let left = h_values(&space, d).unwrap();
        let right = h_values(&space, s - d).unwrap();
        prop_assert_eq!(&left.h()[1], &right.h()[1]);
        prop_assert_eq!(&left.h()[3], &right.h()[3]);
    }

    #[test]
    fn third_order_block_is_a_downward_quartic(k in 4usize..=40, s_off in 0usize..=36) {
        let s = 4 + s_off % (k - 3);
        let space = PairSpace::new(k, s).unwrap();
        // fourth finite difference of h4 at any start is 4! times the leading coefficient
        for start in 0..=s - 4 {
            let h: Vec<Rational> = (start..start + 5)
                .map(|d| h_values(&space, d).unwrap().h()[3].clone())
                .collect();
            let diff4 = &h[4] - &h[3] * Rational::from_integer(4.into())
                + &h[2] * Rational::from_integer(6.into())
                - &h[1] * Rational::from_integer(4.into())
                + &h[0];
            let den = (k * (k - 1) * (k - 2) * (k - 3)) as i64;
            prop_assert_eq!(diff4, Rational::new((-768i64).into(), den.into()));
        }
    }

    #[test]
    fn uniform_variance_matches_point_mass(spec in spec_strategy(8), dp in 1usize..=8) {
        let dp = 1 + (dp - 1) % spec.s();
        let point = DepthDesign::point_mass(spec, dp).unwrap();
        match variance_profile(&point) {
            Ok(profile) => {
                for d in 1..=spec.s() {
                    let closed = variance_uniform(d, dp, &spec).unwrap();
                    prop_assert!((closed - profile.at(d)).abs() <= 1e-9 * closed.max(1.0));
                }
            }
            Err(_) => prop_assert!(variance_uniform(1, dp, &spec).is_err()),
        }
    }

    #[test]
    fn block_argmax_does_not_depend_on_k(s in 1usize..=12, extra in 1usize..=20, r in 1usize..=4) {
        let a = PairSpace::new(s.max(4), s).unwrap();
        let b = PairSpace::new(s.max(4) + extra, s).unwrap();
        prop_assert_eq!(argmax_block(&a, r).unwrap(), argmax_block(&b, r).unwrap());
    }

    #[test]
    fn profile_text_round_trip(levels in prop::collection::vec(-1i8..=1, 1..12)) {
        let p = Profile::new(levels).unwrap();
        prop_assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
    }

    #[test]
    fn best_fraction_recovers_small_fractions(num in 1i64..200, den in 1i64..200) {
        prop_assume!(num <= den);
        let g = num_integer::gcd(num, den);
        let (n, d) = best_fraction(num as f64 / den as f64, 10_000);
        prop_assert_eq!((n, d), (num / g, den / g));
    }
}

#[test]
fn optimum_dominates_reference_designs() {
    for k in 5..=12 {
        for s in 5..=k {
            let spec = ModelSpec::new(k, s).unwrap();
            let opt = optimize_full(spec, OptimOptions::default()).unwrap();
            let (conj, _) = conjectured_design(spec).unwrap();
            let conj_phi = log_det(&mix_h(&conj)).unwrap();
            assert!(opt.log_det >= conj_phi - 1e-9, "K={k} S={s}");
        }
    }
}
