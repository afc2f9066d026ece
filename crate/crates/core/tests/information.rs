use pcdesign::{
    count_pairs, h_values, info_matrix_exact, is_identifiable, log_det, mix_h, mix_h_exact,
    orbit_gram, DepthDesign, DesignError, ExplicitDesign, ModelSpec, Rational,
};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

#[test]
fn mixture_matches_dense_oracle() {
    let spec = ModelSpec::new(5, 5).unwrap();
    for weights in [
        vec![(2, 2.0 / 3.0), (4, 1.0 / 3.0)],
        vec![(1, 0.5), (3, 0.5)],
    ] {
        let design = DepthDesign::new(spec, &weights).unwrap();
        let explicit = ExplicitDesign::from_depth_weights(spec, &weights).unwrap();
        let dense = info_matrix_exact(&explicit).unwrap();
        let block = mix_h(&design).to_dense();
        let dev = (dense.matrix() - block).amax();
        assert!(dev <= 1e-12, "{weights:?}: {dev:e}");
        assert!(dense.is_symmetric(0.0));
    }
}

#[test]
fn exact_mixture_is_linear_in_orbit_grams() {
    let spec = ModelSpec::new(5, 4).unwrap();
    let weights = [(1, r(1, 6)), (2, r(1, 3)), (4, r(1, 2))];
    let mixed = mix_h_exact(&spec, &weights).unwrap();
    let grams: Vec<_> = weights
        .iter()
        .map(|(d, _)| orbit_gram(&spec, *d).unwrap())
        .collect();
    let offsets = {
        let b = spec.dims().blocks();
        [0, b[0], b[0] + b[1], b[0] + b[1] + b[2]]
    };
    for (block, &col) in offsets.iter().enumerate() {
        let combined: Rational = weights
            .iter()
            .zip(&grams)
            .map(|((_, w), g)| w * g.entry(col, col))
            .sum();
        assert_eq!(combined, mixed.h()[block]);
    }
}

#[test]
fn trace_identity_for_point_masses() {
    // tr M(ξ_d) = Σ p_r h_r(d) = E ||Δ||² over the orbit
    for (k, s) in [(4, 4), (5, 4), (6, 5)] {
        let spec = ModelSpec::new(k, s).unwrap();
        for d in 1..=s {
            let gram = orbit_gram(&spec, d).unwrap();
            let dense = gram.to_dense();
            let closed = h_values(&spec, d).unwrap().to_f64();
            assert!((dense.trace() - closed.trace()).abs() < 1e-10);
            assert_eq!(gram.count(), count_pairs(&spec, d).unwrap());
        }
    }
}

#[test]
fn identifiability() {
    let spec = ModelSpec::new(4, 4).unwrap();
    let split = DepthDesign::new(spec, &[(2, 0.5), (4, 0.5)]).unwrap();
    assert!(!is_identifiable(&split));
    match log_det(&mix_h(&split)) {
        Err(DesignError::Singular { zero_blocks, .. }) => assert_eq!(zero_blocks, vec![4]),
        other => panic!("expected singular, got {other:?}"),
    }
    let full = DepthDesign::new(spec, &[(1, 0.5), (2, 0.5)]).unwrap();
    assert!(is_identifiable(&full));
    assert!(log_det(&mix_h(&full)).unwrap().is_finite());
}

#[test]
fn exact_mixture_rejects_bad_weights() {
    let spec = ModelSpec::new(4, 4).unwrap();
    assert!(mix_h_exact(&spec, &[(1, r(1, 2)), (2, r(1, 3))]).is_err());
    assert!(mix_h_exact(&spec, &[(0, r(1, 2)), (2, r(1, 2))]).is_err());
    assert!(mix_h_exact(&spec, &[(1, r(3, 2)), (2, r(-1, 2))]).is_err());
}

#[test]
fn dense_log_det_agrees_with_blocks() {
    let spec = ModelSpec::new(4, 4).unwrap();
    let design = DepthDesign::new(spec, &[(1, 0.25), (2, 0.25), (3, 0.25), (4, 0.25)]).unwrap();
    let explicit =
        ExplicitDesign::from_depth_weights(spec, &design.iter().collect::<Vec<_>>()).unwrap();
    let dense = info_matrix_exact(&explicit).unwrap().log_det().unwrap();
    let block = log_det(&mix_h(&design)).unwrap();
    assert!((dense - block).abs() < 1e-10);
}
