use dyngem::growth::{
    apply_plan, expand_input_output, min_width, net2deeper, net2wider, net2wider_with_mapping,
    propsize_plan, satisfies_rule, Side,
};
use dyngem::model::{build_autoencoder, AutoencoderParams};
use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRESERVE_TOL: f64 = 1e-9;

/// Random model with non-zero biases so ReLUs are partly active.
fn model(n: usize, hidden: &[usize], d: usize, seed: u64) -> AutoencoderParams {
    let mut p = build_autoencoder(n, hidden, d, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for l in p.layers_mut() {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.2..0.4));
    }
    p
}

fn inputs(rows: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, n), || {
        if rng.gen_bool(0.3) {
            rng.gen_range(0.0..2.0)
        } else {
            0.0
        }
    })
}

fn zero_extend(x: &Array2<f64>, n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), n));
    out.slice_mut(s![.., ..x.ncols()]).assign(x);
    out
}

fn max_abs_diff(a: ndarray::ArrayView2<f64>, b: ndarray::ArrayView2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Max deviation of embeddings and of the old nodes' reconstructions on 100
/// random zero-extended inputs.
fn preservation_error(before: &AutoencoderParams, after: &AutoencoderParams, seed: u64) -> f64 {
    let n = before.n();
    let x = inputs(100, n, seed);
    let x_ext = zero_extend(&x, after.n());
    let emb = max_abs_diff(
        before.encode(x.view()).unwrap().view(),
        after.encode(x_ext.view()).unwrap().view(),
    );
    let rec_after = after.reconstruct(x_ext.view()).unwrap();
    let rec = max_abs_diff(
        before.reconstruct(x.view()).unwrap().view(),
        rec_after.slice(s![.., ..n]),
    );
    emb.max(rec)
}

#[test]
fn each_transform_preserves_function() {
    for seed in 0..10 {
        let p = model(30, &[20, 12], 5, seed);
        for (side, layer) in [
            (Side::Encoder, 0),
            (Side::Encoder, 1),
            (Side::Decoder, 0),
            (Side::Decoder, 1),
        ] {
            let w = net2wider(&p, side, layer, 27, 0.0, seed).unwrap();
            assert!(preservation_error(&p, &w, seed) <= PRESERVE_TOL);
        }
        for pos in 1..=3 {
            let deep = net2deeper(&p, Side::Encoder, pos).unwrap();
            assert!(preservation_error(&p, &deep, seed) <= PRESERVE_TOL);
        }
        for pos in 0..=3 {
            let deep = net2deeper(&p, Side::Decoder, pos).unwrap();
            assert!(preservation_error(&p, &deep, seed) <= PRESERVE_TOL);
        }
        let grown = expand_input_output(&p, 45, 1.0, seed).unwrap();
        assert!(preservation_error(&p, &grown, seed) <= PRESERVE_TOL);
    }
}

#[test]
fn apply_plan_preserves_function_with_insertions() {
    // [40, 16] with d = 4 forces layer insertion once the input reaches 200
    let p = model(40, &[16], 4, 3);
    let plan = propsize_plan(&[40, 16], 200, 0.3, 4).unwrap();
    assert!(!plan.deepen_ops.is_empty());
    let grown = apply_plan(&p, &plan, 0.0, 9).unwrap();
    assert_eq!(grown.encoder_sizes(), plan.encoder_sizes);
    assert!(satisfies_rule(&grown.encoder_sizes(), 0.3));
    assert!(preservation_error(&p, &grown, 1) <= PRESERVE_TOL);
}

#[test]
fn insertions_commute() {
    let p = model(25, &[14, 9], 4, 21);
    let enc_then_dec =
        net2deeper(&net2deeper(&p, Side::Encoder, 2).unwrap(), Side::Decoder, 0).unwrap();
    let dec_then_enc =
        net2deeper(&net2deeper(&p, Side::Decoder, 0).unwrap(), Side::Encoder, 2).unwrap();
    assert_eq!(enc_then_dec, dec_then_enc);

    let a = net2wider(
        &net2wider(&p, Side::Encoder, 0, 20, 0.0, 1).unwrap(),
        Side::Decoder,
        1,
        18,
        0.0,
        2,
    )
    .unwrap();
    let b = net2wider(
        &net2wider(&p, Side::Decoder, 1, 18, 0.0, 2).unwrap(),
        Side::Encoder,
        0,
        20,
        0.0,
        1,
    )
    .unwrap();
    let x = inputs(100, 25, 4);
    assert!(
        max_abs_diff(
            a.reconstruct(x.view()).unwrap().view(),
            b.reconstruct(x.view()).unwrap().view()
        ) <= PRESERVE_TOL
    );
}

#[test]
fn noise_perturbs_only_replicas() {
    let p = model(12, &[6], 3, 2);
    let (w, mapping) = net2wider_with_mapping(&p, Side::Encoder, 0, 9, 1e-3, 5).unwrap();
    assert_eq!(mapping.len(), 9);
    assert_eq!(
        w.encoder[0].weights.slice(s![..6, ..]),
        p.encoder[0].weights
    );
    let diff = &w.encoder[0].weights.row(6) - &p.encoder[0].weights.row(mapping[6]);
    assert!(diff.iter().all(|v| v.abs() <= 1e-3) && diff.iter().any(|v| *v != 0.0));
}

#[test]
fn unreachable_embedding_width_is_an_error() {
    // ceil(0.95 · 10) = 10, so no chain of widths can descend to 5
    assert!(propsize_plan(&[10], 10, 0.95, 5).is_err());
    assert!(propsize_plan(&[10], 10, 0.5, 5).is_ok());
}

#[test]
fn invalid_transforms_are_rejected() {
    let p = model(10, &[6], 3, 0);
    assert!(
        net2wider(&p, Side::Encoder, 1, 5, 0.0, 0).is_err(),
        "embedding layer is fixed"
    );
    assert!(
        net2wider(&p, Side::Encoder, 0, 4, 0.0, 0).is_err(),
        "narrowing"
    );
    assert!(
        net2deeper(&p, Side::Encoder, 0).is_err(),
        "raw input position"
    );
    assert!(net2deeper(&p, Side::Decoder, 3).is_err());
    assert!(expand_input_output(&p, 9, 1.0, 0).is_err());
    let plan = propsize_plan(&[11, 6], 20, 0.3, 3).unwrap();
    assert!(
        apply_plan(&p, &plan, 0.0, 0).is_err(),
        "plan for another model"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plan_invariants(
        n in 2usize..300,
        extra in 0usize..600,
        hidden in proptest::collection::vec(1usize..120, 0..3),
        d in 1usize..16,
        rho in 0.05f64..0.95,
    ) {
        let mut current = vec![n];
        current.extend(&hidden);
        let Ok(plan) = propsize_plan(&current, n + extra, rho, d) else {
            // only when ceil(ρ·w) = w somewhere above d, so insertion cannot shrink
            let mut w = n + extra;
            for &h in &hidden {
                w = h.max(min_width(rho, w));
            }
            while d < min_width(rho, w) && min_width(rho, w) < w {
                w = min_width(rho, w);
            }
            prop_assert!(d < min_width(rho, w));
            return Ok(());
        };
        // every pair satisfies the rule, on both sides
        prop_assert!(satisfies_rule(&plan.encoder_sizes, rho));
        let mirrored: Vec<usize> = plan.encoder_sizes.iter().rev().copied().collect();
        prop_assert_eq!(&plan.decoder_sizes, &mirrored);
        // no layer shrinks or disappears
        prop_assert!(plan.encoder_sizes.len() > current.len());
        for (k, &w) in current.iter().enumerate().skip(1) {
            prop_assert!(plan.encoder_sizes[k] >= w);
        }
        prop_assert_eq!(*plan.encoder_sizes.last().unwrap(), d);
        // minimal growth: raised widths are exactly the rule's minimum
        for k in 1..current.len() {
            if plan.encoder_sizes[k] != current[k] {
                prop_assert_eq!(plan.encoder_sizes[k], min_width(rho, plan.encoder_sizes[k - 1]));
            }
        }
    }

    #[test]
    fn applied_plans_preserve_function(
        n in 3usize..40,
        extra in 0usize..120,
        h1 in 1usize..20,
        d in 1usize..5,
        seed in any::<u64>(),
    ) {
        let p = model(n, &[h1], d, seed);
        let plan = propsize_plan(&[n, h1], n + extra, 0.3, d).unwrap();
        let grown = apply_plan(&p, &plan, 0.0, seed).unwrap();
        prop_assert_eq!(grown.encoder_sizes(), plan.encoder_sizes.clone());
        prop_assert_eq!(grown.decoder_sizes(), plan.decoder_sizes.clone());
        prop_assert!(preservation_error(&p, &grown, seed) <= PRESERVE_TOL);
    }
}
