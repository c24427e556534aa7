mod support;

use afvol_core::nn::{af_block, AfBlockParams, AfVariant, Initializer};
use afvol_core::Tensor;
use support::{af_block_naive, af_oracle, random_tensor, rng};

#[test]
fn position_bias_matches_double_loop() {
    let worst = af_oracle(AfVariant::PositionBias, 100, 5);
    assert!(worst <= 1e-10, "worst {worst:e}");
}

#[test]
fn simple_matches_straight_line() {
    let worst = af_oracle(AfVariant::Simple, 100, 6);
    assert!(worst <= 1e-12, "worst {worst:e}");
}

#[test]
fn zero_biases_reduce_to_simple() {
    let mut r = rng(3);
    for seed in 0..20 {
        let mut init = Initializer::new(seed);
        let simple = AfBlockParams::<f64>::init(3, 4, 5, AfVariant::Simple, 8, &mut init).unwrap();
        let mut biased = simple.clone();
        biased.w_bias = Some(Tensor::zeros(&[8, 8]));
        let z = random_tensor(&mut r, &[2, 7, 3], 1.0);
        let a = af_block(&simple, &z).unwrap();
        let b = af_block(&biased, &z).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn batch_rows_are_independent() {
    let mut r = rng(4);
    let mut init = Initializer::new(1);
    let mut p = AfBlockParams::<f64>::init(2, 3, 4, AfVariant::PositionBias, 6, &mut init).unwrap();
    p.w_bias = Some(random_tensor(&mut r, &[6, 6], 1.0));
    let z = random_tensor(&mut r, &[3, 6, 2], 1.0);
    let out = af_block(&p, &z).unwrap();
    for b in 0..3 {
        let zb = Tensor::new(vec![6, 2], z.data()[b * 12..(b + 1) * 12].to_vec()).unwrap();
        let want = af_block_naive(&p, &zb);
        for (x, y) in out.data()[b * 24..(b + 1) * 24].iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn sequences_past_capacity_are_rejected() {
    let mut init = Initializer::new(1);
    let p = AfBlockParams::<f64>::init(2, 2, 2, AfVariant::PositionBias, 4, &mut init).unwrap();
    let err = af_block(&p, &Tensor::zeros(&[5, 2])).unwrap_err();
    assert_eq!(err, afvol_core::Error::Capacity { len: 5, max: 4 });
}

#[test]
fn simple_variant_is_permutation_equivariant() {
    let mut r = rng(7);
    let mut init = Initializer::new(2);
    let p = AfBlockParams::<f64>::init(3, 4, 5, AfVariant::Simple, 8, &mut init).unwrap();
    let steps = 6;
    let z = random_tensor(&mut r, &[steps, 3], 1.5);
    let perm = [3usize, 0, 5, 1, 4, 2];
    let zp = Tensor::new(
        vec![steps, 3],
        perm.iter().flat_map(|&t| z.data()[t * 3..t * 3 + 3].to_vec()).collect(),
    )
    .unwrap();
    let out = af_block(&p, &z).unwrap();
    let outp = af_block(&p, &zp).unwrap();
    for (i, &t) in perm.iter().enumerate() {
        for j in 0..5 {
            assert!((outp.at2(i, j) - out.at2(t, j)).abs() < 1e-14);
        }
    }
}
