use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;

fn t2(rows: &[&[f64]]) -> Tensor {
    Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn zero_mask(m: usize, n: usize) -> Tensor {
    Tensor::zeros(vec![m, n])
}

#[test]
fn matmul_identity() {
    let mut tape = Tape::new();
    let i2 = tape.constant(t2(&[&[1.0, 0.0], &[0.0, 1.0]]));
    let a = tape.constant(t2(&[&[1.0, 2.0], &[3.0, 4.0]]));
    let out = tape.matmul(i2, a).unwrap();
    assert_eq!(tape.value(out), &t2(&[&[1.0, 2.0], &[3.0, 4.0]]));
}

#[test]
fn matmul_projector_row() {
    let mut tape = Tape::new();
    let p = tape.constant(t2(&[&[1.0, 0.0], &[0.0, 0.0]]));
    let b = tape.constant(t2(&[&[5.0, 6.0], &[7.0, 8.0]]));
    let out = tape.matmul(p, b).unwrap();
    assert_eq!(tape.value(out), &t2(&[&[5.0, 6.0], &[0.0, 0.0]]));
}

#[test]
fn matmul_hand_arithmetic() {
    let mut tape = Tape::new();
    let a = tape.constant(t2(&[&[1.0, 2.0]]));
    let b = tape.constant(t2(&[&[3.0], &[4.0]]));
    let out = tape.matmul(a, b).unwrap();
    assert_eq!(tape.value(out).data(), &[11.0]);
}

#[test]
fn matmul_shape_error_names_both_shapes() {
    let mut tape = Tape::new();
    let a = tape.constant(Tensor::zeros(vec![2, 3]));
    let b = tape.constant(Tensor::zeros(vec![2, 3]));
    match tape.matmul(a, b) {
        Err(Error::ShapeMismatch { left, right, .. }) => {
            assert_eq!(left, vec![2, 3]);
            assert_eq!(right, vec![2, 3]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
}

#[test]
fn masked_softmax_single_unmasked() {
    let mut tape = Tape::new();
    let s = tape.constant(t2(&[&[0.0, 0.0]]));
    let mask = t2(&[&[0.0, f64::NEG_INFINITY]]);
    let out = tape.masked_softmax(s, &mask).unwrap();
    assert_eq!(tape.value(out).data(), &[1.0, 0.0]);
}

#[test]
fn masked_softmax_uniform() {
    let mut tape = Tape::new();
    let s = tape.constant(t2(&[&[0.0, 0.0, 0.0, 0.0]]));
    let out = tape.masked_softmax(s, &zero_mask(1, 4)).unwrap();
    for v in tape.value(out).data() {
        assert!((v - 0.25).abs() < 1e-15);
    }
}

#[test]
fn masked_softmax_derived_two_logits() {
    let mut tape = Tape::new();
    let s = tape.constant(t2(&[&[1.0, 2.0]]));
    let out = tape.masked_softmax(s, &zero_mask(1, 2)).unwrap();
    let v = tape.value(out).data();
    assert!((v[0] - 0.26894).abs() < 1e-5);
    assert!((v[1] - 0.73106).abs() < 1e-5);
}

#[test]
fn masked_softmax_fully_masked_row_errors() {
    let mut tape = Tape::new();
    let s = tape.constant(t2(&[&[0.0, 0.0]]));
    let mask = t2(&[&[f64::NEG_INFINITY, f64::NEG_INFINITY]]);
    assert!(matches!(
        tape.masked_softmax(s, &mask),
        Err(Error::DegenerateMask { row: 0 })
    ));
}

#[test]
fn masked_softmax_rejects_bad_mask_entries() {
    let mut tape = Tape::new();
    let s = tape.constant(t2(&[&[0.0, 0.0]]));
    let mask = t2(&[&[0.0, -1.0]]);
    assert!(matches!(
        tape.masked_softmax(s, &mask),
        Err(Error::InvalidMaskEntry { .. })
    ));
}

#[test]
fn elu_examples() {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![0.0, 3.0, -1.0]));
    let out = tape.elu(x, 1.0);
    let v = tape.value(out).data();
    assert_eq!(v[0], 0.0);
    assert_eq!(v[1], 3.0);
    assert!((v[2] - (-0.632_120_558_828_557_7)).abs() < 1e-5);
}

#[test]
fn linear_examples() {
    let mut tape = Tape::new();
    // identity
    let x = tape.constant(t2(&[&[1.0, 1.0]]));
    let w = tape.constant(t2(&[&[1.0, 0.0], &[0.0, 1.0]]));
    let b = tape.constant(Tensor::vector(vec![0.0, 0.0]));
    let xw = tape.matmul(x, w).unwrap();
    let out = tape.add_bias(xw, b).unwrap();
    assert_eq!(tape.value(out).data(), &[1.0, 1.0]);
    // 2*3 + 1
    let x = tape.constant(t2(&[&[2.0]]));
    let w = tape.constant(t2(&[&[3.0]]));
    let b = tape.constant(Tensor::vector(vec![1.0]));
    let xw = tape.matmul(x, w).unwrap();
    let out = tape.add_bias(xw, b).unwrap();
    assert_eq!(tape.value(out).data(), &[7.0]);
    // bias only
    let x = tape.constant(Tensor::zeros(vec![3, 1]));
    let w = tape.constant(t2(&[&[2.0]]));
    let b = tape.constant(Tensor::vector(vec![5.0]));
    let xw = tape.matmul(x, w).unwrap();
    let out = tape.add_bias(xw, b).unwrap();
    assert_eq!(tape.value(out).data(), &[5.0, 5.0, 5.0]);
}

#[test]
fn layer_norm_examples() {
    let mut tape = Tape::new();
    let gamma = tape.constant(Tensor::vector(vec![1.0; 4]));
    let beta = tape.constant(Tensor::vector(vec![0.0; 4]));
    let x = tape.constant(t2(&[&[1.0, 1.0, 1.0, 1.0]]));
    let out = tape.layer_norm(x, gamma, beta, 1e-9).unwrap();
    for v in tape.value(out).data() {
        assert!(v.abs() < 1e-4);
    }

    let gamma = tape.constant(Tensor::vector(vec![1.0, 1.0]));
    let beta = tape.constant(Tensor::vector(vec![0.0, 0.0]));
    let x = tape.constant(t2(&[&[-1.0, 1.0]]));
    let out = tape.layer_norm(x, gamma, beta, 1e-12).unwrap();
    let v = tape.value(out).data();
    assert!((v[0] + 1.0).abs() < 1e-6 && (v[1] - 1.0).abs() < 1e-6);

    let gamma = tape.constant(Tensor::vector(vec![0.0, 0.0]));
    let beta = tape.constant(Tensor::vector(vec![5.0, 5.0]));
    let x = tape.constant(t2(&[&[3.0, 9.0]]));
    let out = tape.layer_norm(x, gamma, beta, 1e-9).unwrap();
    assert_eq!(tape.value(out).data(), &[5.0, 5.0]);
}

#[test]
fn dropout_identity_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Tensor::vector(vec![1.0, 2.0, 3.0]);
    let mut tape = Tape::new();
    let v = tape.constant(x.clone());
    let out = tape.dropout(v, 0.0, true, &mut rng).unwrap();
    assert_eq!(tape.value(out), &x);
    let out = tape.dropout(v, 0.5, false, &mut rng).unwrap();
    assert_eq!(tape.value(out), &x);
    assert!(matches!(
        tape.dropout(v, 1.0, true, &mut rng),
        Err(Error::InvalidDropout(_))
    ));
}

#[test]
fn dropout_preserves_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut tape = Tape::new();
    let v = tape.constant(Tensor::vector(vec![1.0; 10_000]));
    let out = tape.dropout(v, 0.5, true, &mut rng).unwrap();
    let mean = tape.value(out).data().iter().sum::<f64>() / 10_000.0;
    assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
}

#[test]
fn mse_examples() {
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::vector(vec![1.0, 1.0]));
    let loss = tape.mse_loss(p, &Tensor::vector(vec![1.0, 1.0])).unwrap();
    assert_eq!(tape.value(loss).item(), 0.0);
    let loss = tape.mse_loss(p, &Tensor::vector(vec![0.0, 0.0])).unwrap();
    assert_eq!(tape.value(loss).item(), 1.0);
    let p = tape.constant(Tensor::vector(vec![2.0]));
    let loss = tape.mse_loss(p, &Tensor::vector(vec![0.0])).unwrap();
    assert_eq!(tape.value(loss).item(), 4.0);
}

#[test]
fn backward_sum_gives_ones() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![3.0, -1.0, 2.5]), true);
    let s = tape.sum(x);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[1.0, 1.0, 1.0]);
}

#[test]
fn backward_mse_quadratic() {
    // loss = mse(w·1, 0) with w=[2] -> d(w^2)/dw = 4
    let mut tape = Tape::new();
    let w = tape.leaf(t2(&[&[2.0]]), true);
    let one = tape.constant(t2(&[&[1.0]]));
    let pred = tape.matmul(w, one).unwrap();
    let loss = tape.mse_loss(pred, &t2(&[&[0.0]])).unwrap();
    tape.backward(loss).unwrap();
    assert_eq!(tape.grad(w).unwrap(), &[4.0]);
}

#[test]
fn backward_accumulates_over_fanout() {
    // y = x + x -> dy/dx = 2 per element
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]), true);
    let y = tape.add(x, x).unwrap();
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    assert_eq!(tape.grad(x).unwrap(), &[2.0, 2.0]);
}

#[test]
fn backward_shared_equals_unshared() {
    // sum(x + x) vs sum(x + copy-of-x): gradients on x must agree (2 vs 1+1).
    let x = Tensor::vector(vec![0.3, -0.7, 1.1]);
    let mut shared = Tape::new();
    let xv = shared.leaf(x.clone(), true);
    let y = shared.add(xv, xv).unwrap();
    let s = shared.sum(y);
    shared.backward(s).unwrap();

    let mut unshared = Tape::new();
    let x1 = unshared.leaf(x.clone(), true);
    let x2 = unshared.leaf(x, true);
    let y = unshared.add(x1, x2).unwrap();
    let s = unshared.sum(y);
    unshared.backward(s).unwrap();

    for i in 0..3 {
        let a = shared.grad(xv).unwrap()[i];
        let b = unshared.grad(x1).unwrap()[i] + unshared.grad(x2).unwrap()[i];
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn backward_rejects_non_scalar_loss() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]), true);
    assert!(matches!(
        tape.backward(x),
        Err(Error::NonScalarLoss(_))
    ));
}

#[test]
fn grad_check_identity_is_exact() {
    let x = Tensor::vector(vec![0.5, -1.5, 2.0]);
    let err = grad_check(|tape, vars| Ok(tape.sum(vars[0])), &[x], 1e-6).unwrap();
    assert!(err < 1e-10, "err {err}");
}

#[test]
fn grad_check_elu_at_minus_one() {
    let x = Tensor::vector(vec![-1.0]);
    let err = grad_check(
        |tape, vars| {
            let y = tape.elu(vars[0], 1.0);
            Ok(tape.sum(y))
        },
        &[x],
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-6, "err {err}");
}

#[test]
fn grad_check_masked_softmax() {
    let x = t2(&[&[0.2, -0.4, 0.9], &[1.3, 0.1, -0.7]]);
    let mask = t2(&[
        &[0.0, f64::NEG_INFINITY, 0.0],
        &[0.0, 0.0, f64::NEG_INFINITY],
    ]);
    let err = grad_check(
        |tape, vars| {
            let y = tape.masked_softmax(vars[0], &mask)?;
            // weight the entries so the check is not trivially zero-sum
            let w = tape.constant(t2(&[&[1.0], &[2.0], &[3.0]]));
            let z = tape.matmul(y, w)?;
            Ok(tape.sum(z))
        },
        &[x],
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-6, "err {err}");
}

#[test]
fn grad_check_every_op_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut rand_t = |shape: Vec<usize>| {
        let len = shape.iter().product();
        // keep away from the ELU kink at 0
        let data: Vec<f64> = (0..len)
            .map(|_| {
                let v: f64 = rng.gen_range(0.1..1.0);
                if rng.gen::<bool>() {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Tensor::new(shape, data).unwrap()
    };
    for _ in 0..10 {
        let a = rand_t(vec![3, 4]);
        let b = rand_t(vec![4, 2]);
        let err = grad_check(
            |tape, v| {
                let y = tape.matmul(v[0], v[1])?;
                Ok(tape.sum(y))
            },
            &[a, b],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "matmul err {err}");

        let x = rand_t(vec![2, 3]);
        let err = grad_check(
            |tape, v| {
                let y = tape.elu(v[0], 1.0);
                Ok(tape.sum(y))
            },
            &[x],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "elu err {err}");

        let s = rand_t(vec![2, 4]);
        let err = grad_check(
            |tape, v| {
                let y = tape.masked_softmax(v[0], &Tensor::zeros(vec![2, 4]))?;
                let w = tape.constant(rand_t_static(4));
                let z = tape.matmul(y, w)?;
                Ok(tape.sum(z))
            },
            &[s],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "softmax err {err}");

        let x = rand_t(vec![3, 4]);
        let g = rand_t(vec![4]);
        let bta = rand_t(vec![4]);
        let err = grad_check(
            |tape, v| {
                let y = tape.layer_norm(v[0], v[1], v[2], 1e-5)?;
                let w = tape.constant(rand_t_static(4));
                let z = tape.matmul(y, w)?;
                Ok(tape.sum(z))
            },
            &[x, g, bta],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "layer_norm err {err}");

        let x = rand_t(vec![2, 3]);
        let w = rand_t(vec![3, 2]);
        let bias = rand_t(vec![2]);
        let err = grad_check(
            |tape, v| {
                let xw = tape.matmul(v[0], v[1])?;
                let y = tape.add_bias(xw, v[2])?;
                Ok(tape.sum(y))
            },
            &[x, w, bias],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-4, "linear err {err}");
    }
}

fn rand_t_static(n: usize) -> Tensor {
    // fixed weighting vector-as-column used to break symmetry in checks
    Tensor::new(vec![n, 1], (0..n).map(|i| 0.5 + i as f64).collect()).unwrap()
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(rows in 1usize..5, cols in 1usize..6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = Tensor::new(
            vec![rows, cols],
            (0..rows * cols).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        ).unwrap();
        // random mask with at least one open entry per row
        let mut mask = Tensor::zeros(vec![rows, cols]);
        for i in 0..rows {
            let open = rng.gen_range(0..cols);
            for j in 0..cols {
                if j != open && rng.gen::<bool>() {
                    mask.set2(i, j, f64::NEG_INFINITY);
                }
            }
        }
        let mut tape = Tape::new();
        let s = tape.constant(scores);
        let out = tape.masked_softmax(s, &mask).unwrap();
        let y = tape.value(out);
        for i in 0..rows {
            let sum: f64 = y.row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for j in 0..cols {
                if mask.get2(i, j) != 0.0 {
                    prop_assert_eq!(y.get2(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn softmax_shift_invariance(shift in -50.0f64..50.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + shift).collect();
        let mask = Tensor::zeros(vec![1, 6]);
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::new(vec![1, 6], base).unwrap());
        let b = tape.constant(Tensor::new(vec![1, 6], shifted).unwrap());
        let ya = tape.masked_softmax(a, &mask).unwrap();
        let yb = tape.masked_softmax(b, &mask).unwrap();
        for (x, y) in tape.value(ya).data().iter().zip(tape.value(yb).data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
