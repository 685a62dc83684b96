use minmax_core::cws::{cws_sample, sketch};
use minmax_core::encode::encode;
use minmax_core::estimate::{collision_rate, simulate, Scheme};
use minmax_core::kernels::{min_max, resemblance};
use minmax_core::learn::{evaluate, train, FeatureLayout, LinearModel, TrainConfig};
use minmax_core::rng::{draw, RandomStream, SplitMix64};
use minmax_core::{BitBudget, EncodedVector, Loss, SparseVector};

fn dense(v: &[f64]) -> SparseVector {
    SparseVector::from_dense(v).unwrap()
}

fn normal(g: &mut SplitMix64) -> f64 {
    let (u1, u2) = (g.next_open01(), g.next_closed_open01());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_pair(g: &mut SplitMix64, dim: usize) -> (SparseVector, SparseVector) {
    let mut u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let nnz = 8 + (g.next_u64() % 25) as usize;
    for _ in 0..nnz {
        let i = (g.next_u64() % dim as u64) as usize;
        match g.next_u64() % 3 {
            0 => u[i] = normal(g).exp(),
            1 => v[i] = normal(g).exp(),
            _ => {
                u[i] = normal(g).exp();
                v[i] = normal(g).exp();
            }
        }
    }
    u[0] = 1.0;
    v[0] = 1.0;
    (dense(&u), dense(&v))
}

fn four_sigma(k: f64, n: usize) -> f64 {
    4.0 * (k * (1.0 - k) / n as f64).sqrt()
}

#[test]
fn full_collisions_estimate_min_max() {
    let u = dense(&[1.0, 2.0]);
    let v = dense(&[2.0, 1.0]);
    let k = 100_000;
    let rate = collision_rate(&sketch(&u, k, 11).unwrap(), &sketch(&v, k, 11).unwrap(), Scheme::Full).unwrap();
    assert!((rate - 0.5).abs() <= 0.0063, "rate {rate}");
}

#[test]
fn binary_index_collisions_estimate_resemblance() {
    let u = dense(&[1.0, 0.0, 0.0]);
    let v = dense(&[1.0, 1.0, 1.0]);
    assert_eq!(resemblance(&u, &v).unwrap(), 1.0 / 3.0);
    let k = 100_000;
    let (su, sv) = (sketch(&u, k, 3).unwrap(), sketch(&v, k, 3).unwrap());
    let hits = su.samples().iter().zip(sv.samples()).filter(|(a, b)| a.istar == b.istar).count();
    let rate = hits as f64 / k as f64;
    assert!((rate - 1.0 / 3.0).abs() <= 0.006, "rate {rate}");
}

#[test]
fn random_pairs_within_four_sigma() {
    let mut g = SplitMix64::new(41);
    let k = 20_000;
    for p in 0..20 {
        let (u, v) = random_pair(&mut g, 64);
        let kernel = min_max(&u, &v).unwrap();
        let seed = 1000 + p;
        let rate = collision_rate(&sketch(&u, k, seed).unwrap(), &sketch(&v, k, seed).unwrap(), Scheme::Full).unwrap();
        assert!((rate - kernel).abs() <= four_sigma(kernel, k), "pair {p}: {rate} vs {kernel}");
    }
}

#[test]
fn collision_rate_is_scale_invariant_in_distribution() {
    let mut g = SplitMix64::new(5);
    let (u, v) = random_pair(&mut g, 64);
    let kernel = min_max(&u, &v).unwrap();
    let k = 20_000;
    for c in [1e-3, 0.37, 10.0, 1e4] {
        let (cu, cv) = (u.scaled(c).unwrap(), v.scaled(c).unwrap());
        assert!((min_max(&cu, &cv).unwrap() - kernel).abs() < 1e-12);
        let rate = collision_rate(&sketch(&cu, k, 8).unwrap(), &sketch(&cv, k, 8).unwrap(), Scheme::Full).unwrap();
        assert!((rate - kernel).abs() <= four_sigma(kernel, k), "scale {c}: {rate} vs {kernel}");
    }
}

// a_i = c / (y * e^r) with y = exp(r (t - beta)), evaluated without logs.
fn literal_sample(u: &SparseVector, j: u64, seed: u64) -> (u32, i64) {
    let mut best = (f64::INFINITY, 0u32, 0i64);
    for (i, w) in u.iter() {
        let d = draw(RandomStream::new(seed, j, i as u64));
        let t = (w.ln() / d.r + d.beta).floor();
        let y = (d.r * (t - d.beta)).exp();
        let a = d.c / (y * d.r.exp());
        if a < best.0 {
            best = (a, i as u32, t as i64);
        }
    }
    (best.1, best.2)
}

#[test]
fn log_space_sampler_agrees_with_literal_formula() {
    let mut g = SplitMix64::new(77);
    for trial in 0..1000u64 {
        let x: Vec<f64> = (0..16)
            .map(|_| if g.next_closed_open01() < 0.5 { normal(&mut g).exp() } else { 0.0 })
            .chain(std::iter::once(1.0))
            .collect();
        let u = dense(&x);
        let s = cws_sample(&u, trial, 99).unwrap();
        assert_eq!((s.istar, s.tstar), literal_sample(&u, trial, 99), "trial {trial}");
    }
}

#[test]
fn zero_coordinates_are_inert() {
    let u = dense(&[0.0, 2.5, 0.0, 0.7, 0.0]);
    let wide = u.clone().with_dimension(1000).unwrap();
    let (a, b) = (sketch(&u, 500, 4).unwrap(), sketch(&wide, 500, 4).unwrap());
    assert_eq!(a.samples(), b.samples());
    assert!(a.samples().iter().all(|s| s.istar == 1 || s.istar == 3));
}

#[test]
fn samples_depend_only_on_the_support() {
    // Changing a weight can only move samples onto or away from that coordinate.
    let u = dense(&[1.0, 2.0, 3.0, 4.0]);
    let v = dense(&[1.0, 2.0, 9.0, 4.0]);
    let (su, sv) = (sketch(&u, 2000, 6).unwrap(), sketch(&v, 2000, 6).unwrap());
    for (a, b) in su.samples().iter().zip(sv.samples()) {
        if a.istar != 2 && b.istar != 2 {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn single_sample_mse_is_bernoulli_variance() {
    let u = dense(&[1.0, 2.0]);
    let v = dense(&[2.0, 1.0]);
    let n = 10_000;
    let report = simulate(&u, &v, &[1, 10, 100], &[Scheme::Full], n, 21).unwrap();
    let kernel = report.kernel;
    let row = report.row(1, Scheme::Full).unwrap();
    let var = kernel * (1.0 - kernel);
    assert!((row.mse - var).abs() <= 4.0 * (2.0 / n as f64).sqrt() * var, "mse {}", row.mse);
    for k in [1, 10, 100] {
        let bias = report.row(k, Scheme::Full).unwrap().bias;
        assert!(bias.abs() <= 4.0 * (var / (k * n) as f64).sqrt(), "k={k} bias {bias}");
    }
}

#[test]
fn one_bit_index_overestimates() {
    let mut x = vec![0.0; 100];
    let mut y = vec![0.0; 100];
    for i in 0..40 {
        x[i] = 1.0;
        y[i + 25] = 1.0;
    }
    let (u, v) = (dense(&x), dense(&y));
    let kernel = min_max(&u, &v).unwrap();
    assert!((kernel - 15.0 / 65.0).abs() < 1e-12);
    let scheme = Scheme::Truncated(BitBudget::new(1, 0).unwrap());
    let report = simulate(&u, &v, &[50], &[scheme], 2000, 3).unwrap();
    assert!(report.row(50, scheme).unwrap().bias > 0.0);
}

fn encoded(x: &SparseVector, k: usize) -> EncodedVector {
    encode(&sketch(x, k, 17).unwrap(), BitBudget::new(6, 1).unwrap()).unwrap()
}

fn noise_rows(g: &mut SplitMix64, n: usize, positive_rate: f64) -> Vec<(i64, EncodedVector)> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..40).map(|_| if g.next_closed_open01() < 0.3 { g.next_open01() } else { 0.0 }).collect();
            let mut x = x;
            x[0] += 1.0;
            let label = if g.next_closed_open01() < positive_rate { 1 } else { -1 };
            (label, encoded(&dense(&x), 16))
        })
        .collect()
}

#[test]
fn heavy_regularization_gives_majority_rate() {
    let mut g = SplitMix64::new(9);
    let rows = noise_rows(&mut g, 400, 0.75);
    let model = train(&rows, &TrainConfig::new(1e6, 2)).unwrap();
    assert!(model.squared_norm() < 1e-8, "norm {}", model.squared_norm());
    let majority = rows.iter().filter(|(l, _)| *l == 1).count() as f64 / rows.len() as f64;
    assert_eq!(evaluate(&model, &rows).unwrap(), majority);
}

#[test]
fn duplicated_training_set_agrees() {
    let mut g = SplitMix64::new(10);
    let centre = |class: usize| -> Vec<f64> {
        (0..40).map(|i| if i % 4 == class { 3.0 } else { 0.2 }).collect()
    };
    let rows: Vec<(i64, EncodedVector)> = (0..120)
        .map(|n| {
            let class = n % 3;
            let x: Vec<f64> = centre(class).iter().map(|w| w * (0.3 * normal(&mut g)).exp()).collect();
            (class as i64, encoded(&dense(&x), 32))
        })
        .collect();
    let doubled: Vec<_> = rows.iter().chain(rows.iter()).cloned().collect();
    let cfg = TrainConfig::new(1e-3, 4);
    let (a, b) = (train(&rows, &cfg).unwrap(), train(&doubled, &cfg).unwrap());
    for (_, x) in &rows {
        assert_eq!(a.predict(x).unwrap(), b.predict(x).unwrap());
    }
}

#[test]
fn constant_predictor_on_random_labels() {
    let mut g = SplitMix64::new(12);
    let rows = noise_rows(&mut g, 4000, 0.5);
    let model = LinearModel::zero(
        FeatureLayout::Encoded { k: 16, budget: BitBudget::new(6, 1).unwrap() },
        vec![-1, 1],
        1.0,
        Loss::Hinge,
    );
    let acc = evaluate(&model, &rows).unwrap();
    assert!((acc - 0.5).abs() <= four_sigma(0.5, rows.len()), "accuracy {acc}");
}
