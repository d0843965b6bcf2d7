use super::*;
use crate::dgp::DgpSpec;
use proptest::prelude::*;

fn uni(v: &[f64]) -> Sample {
    Sample::univariate(v.to_vec()).unwrap()
}

fn dist(est: &[f64], theta: f64) -> BootstrapDistribution {
    BootstrapDistribution::new(est.to_vec(), est.len(), theta).unwrap()
}

/// Φ by composite Simpson quadrature of the normal density.
fn phi_oracle(x: f64) -> f64 {
    let m = 4000;
    let h = x / m as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = pdf(0.0) + pdf(x);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * pdf(i as f64 * h);
    }
    0.5 + acc * h / 3.0
}

fn phi_inv_oracle(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi_oracle(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn oracle_sanity() {
    assert!((phi_oracle(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
    assert!((phi_inv_oracle(0.6) - 0.253_347_103_135_8).abs() < 1e-10);
}

#[test]
fn resample_constant_sample() {
    let s = uni(&[3.5; 6]);
    for f in [Functional::Mean, Functional::Median, Functional::Std, Functional::Q95] {
        let d = resample(&s, 50, f, &RngStream::new(1)).unwrap();
        let theta = f.evaluate(&s).unwrap();
        assert!(d.estimates().iter().all(|&e| e == theta));
        assert_eq!(d.b_valid(), 50);
    }
}

#[test]
fn resample_single() {
    let d = resample(&uni(&[1.0, 2.0, 5.0]), 1, Functional::Mean, &RngStream::new(3)).unwrap();
    assert_eq!(d.b_valid(), 1);
    assert!(resample(&uni(&[1.0]), 0, Functional::Mean, &RngStream::new(3)).is_err());
}

#[test]
fn resample_corr_n4_loses_resamples() {
    // P(a resample repeats one row) = 4·(1/4)⁴ = 1/64 per resample.
    let s = DgpSpec::BivariateNormal.draw_sample(4, &RngStream::new(8)).unwrap();
    let d = resample(&s, 1000, Functional::Corr, &RngStream::new(9)).unwrap();
    assert!(d.b_valid() < 1000);
    assert_eq!(d.b_degenerate(), 1000 - d.b_valid());
}

#[test]
fn resample_is_deterministic() {
    let s = DgpSpec::Exponential.draw_sample(20, &RngStream::new(1)).unwrap();
    let a = resample(&s, 200, Functional::Median, &RngStream::new(2)).unwrap();
    let b = resample(&s, 200, Functional::Median, &RngStream::new(2)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn percentile_examples() {
    assert_eq!(pb_endpoint(&dist(&[1.0, 2.0, 3.0, 4.0], 2.5), 0.5).unwrap(), 2.5);
    let c = dist(&[4.0; 10], 4.0);
    for a in [0.025, 0.5, 0.975] {
        assert_eq!(pb_endpoint(&c, a).unwrap(), 4.0);
    }
    assert!(pb_endpoint(&c, 1.0).is_err());
}

#[test]
fn percentile_converges_to_normal_quantile() {
    let draws = DgpSpec::Normal.draw_sample(100_000, &RngStream::new(77)).unwrap();
    let d = dist(draws.values().unwrap(), 0.0);
    let e = pb_endpoint(&d, 0.975).unwrap();
    assert!((e - 1.96).abs() < 0.03, "{e}");
}

#[test]
fn standard_examples() {
    assert!((bn_endpoint(0.0, 1.0, 0.975).unwrap() - 1.959_96).abs() < 1e-5);
    assert_eq!(bn_endpoint(3.0, 2.0, 0.5).unwrap(), 3.0);
    assert!((bn_endpoint(2.0, 0.5, 0.025).unwrap() - 1.020_02).abs() < 1e-5);
    assert!(bn_endpoint(0.0, -1.0, 0.5).is_err());
}

#[test]
fn basic_examples() {
    // θ̂ = 10 and the 0.975 quantile of [..] is 12 when all estimates are 12
    assert_eq!(bb_endpoint(&dist(&[12.0; 5], 10.0), 0.025).unwrap(), 8.0);
    let c = dist(&[1.5; 7], 1.5);
    assert_eq!(bb_endpoint(&c, 0.3).unwrap(), 1.5);
    let sym = dist(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.0);
    for a in [0.05, 0.25, 0.75, 0.95] {
        assert!((bb_endpoint(&sym, a).unwrap() - pb_endpoint(&sym, a).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn smoothed_examples() {
    // σ̂ = 1 and IQR = 1.34 give h = 0.9 from either term
    let est = [-1.0, -1.0, 1.0, 1.0];
    let d = dist(&est, 0.0);
    let sigma = d.std_dev().unwrap();
    let iqr = quantile_sorted(d.estimates(), 0.75) - quantile_sorted(d.estimates(), 0.25);
    let h = sb_bandwidth(&d).unwrap();
    assert!((h - 0.9 * sigma.min(iqr / 1.34)).abs() < 1e-15);

    let c = dist(&[2.0; 20], 2.0);
    assert_eq!(sb_bandwidth(&c).unwrap(), 0.0);
    assert_eq!(sb_endpoint(&c, 0.9, &RngStream::new(1)).unwrap(), 2.0);

    let d = dist(&[0.1, 0.4, 0.2, 0.9, 0.5, 0.3], 0.35);
    let e1 = sb_endpoint(&d, 0.8, &RngStream::new(5)).unwrap();
    let e2 = sb_endpoint(&d, 0.8, &RngStream::new(5)).unwrap();
    assert_eq!(e1, e2);
    assert!(sb_endpoint(&dist(&[1.0], 1.0), 0.5, &RngStream::new(5)).is_err());
}

#[test]
fn bandwidth_picks_the_smaller_scale() {
    // heavy tails: IQR/1.34 is much smaller than σ̂
    let d = dist(&[-100.0, -1.0, -0.5, 0.0, 0.5, 1.0, 100.0], 0.0);
    let iqr = quantile_sorted(d.estimates(), 0.75) - quantile_sorted(d.estimates(), 0.25);
    assert!((sb_bandwidth(&d).unwrap() - 0.9 * iqr / 1.34).abs() < 1e-12);
}

#[test]
fn bias_fraction_examples() {
    let r = TieRule::Midrank;
    assert_eq!(bias_fraction(&[1.0, 2.0, 3.0, 4.0], 2.5, r), 0.5);
    assert_eq!(bias_fraction(&[7.0; 4], 7.0, r), 0.5);
    assert_eq!(bias_fraction(&[1.0, 2.0, 3.0], 5.0, r), 1.0);
    assert_eq!(bias_fraction(&[7.0; 4], 7.0, TieRule::Strict), 0.0);
    assert_eq!(bias_fraction(&[1.0, 2.0, 2.0, 3.0], 2.0, r), 0.5);
    assert_eq!(bias_fraction(&[1.0, 2.0, 2.0, 3.0], 2.0, TieRule::Strict), 0.25);
}

#[test]
fn bc_examples() {
    let d = dist(&[0.3, 0.1, 0.9, 0.4, 0.7], 0.4);
    for a in [0.05, 0.5, 0.95] {
        assert_eq!(bc_level(0.5, a).unwrap(), a);
        assert_eq!(bc_endpoint(&d, 0.5, a).unwrap(), pb_endpoint(&d, a).unwrap());
    }
    let expected = phi_oracle(2.0 * phi_inv_oracle(0.6) + phi_inv_oracle(0.95));
    assert!((expected - 0.98428).abs() < 5e-6);
    assert!((expected - 0.98425).abs() < 5e-5);
    assert!((bc_level(0.6, 0.95).unwrap() - expected).abs() < 1e-9);
    assert_eq!(bc_endpoint(&d, 0.0, 0.5).unwrap_err().failure(), Some(Failure::BiasFractionBoundary));
    assert_eq!(bc_endpoint(&d, 1.0, 0.5).unwrap_err().failure(), Some(Failure::BiasFractionBoundary));
}

#[test]
fn jackknife_examples() {
    let a = jackknife_acceleration(&uni(&[-2.0, -1.0, 0.0, 1.0, 2.0]), Functional::Mean).unwrap();
    assert!(a.abs() < 1e-15);
    // loo means 1/2, 1/2, 0 around 1/3: Σd³ = 1/36, Σd² = 1/6
    let expected = (1.0 / 36.0) / (6.0 * (1.0f64 / 6.0).powf(1.5));
    let a = jackknife_acceleration(&uni(&[0.0, 0.0, 1.0]), Functional::Mean).unwrap();
    assert!((a - expected).abs() < 1e-14);
    assert!((a - 0.06804).abs() < 1e-5);
    let err = jackknife_acceleration(&uni(&[2.0; 5]), Functional::Mean).unwrap_err();
    assert_eq!(err.failure(), Some(Failure::ZeroVariance));
    assert!(jackknife_acceleration(&uni(&[1.0, 2.0]), Functional::Mean).is_err());
}

#[test]
fn bca_examples() {
    let d = dist(&[0.3, 0.1, 0.9, 0.4, 0.7, 0.2], 0.4);
    for a in [0.025, 0.25, 0.75, 0.975] {
        assert_eq!(bca_endpoint(&d, 0.6, 0.0, a).unwrap(), bc_endpoint(&d, 0.6, a).unwrap());
        assert_eq!(bca_endpoint(&d, 0.5, 0.0, a).unwrap(), pb_endpoint(&d, a).unwrap());
    }
    // b̂ = 0.6, a = 0.1, α = 0.95 with the acceleration entering as 1 − a·w
    let z0 = phi_inv_oracle(0.6);
    let w = z0 + phi_inv_oracle(0.95);
    let expected = phi_oracle(z0 + w / (1.0 - 0.1 * w));
    assert!((bca_level(0.6, 0.1, 0.95).unwrap() - expected).abs() < 1e-9);
    assert!((expected - 0.99529).abs() < 1e-5);
    assert!(bca_endpoint(&d, 0.0, 0.1, 0.5).is_err());
    // 1 − a·w = 0 at a = 1/w whenever that product rounds to exactly one
    let mut checked = 0;
    for k in 1..100 {
        let bias = 0.5 + k as f64 / 250.0;
        let w = crate::special::norm_ppf(bias);
        let a = 1.0 / w;
        if a * w == 1.0 {
            assert_eq!(bca_level(bias, a, 0.5).map_err(|e| e.failure()), Err(Some(Failure::ZeroDenominator)));
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn acceleration_pushes_right_skewed_upper_endpoints_outward() {
    let d = dist(&(0..100).map(f64::from).collect::<Vec<_>>(), 50.0);
    let b = bias_fraction(d.estimates(), 50.0, TieRule::Midrank);
    let plain = bca_endpoint(&d, b, 0.0, 0.95).unwrap();
    let skewed = bca_endpoint(&d, b, 0.1, 0.95).unwrap();
    assert!(skewed > plain);
}

#[test]
fn studentized_constant_sample_fails() {
    let s = uni(&[1.0; 8]);
    assert!(bt_endpoint(&s, Functional::Mean, 50, 10, 0.5, &RngStream::new(1)).is_err());
}

#[test]
fn studentized_median_half() {
    // α = 0.5 picks the median pivot; with a symmetric pivot pool that is 0
    let st = Studentized { theta_hat: 3.0, sigma_hat: 2.0, pivots: vec![-1.5, -0.5, 0.0, 0.5, 1.5], dropped: 0 };
    assert_eq!(st.endpoint(0.5).unwrap(), 3.0);
}

#[test]
fn studentized_tracks_t_interval_on_normal_means() {
    let n = 64;
    let reps = 200;
    let t = crate::special::t_ppf(0.95, (n - 1) as f64);
    let mut total = 0.0;
    for r in 0..reps {
        let s = DgpSpec::Normal.draw_sample(n, &RngStream::new(1000 + r)).unwrap();
        let v = s.values().unwrap();
        let m = v.iter().sum::<f64>() / n as f64;
        let sd = std_dev(v);
        let se = sd / (n as f64).sqrt();
        let e = bt_endpoint(&s, Functional::Mean, 1000, 50, 0.95, &RngStream::new(5000 + r)).unwrap();
        total += (e - (m + se * t)).abs() / se;
    }
    let mad = total / reps as f64;
    assert!(mad < 0.1, "mean |B-t − t| in se units: {mad}");
}

#[test]
fn double_constant_sample() {
    let s = uni(&[2.5; 5]);
    for a in [0.025, 0.5, 0.975] {
        assert_eq!(db_endpoint(&s, Functional::Mean, 30, 20, a, &RngStream::new(4)).unwrap(), 2.5);
    }
}

#[test]
fn double_is_deterministic() {
    let s = DgpSpec::LogNormal.draw_sample(12, &RngStream::new(10)).unwrap();
    let a = db_endpoint(&s, Functional::Mean, 100, 50, 0.9, &RngStream::new(11)).unwrap();
    let b = db_endpoint(&s, Functional::Mean, 100, 50, 0.9, &RngStream::new(11)).unwrap();
    assert_eq!(a, b);
}

/// Type 8 quantile written out independently of the library path.
fn hf8(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let mut h = (n + 1.0 / 3.0) * p + 1.0 / 3.0;
    if h < 1.0 {
        h = 1.0;
    }
    if h > n {
        h = n;
    }
    let j = h.floor() as usize;
    if j as f64 == n {
        return sorted[j - 1];
    }
    sorted[j - 1] + (h - j as f64) * (sorted[j] - sorted[j - 1])
}

/// Every outer path × every inner path for n = 3, as nested loops.
fn double_bootstrap_enumeration(x: [f64; 3], alpha: f64) -> f64 {
    let theta = (x[0] + x[1] + x[2]) / 3.0;
    let mut outer = Vec::new();
    let mut biases = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let xs = [x[i], x[j], x[k]];
                outer.push((xs[0] + xs[1] + xs[2]) / 3.0);
                let mut below = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            let m = (xs[a] + xs[b] + xs[c]) / 3.0;
                            if m < theta {
                                below += 1.0;
                            } else if m == theta {
                                below += 0.5;
                            }
                        }
                    }
                }
                biases.push(below / 27.0);
            }
        }
    }
    outer.sort_by(|a, b| a.partial_cmp(b).unwrap());
    biases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let level = hf8(&biases, alpha).clamp(1.0 / 28.0, 27.0 / 28.0);
    hf8(&outer, level)
}

#[test]
fn double_exhaustive_matches_enumeration() {
    let x = [1.0, 2.0, 3.0];
    let s = uni(&x);
    let db =
        DoubleBootstrap::compute(&s, Functional::Mean, ResamplePlan::Exhaustive, &RngStream::new(0), TieRule::Midrank)
            .unwrap();
    assert_eq!(db.outer_estimates().len(), 27);
    for a in [0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975] {
        assert_eq!(db.endpoint(a).unwrap(), double_bootstrap_enumeration(x, a), "alpha {a}");
    }
    let skewed = [0.0, 0.5, 4.0];
    let db = DoubleBootstrap::compute(
        &uni(&skewed),
        Functional::Mean,
        ResamplePlan::Exhaustive,
        &RngStream::new(0),
        TieRule::Midrank,
    )
    .unwrap();
    for a in [0.05, 0.5, 0.95] {
        assert_eq!(db.endpoint(a).unwrap(), double_bootstrap_enumeration(skewed, a), "alpha {a}");
    }
}

fn shared_sample(seed: u64) -> Sample {
    DgpSpec::Exponential.draw_sample(15, &RngStream::new(seed)).unwrap()
}

#[test]
fn endpoints_monotone_in_alpha() {
    let alphas = [0.025, 0.05, 0.25, 0.75, 0.95, 0.975];
    for seed in 0..5 {
        let s = shared_sample(seed);
        let f = Functional::Mean;
        let d = resample(&s, 500, f, &RngStream::new(seed + 100)).unwrap();
        let b = bias_fraction(d.estimates(), d.theta_hat(), TieRule::Midrank);
        let a = jackknife_acceleration(&s, f).unwrap();
        let sd = d.std_dev().unwrap();
        let st =
            Studentized::compute(&s, f, ResamplePlan::Random { outer: 200, inner: 20 }, &RngStream::new(seed)).unwrap();
        let db = DoubleBootstrap::compute(
            &s,
            f,
            ResamplePlan::Random { outer: 200, inner: 50 },
            &RngStream::new(seed),
            TieRule::Midrank,
        )
        .unwrap();
        let smoothed = smooth(&d, &RngStream::new(seed)).unwrap();
        let methods: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|al| pb_endpoint(&d, al).unwrap()),
            Box::new(|al| bn_endpoint(d.theta_hat(), sd, al).unwrap()),
            Box::new(|al| bb_endpoint(&d, al).unwrap()),
            Box::new(|al| quantile_sorted(&smoothed, al)),
            Box::new(|al| bc_endpoint(&d, b, al).unwrap()),
            Box::new(|al| bca_endpoint(&d, b, a, al).unwrap()),
            Box::new(|al| st.endpoint(al).unwrap()),
            Box::new(|al| db.endpoint(al).unwrap()),
        ];
        for (mi, m) in methods.iter().enumerate() {
            let e: Vec<f64> = alphas.iter().map(|&al| m(al)).collect();
            assert!(e.windows(2).all(|w| w[0] <= w[1]), "method {mi}: {e:?}");
        }
    }
}

/// Endpoints after `x → a·x + c` with the same seed, for the methods whose
/// resampling indices depend only on the seed.
fn all_endpoints(s: &Sample, f: Functional, alpha: f64) -> Vec<f64> {
    let d = resample(s, 300, f, &RngStream::new(42)).unwrap();
    let b = bias_fraction(d.estimates(), d.theta_hat(), TieRule::Midrank);
    let acc = jackknife_acceleration(s, f).unwrap();
    vec![
        pb_endpoint(&d, alpha).unwrap(),
        bn_endpoint(d.theta_hat(), d.std_dev().unwrap(), alpha).unwrap(),
        bb_endpoint(&d, alpha).unwrap(),
        sb_endpoint(&d, alpha, &RngStream::new(43)).unwrap(),
        bc_endpoint(&d, b, alpha).unwrap(),
        bca_endpoint(&d, b, acc, alpha).unwrap(),
        db_endpoint(s, f, 60, 30, alpha, &RngStream::new(44)).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn location_scale_equivariance(seed in 0u64..1000, a in 0.1f64..10.0, c in -50.0f64..50.0,
                                   alpha in prop::sample::select(vec![0.025, 0.25, 0.75, 0.975]),
                                   f in prop::sample::select(vec![Functional::Mean, Functional::Median, Functional::Q05, Functional::Q95])) {
        let s = DgpSpec::Laplace.draw_sample(11, &RngStream::new(seed)).unwrap();
        let t = s.affine(a, c);
        let base = all_endpoints(&s, f, alpha);
        let moved = all_endpoints(&t, f, alpha);
        for (i, (x, y)) in base.iter().zip(&moved).enumerate() {
            let want = a * x + c;
            prop_assert!((y - want).abs() <= 1e-9 * (1.0 + want.abs()), "method {} {} vs {}", i, y, want);
        }
    }

    #[test]
    fn bc_reduces_to_pb_and_bca_to_bc(est in prop::collection::vec(-10.0f64..10.0, 1..50),
                                      alpha in 0.01f64..0.99, bias in 0.01f64..0.99) {
        let d = dist(&est, 0.0);
        prop_assert_eq!(bc_endpoint(&d, 0.5, alpha).unwrap(), pb_endpoint(&d, alpha).unwrap());
        prop_assert_eq!(bca_endpoint(&d, bias, 0.0, alpha).unwrap(), bc_endpoint(&d, bias, alpha).unwrap());
    }

    #[test]
    fn bb_mirrors_pb_on_symmetric_distributions(half in prop::collection::vec(0i64..10_000, 1..30),
                                                 centre in -5000i64..5000, alpha in 0.01f64..0.99) {
        // Dyadic values keep the reflection exact.
        let centre = centre as f64 / 1024.0;
        let mut est: Vec<f64> = half.iter().map(|&h| centre + h as f64 / 1024.0).collect();
        est.extend(half.iter().map(|&h| centre - h as f64 / 1024.0));
        let d = dist(&est, centre);
        let bb = bb_endpoint(&d, alpha).unwrap();
        let pb = pb_endpoint(&d, alpha).unwrap();
        prop_assert_eq!(bb, pb);
    }
}
