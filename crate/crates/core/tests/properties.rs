//! Randomized invariants across the signal chain.

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use rfi_core::cancel::{cancel_pipeline, diagonal_average, orth_complement};
use rfi_core::channel::{apply_gain_db, fade, ChannelScenario, ScenarioKind};
use rfi_core::channelizer::channelize;
use rfi_core::klt::{eig_hermitian, hankel_embed, lag_covariance_from_series, CMatrix, Eigenspace};
use rfi_core::lte::{
    build_grid, ofdma_waveform, scfdma_waveform, CpMode, LteConfig, Modulation, ResourceGrid,
    UeAllocation,
};
use rfi_core::metrics::{rate_budget_bps, rqf};
use rfi_core::signals::{delay_samples, gen_circular_gaussian, mix, ComplexSeries, PowerDb};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn samples(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), len)
}

fn series(v: Vec<Complex64>) -> ComplexSeries {
    ComplexSeries::new(v, 1.0).unwrap()
}

fn max_diff(a: &ComplexSeries, b: &ComplexSeries) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn random_eigenspace(l: usize, m: usize, seed: u64) -> Eigenspace {
    let x = gen_circular_gaussian(4 * l + 8, 1.0, 1.0, seed).unwrap();
    eig_hermitian(&lag_covariance_from_series(&x, l).unwrap(), 1.0)
        .unwrap()
        .leading(m)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mix_is_linear(v in samples(1..=64).prop_flat_map(|a| {
        let n = a.len();
        (Just(a), samples(n..=n), samples(n..=n))
    })) {
        let (a, b, cc) = (series(v.0), series(v.1), series(v.2));
        let lhs = mix(&a, &b.add(&cc).unwrap(), PowerDb(0.0)).unwrap();
        let rhs = mix(&mix(&a, &b, PowerDb(0.0)).unwrap(), &cc, PowerDb(0.0)).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn delays_compose(v in samples(2..=80), j in 0usize..40, k in 0usize..40) {
        let x = series(v);
        prop_assume!(j + k < x.len());
        let twice = delay_samples(&delay_samples(&x, j).unwrap(), k).unwrap();
        prop_assert_eq!(twice, delay_samples(&x, j + k).unwrap());
    }

    #[test]
    fn gains_compose(v in samples(1..=32), a in -60.0f64..60.0, b in -60.0f64..60.0) {
        let x = series(v);
        let once = apply_gain_db(&x, PowerDb(a + b)).unwrap();
        let twice = apply_gain_db(&apply_gain_db(&x, PowerDb(a)).unwrap(), PowerDb(b)).unwrap();
        let scale = once.samples().iter().map(|s| s.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&once, &twice) <= 1e-12 * scale);
    }

    #[test]
    fn fade_is_linear(kind in 1usize..9, seed in any::<u64>(), alpha in -2.0f64..2.0) {
        let scenario = ChannelScenario::preset(ScenarioKind::from_index(kind).unwrap(), 11.52e6).unwrap();
        let n = 300;
        let x = gen_circular_gaussian(n, 1.0, 11.52e6, seed).unwrap();
        let y = gen_circular_gaussian(n, 1.0, 11.52e6, seed ^ 1).unwrap();
        let s = c(alpha, 0.5);
        let lhs = fade(&x.scaled(s).add(&y).unwrap(), &scenario, seed).unwrap();
        let rhs = fade(&x, &scenario, seed).unwrap().scaled(s).add(&fade(&y, &scenario, seed).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn channelizer_is_linear_and_energy_preserving(v in samples(8..=256), n in 1usize..=16, s in -3.0f64..3.0) {
        let x = series(v);
        let y = x.scaled(c(0.3, -1.1));
        let sum = x.scaled(c(s, 0.0)).add(&y).unwrap();
        let cx = channelize(&x, n, None).unwrap().channels;
        let cy = channelize(&y, n, None).unwrap().channels;
        let cs = channelize(&sum, n, None).unwrap().channels;
        for ((a, b), m) in cx.iter().zip(&cy).zip(&cs) {
            let want = a.scaled(c(s, 0.0)).add(b).unwrap();
            prop_assert!(max_diff(m, &want) <= 1e-12);
        }
        let e: f64 = cx.iter().map(|ch| ch.energy()).sum();
        prop_assert!((e - x.energy()).abs() <= 1e-9 * x.energy());
    }

    #[test]
    fn hankel_round_trip(v in samples(4..=120), frac in 0.0f64..1.0) {
        let x = series(v);
        let l = 2 + ((x.len() / 2 - 2) as f64 * frac) as usize;
        let back = diagonal_average(hankel_embed(&x, l).unwrap().matrix(), 1.0).unwrap();
        prop_assert!(max_diff(&back, &x) <= 1e-12);
    }

    #[test]
    fn eigenvectors_orthonormal_and_trace_kept(seed in any::<u64>(), l in 2usize..=24, degenerate in any::<bool>()) {
        let r = if degenerate {
            // repeated eigenvalues: a scaled identity plus a rank-one bump
            let mut r = CMatrix::identity(l, l) * c(2.0, 0.0);
            r[(0, 0)] += c(1.0, 0.0);
            r
        } else {
            let x = gen_circular_gaussian(3 * l, 1.0, 1.0, seed).unwrap();
            lag_covariance_from_series(&x, l).unwrap()
        };
        let es = eig_hermitian(&r, 1.0).unwrap();
        let gram = es.phi().adjoint() * es.phi();
        prop_assert!(fro(&(gram - CMatrix::identity(l, l))) <= 1e-9);
        let trace: f64 = (0..l).map(|i| r[(i, i)].re).sum();
        let sum: f64 = es.lambda().iter().sum();
        prop_assert!((sum - trace).abs() <= 1e-9 * trace.abs().max(1e-300));
        prop_assert!(es.lambda().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn projector_invariants(seed in any::<u64>(), l in 2usize..=20, frac in 0.0f64..1.0, v in samples(20..=20)) {
        let m = ((l as f64 * frac) as usize).min(l);
        let es = random_eigenspace(l, m, seed);
        let p = orth_complement(&es).unwrap();
        let pm = p.matrix();
        prop_assert!(fro(&(pm - pm.adjoint())) <= 1e-8);
        prop_assert!(fro(&(pm * pm - pm)) <= 1e-8);
        prop_assert!(fro(&(pm * es.phi())) <= 1e-8);
        let vec = CMatrix::from_iterator(l, 1, v.into_iter().take(l));
        let out = p.apply(&vec).unwrap();
        prop_assert!(fro(&out) <= fro(&vec) + 1e-9);
    }

    #[test]
    fn rqf_scales_with_error_power(v in samples(4..=128), alpha in 0.0f64..4.0, seed in any::<u64>()) {
        let x = series(v);
        let e = gen_circular_gaussian(x.len(), 1.0, 1.0, seed).unwrap();
        let e = e.scaled(c((alpha * x.energy() / e.energy()).sqrt(), 0.0));
        let r = rqf(&x, &x.add(&e).unwrap()).unwrap().value;
        prop_assert!((r - alpha).abs() <= 1e-9 * alpha.max(1.0));
    }

    #[test]
    fn rqf_ignores_common_reindexing(v in samples(4..=64), w in samples(64..=64), rot in 0usize..64) {
        let n = v.len();
        let x = series(v.clone());
        let y = series(w[..n].to_vec());
        let perm = |s: &[Complex64]| -> ComplexSeries {
            let mut out: Vec<Complex64> = s.to_vec();
            out.rotate_left(rot % n);
            out.reverse();
            series(out)
        };
        let a = rqf(&x, &y).unwrap().value;
        let b = rqf(&perm(&v), &perm(&w[..n])).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn rate_budget_is_linear(l in 1usize..1000, m in 1usize..500, bits in 1u32..64, bw in 1e4f64..1e8, k in 2usize..5) {
        let base = rate_budget_bps(l, m, 4.0, bw, 30.5e3, bits).unwrap();
        let tol = 1e-12 * base * k as f64;
        prop_assert!((rate_budget_bps(k * l, m, 4.0, bw, 30.5e3, bits).unwrap() - k as f64 * base).abs() <= tol);
        prop_assert!((rate_budget_bps(l, k * m, 4.0, bw, 30.5e3, bits).unwrap() - k as f64 * base).abs() <= tol);
        prop_assert!((rate_budget_bps(l, m, 4.0, bw, 30.5e3, k as u32 * bits).unwrap() - k as f64 * base).abs() <= tol);
        prop_assert!((rate_budget_bps(l, m, 4.0, k as f64 * bw, 30.5e3, bits).unwrap() - k as f64 * base).abs() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn waveforms_are_linear_in_the_grid(seed in any::<u64>(), s in -2.0f64..2.0) {
        let cfg = LteConfig::new(1.25, CpMode::Short).unwrap();
        let a = build_grid(&cfg, 0.5, Modulation::Qam16, 1, seed, true).unwrap();
        let b = build_grid(&cfg, 1.0, Modulation::Qpsk, 1, seed ^ 7, false).unwrap();
        let mut sum = ResourceGrid::empty(&cfg, 1).unwrap();
        for sym in 0..sum.n_symbols() {
            for row in 0..sum.n_subcarriers() {
                sum.set(row, sym, a.get(row, sym) * s + b.get(row, sym));
            }
        }
        let wa = ofdma_waveform(&a, &cfg).unwrap();
        let wb = ofdma_waveform(&b, &cfg).unwrap();
        let want = wa.scaled(c(s, 0.0)).add(&wb).unwrap();
        prop_assert!(max_diff(&ofdma_waveform(&sum, &cfg).unwrap(), &want) <= 1e-12);

        let alloc = [UeAllocation { first_row: 12, n_rows: 24 }];
        let ua = scfdma_waveform(&a, &cfg, &alloc).unwrap();
        let ub = scfdma_waveform(&b, &cfg, &alloc).unwrap();
        let want = ua.scaled(c(s, 0.0)).add(&ub).unwrap();
        prop_assert!(max_diff(&scfdma_waveform(&sum, &cfg, &alloc).unwrap(), &want) <= 1e-12);
    }

    #[test]
    fn occupancy_within_one_rb(occ in 0.0f64..=1.0, seed in any::<u64>(), bw in prop::sample::select(vec![1.25, 2.5, 5.0])) {
        let cfg = LteConfig::new(bw, CpMode::Short).unwrap();
        let g = build_grid(&cfg, occ, Modulation::Qpsk, 1, seed, true).unwrap();
        prop_assert!((g.occupancy_fraction() - occ).abs() <= 1.0 / cfg.n_resource_blocks as f64);
    }

    #[test]
    fn cancellation_is_phase_equivariant(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let l = 12;
        let x = gen_circular_gaussian(160, 1.0, 1.0, seed).unwrap();
        let phi_r = random_eigenspace(l, 3, seed ^ 3);
        let rot = Complex64::from_polar(1.0, theta);
        let a = cancel_pipeline(&x.scaled(rot), &phi_r, l).unwrap();
        let b = cancel_pipeline(&x, &phi_r, l).unwrap().scaled(rot);
        prop_assert!(max_diff(&a, &b) <= 1e-8);
    }
}

#[test]
fn power_scales_with_gain_squared() {
    let cfg = LteConfig::new(1.25, CpMode::Short).unwrap();
    let g = build_grid(&cfg, 0.7, Modulation::Qam64, 1, 3, true).unwrap();
    let w = ofdma_waveform(&g, &cfg).unwrap();
    for gain in [0.5, 2.0, 199.5] {
        assert_relative_eq!(
            w.scaled(c(gain, 0.0)).power(),
            gain * gain * w.power(),
            max_relative = 1e-12
        );
    }
}

#[test]
fn gaussian_draws_repeat_bit_for_bit() {
    let a = gen_circular_gaussian(1000, 2.0, 1.0, 42).unwrap();
    let b = gen_circular_gaussian(1000, 2.0, 1.0, 42).unwrap();
    assert!(a
        .samples()
        .iter()
        .zip(b.samples())
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}
