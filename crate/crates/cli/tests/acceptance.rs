//! Release acceptance checks. Each test covers one shipped guarantee and
//! prints a `criterion N (...): PASS` or `FAIL` line, so running this target
//! with `--nocapture` doubles as the release checklist.

use std::f64::consts::PI;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use gapcast_core::recovery::apply_kernel_time;
use gapcast_core::{
    inverse_z_on_grid, kernel_dc_gain, kernel_freq_error, project_gap, restrict_taps,
    synth_kernel, z_transform_on_grid, Error as CoreError, ObservationPattern, PredictorParams64,
    Recoverer, RecoveryTask64, Signal64, SpectralGap64,
};

use gapcast_cli::config::{default_spec, Component, SignalSpec};
use gapcast_cli::gen::materialize;
use gapcast_cli::sweep::run_sweep;

const ROUND_TRIP_TOL: f64 = 1e-10;
const PARSEVAL_REL_TOL: f64 = 1e-10;
const PROJECTION_TOL: f64 = 1e-12;
const SERIES_TOL: f64 = 1e-8;
const FREQ_ERROR_FLOOR: f64 = 1e-14;
const FREQ_ERROR_END_RATIO: f64 = 1e-3;
const DC_REL_TOL: f64 = 1e-15;
const SUP_ERROR_BUDGET: f64 = 1e-3;
const CERT_FP_ALLOWANCE: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const NOISE_BOUND_SLACK: f64 = 1e-10;
const MASK_AGREEMENT_SLACK: f64 = 1e-8;

fn criterion(n: u32, name: &str, body: impl FnOnce()) {
    let outcome = catch_unwind(AssertUnwindSafe(body));
    match outcome {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(payload) => {
            println!("criterion {n} ({name}): FAIL");
            resume_unwind(payload);
        }
    }
}

fn params(gamma: f64, r_hat: f64) -> PredictorParams64 {
    PredictorParams64::new(gamma, r_hat).unwrap()
}

fn gap_at_pi(delta: f64) -> SpectralGap64 {
    SpectralGap64::at_pi(delta).unwrap()
}

fn seeded_signal(seed: u64, start: i64, len: usize) -> Signal64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    Signal64::new(start, values)
}

#[test]
fn c01_transform_round_trip_and_energy() {
    criterion(1, "transform round trip and energy identity", || {
        for (block, &grid) in [64usize, 1024].iter().enumerate() {
            for s in 0..50u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1_000 * (block as u64 + 1) + s);
                let len = rng.gen_range(1..=grid);
                let x = seeded_signal(rng.gen(), 0, len);

                let spectrum = z_transform_on_grid(&x, grid).unwrap();
                let back = inverse_z_on_grid(&spectrum, x.start(), grid).unwrap();
                let mut worst = 0.0f64;
                for t in back.start()..back.end() {
                    worst = worst.max((back.sample(t) - x.sample(t)).norm());
                }
                assert!(worst < ROUND_TRIP_TOL, "round trip error {worst} at grid {grid}");

                let direct = x.norm_l2();
                let through = spectrum.norm_over_grid();
                let gap = (direct - through).abs() / direct;
                assert!(gap < PARSEVAL_REL_TOL, "energy identity gap {gap} at grid {grid}");
            }
        }
    });
}

#[test]
fn c02_projection_laws() {
    criterion(2, "projection idempotence, contraction, arc monotonicity", || {
        let grid = 256;
        let deltas = [2.0, 1.0, 0.5, 0.25];
        for s in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7_000 + s);
            let len = rng.gen_range(1..=grid);
            let x = seeded_signal(rng.gen(), 0, len);
            let scale = x.norm_l2();

            let gap = gap_at_pi(0.5);
            let px = project_gap(&x, &gap, grid).unwrap();
            let ppx = project_gap(&px, &gap, grid).unwrap();
            let idem = ppx.add_scaled(&px, -1.0).norm_l2();
            assert!(idem <= PROJECTION_TOL * scale, "idempotence defect {idem}");
            assert!(
                px.norm_l2() <= scale * (1.0 + PROJECTION_TOL),
                "projection expanded {} -> {}",
                scale,
                px.norm_l2()
            );

            // Wider arcs remove nested supersets of spectral mass.
            let removed: Vec<f64> = deltas
                .iter()
                .map(|&d| {
                    let p = project_gap(&x, &gap_at_pi(d), grid).unwrap();
                    x.add_scaled(&p, -1.0).norm_l2()
                })
                .collect();
            for w in removed.windows(2) {
                assert!(
                    w[1] <= w[0] + PROJECTION_TOL * scale,
                    "removal grew as the arc shrank: {removed:?}"
                );
            }
        }
    });
}

#[test]
fn c03_tap_series_oracle() {
    criterion(3, "taps match the inverse-factorial series and its powers", || {
        // Horizon 1 taps at gamma = 1: (-1)^j / (j+1)!. Higher horizons are
        // self-convolutions of that series.
        let count = 40;
        let mut base = vec![0.0f64; count];
        let mut fact = 1.0f64;
        for (j, slot) in base.iter_mut().enumerate() {
            fact *= (j + 1) as f64;
            *slot = if j % 2 == 0 { 1.0 / fact } else { -1.0 / fact };
        }
        let convolve = |a: &[f64], b: &[f64]| {
            let mut out = vec![0.0f64; a.len() + b.len() - 1];
            for (i, &ai) in a.iter().enumerate() {
                for (j, &bj) in b.iter().enumerate() {
                    out[i + j] += ai * bj;
                }
            }
            out
        };
        let oracles = [base.clone(), convolve(&base, &base), convolve(&convolve(&base, &base), &base)];

        let p = params(1.0, 1.0);
        for (m, oracle) in (1u32..=3).zip(&oracles) {
            let kernel = synth_kernel(m, &p, 32, None).unwrap();
            for j in 0..16 {
                let got = kernel.taps[j];
                let want = oracle[j];
                assert!(
                    (got - want).abs() < SERIES_TOL,
                    "m = {m}, tap {j}: {got} vs series {want}"
                );
            }
        }
    });
}

#[test]
fn c04_frequency_error_decay() {
    criterion(4, "off-arc frequency error decays in gamma", || {
        let gap = gap_at_pi(1.0);
        let gammas = [5.0, 10.0, 20.0, 40.0, 80.0];
        let errs: Vec<f64> = gammas
            .iter()
            .map(|&g| kernel_freq_error(1, &params(g, 1.0), &gap, 4096).unwrap())
            .collect();
        for (w, pair) in errs.windows(2).enumerate() {
            assert!(
                pair[1] < pair[0] || pair.iter().all(|&e| e <= FREQ_ERROR_FLOOR),
                "no decay from gamma {} to {}: {errs:?}",
                gammas[w],
                gammas[w + 1]
            );
        }
        assert!(
            errs[4] < FREQ_ERROR_END_RATIO * errs[0],
            "end-to-end ratio too weak: {errs:?}"
        );
    });
}

#[test]
fn c05_dc_recovery() {
    criterion(5, "constants pass through at unit gain", || {
        let c = 2.5f64;
        let n = 1024usize;
        let p = params(100.0, 1.0);
        let task = RecoveryTask64 {
            pattern: ObservationPattern::contiguous_negative(),
            observations: Signal64::new(
                -(n as i64) + 1,
                vec![Complex64::new(c, 0.0); n],
            ),
            targets: vec![1],
            theta: 0,
            window: n,
            params: p,
            gap: gap_at_pi(0.5),
            masked: true,
        };
        let rep = gapcast_core::recover(&task).unwrap();
        let est = rep.estimates[0];
        assert!(
            (est - Complex64::new(c, 0.0)).norm() < DC_REL_TOL * c,
            "constant drifted: {est}"
        );

        // Closed-form check of the zero-frequency gain for this horizon.
        let alpha = 1.0 - 100.0f64.powf(-1.0);
        let oracle = 1.0 - (-100.0 / (1.0 + alpha)).exp();
        let gain = kernel_dc_gain(1, &p);
        assert!((gain - oracle).abs() < 1e-16, "gain {gain} vs closed form {oracle}");
        assert!((est.re - c * oracle).abs() < DC_REL_TOL * c);
    });
}

#[test]
fn c06_forward_prediction_with_certificate() {
    criterion(6, "two-tone forward prediction within certified budget", || {
        let n = 1020usize;
        let x = |t: i64| (PI * t as f64 / 3.0).cos() + 0.5 * (PI * t as f64 / 5.0).cos();
        let observations =
            Signal64::from_real(-(n as i64) + 1, (-(n as i64) + 1..=0).map(x));
        let targets: Vec<i64> = (1..=5).collect();
        let truth = Signal64::from_real(1, targets.iter().map(|&t| x(t)));

        let p = params(40.0, 1.0);
        let gap = gap_at_pi(0.5);
        let engine: Recoverer<f64> = Recoverer::new();
        let task = RecoveryTask64 {
            pattern: ObservationPattern::contiguous_negative(),
            observations,
            targets: targets.clone(),
            theta: 0,
            window: n,
            params: p,
            gap: gap.clone(),
            masked: true,
        };
        let rep = engine.recover(&task).unwrap().with_truth(&truth);
        let sup = rep.sup_error.unwrap();
        assert!(sup <= SUP_ERROR_BUDGET, "sup error {sup}");

        // Per-target certificate: response mismatch at the two tones plus a
        // floating-point allowance must dominate the observed error.
        let errors = rep.errors.as_ref().unwrap();
        for (i, &t) in targets.iter().enumerate() {
            let m = t as u32;
            let kernel = engine.kernel_for(m, &p, n, Some(&gap)).unwrap();
            let cert = 1.0
                * (kernel.dtft(PI / 3.0) - Complex64::cis(PI / 3.0 * m as f64)).norm()
                + 0.5 * (kernel.dtft(PI / 5.0) - Complex64::cis(PI / 5.0 * m as f64)).norm()
                + CERT_FP_ALLOWANCE;
            assert!(
                errors[i] <= cert,
                "target {t}: error {} above certificate {cert}",
                errors[i]
            );
        }
    });
}

#[test]
fn c07_sparse_equals_dense_on_compressed_values() {
    criterion(7, "stride-3 recovery equals dense recovery bit for bit", || {
        let n = 340usize;
        let spec = SignalSpec::SinusoidMix {
            components: vec![
                Component { amplitude: 1.0, frequency: PI / 5.0, phase: 0.0 },
                Component { amplitude: 0.5, frequency: 2.0 * PI / 5.0, phase: 0.7 },
            ],
        };
        let gap = gap_at_pi(0.5);
        let sparse_pattern = ObservationPattern::periodic(3).unwrap();
        let dense_pattern = ObservationPattern::contiguous_negative();
        let sparse = materialize(&spec, &sparse_pattern, 0, &gap, n).unwrap();
        let dense = materialize(&spec, &dense_pattern, 0, &gap, n).unwrap();

        let engine: Recoverer<f64> = Recoverer::new();
        let p = params(40.0, 1.0);
        let targets = vec![1, 2, 3];
        let run = |pattern: ObservationPattern, observations: Signal64| {
            let task = RecoveryTask64 {
                pattern,
                observations,
                targets: targets.clone(),
                theta: 0,
                window: n,
                params: p,
                gap: gap.clone(),
                masked: true,
            };
            engine.recover(&task).unwrap()
        };
        let rep_sparse = run(sparse_pattern, sparse.observations);
        let rep_dense = run(dense_pattern, dense.observations);
        for (a, b) in rep_sparse.estimates.iter().zip(&rep_dense.estimates) {
            assert!(a.norm() > 0.0);
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    });
}

#[test]
fn c08_reversal_and_splice_consistency() {
    criterion(8, "mirror involution, splice identity, symmetric estimates", || {
        // Double reversal is the identity, bit for bit.
        let pattern = ObservationPattern::signed_power(1, 3).unwrap();
        assert_eq!(pattern.reversed().reversed(), pattern);
        let sig = seeded_signal(99, -17, 40);
        let twice = sig.reversed().reversed();
        assert_eq!(sig.start(), twice.start());
        for (a, b) in sig.values().iter().zip(twice.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }

        // Even two-tone mix observed through the symmetric cubic pattern.
        let n = 64usize;
        let spec = SignalSpec::SinusoidMix {
            components: vec![
                Component { amplitude: 1.0, frequency: PI / 5.0, phase: 0.0 },
                Component { amplitude: 0.5, frequency: 2.0 * PI / 5.0, phase: 0.0 },
            ],
        };
        let gap = gap_at_pi(0.5);
        let two_sided = materialize(&spec, &pattern, 0, &gap, n).unwrap();

        let engine: Recoverer<f64> = Recoverer::new();
        let task = |targets: Vec<i64>| RecoveryTask64 {
            pattern: pattern.clone(),
            observations: two_sided.observations.clone(),
            targets,
            theta: 0,
            window: n,
            params: params(40.0, 1.0),
            gap: gap.clone(),
            masked: true,
        };
        let spliced = engine.case_c(&task(vec![-3, -2, 2, 3])).unwrap();
        let fwd = engine.case_a(&task(vec![2, 3])).unwrap();
        let bwd = engine.case_b(&task(vec![-3, -2])).unwrap();
        for (slot, half) in [(2, 0), (3, 1)] {
            assert_eq!(
                spliced.estimates[slot].re.to_bits(),
                fwd.estimates[half].re.to_bits()
            );
            assert_eq!(
                spliced.estimates[slot].im.to_bits(),
                fwd.estimates[half].im.to_bits()
            );
        }
        for (slot, half) in [(0, 0), (1, 1)] {
            assert_eq!(
                spliced.estimates[slot].re.to_bits(),
                bwd.estimates[half].re.to_bits()
            );
            assert_eq!(
                spliced.estimates[slot].im.to_bits(),
                bwd.estimates[half].im.to_bits()
            );
        }

        // Even data through an even pattern: estimates are even too.
        let pairs = [(0usize, 3usize), (1usize, 2usize)];
        for (neg, pos) in pairs {
            let d = (spliced.estimates[neg] - spliced.estimates[pos]).norm();
            assert!(d <= SYMMETRY_TOL, "asymmetry {d} between slots {neg} and {pos}");
        }
    });
}

#[test]
fn c09_noise_robustness_over_default_sweep() {
    criterion(9, "noise moves estimates by at most kernel norm times rho", || {
        let rows = run_sweep(&default_spec(), 2).unwrap();
        assert!(rows.iter().all(|r| r.status == "ok"), "sweep had failing rows");

        let mut by_gamma: Vec<(f64, Vec<&gapcast_cli::sweep::SweepRow>)> = Vec::new();
        for row in &rows {
            match by_gamma.iter_mut().find(|(g, _)| *g == row.gamma) {
                Some((_, group)) => group.push(row),
                None => by_gamma.push((row.gamma, vec![row])),
            }
        }
        for (gamma, group) in &by_gamma {
            let clean = group
                .iter()
                .find(|r| r.rho == 0.0)
                .unwrap_or_else(|| panic!("no clean row for gamma {gamma}"));
            for row in group {
                let budget = clean.sup_error
                    + row.max_kernel_norm * row.rho * (1.0 + NOISE_BOUND_SLACK);
                assert!(
                    row.sup_error <= budget,
                    "gamma {gamma}, rho {}: {} above {budget}",
                    row.rho,
                    row.sup_error
                );
            }
        }
        let witness = rows.iter().any(|r| r.rho > 0.0 && r.sup_error <= SUP_ERROR_BUDGET);
        assert!(witness, "no noisy row recovered within {SUP_ERROR_BUDGET}");
    });
}

#[test]
fn c10_restriction_ignores_excluded_observations() {
    criterion(10, "restricted kernels never read outside their index set", || {
        let n = 256usize;
        let engine: Recoverer<f64> = Recoverer::new();
        let gap = gap_at_pi(0.5);
        let kernel = engine.kernel_for(1, &params(10.0, 1.0), n, Some(&gap)).unwrap();
        let keep: Vec<bool> = (0..n).map(|j| j < n / 2).collect();
        let restricted = restrict_taps(&kernel, &keep);

        let y = seeded_signal(4242, -(n as i64) + 1, n);
        let mut perturbed = y.clone();
        for j in n / 2..n {
            let t = -(j as i64);
            perturbed.set(t, y.sample(t) + Complex64::new(37.5, -12.25));
        }

        let before = apply_kernel_time(&y, &restricted);
        let after = apply_kernel_time(&perturbed, &restricted);
        assert_eq!(before.re.to_bits(), after.re.to_bits());
        assert_eq!(before.im.to_bits(), after.im.to_bits());

        // The unrestricted kernel does depend on those samples.
        let full_before = apply_kernel_time(&y, &kernel);
        let full_after = apply_kernel_time(&perturbed, &kernel);
        assert!((full_before - full_after).norm() > 0.0);
    });
}

#[test]
fn c11_mask_equivalence_and_loud_failure() {
    criterion(11, "masked matches unmasked in range, refusal out of range", || {
        let n = 512usize;
        let gap = gap_at_pi(0.5);
        let engine: Recoverer<f64> = Recoverer::new();

        // In the numerically safe band the masked and unmasked paths agree
        // on arc-free inputs up to the unmasked kernel's discarded tail.
        for (i, gamma) in [5.0, 10.0].into_iter().enumerate() {
            let p = params(gamma, 0.2);
            let raw = seeded_signal(555 + i as u64, -(n as i64) + 1, n);
            let member = project_gap(&raw, &gap, n).unwrap();
            let run = |masked: bool| {
                let task = RecoveryTask64 {
                    pattern: ObservationPattern::contiguous_negative(),
                    observations: member.clone(),
                    targets: vec![1],
                    theta: 0,
                    window: n,
                    params: p,
                    gap: gap.clone(),
                    masked,
                };
                engine.recover(&task).unwrap().estimates[0]
            };
            let est_masked = run(true);
            let est_time = run(false);
            let unmasked = engine.kernel_for(1, &p, n, None).unwrap();
            let bound = (unmasked.tail_fraction + MASK_AGREEMENT_SLACK) * member.norm_l2();
            let diff = (est_masked - est_time).norm();
            assert!(diff <= bound, "gamma {gamma}: paths differ by {diff}, bound {bound}");
        }

        // Past the representable range, unmasked synthesis must refuse
        // loudly; a quiet success must at least be finite.
        for gamma in [20.0, 40.0, 80.0] {
            match synth_kernel(1, &params(gamma, 1.0), n, None) {
                Ok(kernel) => {
                    assert!(kernel.l2_norm.is_finite());
                    assert!(kernel.taps.iter().all(|t| t.is_finite()));
                }
                Err(CoreError::GridCapExceeded { .. }) => {}
                Err(other) => panic!("gamma {gamma}: unexpected failure {other}"),
            }
        }
    });
}
