//! Oracle-checked contracts that are too heavy for inline unit tests:
//! randomized GK rank checks, space trends, Monte Carlo estimates for the
//! sampled summaries, and exhaustive small-domain cross-checks.

use qs_core::fixed_n::FixedNSummary;
use qs_core::gk::GkSummary;
use qs_core::oracle::ExactOracle;
use qs_core::sampler::BernoulliSampler;
use qs_core::stream::{StreamKind, StreamSpec};

fn uniform(n: u64, seed: u64) -> Vec<i64> {
    StreamSpec::new(StreamKind::Uniform { lo: 0, hi: 1 << 30 }, n, seed)
        .iter()
        .unwrap()
        .collect()
}

#[test]
fn gk_rank_contract_on_random_streams() {
    let n = 10_000u64;
    for eps in [0.1, 0.05] {
        for seed in 0..10u64 {
            let items = uniform(n, 1000 + seed);
            let mut gk = GkSummary::new(eps).unwrap();
            let mut oracle = ExactOracle::new();
            for &x in &items {
                gk.insert(x);
                oracle.insert(x);
            }
            let tol = (eps * n as f64).floor() as u64;
            for k in 1..=99u64 {
                let rho = k * n / 100;
                let y = gk.query(rho).unwrap();
                let err = oracle.rank_error(&y, rho);
                assert!(
                    err <= tol,
                    "eps {} seed {} rho {}: err {} > {}",
                    eps,
                    seed,
                    rho,
                    err,
                    tol
                );
            }
        }
    }
}

#[test]
fn gk_space_grows_logarithmically() {
    let eps = 0.01;
    let count_at = |n: u64| {
        let mut gk = GkSummary::new(eps).unwrap();
        for x in uniform(n, 77) {
            gk.insert(x);
        }
        gk.compress();
        gk.tuple_count() as f64
    };
    let small = count_at(10_000);
    let large = count_at(1_000_000);
    let log_ratio = (eps * 1e6).ln() / (eps * 1e4).ln();
    assert!(
        large / small <= 3.0 * log_ratio,
        "tuple growth {:.2}x exceeds 3x the log trend {:.2}x",
        large / small,
        log_ratio
    );
}

#[test]
fn gk_exhaustive_small_streams_over_small_alphabet() {
    // Every stream of length <= 6 over {1..6}, plus seeded samples up to
    // length 12, checked against the exact oracle.
    for eps in [0.5, 0.25] {
        for len in 1..=6u32 {
            let total = 6u64.pow(len);
            for code in 0..total {
                let mut c = code;
                let items: Vec<i64> = (0..len)
                    .map(|_| {
                        let v = (c % 6) as i64 + 1;
                        c /= 6;
                        v
                    })
                    .collect();
                check_gk_against_oracle(eps, &items);
            }
        }
        let mut state = 0xDEADBEEFu64;
        for len in 7..=12 {
            for _ in 0..2000 {
                let items: Vec<i64> = (0..len)
                    .map(|_| {
                        state ^= state << 13;
                        state ^= state >> 7;
                        state ^= state << 17;
                        (state % 6) as i64 + 1
                    })
                    .collect();
                check_gk_against_oracle(eps, &items);
            }
        }
    }
}

fn check_gk_against_oracle(eps: f64, items: &[i64]) {
    let mut gk = GkSummary::new(eps).unwrap();
    let mut oracle = ExactOracle::new();
    for &x in items {
        gk.insert(x);
        oracle.insert(x);
    }
    let n = items.len() as u64;
    let tol = (eps * n as f64).floor() as u64;
    for rho in 1..=n {
        let y = gk.query(rho).unwrap();
        let err = oracle.rank_error(&y, rho);
        assert!(
            err <= tol,
            "eps {} stream {:?} rho {}: answer {} err {} > {}",
            eps,
            items,
            rho,
            y,
            err,
            tol
        );
    }
}

#[test]
fn gk_tuple_count_is_far_below_stream_length() {
    let n = 100_000u64;
    let mut gk = GkSummary::new(0.0125).unwrap();
    for x in uniform(n, 5) {
        gk.insert(x);
    }
    assert!(
        (gk.tuple_count() as u64) < n / 50,
        "{} tuples for n = {}",
        gk.tuple_count(),
        n
    );
}

#[test]
fn online_max_rank_query_takes_clamp_path() {
    // Beyond row 0: active row answers rho = t through the divisor clamp.
    use qs_core::online::{OnlineConfig, OnlineSummary};
    let (eps, m) = (0.25, 256u64);
    let n = 40_000u64; // past 32m = 8192, active row >= 1
    for seed in 0..10u64 {
        let mut s = OnlineSummary::new(OnlineConfig::new(eps, m, 500 + seed).unwrap());
        let mut oracle = ExactOracle::new();
        for x in uniform(n, 600 + seed) {
            s.insert(x);
            oracle.insert(x);
        }
        let y = s.query(n).unwrap();
        let err = oracle.rank_error(&y, n);
        assert!(
            err as f64 <= eps * n as f64,
            "seed {}: top-rank error {} above eps*t",
            seed,
            err
        );
    }
}

#[test]
fn fixed_n_median_on_sorted_stream_monte_carlo() {
    // Sorted input makes value equal rank, so the scoring is exact.
    let n = 1u64 << 20;
    let m = 1u64 << 16;
    let eps = 0.1;
    let rho = 1u64 << 19;
    let budget = eps * n as f64 / 2.0;
    let trials = 100u64;
    let mut hits = 0u32;
    for seed in 0..trials {
        let mut fx = FixedNSummary::new(eps, n, m, 9000 + seed).unwrap();
        for x in 1..=n as i64 {
            fx.insert(x).unwrap();
        }
        let answer = fx.query(rho).unwrap();
        assert!(answer.guaranteed);
        if ((answer.value - rho as i64).abs() as f64) <= budget {
            hits += 1;
        }
    }
    assert!(
        hits as f64 >= 0.95 * trials as f64,
        "only {}/{} trials inside eps*n/2",
        hits,
        trials
    );
}

#[test]
fn fixed_n_space_depends_on_m_not_n() {
    let eps = 0.1;
    let m = 4096u64;
    let tuples_at = |n: u64, seed: u64| {
        let mut fx = FixedNSummary::new(eps, n, m, seed).unwrap();
        for x in uniform(n, seed + 1) {
            fx.insert(x).unwrap();
        }
        fx.tuple_count() as f64
    };
    let small = tuples_at(100_000, 21);
    let large = tuples_at(1_000_000, 22);
    let ratio = large / small;
    assert!(
        (0.66..=1.5).contains(&ratio),
        "tuple count moved with n: {} vs {} (ratio {:.2})",
        small,
        large,
        ratio
    );
}

#[test]
fn sampled_rank_estimate_tail() {
    // rhat(y) = (n/m) * rank(y, S); deviations past eps*t/8 at t = n should
    // be rare. The theoretical tail 2*exp(-eps^2 m / 12288) is far from tight
    // at this m, so the check also pins an empirical 2% ceiling.
    let (m, n) = (1000u64, 64_000u64);
    let eps = 0.5;
    let rank_y = n / 2; // y is the median of the sorted stream 1..=n
    let budget = eps * n as f64 / 8.0;
    let trials = 1000u64;
    let mut exceed = 0u32;
    for seed in 0..trials {
        let mut s = BernoulliSampler::new(m, n as u128, 31_000 + seed).unwrap();
        let mut rank_in_sample = 0u64;
        for t in 1..=n {
            if s.offer() && t <= rank_y {
                rank_in_sample += 1;
            }
        }
        let rhat = n as f64 / m as f64 * rank_in_sample as f64;
        if (rhat - rank_y as f64).abs() > budget {
            exceed += 1;
        }
    }
    let frequency = exceed as f64 / trials as f64;
    let paper_style_bound = (2.0 * (-(eps * eps * m as f64) / 12288.0).exp()).min(1.0) + 0.01;
    assert!(frequency <= paper_style_bound);
    assert!(frequency <= 0.02, "tail frequency {} above 2%", frequency);
}

#[test]
fn fixed_n_composition_error_across_probe_grid() {
    // Failure target is eps*t/2. The tail bound implied by the concentration
    // inequalities at this m is exp(-m/192) + 4m*exp(-eps^2 m/12288), which is
    // vacuous at desk-scale m for the earliest guaranteed time n/64; later
    // probes have real margin and must be nearly failure-free.
    use qs_core::eval::{default_phis, run_eval, Algorithm, EvalConfig};
    let (eps, m, n) = (0.2, 4096u64, 262_144u64);
    let cfg = EvalConfig {
        algo: Algorithm::FixedN,
        epsilon: eps,
        m: Some(m),
        n,
        seed: 81,
        stream: StreamSpec::new(StreamKind::Uniform { lo: 0, hi: 1 << 30 }, n, 82),
        probes: vec![n / 64, n / 4, n],
        phis: default_phis(),
        trials: 10,
        reservoir_k: None,
    };
    let report = run_eval(&cfg).unwrap();
    let theorem_bound = ((-(m as f64) / 192.0).exp()
        + 4.0 * m as f64 * (-(eps * eps * m as f64) / 12288.0).exp())
    .min(1.0);
    for probe in &report.probes {
        assert!(
            probe.failure_fraction <= theorem_bound + 0.01,
            "t = {}: failure fraction {} above the implied bound {}",
            probe.t,
            probe.failure_fraction,
            theorem_bound
        );
        if probe.t >= n / 4 {
            assert!(
                probe.failure_fraction < 0.05,
                "t = {}: failure fraction {} not small",
                probe.t,
                probe.failure_fraction
            );
        }
    }
}

#[test]
fn oracle_matches_counting_selection_exhaustively() {
    // Streams of length <= 10 over {1..4}; reference route is counting-based
    // selection rather than sorting.
    for len in 1..=10u32 {
        let total = 4u64.pow(len);
        for code in 0..total {
            let mut c = code;
            let mut counts = [0u64; 5];
            let mut oracle = ExactOracle::new();
            for _ in 0..len {
                let v = (c % 4) as i64 + 1;
                c /= 4;
                counts[v as usize] += 1;
                oracle.insert(v);
            }
            for rho in 1..=len as u64 {
                let mut remaining = rho;
                let mut expect = 0i64;
                for v in 1..=4u64 {
                    if remaining <= counts[v as usize] {
                        expect = v as i64;
                        break;
                    }
                    remaining -= counts[v as usize];
                }
                assert_eq!(oracle.select(rho).unwrap(), expect);
            }
            for v in 1..=4i64 {
                let expect: u64 = (1..=v).map(|u| counts[u as usize]).sum();
                assert_eq!(oracle.rank(&v), expect);
            }
        }
    }
}
