//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any FAIL.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use linmap::census::certified::scaled_pow2_sqrt;
use linmap::census::{bound_eq_main, bound_lower, bound_upper, count_a, count_b, growth_report};
use linmap::ffield::FieldCtx;
use linmap::numthy::{
    ln_nat, moebius, partition_counts_upto, partitions_count, primorial, sigma, sigma_star, zsigmondy_prime, Nat,
};
use linmap::oracle::{nilpotent_classes, oracle_census, OracleReport};
use linmap::verify::{companion_block_cases, product_form_grid, random_product_form, round_trips};
use linmap::Exec;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORACLE_CASES: [(u64, usize); 10] =
    [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2), (5, 1), (5, 2)];
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const SEED: u64 = 20240601;

type Outcome = Result<String, String>;

fn ctx(q: u64) -> FieldCtx {
    FieldCtx::for_order(q).unwrap()
}

fn nat(n: u64) -> Nat {
    Nat::from(n)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct OracleRuns {
    reports: Vec<((u64, usize), OracleReport)>,
    elapsed: Duration,
}

fn oracle_runs() -> OracleRuns {
    let start = Instant::now();
    let reports =
        ORACLE_CASES.iter().map(|&(q, n)| ((q, n), oracle_census(&ctx(q), n, Exec::Parallel).unwrap())).collect();
    OracleRuns { reports, elapsed: start.elapsed() }
}

fn oracle_equivalence(runs: &OracleRuns) -> Outcome {
    for ((q, n), r) in &runs.reports {
        let f = ctx(*q);
        let a = count_a(&f, *n, false, Exec::Parallel).unwrap().value;
        let b = count_b(&f, *n, Exec::Parallel).unwrap().value;
        ensure(nat(r.distinct_codes) == a, || format!("A_{q}({n}): census {a}, oracle {}", r.distinct_codes))?;
        ensure(nat(r.invertible_distinct_codes) == b, || {
            format!("B_{q}({n}): census {b}, oracle {}", r.invertible_distinct_codes)
        })?;
    }
    let get = |q, n| &runs.reports.iter().find(|(k, _)| *k == (q, n)).unwrap().1;
    let anchors = [
        (get(2, 1).distinct_codes, 2),
        (get(2, 2).distinct_codes, 6),
        (get(2, 3).distinct_codes, 13),
        (get(2, 2).invertible_distinct_codes, 3),
        (get(2, 3).invertible_distinct_codes, 5),
    ];
    ensure(anchors.iter().all(|(got, want)| got == want), || format!("anchors {anchors:?}"))?;
    ensure(runs.elapsed < ORACLE_BUDGET, || format!("oracle runs took {:?}", runs.elapsed))?;
    Ok(format!("{} cases, anchors 2/6/13 and 3/5, oracle time {:.1?}", runs.reports.len(), runs.elapsed))
}

fn convolution(runs: &OracleRuns) -> Outcome {
    for ((q, n), r) in &runs.reports {
        let f = ctx(*q);
        let mut sum = Nat::zero();
        for k in 0..=*n {
            sum += partitions_count(k).unwrap() * count_b(&f, n - k, Exec::Parallel).unwrap().value;
        }
        ensure(sum == nat(r.distinct_codes), || {
            format!("q={q} n={n}: convolution {sum}, oracle {}", r.distinct_codes)
        })?;
        ensure(sum == count_a(&f, *n, false, Exec::Parallel).unwrap().value, || format!("q={q} n={n}: count_a"))?;
    }
    let mut checked = 0;
    for q in [2u64, 3] {
        for n in 1..=4usize {
            let r = nilpotent_classes(&ctx(q), n, Exec::Parallel).unwrap();
            let p = partitions_count(n).unwrap();
            ensure(r.code_matches_partition && nat(r.distinct_codes) == p, || {
                format!(
                    "nilpotent q={q} n={n}: {} codes, P(n) = {p}, matches {}",
                    r.distinct_codes, r.code_matches_partition
                )
            })?;
            checked += 1;
        }
    }
    Ok(format!("convolution on {} oracle cases, nilpotent classes = P(n) on {checked} cases", runs.reports.len()))
}

fn sandwich() -> Outcome {
    let mut count = 0;
    for q in [2u64, 3, 4, 5] {
        let f = ctx(q);
        for n in 1..=8usize {
            let a = count_a(&f, n, false, Exec::Parallel).unwrap().value;
            let (lo, hi) = (bound_lower(&f, n).unwrap(), bound_upper(&f, n).unwrap());
            ensure(lo <= a && a <= hi, || format!("q={q} n={n}: {lo} <= {a} <= {hi}"))?;
            let eq = bound_eq_main(&f, n).unwrap();
            ensure(eq.maxterm_lower <= a && a <= eq.maxterm_upper, || {
                format!("q={q} n={n}: max-term {} <= {a} <= {}", eq.maxterm_lower, eq.maxterm_upper)
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} (q, n) points, both forms"))
}

fn block_structures() -> Outcome {
    let mut count = 0;
    for q in [2u64, 3] {
        for (f, s, ok) in companion_block_cases(&ctx(q), 3, 4096).unwrap() {
            ensure(ok, || format!("q={q} f={} s={s}", f.to_text()))?;
            count += 1;
        }
    }
    Ok(format!("{count} blocks"))
}

fn round_trip() -> Outcome {
    let grid = product_form_grid(3, 8, 3);
    let bad = grid.iter().filter(|pf| !round_trips(pf)).count();
    ensure(bad == 0, || format!("{bad} grid failures"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let bad = (0..1000).filter(|_| !round_trips(&random_product_form(&mut rng, 4, 12, 5))).count();
    ensure(bad == 0, || format!("{bad} random failures"))?;
    Ok(format!("{} grid forms and 1000 random forms", grid.len()))
}

fn fitting(runs: &OracleRuns) -> Outcome {
    let total: u64 = runs.reports.iter().map(|(_, r)| r.total_maps).sum();
    let violations: u64 = runs.reports.iter().map(|(_, r)| r.prop1_violations).sum();
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("{total} matrices, 0 violations"))
}

fn number_theory() -> Outcome {
    for q in [2u64, 3, 5, 7] {
        for i in 1..=20u32 {
            let mut rhs = 0i64;
            for j in (1..=i).filter(|j| i % j == 0) {
                rhs += moebius((i / j) as u64).unwrap() as i64 * sigma(&nat(q), j).unwrap().to_i64().unwrap();
            }
            let lhs = sigma_star(&nat(q), i).unwrap();
            ensure(lhs.to_i64() == Some(rhs), || format!("Moebius q={q} i={i}: {lhs} vs {rhs}"))?;
        }
    }
    let mut exceptions = BTreeSet::new();
    for q in [2u64, 3, 5, 7] {
        for j in 1..=20u32 {
            if zsigmondy_prime(&nat(q), j).unwrap().is_none() {
                exceptions.insert((q, j));
            }
        }
    }
    let expected: BTreeSet<(u64, u32)> = [(2, 1), (2, 6), (3, 2), (7, 2)].into_iter().collect();
    ensure(exceptions == expected, || format!("Zsigmondy exceptions {exceptions:?}"))?;
    for (n, p) in partition_counts_upto(200).unwrap().iter().enumerate().skip(1) {
        let bound = scaled_pow2_sqrt(16 * n as u64, &Nat::one()).floor;
        ensure(*p <= bound, || format!("P({n}) = {p} > {bound}"))?;
    }
    for k in 10..=100usize {
        let kf = k as f64;
        let (lhs, rhs) = (ln_nat(&primorial(k).unwrap()), 2.0 * kf * kf.ln());
        ensure(lhs < rhs * (1.0 - 1e-12), || format!("primorial k={k}: {lhs} vs {rhs}"))?;
    }
    for q in [2u64, 3, 5] {
        for t in 10..=30u32 {
            let s = sigma(&nat(q), t).unwrap().to_f64().unwrap();
            let rhs = (q as f64).powf(2.0 * t as f64 / (t as f64).ln());
            ensure(s < rhs * (1.0 - 1e-12), || format!("divisor count q={q} t={t}: {s} vs {rhs}"))?;
        }
    }
    Ok(format!("Zsigmondy exceptions {exceptions:?}; all identities and bounds hold"))
}

fn growth() -> Outcome {
    let rows = growth_report(&ctx(2), 10, Exec::Parallel).unwrap();
    let logs: Vec<f64> = rows.iter().map(|r| r.log_a).collect();
    ensure(logs[1..].windows(2).all(|w| w[0] < w[1]), || format!("log A_2(n) = {logs:?}"))?;
    Ok(format!("log A_2(n) for n = 2..10 rises from {:.3} to {:.3}", logs[1], logs[9]))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(msg) => println!("PASS criterion {id} ({name}): {msg} [{t:.1?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {msg} [{t:.1?}]");
            }
        }
    };
    let runs = oracle_runs();
    report(1, "census equals oracle", &mut || oracle_equivalence(&runs));
    report(2, "convolution and nilpotent classes", &mut || convolution(&runs));
    report(3, "bound sandwich", &mut sandwich);
    report(4, "cycle structure formula against iteration", &mut block_structures);
    report(5, "product factorization round trip", &mut round_trip);
    report(6, "Fitting decomposition", &mut || fitting(&runs));
    report(7, "number-theory identities", &mut number_theory);
    report(8, "growth table", &mut growth);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
