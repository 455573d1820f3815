//! Runtime invariant suites, one per module, with seeded random sampling.

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::census::certified::scaled_pow2_sqrt;
use crate::census::{
    bound_eq_main, bound_lower, bound_upper, count_a, count_b, cycle_structure_of, enumerate_graph_data, partition_sum,
    Sigma,
};
use crate::cyclegraph::{
    elspas_structure, factor_product, poly_order, product_form_expand, tensor, BlockSpec, CycleMultiset, ProductForm,
};
use crate::error::Result;
use crate::ffield::{FieldCtx, FieldElement, Matrix, Poly};
use crate::numthy::{
    factor, first_primes, is_probable_prime, ln_nat, moebius, mult_order, partitions_count, primorial, sigma,
    sigma_star, tau, zsigmondy_prime, Nat,
};
use crate::oracle::{
    build_graph, canonical_code, check_fitting, companion_cycles, cycle_code, nilpotent_classes, oracle_census,
    FunctionalGraph,
};
use crate::par::Exec;

const MAX_LISTED_FAILURES: usize = 20;

/// Pass and fail counts of one suite, with the names of the first failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: u64,
    pub failed: u64,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport { suite: suite.into(), passed: 0, failed: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(what());
            }
        }
    }

    /// Counts an error as a failure.
    fn check_result(&mut self, r: Result<bool>, what: impl FnOnce() -> String) {
        match r {
            Ok(ok) => self.check(ok, what),
            Err(e) => self.check(false, || format!("{}: {e}", what())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn failed(&self) -> u64 {
        self.suites.iter().map(|s| s.failed).sum()
    }

    pub fn passed(&self) -> u64 {
        self.suites.iter().map(|s| s.passed).sum()
    }
}

pub fn run_all(seed: u64, exec: Exec) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(VerifyReport {
        seed,
        suites: vec![
            ffield_suite(&mut rng)?,
            numthy_suite(&mut rng)?,
            cyclegraph_suite(&mut rng)?,
            census_suite(exec)?,
            oracle_suite(&mut rng, exec)?,
        ],
    })
}

fn ctx(q: u64) -> Result<FieldCtx> {
    FieldCtx::for_order(q)
}

pub fn ffield_suite(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("ffield");
    for q in [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49, 81, 121, 243, 729] {
        let f = ctx(q)?;
        let el = |i: u64| f.element(i as u32).unwrap();
        let triples: Vec<(u64, u64, u64)> = if q <= 16 {
            (0..q).flat_map(|a| (0..q).flat_map(move |b| (0..q).map(move |c| (a, b, c)))).collect()
        } else {
            (0..500).map(|_| (rng.gen_range(0..q), rng.gen_range(0..q), rng.gen_range(0..q))).collect()
        };
        let mut ok = true;
        for (a, b, c) in triples {
            let (a, b, c) = (el(a), el(b), el(c));
            ok &= f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c));
            ok &= f.add(f.add(a, b), c) == f.add(a, f.add(b, c));
            ok &= f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c));
            ok &= f.add(a, f.neg(a)).is_zero();
            if !a.is_zero() {
                ok &= f.inv(a).map(|i| f.mul(a, i)) == Some(FieldElement::ONE);
            }
        }
        r.check(ok, || format!("field axioms over F_{q}"));
    }
    for q in [2u64, 3, 4, 5] {
        let f = ctx(q)?;
        for t in 1..=4usize {
            if q.pow(t as u32) > 1024 {
                continue;
            }
            let qt = Nat::from(q).pow(t as u32) - 1u32;
            for irr in f.irreducibles(t)? {
                let no_small_factor =
                    (1..=t / 2).all(|d| f.monic_polys(d).all(|g| !f.poly_rem(&irr, &g).unwrap().is_zero()));
                r.check(no_small_factor, || format!("{} has a factor over F_{q}", irr.to_text()));
                if !irr.coeff(0).is_zero() {
                    let lagrange = f.poly_mod_pow(&Poly::x(), &qt, &irr).map(|p| p == Poly::one());
                    r.check_result(lagrange, || format!("x^(q^t-1) mod {} over F_{q}", irr.to_text()));
                }
            }
        }
    }
    for q in [2u64, 3, 4, 5, 9] {
        let f = ctx(q)?;
        for _ in 0..50 {
            let n = rng.gen_range(1..=5usize);
            let idx: Vec<u32> = (0..n * n).map(|_| rng.gen_range(0..q as u32)).collect();
            let m = Matrix::from_indices(&f, n, &idx)?;
            r.check(f.kernel_dim(&m) + f.image_basis(&m).rank() == n, || {
                format!("rank-nullity for {} over F_{q}", m.to_text())
            });
        }
    }
    Ok(r)
}

pub fn numthy_suite(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("numthy");
    for q in [2u64, 3, 4, 5, 7] {
        let qn = Nat::from(q);
        for i in 1..=20u32 {
            let (s, ss) = (sigma(&qn, i)?, sigma_star(&qn, i)?);
            let mut by_exact = Nat::zero();
            let mut by_moebius = 0i64;
            for j in (1..=i).filter(|j| i % j == 0) {
                by_exact += sigma_star(&qn, j)?;
                by_moebius += moebius((i / j) as u64)? as i64 * sigma(&qn, j)?.to_i64().unwrap_or(i64::MAX);
            }
            r.check(by_exact == s, || format!("sum of sigma* over divisors, q={q} i={i}"));
            r.check(Some(by_moebius) == ss.to_i64(), || format!("Moebius inversion, q={q} i={i}"));
            r.check(&ss * 2u32 >= s, || format!("2 sigma* >= sigma, q={q} i={i}"));
            let t = tau(&Nat::from(i))?.to_u32().unwrap_or(u32::MAX);
            let floor = if t >= 6 { Nat::one() << (t - 6) } else { Nat::zero() };
            r.check(s >= floor, || format!("sigma >= 2^(tau(i)-6), q={q} i={i}"));
        }
    }
    for q in [2u64, 3, 5, 7] {
        for j in 7..=20u32 {
            let found = zsigmondy_prime(&Nat::from(q), j).map(|p| p.is_some());
            r.check_result(found, || format!("Zsigmondy prime for q={q} j={j}"));
        }
    }
    for k in 10..=100usize {
        let lhs = ln_nat(&primorial(k)?);
        let kf = k as f64;
        r.check(lhs < 2.0 * kf * kf.ln() * (1.0 - 1e-12), || format!("primorial bound at k={k}"));
    }
    for q in [2u64, 3, 5] {
        for t in 10..=30u32 {
            let s = sigma(&Nat::from(q), t)?.to_f64().unwrap_or(f64::INFINITY);
            let rhs = (q as f64).powf(2.0 * t as f64 / (t as f64).ln());
            r.check(s < rhs * (1.0 - 1e-12), || format!("divisor bound q={q} t={t}"));
        }
    }
    let parts = crate::numthy::partition_counts_upto(200)?;
    for (n, p) in parts.iter().enumerate().skip(1) {
        let bound = scaled_pow2_sqrt(16 * n as u64, &Nat::one()).floor;
        r.check(*p <= bound, || format!("P({n}) <= 2^(4 sqrt n)"));
    }
    for i in 0..200 {
        // Half single words, half products of small words reaching past 2^64.
        let n = if i % 2 == 0 {
            Nat::from(rng.gen_range(2..=u64::MAX))
        } else {
            (0..rng.gen_range(2..=4)).fold(Nat::one(), |acc, _| acc * rng.gen_range(2..1u64 << 30))
        };
        let ok = factor(&n).map(|f| f.value() == n && f.primes().all(|p| p.to_u128().is_some_and(independent_prime)));
        r.check_result(ok, || format!("factor round trip for {n}"));
    }
    for e in 2..=200u64 {
        for q in [2u64, 3, 10] {
            if e.gcd(&q) != 1 {
                continue;
            }
            let brute = (1..=e).find(|&k| Nat::from(q).modpow(&Nat::from(k), &Nat::from(e)).is_one());
            let fast = mult_order(&Nat::from(q), &Nat::from(e))?;
            r.check(brute.map(Nat::from) == Some(fast), || format!("order of {q} mod {e}"));
        }
    }
    Ok(r)
}

/// Miller-Rabin over BigUint with the bases below 100, followed by trial
/// division for small values.
fn independent_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    if n < 1 << 20 {
        return (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
    }
    let nn = Nat::from(n);
    let m1 = &nn - 1u32;
    let s = m1.trailing_zeros().unwrap_or(0);
    let d = &m1 >> s;
    first_primes(25).into_iter().all(|a| {
        let mut x = Nat::from(a).modpow(&d, &nn);
        if x.is_one() || x == m1 {
            return true;
        }
        for _ in 1..s {
            x = &x * &x % &nn;
            if x == m1 {
                return true;
            }
        }
        false
    }) && is_probable_prime(n)
}

fn random_multiset(rng: &mut ChaCha8Rng) -> CycleMultiset {
    let mut m = CycleMultiset::new();
    for _ in 0..rng.gen_range(1..=4) {
        m.add(Nat::from(rng.gen_range(1..=12u32)), Nat::from(rng.gen_range(1..=5u32)));
    }
    m
}

/// A random product form with at most `max_factors` factors, `k <= max_k`
/// and `alpha <= max_alpha`.
pub fn random_product_form(rng: &mut ChaCha8Rng, max_factors: usize, max_k: u64, max_alpha: u64) -> ProductForm {
    let count = rng.gen_range(0..=max_factors);
    let ks: BTreeSet<u64> = (0..count).map(|_| rng.gen_range(1..=max_k)).collect();
    let factors: Vec<(u64, u64)> = ks.into_iter().map(|k| (k, rng.gen_range(1..=max_alpha))).collect();
    ProductForm::from_u64(&factors).expect("increasing positive factors")
}

/// Every product form with at most `max_factors` factors, `k <= max_k` and
/// `alpha <= max_alpha`.
pub fn product_form_grid(max_factors: usize, max_k: u64, max_alpha: u64) -> Vec<ProductForm> {
    fn go(
        start: u64,
        left: usize,
        max_k: u64,
        max_alpha: u64,
        prefix: &mut Vec<(u64, u64)>,
        out: &mut Vec<ProductForm>,
    ) {
        out.push(ProductForm::from_u64(prefix).expect("increasing positive factors"));
        if left == 0 {
            return;
        }
        for k in start..=max_k {
            for a in 1..=max_alpha {
                prefix.push((k, a));
                go(k + 1, left - 1, max_k, max_alpha, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(1, max_factors, max_k, max_alpha, &mut Vec::new(), &mut out);
    out
}

/// Whether `factor_product` recovers `pf` from its expansion.
pub fn round_trips(pf: &ProductForm) -> bool {
    factor_product(&product_form_expand(pf)).as_ref() == Ok(pf)
}

/// Every block `f^s` with `f != x` irreducible of degree at most `t_max` and
/// `q^{ts} <= limit`, checked against explicit companion iteration.
pub fn companion_block_cases(f: &FieldCtx, t_max: usize, limit: u64) -> Result<Vec<(Poly, u32, bool)>> {
    let q = f.q() as u64;
    let mut out = Vec::new();
    for t in 1..=t_max {
        for irr in f.irreducibles(t)? {
            if irr == Poly::x() {
                continue;
            }
            let m = poly_order(&irr, f)?;
            let mut s = 1u32;
            while q.checked_pow(t as u32 * s).is_some_and(|v| v <= limit) {
                let block = BlockSpec { t: t as u32, m: m.clone(), s };
                let ok = elspas_structure(&block, f)? == companion_cycles(f, &irr, s)?;
                out.push((irr.clone(), s, ok));
                s += 1;
            }
        }
    }
    Ok(out)
}

pub fn cyclegraph_suite(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("cyclegraph");
    for _ in 0..200 {
        let (a, b, c) = (random_multiset(rng), random_multiset(rng), random_multiset(rng));
        r.check(tensor(&a, &b) == tensor(&b, &a), || format!("commutativity {a} {b}"));
        r.check(tensor(&tensor(&a, &b), &c) == tensor(&a, &tensor(&b, &c)), || format!("associativity {a} {b} {c}"));
        r.check(tensor(&a, &CycleMultiset::unit()) == a, || format!("unit {a}"));
        r.check(tensor(&a, &b).total_vertices() == a.total_vertices() * b.total_vertices(), || {
            format!("vertex count {a} {b}")
        });
    }
    for m in 1..=12u32 {
        for n in 1..=12u32 {
            let explicit = FunctionalGraph::from_cycles(&[m])
                .and_then(|a| FunctionalGraph::from_cycles(&[n]).and_then(|b| crate::oracle::tensor_digraph(&a, &b)))
                .map(|g| g.cycle_multiset());
            let algebraic = tensor(&CycleMultiset::from_pairs([(m, 1u32)]), &CycleMultiset::from_pairs([(n, 1u32)]));
            r.check_result(explicit.map(|e| e == algebraic), || format!("C_{m} x C_{n} against explicit product"));
        }
    }
    for pf in product_form_grid(3, 8, 3) {
        r.check(round_trips(&pf), || format!("grid round trip {:?}", pf.factors()));
    }
    for _ in 0..1000 {
        let pf = random_product_form(rng, 4, 12, 5);
        r.check(round_trips(&pf), || format!("random round trip {:?}", pf.factors()));
    }
    for a in [3u64, 5, 7] {
        let m = mult_order(&Nat::from(2u32), &Nat::from(a))?.to_u32().unwrap_or(0);
        let alpha = (Nat::from(2u32).pow(m) - 1u32) / a;
        let factor = ProductForm::new(vec![(Nat::from(a), alpha)])?;
        let mut acc = CycleMultiset::unit();
        for big_n in 1..=4u32 {
            acc = tensor(&acc, &product_form_expand(&factor));
            let mut closed = CycleMultiset::unit();
            closed.add(Nat::from(a), (Nat::from(2u32).pow(big_n * m) - 1u32) / a);
            r.check(acc == closed, || format!("repeated factor a={a} N={big_n}"));
        }
    }
    for q in [2u64, 3, 4, 5] {
        let f = ctx(q)?;
        let qn = f.order();
        for t in 1..=4u32 {
            for m in crate::numthy::exact_order_divisors(&qn, t)? {
                let mut s = 1;
                while qn.pow(t * s) <= Nat::from(1u32 << 20) {
                    let block = BlockSpec { t, m: m.clone(), s };
                    let ok = elspas_structure(&block, &f).map(|c| c.total_vertices() == qn.pow(t * s));
                    r.check_result(ok, || format!("block vertex count {block:?} over F_{q}"));
                    s += 1;
                }
            }
        }
    }
    for q in [2u64, 3] {
        for (irr, s, ok) in companion_block_cases(&ctx(q)?, 3, 4096)? {
            r.check(ok, || format!("block structure vs companion for ({})^{s} over F_{q}", irr.to_text()));
        }
    }
    Ok(r)
}

/// Whether distinct p-free, exponent-one graph data of dimension `n` give
/// distinct cycle structures.
pub fn p_free_injective(f: &FieldCtx, n: usize) -> Result<bool> {
    let mut seen = BTreeSet::new();
    for data in enumerate_graph_data(f, n)? {
        if data.is_p_free(f.p())
            && data.blocks().iter().all(|b| b.s == 1)
            && !seen.insert(cycle_structure_of(&data, f)?)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn census_suite(exec: Exec) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("census");
    for q in [2u64, 3, 4, 5] {
        let f = ctx(q)?;
        let mut prev_b = Nat::zero();
        for n in 1..=8usize {
            let a = count_a(&f, n, false, exec)?.value;
            let b = count_b(&f, n, exec)?.value;
            r.check(bound_lower(&f, n)? <= a && a <= bound_upper(&f, n)?, || format!("sandwich q={q} n={n}"));
            let eq = bound_eq_main(&f, n)?;
            r.check(eq.maxterm_lower <= a && a <= eq.maxterm_upper, || format!("max-term sandwich q={q} n={n}"));
            r.check(partition_sum(&f, n, Sigma::Exact)? <= b, || format!("B lower bound q={q} n={n}"));
            r.check(b <= partition_sum(&f, n, Sigma::All)?, || format!("B upper bound q={q} n={n}"));
            r.check(b >= prev_b, || format!("B monotone q={q} n={n}"));
            prev_b = b;
            if n <= 6 {
                let count = Nat::from(enumerate_graph_data(&f, n)?.len());
                r.check(count == partition_sum(&f, n, Sigma::All)?, || format!("graph data count q={q} n={n}"));
                r.check(p_free_injective(&f, n)?, || format!("p-free injectivity q={q} n={n}"));
            }
        }
    }
    let f = ctx(3)?;
    let seq = count_b(&f, 6, Exec::Sequential)?;
    let par = count_b(&f, 6, Exec::Parallel)?;
    r.check(seq == par, || "sequential and parallel census agree".into());
    Ok(r)
}

pub fn oracle_suite(rng: &mut ChaCha8Rng, exec: Exec) -> Result<SuiteReport> {
    let mut r = SuiteReport::new("oracle");
    for (q, n) in [(2u64, 1usize), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2), (5, 1), (5, 2)] {
        let f = ctx(q)?;
        let report = oracle_census(&f, n, exec)?;
        r.check(Nat::from(report.distinct_codes) == count_a(&f, n, false, exec)?.value, || {
            format!("A against oracle q={q} n={n}")
        });
        r.check(Nat::from(report.invertible_distinct_codes) == count_b(&f, n, exec)?.value, || {
            format!("B against oracle q={q} n={n}")
        });
        r.check(report.prop1_violations == 0, || format!("Fitting decomposition q={q} n={n}"));
    }
    for (q, n) in [(2u64, 1usize), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3)] {
        let rep = nilpotent_classes(&ctx(q)?, n, exec)?;
        r.check(rep.code_matches_partition && Nat::from(rep.distinct_codes) == partitions_count(n)?, || {
            format!("nilpotent classes q={q} n={n}")
        });
    }
    for q in [2u64, 3, 4] {
        let f = ctx(q)?;
        for _ in 0..100 {
            let n = rng.gen_range(1..=3usize);
            let idx: Vec<u32> = (0..n * n).map(|_| rng.gen_range(0..q as u32)).collect();
            let t = Matrix::from_indices(&f, n, &idx)?;
            let g = build_graph(&t, &f)?;
            let code = canonical_code(&g);
            let mut perm: Vec<u32> = (0..g.size() as u32).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            r.check(canonical_code(&g.relabel(&perm)?) == code, || format!("relabeling {}", t.to_text()));
            if g.is_bijective() {
                r.check(cycle_code(&g.cycle_multiset())? == code, || format!("cycle-only code {}", t.to_text()));
            }
            r.check_result(check_fitting(&t, &f, Some(&code)), || format!("Fitting {}", t.to_text()));
        }
    }
    Ok(r)
}
