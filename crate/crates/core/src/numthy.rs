//! Big-integer number theory: factorization, divisor counts of `q^i - 1`,
//! exact multiplicative orders, integer partitions and a few classical
//! sequences.
//!
//! Factoring runs trial division by the primes below 10^6, then Brent's
//! variant of Pollard's rho with the fixed restart schedule `c = 1, 2, 3, ...`
//! and a Miller-Rabin test over the first twenty prime bases. Factorizations
//! of `q^i - 1` are memoized in a process-wide cache that the command line
//! front end can load from and store to disk.

use std::collections::{BTreeMap, HashMap};
use std::sync::{OnceLock, RwLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{too_large, Error, Result};

/// Arbitrary-precision nonnegative integer.
pub type Nat = BigUint;

const TRIAL_LIMIT: u32 = 1_000_000;
const MR_BASES: [u128; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// Largest input to [`partitions_count`].
pub const PARTITION_COUNT_LIMIT: usize = 10_000;
/// Largest input to [`partitions_list`].
pub const PARTITION_LIST_LIMIT: usize = 60;
/// Largest input to [`primorial`].
pub const PRIMORIAL_LIMIT: usize = 100;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = TRIAL_LIMIT as usize;
        let mut sieve = vec![true; limit + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if sieve[i] {
                let mut j = i * i;
                while j <= limit {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect()
    })
}

/// A complete prime factorization, primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Factorization {
    factors: Vec<(Nat, u32)>,
}

impl Factorization {
    /// Builds a factorization from (prime, exponent) pairs, merging repeats.
    /// Primality of the keys is not checked.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Nat, u32)>) -> Self {
        let mut map: BTreeMap<Nat, u32> = BTreeMap::new();
        for (p, e) in pairs {
            if e > 0 {
                *map.entry(p).or_default() += e;
            }
        }
        Factorization { factors: map.into_iter().collect() }
    }

    pub fn factors(&self) -> &[(Nat, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = &Nat> {
        self.factors.iter().map(|(p, _)| p)
    }

    pub fn value(&self) -> Nat {
        self.factors.iter().fold(Nat::one(), |acc, (p, e)| acc * p.pow(*e))
    }

    pub fn tau(&self) -> Nat {
        self.factors.iter().fold(Nat::one(), |acc, (_, e)| acc * Nat::from(e + 1))
    }

    /// Every divisor, ascending.
    pub fn divisors(&self) -> Vec<Nat> {
        let mut out = vec![Nat::one()];
        for (p, e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
            for d in &out {
                let mut pk = d.clone();
                next.push(pk.clone());
                for _ in 0..*e {
                    pk *= p;
                    next.push(pk.clone());
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    let (s, overflow) = a.overflowing_add(b);
    if overflow || s >= n {
        s.wrapping_sub(n)
    } else {
        s
    }
}

fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    if n <= u64::MAX as u128 {
        return (a % n) * (b % n) % n;
    }
    let (a, b) = (a % n, b % n);
    let mut acc = 0u128;
    for i in (0..128 - b.leading_zeros()).rev() {
        acc = add_mod(acc, acc, n);
        if (b >> i) & 1 == 1 {
            acc = add_mod(acc, a, n);
        }
    }
    acc
}

fn pow_mod(mut base: u128, mut e: u128, n: u128) -> u128 {
    let mut acc = 1 % n;
    base %= n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        e >>= 1;
    }
    acc
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Miller-Rabin over a fixed base set.
pub(crate) fn is_probable_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

fn rho_attempt(n: u128, c: u128) -> Option<u128> {
    let f = |x: u128| add_mod(mul_mod(x, x, n), c, n);
    let batch = 128u64;
    let (mut y, mut r, mut acc, mut g) = (2u128, 1u64, 1u128, 1u128);
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..batch.min(r - k) {
                y = f(y);
                acc = mul_mod(acc, x.abs_diff(y), n);
            }
            g = gcd_u128(acc, n);
            k += batch;
        }
        r *= 2;
        if r > 1 << 40 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd_u128(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn split(n: u128) -> u128 {
    (1u128..).find_map(|c| rho_attempt(n, c)).expect("rho restart schedule is unbounded")
}

fn factor_large(n: u128, out: &mut Vec<(Nat, u32)>) {
    if n == 1 {
        return;
    }
    let limit = TRIAL_LIMIT as u128;
    if n < limit * limit || is_probable_prime(n) {
        out.push((Nat::from(n), 1));
        return;
    }
    let d = split(n);
    factor_large(d, out);
    factor_large(n / d, out);
}

/// Largest input accepted by [`factor`].
pub fn factor_limit() -> Nat {
    Nat::one() << 128u32
}

/// Complete prime factorization of `1 <= n <= 2^128`.
pub fn factor(n: &Nat) -> Result<Factorization> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    if *n > factor_limit() {
        return Err(too_large(format!("{n} > 2^128")));
    }
    if *n == factor_limit() {
        return Ok(Factorization { factors: vec![(Nat::from(2u32), 128)] });
    }
    let mut m = n.to_u128().unwrap();
    let mut pairs = Vec::new();
    for &p in small_primes() {
        let p = p as u128;
        if p * p > m {
            break;
        }
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            pairs.push((Nat::from(p), e));
        }
    }
    factor_large(m, &mut pairs);
    Ok(Factorization::from_pairs(pairs))
}

fn cache() -> &'static RwLock<HashMap<Nat, Factorization>> {
    static CACHE: OnceLock<RwLock<HashMap<Nat, Factorization>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// [`factor`] through the shared memo cache.
pub fn factor_cached(n: &Nat) -> Result<Factorization> {
    if let Some(f) = cache().read().unwrap().get(n) {
        return Ok(f.clone());
    }
    let f = factor(n)?;
    cache().write().unwrap().insert(n.clone(), f.clone());
    Ok(f)
}

/// Snapshot of the memo cache, sorted by key.
pub fn cache_entries() -> BTreeMap<Nat, Factorization> {
    cache().read().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect()
}

/// Adds entries to the memo cache. Callers are responsible for validation.
pub fn cache_insert(entries: impl IntoIterator<Item = (Nat, Factorization)>) {
    let mut guard = cache().write().unwrap();
    guard.extend(entries);
}

pub fn cache_clear() {
    cache().write().unwrap().clear();
}

pub fn tau(n: &Nat) -> Result<Nat> {
    Ok(factor(n)?.tau())
}

pub fn divisors(n: &Nat) -> Result<Vec<Nat>> {
    Ok(factor(n)?.divisors())
}

/// Least `j` dividing `multiple` with `q^j ≡ 1 (mod e)`, given that
/// `q^multiple ≡ 1 (mod e)`.
pub fn order_from_multiple(q: &Nat, e: &Nat, multiple: &Nat, multiple_factors: &Factorization) -> Nat {
    let one_mod = Nat::one() % e;
    let mut ord = multiple.clone();
    for (r, k) in multiple_factors.factors() {
        for _ in 0..*k {
            let candidate = &ord / r;
            if q.modpow(&candidate, e) == one_mod {
                ord = candidate;
            } else {
                break;
            }
        }
    }
    ord
}

fn carmichael(f: &Factorization) -> Result<Nat> {
    let mut acc = Nat::one();
    for (p, k) in f.factors() {
        let two = Nat::from(2u32);
        let lam = if *p == two {
            match k {
                1 => Nat::one(),
                2 => two,
                _ => Nat::one() << (k - 2),
            }
        } else {
            p.pow(k - 1) * (p - 1u32)
        };
        acc = acc.lcm(&lam);
    }
    Ok(acc)
}

/// Multiplicative order of `q` modulo `e`. By convention the order modulo 1
/// is 1.
pub fn mult_order(q: &Nat, e: &Nat) -> Result<Nat> {
    if e.is_zero() {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    if !q.gcd(e).is_one() {
        return Err(Error::NotCoprime { base: q.to_string(), modulus: e.to_string() });
    }
    if e.is_one() {
        return Ok(Nat::one());
    }
    let lambda = carmichael(&factor(e)?)?;
    let lambda_factors = factor(&lambda)?;
    Ok(order_from_multiple(q, e, &lambda, &lambda_factors))
}

fn q_pow_minus_one(q: &Nat, i: u32) -> Result<Nat> {
    if *q < Nat::from(2u32) {
        return Err(Error::InvalidArgument(format!("q = {q} must be at least 2")));
    }
    if i == 0 {
        return Err(Error::InvalidArgument("exponent must be positive".into()));
    }
    Ok(q.pow(i) - 1u32)
}

/// Factorization of `q^i - 1`, memoized.
pub fn factor_q_pow_minus_one(q: &Nat, i: u32) -> Result<Factorization> {
    factor_cached(&q_pow_minus_one(q, i)?)
}

/// σ_i: number of divisors of `q^i - 1`.
pub fn sigma(q: &Nat, i: u32) -> Result<Nat> {
    Ok(factor_q_pow_minus_one(q, i)?.tau())
}

/// Divisors `e` of `q^i - 1` whose multiplicative order of `q` is exactly
/// `i`, ascending.
pub fn exact_order_divisors(q: &Nat, i: u32) -> Result<Vec<Nat>> {
    let f = factor_q_pow_minus_one(q, i)?;
    let i_nat = Nat::from(i);
    let i_factors = factor(&i_nat)?;
    Ok(f.divisors().into_iter().filter(|e| order_from_multiple(q, e, &i_nat, &i_factors) == i_nat).collect())
}

/// σ_i*: number of `e` with multiplicative order of `q` modulo `e` equal to
/// `i`. Every such `e` divides `q^i - 1`.
pub fn sigma_star(q: &Nat, i: u32) -> Result<Nat> {
    Ok(Nat::from(exact_order_divisors(q, i)?.len()))
}

/// P(0), ..., P(n) by Euler's pentagonal recurrence.
pub fn partition_counts_upto(n: usize) -> Result<Vec<Nat>> {
    if n > PARTITION_COUNT_LIMIT {
        return Err(too_large(format!("P({n}) beyond {PARTITION_COUNT_LIMIT}")));
    }
    let mut table: Vec<Nat> = Vec::with_capacity(n + 1);
    table.push(Nat::one());
    for m in 1..=n {
        let (mut plus, mut minus) = (Nat::zero(), Nat::zero());
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let g2 = k * (3 * k + 1) / 2;
            let bucket = if k % 2 == 1 { &mut plus } else { &mut minus };
            *bucket += &table[m - g1];
            if g2 <= m {
                *bucket += &table[m - g2];
            }
        }
        table.push(plus - minus);
    }
    Ok(table)
}

/// P(n), the number of partitions of `n`.
pub fn partitions_count(n: usize) -> Result<Nat> {
    Ok(partition_counts_upto(n)?.pop().unwrap())
}

/// Every partition of `n` as weakly decreasing parts, in decreasing
/// lexicographic order (`[n]` first, all ones last).
pub fn partitions_list(n: usize) -> Result<Vec<Vec<u32>>> {
    if n > PARTITION_LIST_LIMIT {
        return Err(too_large(format!("partition list of {n} beyond {PARTITION_LIST_LIMIT}")));
    }
    fn walk(rest: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            prefix.push(part);
            walk(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(n as u32, n as u32, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Smallest prime `R | q^j - 1` with multiplicative order of `q` modulo `R`
/// equal to `j`, if any.
pub fn zsigmondy_prime(q: &Nat, j: u32) -> Result<Option<Nat>> {
    let f = factor_q_pow_minus_one(q, j)?;
    let j_nat = Nat::from(j);
    let j_factors = factor(&j_nat)?;
    let found = f.primes().find(|r| order_from_multiple(q, r, &j_nat, &j_factors) == j_nat).cloned();
    Ok(found)
}

/// The first `k` primes.
pub fn first_primes(k: usize) -> Vec<u32> {
    small_primes()[..k].to_vec()
}

/// Product of the first `k` primes.
pub fn primorial(k: usize) -> Result<Nat> {
    if k > PRIMORIAL_LIMIT {
        return Err(too_large(format!("primorial({k}) beyond {PRIMORIAL_LIMIT}")));
    }
    Ok(first_primes(k).into_iter().fold(Nat::one(), |acc, p| acc * p))
}

/// Möbius function.
pub fn moebius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::InvalidArgument("moebius(0) is undefined".into()));
    }
    let f = factor(&Nat::from(n))?;
    if f.factors().iter().any(|(_, e)| *e > 1) {
        return Ok(0);
    }
    Ok(if f.factors().len() % 2 == 0 { 1 } else { -1 })
}

/// Serde helpers writing [`Nat`] as a decimal string.
pub mod nat_string {
    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &Nat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn serialize_opt<S: Serializer>(n: &Option<Nat>, s: S) -> Result<S::Ok, S::Error> {
        match n {
            Some(n) => s.serialize_str(&n.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Nat, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Natural logarithm of a big integer, in double precision.
pub fn ln_nat(n: &Nat) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}
