//! Bounds on `A_q(n)` and `B_q(n)` built from the divisor counts σ_i and the
//! exact-order counts σ_i*.
//!
//! Every bound is a sum or maximum over vectors λ of products
//! `Π_i C(σ_i + λ_i - 1, λ_i)`. Sums over all of `P_n` (nonzero λ with
//! `Σ i λ_i <= n`) bound `A_q(n)`; sums over partitions of `n` exactly bound
//! `B_q(n)`. The irrational factor `2^{4√n}` is applied with certified
//! upward rounding.

use num_traits::{One, Zero};
use serde::Serialize;

use super::certified::scaled_pow2_sqrt;
use super::{check_census_args, count_a};
use crate::error::{Error, Result};
use crate::ffield::FieldCtx;
use crate::numthy::{ln_nat, partitions_list, sigma, sigma_star, Nat};
use crate::par::Exec;

/// Which divisor count feeds the binomial products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma {
    /// σ_i, all divisors of `q^i - 1`.
    All,
    /// σ_i*, divisors of exact order `i`.
    Exact,
}

/// `λ_1, ..., λ_n`; `counts[i - 1] = λ_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LambdaVector {
    counts: Vec<u32>,
}

impl LambdaVector {
    fn from_partition(parts: &[u32], n: usize) -> Self {
        let mut counts = vec![0; n];
        for &p in parts {
            counts[p as usize - 1] += 1;
        }
        LambdaVector { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// `Σ i λ_i`.
    pub fn weight(&self) -> u64 {
        self.counts.iter().enumerate().map(|(i, &l)| (i as u64 + 1) * l as u64).sum()
    }
}

fn check_bound_args(ctx: &FieldCtx, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("bounds need n >= 1".into()));
    }
    check_census_args(ctx, n)
}

/// Every nonzero λ with `Σ i λ_i <= n`: the partitions of `1..=n`.
pub fn lambda_vectors(n: usize) -> Result<Vec<LambdaVector>> {
    let mut out = Vec::new();
    for k in 1..=n {
        out.extend(partitions_list(k)?.iter().map(|p| LambdaVector::from_partition(p, n)));
    }
    Ok(out)
}

fn sigma_table(ctx: &FieldCtx, n: usize, kind: Sigma) -> Result<Vec<Nat>> {
    let q = ctx.order();
    (1..=n as u32)
        .map(|i| match kind {
            Sigma::All => sigma(&q, i),
            Sigma::Exact => sigma_star(&q, i),
        })
        .collect()
}

/// `C(a + b - 1, b)`: multisets of size `b` from `a` kinds.
fn multichoose(a: &Nat, b: u32) -> Nat {
    if b == 0 {
        return Nat::one();
    }
    if a.is_zero() {
        return Nat::zero();
    }
    let mut acc = Nat::one();
    for j in 0..b {
        acc = acc * (a + j) / (j + 1);
    }
    acc
}

fn lambda_product(lambda: &LambdaVector, sig: &[Nat]) -> Nat {
    lambda.counts.iter().zip(sig).fold(Nat::one(), |acc, (&l, s)| acc * multichoose(s, l))
}

/// `Σ_{λ ⊢ n} Π C(σ_i + λ_i - 1, λ_i)`. With [`Sigma::All`] this bounds
/// `B_q(n)` from above; with [`Sigma::Exact`], from below.
pub fn partition_sum(ctx: &FieldCtx, n: usize, kind: Sigma) -> Result<Nat> {
    check_bound_args(ctx, n)?;
    let sig = sigma_table(ctx, n, kind)?;
    Ok(partitions_list(n)?.iter().map(|p| lambda_product(&LambdaVector::from_partition(p, n), &sig)).sum())
}

fn lambda_sum(ctx: &FieldCtx, n: usize, kind: Sigma) -> Result<Nat> {
    let sig = sigma_table(ctx, n, kind)?;
    Ok(lambda_vectors(n)?.iter().map(|l| lambda_product(l, &sig)).sum())
}

fn lambda_max(ctx: &FieldCtx, n: usize, kind: Sigma) -> Result<Nat> {
    let sig = sigma_table(ctx, n, kind)?;
    Ok(lambda_vectors(n)?.iter().map(|l| lambda_product(l, &sig)).max().unwrap_or_default())
}

/// `Σ_{λ ∈ P_n} Π C(σ_i* + λ_i - 1, λ_i) <= A_q(n)`.
pub fn bound_lower(ctx: &FieldCtx, n: usize) -> Result<Nat> {
    check_bound_args(ctx, n)?;
    lambda_sum(ctx, n, Sigma::Exact)
}

/// `⌈2^{4√n} · Σ_{λ ∈ P_n} Π C(σ_i + λ_i - 1, λ_i)⌉ >= A_q(n)`.
pub fn bound_upper(ctx: &FieldCtx, n: usize) -> Result<Nat> {
    check_bound_args(ctx, n)?;
    let sum = lambda_sum(ctx, n, Sigma::All)?;
    Ok(scaled_pow2_sqrt(16 * n as u64, &sum).ceil)
}

/// The max-term form of the bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EqMainBounds {
    /// `max_λ Π C(σ_i* + λ_i - 1, λ_i)`, a lower bound on `A_q(n)`.
    #[serde(serialize_with = "crate::numthy::nat_string::serialize")]
    pub maxterm_lower: Nat,
    /// `max_λ Π C(σ_i + λ_i - 1, λ_i)`, before the multiplier.
    #[serde(serialize_with = "crate::numthy::nat_string::serialize")]
    pub maxterm_upper_raw: Nat,
    /// `⌈(n + 1) · 2^{4√n} · maxterm_upper_raw⌉`, an upper bound on `A_q(n)`.
    #[serde(serialize_with = "crate::numthy::nat_string::serialize")]
    pub maxterm_upper: Nat,
}

pub fn bound_eq_main(ctx: &FieldCtx, n: usize) -> Result<EqMainBounds> {
    check_bound_args(ctx, n)?;
    let maxterm_lower = lambda_max(ctx, n, Sigma::Exact)?;
    let raw = lambda_max(ctx, n, Sigma::All)?;
    let maxterm_upper = scaled_pow2_sqrt(16 * n as u64, &(Nat::from(n + 1) * &raw)).ceil;
    Ok(EqMainBounds { maxterm_lower, maxterm_upper_raw: raw, maxterm_upper })
}

/// One row of the growth table, natural logarithms throughout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub log_a: f64,
    /// `n / ln ln n`; undefined at `n = 1`.
    pub n_over_loglog: Option<f64>,
    pub log_lower: f64,
    pub log_upper: f64,
}

pub fn growth_report(ctx: &FieldCtx, n_max: usize, exec: Exec) -> Result<Vec<GrowthRow>> {
    check_bound_args(ctx, n_max)?;
    (1..=n_max)
        .map(|n| {
            let a = count_a(ctx, n, false, exec)?.value;
            let nf = n as f64;
            Ok(GrowthRow {
                n,
                log_a: ln_nat(&a),
                n_over_loglog: (n > 1).then(|| nf / nf.ln().ln()),
                log_lower: ln_nat(&bound_lower(ctx, n)?),
                log_upper: ln_nat(&bound_upper(ctx, n)?),
            })
        })
        .collect()
}
