//! Certified evaluation of `factor · 2^{√r}` for the exponential factor in
//! the upper bounds.
//!
//! Uses fixed-point interval arithmetic on big integers: `√r`, `ln 2` and
//! `exp` are each bracketed from below and above with directed rounding, and
//! the precision doubles until the bracket pins down the integer part.

use num_integer::Roots;
use num_traits::{One, Zero};

use crate::numthy::Nat;

/// Integer bracket of a nonnegative real: `floor <= x <= ceil`, with
/// `floor == ceil` exactly when `x` is an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledBound {
    pub floor: Nat,
    pub ceil: Nat,
}

fn ln2_bounds(prec: u32) -> (Nat, Nat) {
    let scale = Nat::one() << prec;
    let (mut lo, mut hi) = (Nat::zero(), Nat::one());
    for k in 1..=prec as u64 {
        let den = Nat::from(k) << k;
        let (q, r) = num_integer::Integer::div_rem(&scale, &den);
        if !r.is_zero() {
            hi += 1u32;
        }
        lo += &q;
        hi += q;
    }
    (lo, hi)
}

/// exp(y / 2^prec) · 2^prec, rounded down.
fn exp_lower(y: &Nat, prec: u32) -> Nat {
    let mut term = Nat::one() << prec;
    let mut sum = term.clone();
    for k in 1u64.. {
        term = (&term * y) / (Nat::from(k) << prec);
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    sum
}

/// exp(y / 2^prec) · 2^prec, rounded up; requires y < 2^prec.
fn exp_upper(y: &Nat, prec: u32) -> Nat {
    let mut term = Nat::one() << prec;
    let mut sum = term.clone();
    for k in 1u64.. {
        let den = Nat::from(k) << prec;
        let num = &term * y;
        term = (&num + &den - 1u32) / den;
        sum += &term;
        if term <= Nat::one() {
            // The remaining tail is at most the last term when y/(k+1) <= 1/2.
            sum += &term;
            break;
        }
    }
    sum
}

/// Brackets `factor · 2^{√radicand}`.
pub fn scaled_pow2_sqrt(radicand: u64, factor: &Nat) -> ScaledBound {
    let root = radicand.sqrt();
    if factor.is_zero() || root * root == radicand {
        let exact = factor << root;
        return ScaledBound { floor: exact.clone(), ceil: exact };
    }
    let mut prec = 128u32;
    loop {
        let scale_root = Nat::from(root) << prec;
        let root_lo = (Nat::from(radicand) << (2 * prec)).sqrt();
        let root_hi = &root_lo + 1u32;
        let frac_lo = &root_lo - &scale_root;
        let frac_hi = &root_hi - &scale_root;
        let (ln2_lo, ln2_hi) = ln2_bounds(prec);
        let y_lo = (&frac_lo * &ln2_lo) >> prec;
        let y_hi = ((&frac_hi * &ln2_hi) >> prec) + 1u32;
        let low = (factor * exp_lower(&y_lo, prec)) << root;
        let high = (factor * exp_upper(&y_hi, prec)) << root;
        let (fl, fh) = (&low >> prec, &high >> prec);
        if fl == fh {
            return ScaledBound { ceil: &fl + 1u32, floor: fl };
        }
        prec *= 2;
    }
}
