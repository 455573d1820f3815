//! Cycle structures of bijective linear maps.
//!
//! The functional graph of a bijection is a disjoint union of directed
//! cycles, so up to isomorphism it is the multiset of its cycle lengths
//! ([`CycleMultiset`]). This module computes polynomial orders, the cycle
//! structure of a single primary block, tensor products of cycle structures
//! and the unique factorization of products of the form
//! `(C_1 + a_1 C_{k_1}) ⊗ ... ⊗ (C_1 + a_s C_{k_s})`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ffield::{FieldCtx, Poly};
use crate::numthy::{factor_q_pow_minus_one, Nat};

/// Cycle length → multiplicity. Zero multiplicities are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CycleMultiset {
    entries: BTreeMap<Nat, Nat>,
}

impl CycleMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    /// The single fixed point `C_1`, identity for [`tensor`].
    pub fn unit() -> Self {
        Self::cycles(Nat::one(), Nat::one())
    }

    /// `count` disjoint cycles of length `len`.
    pub fn cycles(len: Nat, count: Nat) -> Self {
        let mut m = Self::new();
        m.add(len, count);
        m
    }

    pub fn from_pairs<L: Into<Nat>, C: Into<Nat>>(pairs: impl IntoIterator<Item = (L, C)>) -> Self {
        let mut m = Self::new();
        for (l, c) in pairs {
            m.add(l.into(), c.into());
        }
        m
    }

    /// Adds `count` cycles of length `len`. Length zero is rejected by panic.
    pub fn add(&mut self, len: Nat, count: Nat) {
        assert!(!len.is_zero(), "cycle length must be positive");
        if count.is_zero() {
            return;
        }
        *self.entries.entry(len).or_default() += count;
    }

    pub fn count(&self, len: &Nat) -> Nat {
        self.entries.get(len).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Nat, &Nat)> {
        self.entries.iter()
    }

    pub fn lengths(&self) -> impl Iterator<Item = &Nat> {
        self.entries.keys()
    }

    /// Σ length · multiplicity.
    pub fn total_vertices(&self) -> Nat {
        self.entries.iter().map(|(l, c)| l * c).sum()
    }

    pub fn total_cycles(&self) -> Nat {
        self.entries.values().sum()
    }

    /// Parses `len:count` pairs separated by commas, e.g. `"1:2,2:1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (l, c) =
                item.split_once(':').ok_or_else(|| Error::Parse(format!("expected len:count, got {item:?}")))?;
            let parse = |s: &str| s.trim().parse::<Nat>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            let (l, c) = (parse(l)?, parse(c)?);
            if l.is_zero() {
                return Err(Error::Parse("cycle length 0".into()));
            }
            m.add(l, c);
        }
        Ok(m)
    }
}

impl fmt::Display for CycleMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(l, c)| format!("{l}:{c}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for CycleMultiset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self.entries.iter().map(|(l, c)| [l.to_string(), c.to_string()]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CycleMultiset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[String; 2]> = Vec::deserialize(deserializer)?;
        let mut m = CycleMultiset::new();
        for [l, c] in pairs {
            let l: Nat = l.parse().map_err(D::Error::custom)?;
            let c: Nat = c.parse().map_err(D::Error::custom)?;
            if l.is_zero() || c.is_zero() {
                return Err(D::Error::custom("cycle lengths and multiplicities must be positive"));
            }
            m.add(l, c);
        }
        Ok(m)
    }
}

/// One primary block: minimal polynomial `f^s` with `deg f = t` and
/// `ord f = m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockSpec {
    pub t: u32,
    pub m: Nat,
    pub s: u32,
}

/// Order of an irreducible `f` with `f(0) != 0`: the order of `x` in
/// `F_q[x]/(f)`, found by stripping prime factors from `q^deg(f) - 1`.
pub fn poly_order(f: &Poly, ctx: &FieldCtx) -> Result<Nat> {
    let t = match f.degree() {
        None | Some(0) => return Err(Error::InvalidArgument("order needs a polynomial of degree >= 1".into())),
        Some(t) => t as u32,
    };
    if f.coeff(0).is_zero() {
        return Err(Error::NotCoprimeToX);
    }
    let q = ctx.order();
    let group = factor_q_pow_minus_one(&q, t)?;
    let mut e = group.value();
    let x = Poly::x();
    if ctx.poly_mod_pow(&x, &e, f)? != Poly::one() {
        return Err(Error::InvalidArgument(format!("{} is not irreducible", f.to_text())));
    }
    for (r, k) in group.factors() {
        for _ in 0..*k {
            let candidate = &e / r;
            if ctx.poly_mod_pow(&x, &candidate, f)? == Poly::one() {
                e = candidate;
            } else {
                break;
            }
        }
    }
    Ok(e)
}

/// `ord(f^s) = m · p^c` where `p^c` is the least power of `p` with `p^c >= s`.
pub fn power_order(m: &Nat, s: u32, p: u32) -> Nat {
    let mut pc = Nat::one();
    while pc < Nat::from(s) {
        pc *= p;
    }
    m * pc
}

/// Cycle structure of a primary block: one fixed point (the zero vector),
/// plus `(q^{ti} - q^{t(i-1)}) / ord(f^i)` cycles of length `ord(f^i)` for
/// each `1 <= i <= s`.
pub fn elspas_structure(block: &BlockSpec, ctx: &FieldCtx) -> Result<CycleMultiset> {
    elspas_structure_for(&ctx.order(), ctx.p(), block)
}

pub(crate) fn elspas_structure_for(q: &Nat, p: u32, block: &BlockSpec) -> Result<CycleMultiset> {
    if block.t == 0 || block.s == 0 || block.m.is_zero() {
        return Err(Error::InvalidArgument(format!("invalid block {block:?}")));
    }
    let qt = q.pow(block.t);
    let mut out = CycleMultiset::unit();
    let mut prev = Nat::one();
    for i in 1..=block.s {
        let cur = &prev * &qt;
        let len = power_order(&block.m, i, p);
        let (count, rem) = (&cur - &prev).div_rem(&len);
        if !rem.is_zero() {
            return Err(Error::NonIntegralCount(format!("({cur} - {prev}) / {len} for block {block:?}")));
        }
        out.add(len, count);
        prev = cur;
    }
    Ok(out)
}

/// Tensor product, extended bilinearly from `C_m ⊗ C_n = gcd(m,n) C_{lcm(m,n)}`.
pub fn tensor(a: &CycleMultiset, b: &CycleMultiset) -> CycleMultiset {
    let mut out = CycleMultiset::new();
    for (m, cm) in a.iter() {
        for (n, cn) in b.iter() {
            let (g, l) = (m.gcd(n), m.lcm(n));
            out.add(l, cm * cn * g);
        }
    }
    out
}

/// A product `⊗ (C_1 + α_i C_{k_i})` with strictly increasing `k_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ProductForm {
    factors: Vec<(Nat, Nat)>,
}

impl ProductForm {
    pub fn new(factors: Vec<(Nat, Nat)>) -> Result<Self> {
        for (i, (k, alpha)) in factors.iter().enumerate() {
            if k.is_zero() || alpha.is_zero() {
                return Err(Error::InvalidArgument("k and alpha must be positive".into()));
            }
            if i > 0 && factors[i - 1].0 >= *k {
                return Err(Error::InvalidArgument("k must be strictly increasing".into()));
            }
        }
        Ok(ProductForm { factors })
    }

    pub fn from_u64(factors: &[(u64, u64)]) -> Result<Self> {
        Self::new(factors.iter().map(|&(k, a)| (Nat::from(k), Nat::from(a))).collect())
    }

    pub fn factors(&self) -> &[(Nat, Nat)] {
        &self.factors
    }
}

fn unit_plus(k: &Nat, alpha: &Nat) -> CycleMultiset {
    let mut f = CycleMultiset::unit();
    f.add(k.clone(), alpha.clone());
    f
}

pub fn product_form_expand(pf: &ProductForm) -> CycleMultiset {
    pf.factors.iter().fold(CycleMultiset::unit(), |acc, (k, alpha)| tensor(&acc, &unit_plus(k, alpha)))
}

/// Recovers the unique [`ProductForm`] expanding to `g`, peeling one factor
/// at a time from the smallest cycle length whose count is not yet matched.
pub fn factor_product(g: &CycleMultiset) -> Result<ProductForm> {
    let target_vertices = g.total_vertices();
    let mut partial = CycleMultiset::unit();
    let mut factors: Vec<(Nat, Nat)> = Vec::new();
    while partial != *g {
        if partial.total_vertices() >= target_vertices {
            return Err(Error::NotAProduct(format!("partial product overshoots {g}")));
        }
        let k = g
            .iter()
            .find(|(len, count)| **count > partial.count(len))
            .map(|(len, _)| len.clone())
            .ok_or_else(|| Error::NotAProduct(format!("no unmatched cycle length in {g}")))?;
        if factors.last().is_some_and(|(prev, _)| *prev >= k) {
            return Err(Error::NotAProduct(format!("cycle length {k} does not increase")));
        }
        let excess = g.count(&k) - partial.count(&k);
        let weight: Nat = partial.iter().filter(|(e, _)| k.is_multiple_of(e)).map(|(e, c)| e * c).sum();
        let (alpha, rem) = excess.div_rem(&weight);
        if !rem.is_zero() {
            return Err(Error::NotAProduct(format!("alpha = {excess}/{weight} at k = {k}")));
        }
        partial = tensor(&partial, &unit_plus(&k, &alpha));
        factors.push((k, alpha));
    }
    Ok(ProductForm { factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(pairs: &[(u64, u64)]) -> CycleMultiset {
        CycleMultiset::from_pairs(pairs.iter().copied())
    }

    fn nat(n: u64) -> Nat {
        Nat::from(n)
    }

    /// Cycle lengths of the explicit product permutation on pairs of
    /// vertices of two disjoint cycle unions.
    fn brute_tensor(a: &[u64], b: &[u64]) -> CycleMultiset {
        let perm = |lens: &[u64]| {
            let mut succ = Vec::new();
            for &l in lens {
                let base = succ.len() as u64;
                succ.extend((0..l).map(|i| base + (i + 1) % l));
            }
            succ
        };
        let (pa, pb) = (perm(a), perm(b));
        let nb = pb.len() as u64;
        let total = pa.len() as u64 * nb;
        let mut seen = vec![false; total as usize];
        let mut out = CycleMultiset::new();
        for start in 0..total {
            if seen[start as usize] {
                continue;
            }
            let (mut v, mut len) = (start, 0u64);
            while !seen[v as usize] {
                seen[v as usize] = true;
                v = pa[(v / nb) as usize] * nb + pb[(v % nb) as usize];
                len += 1;
            }
            out.add(nat(len), nat(1));
        }
        out
    }

    #[test]
    fn poly_order_examples() {
        let f2 = FieldCtx::new(2, 1).unwrap();
        let p = |s| Poly::parse(&f2, s).unwrap();
        assert_eq!(poly_order(&p("1,1"), &f2).unwrap(), nat(1));
        assert_eq!(poly_order(&p("1,1,1"), &f2).unwrap(), nat(3));
        assert_eq!(poly_order(&p("1,1,0,1"), &f2).unwrap(), nat(7));
        assert_eq!(poly_order(&p("0,1"), &f2), Err(Error::NotCoprimeToX));
        assert!(poly_order(&p("1,0,1"), &f2).is_err());
        let f3 = FieldCtx::new(3, 1).unwrap();
        // x^2 + 1 over F_3 is irreducible with x^4 = 1 and x^2 = -1
        assert_eq!(poly_order(&Poly::parse(&f3, "1,0,1").unwrap(), &f3).unwrap(), nat(4));
    }

    #[test]
    fn poly_order_agrees_with_divisibility_search() {
        for q in [2u64, 3, 4] {
            let ctx = FieldCtx::for_order(q).unwrap();
            for t in 1..=3 {
                for f in ctx.irreducibles(t).unwrap() {
                    if f.coeff(0).is_zero() {
                        continue;
                    }
                    // least e with f | x^e - 1, by direct division
                    let brute = (1u64..)
                        .find(|&e| {
                            let mut xe = vec![crate::ffield::FieldElement::ZERO; e as usize + 1];
                            xe[e as usize] = crate::ffield::FieldElement::ONE;
                            xe[0] = ctx.neg(crate::ffield::FieldElement::ONE);
                            ctx.poly_rem(&Poly::new(xe), &f).unwrap().is_zero()
                        })
                        .unwrap();
                    assert_eq!(poly_order(&f, &ctx).unwrap(), nat(brute));
                }
            }
        }
    }

    #[test]
    fn power_order_examples() {
        assert_eq!(power_order(&nat(3), 1, 2), nat(3));
        assert_eq!(power_order(&nat(1), 2, 2), nat(2));
        assert_eq!(power_order(&nat(1), 3, 2), nat(4));
        assert_eq!(power_order(&nat(2), 4, 3), nat(18));
    }

    #[test]
    fn block_structure_examples() {
        let f2 = FieldCtx::new(2, 1).unwrap();
        let b = |t, m, s| BlockSpec { t, m: nat(m), s };
        assert_eq!(elspas_structure(&b(2, 3, 1), &f2).unwrap(), cm(&[(1, 1), (3, 1)]));
        assert_eq!(elspas_structure(&b(1, 1, 2), &f2).unwrap(), cm(&[(1, 2), (2, 1)]));
        assert_eq!(elspas_structure(&b(3, 7, 1), &f2).unwrap(), cm(&[(1, 1), (7, 1)]));
        assert!(matches!(elspas_structure(&b(2, 5, 1), &f2), Err(Error::NonIntegralCount(_))));
    }

    #[test]
    fn block_structure_total_vertices() {
        for q in [2u64, 3, 4, 5] {
            let ctx = FieldCtx::for_order(q).unwrap();
            for t in 1..=3u32 {
                for e in crate::numthy::exact_order_divisors(&nat(q), t).unwrap() {
                    for s in 1..=4u32 {
                        if nat(q).pow(t * s) > nat(1 << 20) {
                            continue;
                        }
                        let g = elspas_structure(&BlockSpec { t, m: e.clone(), s }, &ctx).unwrap();
                        assert_eq!(g.total_vertices(), nat(q).pow(t * s));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(tensor(&cm(&[(2, 1)]), &cm(&[(3, 1)])), cm(&[(6, 1)]));
        assert_eq!(tensor(&cm(&[(2, 1)]), &cm(&[(2, 1)])), cm(&[(2, 2)]));
        assert_eq!(tensor(&cm(&[(1, 2), (2, 1)]), &cm(&[(1, 1), (3, 1)])), cm(&[(1, 2), (2, 1), (3, 2), (6, 1)]));
        assert_eq!(brute_tensor(&[1, 1, 2], &[1, 3]), cm(&[(1, 2), (2, 1), (3, 2), (6, 1)]));
    }

    #[test]
    fn tensor_matches_explicit_product_for_small_cycles() {
        for m in 1..=12u64 {
            for n in 1..=12u64 {
                assert_eq!(tensor(&cm(&[(m, 1)]), &cm(&[(n, 1)])), brute_tensor(&[m], &[n]));
            }
        }
    }

    #[test]
    fn product_form_examples() {
        let pf = |f: &[(u64, u64)]| ProductForm::from_u64(f).unwrap();
        assert_eq!(product_form_expand(&pf(&[(3, 1)])), cm(&[(1, 1), (3, 1)]));
        assert_eq!(product_form_expand(&pf(&[(1, 1)])), cm(&[(1, 2)]));
        assert_eq!(product_form_expand(&pf(&[(2, 1), (3, 1)])), cm(&[(1, 1), (2, 1), (3, 1), (6, 1)]));
        assert_eq!(factor_product(&cm(&[(1, 1), (3, 1)])).unwrap(), pf(&[(3, 1)]));
        assert_eq!(factor_product(&cm(&[(1, 1), (2, 1), (3, 1), (6, 1)])).unwrap(), pf(&[(2, 1), (3, 1)]));
        assert_eq!(factor_product(&CycleMultiset::unit()).unwrap(), pf(&[]));
        assert!(matches!(factor_product(&cm(&[(1, 2), (2, 1)])), Err(Error::NotAProduct(_))));
        assert!(matches!(factor_product(&cm(&[(2, 1)])), Err(Error::NotAProduct(_))));
        assert!(ProductForm::from_u64(&[(3, 1), (2, 1)]).is_err());
        assert!(ProductForm::from_u64(&[(3, 0)]).is_err());
    }

    #[test]
    fn repeated_factor_closed_form() {
        // N copies of (C_1 + (q^m - 1)/a C_a) with m = ord_a(q) collapse to
        // C_1 + (q^{N m} - 1)/a C_a.
        for (a, m) in [(3u64, 2u32), (5, 4), (7, 3)] {
            let factor = cm(&[(1, 1), (a, (2u64.pow(m) - 1) / a)]);
            let mut acc = CycleMultiset::unit();
            for n in 1..=4u32 {
                acc = tensor(&acc, &factor);
                assert_eq!(acc, cm(&[(1, 1), (a, (2u64.pow(n * m) - 1) / a)]));
            }
        }
    }

    #[test]
    fn parse_and_json_forms() {
        let g = CycleMultiset::parse("3:1, 1:2").unwrap();
        assert_eq!(g, cm(&[(1, 2), (3, 1)]));
        assert_eq!(g.to_string(), "1:2,3:1");
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"[["1","2"],["3","1"]]"#);
        let back: CycleMultiset = serde_json::from_str(r#"[["3","1"],["1","2"]]"#).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<CycleMultiset>(r#"[["0","1"]]"#).is_err());
        assert!(CycleMultiset::parse("1-2").is_err());
    }

    fn arb_multiset() -> impl Strategy<Value = CycleMultiset> {
        proptest::collection::vec((1u64..20, 1u64..4), 1..5).prop_map(|v| cm(&v))
    }

    fn arb_product_form() -> impl Strategy<Value = ProductForm> {
        proptest::collection::btree_map(1u64..=12, 1u64..=5, 0..=4)
            .prop_map(|m| ProductForm::from_u64(&m.into_iter().collect::<Vec<_>>()).unwrap())
    }

    proptest! {
        #[test]
        fn tensor_is_commutative_associative_with_unit(a in arb_multiset(), b in arb_multiset(), c in arb_multiset()) {
            prop_assert_eq!(tensor(&a, &b), tensor(&b, &a));
            prop_assert_eq!(tensor(&tensor(&a, &b), &c), tensor(&a, &tensor(&b, &c)));
            prop_assert_eq!(tensor(&a, &CycleMultiset::unit()), a.clone());
            prop_assert_eq!(tensor(&a, &b).total_vertices(), a.total_vertices() * b.total_vertices());
        }

        #[test]
        fn factor_product_inverts_expand(pf in arb_product_form()) {
            prop_assert_eq!(factor_product(&product_form_expand(&pf)).unwrap(), pf);
        }
    }
}
