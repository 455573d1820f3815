//! Arithmetic over F_q, univariate polynomials over F_q and square matrices
//! over F_q.
//!
//! An element of F_q (q = p^d) is stored as its index `c_0 + c_1 p + ... +
//! c_{d-1} p^{d-1}`, where `(c_0, ..., c_{d-1})` are its coordinates in the
//! power basis of the field modulus. For d = 1 the index is the residue
//! itself. Small fields (q <= 256) carry precomputed addition and
//! multiplication tables.
//!
//! Polynomials and matrices are plain values; every operation that needs
//! field arithmetic is a method on [`FieldCtx`].

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{too_large, Error, Result};

/// Largest field order accepted by [`FieldCtx::new`].
pub const MAX_FIELD_ORDER: u64 = 1 << 20;
/// Largest extension degree accepted by [`FieldCtx::new`].
pub const MAX_EXTENSION_DEGREE: u32 = 8;

const TABLE_LIMIT: u32 = 256;

/// An element of F_q, identified by its index in `0..q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
}

/// An immutable description of F_q together with its arithmetic.
pub struct FieldCtx {
    p: u32,
    d: u32,
    q: u32,
    /// Monic modulus over F_p, low degree first, length d + 1.
    modulus: Vec<u32>,
    tables: Option<Tables>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx").field("p", &self.p).field("d", &self.d).field("modulus", &self.modulus).finish()
    }
}

pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

impl FieldCtx {
    /// Builds F_{p^d} with the smallest monic irreducible of degree d as
    /// modulus.
    pub fn new(p: u32, d: u32) -> Result<Self> {
        if !is_prime_u64(p as u64) {
            return Err(Error::NonPrime(p as u64));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("extension degree must be positive".into()));
        }
        if d > MAX_EXTENSION_DEGREE {
            return Err(too_large(format!("extension degree {d} > {MAX_EXTENSION_DEGREE}")));
        }
        let q = (p as u64).checked_pow(d).filter(|&q| q <= MAX_FIELD_ORDER);
        let Some(q) = q else {
            return Err(too_large(format!("{p}^{d} > 2^20")));
        };
        let prime = Self::prime_field(p);
        if d == 1 {
            return Ok(prime);
        }
        let modulus = prime.first_irreducible(d as usize).expect("an irreducible polynomial exists in every degree");
        let modulus = modulus.coeffs.iter().map(|c| c.0).collect();
        let mut ctx = FieldCtx { p, d, q: q as u32, modulus, tables: None };
        ctx.build_tables();
        Ok(ctx)
    }

    /// Builds F_q for a prime power q.
    pub fn for_order(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("field order {q} < 2")));
        }
        if q > MAX_FIELD_ORDER {
            return Err(too_large(format!("field order {q} > 2^20")));
        }
        let p = (2..=q).find(|k| q.is_multiple_of(*k)).unwrap();
        let mut rest = q;
        let mut d = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            d += 1;
        }
        if rest != 1 {
            return Err(Error::InvalidArgument(format!("{q} is not a prime power")));
        }
        Self::new(p as u32, d)
    }

    fn prime_field(p: u32) -> Self {
        let mut ctx = FieldCtx { p, d: 1, q: p, modulus: vec![0, 1], tables: None };
        ctx.build_tables();
        ctx
    }

    fn build_tables(&mut self) {
        if self.q > TABLE_LIMIT {
            return;
        }
        let q = self.q as usize;
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        let mut neg = vec![0; q];
        for a in 0..q {
            neg[a] = self.raw_neg(a as u32);
            for b in 0..q {
                add[a * q + b] = self.raw_add(a as u32, b as u32);
                mul[a * q + b] = self.raw_mul(a as u32, b as u32);
            }
        }
        let mut inv = vec![0; q];
        for a in 1..q {
            inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as u32;
        }
        self.tables = Some(Tables { add, mul, neg, inv });
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn order(&self) -> BigUint {
        BigUint::from(self.q)
    }

    /// The modulus over F_p, low degree first. For prime fields this is `x`.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn element(&self, index: u32) -> Result<FieldElement> {
        if index < self.q {
            Ok(FieldElement(index))
        } else {
            Err(Error::InvalidArgument(format!("{index} is not an element of F_{}", self.q)))
        }
    }

    pub fn from_coords(&self, coords: &[u32]) -> Result<FieldElement> {
        if coords.len() != self.d as usize {
            return Err(Error::DimensionMismatch { expected: self.d as usize, found: coords.len() });
        }
        let mut idx = 0u32;
        for &c in coords.iter().rev() {
            if c >= self.p {
                return Err(Error::InvalidArgument(format!("coordinate {c} not below {}", self.p)));
            }
            idx = idx * self.p + c;
        }
        Ok(FieldElement(idx))
    }

    pub fn coords(&self, a: FieldElement) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.d as usize);
        let mut x = a.0;
        for _ in 0..self.d {
            out.push(x % self.p);
            x /= self.p;
        }
        out
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    fn raw_add(&self, a: u32, b: u32) -> u32 {
        if self.d == 1 {
            return ((a as u64 + b as u64) % self.p as u64) as u32;
        }
        let (p, mut a, mut b) = (self.p, a, b);
        let (mut out, mut place) = (0u32, 1u32);
        for _ in 0..self.d {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place = place.wrapping_mul(p);
        }
        out
    }

    fn raw_neg(&self, a: u32) -> u32 {
        if self.d == 1 {
            return (self.p - a % self.p) % self.p;
        }
        let coords: Vec<u32> = self.coords(FieldElement(a)).iter().map(|&c| (self.p - c) % self.p).collect();
        self.from_coords(&coords).unwrap().0
    }

    fn raw_mul(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u64;
        if self.d == 1 {
            return ((a as u64 * b as u64) % p) as u32;
        }
        let d = self.d as usize;
        let ca = self.coords(FieldElement(a));
        let cb = self.coords(FieldElement(b));
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &x) in ca.iter().enumerate() {
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p;
            }
        }
        for k in (d..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for j in 0..d {
                let sub = c * self.modulus[j] as u64 % p;
                prod[k - d + j] = (prod[k - d + j] + p - sub) % p;
            }
        }
        let coords: Vec<u32> = prod[..d].iter().map(|&c| c as u32).collect();
        self.from_coords(&coords).unwrap().0
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => FieldElement(t.add[(a.0 * self.q + b.0) as usize]),
            None => FieldElement(self.raw_add(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => FieldElement(t.neg[a.0 as usize]),
            None => FieldElement(self.raw_neg(a.0)),
        }
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => FieldElement(t.mul[(a.0 * self.q + b.0) as usize]),
            None => FieldElement(self.raw_mul(a.0, b.0)),
        }
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let (mut base, mut acc) = (a, FieldElement::ONE);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return None;
        }
        Some(match &self.tables {
            Some(t) => FieldElement(t.inv[a.0 as usize]),
            None => self.pow(a, self.q as u64 - 2),
        })
    }
}

/// A polynomial over F_q, coefficients low degree first with no trailing
/// zeros. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![FieldElement::ONE] }
    }

    pub fn x() -> Self {
        Poly { coeffs: vec![FieldElement::ZERO, FieldElement::ONE] }
    }

    /// Builds a polynomial from element indices, low degree first.
    pub fn from_indices(ctx: &FieldCtx, indices: &[u32]) -> Result<Self> {
        let coeffs = indices.iter().map(|&i| ctx.element(i)).collect::<Result<Vec<_>>>()?;
        Ok(Poly::new(coeffs))
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or_default()
    }

    pub fn leading(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == Some(FieldElement::ONE)
    }

    /// Parses comma-separated element indices, low degree first; `"1,1,1"`
    /// is x^2 + x + 1.
    pub fn parse(ctx: &FieldCtx, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Poly::zero());
        }
        let indices = text
            .split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Poly::from_indices(ctx, &indices)
    }

    pub fn to_text(&self) -> String {
        self.coeffs.iter().map(|c| c.0.to_string()).collect::<Vec<_>>().join(",")
    }
}

/// Degree first, then coefficients compared from the top down. Within one
/// degree this is the numeric order of the base-q index with the constant
/// term least significant.
impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coeffs.len().cmp(&other.coeffs.len()).then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Largest `q^t` accepted by [`FieldCtx::irreducibles`].
pub const IRREDUCIBLES_LIMIT: u64 = 1 << 24;

impl FieldCtx {
    pub fn poly_add(&self, a: &Poly, b: &Poly) -> Poly {
        let len = a.coeffs.len().max(b.coeffs.len());
        Poly::new((0..len).map(|i| self.add(a.coeff(i), b.coeff(i))).collect())
    }

    pub fn poly_sub(&self, a: &Poly, b: &Poly) -> Poly {
        let len = a.coeffs.len().max(b.coeffs.len());
        Poly::new((0..len).map(|i| self.sub(a.coeff(i), b.coeff(i))).collect())
    }

    pub fn poly_mul(&self, a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![FieldElement::ZERO; a.coeffs.len() + b.coeffs.len() - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                out[i + j] = self.add(out[i + j], self.mul(x, y));
            }
        }
        Poly::new(out)
    }

    pub fn poly_pow(&self, f: &Poly, e: u32) -> Poly {
        (0..e).fold(Poly::one(), |acc, _| self.poly_mul(&acc, f))
    }

    /// Quotient and remainder of `a` by the nonzero polynomial `b`.
    pub fn poly_divrem(&self, a: &Poly, b: &Poly) -> Result<(Poly, Poly)> {
        let db = b.degree().ok_or(Error::ZeroModulus)?;
        let lead_inv = self.inv(b.leading().unwrap()).unwrap();
        let mut rem = a.coeffs.clone();
        if rem.len() <= db {
            return Ok((Poly::zero(), a.clone()));
        }
        let mut quot = vec![FieldElement::ZERO; rem.len() - db];
        for k in (db..rem.len()).rev() {
            let c = self.mul(rem[k], lead_inv);
            if c.is_zero() {
                continue;
            }
            quot[k - db] = c;
            for (j, &bj) in b.coeffs.iter().enumerate() {
                rem[k - db + j] = self.sub(rem[k - db + j], self.mul(c, bj));
            }
        }
        rem.truncate(db);
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    pub fn poly_rem(&self, a: &Poly, b: &Poly) -> Result<Poly> {
        Ok(self.poly_divrem(a, b)?.1)
    }

    /// `base^e mod modulus` by square-and-multiply.
    pub fn poly_mod_pow(&self, base: &Poly, e: &BigUint, modulus: &Poly) -> Result<Poly> {
        match modulus.degree() {
            None | Some(0) => return Err(Error::ZeroModulus),
            _ => {}
        }
        let mut acc = self.poly_rem(&Poly::one(), modulus)?;
        let base = self.poly_rem(base, modulus)?;
        for i in (0..e.bits()).rev() {
            acc = self.poly_rem(&self.poly_mul(&acc, &acc), modulus)?;
            if e.bit(i) {
                acc = self.poly_rem(&self.poly_mul(&acc, &base), modulus)?;
            }
        }
        Ok(acc)
    }

    pub fn poly_eval(&self, f: &Poly, x: FieldElement) -> FieldElement {
        f.coeffs.iter().rev().fold(FieldElement::ZERO, |acc, &c| self.add(self.mul(acc, x), c))
    }

    /// All monic polynomials of the given degree, in [`Poly`] order.
    pub fn monic_polys(&self, degree: usize) -> impl Iterator<Item = Poly> + '_ {
        let q = self.q as u64;
        let count = q.pow(degree as u32);
        (0..count).map(move |mut idx| {
            let mut coeffs = Vec::with_capacity(degree + 1);
            for _ in 0..degree {
                coeffs.push(FieldElement((idx % q) as u32));
                idx /= q;
            }
            coeffs.push(FieldElement::ONE);
            Poly { coeffs }
        })
    }

    /// Trial division by every monic polynomial of degree `1..=deg/2`.
    pub fn is_irreducible(&self, f: &Poly) -> bool {
        let Some(deg) = f.degree() else { return false };
        if deg == 0 {
            return false;
        }
        for k in 1..=deg / 2 {
            for g in self.monic_polys(k) {
                if self.poly_rem(f, &g).unwrap().is_zero() {
                    return false;
                }
            }
        }
        true
    }

    fn first_irreducible(&self, degree: usize) -> Option<Poly> {
        self.monic_polys(degree).find(|f| self.is_irreducible(f))
    }

    /// Every monic irreducible polynomial of degree `t`, sorted.
    pub fn irreducibles(&self, t: usize) -> Result<Vec<Poly>> {
        if t == 0 {
            return Err(Error::InvalidArgument("degree must be positive".into()));
        }
        let within = t <= 6 && (self.q as u64).checked_pow(t as u32).is_some_and(|v| v <= IRREDUCIBLES_LIMIT);
        if !within {
            return Err(too_large(format!("irreducibles of degree {t} over F_{}", self.q)));
        }
        Ok(self.monic_polys(t).filter(|f| self.is_irreducible(f)).collect())
    }
}

/// A square matrix over F_q, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    entries: Vec<FieldElement>,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Matrix { n, entries: vec![FieldElement::ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.entries[i * n + i] = FieldElement::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            entries.extend(row);
        }
        Ok(Matrix { n, entries })
    }

    /// Row-major entries as element indices.
    pub fn from_indices(ctx: &FieldCtx, n: usize, indices: &[u32]) -> Result<Self> {
        if indices.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: indices.len() });
        }
        let entries = indices.iter().map(|&i| ctx.element(i)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix { n, entries })
    }

    /// Decodes a row-major base-q counter: entry `k = r * n + c` is digit `k`
    /// of `index`, least significant first.
    pub fn from_counter(ctx: &FieldCtx, n: usize, mut index: u64) -> Self {
        let q = ctx.q() as u64;
        let entries = (0..n * n)
            .map(|_| {
                let e = FieldElement((index % q) as u32);
                index /= q;
                e
            })
            .collect();
        Matrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.entries[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.entries[r * self.n + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<FieldElement>> {
        (0..self.n).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<FieldElement> {
        (0..self.n).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Block-diagonal sum `a ⊕ b`.
    pub fn direct_sum(a: &Matrix, b: &Matrix) -> Matrix {
        let n = a.n + b.n;
        let mut m = Matrix::zero(n);
        for r in 0..a.n {
            for c in 0..a.n {
                m.set(r, c, a.get(r, c));
            }
        }
        for r in 0..b.n {
            for c in 0..b.n {
                m.set(a.n + r, a.n + c, b.get(r, c));
            }
        }
        m
    }

    /// Parses semicolon-separated rows of comma-separated element indices.
    pub fn parse(ctx: &FieldCtx, text: &str) -> Result<Self> {
        let rows = text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|s| {
                        let idx = s.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
                        ctx.element(idx)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(rows)
    }

    pub fn to_text(&self) -> String {
        (0..self.n)
            .map(|r| self.row(r).iter().map(|e| e.0.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Reduced row echelon form of a list of row vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Echelon {
    /// Nonzero rows, each with a leading one in its pivot column.
    pub rows: Vec<Vec<FieldElement>>,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Coordinates of `v` with respect to `rows`, if `v` lies in their span.
    pub fn coordinates(&self, ctx: &FieldCtx, v: &[FieldElement]) -> Option<Vec<FieldElement>> {
        let coords: Vec<FieldElement> = self.pivots.iter().map(|&p| v[p]).collect();
        let mut rebuilt = vec![FieldElement::ZERO; v.len()];
        for (c, row) in coords.iter().zip(&self.rows) {
            for (acc, &x) in rebuilt.iter_mut().zip(row) {
                *acc = ctx.add(*acc, ctx.mul(*c, x));
            }
        }
        (rebuilt == v).then_some(coords)
    }
}

impl FieldCtx {
    pub fn mat_mul(&self, a: &Matrix, b: &Matrix) -> Result<Matrix> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch { expected: a.n, found: b.n });
        }
        let n = a.n;
        let mut out = Matrix::zero(n);
        for r in 0..n {
            for k in 0..n {
                let x = a.get(r, k);
                if x.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let idx = r * n + c;
                    out.entries[idx] = self.add(out.entries[idx], self.mul(x, b.get(k, c)));
                }
            }
        }
        Ok(out)
    }

    pub fn mat_pow(&self, a: &Matrix, mut e: u64) -> Matrix {
        let mut base = a.clone();
        let mut acc = Matrix::identity(a.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mat_mul(&acc, &base).unwrap();
            }
            e >>= 1;
            if e > 0 {
                base = self.mat_mul(&base, &base).unwrap();
            }
        }
        acc
    }

    /// `a · v` for a column vector `v`.
    pub fn apply(&self, a: &Matrix, v: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if v.len() != a.n {
            return Err(Error::DimensionMismatch { expected: a.n, found: v.len() });
        }
        let mut out = vec![FieldElement::ZERO; a.n];
        self.apply_into(a, v, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn apply_into(&self, a: &Matrix, v: &[FieldElement], out: &mut [FieldElement]) {
        let n = a.n;
        for (r, o) in out.iter_mut().enumerate() {
            let row = &a.entries[r * n..(r + 1) * n];
            *o = row.iter().zip(v).fold(FieldElement::ZERO, |acc, (&x, &y)| self.add(acc, self.mul(x, y)));
        }
    }

    pub fn rref(&self, mut rows: Vec<Vec<FieldElement>>) -> Echelon {
        let width = rows.first().map_or(0, |r| r.len());
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..width {
            let Some(found) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, found);
            let inv = self.inv(rows[rank][col]).unwrap();
            for x in rows[rank].iter_mut() {
                *x = self.mul(*x, inv);
            }
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == rank || row[col].is_zero() {
                    continue;
                }
                let factor = row[col];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = self.sub(*x, self.mul(factor, y));
                }
            }
            pivots.push(col);
            rank += 1;
        }
        rows.truncate(rank);
        Echelon { rows, pivots }
    }

    pub fn rank(&self, a: &Matrix) -> usize {
        self.rref(a.rows()).rank()
    }

    pub fn kernel_dim(&self, a: &Matrix) -> usize {
        a.n - self.rank(a)
    }

    pub fn is_invertible(&self, a: &Matrix) -> bool {
        self.rank(a) == a.n
    }

    /// Basis of the column space, in reduced echelon form.
    pub fn image_basis(&self, a: &Matrix) -> Echelon {
        self.rref((0..a.n).map(|c| a.column(c)).collect())
    }

    /// Basis of the null space, in reduced echelon form.
    pub fn kernel_basis(&self, a: &Matrix) -> Echelon {
        let n = a.n;
        let ech = self.rref(a.rows());
        let free: Vec<usize> = (0..n).filter(|c| !ech.pivots.contains(c)).collect();
        let vectors = free
            .iter()
            .map(|&f| {
                let mut v = vec![FieldElement::ZERO; n];
                v[f] = FieldElement::ONE;
                for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                    v[p] = self.neg(row[f]);
                }
                v
            })
            .collect::<Vec<_>>();
        if vectors.is_empty() {
            return Echelon { rows: Vec::new(), pivots: Vec::new() };
        }
        self.rref(vectors)
    }

    /// Companion matrix of a monic polynomial of degree k >= 1: ones on the
    /// subdiagonal and `-c_i` in the last column.
    pub fn companion(&self, f: &Poly) -> Result<Matrix> {
        let k = match f.degree() {
            Some(k) if k >= 1 && f.is_monic() => k,
            _ => return Err(Error::InvalidArgument("companion needs a monic polynomial of degree >= 1".into())),
        };
        let mut m = Matrix::zero(k);
        for i in 1..k {
            m.set(i, i - 1, FieldElement::ONE);
        }
        for i in 0..k {
            m.set(i, k - 1, self.neg(f.coeff(i)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FieldCtx {
        FieldCtx::new(2, 1).unwrap()
    }

    fn poly(ctx: &FieldCtx, s: &str) -> Poly {
        Poly::parse(ctx, s).unwrap()
    }

    #[test]
    fn field_ctx_examples() {
        let f = f2();
        assert_eq!(f.q(), 2);
        assert_eq!(f.modulus(), &[0, 1]);
        let f4 = FieldCtx::new(2, 2).unwrap();
        assert_eq!(f4.modulus(), &[1, 1, 1]);
        assert_eq!(FieldCtx::new(4, 1).unwrap_err(), Error::NonPrime(4));
        assert!(matches!(FieldCtx::new(2, 21), Err(Error::TooLarge(_))));
        assert!(matches!(FieldCtx::new(1031, 2), Err(Error::TooLarge(_))));
        assert!(matches!(FieldCtx::new(2, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quadratic_modulus_by_exhaustion() {
        // x^2, x^2+1 = (x+1)^2 and x^2+x = x(x+1) are reducible over F_2.
        let f = f2();
        let candidates: Vec<Poly> = f.monic_polys(2).collect();
        assert_eq!(candidates.len(), 4);
        let irreducible: Vec<&Poly> =
            candidates.iter().filter(|c| f.elements().all(|x| !f.poly_eval(c, x).is_zero())).collect();
        assert_eq!(irreducible, vec![&poly(&f, "1,1,1")]);
    }

    #[test]
    fn for_order_detects_prime_powers() {
        let f9 = FieldCtx::for_order(9).unwrap();
        assert_eq!((f9.p(), f9.d()), (3, 2));
        assert_eq!(f9.modulus(), &[1, 0, 1]);
        assert!(FieldCtx::for_order(12).is_err());
        assert!(FieldCtx::for_order(1).is_err());
    }

    #[test]
    fn poly_mod_pow_examples() {
        let f = f2();
        let m = poly(&f, "1,1,1");
        let x = Poly::x();
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(3u32), &m).unwrap(), Poly::one());
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(1u32), &m).unwrap(), x);
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(0u32), &m).unwrap(), Poly::one());
        let cubic = poly(&f, "1,1,0,1");
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(1u32), &cubic).unwrap(), x);
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(3u32), &Poly::zero()), Err(Error::ZeroModulus));
        assert_eq!(f.poly_mod_pow(&x, &BigUint::from(3u32), &Poly::one()), Err(Error::ZeroModulus));
    }

    #[test]
    fn irreducibles_examples() {
        let f = f2();
        assert_eq!(f.irreducibles(1).unwrap(), vec![poly(&f, "0,1"), poly(&f, "1,1")]);
        assert_eq!(f.irreducibles(2).unwrap(), vec![poly(&f, "1,1,1")]);
        assert_eq!(f.irreducibles(3).unwrap(), vec![poly(&f, "1,1,0,1"), poly(&f, "1,0,1,1")]);
        assert!(matches!(f.irreducibles(7), Err(Error::TooLarge(_))));
        let f5 = FieldCtx::new(5, 1).unwrap();
        // (5^2 - 5) / 2 monic irreducible quadratics
        assert_eq!(f5.irreducibles(2).unwrap().len(), 10);
    }

    #[test]
    fn irreducibles_have_no_roots_or_small_factors() {
        for q in [2u64, 3, 4, 5] {
            let ctx = FieldCtx::for_order(q).unwrap();
            for t in 1..=3 {
                for f in ctx.irreducibles(t).unwrap() {
                    for k in 1..=t / 2 {
                        assert!(ctx.monic_polys(k).all(|g| !ctx.poly_rem(&f, &g).unwrap().is_zero()));
                    }
                    if t >= 2 {
                        assert!(ctx.elements().all(|x| !ctx.poly_eval(&f, x).is_zero()));
                    }
                }
            }
        }
    }

    #[test]
    fn lagrange_in_unit_group() {
        for q in [2u64, 3, 4, 5, 7] {
            let ctx = FieldCtx::for_order(q).unwrap();
            for t in 1..=3 {
                let e = BigUint::from(q).pow(t as u32) - 1u32;
                for f in ctx.irreducibles(t).unwrap() {
                    if f.coeff(0).is_zero() {
                        continue;
                    }
                    assert_eq!(ctx.poly_mod_pow(&Poly::x(), &e, &f).unwrap(), Poly::one(), "q={q} f={f:?}");
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let ctx = FieldCtx::for_order(q).unwrap();
            let els: Vec<_> = ctx.elements().collect();
            for &a in &els {
                assert_eq!(ctx.add(a, ctx.neg(a)), FieldElement::ZERO);
                if !a.is_zero() {
                    assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), FieldElement::ONE);
                }
                for &b in &els {
                    assert_eq!(ctx.mul(a, b), ctx.mul(b, a));
                    for &c in &els {
                        assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
                        assert_eq!(ctx.add(ctx.add(a, b), c), ctx.add(a, ctx.add(b, c)));
                        assert_eq!(ctx.mul(a, ctx.add(b, c)), ctx.add(ctx.mul(a, b), ctx.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn untabled_field_matches_definition() {
        // 3^6 = 729 is above the table limit.
        let ctx = FieldCtx::new(3, 6).unwrap();
        assert!(ctx.tables.is_none());
        for a in (1..729).step_by(37) {
            let a = FieldElement(a);
            assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), FieldElement::ONE);
            assert_eq!(ctx.pow(a, 728), FieldElement::ONE);
        }
    }

    #[test]
    fn kernel_dim_examples() {
        let f = f2();
        assert_eq!(f.kernel_dim(&Matrix::identity(3)), 0);
        assert_eq!(f.kernel_dim(&Matrix::zero(3)), 3);
        let jordan = Matrix::parse(&f, "0,1;0,0").unwrap();
        assert_eq!(f.kernel_dim(&jordan), 1);
        assert_eq!(f.kernel_basis(&jordan).rows, vec![vec![FieldElement::ONE, FieldElement::ZERO]]);
    }

    #[test]
    fn rank_nullity_on_all_small_matrices() {
        let ctx = FieldCtx::new(3, 1).unwrap();
        for idx in 0..3u64.pow(4) {
            let m = Matrix::from_counter(&ctx, 2, idx);
            assert_eq!(ctx.kernel_dim(&m) + ctx.image_basis(&m).rank(), 2);
            for v in ctx.kernel_basis(&m).rows {
                assert!(ctx.apply(&m, &v).unwrap().iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn companion_has_char_poly_f() {
        let f = f2();
        let p = poly(&f, "1,1,1");
        let c = f.companion(&p).unwrap();
        // C^2 + C + I = 0
        let c2 = f.mat_mul(&c, &c).unwrap();
        for r in 0..2 {
            for col in 0..2 {
                let v = f.add(f.add(c2.get(r, col), c.get(r, col)), Matrix::identity(2).get(r, col));
                assert!(v.is_zero());
            }
        }
        assert!(f.companion(&Poly::one()).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let f = f2();
        assert!(matches!(f.mat_mul(&Matrix::zero(2), &Matrix::zero(3)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(f.apply(&Matrix::zero(2), &[FieldElement::ONE]), Err(Error::DimensionMismatch { .. })));
        assert!(Matrix::parse(&f, "1,0;1").is_err());
    }

    #[test]
    fn text_formats() {
        let f4 = FieldCtx::new(2, 2).unwrap();
        let p = Poly::parse(&f4, "3,0,1").unwrap();
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.to_text(), "3,0,1");
        assert!(Poly::parse(&f4, "4").is_err());
        let m = Matrix::parse(&f4, "1,2;3,0").unwrap();
        assert_eq!(m.to_text(), "1,2;3,0");
    }
}
