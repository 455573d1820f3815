//! Brute-force ground truth at tiny scale.
//!
//! Every n×n matrix over F_q is enumerated by a row-major base-q counter,
//! its functional graph on F_q^n is built literally, and graphs are compared
//! by a canonical string: rooted in-trees are encoded by sorted child codes,
//! each cycle by the least rotation of its sequence of tree codes, and the
//! whole graph by the sorted list of component codes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::cyclegraph::CycleMultiset;
use crate::error::{too_large, Error, Result};
use crate::ffield::{Echelon, FieldCtx, FieldElement, Matrix};
use crate::numthy::Nat;
use crate::par::{chunks, map_reduce, Exec};

/// Largest vertex count accepted by [`build_graph`] and [`tensor_digraph`].
pub const MAX_GRAPH_SIZE: u64 = 1 << 16;
/// Largest number of matrices enumerated by [`oracle_census`].
pub const MAX_ENUMERATION: u64 = 1 << 20;
/// Largest number of matrices scanned by [`nilpotent_classes`].
pub const MAX_NILPOTENT_SCAN: u64 = 1 << 26;
/// Largest dimension accepted by [`fitting_split`].
pub const MAX_FITTING_DIM: usize = 8;

const CHUNK: u64 = 1 << 12;

/// The graph of a self-map on `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionalGraph {
    succ: Vec<u32>,
}

impl FunctionalGraph {
    pub fn new(succ: Vec<u32>) -> Result<Self> {
        let n = succ.len();
        if n as u64 > MAX_GRAPH_SIZE {
            return Err(too_large(format!("{n} vertices > 2^16")));
        }
        if let Some(bad) = succ.iter().find(|&&s| s as usize >= n) {
            return Err(Error::InvalidArgument(format!("successor {bad} outside 0..{n}")));
        }
        Ok(FunctionalGraph { succ })
    }

    pub fn size(&self) -> usize {
        self.succ.len()
    }

    pub fn succ(&self) -> &[u32] {
        &self.succ
    }

    pub fn is_bijective(&self) -> bool {
        let mut hit = vec![false; self.succ.len()];
        for &s in &self.succ {
            if std::mem::replace(&mut hit[s as usize], true) {
                return false;
            }
        }
        true
    }

    /// The graph after renaming vertex `v` to `perm[v]`.
    pub fn relabel(&self, perm: &[u32]) -> Result<Self> {
        let mut succ = vec![0; self.succ.len()];
        for (v, &s) in self.succ.iter().enumerate() {
            succ[perm[v] as usize] = perm[s as usize];
        }
        FunctionalGraph::new(succ)
    }

    /// Disjoint union of explicit cycles.
    pub fn from_cycles(lengths: &[u32]) -> Result<Self> {
        let mut succ = Vec::new();
        for &l in lengths {
            let base = succ.len() as u32;
            succ.extend((0..l).map(|i| base + (i + 1) % l));
        }
        FunctionalGraph::new(succ)
    }

    /// Vertices that lie on a cycle.
    fn cyclic_vertices(&self) -> Vec<bool> {
        let n = self.succ.len();
        // 0 unseen, 1 on the current walk, 2 finished
        let mut state = vec![0u8; n];
        let mut on_cycle = vec![false; n];
        let mut path = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                path.push(v);
                v = self.succ[v] as usize;
            }
            if state[v] == 1 {
                let mut u = v;
                loop {
                    on_cycle[u] = true;
                    u = self.succ[u] as usize;
                    if u == v {
                        break;
                    }
                }
            }
            for &u in &path {
                state[u] = 2;
            }
            path.clear();
        }
        on_cycle
    }

    /// Multiset of cycle lengths.
    pub fn cycle_multiset(&self) -> CycleMultiset {
        let on_cycle = self.cyclic_vertices();
        let mut seen = vec![false; self.succ.len()];
        let mut out = CycleMultiset::new();
        for v in 0..self.succ.len() {
            if !on_cycle[v] || seen[v] {
                continue;
            }
            let (mut u, mut len) = (v, 0u64);
            while !seen[u] {
                seen[u] = true;
                u = self.succ[u] as usize;
                len += 1;
            }
            out.add(Nat::from(len), Nat::from(1u32));
        }
        out
    }
}

/// Canonical isomorphism invariant of a functional graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GraphCode(String);

impl GraphCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GraphCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn check_graph_size(q: u32, n: usize) -> Result<usize> {
    match (q as u64).checked_pow(n as u32).filter(|&s| s <= MAX_GRAPH_SIZE) {
        Some(s) => Ok(s as usize),
        None => Err(too_large(format!("{q}^{n} vertices > 2^16"))),
    }
}

/// The functional graph of `t` on F_q^n. Vertex `v` is the vector whose
/// coordinate `i` is base-q digit `i` of `v`, least significant first.
pub fn build_graph(t: &Matrix, ctx: &FieldCtx) -> Result<FunctionalGraph> {
    let n = t.n();
    let size = check_graph_size(ctx.q(), n)?;
    let q = ctx.q();
    let elems: Vec<FieldElement> = ctx.elements().collect();
    let mut digits = vec![FieldElement::ZERO; n];
    let mut image = vec![FieldElement::ZERO; n];
    let mut succ = Vec::with_capacity(size);
    for _ in 0..size {
        ctx.apply_into(t, &digits, &mut image);
        succ.push(image.iter().rev().fold(0u32, |acc, e| acc * q + e.index()));
        for d in digits.iter_mut() {
            let next = d.index() + 1;
            if next < q {
                *d = elems[next as usize];
                break;
            }
            *d = FieldElement::ZERO;
        }
    }
    Ok(FunctionalGraph { succ })
}

/// Index of the lexicographically least rotation (Booth).
fn least_rotation(s: &[u32]) -> usize {
    let n = s.len();
    let at = |i: i64| s[i as usize % n];
    let mut fail = vec![-1i64; 2 * n];
    let mut k = 0i64;
    for j in 1..2 * n as i64 {
        let sj = at(j);
        let mut i = fail[(j - k - 1) as usize];
        while i != -1 && sj != at(k + i + 1) {
            if sj < at(k + i + 1) {
                k = j - i - 1;
            }
            i = fail[i as usize];
        }
        if sj != at(k + i + 1) {
            if sj < at(k) {
                k = j;
            }
            fail[(j - k) as usize] = -1;
        } else {
            fail[(j - k) as usize] = i + 1;
        }
    }
    k as usize % n
}

/// Canonical code: equal for two functional graphs exactly when they are
/// isomorphic as digraphs.
pub fn canonical_code(g: &FunctionalGraph) -> GraphCode {
    let n = g.succ.len();
    let on_cycle = g.cyclic_vertices();
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    for v in 0..n {
        if !on_cycle[v] {
            children[g.succ[v] as usize].push(v as u32);
        }
    }
    // Breadth-first from the cycles; reversed, every child precedes its parent.
    let mut order: Vec<u32> = (0..n as u32).filter(|&v| on_cycle[v as usize]).collect();
    let mut head = 0;
    while head < order.len() {
        let v = order[head] as usize;
        order.extend_from_slice(&children[v]);
        head += 1;
    }
    let mut code: Vec<String> = vec![String::new(); n];
    for &v in order.iter().rev() {
        let mut kids: Vec<String> =
            children[v as usize].iter().map(|&c| std::mem::take(&mut code[c as usize])).collect();
        kids.sort_unstable();
        let mut s = String::with_capacity(2 + kids.iter().map(String::len).sum::<usize>());
        s.push('(');
        kids.iter().for_each(|k| s.push_str(k));
        s.push(')');
        code[v as usize] = s;
    }
    let roots: BTreeSet<&str> = (0..n).filter(|&v| on_cycle[v]).map(|v| code[v].as_str()).collect();
    let rank: BTreeMap<&str, u32> = roots.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();

    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for v in 0..n {
        if !on_cycle[v] || seen[v] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut u = v;
        while !seen[u] {
            seen[u] = true;
            cycle.push(u);
            u = g.succ[u] as usize;
        }
        let ranks: Vec<u32> = cycle.iter().map(|&u| rank[code[u].as_str()]).collect();
        let start = least_rotation(&ranks);
        let mut s = String::from("[");
        for i in 0..cycle.len() {
            s.push_str(&code[cycle[(start + i) % cycle.len()]]);
        }
        s.push(']');
        components.push(s);
    }
    components.sort_unstable();
    GraphCode(components.concat())
}

/// The code of a permutation with the given cycle type.
pub fn cycle_code(cycles: &CycleMultiset) -> Result<GraphCode> {
    let mut lengths = Vec::new();
    for (len, count) in cycles.iter() {
        let len = u32::try_from(len).map_err(|_| too_large(String::from("cycle length")))?;
        let count = u64::try_from(count).map_err(|_| too_large(String::from("cycle count")))?;
        lengths.extend(std::iter::repeat_n(len, count as usize));
        if lengths.len() as u64 > MAX_GRAPH_SIZE {
            return Err(too_large(String::from("more than 2^16 cycles")));
        }
    }
    Ok(canonical_code(&FunctionalGraph::from_cycles(&lengths)?))
}

/// Product graph on vertex pairs; the pair `(a, b)` is vertex `a * |g2| + b`.
pub fn tensor_digraph(g1: &FunctionalGraph, g2: &FunctionalGraph) -> Result<FunctionalGraph> {
    let (n1, n2) = (g1.size() as u64, g2.size() as u64);
    if n1 * n2 > MAX_GRAPH_SIZE {
        return Err(too_large(format!("{n1} * {n2} vertices > 2^16")));
    }
    let n2 = n2 as u32;
    let mut succ = Vec::with_capacity((n1 * n2 as u64) as usize);
    for &a in &g1.succ {
        for &b in &g2.succ {
            succ.push(a * n2 + b);
        }
    }
    Ok(FunctionalGraph { succ })
}

/// The decomposition `F_q^n = V0 ⊕ V1` with `T` nilpotent on `V0` and
/// bijective on `V1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FittingSplit {
    /// Basis of `ker T^n`, reduced echelon form.
    pub basis0: Echelon,
    /// Basis of `im T^n`, reduced echelon form.
    pub basis1: Echelon,
    /// Least `m` with `ker T^m = ker T^n`.
    pub nilpotency_index: usize,
}

impl FittingSplit {
    pub fn dims(&self) -> (usize, usize) {
        (self.basis0.rank(), self.basis1.rank())
    }
}

pub fn fitting_split(t: &Matrix, ctx: &FieldCtx) -> Result<FittingSplit> {
    let n = t.n();
    if n > MAX_FITTING_DIM {
        return Err(too_large(format!("dimension {n} > {MAX_FITTING_DIM}")));
    }
    let tn = ctx.mat_pow(t, n as u64);
    let basis0 = ctx.kernel_basis(&tn);
    let basis1 = ctx.image_basis(&tn);
    let dim0 = basis0.rank();
    let mut power = Matrix::identity(n);
    let mut nilpotency_index = 0;
    while ctx.kernel_dim(&power) != dim0 {
        power = ctx.mat_mul(&power, t)?;
        nilpotency_index += 1;
    }
    Ok(FittingSplit { basis0, basis1, nilpotency_index })
}

/// The matrix of `t` on the span of `basis`, or `None` when the span is not
/// invariant.
pub fn restrict(t: &Matrix, basis: &Echelon, ctx: &FieldCtx) -> Option<Matrix> {
    let k = basis.rank();
    let mut out = Matrix::zero(k);
    for (j, b) in basis.rows.iter().enumerate() {
        let image = ctx.apply(t, b).ok()?;
        for (i, c) in basis.coordinates(ctx, &image)?.into_iter().enumerate() {
            out.set(i, j, c);
        }
    }
    Some(out)
}

/// Checks the decomposition of `t`: the dimensions add up, the spans meet
/// only in zero, both are invariant, `t` is nilpotent on `V0` and bijective
/// on `V1`, and the graph of `t` is the product of the two restricted graphs.
/// `full` is the code of the graph of `t` when already known.
pub fn check_fitting(t: &Matrix, ctx: &FieldCtx, full: Option<&GraphCode>) -> Result<bool> {
    let split = fitting_split(t, ctx)?;
    let n = t.n();
    let (d0, d1) = split.dims();
    if d0 + d1 != n {
        return Ok(false);
    }
    let joint: Vec<Vec<FieldElement>> = split.basis0.rows.iter().chain(&split.basis1.rows).cloned().collect();
    if n > 0 && ctx.rref(joint).rank() != n {
        return Ok(false);
    }
    let (Some(t0), Some(t1)) = (restrict(t, &split.basis0, ctx), restrict(t, &split.basis1, ctx)) else {
        return Ok(false);
    };
    if !ctx.is_invertible(&t1) || !ctx.mat_pow(&t0, d0 as u64).is_zero() {
        return Ok(false);
    }
    let full = match full {
        Some(c) => c.clone(),
        None => canonical_code(&build_graph(t, ctx)?),
    };
    let product = tensor_digraph(&build_graph(&t0, ctx)?, &build_graph(&t1, ctx)?)?;
    Ok(canonical_code(&product) == full)
}

/// Jordan block lengths of a nilpotent matrix, weakly decreasing.
pub fn nilpotent_partition(t: &Matrix, ctx: &FieldCtx) -> Result<Vec<u32>> {
    let n = t.n();
    if !ctx.mat_pow(t, n as u64).is_zero() {
        return Err(Error::NotNilpotent);
    }
    // d_i = dim ker T^i - dim ker T^{i-1} counts blocks of length >= i.
    let mut d = Vec::new();
    let (mut power, mut prev) = (Matrix::identity(n), 0);
    for _ in 0..n {
        power = ctx.mat_mul(&power, t)?;
        let k = ctx.kernel_dim(&power);
        if k == prev {
            break;
        }
        d.push((k - prev) as u32);
        prev = k;
    }
    let blocks = d.first().copied().unwrap_or(0);
    Ok((1..=blocks).map(|j| d.iter().filter(|&&di| di >= j).count() as u32).collect())
}

/// Summary of an exhaustive run over all n×n matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    #[serde(serialize_with = "crate::numthy::nat_string::serialize")]
    pub q: Nat,
    pub n: usize,
    pub total_maps: u64,
    pub distinct_codes: u64,
    pub invertible_distinct_codes: u64,
    pub prop1_violations: u64,
}

fn matrix_count(q: u32, n: usize, limit: u64) -> Result<u64> {
    let total = (q as u64).checked_pow((n * n) as u32).filter(|&t| t <= limit);
    total.ok_or_else(|| too_large(format!("{q}^{} matrices exceed the enumeration guard", n * n)))
}

#[derive(Default)]
struct Tally {
    all: HashSet<GraphCode>,
    invertible: HashSet<GraphCode>,
    violations: u64,
}

fn merge_tally(mut a: Tally, b: Tally) -> Tally {
    a.all.extend(b.all);
    a.invertible.extend(b.invertible);
    a.violations += b.violations;
    a
}

fn tally_range(ctx: &FieldCtx, n: usize, range: Range<u64>, fitting: bool) -> Result<Tally> {
    let mut tally = Tally::default();
    for index in range {
        let t = Matrix::from_counter(ctx, n, index);
        let g = build_graph(&t, ctx)?;
        let code = canonical_code(&g);
        if fitting && !check_fitting(&t, ctx, Some(&code))? {
            tally.violations += 1;
        }
        if g.is_bijective() {
            tally.invertible.insert(code.clone());
        }
        tally.all.insert(code);
    }
    Ok(tally)
}

fn run_census(ctx: &FieldCtx, n: usize, fitting: bool, exec: Exec) -> Result<OracleReport> {
    let total = matrix_count(ctx.q(), n, MAX_ENUMERATION)?;
    let tally = map_reduce(
        exec,
        chunks(total, CHUNK),
        |r| tally_range(ctx, n, r, fitting),
        || Ok(Tally::default()),
        |a, b| Ok(merge_tally(a?, b?)),
    )?;
    Ok(OracleReport {
        q: ctx.order(),
        n,
        total_maps: total,
        distinct_codes: tally.all.len() as u64,
        invertible_distinct_codes: tally.invertible.len() as u64,
        prop1_violations: tally.violations,
    })
}

/// Enumerates every matrix, counting distinct graphs and checking the
/// Fitting decomposition of each.
pub fn oracle_census(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<OracleReport> {
    run_census(ctx, n, true, exec)
}

pub fn oracle_count_a(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<Nat> {
    Ok(Nat::from(run_census(ctx, n, false, exec)?.distinct_codes))
}

pub fn oracle_count_b(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<Nat> {
    Ok(Nat::from(run_census(ctx, n, false, exec)?.invertible_distinct_codes))
}

/// Classification of the nilpotent n×n matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NilpotentReport {
    pub n: usize,
    pub nilpotent_maps: u64,
    pub distinct_codes: u64,
    pub distinct_partitions: u64,
    /// Whether equal codes and equal block partitions coincide.
    pub code_matches_partition: bool,
}

type CodePartitions = BTreeMap<GraphCode, BTreeSet<Vec<u32>>>;

fn is_nilpotent_quick(t: &Matrix, ctx: &FieldCtx, a: &mut [FieldElement], b: &mut [FieldElement]) -> bool {
    let n = t.n();
    let trace = (0..n).fold(FieldElement::ZERO, |acc, i| ctx.add(acc, t.get(i, i)));
    if !trace.is_zero() {
        return false;
    }
    a.fill(FieldElement::ZERO);
    a[0] = FieldElement::ONE;
    for _ in 0..n {
        ctx.apply_into(t, a, b);
        a.copy_from_slice(b);
    }
    a.iter().all(|x| x.is_zero()) && ctx.mat_pow(t, n as u64).is_zero()
}

fn nilpotent_range(ctx: &FieldCtx, n: usize, range: Range<u64>) -> Result<(u64, CodePartitions)> {
    let mut out = CodePartitions::new();
    let mut count = 0;
    let (mut a, mut b) = (vec![FieldElement::ZERO; n], vec![FieldElement::ZERO; n]);
    for index in range {
        let t = Matrix::from_counter(ctx, n, index);
        if !is_nilpotent_quick(&t, ctx, &mut a, &mut b) {
            continue;
        }
        count += 1;
        let code = canonical_code(&build_graph(&t, ctx)?);
        out.entry(code).or_default().insert(nilpotent_partition(&t, ctx)?);
    }
    Ok((count, out))
}

/// Scans every n×n matrix, and for the nilpotent ones compares graph codes
/// with Jordan block partitions.
pub fn nilpotent_classes(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<NilpotentReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("nilpotent classes need n >= 1".into()));
    }
    let total = matrix_count(ctx.q(), n, MAX_NILPOTENT_SCAN)?;
    check_graph_size(ctx.q(), n)?;
    let (count, map) = map_reduce(
        exec,
        chunks(total, CHUNK * 16),
        |r| nilpotent_range(ctx, n, r),
        || Ok((0, CodePartitions::new())),
        |a, b| {
            let ((ca, mut ma), (cb, mb)) = (a?, b?);
            for (code, parts) in mb {
                ma.entry(code).or_default().extend(parts);
            }
            Ok((ca + cb, ma))
        },
    )?;
    let partitions: BTreeSet<&Vec<u32>> = map.values().flatten().collect();
    let one_each = map.values().all(|p| p.len() == 1);
    Ok(NilpotentReport {
        n,
        nilpotent_maps: count,
        distinct_codes: map.len() as u64,
        distinct_partitions: partitions.len() as u64,
        code_matches_partition: one_each && partitions.len() == map.len(),
    })
}

/// Cycle structure of the companion matrix of `f^s`, by iteration.
pub fn companion_cycles(ctx: &FieldCtx, f: &crate::ffield::Poly, s: u32) -> Result<CycleMultiset> {
    let c = ctx.companion(&ctx.poly_pow(f, s))?;
    Ok(build_graph(&c, ctx)?.cycle_multiset())
}
