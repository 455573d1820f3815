//! Exact counts of non-isomorphic functional graphs of linear maps.
//!
//! A bijective linear map splits into primary blocks, each described by the
//! order `m` of an irreducible factor and its exponent `s`; the multiset of
//! these blocks is its [`GraphData`] and determines its cycle structure. The
//! number `B_q(n)` of bijective classes is the number of distinct cycle
//! structures over all graph data of dimension `n`. Nilpotent maps are
//! classified by partitions, whence `A_q(n) = Σ P(k) B_q(n - k)`.

pub mod bounds;
pub mod certified;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::cyclegraph::{elspas_structure_for, tensor, BlockSpec, CycleMultiset};
use crate::error::{too_large, Error, Result};
use crate::ffield::FieldCtx;
use crate::numthy::{self, exact_order_divisors, factor_limit, partition_counts_upto, partitions_list, Nat};
use crate::par::{map_reduce, Exec};

pub use bounds::{
    bound_eq_main, bound_lower, bound_upper, growth_report, lambda_vectors, partition_sum, EqMainBounds, GrowthRow,
    LambdaVector, Sigma,
};

/// Largest dimension handled by the census.
pub const MAX_CENSUS_DIM: usize = 12;

/// Multiset of primary blocks, kept sorted by `(t, m, s)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GraphData {
    blocks: Vec<BlockSpec>,
}

impl GraphData {
    pub fn new(mut blocks: Vec<BlockSpec>) -> Self {
        blocks.sort();
        GraphData { blocks }
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn dimension(&self) -> u64 {
        self.blocks.iter().map(|b| b.t as u64 * b.s as u64).sum()
    }

    /// Whether every block has `s = 1` and an order coprime to `p`.
    pub fn is_p_free(&self, p: u32) -> bool {
        self.blocks.iter().all(|b| b.s == 1 && !(&b.m % p).is_zero())
    }

    /// Parses `m:s` pairs, e.g. `"3:1,1:2"`, deriving each `t` as the
    /// multiplicative order of `q` modulo `m`.
    pub fn parse(text: &str, q: &Nat) -> Result<Self> {
        let mut blocks = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (m, s) = item.split_once(':').ok_or_else(|| Error::Parse(format!("expected m:s, got {item:?}")))?;
            let m: Nat = m.trim().parse().map_err(|e| Error::Parse(format!("{m:?}: {e}")))?;
            let s: u32 = s.trim().parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            if m.is_zero() || s == 0 {
                return Err(Error::Parse("m and s must be positive".into()));
            }
            let t = numthy::mult_order(q, &m)?.to_u32().ok_or_else(|| too_large("block degree"))?;
            blocks.push(BlockSpec { t, m, s });
        }
        Ok(GraphData::new(blocks))
    }
}

impl fmt::Display for GraphData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| format!("{}:{}", b.m, b.s)).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for GraphData {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Block {
            t: u32,
            m: String,
            s: u32,
        }
        let blocks: Vec<Block> = self.blocks.iter().map(|b| Block { t: b.t, m: b.m.to_string(), s: b.s }).collect();
        blocks.serialize(serializer)
    }
}

fn check_census_args(ctx: &FieldCtx, n: usize) -> Result<()> {
    if n > MAX_CENSUS_DIM {
        return Err(too_large(format!("census dimension {n} > {MAX_CENSUS_DIM}")));
    }
    if n > 0 && ctx.order().pow(n as u32) - 1u32 > factor_limit() {
        return Err(too_large(format!("q^{n} - 1 exceeds the factoring guard")));
    }
    Ok(())
}

/// Every block `(t, m, s)` with `s · t <= n`, sorted.
fn block_options(ctx: &FieldCtx, n: usize) -> Result<Vec<BlockSpec>> {
    let q = ctx.order();
    let mut out = Vec::new();
    for t in 1..=n as u32 {
        for m in exact_order_divisors(&q, t)? {
            for s in 1..=n as u32 / t {
                out.push(BlockSpec { t, m: m.clone(), s });
            }
        }
    }
    out.sort();
    Ok(out)
}

fn extend_data(
    options: &[BlockSpec],
    start: usize,
    rest: u64,
    prefix: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if rest == 0 {
        visit(prefix);
        return;
    }
    for (i, b) in options.iter().enumerate().skip(start) {
        let size = b.t as u64 * b.s as u64;
        if size <= rest {
            prefix.push(i);
            extend_data(options, i, rest - size, prefix, visit);
            prefix.pop();
        }
    }
}

fn data_from(options: &[BlockSpec], idx: &[usize]) -> GraphData {
    GraphData { blocks: idx.iter().map(|&i| options[i].clone()).collect() }
}

/// All graph data of dimension `n`, in lexicographic canonical order.
pub fn enumerate_graph_data(ctx: &FieldCtx, n: usize) -> Result<Vec<GraphData>> {
    check_census_args(ctx, n)?;
    let options = block_options(ctx, n)?;
    let mut out = Vec::new();
    extend_data(&options, 0, n as u64, &mut Vec::new(), &mut |idx| out.push(data_from(&options, idx)));
    Ok(out)
}

/// Cycle structure of a bijection with the given graph data: the tensor
/// product of the primary blocks' structures.
pub fn cycle_structure_of(data: &GraphData, ctx: &FieldCtx) -> Result<CycleMultiset> {
    let q = ctx.order();
    data.blocks
        .iter()
        .try_fold(CycleMultiset::unit(), |acc, b| Ok(tensor(&acc, &elspas_structure_for(&q, ctx.p(), b)?)))
}

/// One bijective class: its cycle structure, the least graph data producing
/// it, and how many graph data produce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BijectiveClass {
    pub structure: CycleMultiset,
    pub data: GraphData,
    #[serde(serialize_with = "numthy::nat_string::serialize")]
    pub data_count: Nat,
}

/// A class of an arbitrary linear map: a nilpotent part given by its Jordan
/// partition, and a bijective part given by its cycle structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixedClass {
    pub nilpotent: Vec<u32>,
    pub bijective: CycleMultiset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum InventoryEntry {
    Bijective(BijectiveClass),
    Mixed(MixedClass),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusResult {
    #[serde(serialize_with = "numthy::nat_string::serialize")]
    pub q: Nat,
    pub n: usize,
    #[serde(serialize_with = "numthy::nat_string::serialize")]
    pub value: Nat,
    /// Number of graph data enumerated; bijective census only.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "numthy::nat_string::serialize_opt")]
    pub graph_data: Option<Nat>,
    /// Graph data that produced an already seen structure; bijective census
    /// only.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "numthy::nat_string::serialize_opt")]
    pub collisions: Option<Nat>,
    pub inventory: Vec<InventoryEntry>,
}

type ClassMap = BTreeMap<CycleMultiset, (GraphData, Nat)>;

fn merge_classes(mut a: ClassMap, b: ClassMap) -> ClassMap {
    for (structure, (data, count)) in b {
        match a.get_mut(&structure) {
            Some((d, c)) => {
                if data < *d {
                    *d = data;
                }
                *c += count;
            }
            None => {
                a.insert(structure, (data, count));
            }
        }
    }
    a
}

/// Distinct cycle structures of bijections of `F_q^n`, keyed by structure.
pub fn bijective_classes(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<Vec<BijectiveClass>> {
    check_census_args(ctx, n)?;
    if n == 0 {
        return Ok(vec![BijectiveClass {
            structure: CycleMultiset::unit(),
            data: GraphData::default(),
            data_count: Nat::one(),
        }]);
    }
    let q = ctx.order();
    let options = block_options(ctx, n)?;
    let structures = options.iter().map(|b| elspas_structure_for(&q, ctx.p(), b)).collect::<Result<Vec<_>>>()?;
    let leads: Vec<usize> = (0..options.len()).collect();
    let classes = map_reduce(
        exec,
        leads,
        |lead| {
            let mut map = ClassMap::new();
            let size = options[lead].t as u64 * options[lead].s as u64;
            if size > n as u64 {
                return map;
            }
            let mut prefix = vec![lead];
            extend_data(&options, lead, n as u64 - size, &mut prefix, &mut |idx| {
                let structure = idx.iter().fold(CycleMultiset::unit(), |acc, &i| tensor(&acc, &structures[i]));
                // Enumeration is lexicographic, so the first data seen is the least.
                match map.entry(structure) {
                    Entry::Vacant(v) => {
                        v.insert((data_from(&options, idx), Nat::one()));
                    }
                    Entry::Occupied(mut o) => o.get_mut().1 += 1u32,
                }
            });
            map
        },
        ClassMap::new,
        merge_classes,
    );
    Ok(classes
        .into_iter()
        .map(|(structure, (data, data_count))| BijectiveClass { structure, data, data_count })
        .collect())
}

/// `B_q(n)`, with the inventory of bijective classes.
pub fn count_b(ctx: &FieldCtx, n: usize, exec: Exec) -> Result<CensusResult> {
    let classes = bijective_classes(ctx, n, exec)?;
    let total: Nat = classes.iter().map(|c| &c.data_count).sum();
    let value = Nat::from(classes.len());
    Ok(CensusResult {
        q: ctx.order(),
        n,
        collisions: Some(&total - &value),
        graph_data: Some(total),
        value,
        inventory: classes.into_iter().map(InventoryEntry::Bijective).collect(),
    })
}

/// `A_q(n) = Σ_k P(k) B_q(n - k)`. With `inventory`, every class is listed
/// as a (nilpotent partition, bijective structure) pair.
pub fn count_a(ctx: &FieldCtx, n: usize, inventory: bool, exec: Exec) -> Result<CensusResult> {
    check_census_args(ctx, n)?;
    let parts = partition_counts_upto(n)?;
    let mut value = Nat::zero();
    let mut entries = Vec::new();
    for (k, pk) in parts.iter().enumerate() {
        let classes = bijective_classes(ctx, n - k, exec)?;
        value += pk * Nat::from(classes.len());
        if inventory {
            for partition in partitions_list(k)? {
                for class in &classes {
                    entries.push(InventoryEntry::Mixed(MixedClass {
                        nilpotent: partition.clone(),
                        bijective: class.structure.clone(),
                    }));
                }
            }
        }
    }
    Ok(CensusResult { q: ctx.order(), n, value, graph_data: None, collisions: None, inventory: entries })
}
