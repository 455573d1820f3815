//! Command-line front end.
//!
//! Every subcommand builds a [`Report`]: rendered JSON plus a flat table used
//! for CSV and text output. Factorizations of `q^i - 1` persist across runs
//! in a JSON cache file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::census::{
    bound_eq_main, bound_lower, bound_upper, count_a, count_b, cycle_structure_of, growth_report, CensusResult,
    GraphData,
};
use crate::cyclegraph::{factor_product, poly_order, CycleMultiset};
use crate::error::{Error, Result};
use crate::ffield::{FieldCtx, Poly};
use crate::numthy::{self, is_probable_prime, sigma, sigma_star, zsigmondy_prime, Factorization, Nat};
use crate::oracle::{nilpotent_classes, oracle_census};
use crate::par::{init_workers, Exec};
use crate::verify;

pub const CACHE_ENV: &str = "LINMAP_CACHE";
pub const DEFAULT_CACHE: &str = "factor-cache.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "linmap", version, about = "Functional graphs of linear maps over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format. CSV and text carry the summary table only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Factorization cache file [env: LINMAP_CACHE] [default: ./factor-cache.json]
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run every sweep on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct Field {
    /// Field order, a prime power.
    #[arg(short = 'q')]
    q: u64,
}

#[derive(Debug, Args)]
struct Dims {
    #[arg(short = 'n', conflicts_with = "n_max")]
    n: Option<usize>,
    /// Report every n from 1 up to this value.
    #[arg(long = "n-max", alias = "nmax")]
    n_max: Option<usize>,
}

impl Dims {
    fn range(&self) -> Result<std::ops::RangeInclusive<usize>> {
        match (self.n, self.n_max) {
            (Some(n), None) => Ok(n..=n),
            (None, Some(m)) => Ok(1..=m),
            _ => Err(Error::InvalidArgument("give -n or --n-max".into())),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count of non-isomorphic graphs of all linear maps of F_q^n.
    #[command(name = "census-A")]
    CensusA {
        #[command(flatten)]
        field: Field,
        #[arg(short = 'n')]
        n: usize,
        /// List every class (JSON only).
        #[arg(long)]
        inventory: bool,
    },
    /// Count of non-isomorphic graphs of invertible linear maps of F_q^n.
    #[command(name = "census-B")]
    CensusB {
        #[command(flatten)]
        field: Field,
        #[arg(short = 'n')]
        n: usize,
    },
    /// Lower and upper bounds on the census count.
    Bounds {
        #[command(flatten)]
        field: Field,
        #[command(flatten)]
        dims: Dims,
    },
    /// Max-term bounds on the census count.
    #[command(name = "eq-main")]
    EqMain {
        #[command(flatten)]
        field: Field,
        #[command(flatten)]
        dims: Dims,
    },
    /// Exhaustive enumeration of all matrices.
    Oracle {
        #[command(flatten)]
        field: Field,
        #[arg(short = 'n')]
        n: usize,
        /// Classify the nilpotent matrices instead.
        #[arg(long)]
        nilpotent: bool,
    },
    /// Cycle structure of the bijection with the given graph data.
    Cycles {
        #[command(flatten)]
        field: Field,
        /// Blocks as m:s pairs, e.g. "3:1,1:2".
        #[arg(long)]
        data: String,
    },
    /// Order of an irreducible polynomial.
    Order {
        #[command(flatten)]
        field: Field,
        /// Coefficients as element indices, low degree first, e.g. "1,1,1".
        #[arg(long)]
        poly: String,
    },
    /// Divisor counts of q^i - 1, all and of exact order i.
    Sigma {
        #[command(flatten)]
        field: Field,
        #[arg(long = "i-max", alias = "imax", default_value_t = 10)]
        i_max: u32,
    },
    /// Least primitive prime divisor of q^j - 1.
    Zsigmondy {
        #[command(flatten)]
        field: Field,
        #[arg(long = "j-max", alias = "jmax", default_value_t = 20)]
        j_max: u32,
    },
    /// Logarithms of the census count and its bounds.
    Growth {
        #[command(flatten)]
        field: Field,
        #[arg(long = "n-max", alias = "nmax", default_value_t = 10)]
        n_max: usize,
    },
    /// Factor a cycle multiset into a product of C_1 + a C_k terms.
    #[command(name = "factor-product")]
    FactorProduct {
        /// Cycles as length:count pairs, e.g. "1:4,2:6,4:3".
        #[arg(long)]
        cycles: String,
    },
    /// Run every invariant suite.
    Verify,
}

/// A result ready to print.
pub struct Report {
    /// Rendered JSON, fields in declaration order.
    pub json: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Exit code after printing.
    pub code: i32,
}

impl Report {
    fn new<S: Serialize>(json: &S, headers: &[&str], rows: Vec<Vec<String>>) -> Self {
        Report {
            json: serde_json::to_string(json).expect("serializable report"),
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
            code: EXIT_OK,
        }
    }
}

fn write_report(out: &mut dyn Write, format: Format, report: &Report) -> io::Result<()> {
    match format {
        Format::Json => {
            writeln!(out, "{}", report.json)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(&report.headers)?;
            for row in &report.rows {
                w.write_record(row)?;
            }
            w.flush()
        }
        Format::Text => {
            let mut widths: Vec<usize> = report.headers.iter().map(String::len).collect();
            for row in &report.rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.len());
                }
            }
            let line = |cells: &[String]| {
                let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                padded.join("  ")
            };
            writeln!(out, "{}", line(&report.headers))?;
            for row in &report.rows {
                writeln!(out, "{}", line(row))?;
            }
            Ok(())
        }
    }
}

fn field(f: &Field) -> Result<FieldCtx> {
    FieldCtx::for_order(f.q)
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

fn opt(x: &Option<Nat>) -> String {
    x.as_ref().map(s).unwrap_or_default()
}

fn census_report(r: &CensusResult) -> Report {
    Report::new(
        r,
        &["q", "n", "value", "graph_data", "collisions"],
        vec![vec![s(&r.q), s(r.n), s(&r.value), opt(&r.graph_data), opt(&r.collisions)]],
    )
}

fn execute(cmd: &Command, exec: Exec, seed: u64) -> Result<Report> {
    Ok(match cmd {
        Command::CensusA { field: f, n, inventory } => census_report(&count_a(&field(f)?, *n, *inventory, exec)?),
        Command::CensusB { field: f, n } => census_report(&count_b(&field(f)?, *n, exec)?),
        Command::Bounds { field: f, dims } => {
            let ctx = field(f)?;
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for n in dims.range()? {
                let (lower, upper) = (bound_lower(&ctx, n)?, bound_upper(&ctx, n)?);
                let value = count_a(&ctx, n, false, exec)?.value;
                rows.push(vec![s(f.q), s(n), s(&lower), s(&value), s(&upper)]);
                items.push(json!({"q": s(f.q), "n": n, "lower": s(&lower), "value": s(&value), "upper": s(&upper)}));
            }
            Report::new(&items, &["q", "n", "lower", "value", "upper"], rows)
        }
        Command::EqMain { field: f, dims } => {
            let ctx = field(f)?;
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for n in dims.range()? {
                let b = bound_eq_main(&ctx, n)?;
                let value = count_a(&ctx, n, false, exec)?.value;
                rows.push(vec![
                    s(f.q),
                    s(n),
                    s(&b.maxterm_lower),
                    s(&value),
                    s(&b.maxterm_upper_raw),
                    s(&b.maxterm_upper),
                ]);
                let mut item = serde_json::to_value(&b).expect("serializable bounds");
                item["q"] = json!(s(f.q));
                item["n"] = json!(n);
                item["value"] = json!(s(&value));
                items.push(item);
            }
            let headers = ["q", "n", "maxterm_lower", "value", "maxterm_upper_raw", "maxterm_upper"];
            Report::new(&items, &headers, rows)
        }
        Command::Oracle { field: f, n, nilpotent: false } => {
            let r = oracle_census(&field(f)?, *n, exec)?;
            let headers = ["q", "n", "total_maps", "distinct_codes", "invertible_distinct_codes", "prop1_violations"];
            let row = vec![
                s(&r.q),
                s(r.n),
                s(r.total_maps),
                s(r.distinct_codes),
                s(r.invertible_distinct_codes),
                s(r.prop1_violations),
            ];
            let mut report = Report::new(&r, &headers, vec![row]);
            if r.prop1_violations > 0 {
                report.code = EXIT_VIOLATION;
            }
            report
        }
        Command::Oracle { field: f, n, nilpotent: true } => {
            let r = nilpotent_classes(&field(f)?, *n, exec)?;
            let headers =
                ["q", "n", "nilpotent_maps", "distinct_codes", "distinct_partitions", "code_matches_partition"];
            let row = vec![
                s(f.q),
                s(r.n),
                s(r.nilpotent_maps),
                s(r.distinct_codes),
                s(r.distinct_partitions),
                s(r.code_matches_partition),
            ];
            let mut json = serde_json::to_value(&r).expect("serializable report");
            json["q"] = json!(s(f.q));
            let mut report = Report::new(&json, &headers, vec![row]);
            if !r.code_matches_partition {
                report.code = EXIT_VIOLATION;
            }
            report
        }
        Command::Cycles { field: f, data } => {
            let ctx = field(f)?;
            let data = GraphData::parse(data, &ctx.order())?;
            let structure = cycle_structure_of(&data, &ctx)?;
            let json = json!({"q": s(f.q), "data": data, "structure": structure});
            Report::new(&json, &["q", "data", "structure"], vec![vec![s(f.q), s(&data), s(&structure)]])
        }
        Command::Order { field: f, poly } => {
            let ctx = field(f)?;
            let p = Poly::parse(&ctx, poly)?;
            let order = poly_order(&p, &ctx)?;
            let json = json!({"q": s(f.q), "poly": p.to_text(), "order": s(&order)});
            Report::new(&json, &["q", "poly", "order"], vec![vec![s(f.q), p.to_text(), s(&order)]])
        }
        Command::Sigma { field: f, i_max } => {
            let q = field(f)?.order();
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for i in 1..=*i_max {
                let (a, b) = (sigma(&q, i)?, sigma_star(&q, i)?);
                rows.push(vec![s(i), s(&a), s(&b)]);
                items.push(json!({"i": i, "sigma": s(&a), "sigma_star": s(&b)}));
            }
            Report::new(&json!({"q": s(f.q), "rows": items}), &["i", "sigma", "sigma_star"], rows)
        }
        Command::Zsigmondy { field: f, j_max } => {
            let q = field(f)?.order();
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for j in 1..=*j_max {
                let prime = zsigmondy_prime(&q, j)?;
                rows.push(vec![s(j), prime.as_ref().map_or_else(|| s("none"), s)]);
                items.push(json!({"j": j, "prime": prime.as_ref().map(s)}));
            }
            Report::new(&json!({"q": s(f.q), "rows": items}), &["j", "prime"], rows)
        }
        Command::Growth { field: f, n_max } => {
            let rows_in = growth_report(&field(f)?, *n_max, exec)?;
            let rows = rows_in
                .iter()
                .map(|r| {
                    vec![
                        s(r.n),
                        format!("{:.6}", r.log_a),
                        r.n_over_loglog.map(|v| format!("{v:.6}")).unwrap_or_default(),
                        format!("{:.6}", r.log_lower),
                        format!("{:.6}", r.log_upper),
                    ]
                })
                .collect();
            let headers = ["n", "log_a", "n_over_loglog", "log_lower", "log_upper"];
            Report::new(&json!({"q": s(f.q), "rows": rows_in}), &headers, rows)
        }
        Command::FactorProduct { cycles } => {
            let g = CycleMultiset::parse(cycles)?;
            let pf = factor_product(&g)?;
            let factors: Vec<(String, String)> = pf.factors().iter().map(|(k, a)| (s(k), s(a))).collect();
            let rows = factors.iter().map(|(k, a)| vec![k.clone(), a.clone()]).collect();
            let json = json!({"cycles": s(&g), "factors": factors});
            Report::new(&json, &["k", "alpha"], rows)
        }
        Command::Verify => {
            let r = verify::run_all(seed, exec)?;
            let rows = r.suites.iter().map(|x| vec![x.suite.clone(), s(x.passed), s(x.failed)]).collect();
            let mut report = Report::new(&r, &["suite", "passed", "failed"], rows);
            if r.failed() > 0 {
                report.code = EXIT_VIOLATION;
            }
            report
        }
    })
}

/// Resolves the cache location: flag, then environment, then default.
pub fn cache_path(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE))
}

fn parse_cache_entry(key: &str, value: &Value) -> std::result::Result<(Nat, Factorization), String> {
    let n: Nat = key.parse().map_err(|_| format!("key {key:?} is not an integer"))?;
    let items = value.as_array().ok_or("not a list")?;
    let mut pairs = Vec::new();
    for item in items {
        let pair = item.as_array().filter(|p| p.len() == 2).ok_or("expected [prime, exponent]")?;
        let prime: Nat = match &pair[0] {
            Value::String(t) => t.parse().map_err(|_| format!("prime {t:?} is not an integer"))?,
            Value::Number(x) => Nat::from(x.as_u64().ok_or("prime is not a nonnegative integer")?),
            _ => return Err("prime must be a string or number".into()),
        };
        let exp = pair[1].as_u64().and_then(|e| u32::try_from(e).ok()).filter(|&e| e > 0).ok_or("bad exponent")?;
        if !prime.to_u128().is_some_and(is_probable_prime) {
            return Err(format!("{prime} is not prime"));
        }
        pairs.push((prime, exp));
    }
    let f = Factorization::from_pairs(pairs);
    if f.value() != n {
        return Err(format!("product {} != {n}", f.value()));
    }
    Ok((n, f))
}

/// Reads a cache file. A missing file is an empty cache; entries whose
/// product or primes do not check out are dropped with a warning.
pub fn cache_load(path: &Path, warn: &mut dyn Write) -> io::Result<BTreeMap<Nat, Factorization>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(e),
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    let map =
        value.as_object().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "cache is not a JSON object"))?;
    let mut out = BTreeMap::new();
    for (key, v) in map {
        match parse_cache_entry(key, v) {
            Ok((n, f)) => {
                out.insert(n, f);
            }
            Err(why) => writeln!(warn, "warning: dropping cache entry {key:?}: {why}")?,
        }
    }
    Ok(out)
}

/// Writes the cache atomically: a temporary file in the same directory is
/// renamed over `path`.
pub fn cache_store(path: &Path, entries: &BTreeMap<Nat, Factorization>) -> io::Result<()> {
    let map: serde_json::Map<String, Value> = entries
        .iter()
        .map(|(n, f)| {
            let pairs: Vec<Value> = f.factors().iter().map(|(p, e)| json!([s(p), e])).collect();
            (s(n), Value::Array(pairs))
        })
        .collect();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    serde_json::to_writer_pretty(&mut tmp, &map)?;
    writeln!(tmp)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs the command line `args` (program name first). Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    if let Some(w) = cli.workers {
        init_workers(w.max(1));
    }
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };

    let path = cache_path(cli.cache.as_deref());
    let loaded = cache_load(&path, err).unwrap_or_else(|e| {
        let _ = writeln!(err, "warning: ignoring cache {}: {e}", path.display());
        BTreeMap::new()
    });
    numthy::cache_insert(loaded.clone());

    let code = match execute(&cli.command, exec, cli.seed) {
        Ok(report) => match write_report(out, cli.format, &report) {
            Ok(()) => report.code,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_ERROR
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    };

    let current = numthy::cache_entries();
    if current != loaded {
        if let Err(e) = cache_store(&path, &current) {
            let _ = writeln!(err, "warning: could not write cache {}: {e}", path.display());
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let mut warn = Vec::new();
        assert!(cache_load(&path, &mut warn).unwrap().is_empty());
        let mut entries = BTreeMap::new();
        entries.insert(Nat::from(15u32), numthy::factor(&Nat::from(15u32)).unwrap());
        entries.insert(Nat::from(1023u32), numthy::factor(&Nat::from(1023u32)).unwrap());
        cache_store(&path, &entries).unwrap();
        assert_eq!(cache_load(&path, &mut warn).unwrap(), entries);
        assert!(warn.is_empty());
    }

    #[test]
    fn corrupted_entries_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"15": [[3,1]], "21": [["3",1],[7,1]], "16": [[4,2]], "x": []}"#).unwrap();
        let mut warn = Vec::new();
        let got = cache_load(&path, &mut warn).unwrap();
        assert_eq!(got.keys().cloned().collect::<Vec<_>>(), vec![Nat::from(21u32)]);
        let warn = String::from_utf8(warn).unwrap();
        assert_eq!(warn.lines().count(), 3);
        assert!(warn.contains("\"15\""));
    }

    #[test]
    fn cache_path_prefers_flag() {
        assert_eq!(cache_path(Some(Path::new("a.json"))), PathBuf::from("a.json"));
    }
}
