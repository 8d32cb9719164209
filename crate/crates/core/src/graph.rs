//! Signed-graph data model, dataset ingestion and train/test splitting.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Sign::Positive
    }

    /// Sign of a non-zero number; `None` for zero or NaN.
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Positive)
        } else if x < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn product(self, other: Sign) -> Sign {
        if self == other {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Positive),
            -1 => Ok(Sign::Negative),
            other => Err(format!("sign must be 1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A signed node pair. Raw records straight from a file may be self loops;
/// every sample inside a [`SignedGraph`] or [`DatasetSplit`] has `u != v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeSample {
    pub u: usize,
    pub v: usize,
    pub sign: Sign,
}

impl EdgeSample {
    pub fn new(u: usize, v: usize, sign: Sign) -> Result<Self> {
        if u == v {
            return Err(Error::InvalidArgument(format!("self loop on node {u}")));
        }
        Ok(EdgeSample { u, v, sign })
    }

    /// Unordered pair key `(min, max)`.
    pub fn key(&self) -> (usize, usize) {
        if self.u < self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }

    pub fn canonical(&self) -> EdgeSample {
        let (u, v) = self.key();
        EdgeSample { u, v, sign: self.sign }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `source,target,rating[,time]` with an optional header row.
    RatingCsv,
    /// Whitespace separated `source target sign`.
    SignTsv,
}

impl DatasetFormat {
    /// Guesses the format from the file name: `.csv` / `.csv.gz` are ratings,
    /// everything else is treated as whitespace-separated signs.
    pub fn infer(path: &Path) -> DatasetFormat {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".csv") {
            DatasetFormat::RatingCsv
        } else {
            DatasetFormat::SignTsv
        }
    }
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rating-csv" | "csv" => Ok(DatasetFormat::RatingCsv),
            "sign-tsv" | "tsv" => Ok(DatasetFormat::SignTsv),
            other => Err(Error::InvalidArgument(format!("unknown dataset format `{other}`"))),
        }
    }
}

/// Raw directed records loaded from a file, with ids densified to `0..n`.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub path: PathBuf,
    pub records: Vec<EdgeSample>,
    /// Original node label for each dense id, in first-seen order.
    pub node_labels: Vec<String>,
    pub zero_rating_dropped: usize,
}

impl EdgeList {
    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn positive_records(&self) -> usize {
        self.records.iter().filter(|e| e.sign.is_positive()).count()
    }

    pub fn negative_records(&self) -> usize {
        self.records.len() - self.positive_records()
    }
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|ext| ext == "gz");
    let reader: Box<dyn Read> = if gz {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

pub fn load_edge_list(path: &Path, format: DatasetFormat) -> Result<EdgeList> {
    let reader = open_maybe_gz(path)?;
    parse_edge_list(reader, path, format)
}

pub(crate) fn parse_edge_list(
    reader: impl BufRead,
    path: &Path,
    format: DatasetFormat,
) -> Result<EdgeList> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut records = Vec::new();
    let mut zero_dropped = 0usize;
    let mut seen_data = false;

    let mut intern = |label: &str| -> usize {
        if let Some(&id) = ids.get(label) {
            return id;
        }
        let id = labels.len();
        labels.push(label.to_string());
        ids.insert(label.to_string(), id);
        id
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = match format {
            DatasetFormat::RatingCsv => line.split(',').map(str::trim).collect(),
            DatasetFormat::SignTsv => line.split_whitespace().collect(),
        };
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let min_fields = 3;
        let max_fields = match format {
            DatasetFormat::RatingCsv => 4,
            DatasetFormat::SignTsv => 3,
        };
        if fields.len() < min_fields || fields.len() > max_fields {
            return Err(parse_err(format!(
                "expected {min_fields}..={max_fields} fields, found {}",
                fields.len()
            )));
        }
        let value: f64 = match fields[2].parse() {
            Ok(v) => v,
            Err(_) if !seen_data && format == DatasetFormat::RatingCsv => {
                // header row
                seen_data = true;
                continue;
            }
            Err(_) => return Err(parse_err(format!("bad sign/rating `{}`", fields[2]))),
        };
        if !value.is_finite() {
            return Err(parse_err(format!("bad sign/rating `{}`", fields[2])));
        }
        if format == DatasetFormat::SignTsv && value.abs() != 1.0 && value != 0.0 {
            return Err(parse_err(format!("sign must be 1 or -1, got `{}`", fields[2])));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_err("empty node id".into()));
        }
        seen_data = true;
        let Some(sign) = Sign::of(value) else {
            zero_dropped += 1;
            continue;
        };
        let u = intern(fields[0]);
        let v = intern(fields[1]);
        records.push(EdgeSample { u, v, sign });
    }

    if records.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    if zero_dropped > 0 {
        log::info!("{}: dropped {zero_dropped} zero-rated rows", path.display());
    }
    Ok(EdgeList {
        path: path.to_path_buf(),
        records,
        node_labels: labels,
        zero_rating_dropped: zero_dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    /// Keep sign(sum of record signs) per unordered pair; drop pairs summing to zero.
    #[default]
    SumSign,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub records: usize,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
    pub conflicts_dropped: usize,
    pub edges: usize,
}

/// Undirected signed graph with sorted adjacency. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    num_nodes: usize,
    adjacency: Vec<Vec<(usize, Sign)>>,
    pos_neighbors: Vec<Vec<usize>>,
    neg_neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

/// Symmetrizes and deduplicates raw records into a [`SignedGraph`].
pub fn build_graph(
    num_nodes: usize,
    records: &[EdgeSample],
    policy: ConflictPolicy,
) -> (SignedGraph, BuildReport) {
    let mut report = BuildReport {
        records: records.len(),
        ..Default::default()
    };
    let mut sums: BTreeMap<(usize, usize), (i64, usize)> = BTreeMap::new();
    for rec in records {
        if rec.u == rec.v {
            report.self_loops_dropped += 1;
            continue;
        }
        let entry = sums.entry(rec.key()).or_insert((0, 0));
        entry.0 += rec.sign.value() as i64;
        entry.1 += 1;
    }
    let mut edges = Vec::with_capacity(sums.len());
    match policy {
        ConflictPolicy::SumSign => {
            for ((u, v), (sum, count)) in sums {
                report.duplicates_collapsed += count - 1;
                match Sign::of(sum as f64) {
                    Some(sign) => edges.push(EdgeSample { u, v, sign }),
                    None => report.conflicts_dropped += 1,
                }
            }
        }
    }
    if report.conflicts_dropped > 0 {
        log::info!("dropped {} pairs with conflicting signs", report.conflicts_dropped);
    }
    report.edges = edges.len();
    let n = num_nodes.max(edges.iter().map(|e| e.v + 1).max().unwrap_or(0));
    let graph = SignedGraph::assemble(n, &edges);
    (graph, report)
}

impl SignedGraph {
    /// Builds a graph from clean samples: no self loops and at most one
    /// record per unordered pair.
    pub fn from_edges(num_nodes: usize, edges: &[EdgeSample]) -> Result<SignedGraph> {
        let mut keyed: Vec<EdgeSample> = Vec::with_capacity(edges.len());
        for e in edges {
            if e.u == e.v {
                return Err(Error::InvalidArgument(format!("self loop on node {}", e.u)));
            }
            if e.u >= num_nodes || e.v >= num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) out of range for {num_nodes} nodes",
                    e.u, e.v
                )));
            }
            keyed.push(e.canonical());
        }
        keyed.sort();
        if let Some(w) = keyed.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate pair ({}, {})",
                w[0].u, w[0].v
            )));
        }
        Ok(SignedGraph::assemble(num_nodes, &keyed))
    }

    fn assemble(num_nodes: usize, edges: &[EdgeSample]) -> SignedGraph {
        let mut adjacency = vec![Vec::new(); num_nodes];
        for e in edges {
            adjacency[e.u].push((e.v, e.sign));
            adjacency[e.v].push((e.u, e.sign));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(j, _)| j);
        }
        let split = |want: Sign| -> Vec<Vec<usize>> {
            adjacency
                .iter()
                .map(|l| l.iter().filter(|(_, s)| *s == want).map(|&(j, _)| j).collect())
                .collect()
        };
        let pos_neighbors = split(Sign::Positive);
        let neg_neighbors = split(Sign::Negative);
        SignedGraph {
            num_nodes,
            adjacency,
            pos_neighbors,
            neg_neighbors,
            edge_count: edges.len(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// All neighbors of `i` with the sign of the connecting edge, sorted by id.
    pub fn neighbors(&self, i: usize) -> &[(usize, Sign)] {
        &self.adjacency[i]
    }

    pub fn pos_neighbors(&self, i: usize) -> &[usize] {
        &self.pos_neighbors[i]
    }

    pub fn neg_neighbors(&self, i: usize) -> &[usize] {
        &self.neg_neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn sign(&self, u: usize, v: usize) -> Option<Sign> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(j, _)| j)
            .ok()
            .map(|idx| list[idx].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.sign(u, v).is_some()
    }

    /// Every edge once, as `(min, max, sign)` in lexicographic order.
    pub fn edges(&self) -> Vec<EdgeSample> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, list) in self.adjacency.iter().enumerate() {
            for &(v, sign) in list.iter().filter(|&&(v, _)| v > u) {
                out.push(EdgeSample { u, v, sign });
            }
        }
        out
    }

    pub fn positive_edges(&self) -> usize {
        self.pos_neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn negative_edges(&self) -> usize {
        self.edge_count - self.positive_edges()
    }

    /// Density over directed records: each undirected edge counts twice.
    pub fn density(&self) -> Result<f64> {
        density(self.num_nodes, 2 * self.edge_count)
    }
}

/// `records / (n (n - 1))`.
pub fn density(num_nodes: usize, records: usize) -> Result<f64> {
    if num_nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "density needs at least 2 nodes, got {num_nodes}"
        )));
    }
    let n = num_nodes as f64;
    Ok(records as f64 / (n * (n - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<EdgeSample>,
    pub test: Vec<EdgeSample>,
    pub seed: u64,
}

/// Number of items in the leading `ratio` fraction of `n`, rounded up.
pub(crate) fn ceil_fraction(ratio: f64, n: usize) -> usize {
    let raw = ratio * n as f64;
    // 0.3 * 10 must give 3, not 4
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (k as usize).min(n)
}

pub fn split_train_test(edges: &[EdgeSample], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    if edges.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 edges to split, got {}",
            edges.len()
        )));
    }
    let mut shuffled = edges.to_vec();
    shuffled.shuffle(&mut rng_from_seed(seed));
    let n_train = ceil_fraction(ratio, edges.len()).clamp(1, edges.len() - 1);
    let test = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        test,
        seed,
    })
}

/// Writes `source<TAB>target<TAB>sign` lines, mapping ids through `labels`
/// when given.
pub fn write_sign_tsv<W: Write>(edges: &[EdgeSample], labels: Option<&[String]>, mut out: W) -> std::io::Result<()> {
    for e in edges {
        match labels {
            Some(l) => writeln!(out, "{}\t{}\t{}", l[e.u], l[e.v], e.sign.value())?,
            None => writeln!(out, "{}\t{}\t{}", e.u, e.v, e.sign.value())?,
        }
    }
    out.flush()
}

/// Summary row printed by `sigaug stats`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    /// Directed records as read from the file (zero ratings excluded).
    pub links: usize,
    pub positive_links: usize,
    pub negative_links: usize,
    /// Density over raw records.
    pub density: f64,
    pub undirected_edges: usize,
    pub positive_edges: usize,
    pub negative_edges: usize,
    /// Density of the symmetrized graph (each edge counted in both directions).
    pub graph_density: f64,
    pub zero_rating_dropped: usize,
    pub build: BuildReport,
}

impl GraphStats {
    pub fn compute(list: &EdgeList, graph: &SignedGraph, build: &BuildReport) -> Result<GraphStats> {
        Ok(GraphStats {
            nodes: list.num_nodes(),
            links: list.records.len(),
            positive_links: list.positive_records(),
            negative_links: list.negative_records(),
            density: density(list.num_nodes(), list.records.len())?,
            undirected_edges: graph.edge_count(),
            positive_edges: graph.positive_edges(),
            negative_edges: graph.negative_edges(),
            graph_density: graph.density()?,
            zero_rating_dropped: list.zero_rating_dropped,
            build: build.clone(),
        })
    }
}
