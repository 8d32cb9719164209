//! Dataset resolution and loading.

use std::env;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{build_graph, EdgeSample, load_edge_list, BuildReport, ConflictPolicy, DatasetFormat, EdgeList, SignedGraph};

pub const DATA_DIR_ENV: &str = "SIGAUG_DATA_DIR";

/// Known public signed networks and their distribution file stems.
pub const KNOWN_DATASETS: &[(&str, &str, DatasetFormat)] = &[
    ("bitcoin-alpha", "soc-sign-bitcoinalpha.csv", DatasetFormat::RatingCsv),
    ("bitcoin-otc", "soc-sign-bitcoinotc.csv", DatasetFormat::RatingCsv),
    ("epinions", "soc-sign-epinions.txt", DatasetFormat::SignTsv),
    ("slashdot", "soc-sign-Slashdot090221.txt", DatasetFormat::SignTsv),
];

pub fn default_data_dir() -> PathBuf {
    env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("datasets"))
}

/// Maps a dataset name or path to a file and format. Names look for the
/// file (optionally gzipped) under `data_dir`.
pub fn resolve_dataset(spec: &str, data_dir: &Path) -> Result<(PathBuf, DatasetFormat)> {
    if let Some((_, file, format)) = KNOWN_DATASETS.iter().find(|(name, _, _)| *name == spec) {
        for candidate in [data_dir.join(file), data_dir.join(format!("{file}.gz"))] {
            if candidate.is_file() {
                return Ok((candidate, *format));
            }
        }
        return Err(Error::io(
            data_dir.join(file),
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("dataset `{spec}` not found; see datasets/README.md for download instructions"),
            ),
        ));
    }
    let path = PathBuf::from(spec);
    let format = DatasetFormat::infer(&path);
    Ok((path, format))
}

/// A loaded dataset: raw records and the symmetrized graph built from them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub list: EdgeList,
    pub graph: SignedGraph,
    pub build: BuildReport,
}

impl Dataset {
    pub fn load(path: &Path, format: DatasetFormat) -> Result<Dataset> {
        let list = load_edge_list(path, format)?;
        let (graph, build) = build_graph(list.num_nodes(), &list.records, ConflictPolicy::SumSign);
        if graph.edge_count() == 0 {
            return Err(Error::EmptyInput(path.to_path_buf()));
        }
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Dataset { name, list, graph, build })
    }

    /// Wraps an in-memory edge list; ids are used as labels.
    pub fn from_edges(name: &str, num_nodes: usize, edges: &[EdgeSample]) -> Dataset {
        let list = EdgeList {
            path: PathBuf::from(name),
            records: edges.to_vec(),
            node_labels: (0..num_nodes).map(|i| i.to_string()).collect(),
            zero_rating_dropped: 0,
        };
        let (graph, build) = build_graph(num_nodes, edges, ConflictPolicy::SumSign);
        Dataset { name: name.to_string(), list, graph, build }
    }

    /// Resolves `spec` (name or path) and loads it. An explicit format wins
    /// over the inferred one.
    pub fn open(spec: &str, format: Option<DatasetFormat>, data_dir: &Path) -> Result<Dataset> {
        let (path, inferred) = resolve_dataset(spec, data_dir)?;
        let mut ds = Dataset::load(&path, format.unwrap_or(inferred))?;
        if KNOWN_DATASETS.iter().any(|(name, _, _)| *name == spec) {
            ds.name = spec.to_string();
        }
        Ok(ds)
    }
}
