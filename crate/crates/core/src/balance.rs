//! Triangle enumeration and balance-theory measures.
//!
//! A triangle is balanced when the product of its three edge signs is
//! positive. The global balance degree is the balanced fraction of all
//! triangles; the local degree of an edge is `(b - u) / (b + u)` over the
//! triangles containing it, and its difficulty is `(1 - local) / 2`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeSample, Sign, SignedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TriangleStats {
    pub balanced: u64,
    pub unbalanced: u64,
}

impl TriangleStats {
    pub fn total(&self) -> u64 {
        self.balanced + self.unbalanced
    }

    /// `None` when the graph has no triangles.
    pub fn global_balance_degree(&self) -> Option<f64> {
        global_balance_degree(self)
    }
}

pub fn global_balance_degree(stats: &TriangleStats) -> Option<f64> {
    let total = stats.total();
    (total > 0).then(|| stats.balanced as f64 / total as f64)
}

/// Calls `f(k, sign_ik, sign_jk)` for every common neighbour `k` of `i` and `j`
/// with `k > min_k`, scanning both sorted adjacency lists once.
fn for_common_neighbors(
    a: &[(usize, Sign)],
    b: &[(usize, Sign)],
    min_k: Option<usize>,
    mut f: impl FnMut(usize, Sign, Sign),
) {
    let start = |l: &[(usize, Sign)]| match min_k {
        Some(m) => l.partition_point(|&(k, _)| k <= m),
        None => 0,
    };
    let (mut x, mut y) = (start(a), start(b));
    while x < a.len() && y < b.len() {
        let (ka, sa) = a[x];
        let (kb, sb) = b[y];
        match ka.cmp(&kb) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                f(ka, sa, sb);
                x += 1;
                y += 1;
            }
        }
    }
}

/// Counts every triangle once: for each edge `(i, j)` with `i < j`, common
/// neighbours `k > j` close a triangle.
pub fn enumerate_triangles(graph: &SignedGraph) -> TriangleStats {
    (0..graph.num_nodes())
        .into_par_iter()
        .map(|i| {
            let mut stats = TriangleStats::default();
            let ni = graph.neighbors(i);
            for &(j, s_ij) in ni.iter().filter(|&&(j, _)| j > i) {
                for_common_neighbors(ni, graph.neighbors(j), Some(j), |_, s_ik, s_jk| {
                    if s_ij.product(s_ik).product(s_jk).is_positive() {
                        stats.balanced += 1;
                    } else {
                        stats.unbalanced += 1;
                    }
                });
            }
            stats
        })
        .reduce(TriangleStats::default, |a, b| TriangleStats {
            balanced: a.balanced + b.balanced,
            unbalanced: a.unbalanced + b.unbalanced,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeBalanceProfile {
    pub edge: EdgeSample,
    pub balanced_incident: u64,
    pub unbalanced_incident: u64,
    pub local_degree: f64,
    pub difficulty: f64,
}

impl EdgeBalanceProfile {
    /// Edges in no triangle get local degree 1 and difficulty 0.
    pub fn from_counts(edge: EdgeSample, balanced: u64, unbalanced: u64) -> Self {
        let total = balanced + unbalanced;
        let local_degree = if total == 0 {
            1.0
        } else {
            (balanced as f64 - unbalanced as f64) / total as f64
        };
        EdgeBalanceProfile {
            edge,
            balanced_incident: balanced,
            unbalanced_incident: unbalanced,
            local_degree,
            difficulty: (1.0 - local_degree) / 2.0,
        }
    }
}

/// Balanced and unbalanced triangles through the pair `(u, v)` if it carried
/// `sign`, counted over common neighbours in `graph`.
pub fn incident_triangles(graph: &SignedGraph, u: usize, v: usize, sign: Sign) -> (u64, u64) {
    let (mut b, mut ub) = (0, 0);
    for_common_neighbors(graph.neighbors(u), graph.neighbors(v), None, |_, s_uk, s_vk| {
        if sign.product(s_uk).product(s_vk).is_positive() {
            b += 1;
        } else {
            ub += 1;
        }
    });
    (b, ub)
}

pub fn local_balance_degree(graph: &SignedGraph, edge: EdgeSample) -> Result<EdgeBalanceProfile> {
    match graph.sign(edge.u, edge.v) {
        Some(s) if s == edge.sign => {}
        _ => return Err(Error::EdgeNotFound(edge.u, edge.v)),
    }
    let (b, ub) = incident_triangles(graph, edge.u, edge.v, edge.sign);
    Ok(EdgeBalanceProfile::from_counts(edge, b, ub))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub stats: TriangleStats,
    pub profiles: Vec<EdgeBalanceProfile>,
}

/// JSON shape emitted by `balance-report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub bt: u64,
    pub ut: u64,
    /// `null` when there are no triangles.
    pub bd: Option<f64>,
}

impl From<&TriangleStats> for BalanceSummary {
    fn from(s: &TriangleStats) -> Self {
        BalanceSummary {
            bt: s.balanced,
            ut: s.unbalanced,
            bd: s.global_balance_degree(),
        }
    }
}

/// Triangle totals plus a profile for every edge, in `graph.edges()` order.
pub fn balance_report(graph: &SignedGraph) -> BalanceReport {
    let stats = enumerate_triangles(graph);
    let profiles: Vec<EdgeBalanceProfile> = graph
        .edges()
        .into_par_iter()
        .map(|e| {
            let (b, ub) = incident_triangles(graph, e.u, e.v, e.sign);
            EdgeBalanceProfile::from_counts(e, b, ub)
        })
        .collect();
    debug_assert_eq!(
        profiles.iter().map(|p| p.balanced_incident).sum::<u64>(),
        3 * stats.balanced
    );
    BalanceReport { stats, profiles }
}

pub fn write_profiles_csv<W: Write>(profiles: &[EdgeBalanceProfile], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "v", "sign", "b", "ub", "difficulty"])?;
    for p in profiles {
        w.write_record([
            p.edge.u.to_string(),
            p.edge.v.to_string(),
            p.edge.sign.to_string(),
            p.balanced_incident.to_string(),
            p.unbalanced_incident.to_string(),
            p.difficulty.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// O(n^3) scan over all node triples.
    pub fn brute_force_triangles(graph: &SignedGraph) -> TriangleStats {
        let n = graph.num_nodes();
        let mut stats = TriangleStats::default();
        for i in 0..n {
            for j in i + 1..n {
                let Some(a) = graph.sign(i, j) else { continue };
                for k in j + 1..n {
                    let (Some(b), Some(c)) = (graph.sign(i, k), graph.sign(j, k)) else {
                        continue;
                    };
                    if a.value() * b.value() * c.value() > 0 {
                        stats.balanced += 1;
                    } else {
                        stats.unbalanced += 1;
                    }
                }
            }
        }
        stats
    }

    /// Per-edge counts by scanning every third node.
    pub fn brute_force_incident(graph: &SignedGraph, u: usize, v: usize, sign: Sign) -> (u64, u64) {
        let (mut b, mut ub) = (0, 0);
        for k in 0..graph.num_nodes() {
            if k == u || k == v {
                continue;
            }
            if let (Some(x), Some(y)) = (graph.sign(u, k), graph.sign(v, k)) {
                if sign.value() * x.value() * y.value() > 0 {
                    b += 1;
                } else {
                    ub += 1;
                }
            }
        }
        (b, ub)
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn e(u: usize, v: usize, s: i8) -> EdgeSample {
        EdgeSample {
            u,
            v,
            sign: Sign::try_from(s).unwrap(),
        }
    }

    pub(crate) fn random_graph(n: usize, p: f64, p_neg: f64, seed: u64) -> SignedGraph {
        let mut rng = rng_from_seed(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    let s = if rng.gen_bool(p_neg) { -1 } else { 1 };
                    edges.push(e(u, v, s));
                }
            }
        }
        SignedGraph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn single_positive_triangle() {
        let g = SignedGraph::from_edges(3, &[e(0, 1, 1), e(1, 2, 1), e(0, 2, 1)]).unwrap();
        let stats = enumerate_triangles(&g);
        assert_eq!(stats, TriangleStats { balanced: 1, unbalanced: 0 });
        let report = balance_report(&g);
        for p in &report.profiles {
            assert_eq!((p.balanced_incident, p.unbalanced_incident), (1, 0));
            assert_eq!(p.difficulty, 0.0);
        }
    }

    #[test]
    fn four_node_example() {
        // nodes 1..=4 shifted to 0..=3
        let g = SignedGraph::from_edges(
            4,
            &[e(0, 1, 1), e(0, 2, 1), e(1, 2, -1), e(0, 3, 1), e(1, 3, 1)],
        )
        .unwrap();
        let expected = brute_force_triangles(&g);
        assert_eq!(expected, TriangleStats { balanced: 1, unbalanced: 1 });
        assert_eq!(enumerate_triangles(&g), expected);
    }

    #[test]
    fn global_degree_values() {
        let bd = global_balance_degree(&TriangleStats { balanced: 52_126, unbalanced: 6_971 }).unwrap();
        assert!((bd - 0.8820).abs() < 5e-5, "{bd}");
        assert_eq!(global_balance_degree(&TriangleStats { balanced: 7, unbalanced: 0 }), Some(1.0));
        assert_eq!(global_balance_degree(&TriangleStats { balanced: 1, unbalanced: 1 }), Some(0.5));
        assert_eq!(global_balance_degree(&TriangleStats::default()), None);
    }

    #[test]
    fn local_degree_examples() {
        let p = EdgeBalanceProfile::from_counts(e(0, 1, 1), 3, 0);
        assert_eq!((p.local_degree, p.difficulty), (1.0, 0.0));
        let p = EdgeBalanceProfile::from_counts(e(0, 1, 1), 1, 1);
        assert_eq!((p.local_degree, p.difficulty), (0.0, 0.5));
        let p = EdgeBalanceProfile::from_counts(e(0, 1, 1), 1, 3);
        assert_eq!((p.local_degree, p.difficulty), (-0.5, 0.75));
        let p = EdgeBalanceProfile::from_counts(e(0, 1, 1), 0, 0);
        assert_eq!((p.local_degree, p.difficulty), (1.0, 0.0));
    }

    #[test]
    fn local_degree_on_graph() {
        // edge (0,1)+ in triangles with 2 (balanced: +,+) and 3 (unbalanced: +,-)
        let g = SignedGraph::from_edges(
            4,
            &[e(0, 1, 1), e(0, 2, 1), e(1, 2, 1), e(0, 3, 1), e(1, 3, -1)],
        )
        .unwrap();
        let p = local_balance_degree(&g, e(0, 1, 1)).unwrap();
        assert_eq!((p.balanced_incident, p.unbalanced_incident), (1, 1));
        assert_eq!(p.difficulty, 0.5);
        assert!(matches!(local_balance_degree(&g, e(2, 3, 1)), Err(Error::EdgeNotFound(2, 3))));
        assert!(local_balance_degree(&g, e(0, 1, -1)).is_err());
    }

    #[test]
    fn random_graph_incident_sum() {
        let g = random_graph(30, 0.3, 0.3, 11);
        let report = balance_report(&g);
        let oracle = brute_force_triangles(&g);
        assert_eq!(report.stats, oracle);
        let b: u64 = report.profiles.iter().map(|p| p.balanced_incident).sum();
        let ub: u64 = report.profiles.iter().map(|p| p.unbalanced_incident).sum();
        assert_eq!(b, 3 * oracle.balanced);
        assert_eq!(ub, 3 * oracle.unbalanced);
    }

    #[test]
    fn profiles_csv_header() {
        let g = SignedGraph::from_edges(3, &[e(0, 1, 1), e(1, 2, -1), e(0, 2, 1)]).unwrap();
        let mut buf = Vec::new();
        write_profiles_csv(&balance_report(&g).profiles, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("u,v,sign,b,ub,difficulty"));
        assert_eq!(lines.next(), Some("0,1,1,0,1,1"));
    }

    proptest! {
        #[test]
        fn enumeration_matches_brute_force(n in 3usize..40, p in 0.05f64..0.6, seed in 0u64..1_000_000) {
            let g = random_graph(n, p, 0.35, seed);
            prop_assert_eq!(enumerate_triangles(&g), brute_force_triangles(&g));
            for edge in g.edges() {
                let prof = local_balance_degree(&g, edge).unwrap();
                let (b, ub) = brute_force_incident(&g, edge.u, edge.v, edge.sign);
                prop_assert_eq!((prof.balanced_incident, prof.unbalanced_incident), (b, ub));
                prop_assert!((0.0..=1.0).contains(&prof.difficulty));
                prop_assert_eq!(prof.difficulty == 0.0, ub == 0);
            }
        }

        #[test]
        fn flipping_one_edge_flips_parity(seed in 0u64..100_000) {
            let g = random_graph(12, 0.5, 0.3, seed);
            let edges = g.edges();
            prop_assume!(!edges.is_empty());
            let target = edges[(seed as usize) % edges.len()];
            let flipped: Vec<_> = edges
                .iter()
                .map(|x| if *x == target { EdgeSample { sign: x.sign.flipped(), ..*x } } else { *x })
                .collect();
            let h = SignedGraph::from_edges(12, &flipped).unwrap();
            let (b0, u0) = incident_triangles(&g, target.u, target.v, target.sign);
            let (b1, u1) = incident_triangles(&h, target.u, target.v, target.sign.flipped());
            prop_assert_eq!((b0, u0), (u1, b1));
            let before = enumerate_triangles(&g);
            let after = enumerate_triangles(&h);
            prop_assert_eq!(after.balanced, before.balanced - b0 + u0);
        }
    }
}
