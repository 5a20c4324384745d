//! Adjacency-matrix representation, edge-list ingestion/export, and degree
//! statistics.
//!
//! The matrix is binary, symmetric, and has a zero diagonal (self-loops are
//! excluded from the model). Storage is dense row-major bytes up to
//! [`DENSE_THRESHOLD`] nodes and sorted neighbor lists above; desk-scale
//! experiments stay dense and fast. Matrices are immutable after
//! construction and safe to share across threads.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::{Error, Result};

/// Node counts up to this bound use dense storage.
pub const DENSE_THRESHOLD: usize = 4096;

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major n*n bytes, entries 0 or 1.
    Dense(Vec<u8>),
    /// Sorted neighbor list per node.
    Sparse(Vec<Vec<u32>>),
}

/// Symmetric 0/1 adjacency matrix with zero diagonal.
#[derive(Debug, Clone)]
pub struct AdjacencyMatrix {
    n: usize,
    edge_count: usize,
    storage: Storage,
}

/// Degree summary of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    /// `(1/n) * sum_ij A[i][j]`, i.e. twice the edge count over n.
    pub avg_degree: f64,
    pub median_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
}

/// Result of parsing an edge list.
#[derive(Debug)]
pub struct LoadedEdgeList {
    pub matrix: AdjacencyMatrix,
    /// Self-loop lines dropped during ingestion (the model forbids them).
    pub self_loops_dropped: usize,
}

impl AdjacencyMatrix {
    /// Build from an iterator of undirected edges. Self-loops are ignored,
    /// duplicates collapse to a single edge.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = Self::empty(n);
        for (i, j) in edges {
            if i >= n {
                return Err(Error::IndexOutOfBounds { index: i, size: n });
            }
            if j >= n {
                return Err(Error::IndexOutOfBounds { index: j, size: n });
            }
            if i != j {
                m.insert(i, j);
            }
        }
        m.finalize();
        Ok(m)
    }

    /// Graph with n nodes and no edges.
    pub fn empty(n: usize) -> Self {
        let storage = if n <= DENSE_THRESHOLD {
            Storage::Dense(vec![0u8; n * n])
        } else {
            Storage::Sparse(vec![Vec::new(); n])
        };
        AdjacencyMatrix {
            n,
            edge_count: 0,
            storage,
        }
    }

    fn insert(&mut self, i: usize, j: usize) {
        match &mut self.storage {
            Storage::Dense(bytes) => {
                if bytes[i * self.n + j] == 0 {
                    bytes[i * self.n + j] = 1;
                    bytes[j * self.n + i] = 1;
                    self.edge_count += 1;
                }
            }
            Storage::Sparse(adj) => {
                // Dedup at finalize; track count there as well.
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            }
        }
    }

    fn finalize(&mut self) {
        if let Storage::Sparse(adj) = &mut self.storage {
            let mut count = 0usize;
            for (i, list) in adj.iter_mut().enumerate() {
                list.sort_unstable();
                list.dedup();
                count += list.iter().filter(|&&j| (j as usize) > i).count();
            }
            self.edge_count = count;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.n && j < self.n);
        match &self.storage {
            Storage::Dense(bytes) => bytes[i * self.n + j] != 0,
            Storage::Sparse(adj) => adj[i].binary_search(&(j as u32)).is_ok(),
        }
    }

    /// Entry as 0/1, matching the model's A[i][j].
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.has_edge(i, j) as u8
    }

    pub fn degree(&self, i: usize) -> usize {
        match &self.storage {
            Storage::Dense(bytes) => bytes[i * self.n..(i + 1) * self.n]
                .iter()
                .map(|&b| b as usize)
                .sum(),
            Storage::Sparse(adj) => adj[i].len(),
        }
    }

    /// Neighbors of node `i` in increasing order.
    pub fn neighbors(&self, i: usize) -> Neighbors<'_> {
        match &self.storage {
            Storage::Dense(bytes) => Neighbors::Dense {
                row: &bytes[i * self.n..(i + 1) * self.n],
                pos: 0,
            },
            Storage::Sparse(adj) => Neighbors::Sparse {
                iter: adj[i].iter(),
            },
        }
    }

    /// Dense row of 0/1 bytes. Only available in dense storage; used by hot
    /// loops that scan whole rows.
    pub(crate) fn dense_row(&self, i: usize) -> Option<&[u8]> {
        match &self.storage {
            Storage::Dense(bytes) => Some(&bytes[i * self.n..(i + 1) * self.n]),
            Storage::Sparse(_) => None,
        }
    }

    /// All edges as (i, j) pairs with i < j, lexicographically sorted.
    pub fn edge_list(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count);
        match &self.storage {
            Storage::Dense(bytes) => {
                for i in 0..self.n {
                    let row = &bytes[i * self.n..(i + 1) * self.n];
                    for (j, &b) in row.iter().enumerate().skip(i + 1) {
                        if b != 0 {
                            out.push((i as u32, j as u32));
                        }
                    }
                }
            }
            Storage::Sparse(adj) => {
                for (i, list) in adj.iter().enumerate() {
                    let i32 = i as u32;
                    for &j in list.iter().filter(|&&j| j > i32) {
                        out.push((i32, j));
                    }
                }
            }
        }
        out
    }

    pub fn degree_stats(&self) -> DegreeStats {
        degree_stats(self)
    }

    /// The (n-1) x (n-1) matrix with row and column `i` removed. Indices
    /// shift down by one past the removed node; see [`minor_to_parent`].
    pub fn minor(&self, i: usize) -> Result<AdjacencyMatrix> {
        if i >= self.n {
            return Err(Error::IndexOutOfBounds {
                index: i,
                size: self.n,
            });
        }
        let m = self.n - 1;
        let mut out = AdjacencyMatrix::empty(m);
        for (a, b) in self.edge_list() {
            let (a, b) = (a as usize, b as usize);
            if a == i || b == i {
                continue;
            }
            let a2 = if a > i { a - 1 } else { a };
            let b2 = if b > i { b - 1 } else { b };
            out.insert(a2, b2);
        }
        out.finalize();
        Ok(out)
    }

    /// Write as an edge list, one `i<TAB>j` line per edge with i < j.
    pub fn write_edge_list<W: Write>(&self, mut w: W, one_indexed: bool) -> Result<()> {
        let off = one_indexed as usize;
        for (i, j) in self.edge_list() {
            writeln!(w, "{}\t{}", i as usize + off, j as usize + off)?;
        }
        Ok(())
    }

    pub fn save_edge_list<P: AsRef<Path>>(&self, path: P, one_indexed: bool) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(f), one_indexed)
    }
}

/// Maps an index of the minor `A^(-i)` back to the parent matrix.
pub fn minor_to_parent(removed: usize, idx: usize) -> usize {
    if idx < removed {
        idx
    } else {
        idx + 1
    }
}

/// Iterator over the neighbor set of one node.
pub enum Neighbors<'a> {
    Dense { row: &'a [u8], pos: usize },
    Sparse { iter: std::slice::Iter<'a, u32> },
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::Dense { row, pos } => {
                while *pos < row.len() {
                    let j = *pos;
                    *pos += 1;
                    if row[j] != 0 {
                        return Some(j);
                    }
                }
                None
            }
            Neighbors::Sparse { iter } => iter.next().map(|&j| j as usize),
        }
    }
}

/// Degree statistics of a matrix.
pub fn degree_stats(a: &AdjacencyMatrix) -> DegreeStats {
    let n = a.n();
    if n == 0 {
        return DegreeStats {
            avg_degree: 0.0,
            median_degree: 0.0,
            min_degree: 0,
            max_degree: 0,
        };
    }
    let mut degrees: Vec<usize> = (0..n).map(|i| a.degree(i)).collect();
    degrees.sort_unstable();
    let median = if n % 2 == 1 {
        degrees[n / 2] as f64
    } else {
        (degrees[n / 2 - 1] + degrees[n / 2]) as f64 / 2.0
    };
    DegreeStats {
        avg_degree: 2.0 * a.edge_count() as f64 / n as f64,
        median_degree: median,
        min_degree: degrees[0],
        max_degree: degrees[n - 1],
    }
}

/// Parse an edge list: one edge per line, `i<TAB-or-space>j`.
///
/// Duplicate edges collapse to one; self-loops are dropped and counted.
/// With `n_hint = None` the node count is inferred as max id + 1. Blank
/// lines are skipped.
pub fn load_edge_list<R: BufRead>(
    reader: R,
    n_hint: Option<usize>,
    one_indexed: bool,
) -> Result<LoadedEdgeList> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut self_loops = 0usize;
    let mut max_id = 0usize;
    let mut saw_any = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_1 = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let a = parse_id(it.next(), line_1, trimmed)?;
        let b = parse_id(it.next(), line_1, trimmed)?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: line_1,
                msg: format!("expected two node ids, got extra fields in {trimmed:?}"),
            });
        }
        let (a, b) = if one_indexed {
            let shift = |id: usize| -> Result<usize> {
                id.checked_sub(1).ok_or(Error::NodeOutOfRange {
                    id,
                    n: n_hint.unwrap_or(0),
                    line: line_1,
                })
            };
            (shift(a)?, shift(b)?)
        } else {
            (a, b)
        };
        if let Some(n) = n_hint {
            if a >= n {
                return Err(Error::NodeOutOfRange { id: a, n, line: line_1 });
            }
            if b >= n {
                return Err(Error::NodeOutOfRange { id: b, n, line: line_1 });
            }
        }
        if a == b {
            self_loops += 1;
            saw_any = true;
            max_id = max_id.max(a);
            continue;
        }
        max_id = max_id.max(a).max(b);
        saw_any = true;
        pairs.push((a, b));
    }

    let n = n_hint.unwrap_or(if saw_any { max_id + 1 } else { 0 });
    let matrix = AdjacencyMatrix::from_edges(n, pairs)?;
    Ok(LoadedEdgeList {
        matrix,
        self_loops_dropped: self_loops,
    })
}

pub fn load_edge_list_path<P: AsRef<Path>>(
    path: P,
    n_hint: Option<usize>,
    one_indexed: bool,
) -> Result<LoadedEdgeList> {
    let f = std::fs::File::open(path)?;
    load_edge_list(BufReader::new(f), n_hint, one_indexed)
}

fn parse_id(field: Option<&str>, line: usize, ctx: &str) -> Result<usize> {
    let field = field.ok_or_else(|| Error::Parse {
        line,
        msg: format!("expected two node ids in {ctx:?}"),
    })?;
    field.parse::<usize>().map_err(|e| Error::Parse {
        line,
        msg: format!("bad node id {field:?}: {e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> AdjacencyMatrix {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        AdjacencyMatrix::from_edges(n, edges).unwrap()
    }

    #[test]
    fn parses_two_edges() {
        let loaded = load_edge_list("0 1\n1 2\n".as_bytes(), Some(3), false).unwrap();
        let m = &loaded.matrix;
        assert_eq!(m.n(), 3);
        assert_eq!(m.edge_count(), 2);
        assert!(m.has_edge(0, 1) && m.has_edge(1, 0));
        assert!(m.has_edge(1, 2) && m.has_edge(2, 1));
        assert!(!m.has_edge(0, 2));
        let degs: Vec<_> = (0..3).map(|i| m.degree(i)).collect();
        assert_eq!(degs, vec![1, 2, 1]);
        assert_eq!(loaded.self_loops_dropped, 0);
    }

    #[test]
    fn drops_self_loops_with_count() {
        let loaded = load_edge_list("0 0\n".as_bytes(), Some(1), false).unwrap();
        assert_eq!(loaded.matrix.n(), 1);
        assert_eq!(loaded.matrix.edge_count(), 0);
        assert_eq!(loaded.self_loops_dropped, 1);
    }

    #[test]
    fn collapses_duplicates_like_a_set_loader() {
        // Reference loader: a plain set of normalized pairs.
        let input = "0 1\n1 0\n";
        let mut set = std::collections::BTreeSet::new();
        for line in input.lines() {
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            let (a, b) = (v[0].min(v[1]), v[0].max(v[1]));
            if a != b {
                set.insert((a, b));
            }
        }
        let loaded = load_edge_list(input.as_bytes(), Some(2), false).unwrap();
        let got: Vec<(u32, u32)> = loaded.matrix.edge_list();
        let want: Vec<(u32, u32)> = set.iter().map(|&(a, b)| (a as u32, b as u32)).collect();
        assert_eq!(got, want);
        assert_eq!(loaded.matrix.edge_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load_edge_list("0 1\nbogus\n".as_bytes(), Some(3), false).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn out_of_range_id_is_an_error() {
        let err = load_edge_list("0 5\n".as_bytes(), Some(3), false).unwrap_err();
        match err {
            Error::NodeOutOfRange { id, n, line } => {
                assert_eq!((id, n, line), (5, 3, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn one_indexed_parsing_shifts_ids() {
        let loaded = load_edge_list("1 2\n2 3\n".as_bytes(), Some(3), true).unwrap();
        assert!(loaded.matrix.has_edge(0, 1));
        assert!(loaded.matrix.has_edge(1, 2));
        let err = load_edge_list("0 1\n".as_bytes(), Some(3), true).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfRange { id: 0, .. }));
    }

    #[test]
    fn infers_n_without_hint() {
        let loaded = load_edge_list("0 7\n".as_bytes(), None, false).unwrap();
        assert_eq!(loaded.matrix.n(), 8);
    }

    #[test]
    fn degree_stats_complete_graph() {
        let stats = complete(4).degree_stats();
        assert_eq!(stats.avg_degree, 3.0);
        assert_eq!(stats.median_degree, 3.0);
        assert_eq!(stats.min_degree, 3);
        assert_eq!(stats.max_degree, 3);
    }

    #[test]
    fn degree_stats_empty_graph() {
        let stats = AdjacencyMatrix::empty(5).degree_stats();
        assert_eq!(stats.avg_degree, 0.0);
        assert_eq!(stats.median_degree, 0.0);
        assert_eq!(stats.max_degree, 0);
    }

    #[test]
    fn load_is_order_invariant() {
        let a = load_edge_list("0 1\n2 3\n1 2\n".as_bytes(), Some(4), false).unwrap();
        let b = load_edge_list("1 2\n2 3\n0 1\n".as_bytes(), Some(4), false).unwrap();
        assert_eq!(a.matrix.edge_list(), b.matrix.edge_list());
    }

    #[test]
    fn export_then_load_round_trips() {
        let m = AdjacencyMatrix::from_edges(5, vec![(0, 3), (1, 2), (3, 4)]).unwrap();
        let mut buf = Vec::new();
        m.write_edge_list(&mut buf, false).unwrap();
        let back = load_edge_list(&buf[..], Some(5), false).unwrap();
        assert_eq!(back.matrix.edge_list(), m.edge_list());
    }

    #[test]
    fn minor_of_two_node_graph() {
        let m = AdjacencyMatrix::from_edges(2, vec![(0, 1)]).unwrap();
        let minor = m.minor(0).unwrap();
        assert_eq!(minor.n(), 1);
        assert_eq!(minor.edge_count(), 0);
    }

    #[test]
    fn minor_of_triangle_is_an_edge() {
        let k3 = complete(3);
        for i in 0..3 {
            let minor = k3.minor(i).unwrap();
            assert_eq!(minor.n(), 2);
            assert_eq!(minor.edge_count(), 1);
            assert!(minor.has_edge(0, 1));
        }
    }

    #[test]
    fn minor_matches_index_map_exhaustively() {
        // Pseudo-random n=10 graph, fixed pattern.
        let n = 10;
        let edges: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (i * 7 + j * 13) % 3 == 0)
            .collect();
        let m = AdjacencyMatrix::from_edges(n, edges).unwrap();
        for removed in 0..n {
            let minor = m.minor(removed).unwrap();
            for a in 0..n - 1 {
                for b in 0..n - 1 {
                    let pa = minor_to_parent(removed, a);
                    let pb = minor_to_parent(removed, b);
                    assert_eq!(
                        minor.has_edge(a, b),
                        m.has_edge(pa, pb),
                        "removed={removed} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn minor_out_of_range() {
        let m = AdjacencyMatrix::empty(3);
        assert!(m.minor(3).is_err());
    }

    #[test]
    fn sparse_storage_above_threshold() {
        let n = DENSE_THRESHOLD + 1;
        let m = AdjacencyMatrix::from_edges(n, vec![(0, n - 1), (0, n - 1), (5, 9)]).unwrap();
        assert_eq!(m.edge_count(), 2);
        assert!(m.has_edge(n - 1, 0));
        assert_eq!(m.degree(0), 1);
        assert_eq!(m.neighbors(5).collect::<Vec<_>>(), vec![9]);
    }
}
