//! File output for every pipeline artifact: matrices (CSV and a compact
//! binary form), partitions, embeddings, rankings, graphs, datasets, and
//! JSON reports. All writes are atomic (temp file + rename) so concurrent
//! runs never expose half-written files.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::clustering::{Partition, SpectralEmbedding};
use crate::dataset::{read_numeric_csv, Dataset};
use crate::error::{Error, Result};
use crate::graph::KnnGraph;
use crate::retrieval::RankingResult;

const MATRIX_MAGIC: &[u8; 8] = b"E2CPF*01";

fn io_err(path: &str) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.into(),
        source,
    }
}

/// Write `content` to `path` atomically: the bytes land in a temp file in
/// the target directory, then replace the target in one rename.
pub fn atomic_write(path: &str, content: &[u8]) -> Result<()> {
    let target = Path::new(path);
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(io_err(path))?;
    tmp.write_all(content).map_err(io_err(path))?;
    tmp.persist(target)
        .map_err(|e| Error::Io {
            path: path.into(),
            source: e.error,
        })
        .map(|_| ())
}

/// Matrix as headerless CSV, one row per line.
pub fn write_matrix_csv(path: &str, m: &Array2<f64>) -> Result<()> {
    let mut text = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Read a headerless numeric CSV as a dense matrix.
pub fn read_matrix_csv(path: &str) -> Result<Array2<f64>> {
    let rows = read_numeric_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            msg: "matrix file has no rows".into(),
        });
    }
    let (n, m) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, m), flat)
        .map_err(|e| Error::InvalidInput(format!("matrix shape error in {path}: {e}")))
}

/// Matrix in the compact binary form: an 8-byte magic, row and column
/// counts as little-endian u32, then row-major little-endian f64 values.
pub fn write_matrix_binary(path: &str, m: &Array2<f64>) -> Result<()> {
    let (rows, cols) = m.dim();
    let mut buf = Vec::with_capacity(16 + 8 * rows * cols);
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.extend_from_slice(&u32::try_from(rows)
        .map_err(|_| Error::InvalidInput(format!("{rows} rows exceed the binary format limit")))?
        .to_le_bytes());
    buf.extend_from_slice(&u32::try_from(cols)
        .map_err(|_| Error::InvalidInput(format!("{cols} cols exceed the binary format limit")))?
        .to_le_bytes());
    for row in m.rows() {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    atomic_write(path, &buf)
}

pub fn read_matrix_binary(path: &str) -> Result<Array2<f64>> {
    let mut file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(io_err(path))?;
    let parse_err = |msg: &str| Error::Parse {
        path: path.into(),
        line: 0,
        msg: msg.into(),
    };
    if bytes.len() < 16 || &bytes[..8] != MATRIX_MAGIC {
        return Err(parse_err("not a matrix binary file (bad magic)"));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = 16 + 8 * rows * cols;
    if bytes.len() != expected {
        return Err(parse_err(&format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::InvalidInput(format!("matrix shape error in {path}: {e}")))
}

/// Cluster assignment as "index,cluster" CSV.
pub fn write_partition_csv(path: &str, p: &Partition) -> Result<()> {
    let mut text = String::from("index,cluster\n");
    for (i, &c) in p.assignment().iter().enumerate() {
        text.push_str(&format!("{i},{c}\n"));
    }
    atomic_write(path, text.as_bytes())
}

/// Embedding rows as "index,e0,e1,..." CSV.
pub fn write_embedding_csv(path: &str, e: &SpectralEmbedding) -> Result<()> {
    let mut header = String::from("index");
    for c in 0..e.dim() {
        header.push_str(&format!(",e{c}"));
    }
    header.push('\n');
    let mut text = header;
    for (i, row) in e.rows().rows().into_iter().enumerate() {
        text.push_str(&i.to_string());
        for v in row {
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Rankings as "query,rank,item,score" CSV with 1-based ranks.
pub fn write_ranking_csv(path: &str, rankings: &[RankingResult]) -> Result<()> {
    let mut text = String::from("query,rank,item,score\n");
    for r in rankings {
        let (_, q) = r.query();
        for (pos, &(item, score)) in r.ranked().iter().enumerate() {
            text.push_str(&format!("{q},{},{item},{score}\n", pos + 1));
        }
    }
    atomic_write(path, text.as_bytes())
}

/// Graph edges as "i,j,w" CSV, upper triangle only (i < j), zero-weight
/// entries skipped; self-loops appear as i = j rows.
pub fn write_edge_list_csv(path: &str, g: &KnnGraph) -> Result<()> {
    let mut text = String::from("i,j,w\n");
    for i in 0..g.n() {
        for (j, w) in g.weights().row(i) {
            if j >= i && w != 0.0 {
                text.push_str(&format!("{i},{j},{w}\n"));
            }
        }
    }
    atomic_write(path, text.as_bytes())
}

/// Feature rows as CSV, the label appended as a last integer column when
/// present. Readable back with `load_dataset`.
pub fn write_dataset_csv(path: &str, ds: &Dataset) -> Result<()> {
    let mut text = String::new();
    for (i, row) in ds.points.rows().into_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &ds.labels {
            fields.push(labels[i].to_string());
        }
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Pretty-printed JSON for any serializable report.
pub fn write_json<T: Serialize>(path: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    let mut bytes = text.into_bytes();
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::AdjustedAffinity;
    use crate::dataset::KernelMatrix;
    use crate::graph::build_knn_graph;
    use crate::propagation::PropagatedConstraints;
    use crate::retrieval::{rank_cross_modal, RankingDirection};
    use ndarray::arr2;

    fn tmp_path(dir: &tempfile::TempDir, name: &str) -> String {
        dir.path().join(name).to_str().unwrap().to_string()
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "m.csv");
        let m = arr2(&[[1.5, -2.25, 0.0], [1e-9, 3.0, -0.5]]);
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_binary_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "m.bin");
        let m = arr2(&[[0.1, f64::MIN_POSITIVE], [-1.0, 1e300]]);
        write_matrix_binary(&path, &m).unwrap();
        let back = read_matrix_binary(&path).unwrap();
        assert_eq!(back, m);

        let bad = tmp_path(&dir, "bad.bin");
        std::fs::write(&bad, b"NOTMAGIC\x01\x00").unwrap();
        assert!(read_matrix_binary(&bad).is_err());

        // Truncated payload.
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&bad, &bytes[..bytes.len() - 4]).unwrap();
        assert!(read_matrix_binary(&bad).is_err());
    }

    #[test]
    fn partition_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "p.csv");
        let p = Partition::from_labels(&[1, 0, 2]).unwrap();
        write_partition_csv(&path, &p).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "index,cluster\n0,1\n1,0\n2,2\n");
    }

    #[test]
    fn ranking_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "r.csv");
        let f = PropagatedConstraints::from_values(arr2(&[[0.5, -0.25]])).unwrap();
        let r = rank_cross_modal(&f, 0, RankingDirection::XToY).unwrap();
        write_ranking_csv(&path, &[r]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "query,rank,item,score\n0,1,0,0.5\n0,2,1,-0.25\n");
    }

    #[test]
    fn edge_list_covers_upper_triangle() {
        let kernel = KernelMatrix::new(arr2(&[
            [1.0, 0.9, 0.1],
            [0.9, 1.0, 0.8],
            [0.1, 0.8, 1.0],
        ]))
        .unwrap();
        let g = build_knn_graph(&kernel, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "g.csv");
        write_edge_list_csv(&path, &g).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,w"));
        for line in lines {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts.len(), 3);
            let i: usize = parts[0].parse().unwrap();
            let j: usize = parts[1].parse().unwrap();
            assert!(i <= j);
            let w: f64 = parts[2].parse().unwrap();
            assert!((g.weights().get(i, j) - w).abs() < 1e-15);
        }
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "d.csv");
        let ds = Dataset::new(
            arr2(&[[0.5, 1.5], [2.5, 3.5]]),
            Some(vec![0, 1]),
        )
        .unwrap();
        write_dataset_csv(&path, &ds).unwrap();
        let back = crate::dataset::load_dataset(&path, true).unwrap();
        assert_eq!(back.points, ds.points);
        assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn embedding_csv_shape() {
        let kernel = KernelMatrix::new(arr2(&[
            [1.0, 0.9, 0.1, 0.2],
            [0.9, 1.0, 0.2, 0.1],
            [0.1, 0.2, 1.0, 0.9],
            [0.2, 0.1, 0.9, 1.0],
        ]))
        .unwrap();
        let g = build_knn_graph(&kernel, 2).unwrap();
        let e = crate::clustering::spectral_embed(&AdjustedAffinity::from_graph(&g), 2, false)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "e.csv");
        write_embedding_csv(&path, &e).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,e0,e1");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn atomic_write_replaces_existing() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "x.txt");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        // No temp files left behind.
        let extras: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name() != "x.txt")
            .collect();
        assert!(extras.is_empty(), "leftover temp files: {extras:?}");
    }

    #[test]
    fn json_report_writes_and_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = tmp_path(&dir, "r.json");
        let report = crate::metrics::EvaluationReport::single("ari", 0.75, 9);
        write_json(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["metric"], "ari");
        assert_eq!(value["value"], 0.75);
    }
}
