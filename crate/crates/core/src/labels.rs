//! Community label vectors.
//!
//! Entries live in `{0, 1, ..., k}`; label 0 marks a node left unassigned by
//! initialization (the zero-L1-row set) and never survives a refinement
//! round.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::{Error, Result};

/// Assignment of each node to a community in `[k]`, with 0 = unassigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<u32>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, k: usize) -> Result<Self> {
        for &l in &labels {
            if l as usize > k {
                return Err(Error::LabelOutOfRange { label: l, k });
            }
        }
        Ok(LabelVector { labels, k })
    }

    /// All nodes unassigned.
    pub fn zeros(n: usize, k: usize) -> Self {
        LabelVector {
            labels: vec![0; n],
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Label of node `i`, in `0..=k`.
    pub fn get(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn set(&mut self, i: usize, label: u32) {
        debug_assert!(label as usize <= self.k);
        self.labels[i] = label;
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u32> {
        self.labels.iter()
    }

    /// Number of nodes with label 0.
    pub fn unassigned_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    /// Per-label node counts, indexed 0..=k.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0usize; self.k + 1];
        for &l in &self.labels {
            c[l as usize] += 1;
        }
        c
    }

    /// Apply a permutation of `[k]`: `perm[l-1]` is the new value of label
    /// `l`. Label 0 stays 0.
    pub fn permuted(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for k = {}",
                perm.len(),
                self.k
            )));
        }
        let labels = self
            .labels
            .iter()
            .map(|&l| if l == 0 { 0 } else { perm[l as usize - 1] })
            .collect();
        LabelVector::new(labels, self.k)
    }

    /// One integer label per line, node order implicit.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for &l in &self.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_from<R: BufRead>(reader: R, k: usize) -> Result<Self> {
        let mut labels = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let l: u32 = t.parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad label {t:?}: {e}"),
            })?;
            labels.push(l);
        }
        LabelVector::new(labels, k)
    }

    pub fn load<P: AsRef<Path>>(path: P, k: usize) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(BufReader::new(f), k)
    }
}
