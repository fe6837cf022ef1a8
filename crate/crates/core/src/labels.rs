//! Node labels and the train/val/test split.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, val or test)")),
        }
    }
}

/// Per-node class labels with a split assignment. Every train node is labelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<Option<u32>>,
    split: Vec<Split>,
}

impl LabelSet {
    pub fn new(labels: Vec<Option<u32>>, split: Vec<Split>) -> Result<Self> {
        if labels.len() != split.len() {
            return Err(Error::input(format!(
                "{} labels but {} split entries",
                labels.len(),
                split.len()
            )));
        }
        if let Some(i) = (0..labels.len()).find(|&i| split[i] == Split::Train && labels[i].is_none())
        {
            return Err(Error::input(format!("train node {i} has no label")));
        }
        Ok(LabelSet { labels, split })
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> Option<u32> {
        self.labels[node]
    }

    pub fn labels(&self) -> &[Option<u32>] {
        &self.labels
    }

    pub fn split(&self, node: usize) -> Split {
        self.split[node]
    }

    /// Node ids in `split`, ascending.
    pub fn nodes_in(&self, split: Split) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| self.split[i] == split)
            .collect()
    }

    /// One more than the largest known label.
    pub fn num_classes(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .max()
            .map_or(0, |&m| m as usize + 1)
    }

    /// Copy with every label outside `keep` splits hidden.
    pub fn restricted_to(&self, keep: &[Split]) -> LabelSet {
        let labels = self
            .labels
            .iter()
            .zip(&self.split)
            .map(|(&l, s)| if keep.contains(s) { l } else { None })
            .collect();
        LabelSet {
            labels,
            split: self.split.clone(),
        }
    }

    /// Labels of `nodes`, in order, as a new set.
    pub fn select(&self, nodes: &[usize]) -> LabelSet {
        LabelSet {
            labels: nodes.iter().map(|&i| self.labels[i]).collect(),
            split: nodes.iter().map(|&i| self.split[i]).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id,label,split\n");
        for (i, (l, sp)) in self.labels.iter().zip(&self.split).enumerate() {
            let label = l.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{i},{label},{}", sp.as_str());
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub(crate) fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut rows: Vec<(usize, Option<u32>, Split)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if i == 0 && line.starts_with("node_id") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(i + 1, format!("expected `node_id,label,split`, got `{line}`")));
            }
            let node = fields[0]
                .parse()
                .map_err(|_| err(i + 1, format!("bad node id `{}`", fields[0])))?;
            let label = match fields[1] {
                "" | "unknown" => None,
                s => Some(s.parse().map_err(|_| err(i + 1, format!("bad label `{s}`")))?),
            };
            let split = fields[2].parse().map_err(|m| err(i + 1, m))?;
            rows.push((node, label, split));
        }
        let n = rows.len();
        let mut labels = vec![None; n];
        let mut split = vec![None; n];
        for (node, label, sp) in rows {
            if node >= n || split[node].is_some() {
                return Err(Error::input(format!(
                    "{}: node ids must be a permutation of 0..{n} (offending id {node})",
                    path.display()
                )));
            }
            labels[node] = label;
            split[node] = Some(sp);
        }
        LabelSet::new(labels, split.into_iter().map(Option::unwrap).collect())
    }
}
