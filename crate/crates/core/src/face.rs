//! Faces of the standard simplex, identified by their vertex subsets.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A nonempty subset `J` of the objective indices `{0, .., M-1}`.
///
/// Members are stored sorted and deduplicated (zero-based). Faces order by
/// cardinality first and lexicographically within a cardinality, which is the
/// order the skeleton fitting visits them in. `Display` prints the 1-based
/// form used in reports, e.g. `{1,3}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Face(Vec<usize>);

impl Face {
    pub fn new(members: impl IntoIterator<Item = usize>, dim: usize) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::InvalidFace("face must be nonempty".into()));
        }
        if let Some(&bad) = members.iter().find(|&&m| m >= dim) {
            return Err(Error::InvalidFace(format!(
                "member {} out of range for {} objectives",
                bad + 1,
                dim
            )));
        }
        Ok(Face(members))
    }

    pub fn full(dim: usize) -> Self {
        assert!(dim > 0, "simplex dimension must be positive");
        Face((0..dim).collect())
    }

    pub fn vertex(m: usize) -> Self {
        Face(vec![m])
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.0.binary_search(&m).is_ok()
    }

    /// Position of objective `m` inside this face, if it is a member.
    pub fn position(&self, m: usize) -> Option<usize> {
        self.0.binary_search(&m).ok()
    }

    /// File-name friendly 1-based label, e.g. `1-3`.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|m| (m + 1).to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Parses the label produced by [`Face::label`].
    pub fn parse_label(label: &str, dim: usize) -> Result<Self> {
        let members = label
            .split('-')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| Error::InvalidFace(format!("bad face label '{label}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Face::new(members, dim)
    }

    /// All nonempty faces of the `(dim-1)`-simplex with at most `max_len`
    /// vertices, in skeleton order.
    pub fn all(dim: usize, max_len: usize) -> Vec<Face> {
        let mut out = Vec::new();
        for k in 1..=max_len.min(dim) {
            let mut comb: Vec<usize> = (0..k).collect();
            loop {
                out.push(Face(comb.clone()));
                // advance to the next k-combination in lexicographic order
                let mut i = k;
                while i > 0 && comb[i - 1] == dim - k + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                comb[i - 1] += 1;
                for j in i..k {
                    comb[j] = comb[j - 1] + 1;
                }
            }
        }
        out
    }
}

impl Ord for Face {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Face {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", m + 1)?;
        }
        write!(f, "}}")
    }
}
