use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ValenceMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
    Single,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl FromStr for Linkage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            o => Err(format!("unknown linkage `{o}` (expected average, complete or single)")),
        }
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            o => Err(format!("unknown metric `{o}` (expected cosine or euclidean)")),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        })
    }
}

/// One agglomeration step. Clusters `0..n` are the leaves; merge `k`
/// creates cluster `n + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub linkage: Linkage,
    pub metric: Metric,
    pub merges: Vec<Merge>,
}

fn distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>();
            let nb = b.iter().map(|x| x * x).sum::<f64>();
            if na == 0.0 || nb == 0.0 {
                // A zero column has no direction; treat it as orthogonal.
                if na == nb {
                    0.0
                } else {
                    1.0
                }
            } else {
                (1.0 - dot / (na * nb).sqrt()).max(0.0)
            }
        }
    }
}

fn group_columns(vm: &ValenceMatrix) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let n = vm.groups.len();
    if n < 2 {
        return Err(AnalysisError::TooFewGroups(n));
    }
    (0..n)
        .map(|g| {
            let col = vm.column(g);
            if col.iter().all(|v| v.is_finite()) {
                Ok(col)
            } else {
                Err(AnalysisError::NonFinite(vm.groups[g].clone()))
            }
        })
        .collect()
}

/// Live cluster: id, smallest member name (for tie-breaks), members.
struct Live {
    id: usize,
    key: String,
    members: Vec<usize>,
}

/// Picks the closest pair; equal distances go to the pair whose smaller
/// name key sorts first, then the other key.
fn closest(live: &[Live], d: impl Fn(usize, usize) -> f64) -> (usize, usize, f64) {
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 0..live.len() {
        for b in a + 1..live.len() {
            let (a, b) = if live[a].key <= live[b].key { (a, b) } else { (b, a) };
            let dist = d(a, b);
            let better = match best {
                None => true,
                Some((ba, bb, bd)) => {
                    dist < bd
                        || (dist == bd
                            && (&live[a].key, &live[b].key) < (&live[ba].key, &live[bb].key))
                }
            };
            if better {
                best = Some((a, b, dist));
            }
        }
    }
    best.expect("at least two live clusters")
}

fn merge_live(live: &mut Vec<Live>, a: usize, b: usize, id: usize) -> (usize, usize, usize) {
    let (hi, lo) = (a.max(b), a.min(b));
    let rb = live.remove(hi);
    let ra = live.remove(lo);
    let (left, right) = if a < b { (ra, rb) } else { (rb, ra) };
    let mut members = left.members.clone();
    members.extend(&right.members);
    let size = members.len();
    let key = left.key.clone().min(right.key.clone());
    live.push(Live { id, key, members });
    (left.id, right.id, size)
}

/// Agglomerative clustering of the group columns of a valence matrix with
/// Lance-Williams distance updates.
pub fn cluster_dialects(vm: &ValenceMatrix, linkage: Linkage, metric: Metric) -> Result<Dendrogram, AnalysisError> {
    let cols = group_columns(vm)?;
    let n = cols.len();
    // Distances between live clusters, indexed by cluster id.
    let total = 2 * n - 1;
    let mut dist = vec![0.0f64; total * total];
    for i in 0..n {
        for j in i + 1..n {
            let v = distance(metric, &cols[i], &cols[j]);
            dist[i * total + j] = v;
            dist[j * total + i] = v;
        }
    }
    let mut live: Vec<Live> = (0..n)
        .map(|i| Live {
            id: i,
            key: vm.groups[i].clone(),
            members: vec![i],
        })
        .collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let (a, b, h) = closest(&live, |a, b| dist[live[a].id * total + live[b].id]);
        let (sa, sb) = (live[a].members.len() as f64, live[b].members.len() as f64);
        let id = n + step;
        let (left, right, size) = merge_live(&mut live, a, b, id);
        for other in &live[..live.len() - 1] {
            let o = other.id;
            let (dl, dr) = (dist[left * total + o], dist[right * total + o]);
            let v = match linkage {
                Linkage::Single => dl.min(dr),
                Linkage::Complete => dl.max(dr),
                Linkage::Average => (sa * dl + sb * dr) / (sa + sb),
            };
            dist[id * total + o] = v;
            dist[o * total + id] = v;
        }
        merges.push(Merge {
            left,
            right,
            height: h,
            size,
        });
    }
    Ok(Dendrogram {
        leaves: vm.groups.clone(),
        linkage,
        metric,
        merges,
    })
}

/// Straightforward O(n³) clustering that recomputes every cluster distance
/// from leaf distances at each step. Used to cross-check
/// [`cluster_dialects`].
pub fn cluster_reference(vm: &ValenceMatrix, linkage: Linkage, metric: Metric) -> Result<Dendrogram, AnalysisError> {
    let cols = group_columns(vm)?;
    let n = cols.len();
    let leaf: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| distance(metric, &cols[i], &cols[j])).collect())
        .collect();
    let cluster_dist = |a: &[usize], b: &[usize]| -> f64 {
        let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j)));
        match linkage {
            Linkage::Single => pairs.map(|(i, j)| leaf[i][j]).fold(f64::INFINITY, f64::min),
            Linkage::Complete => pairs.map(|(i, j)| leaf[i][j]).fold(f64::NEG_INFINITY, f64::max),
            Linkage::Average => pairs.map(|(i, j)| leaf[i][j]).sum::<f64>() / (a.len() * b.len()) as f64,
        }
    };
    let mut live: Vec<Live> = (0..n)
        .map(|i| Live {
            id: i,
            key: vm.groups[i].clone(),
            members: vec![i],
        })
        .collect();
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let (a, b, h) = closest(&live, |a, b| cluster_dist(&live[a].members, &live[b].members));
        let (left, right, size) = merge_live(&mut live, a, b, n + step);
        merges.push(Merge {
            left,
            right,
            height: h,
            size,
        });
    }
    Ok(Dendrogram {
        leaves: vm.groups.clone(),
        linkage,
        metric,
        merges,
    })
}

fn newick_name(name: &str) -> String {
    if name.chars().any(|c| " ()[]':;,".contains(c) || c.is_whitespace()) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

impl Dendrogram {
    pub fn height_of(&self, cluster: usize) -> f64 {
        let n = self.leaves.len();
        if cluster < n {
            0.0
        } else {
            self.merges[cluster - n].height
        }
    }

    /// Leaf indices under a cluster id, left to right.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        let n = self.leaves.len();
        if cluster < n {
            return vec![cluster];
        }
        let m = &self.merges[cluster - n];
        let mut v = self.members(m.left);
        v.extend(self.members(m.right));
        v
    }

    /// Newick tree; branch lengths are the height differences between a
    /// node and its parent.
    pub fn to_newick(&self) -> String {
        fn node(d: &Dendrogram, id: usize, parent_height: f64, out: &mut String) {
            let n = d.leaves.len();
            if id < n {
                out.push_str(&newick_name(&d.leaves[id]));
            } else {
                let m = &d.merges[id - n];
                out.push('(');
                node(d, m.left, m.height, out);
                out.push(',');
                node(d, m.right, m.height, out);
                out.push(')');
            }
            out.push_str(&format!(":{}", parent_height - d.height_of(id)));
        }
        let n = self.leaves.len();
        if self.merges.is_empty() {
            return format!("{};", self.leaves.first().map(|l| newick_name(l)).unwrap_or_default());
        }
        let root = n + self.merges.len() - 1;
        let m = &self.merges[root - n];
        let mut out = String::from("(");
        node(self, m.left, m.height, &mut out);
        out.push(',');
        node(self, m.right, m.height, &mut out);
        out.push_str(");");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }
}

pub fn parse_dendrogram_json(text: &str) -> Result<Dendrogram, AnalysisError> {
    serde_json::from_str(text).map_err(|e| AnalysisError::BadTable(e.to_string()))
}
