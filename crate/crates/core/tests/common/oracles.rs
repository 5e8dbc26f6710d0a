//! Independent reference implementations shared by the test suites.

use dialectkit::analysis::{Linkage, Metric, TermCounts, ValenceMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Count matrix: `rows[t][g]` occurrences of term `w{t}` in group `g`.
pub fn counts_from(rows: &[Vec<u64>], groups: &[String]) -> TermCounts {
    let mut tc = TermCounts::new(groups.to_vec()).unwrap();
    for (t, row) in rows.iter().enumerate() {
        for (g, &c) in row.iter().enumerate() {
            let term = format!("w{t}");
            tc.add_tokens(&groups[g], std::iter::repeat_n(term.as_str(), c as usize)).unwrap();
        }
    }
    tc
}

/// Valence written out directly from the count matrix.
pub fn eq1(rows: &[Vec<u64>], t: usize, i: usize) -> f64 {
    let groups = rows[0].len();
    let totals: Vec<u64> = (0..groups).map(|g| rows.iter().map(|r| r[g]).sum()).collect();
    let mut denom = 0.0;
    for n in 0..groups {
        if totals[n] > 0 {
            denom += rows[t][n] as f64 / totals[n] as f64;
        }
    }
    let own = if totals[i] > 0 { rows[t][i] as f64 / totals[i] as f64 } else { 0.0 };
    2.0 * (own / denom) - 1.0
}


pub fn matrix_from_columns(cols: &[Vec<f32>]) -> ValenceMatrix {
    let terms = cols[0].len();
    ValenceMatrix {
        terms: (0..terms).map(|t| format!("t{t}")).collect(),
        groups: (0..cols.len()).map(|g| format!("G{g:02}")).collect(),
        values: (0..terms).flat_map(|t| cols.iter().map(move |c| c[t])).collect(),
    }
}

pub fn leaf_distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let (na, nb): (f64, f64) = (a.iter().map(|x| x * x).sum(), b.iter().map(|x| x * x).sum());
            (1.0 - dot / (na * nb).sqrt()).max(0.0)
        }
    }
}

/// Naive agglomeration over explicit member sets. Returns, per merge, the
/// two member sets (smaller-name cluster first) and the height.
pub fn brute_force(vm: &ValenceMatrix, linkage: Linkage, metric: Metric) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let n = vm.groups.len();
    let cols: Vec<Vec<f64>> = (0..n).map(|g| vm.column(g)).collect();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|g| vec![g]).collect();
    let key = |c: &Vec<usize>| c.iter().map(|&g| vm.groups[g].clone()).min().unwrap();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (String, String), usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in 0..clusters.len() {
                if key(&clusters[a]) >= key(&clusters[b]) {
                    continue;
                }
                let ds: Vec<f64> = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| leaf_distance(metric, &cols[i], &cols[j]))
                    .collect();
                let d = match linkage {
                    Linkage::Single => ds.iter().copied().fold(f64::INFINITY, f64::min),
                    Linkage::Complete => ds.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    Linkage::Average => ds.iter().sum::<f64>() / ds.len() as f64,
                };
                let tie = (key(&clusters[a]), key(&clusters[b]));
                let better = match &best {
                    None => true,
                    Some((bd, bt, _, _)) => d < *bd - 1e-12 || ((d - bd).abs() <= 1e-12 && tie < *bt),
                };
                if better {
                    best = Some((d, tie, a, b));
                }
            }
        }
        let (d, _, a, b) = best.unwrap();
        let (left, right) = (clusters[a].clone(), clusters[b].clone());
        let mut merged = left.clone();
        merged.extend(&right);
        clusters.retain(|c| *c != left && *c != right);
        clusters.push(merged);
        out.push((left, right, d));
    }
    out
}


/// Four blocks of groups; block centroids differ by 0.5 per coordinate,
/// groups scatter around them with noise sigma 0.01.
pub fn planted_blocks(seed: u64, sizes: &[usize]) -> (ValenceMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let terms = 40;
    let mut cols = Vec::new();
    let mut block_of = Vec::new();
    for (b, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            let col: Vec<f32> = (0..terms)
                .map(|t| {
                    let centre = if t % sizes.len() == b { 0.25 } else { -0.25 };
                    (centre + noise.sample(&mut rng)) as f32
                })
                .collect();
            cols.push(col);
            block_of.push(b);
        }
    }
    (matrix_from_columns(&cols), block_of)
}
