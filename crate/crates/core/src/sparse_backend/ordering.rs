//! Fill-reducing orderings on the symmetrized pattern of a sparse matrix.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap};
use std::hash::{Hash, Hasher};

use super::SparseMatrix;

/// Symmetric adjacency (without self loops) of `A + Aᵀ`, sorted per vertex.
#[derive(Clone, Debug)]
pub(crate) struct SymPattern {
    pub ptr: Vec<usize>,
    pub adj: Vec<u32>,
}

impl SymPattern {
    pub fn from_matrix(a: &SparseMatrix) -> Self {
        let n = a.nrows();
        let mut deg = vec![0usize; n];
        for i in 0..n {
            for &j in a.row_indices(i) {
                if i != j {
                    deg[i] += 1;
                    deg[j] += 1;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0u32; ptr[n]];
        for i in 0..n {
            for &j in a.row_indices(i) {
                if i != j {
                    adj[fill[i]] = j as u32;
                    fill[i] += 1;
                    adj[fill[j]] = i as u32;
                    fill[j] += 1;
                }
            }
        }
        let mut out_ptr = vec![0usize; n + 1];
        let mut out = Vec::with_capacity(adj.len());
        for i in 0..n {
            let row = &mut adj[ptr[i]..ptr[i + 1]];
            row.sort_unstable();
            for (k, &v) in row.iter().enumerate() {
                if k == 0 || v != row[k - 1] {
                    out.push(v);
                }
            }
            out_ptr[i + 1] = out.len();
        }
        Self {
            ptr: out_ptr,
            adj: out,
        }
    }

    pub fn n(&self) -> usize {
        self.ptr.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adj[self.ptr[i]..self.ptr[i + 1]]
    }

    fn closed_equal(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.neighbors(i), self.neighbors(j));
        if a.len() != b.len() {
            return false;
        }
        // Closed neighborhoods: N(i) ∪ {i} == N(j) ∪ {j}.
        let mut x: Vec<u32> = a.to_vec();
        x.push(i as u32);
        x.sort_unstable();
        let mut y: Vec<u32> = b.to_vec();
        y.push(j as u32);
        y.sort_unstable();
        x == y
    }

    /// Partition of the vertices into classes with identical closed
    /// neighborhoods. Returns the class of each vertex; classes are numbered
    /// in order of their smallest member.
    pub fn supervariables(&self) -> (Vec<u32>, usize) {
        let n = self.n();
        let mut hashes = Vec::with_capacity(n);
        for i in 0..n {
            let mut h = DefaultHasher::new();
            let mut key: Vec<u32> = self.neighbors(i).to_vec();
            key.push(i as u32);
            key.sort_unstable();
            key.hash(&mut h);
            hashes.push(h.finish());
        }
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut class = vec![u32::MAX; n];
        let mut count = 0u32;
        for i in 0..n {
            let reps = buckets.entry(hashes[i]).or_default();
            let mut found = None;
            for &r in reps.iter() {
                if self.closed_equal(r as usize, i) {
                    found = Some(class[r as usize]);
                    break;
                }
            }
            match found {
                Some(c) => class[i] = c,
                None => {
                    class[i] = count;
                    count += 1;
                    reps.push(i as u32);
                }
            }
        }
        (class, count as usize)
    }
}

/// Minimum-degree ordering with supervariable compression.
///
/// Vertices with identical closed neighborhoods are merged first; the
/// quotient graph is then eliminated by least weighted external degree with
/// explicit fill, ties broken by the smaller index. Returns `perm` with
/// `perm[k]` the vertex eliminated at step `k`; members of one supervariable
/// are contiguous.
pub(crate) fn minimum_degree(pat: &SymPattern) -> Vec<usize> {
    let n = pat.n();
    if n == 0 {
        return Vec::new();
    }
    let (class, nc) = pat.supervariables();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); nc];
    for (v, &c) in class.iter().enumerate() {
        members[c as usize].push(v as u32);
    }
    let weight: Vec<usize> = members.iter().map(Vec::len).collect();

    let mut adj: Vec<Vec<u32>> = members
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let mut a: Vec<u32> = pat
                .neighbors(m[0] as usize)
                .iter()
                .map(|&v| class[v as usize])
                .filter(|&k| k as usize != c)
                .collect();
            a.sort_unstable();
            a.dedup();
            a
        })
        .collect();

    let ext_degree = |adj: &[Vec<u32>], c: usize| -> usize {
        adj[c].iter().map(|&k| weight[k as usize]).sum()
    };
    let mut degree: Vec<usize> = (0..nc).map(|c| ext_degree(&adj, c)).collect();
    let mut heap: BinaryHeap<Reverse<(usize, u32)>> =
        (0..nc).map(|c| Reverse((degree[c], c as u32))).collect();
    let mut eliminated = vec![false; nc];
    let mut perm = Vec::with_capacity(n);

    while let Some(Reverse((deg, c))) = heap.pop() {
        let c = c as usize;
        if eliminated[c] || deg != degree[c] {
            continue;
        }
        eliminated[c] = true;
        perm.extend(members[c].iter().map(|&v| v as usize));
        let nbrs = std::mem::take(&mut adj[c]);
        for &h in &nbrs {
            let h = h as usize;
            let old = std::mem::take(&mut adj[h]);
            let mut merged = Vec::with_capacity(old.len() + nbrs.len());
            // Keep old neighbors except the eliminated vertex, then add the
            // rest of the clique.
            let (mut i, mut j) = (0, 0);
            while i < old.len() || j < nbrs.len() {
                let take_old = j >= nbrs.len() || (i < old.len() && old[i] <= nbrs[j]);
                let v = if take_old {
                    let v = old[i];
                    i += 1;
                    if j < nbrs.len() && nbrs[j] == v {
                        j += 1;
                    }
                    v
                } else {
                    let v = nbrs[j];
                    j += 1;
                    v
                };
                if v as usize != c && v as usize != h && !eliminated[v as usize] {
                    merged.push(v);
                }
            }
            adj[h] = merged;
            let d = ext_degree(&adj, h);
            if d != degree[h] {
                degree[h] = d;
                heap.push(Reverse((d, h as u32)));
            }
        }
    }
    debug_assert_eq!(perm.len(), n);
    perm
}
