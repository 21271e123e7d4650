use super::{cosine, FeatureVector};
use crate::Scalar;

/// Two clusters joined into a new one with id `id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge<T> {
    /// The smaller of the two joined ids.
    pub a: usize,
    pub b: usize,
    /// Group-average linkage at the time of the merge.
    pub similarity: T,
    pub id: usize,
}

/// Merge history over `n_leaves` items. Leaves have ids `0..n`; the i-th
/// merge creates id `n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram<T> {
    pub n_leaves: usize,
    pub merges: Vec<Merge<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Ascending item indices.
    pub member_ids: Vec<usize>,
    pub representative_id: usize,
}

pub fn similarity_matrix<T: Scalar>(vectors: &[FeatureVector]) -> Vec<Vec<T>> {
    let n = vectors.len();
    let mut sim = vec![vec![T::one(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = cosine(&vectors[i], &vectors[j]);
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    sim
}

/// Bottom-up clustering with group-average linkage. Each step joins the pair
/// with the highest average pairwise similarity; pairs within
/// [`Scalar::tie_epsilon`] of the best count as tied and the smallest
/// `(min id, max id)` wins.
pub fn agglomerate<T: Scalar>(vectors: &[FeatureVector]) -> Dendrogram<T> {
    agglomerate_matrix(&similarity_matrix(vectors))
}

/// [`agglomerate`] from a precomputed symmetric similarity matrix.
pub fn agglomerate_matrix<T: Scalar>(sim: &[Vec<T>]) -> Dendrogram<T> {
    let n = sim.len();
    let total = (2 * n).saturating_sub(1);
    // sums[x][y]: summed item similarity between clusters x and y.
    let mut sums = vec![vec![T::zero(); total]; total];
    for i in 0..n {
        for j in 0..n {
            sums[i][j] = sim[i][j];
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let eps = T::tie_epsilon();

    while active.len() > 1 {
        let linkage = |x: usize, y: usize| {
            sums[x][y] / T::from_usize(size[x] * size[y]).unwrap()
        };
        let mut best = T::neg_infinity();
        for (i, &x) in active.iter().enumerate() {
            for &y in &active[i + 1..] {
                best = best.max(linkage(x, y));
            }
        }
        let mut chosen = None;
        'outer: for (i, &x) in active.iter().enumerate() {
            for &y in &active[i + 1..] {
                let l = linkage(x, y);
                if best - l <= eps {
                    chosen = Some((x, y, l));
                    break 'outer;
                }
            }
        }
        let (a, b, similarity) = chosen.expect("at least one pair");
        let id = n + merges.len();
        size[id] = size[a] + size[b];
        for &z in &active {
            if z != a && z != b {
                let s = sums[a][z] + sums[b][z];
                sums[id][z] = s;
                sums[z][id] = s;
            }
        }
        active.retain(|&z| z != a && z != b);
        active.push(id);
        merges.push(Merge { a, b, similarity, id });
    }
    Dendrogram {
        n_leaves: n,
        merges,
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cuts the tree into `k` clusters (or singletons when there are no more
/// than `k` items) and picks each cluster's medoid: the member with the
/// largest summed similarity to the other members, smallest id on ties.
/// Clusters are ordered by their smallest member.
pub fn cut_and_represent<T: Scalar>(
    d: &Dendrogram<T>,
    vectors: &[FeatureVector],
    k: usize,
) -> Vec<Cluster> {
    assert!(k >= 1, "k must be at least 1");
    assert_eq!(d.n_leaves, vectors.len(), "dendrogram does not match the vectors");
    let n = d.n_leaves;
    let mut parent: Vec<usize> = (0..(2 * n).saturating_sub(1)).collect();
    if n > k {
        for m in &d.merges[..n - k] {
            parent[m.a] = m.id;
            parent[m.b] = m.id;
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(leaf),
            None => groups.push((root, vec![leaf])),
        }
    }
    groups
        .into_iter()
        .map(|(_, member_ids)| {
            let representative_id = medoid::<T>(&member_ids, vectors);
            Cluster {
                member_ids,
                representative_id,
            }
        })
        .collect()
}

fn medoid<T: Scalar>(members: &[usize], vectors: &[FeatureVector]) -> usize {
    let scores: Vec<T> = members
        .iter()
        .map(|&i| {
            members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| cosine::<T>(&vectors[i], &vectors[j]))
                .sum()
        })
        .collect();
    let best = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let eps = T::tie_epsilon();
    members
        .iter()
        .zip(&scores)
        .find(|(_, &s)| best - s <= eps)
        .map(|(&i, _)| i)
        .expect("non-empty cluster")
}
