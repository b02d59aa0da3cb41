//! Hierarchical density-based clustering of 2D points.
//!
//! Stages: core distances, mutual reachability, minimum spanning tree,
//! single-linkage merge list, condensed tree, stability-based selection.
//! Each stage is exposed so it can be checked on its own.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{dist2, KdTree};

pub const NOISE: i32 = -1;

/// Distances below this share one density level (`λ = 1e12`).
pub const MIN_DISTANCE: f64 = 1e-12;

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Excess of mass.
    #[default]
    Eom,
    Leaf,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eom" => Ok(Selection::Eom),
            "leaf" => Ok(Selection::Leaf),
            _ => Err(Error::InvalidParameter(format!(
                "unknown cluster selection `{s}` (expected eom or leaf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub selection: Selection,
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams {
            min_cluster_size: 10_000,
            min_samples: 100,
            selection: Selection::Eom,
        }
    }
}

impl HdbscanParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::InvalidParameter(
                "min_cluster_size must be at least 2".into(),
            ));
        }
        if self.min_samples < 1 {
            return Err(Error::InvalidParameter("min_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-point cluster labels; [`NOISE`] marks unassigned points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterLabels {
    labels: Vec<i32>,
    n_clusters: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<i32>) -> Self {
        let n_clusters = labels.iter().map(|&l| l + 1).max().unwrap_or(0).max(0) as usize;
        ClusterLabels { labels, n_clusters }
    }

    pub fn all_noise(n: usize) -> Self {
        ClusterLabels {
            labels: vec![NOISE; n],
            n_clusters: 0,
        }
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn into_vec(self) -> Vec<i32> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Member indices of each cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreDistances(Vec<f64>);

impl CoreDistances {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Distance from each point to its `k`-th nearest other point.
pub fn core_distances(points: &[Point2], k: usize) -> Result<CoreDistances> {
    if k == 0 {
        return Err(Error::InvalidParameter("min_samples must be at least 1".into()));
    }
    if points.len() <= k {
        return Err(Error::TooFewPoints {
            required: k + 1,
            actual: points.len(),
        });
    }
    let tree = KdTree::new(points.to_vec());
    Ok(core_distances_with(&tree, k))
}

fn core_distances_with(tree: &KdTree<2>, k: usize) -> CoreDistances {
    let cores = (0..tree.len())
        .into_par_iter()
        .map(|i| tree.nearest(tree.point(i), k, Some(i))[k - 1].0)
        .collect();
    CoreDistances(cores)
}

/// `max(d_ab, core(a), core(b))`.
pub fn mutual_reachability(a: usize, b: usize, d_ab: f64, cores: &[f64]) -> f64 {
    d_ab.max(cores[a]).max(cores[b])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl MstEdge {
    fn new(a: usize, b: usize, weight: f64) -> Self {
        MstEdge {
            a: a.min(b),
            b: a.max(b),
            weight,
        }
    }

    /// Total order: weight, then smaller endpoint, then larger endpoint.
    pub fn key_cmp(&self, other: &MstEdge) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

pub fn total_weight(mst: &[MstEdge]) -> f64 {
    mst.iter().map(|e| e.weight).sum()
}

fn pair_distance(points: &[Point2], a: usize, b: usize) -> f64 {
    dist2(&points[a], &points[b]).sqrt()
}

/// Dense Prim over on-the-fly mutual reachability. `O(n²)` time, `O(n)`
/// memory. Edges are returned in ascending key order.
pub fn build_mst_prim(points: &[Point2], cores: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<MstEdge> = (0..n).map(|v| MstEdge::new(v, 0, f64::INFINITY)).collect();
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = mutual_reachability(current, v, pair_distance(points, current, v), cores);
            let cand = MstEdge::new(current, v, w);
            if cand.key_cmp(&best[v]) == Ordering::Less {
                best[v] = cand;
            }
            if next.map_or(true, |u| best[v].key_cmp(&best[u]) == Ordering::Less) {
                next = Some(v);
            }
        }
        let v = next.expect("a vertex remains outside the tree");
        in_tree[v] = true;
        edges.push(best[v]);
        current = v;
    }
    edges.sort_by(MstEdge::key_cmp);
    edges
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns the new root, or `None` if already joined.
    fn union(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        Some(big)
    }
}

/// Minimum spanning tree of the mutual-reachability graph.
///
/// Borůvka rounds over a k-d tree. Every edge comparison uses the total
/// key of [`MstEdge::key_cmp`], so the tree is unique and identical to
/// [`build_mst_prim`].
pub fn build_mst(points: &[Point2], cores: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let tree = KdTree::new(points.to_vec());
    boruvka(&tree, cores)
}

fn boruvka(tree: &KdTree<2>, cores: &[f64]) -> Vec<MstEdge> {
    let n = tree.len();
    let nodes = &tree.nodes;
    let mut min_core = vec![f64::INFINITY; nodes.len()];
    let mut min_index = vec![usize::MAX; nodes.len()];
    for id in (0..nodes.len()).rev() {
        match nodes[id].children {
            Some((l, r)) => {
                min_core[id] = min_core[l].min(min_core[r]);
                min_index[id] = min_index[l].min(min_index[r]);
            }
            None => {
                for &i in &tree.order[nodes[id].start..nodes[id].end] {
                    min_core[id] = min_core[id].min(cores[i]);
                    min_index[id] = min_index[id].min(i);
                }
            }
        }
    }

    let mut uf = UnionFind::new(n);
    let mut comp: Vec<usize> = (0..n).collect();
    let mut node_comp = vec![usize::MAX; nodes.len()];
    let mut edges = Vec::with_capacity(n - 1);
    let mut stack = Vec::new();
    while edges.len() < n - 1 {
        for id in (0..nodes.len()).rev() {
            node_comp[id] = match nodes[id].children {
                Some((l, r)) if node_comp[l] == node_comp[r] => node_comp[l],
                Some(_) => usize::MAX,
                None => {
                    let ids = &tree.order[nodes[id].start..nodes[id].end];
                    let c = comp[ids[0]];
                    if ids.iter().all(|&i| comp[i] == c) {
                        c
                    } else {
                        usize::MAX
                    }
                }
            };
        }
        let mut comp_best: Vec<Option<MstEdge>> = vec![None; n];
        for p in 0..n {
            let c = comp[p];
            let bound = comp_best[c].map_or(f64::INFINITY, |e| e.weight);
            if cores[p] > bound {
                continue;
            }
            let q = tree.point(p);
            let cp = cores[p];
            // Best (weight, index) for this point; ties go to the lower index.
            let mut best_w = f64::INFINITY;
            let mut best_j = usize::MAX;
            stack.clear();
            stack.push(0usize);
            while let Some(id) = stack.pop() {
                if node_comp[id] == c {
                    continue;
                }
                let node = &nodes[id];
                let lb = node.box_dist2(q).sqrt().max(cp).max(min_core[id]);
                if lb > bound || lb > best_w || (lb == best_w && min_index[id] >= best_j) {
                    continue;
                }
                match node.children {
                    Some((l, r)) => {
                        if nodes[l].box_dist2(q) <= nodes[r].box_dist2(q) {
                            stack.push(r);
                            stack.push(l);
                        } else {
                            stack.push(l);
                            stack.push(r);
                        }
                    }
                    None => {
                        for &j in &tree.order[node.start..node.end] {
                            if comp[j] == c {
                                continue;
                            }
                            let w = dist2(q, tree.point(j)).sqrt().max(cp).max(cores[j]);
                            if w < best_w || (w == best_w && j < best_j) {
                                best_w = w;
                                best_j = j;
                            }
                        }
                    }
                }
            }
            if best_j == usize::MAX {
                continue;
            }
            let cand = MstEdge::new(p, best_j, best_w);
            if comp_best[c].map_or(true, |e| cand.key_cmp(&e) == Ordering::Less) {
                comp_best[c] = Some(cand);
            }
        }
        let mut added = false;
        for e in comp_best.into_iter().flatten() {
            if uf.union(e.a, e.b).is_some() {
                edges.push(e);
                added = true;
            }
        }
        assert!(added, "Borůvka round made no progress");
        for i in 0..n {
            comp[i] = uf.find(i);
        }
    }
    edges.sort_by(MstEdge::key_cmp);
    edges
}

/// One single-linkage merge. Ids below `n` are points; merge `i` creates
/// node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    pub size: usize,
}

/// Single-linkage dendrogram from an MST, merging in ascending key order.
pub fn build_hierarchy(n: usize, mst: &[MstEdge]) -> Vec<Merge> {
    let mut sorted = mst.to_vec();
    sorted.sort_by(MstEdge::key_cmp);
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size_of = vec![1usize; n];
    let mut merges = Vec::with_capacity(sorted.len());
    for e in sorted {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        if ra == rb {
            continue;
        }
        let size = size_of[ra] + size_of[rb];
        merges.push(Merge {
            left: node_of[ra],
            right: node_of[rb],
            weight: e.weight,
            size,
        });
        let root = uf.union(ra, rb).expect("distinct components");
        node_of[root] = n + merges.len() - 1;
        size_of[root] = size;
    }
    merges
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensedCluster {
    pub id: usize,
    pub parent: Option<usize>,
    pub lambda_birth: f64,
    /// Largest λ at which a point leaves or the cluster splits.
    pub lambda_death: f64,
    pub size: usize,
    pub children: Vec<usize>,
}

/// A point leaving `cluster` at density `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FallOut {
    pub point: usize,
    pub cluster: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub min_cluster_size: usize,
    /// Cluster 0 is the root; children always have larger ids than parents.
    pub clusters: Vec<CondensedCluster>,
    pub fallouts: Vec<FallOut>,
}

fn lambda_of(weight: f64) -> f64 {
    1.0 / weight.max(MIN_DISTANCE)
}

/// Condense the dendrogram top-down. A split is kept when at least two of
/// the components separating at that density have `min_cluster_size` points.
pub fn condense_tree(n: usize, hierarchy: &[Merge], min_cluster_size: usize) -> CondensedTree {
    let mut tree = CondensedTree {
        n_points: n,
        min_cluster_size,
        clusters: vec![CondensedCluster {
            id: 0,
            parent: None,
            lambda_birth: 0.0,
            lambda_death: 0.0,
            size: n,
            children: Vec::new(),
        }],
        fallouts: Vec::with_capacity(n),
    };
    if n == 0 {
        return tree;
    }
    let size_of = |node: usize| if node < n { 1 } else { hierarchy[node - n].size };
    let root = if hierarchy.is_empty() { 0 } else { n + hierarchy.len() - 1 };
    debug_assert_eq!(hierarchy.len() + 1, n, "hierarchy must span all points");
    let mut stack = vec![(root, 0usize)];
    while let Some((node, cluster)) = stack.pop() {
        if node < n {
            tree.fallouts.push(FallOut {
                point: node,
                cluster,
                lambda: tree.clusters[cluster].lambda_birth,
            });
            continue;
        }
        let lambda = lambda_of(hierarchy[node - n].weight);
        let c = &mut tree.clusters[cluster];
        c.lambda_death = c.lambda_death.max(lambda);
        // Merges at the same density happen at once: split into every
        // component below this level, not just the last two joined.
        let mut parts = Vec::new();
        let mut open = vec![node];
        while let Some(x) = open.pop() {
            if x >= n && lambda_of(hierarchy[x - n].weight) == lambda {
                let m = hierarchy[x - n];
                open.push(m.right);
                open.push(m.left);
            } else {
                parts.push(x);
            }
        }
        let big = parts.iter().filter(|&&x| size_of(x) >= min_cluster_size).count();
        let mut spawned = Vec::new();
        for &x in &parts {
            let size = size_of(x);
            if size < min_cluster_size {
                fall_out(x, cluster, lambda, n, hierarchy, &mut tree.fallouts);
            } else if big == 1 {
                spawned.push((x, cluster));
            } else {
                let id = tree.clusters.len();
                tree.clusters.push(CondensedCluster {
                    id,
                    parent: Some(cluster),
                    lambda_birth: lambda,
                    lambda_death: lambda,
                    size,
                    children: Vec::new(),
                });
                tree.clusters[cluster].children.push(id);
                spawned.push((x, id));
            }
        }
        stack.extend(spawned.into_iter().rev());
    }
    tree.fallouts.sort_by_key(|f| f.point);
    tree
}

fn fall_out(node: usize, cluster: usize, lambda: f64, n: usize, hierarchy: &[Merge], out: &mut Vec<FallOut>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(FallOut {
                point: x,
                cluster,
                lambda,
            });
        } else {
            let m = hierarchy[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

/// `Σ (λ_p − λ_birth)` over every point while it belongs to each cluster.
pub fn stabilities(tree: &CondensedTree) -> Vec<f64> {
    let mut s = vec![0.0; tree.clusters.len()];
    for f in &tree.fallouts {
        s[f.cluster] += f.lambda - tree.clusters[f.cluster].lambda_birth;
    }
    for c in &tree.clusters {
        if let Some(p) = c.parent {
            s[p] += c.size as f64 * (c.lambda_birth - tree.clusters[p].lambda_birth);
        }
    }
    s
}

/// Selected cluster ids (ascending). The root is never selected.
pub fn select_clusters(tree: &CondensedTree, selection: Selection) -> Vec<usize> {
    let k = tree.clusters.len();
    let mut selected = vec![false; k];
    match selection {
        Selection::Leaf => {
            for c in &tree.clusters[1..] {
                selected[c.id] = c.children.is_empty();
            }
        }
        Selection::Eom => {
            let stab = stabilities(tree);
            let mut subtree = vec![0.0; k];
            for id in (1..k).rev() {
                let c = &tree.clusters[id];
                let below: f64 = c.children.iter().map(|&ch| subtree[ch]).sum();
                if c.children.is_empty() || stab[id] > below {
                    selected[id] = true;
                    subtree[id] = stab[id];
                } else {
                    subtree[id] = below;
                }
            }
            // Keep only the topmost selected cluster on every path.
            let mut blocked = vec![false; k];
            for id in 1..k {
                let p = tree.clusters[id].parent.expect("non-root has a parent");
                if p != 0 && (selected[p] || blocked[p]) {
                    blocked[id] = true;
                    selected[id] = false;
                }
            }
        }
    }
    (1..k).filter(|&id| selected[id]).collect()
}

/// Label points by the selected cluster they belong to; labels follow the
/// ascending order of condensed-tree ids.
pub fn extract_clusters(tree: &CondensedTree, selection: Selection) -> ClusterLabels {
    let chosen = select_clusters(tree, selection);
    let mut label_of = vec![NOISE; tree.clusters.len()];
    for (label, &id) in chosen.iter().enumerate() {
        label_of[id] = label as i32;
    }
    for id in 1..tree.clusters.len() {
        if label_of[id] == NOISE {
            let p = tree.clusters[id].parent.expect("non-root has a parent");
            label_of[id] = label_of[p];
        }
    }
    let mut labels = vec![NOISE; tree.n_points];
    for f in &tree.fallouts {
        labels[f.point] = label_of[f.cluster];
    }
    ClusterLabels {
        labels,
        n_clusters: chosen.len(),
    }
}

/// Intermediate products of a clustering run.
#[derive(Debug, Clone)]
pub struct HdbscanResult {
    pub labels: ClusterLabels,
    pub cores: CoreDistances,
    pub mst: Vec<MstEdge>,
    pub tree: CondensedTree,
}

pub fn hdbscan(points: &[Point2], params: &HdbscanParams) -> Result<ClusterLabels> {
    hdbscan_full(points, params).map(|r| r.labels)
}

/// As [`hdbscan`], also returning the MST and condensed tree.
///
/// When every mutual-reachability distance is below [`MIN_DISTANCE`] the
/// hierarchy has a single density level; if at least `min_cluster_size`
/// points are present they form one cluster.
pub fn hdbscan_full(points: &[Point2], params: &HdbscanParams) -> Result<HdbscanResult> {
    params.validate()?;
    let n = points.len();
    if n <= params.min_samples {
        return Err(Error::TooFewPoints {
            required: params.min_samples + 1,
            actual: n,
        });
    }
    let tree = KdTree::new(points.to_vec());
    let cores = core_distances_with(&tree, params.min_samples);
    let mst = boruvka(&tree, cores.as_slice());
    let hierarchy = build_hierarchy(n, &mst);
    let condensed = condense_tree(n, &hierarchy, params.min_cluster_size);
    let single_level = mst.iter().all(|e| e.weight <= MIN_DISTANCE);
    let labels = if single_level && n >= params.min_cluster_size {
        ClusterLabels {
            labels: vec![0; n],
            n_clusters: 1,
        }
    } else {
        extract_clusters(&condensed, params.selection)
    };
    Ok(HdbscanResult {
        labels,
        cores,
        mst,
        tree: condensed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blob(rng: &mut ChaCha8Rng, c: Point2, sd: f64, n: usize) -> Vec<Point2> {
        let g = Normal::new(0.0, sd).unwrap();
        (0..n).map(|_| [c[0] + g.sample(rng), c[1] + g.sample(rng)]).collect()
    }

    #[test]
    fn core_distance_examples() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]];
        assert_eq!(core_distances(&pts, 1).unwrap().into_vec(), vec![1.0, 1.0, 2.0]);
        assert_eq!(core_distances(&pts, 2).unwrap().into_vec(), vec![3.0, 2.0, 3.0]);
        assert!(matches!(core_distances(&pts, 3), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn mutual_reachability_examples() {
        let cores = [2.0, 0.5, 1.0, 1.0];
        assert_eq!(mutual_reachability(0, 1, 1.0, &cores), 2.0);
        assert_eq!(mutual_reachability(2, 3, 3.0, &cores), 3.0);
        assert_eq!(mutual_reachability(1, 0, 1.0, &cores), 2.0);
    }

    #[test]
    fn triangle_mst() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]];
        let cores = [0.0; 3];
        let mst = build_mst(&pts, &cores);
        assert_eq!(mst.len(), 2);
        assert_eq!((mst[0].a, mst[0].b, mst[0].weight), (0, 1, 1.0));
        assert_eq!((mst[1].a, mst[1].b, mst[1].weight), (1, 2, 2.0));
        assert_eq!(mst, build_mst_prim(&pts, &cores));
    }

    #[test]
    fn boruvka_matches_prim_with_ties() {
        // Integer grid: many equal distances and equal core distances.
        let pts: Vec<Point2> = (0..12)
            .flat_map(|i| (0..9).map(move |j| [i as f64, j as f64]))
            .collect();
        for k in [1, 3, 8] {
            let cores = core_distances(&pts, k).unwrap().into_vec();
            assert_eq!(build_mst(&pts, &cores), build_mst_prim(&pts, &cores));
        }
    }

    #[test]
    fn hierarchy_of_chain() {
        let mst = vec![MstEdge::new(1, 2, 2.0), MstEdge::new(0, 1, 1.0)];
        let h = build_hierarchy(3, &mst);
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].left, h[0].right, h[0].weight, h[0].size), (0, 1, 1.0, 2));
        assert_eq!((h[1].left, h[1].right, h[1].weight, h[1].size), (3, 2, 2.0, 3));
    }

    fn two_blobs(seed: u64) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = blob(&mut rng, [0.0, 0.0], 0.1, 50);
        pts.extend(blob(&mut rng, [5.0, 0.0], 0.1, 50));
        pts
    }

    fn run(points: &[Point2], mcs: usize, ms: usize) -> HdbscanResult {
        hdbscan_full(
            points,
            &HdbscanParams {
                min_cluster_size: mcs,
                min_samples: ms,
                selection: Selection::Eom,
            },
        )
        .unwrap()
    }

    #[test]
    fn two_blobs_condense_to_root_and_two_children() {
        let pts = two_blobs(1);
        let r = run(&pts, 10, 5);
        assert_eq!(r.tree.clusters[0].children, vec![1, 2]);
        assert_eq!(r.labels.n_clusters(), 2);
        let l = r.labels.labels();
        assert!(l[..50].iter().all(|&x| x == l[0]) && l[50..].iter().all(|&x| x == l[50]));
        assert_ne!(l[0], l[50]);
    }

    #[test]
    fn unsplit_single_blob_is_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pts = blob(&mut rng, [0.0, 0.0], 0.1, 500);
        let r = run(&pts, 100, 15);
        assert_eq!(r.tree.clusters.len(), 1);
        assert_eq!(r.labels.n_clusters(), 0);
    }

    #[test]
    fn simultaneous_merges_split_three_ways() {
        // Three identical 3×3 grids on an equilateral triangle: every
        // inter-blob link has the same weight.
        let mut pts = Vec::new();
        for c in [[0.0, 0.0], [10.0, 0.0], [5.0, 75f64.sqrt()]] {
            for i in 0..3 {
                for j in 0..3 {
                    pts.push([c[0] + i as f64 * 0.1, c[1] + j as f64 * 0.1]);
                }
            }
        }
        let hier = build_hierarchy(pts.len(), &build_mst_prim(&pts, &vec![0.0; pts.len()]));
        let last = &hier[hier.len() - 2..];
        assert_eq!(last[0].weight, last[1].weight);
        let tree = condense_tree(pts.len(), &hier, 9);
        assert_eq!(tree.clusters[0].children.len(), 3);
        assert!(tree.clusters[1..].iter().all(|c| c.size == 9 && c.parent == Some(0)));
    }

    #[test]
    fn min_cluster_size_above_n_leaves_only_root() {
        let pts = two_blobs(2);
        let r = run(&pts, 101, 5);
        assert_eq!(r.tree.clusters.len(), 1);
        assert_eq!(r.tree.fallouts.len(), 100);
        assert!(r.tree.fallouts.iter().all(|f| f.cluster == 0));
        assert_eq!(r.labels.n_clusters(), 0);
    }

    #[test]
    fn stragglers_fall_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, [0.0, 0.0], 0.1, 60);
        pts.extend([[8.0, 8.0], [-9.0, 7.0], [6.0, -9.0]]);
        let r = run(&pts, 10, 5);
        assert!(r.tree.clusters.iter().skip(1).all(|c| c.size >= 10));
        let l = r.labels.labels();
        assert!(l[60..].iter().all(|&x| x == NOISE));
        assert!(r.labels.n_clusters() <= 1);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![[0.3, -0.2]; 40];
        let r = run(&pts, 10, 5);
        assert_eq!(r.labels.n_clusters(), 1);
        assert_eq!(r.labels.noise_count(), 0);
    }

    #[test]
    fn uniform_noise_with_large_min_cluster_size_is_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point2> = (0..200).map(|_| [rng.gen(), rng.gen()]).collect();
        let r = run(&pts, 150, 10);
        assert_eq!(r.labels.n_clusters(), 0);
        assert_eq!(r.labels.noise_count(), 200);
    }

    #[test]
    fn leaf_selection_takes_leaves() {
        let pts = two_blobs(5);
        let r = hdbscan(
            &pts,
            &HdbscanParams {
                min_cluster_size: 10,
                min_samples: 5,
                selection: Selection::Leaf,
            },
        )
        .unwrap();
        assert!(r.n_clusters() >= 2);
    }

    #[test]
    fn too_few_points() {
        let pts = vec![[0.0, 0.0]; 5];
        assert!(hdbscan(&pts, &HdbscanParams { min_cluster_size: 2, min_samples: 5, ..Default::default() }).is_err());
    }

    #[test]
    fn selection_parses() {
        assert_eq!("leaf".parse::<Selection>().unwrap(), Selection::Leaf);
        assert!("mean".parse::<Selection>().is_err());
    }
}
