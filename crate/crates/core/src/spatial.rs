//! Static k-d tree over `D`-dimensional points.
//!
//! Used for the 3D support-region queries on clouds and for the 2D
//! k-nearest-neighbour and spanning-tree searches over transformed poles.
//! The tree is immutable after construction and can be shared across threads.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
pub(crate) struct Node<const D: usize> {
    pub(crate) lo: [f64; D],
    pub(crate) hi: [f64; D],
    /// Range into `KdTree::order`.
    pub(crate) start: usize,
    pub(crate) end: usize,
    pub(crate) children: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    pub(crate) order: Vec<usize>,
    pub(crate) nodes: Vec<Node<D>>,
}

#[inline]
pub(crate) fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

impl<const D: usize> Node<D> {
    /// Squared distance from `q` to this node's bounding box.
    #[inline]
    pub(crate) fn box_dist2(&self, q: &[f64; D]) -> f64 {
        let mut s = 0.0;
        for k in 0..D {
            let d = if q[k] < self.lo[k] {
                self.lo[k] - q[k]
            } else if q[k] > self.hi[k] {
                q[k] - self.hi[k]
            } else {
                0.0
            };
            s += d * d;
        }
        s
    }
}

#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const D: usize> KdTree<D> {
    pub fn new(points: Vec<[f64; D]>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        if !points.is_empty() {
            build(&points, &mut order, 0, points.len(), &mut nodes);
        }
        KdTree {
            points,
            order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; D]] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &[f64; D] {
        &self.points[index]
    }

    /// Indices of every point within distance `r` of `q` (inclusive), ascending.
    pub fn within(&self, q: &[f64; D], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_into(q, r, &mut out);
        out
    }

    /// As [`KdTree::within`], reusing `out`'s allocation.
    pub fn within_into(&self, q: &[f64; D], r: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let r2 = r * r;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.box_dist2(q) > r2 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        if dist2(&self.points[i], q) <= r2 {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// The `k` nearest points to `q` as `(distance, index)`, ordered by
    /// distance then index. `exclude` drops one index from consideration.
    pub fn nearest(&self, q: &[f64; D], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((id, bd)) = stack.pop() {
            if heap.len() == k && bd > heap.peek().map_or(f64::INFINITY, |c| c.d2) {
                continue;
            }
            let node = &self.nodes[id];
            match node.children {
                Some((l, r)) => {
                    let dl = self.nodes[l].box_dist2(q);
                    let dr = self.nodes[r].box_dist2(q);
                    // Visit the closer child first (pushed last).
                    if dl <= dr {
                        stack.push((r, dr));
                        stack.push((l, dl));
                    } else {
                        stack.push((l, dl));
                        stack.push((r, dr));
                    }
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        if Some(i) == exclude {
                            continue;
                        }
                        let c = Candidate {
                            d2: dist2(&self.points[i], q),
                            index: i,
                        };
                        if heap.len() < k {
                            heap.push(c);
                        } else if c < *heap.peek().expect("heap is full") {
                            heap.pop();
                            heap.push(c);
                        }
                    }
                }
            }
        }
        let mut out: Vec<(f64, usize)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.d2.sqrt(), c.index))
            .collect();
        out.truncate(k);
        out
    }
}

fn build<const D: usize>(
    points: &[[f64; D]],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node<D>>,
) -> usize {
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for &i in &order[start..end] {
        for k in 0..D {
            lo[k] = lo[k].min(points[i][k]);
            hi[k] = hi[k].max(points[i][k]);
        }
    }
    let id = nodes.len();
    nodes.push(Node {
        lo,
        hi,
        start,
        end,
        children: None,
    });
    if end - start <= LEAF_SIZE {
        return id;
    }
    let axis = (0..D)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        points[a][axis]
            .total_cmp(&points[b][axis])
            .then(a.cmp(&b))
    });
    let l = build(points, order, start, mid, nodes);
    let r = build(points, order, mid, end, nodes);
    nodes[id].children = Some((l, r));
    id
}
