//! Static kd-tree over points of arbitrary (runtime) dimension.
//!
//! Built once per cloud and queried read-only, so it can be shared between
//! worker threads. Query results are sorted by `(distance, index)` which keeps
//! neighbor order independent of tree layout.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// A point index together with its Euclidean distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist2: f64,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds the tree over `points`, a flat array of `len / dim` points.
    pub fn build(points: &[f64], dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(points.len() % dim, 0, "flat point array length must be a multiple of dim");
        let count = points.len() / dim;
        let mut tree = Self { dim, points: points.to_vec(), order: (0..count).collect(), nodes: Vec::new() };
        if count > 0 {
            tree.build_node(0, count);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn coord(&self, index: usize, axis: usize) -> f64 {
        self.points[index * self.dim + axis]
    }

    #[inline]
    fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let axis = (0..self.dim)
            .map(|a| {
                let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.coord(i, a);
                    (lo.min(v), hi.max(v))
                });
                (a, hi - lo)
            })
            .fold((0, -1.0), |best, (a, spread)| if spread > best.1 { (a, spread) } else { best })
            .0;
        let mid = start + (end - start) / 2;
        let dim = self.dim;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * dim + axis].total_cmp(&points[b * dim + axis]).then(a.cmp(&b))
        });
        let value = self.coord(self.order[mid], axis);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn dist2(&self, index: usize, query: &[f64]) -> f64 {
        self.point(index).iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// The `k` nearest points (the query point itself included if it belongs
    /// to the cloud), sorted by distance then index.
    pub fn knn(&self, query: &[f64], k: usize) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
        self.knn_node(0, query, k, &mut heap);
        let mut out: Vec<HeapEntry> = heap.into_vec();
        out.sort();
        out.into_iter().map(|e| Neighbor { index: e.index, distance: e.dist2.sqrt() }).collect()
    }

    fn knn_node(&self, node: usize, query: &[f64], k: usize, heap: &mut BinaryHeap<HeapEntry>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let entry = HeapEntry { dist2: self.dist2(i, query), index: i };
                    if heap.len() < k {
                        heap.push(entry);
                    } else if entry < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(entry);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_node(near, query, k, heap);
                let worst = heap.peek().map_or(f64::INFINITY, |e| e.dist2);
                if heap.len() < k || diff * diff <= worst {
                    self.knn_node(far, query, k, heap);
                }
            }
        }
    }

    /// All points with distance strictly below `radius`, sorted by distance
    /// then index.
    pub fn within_radius(&self, query: &[f64], radius: f64) -> Vec<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        let mut found = Vec::new();
        if !self.is_empty() && radius > 0.0 {
            self.radius_node(0, query, radius * radius, &mut found);
        }
        found.sort();
        found.into_iter().map(|e| Neighbor { index: e.index, distance: e.dist2.sqrt() }).collect()
    }

    fn radius_node(&self, node: usize, query: &[f64], r2: f64, found: &mut Vec<HeapEntry>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let dist2 = self.dist2(i, query);
                    if dist2 < r2 {
                        found.push(HeapEntry { dist2, index: i });
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.radius_node(near, query, r2, found);
                if diff * diff < r2 {
                    self.radius_node(far, query, r2, found);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[f64], dim: usize, q: &[f64]) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = points
            .chunks(dim)
            .enumerate()
            .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2, 3, 5] {
            let pts: Vec<f64> = (0..500 * dim).map(|_| rng.random::<f64>()).collect();
            let tree = KdTree::build(&pts, dim);
            for _ in 0..20 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let reference = brute(&pts, dim, &q);
                let got = tree.knn(&q, 12);
                let expect: Vec<usize> = reference.iter().take(12).map(|e| e.1).collect();
                assert_eq!(got.iter().map(|n| n.index).collect::<Vec<_>>(), expect);
                let r = 0.3;
                let got = tree.within_radius(&q, r);
                let expect: Vec<usize> = reference.iter().filter(|e| e.0 < r * r).map(|e| e.1).collect();
                assert_eq!(got.iter().map(|n| n.index).collect::<Vec<_>>(), expect);
            }
        }
    }

    #[test]
    fn duplicate_points_tie_break_by_index() {
        let pts = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let tree = KdTree::build(&pts, 2);
        let got = tree.knn(&[0.0, 0.0], 3);
        assert_eq!(got.iter().map(|n| n.index).collect::<Vec<_>>(), vec![0, 2, 3]);
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::build(&[], 3);
        assert!(tree.knn(&[0.0, 0.0, 0.0], 4).is_empty());
        assert!(tree.within_radius(&[0.0, 0.0, 0.0], 1.0).is_empty());
    }
}
