//! Median-split kd-tree for nearest-neighbor queries over 3D points.
//!
//! Distance ties are broken by lowest point index so that queries return the
//! same neighbor a lowest-index-first linear scan would.

use crate::geometry::Point3;

const LEAF_SIZE: usize = 8;
const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    left: u32,
    right: u32,
    start: u32,
    end: u32,
}

#[derive(Clone, Debug)]
pub struct KdTree3 {
    nodes: Vec<Node>,
    order: Vec<u32>,
    points: Vec<Point3>,
    root: u32,
}

impl KdTree3 {
    pub fn build(points: &[Point3]) -> Self {
        assert!(!points.is_empty(), "kd-tree requires at least one point");
        let mut tree = Self {
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
            order: (0..points.len() as u32).collect(),
            points: points.to_vec(),
            root: 0,
        };
        tree.root = tree.build_range(0, points.len());
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_range(&mut self, start: usize, end: usize) -> u32 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &idx in &self.order[start..end] {
            let p = self.points[idx as usize];
            for (axis, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                let c = p.coord(axis);
                if c < *l {
                    *l = c;
                }
                if c > *h {
                    *h = c;
                }
            }
        }

        if end - start <= LEAF_SIZE {
            self.nodes.push(Node {
                lo,
                hi,
                left: NO_CHILD,
                right: NO_CHILD,
                start: start as u32,
                end: end as u32,
            });
            return (self.nodes.len() - 1) as u32;
        }

        let mut axis = 0;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }
        // Positional median split: terminates even when all coordinates tie.
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize]
                .coord(axis)
                .total_cmp(&points[b as usize].coord(axis))
        });

        let left = self.build_range(start, mid);
        let right = self.build_range(mid, end);
        self.nodes.push(Node {
            lo,
            hi,
            left,
            right,
            start: 0,
            end: 0,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Index and squared distance of the nearest point; ties go to the
    /// lowest index.
    pub fn nearest(&self, query: Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, query, &mut best);
        best
    }

    fn search(&self, node_id: u32, query: Point3, best: &mut (usize, f64)) {
        let node = &self.nodes[node_id as usize];
        if node.left == NO_CHILD {
            for &idx in &self.order[node.start as usize..node.end as usize] {
                let idx = idx as usize;
                let d2 = query.dist2(self.points[idx]);
                if d2 < best.1 || (d2 == best.1 && idx < best.0) {
                    *best = (idx, d2);
                }
            }
            return;
        }

        let dl = box_dist2(&self.nodes[node.left as usize], query);
        let dr = box_dist2(&self.nodes[node.right as usize], query);
        let (first, d_first, second, d_second) = if dl <= dr {
            (node.left, dl, node.right, dr)
        } else {
            (node.right, dr, node.left, dl)
        };
        // Prune strictly-farther boxes only: a box at exactly the best
        // distance may still hold a lower-index tie.
        if d_first <= best.1 {
            self.search(first, query, best);
        }
        if d_second <= best.1 {
            self.search(second, query, best);
        }
    }
}

fn box_dist2(node: &Node, q: Point3) -> f64 {
    let mut d2 = 0.0;
    for axis in 0..3 {
        let c = q.coord(axis);
        if c < node.lo[axis] {
            let d = node.lo[axis] - c;
            d2 += d * d;
        } else if c > node.hi[axis] {
            let d = c - node.hi[axis];
            d2 += d * d;
        }
    }
    d2
}
