use std::collections::HashMap;
use std::io::Write;

use crate::error::Result;
use crate::geometry::Point;

/// Search tree with cost-to-come bookkeeping.
#[derive(Clone, Debug)]
pub struct Tree<const D: usize> {
    nodes: Vec<Point<D>>,
    parent: Vec<Option<usize>>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
    grid: Grid<D>,
}

/// Uniform bucket grid over node positions for neighbour queries.
#[derive(Clone, Debug)]
struct Grid<const D: usize> {
    cell: f64,
    buckets: HashMap<[i64; D], Vec<usize>>,
}

impl<const D: usize> Grid<D> {
    fn key(&self, p: &Point<D>) -> [i64; D] {
        std::array::from_fn(|i| (p[i] / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: &Point<D>, id: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Calls `f` on every bucket in the box `lo..=hi` of cell keys.
    fn visit(&self, lo: [i64; D], hi: [i64; D], mut f: impl FnMut(&[usize])) {
        let mut k = lo;
        loop {
            if let Some(b) = self.buckets.get(&k) {
                f(b);
            }
            let mut i = 0;
            loop {
                if i == D {
                    return;
                }
                if k[i] < hi[i] {
                    k[i] += 1;
                    break;
                }
                k[i] = lo[i];
                i += 1;
            }
        }
    }
}

/// Bucket edge length used by [`Tree::new`] (m).
const DEFAULT_CELL: f64 = 0.5;

impl<const D: usize> Tree<D> {
    pub fn new(root: Point<D>) -> Self {
        Self::with_cell(root, DEFAULT_CELL)
    }

    /// Tree whose neighbour index uses buckets of edge `cell`; a cell near
    /// the typical query radius works best.
    pub fn with_cell(root: Point<D>, cell: f64) -> Self {
        let mut grid = Grid {
            cell: if cell > 0.0 && cell.is_finite() { cell } else { DEFAULT_CELL },
            buckets: HashMap::new(),
        };
        grid.insert(&root, 0);
        Self {
            nodes: vec![root],
            parent: vec![None],
            cost: vec![0.0],
            children: vec![Vec::new()],
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &Point<D> {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Point<D>] {
        &self.nodes
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost[i]
    }

    /// Closest node, lowest index on ties.
    pub fn nearest(&self, p: &Point<D>) -> usize {
        let mut best = (0, f64::INFINITY);
        let consider = |ids: &[usize], best: &mut (usize, f64)| {
            for &i in ids {
                let d = (self.nodes[i] - p).norm_squared();
                if d < best.1 || (d == best.1 && i < best.0) {
                    *best = (i, d);
                }
            }
        };
        let centre = self.grid.key(p);
        // grow a cube of buckets until the best hit is provably closest;
        // fall back to a scan once the cube outgrows the tree
        for r in 0i64.. {
            let cells = (2 * r + 1).pow(D as u32) as usize;
            if cells > 2 * self.len() {
                consider(&(0..self.len()).collect::<Vec<_>>(), &mut best);
                break;
            }
            let lo = centre.map(|c| c - r);
            let hi = centre.map(|c| c + r);
            self.grid.visit(lo, hi, |ids| consider(ids, &mut best));
            let reach = r as f64 * self.grid.cell;
            if best.1.is_finite() && best.1.sqrt() < reach {
                break;
            }
        }
        best.0
    }

    /// Indices of nodes within `radius` of `p`, ascending.
    pub fn within(&self, p: &Point<D>, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = self.grid.key(&p.map(|x| x - radius));
        let hi = self.grid.key(&p.map(|x| x + radius));
        let cells: f64 = (0..D).map(|i| (hi[i] - lo[i] + 1) as f64).product();
        let mut out = Vec::new();
        if cells > self.len() as f64 {
            out.extend((0..self.len()).filter(|&i| (self.nodes[i] - p).norm_squared() <= r2));
            return out;
        }
        self.grid.visit(lo, hi, |ids| {
            out.extend(ids.iter().copied().filter(|&i| (self.nodes[i] - p).norm_squared() <= r2));
        });
        out.sort_unstable();
        out
    }

    pub fn push(&mut self, p: Point<D>, parent: usize, cost: f64) -> usize {
        let id = self.nodes.len();
        self.nodes.push(p);
        self.parent.push(Some(parent));
        self.cost.push(cost);
        self.children.push(Vec::new());
        self.children[parent].push(id);
        self.grid.insert(&p, id);
        id
    }

    /// Moves `node` under `new_parent` and updates the costs of its subtree.
    pub fn rewire(&mut self, node: usize, new_parent: usize) {
        if let Some(old) = self.parent[node] {
            self.children[old].retain(|&c| c != node);
        }
        self.parent[node] = Some(new_parent);
        self.children[new_parent].push(node);
        let new_cost = self.cost[new_parent] + (self.nodes[node] - self.nodes[new_parent]).norm();
        let delta = new_cost - self.cost[node];
        self.cost[node] = new_cost;
        let mut stack = self.children[node].clone();
        while let Some(c) = stack.pop() {
            self.cost[c] += delta;
            stack.extend_from_slice(&self.children[c]);
        }
    }

    /// Node positions from the root to `i`.
    pub fn branch(&self, i: usize) -> Vec<Point<D>> {
        let mut out = vec![self.nodes[i]];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            out.push(self.nodes[p]);
            cur = p;
        }
        out.reverse();
        out
    }

    /// True iff every stored cost equals parent cost plus edge length
    /// within `tol`.
    pub fn check_costs(&self, tol: f64) -> bool {
        (0..self.len()).all(|i| match self.parent[i] {
            None => self.cost[i] == 0.0,
            Some(p) => (self.cost[p] + (self.nodes[i] - self.nodes[p]).norm() - self.cost[i]).abs() <= tol,
        })
    }

    /// CSV with columns `node,parent,cost,x0..x{D-1}`; the root's parent is
    /// written as -1.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["node".to_string(), "parent".into(), "cost".into()];
        header.extend((0..D).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![
                i.to_string(),
                self.parent[i].map_or("-1".to_string(), |p| p.to_string()),
                self.cost[i].to_string(),
            ];
            row.extend(self.nodes[i].iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    #[test]
    fn rewire_propagates_to_descendants() {
        let mut t = Tree::new(Vector2::new(0.0, 0.0));
        let a = t.push(Vector2::new(0.0, 2.0), 0, 2.0);
        let b = t.push(Vector2::new(1.0, 2.0), a, 3.0);
        let c = t.push(Vector2::new(2.0, 2.0), b, 4.0);
        let d = t.push(Vector2::new(1.0, 0.0), 0, 1.0);
        assert!(t.check_costs(1e-12));
        t.rewire(b, d);
        assert!(t.check_costs(1e-12));
        assert_eq!(t.parent(b), Some(d));
        assert!((t.cost(c) - 4.0).abs() < 1e-12);
        assert_eq!(t.branch(c).len(), 4);
    }

    #[test]
    fn nearest_ties_to_lowest_index() {
        let mut t = Tree::new(Vector2::new(1.0, 0.0));
        t.push(Vector2::new(-1.0, 0.0), 0, 2.0);
        assert_eq!(t.nearest(&Vector2::zeros()), 0);
        assert_eq!(t.within(&Vector2::zeros(), 1.0), vec![0, 1]);
        assert!(t.within(&Vector2::zeros(), 0.5).is_empty());
    }

    proptest::proptest! {
        #[test]
        fn grid_queries_match_a_scan(
            pts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..300),
            q in (-4.0f64..4.0, -4.0f64..4.0),
            radius in 0.0f64..2.0,
            cell in 0.05f64..2.0,
        ) {
            let mut t = Tree::with_cell(Vector2::new(pts[0].0, pts[0].1), cell);
            for (i, p) in pts.iter().enumerate().skip(1) {
                t.push(Vector2::new(p.0, p.1), i - 1, 0.0);
            }
            let q = Vector2::new(q.0, q.1);
            let d: Vec<f64> = t.nodes().iter().map(|p| (p - q).norm_squared()).collect();
            let best = (0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b))).unwrap();
            proptest::prop_assert_eq!(t.nearest(&q), best);
            let inside: Vec<usize> = (0..d.len()).filter(|&i| d[i] <= radius * radius).collect();
            proptest::prop_assert_eq!(t.within(&q, radius), inside);
        }
    }
}
