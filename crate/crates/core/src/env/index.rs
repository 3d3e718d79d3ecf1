use super::{Obstacle, Workspace};
use crate::geometry::Point;

/// Uniform bucket grid over the first two axes.
///
/// Cells outside the workspace are clamped to the border cells, so an
/// obstacle sticking out of the workspace is still found.
#[derive(Clone, Debug)]
pub(super) struct GridIndex<const D: usize> {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    cells: Vec<Vec<u32>>,
    /// Small sets are scanned linearly.
    linear: Option<usize>,
}

const LINEAR_LIMIT: usize = 24;

impl<const D: usize> GridIndex<D> {
    pub(super) fn build(workspace: &Workspace<D>, obstacles: &[Obstacle<D>]) -> Self {
        if obstacles.len() <= LINEAR_LIMIT {
            return Self {
                origin: [0.0; 2],
                cell: [1.0; 2],
                dims: [1, 1],
                cells: Vec::new(),
                linear: Some(obstacles.len()),
            };
        }
        let mut dims = [1usize; 2];
        let mut cell = [1.0; 2];
        let mut origin = [0.0; 2];
        let target = ((obstacles.len() as f64).sqrt() * 1.5).clamp(4.0, 128.0) as usize;
        for a in 0..2 {
            let lo = workspace.lower[a];
            let hi = workspace.upper[a];
            origin[a] = lo;
            dims[a] = target;
            cell[a] = ((hi - lo) / target as f64).max(1e-9);
        }
        let mut cells = vec![Vec::new(); dims[0] * dims[1]];
        let mut idx = Self {
            origin,
            cell,
            dims,
            cells: Vec::new(),
            linear: None,
        };
        for (i, o) in obstacles.iter().enumerate() {
            let (lo, hi) = o.aabb();
            let (r0, r1) = idx.range(&lo, &hi);
            for x in r0[0]..=r1[0] {
                for y in r0[1]..=r1[1] {
                    cells[x * dims[1] + y].push(i as u32);
                }
            }
        }
        idx.cells = cells;
        idx
    }

    fn coord(&self, a: usize, v: f64) -> usize {
        let c = ((v - self.origin[a]) / self.cell[a]).floor();
        if c.is_nan() || c < 0.0 {
            0
        } else {
            (c as usize).min(self.dims[a] - 1)
        }
    }

    fn range(&self, lo: &Point<D>, hi: &Point<D>) -> ([usize; 2], [usize; 2]) {
        (
            [self.coord(0, lo[0]), self.coord(1, lo[1])],
            [self.coord(0, hi[0]), self.coord(1, hi[1])],
        )
    }

    /// Indices of obstacles whose cells overlap the box `[lo, hi]`, sorted
    /// and deduplicated.
    pub(super) fn candidates(&self, lo: &Point<D>, hi: &Point<D>) -> Vec<usize> {
        if let Some(n) = self.linear {
            return (0..n).collect();
        }
        let (r0, r1) = self.range(lo, hi);
        let mut out: Vec<usize> = Vec::new();
        for x in r0[0]..=r1[0] {
            for y in r0[1]..=r1[1] {
                out.extend(self.cells[x * self.dims[1] + y].iter().map(|&i| i as usize));
            }
        }
        if (r0[0], r0[1]) != (r1[0], r1[1]) {
            out.sort_unstable();
            out.dedup();
        }
        out
    }
}
