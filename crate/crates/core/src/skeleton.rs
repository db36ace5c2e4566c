//! Medial-axis extraction by Zhang–Suen thinning, plus the exact Euclidean
//! clearance field used to judge how far a path keeps from obstacles.
//!
//! Cells outside the mask, including everything beyond the map border, are
//! background for both operations.

use crate::grid::{label_components, Cell, Grid, Mask};

/// Thinned cells of a traversable mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonSet {
    mask: Mask,
}

impl SkeletonSet {
    pub fn from_mask(mask: Mask) -> Self {
        Self { mask }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.mask.is(cell)
    }

    /// Skeleton cells in `(row, col)` order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.mask.true_cells()
    }

    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_mask(&self) -> &Mask {
        &self.mask
    }

    pub fn into_mask(self) -> Mask {
        self.mask
    }
}

// Neighbor offsets P2..P9 in padded index space, clockwise from north.
fn ring(stride: usize) -> [isize; 8] {
    let s = stride as isize;
    [-s, -s + 1, 1, s + 1, s, s - 1, -1, -s - 1]
}

/// Zhang–Suen thinning to a fixed point.
///
/// A pixel is removed in a sub-iteration when it has between 2 and 6
/// foreground neighbors, exactly one background→foreground transition
/// around its ring, and the sub-iteration's two directional products are
/// zero (`P2·P4·P6`, `P4·P6·P8` first; `P2·P4·P8`, `P2·P6·P8` second).
///
/// Plain Zhang–Suen erases some tiny components outright (a 2×2 block
/// vanishes in one pass). Any mask component left without a skeleton cell
/// gets its most interior cell back, so the skeleton keeps one component
/// per mask component.
pub fn thin(mask: &Mask) -> SkeletonSet {
    let (w, h) = (mask.width(), mask.height());
    let stride = w + 2;
    let mut img = vec![0u8; stride * (h + 2)];
    let mut live = Vec::new();
    for c in mask.true_cells() {
        let i = (c.row + 1) * stride + c.col + 1;
        img[i] = 1;
        live.push(i);
    }
    let offs = ring(stride);
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for sub in 0..2 {
            doomed.clear();
            for &i in &live {
                let n: [u8; 8] = std::array::from_fn(|k| img[(i as isize + offs[k]) as usize]);
                let b: u8 = n.iter().sum();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| n[k] == 0 && n[(k + 1) % 8] == 1).count();
                if a != 1 {
                    continue;
                }
                let [p2, _, p4, _, p6, _, p8, _] = n;
                let remove = if sub == 0 {
                    p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                } else {
                    p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                };
                if remove {
                    doomed.push(i);
                }
            }
            if !doomed.is_empty() {
                changed = true;
                for &i in &doomed {
                    img[i] = 0;
                }
                live.retain(|&i| img[i] == 1);
            }
        }
        if !changed {
            break;
        }
    }

    let mut out = Grid::from_fn(w, h, |c| img[(c.row + 1) * stride + c.col + 1] == 1);
    restore_vanished(mask, &mut out);
    SkeletonSet { mask: out }
}

fn restore_vanished(mask: &Mask, skeleton: &mut Mask) {
    let (labels, n) = label_components(mask);
    if n == 0 {
        return;
    }
    let mut covered = vec![false; n as usize + 1];
    for c in skeleton.true_cells() {
        covered[labels[c] as usize] = true;
    }
    if covered[1..].iter().all(|v| *v) {
        return;
    }
    let clearance = clearance_field(mask);
    let mut best: Vec<Option<(f64, Cell)>> = vec![None; n as usize + 1];
    for c in mask.true_cells() {
        let l = labels[c] as usize;
        if covered[l] {
            continue;
        }
        // Strictly greater keeps the first cell in (row, col) order on ties.
        if best[l].is_none_or(|(d, _)| clearance[c] > d) {
            best[l] = Some((clearance[c], c));
        }
    }
    for (_, c) in best.into_iter().flatten() {
        skeleton[c] = true;
    }
}

/// Exact Euclidean distance (in cells) from every cell to the nearest
/// background cell, counting the ring just outside the map as background.
/// Background cells map to 0.
pub fn clearance_field(mask: &Mask) -> Grid<f64> {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    // finite stand-in for infinity keeps the parabola intersections exact
    let inf = ((pw + ph) * (pw + ph)) as f64;
    let mut f = vec![0.0f64; pw * ph];
    for c in mask.true_cells() {
        f[(c.row + 1) * pw + c.col + 1] = inf;
    }
    let mut buf = vec![0.0; pw.max(ph)];
    let mut out = vec![0.0; pw.max(ph)];
    // columns, then rows (separable squared EDT, Felzenszwalb & Huttenlocher)
    for col in 0..pw {
        for row in 0..ph {
            buf[row] = f[row * pw + col];
        }
        edt_1d(&buf[..ph], &mut out[..ph]);
        for row in 0..ph {
            f[row * pw + col] = out[row];
        }
    }
    for row in 0..ph {
        buf[..pw].copy_from_slice(&f[row * pw..(row + 1) * pw]);
        edt_1d(&buf[..pw], &mut out[..pw]);
        f[row * pw..(row + 1) * pw].copy_from_slice(&out[..pw]);
    }
    Grid::from_fn(w, h, |c| f[(c.row + 1) * pw + c.col + 1].sqrt())
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *out = dq * dq + f[v[k]];
    }
}
