//! Map generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use navsim_core::grid::{Cell, CostMap, Grid, GridMeta, Mask, Point, COST_LETHAL, COST_UNKNOWN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn meta(w: usize, h: usize, res: f64) -> GridMeta {
    GridMeta::new(w, h, res, Point::new(0.0, 0.0)).unwrap()
}

/// Free space cluttered with random obstacle rectangles.
pub fn random_room_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> CostMap {
    let mut cm = CostMap::new(meta(w, h, 0.05), 0);
    for _ in 0..rng.random_range(4..14) {
        let r0 = rng.random_range(0..h);
        let c0 = rng.random_range(0..w);
        let r1 = r0 + rng.random_range(0..12);
        let c1 = c0 + rng.random_range(0..12);
        cm.fill_rect(r0, c0, r1, c1, COST_LETHAL);
    }
    cm
}

/// Room map with unknown blobs and sprinkled per-cell noise, for frontier
/// extraction.
pub fn random_frontier_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> CostMap {
    let mut cm = random_room_map(rng, w, h);
    for _ in 0..rng.random_range(2..8) {
        let r0 = rng.random_range(0..h);
        let c0 = rng.random_range(0..w);
        let r1 = r0 + rng.random_range(2..25);
        let c1 = c0 + rng.random_range(2..25);
        cm.fill_rect(r0, c0, r1, c1, COST_UNKNOWN);
    }
    for c in cm.meta.cells().collect::<Vec<_>>() {
        match rng.random_range(0..100) {
            0 => cm.set(c, COST_UNKNOWN),
            1 => cm.set(c, COST_LETHAL),
            2 => cm.set(c, rng.random_range(1..253)),
            3 => cm.set(c, 253),
            _ => {}
        }
    }
    cm
}

/// Random binary mask: noise plus rectangles, so it has many components.
pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Mask {
    let cm = random_room_map(rng, w, h);
    let mut m = cm.cost.map(|v| *v == 0);
    for c in m.cells().collect::<Vec<_>>() {
        if rng.random_range(0..40) == 0 {
            m[c] = !m[c];
        }
    }
    m
}

/// A network of straight corridors (3–7 cells wide) joined at their ends,
/// with start and goal cells inside it.
pub struct CorridorCase {
    pub map: CostMap,
    pub start: Cell,
    pub goal: Cell,
}

pub fn random_corridor_map(rng: &mut ChaCha8Rng) -> CorridorCase {
    let (w, h) = (64, 64);
    let mut cm = CostMap::new(meta(w, h, 0.05), COST_LETHAL);
    let mut pts = vec![Cell::new(rng.random_range(6..58), rng.random_range(6..58))];
    let mut carved: Vec<Cell> = Vec::new();
    for _ in 0..rng.random_range(2..5) {
        let from = *pts.last().unwrap();
        let to = Cell::new(rng.random_range(6..58), rng.random_range(6..58));
        let half = rng.random_range(1..4);
        let corner = if rng.random_bool(0.5) {
            Cell::new(from.row, to.col)
        } else {
            Cell::new(to.row, from.col)
        };
        for (a, b) in [(from, corner), (corner, to)] {
            let (r0, r1) = (a.row.min(b.row), a.row.max(b.row));
            let (c0, c1) = (a.col.min(b.col), a.col.max(b.col));
            cm.fill_rect(r0.saturating_sub(half), c0.saturating_sub(half), r1 + half, c1 + half, 0);
            carved.push(a);
            carved.push(b);
        }
        pts.push(to);
    }
    let start = pts[0];
    let goal = *pts.last().unwrap();
    CorridorCase { map: cm, start, goal }
}

/// A* with octile heuristic over 8-connected free cells; ties broken by
/// (f, g, cell). Returns a distance-optimal path.
pub fn astar(mask: &Mask, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    let h = |c: Cell| {
        let dr = c.row.abs_diff(goal.row) as f64;
        let dc = c.col.abs_diff(goal.col) as f64;
        dr.max(dc) + (2f64.sqrt() - 1.0) * dr.min(dc)
    };
    let mut g: BTreeMap<Cell, f64> = BTreeMap::new();
    let mut prev: BTreeMap<Cell, Cell> = BTreeMap::new();
    let mut open = BinaryHeap::new();
    let key = |x: f64| (x * 1e9).round() as i64;
    g.insert(start, 0.0);
    open.push(Reverse((key(h(start)), 0i64, start)));
    let mut closed = BTreeSet::new();
    while let Some(Reverse((_, _, c))) = open.pop() {
        if c == goal {
            let mut path = vec![goal];
            let mut cur = goal;
            while let Some(&p) = prev.get(&cur) {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        if !closed.insert(c) {
            continue;
        }
        let gc = g[&c];
        for n in mask.neighbors8(c) {
            if !mask[n] || closed.contains(&n) {
                continue;
            }
            let step = if n.row != c.row && n.col != c.col { 2f64.sqrt() } else { 1.0 };
            let ng = gc + step;
            if g.get(&n).is_none_or(|&old| ng < old - 1e-12) {
                g.insert(n, ng);
                prev.insert(n, c);
                open.push(Reverse((key(ng + h(n)), key(ng), n)));
            }
        }
    }
    None
}

/// Dijkstra on the 16-connected grid graph (knight moves included), a
/// close upper bound on Euclidean distance in open space. Unit = cells.
pub fn dijkstra16(mask: &Mask, source: Cell) -> Grid<f64> {
    let moves: Vec<(isize, isize)> = (-2..=2isize)
        .flat_map(|dr| (-2..=2isize).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| (dr, dc) != (0, 0) && dr.abs().max(dc.abs()) <= 2)
        .filter(|&(dr, dc)| dr.abs().max(dc.abs()) == 1 || (dr.abs() + dc.abs() == 3))
        .collect();
    let mut dist = Grid::new(mask.width(), mask.height(), f64::INFINITY);
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((0i64, source)));
    while let Some(Reverse((_, c))) = heap.pop() {
        let d = dist[c];
        for &(dr, dc) in &moves {
            let Some(n) = c.offset(dr, dc) else { continue };
            if !mask.is(n) {
                continue;
            }
            let nd = d + ((dr * dr + dc * dc) as f64).sqrt();
            if nd < dist[n] - 1e-12 {
                dist[n] = nd;
                heap.push(Reverse(((nd * 1e9) as i64, n)));
            }
        }
    }
    dist
}

/// Straight evaluation of the frontier predicate at every cell.
pub fn brute_frontier(cm: &CostMap) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    for c in cm.meta.cells() {
        let v = cm.get(c);
        if cm.lethal.contains(v) || v == COST_UNKNOWN {
            continue;
        }
        let mut any = false;
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if (dr, dc) == (0, 0) {
                    continue;
                }
                if let Some(n) = c.offset(dr, dc) {
                    if cm.meta.contains(n) && cm.get(n) == COST_UNKNOWN {
                        any = true;
                    }
                }
            }
        }
        if any {
            out.insert(c);
        }
    }
    out
}

/// Union-find grouping of cells under 8-adjacency.
pub fn union_find_groups(cells: &BTreeSet<Cell>) -> Vec<BTreeSet<Cell>> {
    let list: Vec<Cell> = cells.iter().copied().collect();
    let mut parent: Vec<usize> = (0..list.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, a) in list.iter().enumerate() {
        for (j, b) in list.iter().enumerate().skip(i + 1) {
            if a.is_adjacent8(*b) {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<Cell>> = BTreeMap::new();
    for (i, c) in list.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(*c);
    }
    groups.into_values().collect()
}

/// Count 8-connected components by flood fill.
pub fn count_components(mask: &Mask) -> usize {
    let mut seen = Grid::new(mask.width(), mask.height(), false);
    let mut n = 0;
    for c in mask.cells() {
        if !mask[c] || seen[c] {
            continue;
        }
        n += 1;
        let mut stack = vec![c];
        seen[c] = true;
        while let Some(x) = stack.pop() {
            for y in mask.neighbors8(x) {
                if mask[y] && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    n
}

pub fn rand_point_in(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Cell {
    Cell::new(rng.random_range(lo..hi), rng.random_range(lo..hi))
}
