//! Grid line drawing and line-of-sight.

use crate::grid::{Cell, Mask};

/// Every cell the segment between the centers of `a` and `b` passes through,
/// including both side cells where it crosses exactly through a cell corner
/// (Dedu's supercover line). Order follows the segment from `a` to `b`.
pub fn supercover(a: Cell, b: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (a.col as isize, a.row as isize);
    let (x1, y1) = (b.col as isize, b.row as isize);
    let (xstep, ystep) = ((x1 - x).signum(), (y1 - y).signum());
    let (dx, dy) = ((x1 - x).abs(), (y1 - y).abs());
    let (ddx, ddy) = (2 * dx, 2 * dy);
    let at = |x: isize, y: isize| Cell::new(y as usize, x as usize);
    let mut out = vec![a];
    if ddx >= ddy {
        let mut error = dx;
        let mut prev = dx;
        for _ in 0..dx {
            x += xstep;
            error += ddy;
            if error > ddx {
                y += ystep;
                error -= ddx;
                match (error + prev).cmp(&ddx) {
                    std::cmp::Ordering::Less => out.push(at(x, y - ystep)),
                    std::cmp::Ordering::Greater => out.push(at(x - xstep, y)),
                    std::cmp::Ordering::Equal => {
                        out.push(at(x, y - ystep));
                        out.push(at(x - xstep, y));
                    }
                }
            }
            out.push(at(x, y));
            prev = error;
        }
    } else {
        let mut error = dy;
        let mut prev = dy;
        for _ in 0..dy {
            y += ystep;
            error += ddx;
            if error > ddy {
                x += xstep;
                error -= ddy;
                match (error + prev).cmp(&ddy) {
                    std::cmp::Ordering::Less => out.push(at(x - xstep, y)),
                    std::cmp::Ordering::Greater => out.push(at(x, y - ystep)),
                    std::cmp::Ordering::Equal => {
                        out.push(at(x - xstep, y));
                        out.push(at(x, y - ystep));
                    }
                }
            }
            out.push(at(x, y));
            prev = error;
        }
    }
    out
}

/// 8-connected Bresenham line from `a` to `b`, both inclusive.
pub fn bresenham(a: Cell, b: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (a.col as isize, a.row as isize);
    let (x1, y1) = (b.col as isize, b.row as isize);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let (sx, sy) = ((x1 - x).signum(), (y1 - y).signum());
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(Cell::new(y as usize, x as usize));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// True iff every supercover cell between `a` and `b` is set in `mask`.
pub fn line_of_sight(a: Cell, b: Cell, mask: &Mask) -> bool {
    supercover(a, b).into_iter().all(|c| mask.is(c))
}
