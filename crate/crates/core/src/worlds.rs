//! Seeded apartment-style grid worlds bundled with the harness.
//!
//! A world is a grid of equal rooms separated by 0.2 m walls. Adjacent
//! rooms are joined by 1.2 m doors along a random spanning tree plus a few
//! extra doors. Each room type brings furniture (lethal blocks) placed
//! against walls clear of the doors, a context object in front of each
//! piece, and a region marker at the room center. The goal object sits in
//! front of an anchor piece of furniture in its room.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{reachable_component, traversable_mask, Cell, CostMap, GridMeta, Point, COST_LETHAL};
use crate::sim::{ObjectKind, Scenario, WorldObject};

pub const RESOLUTION: f64 = 0.1;
const WALL: usize = 2;
const DOOR_HALF: usize = 6;
/// Furniture keeps at least this many cells from any door opening.
const DOOR_CLEARANCE: usize = 6;
/// Minimum free cells between two pieces of furniture.
const FURNITURE_GAP: usize = 6;
const PLACEMENT_ATTEMPTS: usize = 200;

/// Room layout and goal of one bundled world.
#[derive(Debug, Clone)]
pub struct WorldSpec {
    pub name: &'static str,
    pub seed: u64,
    pub cols: usize,
    pub rows: usize,
    /// Room size in cells, walls included.
    pub room_w: usize,
    pub room_h: usize,
    /// Room types in row-major order; row 0 is the bottom row.
    pub rooms: &'static [&'static str],
    pub goal: &'static str,
    pub goal_room: usize,
    /// Furniture label the goal object is placed next to.
    pub anchor: &'static str,
    pub start_room: usize,
}

pub const BUNDLED: [WorldSpec; 10] = [
    WorldSpec {
        name: "apartment_remote",
        seed: 101,
        cols: 3,
        rows: 2,
        room_w: 40,
        room_h: 36,
        rooms: &["bathroom", "hallway", "living room", "bedroom", "kitchen", "living room"],
        goal: "remote",
        goal_room: 5,
        anchor: "television",
        start_room: 1,
    },
    WorldSpec {
        name: "apartment_trash",
        seed: 102,
        cols: 3,
        rows: 2,
        room_w: 40,
        room_h: 36,
        rooms: &["bedroom", "hallway", "living room", "bathroom", "kitchen", "living room"],
        goal: "trash can",
        goal_room: 4,
        anchor: "counter",
        start_room: 1,
    },
    WorldSpec {
        name: "den_remote",
        seed: 103,
        cols: 2,
        rows: 1,
        room_w: 50,
        room_h: 40,
        rooms: &["office", "living room"],
        goal: "remote",
        goal_room: 1,
        anchor: "sofa",
        start_room: 0,
    },
    WorldSpec {
        name: "flat_trash_bathroom",
        seed: 104,
        cols: 2,
        rows: 2,
        room_w: 40,
        room_h: 36,
        rooms: &["living room", "bathroom", "bedroom", "hallway"],
        goal: "trash can",
        goal_room: 1,
        anchor: "toilet",
        start_room: 2,
    },
    WorldSpec {
        name: "office_mug",
        seed: 105,
        cols: 2,
        rows: 2,
        room_w: 40,
        room_h: 36,
        rooms: &["hallway", "office", "kitchen", "office"],
        goal: "mug",
        goal_room: 3,
        anchor: "desk",
        start_room: 0,
    },
    WorldSpec {
        name: "kitchen_mug",
        seed: 106,
        cols: 3,
        rows: 1,
        room_w: 40,
        room_h: 40,
        rooms: &["bedroom", "living room", "kitchen"],
        goal: "mug",
        goal_room: 2,
        anchor: "counter",
        start_room: 0,
    },
    WorldSpec {
        name: "bedroom_pillow",
        seed: 107,
        cols: 2,
        rows: 2,
        room_w: 40,
        room_h: 36,
        rooms: &["kitchen", "hallway", "bathroom", "bedroom"],
        goal: "pillow",
        goal_room: 3,
        anchor: "bed",
        start_room: 0,
    },
    WorldSpec {
        name: "bathroom_towel",
        seed: 108,
        cols: 3,
        rows: 1,
        room_w: 36,
        room_h: 36,
        rooms: &["living room", "hallway", "bathroom"],
        goal: "towel",
        goal_room: 2,
        anchor: "toilet",
        start_room: 0,
    },
    WorldSpec {
        name: "loft_remote",
        seed: 109,
        cols: 2,
        rows: 2,
        room_w: 44,
        room_h: 38,
        rooms: &["kitchen", "office", "bedroom", "living room"],
        goal: "remote",
        goal_room: 3,
        anchor: "television",
        start_room: 0,
    },
    WorldSpec {
        name: "studio_trash",
        seed: 110,
        cols: 2,
        rows: 1,
        room_w: 50,
        room_h: 40,
        rooms: &["living room", "kitchen"],
        goal: "trash can",
        goal_room: 1,
        anchor: "counter",
        start_room: 0,
    },
];

/// A piece of furniture: footprint in cells along and across its wall,
/// and the context labels placed in front of it.
struct Furniture {
    label: &'static str,
    along: usize,
    across: usize,
    contexts: &'static [&'static str],
}

fn furniture_for(room: &str) -> &'static [Furniture] {
    const LIVING: &[Furniture] = &[
        Furniture {
            label: "television",
            along: 12,
            across: 4,
            contexts: &["television"],
        },
        Furniture {
            label: "sofa",
            along: 18,
            across: 8,
            contexts: &["sofa"],
        },
    ];
    const KITCHEN: &[Furniture] = &[
        Furniture {
            label: "counter",
            along: 20,
            across: 6,
            contexts: &["sink", "coffee machine"],
        },
        Furniture {
            label: "refrigerator",
            along: 7,
            across: 7,
            contexts: &["refrigerator"],
        },
    ];
    const BATHROOM: &[Furniture] = &[
        Furniture {
            label: "toilet",
            along: 5,
            across: 6,
            contexts: &["toilet"],
        },
        Furniture {
            label: "vanity",
            along: 8,
            across: 5,
            contexts: &["sink"],
        },
    ];
    const BEDROOM: &[Furniture] = &[Furniture {
        label: "bed",
        along: 16,
        across: 18,
        contexts: &["bed"],
    }];
    const OFFICE: &[Furniture] = &[Furniture {
        label: "desk",
        along: 14,
        across: 7,
        contexts: &["desk"],
    }];
    match room {
        "living room" => LIVING,
        "kitchen" => KITCHEN,
        "bathroom" => BATHROOM,
        "bedroom" => BEDROOM,
        "office" => OFFICE,
        _ => &[],
    }
}

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    r0: usize,
    c0: usize,
    r1: usize,
    c1: usize,
}

impl Rect {
    /// Chebyshev gap between two rectangles; 0 when they touch or overlap.
    fn gap(&self, o: &Rect) -> usize {
        let dr = o.r0.saturating_sub(self.r1).max(self.r0.saturating_sub(o.r1));
        let dc = o.c0.saturating_sub(self.c1).max(self.c0.saturating_sub(o.c1));
        dr.max(dc)
    }
}

/// A wall side of a room, as the direction from the room center.
#[derive(Debug, Clone, Copy)]
enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

struct Built {
    map: CostMap,
    objects: Vec<WorldObject>,
    start: Point,
}

fn build(spec: &WorldSpec) -> Built {
    assert_eq!(spec.rooms.len(), spec.cols * spec.rows, "{}: room count", spec.name);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (rw, rh) = (spec.room_w, spec.room_h);
    let width = spec.cols * rw + WALL;
    let height = spec.rows * rh + WALL;
    let meta = GridMeta::new(width, height, RESOLUTION, Point::new(0.0, 0.0)).expect("valid world meta");
    let mut cm = CostMap::new(meta, COST_LETHAL);
    let interior = |i: usize| {
        let (r, c) = (i / spec.cols, i % spec.cols);
        Rect {
            r0: r * rh + WALL,
            c0: c * rw + WALL,
            r1: (r + 1) * rh - 1,
            c1: (c + 1) * rw - 1,
        }
    };
    for i in 0..spec.rooms.len() {
        let a = interior(i);
        cm.fill_rect(a.r0, a.c0, a.r1, a.c1, 0);
    }

    // doors: random spanning tree over the room grid, then one extra
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..spec.rooms.len() {
        let (r, c) = (i / spec.cols, i % spec.cols);
        if c + 1 < spec.cols {
            edges.push((i, i + 1));
        }
        if r + 1 < spec.rows {
            edges.push((i, i + spec.cols));
        }
    }
    edges.shuffle(&mut rng);
    let mut parent: Vec<usize> = (0..spec.rooms.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut doors: Vec<(usize, usize)> = Vec::new();
    let mut spare = Vec::new();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            doors.push((a, b));
        } else {
            spare.push((a, b));
        }
    }
    doors.extend(spare.into_iter().take(1));
    doors.sort_unstable();
    let mut openings: Vec<Rect> = Vec::new();
    for &(a, b) in &doors {
        let (ia, ib) = (interior(a), interior(b));
        let door = if b == a + 1 {
            let center = rng.random_range(ia.r0 + DOOR_HALF + 4..=ia.r1 - DOOR_HALF - 4);
            Rect {
                r0: center - DOOR_HALF,
                c0: ia.c1 + 1,
                r1: center + DOOR_HALF - 1,
                c1: ib.c0 - 1,
            }
        } else {
            let center = rng.random_range(ia.c0 + DOOR_HALF + 4..=ia.c1 - DOOR_HALF - 4);
            Rect {
                r0: ia.r1 + 1,
                c0: center - DOOR_HALF,
                r1: ib.r0 - 1,
                c1: center + DOOR_HALF - 1,
            }
        };
        cm.fill_rect(door.r0, door.c0, door.r1, door.c1, 0);
        openings.push(door);
    }

    let mut objects = Vec::new();
    let mut goal_placed = false;
    for (i, room) in spec.rooms.iter().enumerate() {
        let area = interior(i);
        let items = furniture_for(room);
        let layout = (0..PLACEMENT_ATTEMPTS)
            .find_map(|_| place_furniture(&area, items, &openings, &mut rng))
            .unwrap_or_else(|| panic!("{}: furniture does not fit in room {i}", spec.name));
        for (f, (r, side)) in items.iter().zip(layout) {
            cm.fill_rect(r.r0, r.c0, r.r1, r.c1, COST_LETHAL);
            let n = f.contexts.len();
            for (k, label) in f.contexts.iter().enumerate() {
                let frac = (k + 1) as f64 / (n + 1) as f64;
                let cell = in_front(&r, side, frac, 2);
                objects.push(WorldObject {
                    label: label.to_string(),
                    position: meta.grid_to_world(cell),
                    kind: ObjectKind::Object,
                });
            }
            if i == spec.goal_room && f.label == spec.anchor {
                let frac = if n == 1 { 0.25 } else { 0.5 };
                let cell = in_front(&r, side, frac, 5);
                objects.push(WorldObject {
                    label: spec.goal.to_string(),
                    position: meta.grid_to_world(cell),
                    kind: ObjectKind::Object,
                });
                goal_placed = true;
            }
        }
        let center = Cell::new((area.r0 + area.r1) / 2, (area.c0 + area.c1) / 2);
        let center = cm
            .nearest_within(center, 2.0, |c| cm.get(c) == 0)
            .unwrap_or_else(|| panic!("{}: room {i} has no free cell near its center", spec.name));
        objects.push(WorldObject {
            label: room.to_string(),
            position: meta.grid_to_world(center),
            kind: ObjectKind::Region,
        });
    }
    assert!(goal_placed, "{}: goal anchor {} missing from room {}", spec.name, spec.anchor, spec.goal_room);

    let s = interior(spec.start_room);
    let center = Cell::new((s.r0 + s.r1) / 2 - 3, (s.c0 + s.c1) / 2 - 3);
    let open = |c: Cell| {
        (-4..=4isize).all(|dr| (-4..=4isize).all(|dc| c.offset(dr, dc).is_some_and(|n| cm.meta.contains(n) && cm.get(n) == 0)))
    };
    let start = cm
        .nearest_within(center, 2.0, open)
        .map(|c| meta.grid_to_world(c))
        .unwrap_or_else(|| panic!("{}: no open start cell", spec.name));
    Built { map: cm, objects, start }
}

/// One random attempt at pushing every piece against a wall, clear of the
/// doors and of each other.
fn place_furniture(area: &Rect, items: &[Furniture], doors: &[Rect], rng: &mut ChaCha8Rng) -> Option<Vec<(Rect, Side)>> {
    let mut placed: Vec<(Rect, Side)> = Vec::new();
    for f in items {
        let mut options: Vec<(Side, f64)> = [Side::Bottom, Side::Top, Side::Left, Side::Right]
            .into_iter()
            .flat_map(|s| (0..=10).map(move |k| (s, f64::from(k) / 10.0)))
            .collect();
        options.shuffle(rng);
        let chosen = options.into_iter().find_map(|(side, t)| {
            let r = against_wall(area, side, t, f.along, f.across)?;
            let clear = doors.iter().all(|d| r.gap(d) > DOOR_CLEARANCE) && placed.iter().all(|(p, _)| r.gap(p) > FURNITURE_GAP);
            clear.then_some((r, side))
        })?;
        placed.push(chosen);
    }
    Some(placed)
}

/// Footprint of a piece of furniture pushed against `side` of the room,
/// positioned at fraction `t` along that wall.
fn against_wall(area: &Rect, side: Side, t: f64, along: usize, across: usize) -> Option<Rect> {
    let (w, h) = (area.c1 - area.c0 + 1, area.r1 - area.r0 + 1);
    let place = |len: usize, size: usize| -> Option<usize> {
        let room = len.checked_sub(size)?;
        Some((room as f64 * t).round() as usize)
    };
    Some(match side {
        Side::Bottom | Side::Top => {
            let c0 = area.c0 + place(w, along)?;
            let r0 = if matches!(side, Side::Bottom) { area.r0 } else { area.r1 + 1 - across };
            Rect {
                r0,
                c0,
                r1: r0 + across - 1,
                c1: c0 + along - 1,
            }
        }
        Side::Left | Side::Right => {
            let r0 = area.r0 + place(h, along)?;
            let c0 = if matches!(side, Side::Left) { area.c0 } else { area.c1 + 1 - across };
            Rect {
                r0,
                c0,
                r1: r0 + along - 1,
                c1: c0 + across - 1,
            }
        }
    })
}

/// Cell `gap` cells out from the room-facing side of `r`, at fraction
/// `frac` along that side.
fn in_front(r: &Rect, side: Side, frac: f64, gap: usize) -> Cell {
    let along_c = r.c0 + ((r.c1 - r.c0) as f64 * frac).round() as usize;
    let along_r = r.r0 + ((r.r1 - r.r0) as f64 * frac).round() as usize;
    match side {
        Side::Bottom => Cell::new(r.r1 + gap, along_c),
        Side::Top => Cell::new(r.r0 - gap, along_c),
        Side::Left => Cell::new(along_r, r.c1 + gap),
        Side::Right => Cell::new(along_r, r.c0 - gap),
    }
}

/// Ground-truth map and scenario for one bundled world. The scenario's map
/// path is `<name>.pgm`, relative to wherever the scenario file is written.
pub fn generate(spec: &WorldSpec) -> (CostMap, Scenario) {
    let built = build(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let heading = f64::from(rng.random_range(0..12u8)) * std::f64::consts::PI / 6.0;
    let scenario = Scenario {
        name: spec.name.to_string(),
        map: format!("{}.pgm", spec.name).into(),
        start: [built.start.x, built.start.y, crate::grid::normalize_angle(heading)],
        goal_category: spec.goal.to_string(),
        objects: built.objects,
        seeds: crate::sim::scenario::Seeds { episode: spec.seed },
        perception: Default::default(),
        // simulated runs plan shortest paths; the medial planner is for robots
        planner: crate::planner::PlannerKind::Fmm,
        max_steps: crate::sim::scenario::DEFAULT_MAX_STEPS,
        sim: Default::default(),
        policy: Default::default(),
        doubly_right: Default::default(),
        base_dir: Default::default(),
    };
    (built.map, scenario)
}

/// Every bundled world, in a fixed order.
pub fn bundled() -> Vec<(CostMap, Scenario)> {
    BUNDLED.iter().map(generate).collect()
}

/// Write each bundled world as `<name>.json`, `<name>.pgm` and
/// `<name>.meta` into `dir`; returns the scenario paths.
pub fn write_bundled(dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>, crate::mapio::MapIoError> {
    std::fs::create_dir_all(dir).map_err(|source| crate::mapio::MapIoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (map, scenario) in bundled() {
        crate::mapio::save_map(&dir.join(&scenario.map), &map)?;
        let path = dir.join(format!("{}.json", scenario.name));
        std::fs::write(&path, scenario.to_json() + "\n").map_err(|source| crate::mapio::MapIoError::Io {
            path: path.clone(),
            source,
        })?;
        out.push(path);
    }
    Ok(out)
}

/// Cells of the start cell's component, for checks.
pub fn free_component(map: &CostMap, start: Point) -> BTreeSet<Cell> {
    let start = map.meta.world_to_grid(start).expect("start on map");
    reachable_component(&traversable_mask(map), start)
        .map(|m| m.true_cells().collect())
        .unwrap_or_default()
}
