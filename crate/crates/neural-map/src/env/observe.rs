//! Egocentric occluded observations: a 15-forward by 3-wide window in
//! heading frame, five binary channels, with per-cell line-of-sight
//! computed by an integer supercover march.

use crate::autodiff::Real;
use crate::map::Pose;

use super::goal_search::IndicatorColor;
use super::maze::MazeSpec;

pub const OBS_ROWS: usize = 15;
pub const OBS_COLS: usize = 3;
pub const OBS_CHANNELS: usize = 5;
pub const OBS_LEN: usize = OBS_CHANNELS * OBS_ROWS * OBS_COLS;

/// Binary egocentric view. Channel order: walls, green indicator, blue
/// indicator, red goal, teal goal. Row 0 is the agent's own row; rows
/// extend forward. Column 0 is to the agent's left, 1 ahead, 2 right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub bits: [u8; OBS_LEN],
}

impl Observation {
    pub fn zeroed() -> Self {
        Observation { bits: [0; OBS_LEN] }
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> u8 {
        self.bits[channel * OBS_ROWS * OBS_COLS + row * OBS_COLS + col]
    }

    fn set(&mut self, channel: usize, row: usize, col: usize) {
        self.bits[channel * OBS_ROWS * OBS_COLS + row * OBS_COLS + col] = 1;
    }

    /// Flat numeric copy for the embedding network.
    pub fn to_elems<E: Real>(&self) -> Vec<E> {
        self.bits.iter().map(|&b| E::lit(b as f64)).collect()
    }
}

/// World cell under window coordinates `(row, col)` for a pose: forward
/// `row` cells, and one cell toward the agent's left for column 0 or
/// right for column 2.
pub fn window_cell(pose: &Pose, row: usize, col: usize) -> (i64, i64) {
    let (fx, fy) = pose.heading.delta();
    let (lx, ly) = pose.heading.left_delta();
    let side = 1 - col as i64;
    (pose.x + fx * row as i64 + lx * side, pose.y + fy * row as i64 + ly * side)
}

/// Every lattice cell touched by the closed segment between the centers
/// of `from` and `to`, in march order. Cells met exactly at a corner are
/// included on both sides of the crossing, so diagonal gaps between two
/// walls do not leak visibility.
pub fn supercover(from: (i64, i64), to: (i64, i64)) -> Vec<(i64, i64)> {
    // double the lattice so cell centers are odd integer points
    let (px, py) = (2 * from.0 + 1, 2 * from.1 + 1);
    let (qx, qy) = (2 * to.0 + 1, 2 * to.1 + 1);
    let (dx, dy) = (qx - px, qy - py);
    let (sx, sy) = (dx.signum(), dy.signum());

    let mut cells = vec![from];
    let (mut cx, mut cy) = from;
    while (cx, cy) != to {
        // fraction of the segment at which the next x/y cell boundary is
        // crossed, as non-negative rationals n/d with d = |delta|
        let tx = if sx == 0 {
            None
        } else {
            let boundary = 2 * cx + 1 + sx;
            Some(((boundary - px) * sx, dx * sx))
        };
        let ty = if sy == 0 {
            None
        } else {
            let boundary = 2 * cy + 1 + sy;
            Some(((boundary - py) * sy, dy * sy))
        };
        match (tx, ty) {
            (Some((nx, dx_)), Some((ny, dy_))) => {
                let cmp = (nx * dy_).cmp(&(ny * dx_));
                match cmp {
                    std::cmp::Ordering::Less => cx += sx,
                    std::cmp::Ordering::Greater => cy += sy,
                    std::cmp::Ordering::Equal => {
                        // exact corner: both flanking cells are touched
                        cells.push((cx + sx, cy));
                        cells.push((cx, cy + sy));
                        cx += sx;
                        cy += sy;
                    }
                }
            }
            (Some(_), None) => cx += sx,
            (None, Some(_)) => cy += sy,
            (None, None) => unreachable!("loop exits when the endpoint is reached"),
        }
        cells.push((cx, cy));
    }
    cells
}

/// True when no wall stands strictly between the two cells. Endpoints do
/// not block themselves.
pub fn line_of_sight(maze: &MazeSpec, from: (i64, i64), to: (i64, i64)) -> bool {
    supercover(from, to)
        .into_iter()
        .filter(|&c| c != from && c != to)
        .all(|(x, y)| !maze.is_wall(x, y))
}

/// Renders the occluded window. Open cells appear iff they have line of
/// sight from the agent; wall cells appear iff they touch (8-adjacency)
/// some visible open cell, which is what "terminating a line of sight"
/// means on the lattice; cells beyond the maze bounds are always walls.
pub fn render_observation(maze: &MazeSpec, pose: &Pose, color: IndicatorColor) -> Observation {
    let agent = (pose.x, pose.y);
    debug_assert!(!maze.is_wall(agent.0, agent.1), "agent on a wall cell");
    let mut obs = Observation::zeroed();
    let visible_open = |cell: (i64, i64)| -> bool {
        !maze.is_wall(cell.0, cell.1) && line_of_sight(maze, agent, cell)
    };
    for row in 0..OBS_ROWS {
        for col in 0..OBS_COLS {
            let cell = window_cell(pose, row, col);
            if !maze.in_bounds(cell.0, cell.1) {
                obs.set(0, row, col);
                continue;
            }
            if maze.is_wall(cell.0, cell.1) {
                let lit = (-1..=1).any(|ddy| {
                    (-1..=1).any(|ddx| visible_open((cell.0 + ddx, cell.1 + ddy)))
                });
                if lit {
                    obs.set(0, row, col);
                }
                continue;
            }
            if !visible_open(cell) {
                continue;
            }
            if cell == maze.indicator {
                match color {
                    IndicatorColor::Green => obs.set(1, row, col),
                    IndicatorColor::Blue => obs.set(2, row, col),
                }
            }
            if cell == maze.goal_red {
                obs.set(3, row, col);
            }
            if cell == maze.goal_teal {
                obs.set(4, row, col);
            }
        }
    }
    debug_assert!(obs.bits.iter().all(|&b| b <= 1));
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::Heading;

    fn maze_from(rows: &[&str]) -> MazeSpec {
        let size = rows.len();
        assert!(rows.iter().all(|r| r.len() == size));
        let grid = rows.iter().flat_map(|r| r.chars().map(|c| c != '.')).collect();
        // special cells parsed from markers: S start, I indicator, R red, T teal
        let find = |marker: char| -> (i64, i64) {
            for (y, row) in rows.iter().enumerate() {
                if let Some(x) = row.find(marker) {
                    return (x as i64, y as i64);
                }
            }
            panic!("marker {marker} missing");
        };
        let mut m = MazeSpec {
            id: 0,
            size,
            grid,
            start: find('S'),
            indicator: find('I'),
            goal_red: find('R'),
            goal_teal: find('T'),
        };
        // markers are open cells
        for cell in [m.start, m.indicator, m.goal_red, m.goal_teal] {
            m.grid[cell.1 as usize * size + cell.0 as usize] = false;
        }
        m.id = m.content_hash();
        m
    }

    #[test]
    fn supercover_straight_line_is_row() {
        let cells = supercover((1, 1), (5, 1));
        assert_eq!(cells, vec![(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]);
    }

    #[test]
    fn supercover_diagonal_includes_corner_flanks() {
        let cells = supercover((0, 0), (2, 2));
        // every exact corner crossing contributes both side cells
        assert!(cells.contains(&(1, 0)) && cells.contains(&(0, 1)));
        assert!(cells.contains(&(2, 1)) && cells.contains(&(1, 2)));
        assert!(cells.contains(&(1, 1)));
    }

    #[test]
    fn supercover_is_symmetric_as_a_set() {
        for to in [(3, 1), (2, 4), (-2, 3), (5, 5), (0, -4)] {
            let mut fwd = supercover((0, 0), to);
            let mut rev = supercover(to, (0, 0));
            fwd.sort_unstable();
            rev.sort_unstable();
            assert_eq!(fwd, rev, "asymmetric cover to {to:?}");
        }
    }

    fn maze_raw(
        rows: &[&str],
        start: (i64, i64),
        indicator: (i64, i64),
        goal_red: (i64, i64),
        goal_teal: (i64, i64),
    ) -> MazeSpec {
        let size = rows.len();
        assert!(rows.iter().all(|r| r.len() == size));
        let mut m = MazeSpec {
            id: 0,
            size,
            grid: rows.iter().flat_map(|r| r.chars().map(|c| c != '.')).collect(),
            start,
            indicator,
            goal_red,
            goal_teal,
        };
        for cell in [start, indicator, goal_red, goal_teal] {
            assert!(!m.is_wall(cell.0, cell.1), "special cell {cell:?} on a wall");
        }
        m.id = m.content_hash();
        m
    }

    #[test]
    fn facing_dead_end_rows_beyond_wall_are_dark() {
        // agent boxed in at (1,1); a full wall line at y=2 cuts off the
        // open cells further south
        let m = maze_raw(
            &[
                "#######",
                "#.#####",
                "#######",
                "#..####",
                "#..####",
                "#..####",
                "#######",
            ],
            (1, 1),
            (1, 3),
            (2, 3),
            (1, 4),
        );
        let pose = Pose { x: 1, y: 1, heading: Heading::South };
        let obs = render_observation(&m, &pose, IndicatorColor::Green);
        // row 0: agent cell open, flanking walls render
        assert_eq!(obs.get(0, 0, 1), 0);
        assert_eq!(obs.get(0, 0, 0), 1);
        assert_eq!(obs.get(0, 0, 2), 1);
        // row 1: the facing wall line renders across the window
        for col in 0..OBS_COLS {
            assert_eq!(obs.get(0, 1, col), 1, "wall line col {col}");
        }
        // rows 2..=5 stay inside the maze and are fully occluded
        for row in 2..=5 {
            for col in 0..OBS_COLS {
                for ch in 0..OBS_CHANNELS {
                    assert_eq!(obs.get(ch, row, col), 0, "ch {ch} row {row} col {col}");
                }
            }
        }
        // rows 6.. leave the 7x7 maze; the out-of-bounds fringe is
        // wall-padded and carries nothing else
        for row in 6..OBS_ROWS {
            for col in 0..OBS_COLS {
                assert_eq!(obs.get(0, row, col), 1, "padding row {row} col {col}");
                for ch in 1..OBS_CHANNELS {
                    assert_eq!(obs.get(ch, row, col), 0, "ch {ch} row {row} col {col}");
                }
            }
        }
    }

    #[test]
    fn open_corridor_marks_sides_for_all_rows() {
        // 15x15 maze whose column x=1 is open for y in 1..=13; the agent
        // at the top looks south down the full corridor
        let top = "#".repeat(15);
        let mid = format!("#.{}", "#".repeat(13));
        let mut rows: Vec<&str> = Vec::new();
        rows.push(&top);
        for _ in 1..14 {
            rows.push(&mid);
        }
        rows.push(&top);
        let m = maze_raw(&rows, (1, 1), (1, 2), (1, 12), (1, 13));
        let pose = Pose { x: 1, y: 1, heading: Heading::South };
        let obs = render_observation(&m, &pose, IndicatorColor::Blue);
        for row in 0..OBS_ROWS {
            // heading south puts world x=2 in the left window column and
            // x=0 in the right; both are wall the whole way down, and the
            // final row is out of bounds, wall-padded
            assert_eq!(obs.get(0, row, 0), 1, "left wall row {row}");
            assert_eq!(obs.get(0, row, 2), 1, "right wall row {row}");
        }
        // the corridor itself stays open until the border wall at y=14
        for row in 0..13 {
            assert_eq!(obs.get(0, row, 1), 0, "corridor open at row {row}");
        }
        assert_eq!(obs.get(0, 13, 1), 1);
        assert_eq!(obs.get(0, 14, 1), 1);
        // blue episode: indicator on channel 2 only, one cell ahead
        assert_eq!(obs.get(2, 1, 1), 1);
        assert_eq!(obs.get(1, 1, 1), 0);
        // both goals visible down the corridor
        assert_eq!(obs.get(3, 11, 1), 1);
        assert_eq!(obs.get(4, 12, 1), 1);
    }

    #[test]
    fn corner_touch_blocks_diagonal_sight() {
        // the diagonal (1,1)->(2,2) passes exactly through the corner
        // shared with (2,1) and (1,2); a wall on either flank blocks it
        let open = maze_from(&["#####", "#S..#", "#I..#", "#R.T#", "#####"]);
        assert!(line_of_sight(&open, (1, 1), (2, 2)));
        for flank in [(2, 1), (1, 2)] {
            let mut m = open.clone();
            m.grid[flank.1 as usize * 5 + flank.0 as usize] = true;
            assert!(!line_of_sight(&m, (1, 1), (2, 2)), "flank {flank:?} did not block");
        }
    }

    #[test]
    fn window_cells_follow_heading() {
        let pose = Pose { x: 5, y: 5, heading: Heading::South };
        assert_eq!(window_cell(&pose, 0, 1), (5, 5));
        assert_eq!(window_cell(&pose, 3, 1), (5, 8));
        // facing south, left is +x
        assert_eq!(window_cell(&pose, 0, 0), (6, 5));
        assert_eq!(window_cell(&pose, 0, 2), (4, 5));
        let pose = Pose { x: 5, y: 5, heading: Heading::East };
        assert_eq!(window_cell(&pose, 2, 1), (7, 5));
        // facing east, left is -y
        assert_eq!(window_cell(&pose, 0, 0), (5, 4));
    }

    #[test]
    fn observation_is_binary_everywhere() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let m = crate::env::maze::generate_maze(9, &mut rng).unwrap();
            for &(x, y) in m.open_cells().collect::<Vec<_>>().iter() {
                for heading in Heading::ALL {
                    let pose = Pose { x, y, heading };
                    let obs = render_observation(&m, &pose, IndicatorColor::Green);
                    assert!(obs.bits.iter().all(|&b| b <= 1));
                }
            }
        }
    }
}
