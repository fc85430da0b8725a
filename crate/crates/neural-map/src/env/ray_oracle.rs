//! Reference ray-cast for cross-checking the incremental supercover
//! marcher: cell membership is decided by exact rational clipping of the
//! center-to-center segment against each cell's closed square, with no
//! shared code or stepping logic.

use crate::map::Pose;

use super::goal_search::IndicatorColor;
use super::maze::MazeSpec;
use super::observe::{window_cell, Observation, OBS_COLS, OBS_ROWS};

/// Whether the closed segment between the centers of `from` and `to`
/// meets the closed unit square of `cell`. Computed by Liang-Barsky
/// clipping with integer cross-multiplication; a single-point touch (an
/// exact corner) counts as a hit.
pub fn segment_meets_cell(from: (i64, i64), to: (i64, i64), cell: (i64, i64)) -> bool {
    // doubled lattice: centers odd, cell faces even
    let p = (2 * from.0 + 1, 2 * from.1 + 1);
    let q = (2 * to.0 + 1, 2 * to.1 + 1);
    let d = (q.0 - p.0, q.1 - p.1);

    // running parameter interval [lo, hi] as rationals n/m with m > 0
    let mut lo: (i128, i128) = (0, 1);
    let mut hi: (i128, i128) = (1, 1);
    let less = |a: (i128, i128), b: (i128, i128)| a.0 * b.1 < b.0 * a.1;

    for (delta, start, min_b, max_b) in [
        (d.0, p.0, 2 * cell.0, 2 * cell.0 + 2),
        (d.1, p.1, 2 * cell.1, 2 * cell.1 + 2),
    ] {
        if delta == 0 {
            if start < min_b || start > max_b {
                return false;
            }
            continue;
        }
        let (mut t_in, mut t_out) = (
            ((min_b - start) as i128, delta as i128),
            ((max_b - start) as i128, delta as i128),
        );
        if t_in.1 < 0 {
            t_in = (-t_in.0, -t_in.1);
            t_out = (-t_out.0, -t_out.1);
        }
        if less(t_out, t_in) {
            std::mem::swap(&mut t_in, &mut t_out);
        }
        if less(lo, t_in) {
            lo = t_in;
        }
        if less(t_out, hi) {
            hi = t_out;
        }
        if less(hi, lo) {
            return false;
        }
    }
    true
}

/// Oracle visibility: no wall cell other than the endpoints anywhere in
/// the maze meets the sight segment.
pub fn oracle_line_of_sight(maze: &MazeSpec, from: (i64, i64), to: (i64, i64)) -> bool {
    let (min_x, max_x) = (from.0.min(to.0), from.0.max(to.0));
    let (min_y, max_y) = (from.1.min(to.1), from.1.max(to.1));
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            if (x, y) == from || (x, y) == to {
                continue;
            }
            if maze.is_wall(x, y) && segment_meets_cell(from, to, (x, y)) {
                return false;
            }
        }
    }
    true
}

/// Oracle rendering: same window geometry and channel rules as the live
/// renderer, with visibility decided by [`oracle_line_of_sight`].
pub fn oracle_render(maze: &MazeSpec, pose: &Pose, color: IndicatorColor) -> Observation {
    let agent = (pose.x, pose.y);
    let mut obs = Observation::zeroed();
    let mut set = |channel: usize, row: usize, col: usize| {
        obs.bits[channel * OBS_ROWS * OBS_COLS + row * OBS_COLS + col] = 1;
    };
    let visible_open = |cell: (i64, i64)| -> bool {
        !maze.is_wall(cell.0, cell.1) && oracle_line_of_sight(maze, agent, cell)
    };
    for row in 0..OBS_ROWS {
        for col in 0..OBS_COLS {
            let cell = window_cell(pose, row, col);
            if !maze.in_bounds(cell.0, cell.1) {
                set(0, row, col);
            } else if maze.is_wall(cell.0, cell.1) {
                let lit = (-1..=1).any(|ddy| {
                    (-1..=1).any(|ddx| visible_open((cell.0 + ddx, cell.1 + ddy)))
                });
                if lit {
                    set(0, row, col);
                }
            } else if visible_open(cell) {
                if cell == maze.indicator {
                    match color {
                        IndicatorColor::Green => set(1, row, col),
                        IndicatorColor::Blue => set(2, row, col),
                    }
                }
                if cell == maze.goal_red {
                    set(3, row, col);
                }
                if cell == maze.goal_teal {
                    set(4, row, col);
                }
            }
        }
    }
    obs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::maze::generate_maze;
    use crate::env::observe::{render_observation, supercover};
    use crate::map::Heading;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn segment_membership_agrees_with_supercover() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let from = (rng.random_range(0..8), rng.random_range(0..8));
            let to = (rng.random_range(0..8), rng.random_range(0..8));
            let marched: std::collections::BTreeSet<_> =
                supercover(from, to).into_iter().collect();
            for y in -1..9 {
                for x in -1..9 {
                    let oracle = segment_meets_cell(from, to, (x, y));
                    assert_eq!(
                        marched.contains(&(x, y)),
                        oracle,
                        "disagree at ({x},{y}) for {from:?}->{to:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn renderers_agree_on_random_poses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let size = *[5, 7, 9, 11].choose(&mut rng).unwrap();
            let maze = generate_maze(size, &mut rng).unwrap();
            let cells: Vec<_> = maze.open_cells().collect();
            for _ in 0..10 {
                let &(x, y) = cells.choose(&mut rng).unwrap();
                let heading = *Heading::ALL.choose(&mut rng).unwrap();
                let color = if rng.random_bool(0.5) {
                    IndicatorColor::Green
                } else {
                    IndicatorColor::Blue
                };
                let pose = Pose { x, y, heading };
                let live = render_observation(&maze, &pose, color);
                let oracle = oracle_render(&maze, &pose, color);
                assert_eq!(live, oracle, "pose {pose:?} color {color:?} maze {:x}", maze.id);
            }
        }
    }

    #[test]
    fn touch_only_corner_counts_as_hit() {
        // segment (0,0)->(2,2) touches the square of (1,0) only at the
        // doubled-lattice corner (4,4)... i.e. world corner (2,2)
        assert!(segment_meets_cell((0, 0), (2, 2), (1, 0)));
        assert!(segment_meets_cell((0, 0), (2, 2), (0, 1)));
        // squares fully off the diagonal are misses
        assert!(!segment_meets_cell((0, 0), (2, 2), (2, 0)));
        assert!(!segment_meets_cell((0, 0), (2, 2), (0, 2)));
    }
}
