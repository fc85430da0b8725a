//! Procedural maze generation on the odd lattice, reachability checks,
//! content hashing, and the line-JSON maze-set format.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, AdResult};
use crate::map::{Heading, Pose};

/// A square maze with its indicator cell and the two color goals. The
/// per-episode indicator color is not part of the maze; episodes sample it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeSpec {
    /// FNV-1a 64 over size, grid, and the special cells.
    pub id: u64,
    /// Odd extent in [5, 15]; the maze is `size x size`.
    pub size: usize,
    /// Row-major walls, `true` = wall.
    pub grid: Vec<bool>,
    /// Topmost open cell, row-major scan; episodes start here heading south.
    pub start: (i64, i64),
    /// Fixed cell directly below the start.
    pub indicator: (i64, i64),
    pub goal_red: (i64, i64),
    pub goal_teal: (i64, i64),
}

impl MazeSpec {
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.size && (y as usize) < self.size
    }

    /// Walls everywhere outside the grid.
    pub fn is_wall(&self, x: i64, y: i64) -> bool {
        if !self.in_bounds(x, y) {
            return true;
        }
        self.grid[y as usize * self.size + x as usize]
    }

    pub fn start_pose(&self) -> Pose {
        Pose { x: self.start.0, y: self.start.1, heading: Heading::South }
    }

    pub fn open_cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.size as i64).flat_map(move |y| {
            (0..self.size as i64).filter_map(move |x| (!self.is_wall(x, y)).then_some((x, y)))
        })
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.size < 5 || self.size > 15 || self.size % 2 == 0 {
            return Err(format!("size {} out of range", self.size));
        }
        if self.grid.len() != self.size * self.size {
            return Err("grid length mismatch".to_string());
        }
        let edge = self.size as i64 - 1;
        for i in 0..self.size as i64 {
            for (x, y) in [(i, 0), (i, edge), (0, i), (edge, i)] {
                if !self.is_wall(x, y) {
                    return Err(format!("border open at ({x},{y})"));
                }
            }
        }
        let topmost = self
            .open_cells()
            .next()
            .ok_or_else(|| "no open cells".to_string())?;
        if topmost != self.start {
            return Err(format!("start {:?} is not the topmost open cell {topmost:?}", self.start));
        }
        if self.indicator != (self.start.0, self.start.1 + 1) {
            return Err(format!("indicator {:?} not directly below start", self.indicator));
        }
        for (name, cell) in
            [("indicator", self.indicator), ("goal_red", self.goal_red), ("goal_teal", self.goal_teal)]
        {
            if self.is_wall(cell.0, cell.1) {
                return Err(format!("{name} at {cell:?} is a wall"));
            }
        }
        if self.goal_red == self.goal_teal {
            return Err("goals coincide".to_string());
        }
        let pairs = [
            ("goal_red", self.goal_red, self.goal_teal),
            ("goal_teal", self.goal_teal, self.goal_red),
        ];
        for (name, goal, other) in pairs {
            if goal == self.start || goal == self.indicator {
                return Err(format!("{name} sits on start or indicator"));
            }
            // reaching one goal must never force stepping on the other,
            // or the episode would be unwinnable
            if bfs_path_avoiding(self, self.start, goal, Some(other)).is_none() {
                return Err(format!("{name} unreachable from start around the other goal"));
            }
        }
        Ok(())
    }

    /// FNV-1a 64 over the maze content; stable across platforms.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.size as u64).to_le_bytes());
        for &wall in &self.grid {
            eat(&[wall as u8]);
        }
        for cell in [self.start, self.indicator, self.goal_red, self.goal_teal] {
            eat(&cell.0.to_le_bytes());
            eat(&cell.1.to_le_bytes());
        }
        h
    }
}

/// Breadth-first search over open cells, 4-connected. Returns the step
/// count of a shortest path, `None` if unreachable.
pub fn bfs_solvable(maze: &MazeSpec, from: (i64, i64), to: (i64, i64)) -> Option<usize> {
    bfs_path(maze, from, to).map(|p| p.len() - 1)
}

/// Shortest open-cell path including both endpoints.
pub fn bfs_path(maze: &MazeSpec, from: (i64, i64), to: (i64, i64)) -> Option<Vec<(i64, i64)>> {
    bfs_path_avoiding(maze, from, to, None)
}

/// Shortest path that additionally treats `avoid` as impassable.
pub fn bfs_path_avoiding(
    maze: &MazeSpec,
    from: (i64, i64),
    to: (i64, i64),
    avoid: Option<(i64, i64)>,
) -> Option<Vec<(i64, i64)>> {
    if maze.is_wall(from.0, from.1) || maze.is_wall(to.0, to.1) || avoid == Some(to) {
        return None;
    }
    let n = maze.size;
    let idx = |(x, y): (i64, i64)| y as usize * n + x as usize;
    let mut prev: Vec<Option<(i64, i64)>> = vec![None; n * n];
    let mut seen = vec![false; n * n];
    let mut queue = std::collections::VecDeque::new();
    seen[idx(from)] = true;
    queue.push_back(from);
    while let Some(cell) = queue.pop_front() {
        if cell == to {
            let mut path = vec![to];
            let mut cur = to;
            while let Some(p) = prev[idx(cur)] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let next = (cell.0 + dx, cell.1 + dy);
            if !maze.is_wall(next.0, next.1) && Some(next) != avoid && !seen[idx(next)] {
                seen[idx(next)] = true;
                prev[idx(next)] = Some(cell);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Fraction of candidate inter-room walls opened after carving, producing
/// loops in an otherwise perfect maze.
const LOOP_FRACTION: f64 = 0.10;

/// Generates one maze: recursive-backtracker carve over the odd lattice,
/// random loop openings, forced indicator cell, then goal sampling with a
/// minimum start distance. Retries wholesale until the invariants hold.
pub fn generate_maze(size: usize, rng: &mut ChaCha8Rng) -> AdResult<MazeSpec> {
    if size % 2 == 0 || !(5..=15).contains(&size) {
        return Err(AdError::Argument {
            op: "generate_maze",
            message: format!("size must be odd in [5,15], got {size}"),
        });
    }
    loop {
        let maze = generate_candidate(size, rng);
        if let Some(mut maze) = maze {
            if maze.check_invariants().is_ok() {
                maze.id = maze.content_hash();
                return Ok(maze);
            }
        }
    }
}

fn generate_candidate(size: usize, rng: &mut ChaCha8Rng) -> Option<MazeSpec> {
    let n = size;
    let mut grid = vec![true; n * n];
    let open = |grid: &mut Vec<bool>, x: i64, y: i64| grid[y as usize * n + x as usize] = false;

    // depth-first carve over rooms at odd coordinates
    let room_count = (n - 1) / 2;
    let mut visited = vec![false; room_count * room_count];
    let room_idx = |x: i64, y: i64| ((y as usize - 1) / 2) * room_count + (x as usize - 1) / 2;
    let mut stack = vec![(1i64, 1i64)];
    visited[room_idx(1, 1)] = true;
    open(&mut grid, 1, 1);
    while let Some(&(cx, cy)) = stack.last() {
        let mut dirs = [(2i64, 0i64), (-2, 0), (0, 2), (0, -2)];
        dirs.shuffle(rng);
        let next = dirs.iter().find_map(|&(dx, dy)| {
            let (nx, ny) = (cx + dx, cy + dy);
            let inside = nx >= 1 && ny >= 1 && nx < n as i64 && ny < n as i64;
            (inside && !visited[room_idx(nx, ny)]).then_some((nx, ny))
        });
        match next {
            Some((nx, ny)) => {
                visited[room_idx(nx, ny)] = true;
                open(&mut grid, (cx + nx) / 2, (cy + ny) / 2);
                open(&mut grid, nx, ny);
                stack.push((nx, ny));
            }
            None => {
                stack.pop();
            }
        }
    }

    // loop openings: interior walls separating two open cells on a lattice axis
    for y in 1..n as i64 - 1 {
        for x in 1..n as i64 - 1 {
            let between_rooms = (x % 2 == 0) != (y % 2 == 0);
            if between_rooms && grid[y as usize * n + x as usize] && rng.random_bool(LOOP_FRACTION)
            {
                open(&mut grid, x, y);
            }
        }
    }

    let start = (1i64, 1i64);
    let indicator = (1i64, 2i64);
    open(&mut grid, indicator.0, indicator.1);

    let mut maze = MazeSpec {
        id: 0,
        size,
        grid,
        start,
        indicator,
        goal_red: (0, 0),
        goal_teal: (0, 0),
    };
    let min_dist = (size / 2) as i64;
    let candidates: Vec<(i64, i64)> = maze
        .open_cells()
        .filter(|&(x, y)| {
            (x - start.0).abs() + (y - start.1).abs() >= min_dist
                && (x, y) != start
                && (x, y) != indicator
        })
        .collect();
    if candidates.len() < 2 {
        return None;
    }
    let first = rng.random_range(0..candidates.len());
    let mut second = rng.random_range(0..candidates.len() - 1);
    if second >= first {
        second += 1;
    }
    maze.goal_red = candidates[first];
    maze.goal_teal = candidates[second];
    Some(maze)
}

/// Wire format: one JSON object per line with the grid as `#`/`.` row
/// strings and the hash in hex.
#[derive(Serialize, Deserialize)]
struct MazeLine {
    id: String,
    size: usize,
    grid: Vec<String>,
    start: (i64, i64),
    indicator: (i64, i64),
    goal_red: (i64, i64),
    goal_teal: (i64, i64),
}

impl MazeSpec {
    pub fn to_json_line(&self) -> String {
        let grid = (0..self.size)
            .map(|y| {
                (0..self.size)
                    .map(|x| if self.grid[y * self.size + x] { '#' } else { '.' })
                    .collect::<String>()
            })
            .collect();
        let line = MazeLine {
            id: format!("{:016x}", self.id),
            size: self.size,
            grid,
            start: self.start,
            indicator: self.indicator,
            goal_red: self.goal_red,
            goal_teal: self.goal_teal,
        };
        serde_json::to_string(&line).expect("maze serialization cannot fail")
    }

    pub fn from_json_line(text: &str) -> AdResult<Self> {
        let line: MazeLine = serde_json::from_str(text)
            .map_err(|e| AdError::Argument { op: "maze-set", message: format!("bad line: {e}") })?;
        let bad = |message: String| AdError::Argument { op: "maze-set", message };
        let id = u64::from_str_radix(&line.id, 16)
            .map_err(|e| bad(format!("bad id {}: {e}", line.id)))?;
        if line.grid.len() != line.size || line.grid.iter().any(|r| r.chars().count() != line.size)
        {
            return Err(bad(format!("grid is not {0}x{0}", line.size)));
        }
        let mut grid = Vec::with_capacity(line.size * line.size);
        for row in &line.grid {
            for ch in row.chars() {
                match ch {
                    '#' => grid.push(true),
                    '.' => grid.push(false),
                    other => return Err(bad(format!("bad grid char {other:?}"))),
                }
            }
        }
        let maze = MazeSpec {
            id,
            size: line.size,
            grid,
            start: line.start,
            indicator: line.indicator,
            goal_red: line.goal_red,
            goal_teal: line.goal_teal,
        };
        if maze.content_hash() != id {
            return Err(bad(format!("id {:016x} does not match content", id)));
        }
        Ok(maze)
    }
}
