//! Held-out maze sets: building, disjoint training-time sampling, and
//! line-oriented JSON persistence.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AdError, AdResult};

use super::maze::{generate_maze, MazeSpec};

/// Sizes a training episode may draw from.
pub const TRAIN_SIZES: [usize; 6] = [5, 7, 9, 11, 13, 15];
/// Sizes used for the held-out evaluation set.
pub const TEST_SIZES: [usize; 5] = [7, 9, 11, 13, 15];

/// Evaluation reporting bucket. Small covers sizes 7 to 11, large 13 to
/// 15; training size 5 falls outside both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeBucket {
    Small,
    Large,
}

pub fn size_bucket(size: usize) -> Option<SizeBucket> {
    match size {
        7..=11 => Some(SizeBucket::Small),
        13..=15 => Some(SizeBucket::Large),
        _ => None,
    }
}

/// Generates `count` mazes with distinct content hashes, sizes uniform
/// over [`TEST_SIZES`].
pub fn build_test_set(count: usize, rng: &mut ChaCha8Rng) -> AdResult<Vec<MazeSpec>> {
    build_test_set_from(count, &TEST_SIZES, rng)
}

/// Consecutive duplicate draws tolerated before concluding the size list
/// cannot supply the requested number of distinct mazes. Small lattices
/// have few distinct layouts (a handful of dozens at size 5), so the
/// guard turns an infinite loop into an error.
const STALL_LIMIT: usize = 20_000;

/// As [`build_test_set`], over an explicit size list.
pub fn build_test_set_from(
    count: usize,
    sizes: &[usize],
    rng: &mut ChaCha8Rng,
) -> AdResult<Vec<MazeSpec>> {
    let mut seen = HashSet::with_capacity(count);
    let mut mazes = Vec::with_capacity(count);
    let mut stalled = 0usize;
    while mazes.len() < count {
        let size = *sizes.choose(rng).ok_or(AdError::Argument {
            op: "maze-set",
            message: "empty size list".to_string(),
        })?;
        let maze = generate_maze(size, rng)?;
        if seen.insert(maze.id) {
            mazes.push(maze);
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Err(AdError::State {
                    op: "maze-set",
                    message: format!(
                        "only {} distinct mazes found for sizes {sizes:?} after {STALL_LIMIT} \
                         consecutive duplicates; {count} were requested",
                        mazes.len()
                    ),
                });
            }
        }
    }
    Ok(mazes)
}

/// Draws a training maze: uniform size over [`TRAIN_SIZES`], resampling
/// whenever the generated maze collides with the held-out set.
pub fn sample_training_maze(
    rng: &mut ChaCha8Rng,
    test_hashes: &HashSet<u64>,
) -> AdResult<MazeSpec> {
    sample_training_maze_from(rng, &TRAIN_SIZES, test_hashes)
}

/// As [`sample_training_maze`], over an explicit size list.
pub fn sample_training_maze_from(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    test_hashes: &HashSet<u64>,
) -> AdResult<MazeSpec> {
    for _ in 0..STALL_LIMIT {
        let size = *sizes.choose(rng).ok_or(AdError::Argument {
            op: "maze-set",
            message: "empty size list".to_string(),
        })?;
        let maze = generate_maze(size, rng)?;
        if !test_hashes.contains(&maze.id) {
            return Ok(maze);
        }
    }
    Err(AdError::State {
        op: "maze-set",
        message: format!(
            "every maze drawn for sizes {sizes:?} over {STALL_LIMIT} attempts was held out; \
             the held-out set covers the whole supply"
        ),
    })
}

pub fn hash_set(mazes: &[MazeSpec]) -> HashSet<u64> {
    mazes.iter().map(|m| m.id).collect()
}

/// Writes one JSON object per line, in order.
pub fn save_maze_set(path: &Path, mazes: &[MazeSpec]) -> AdResult<()> {
    let mut out = fs::File::create(path)?;
    for maze in mazes {
        writeln!(out, "{}", maze.to_json_line())?;
    }
    Ok(())
}

/// Reads a line-JSON maze file, re-verifying every content hash.
pub fn load_maze_set(path: &Path) -> AdResult<Vec<MazeSpec>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut mazes = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let maze = MazeSpec::from_json_line(&line).map_err(|e| AdError::Argument {
            op: "maze-set",
            message: format!("line {}: {e}", index + 1),
        })?;
        mazes.push(maze);
    }
    Ok(mazes)
}
