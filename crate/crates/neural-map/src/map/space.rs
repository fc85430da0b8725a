//! Map-space coordinates: poses, headings, velocities, and the projection
//! from continuous world positions onto integer map cells.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, AdResult};

/// Facing direction on the lattice. `delta` follows screen convention:
/// `x` grows rightward (columns), `y` grows downward (rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    /// Unit step in the facing direction, `(dx, dy)`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn turned_left(self) -> Heading {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn turned_right(self) -> Heading {
        self.turned_left().turned_left().turned_left()
    }

    /// Unit vector pointing to the agent's left, `(dx, dy)`.
    pub fn left_delta(self) -> (i64, i64) {
        self.turned_left().delta()
    }
}

/// Agent placement in map space. Heading is carried for the environment's
/// benefit; map addressing ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub x: i64,
    pub y: i64,
    pub heading: Heading,
}

/// Per-step displacement in map cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub u: i64,
    pub v: i64,
}

/// Projects a continuous world position onto a map cell: proportional
/// rescale, floor, then clamp into bounds.
pub fn normalize_coords(
    world: (f64, f64),
    world_extents: (usize, usize),
    map_extents: (usize, usize),
) -> AdResult<(i64, i64)> {
    if !world.0.is_finite() || !world.1.is_finite() {
        return Err(AdError::Argument {
            op: "normalize_coords",
            message: format!("non-finite world position ({}, {})", world.0, world.1),
        });
    }
    if world_extents.0 == 0 || world_extents.1 == 0 {
        return Err(AdError::Argument {
            op: "normalize_coords",
            message: "world extents must be positive".to_string(),
        });
    }
    let project = |p: f64, world: usize, map: usize| -> i64 {
        let scaled = (p * map as f64 / world as f64).floor() as i64;
        scaled.clamp(0, map as i64 - 1)
    };
    Ok((
        project(world.0, world_extents.0, map_extents.0),
        project(world.1, world_extents.1, map_extents.1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scaling_preserves_corners() {
        assert_eq!(normalize_coords((0.0, 0.0), (15, 15), (15, 15)).unwrap(), (0, 0));
        assert_eq!(normalize_coords((14.0, 14.0), (15, 15), (15, 15)).unwrap(), (14, 14));
    }

    #[test]
    fn halving_floor() {
        // floor(7.9 * 8/16) = 3, floor(3.2 * 8/16) = 1
        assert_eq!(normalize_coords((7.9, 3.2), (16, 16), (8, 8)).unwrap(), (3, 1));
    }

    #[test]
    fn out_of_range_clamps() {
        assert_eq!(normalize_coords((99.0, -5.0), (10, 10), (10, 10)).unwrap(), (9, 0));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(normalize_coords((f64::NAN, 0.0), (10, 10), (10, 10)).is_err());
        assert!(normalize_coords((0.0, f64::INFINITY), (10, 10), (10, 10)).is_err());
    }

    #[test]
    fn four_left_turns_close_the_loop() {
        for h in Heading::ALL {
            assert_eq!(h.turned_left().turned_left().turned_left().turned_left(), h);
            assert_eq!(h.turned_left().turned_right(), h);
        }
    }

    #[test]
    fn left_of_south_is_positive_x() {
        assert_eq!(Heading::South.left_delta(), (1, 0));
        assert_eq!(Heading::North.left_delta(), (-1, 0));
    }
}
