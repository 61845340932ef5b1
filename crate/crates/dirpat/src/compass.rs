//! The eight directional compass masks, the per-direction response stack,
//! and extraction of primary and secondary direction indices.

use crate::error::{Error, Result};
use crate::imaging::{correlate3x3, GrayImage, Kernel3x3, ResponseImage};

/// Number of compass directions.
pub const DIRECTION_COUNT: usize = 8;

/// One of the eight compass directions, 45 degrees apart.
///
/// The index-to-offset convention is fixed: 0 = East points toward
/// increasing column, and each next index rotates 45 degrees
/// counter-clockwise (toward decreasing row first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Direction {
    East = 0,
    NorthEast = 1,
    North = 2,
    NorthWest = 3,
    West = 4,
    SouthWest = 5,
    South = 6,
    SouthEast = 7,
}

impl Direction {
    pub const ALL: [Direction; DIRECTION_COUNT] = [
        Direction::East,
        Direction::NorthEast,
        Direction::North,
        Direction::NorthWest,
        Direction::West,
        Direction::SouthWest,
        Direction::South,
        Direction::SouthEast,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Direction for an index in [0, 7]; panics otherwise.
    pub fn from_index(index: usize) -> Direction {
        Self::ALL[index]
    }

    /// Neighbor offset as (row delta, column delta).
    #[inline]
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::East => (0, 1),
            Direction::NorthEast => (-1, 1),
            Direction::North => (-1, 0),
            Direction::NorthWest => (-1, -1),
            Direction::West => (0, -1),
            Direction::SouthWest => (1, -1),
            Direction::South => (1, 0),
            Direction::SouthEast => (1, 1),
        }
    }
}

/// The eight compass masks. Mask 0 responds to East edges; each subsequent
/// mask is the 45-degree counter-clockwise rotation of its predecessor.
/// All eight are zero-sum.
const COMPASS_MASKS: [Kernel3x3; DIRECTION_COUNT] = [
    // 0: East
    Kernel3x3::new([-1, -1, 2, -1, -1, 2, -1, -1, 2]),
    // 1: North-East
    Kernel3x3::new([-1, 2, 2, -1, -1, 2, -1, -1, -1]),
    // 2: North
    Kernel3x3::new([2, 2, 2, -1, -1, -1, -1, -1, -1]),
    // 3: North-West
    Kernel3x3::new([2, 2, -1, 2, -1, -1, -1, -1, -1]),
    // 4: West
    Kernel3x3::new([2, -1, -1, 2, -1, -1, 2, -1, -1]),
    // 5: South-West
    Kernel3x3::new([-1, -1, -1, 2, -1, -1, 2, 2, -1]),
    // 6: South
    Kernel3x3::new([-1, -1, -1, -1, -1, -1, 2, 2, 2]),
    // 7: South-East
    Kernel3x3::new([-1, -1, -1, -1, -1, 2, -1, 2, 2]),
];

/// The eight fixed compass masks indexed by [`Direction`].
pub fn compass_masks() -> &'static [Kernel3x3; DIRECTION_COUNT] {
    &COMPASS_MASKS
}

/// Eight same-sized response planes, one per compass direction.
#[derive(Debug, Clone)]
pub struct ResponseStack {
    width: usize,
    height: usize,
    planes: [ResponseImage; DIRECTION_COUNT],
}

impl ResponseStack {
    /// Runs all eight compass masks over the image. The image is
    /// replicate-padded by one pixel first so every plane matches the
    /// image dimensions.
    pub fn from_image(img: &GrayImage) -> Result<ResponseStack> {
        let (w, h) = (img.width(), img.height());
        if w < 5 || h < 5 {
            return Err(Error::ImageTooSmall {
                width: w,
                height: h,
                min_width: 5,
                min_height: 5,
            });
        }
        let padded = img.pad_replicate(1);
        let planes = COMPASS_MASKS.map(|mask| {
            let plane = correlate3x3(&padded, &mask).expect("padded image is at least 3x3");
            debug_assert_eq!((plane.width(), plane.height()), (w, h));
            plane
        });
        Ok(ResponseStack {
            width: w,
            height: h,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, dir: Direction) -> &ResponseImage {
        &self.planes[dir.index()]
    }

    /// Response of direction `dir` at (row, col).
    #[inline]
    pub fn response(&self, dir: Direction, row: usize, col: usize) -> i32 {
        self.planes[dir.index()].value(row, col)
    }

    fn check_bounds(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height || col >= self.width {
            return Err(Error::OutOfBounds {
                row,
                col,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Index of the maximum-absolute compass response at (row, col);
    /// ties break toward the lowest index.
    pub fn primary_direction(&self, row: usize, col: usize) -> Result<Direction> {
        self.check_bounds(row, col)?;
        Ok(self.primary_direction_unchecked(row, col))
    }

    #[inline]
    pub(crate) fn primary_direction_unchecked(&self, row: usize, col: usize) -> Direction {
        let mut best = Direction::East;
        let mut best_abs = -1i64;
        for dir in Direction::ALL {
            let a = (self.response(dir, row, col) as i64).abs();
            if a > best_abs {
                best_abs = a;
                best = dir;
            }
        }
        best
    }

    /// Index of the maximum-absolute response among the eight
    /// direction-matched neighbor evaluations: for each direction the mask's
    /// own response plane is read at the neighbor that direction points to.
    /// Neighbor lookups past the border clamp to the nearest valid pixel;
    /// ties break toward the lowest index.
    pub fn secondary_direction(&self, row: usize, col: usize) -> Result<Direction> {
        self.check_bounds(row, col)?;
        Ok(self.secondary_direction_unchecked(row, col))
    }

    #[inline]
    pub(crate) fn secondary_direction_unchecked(&self, row: usize, col: usize) -> Direction {
        let mut best = Direction::East;
        let mut best_abs = -1i64;
        for dir in Direction::ALL {
            let (dr, dc) = dir.offset();
            let v = self.planes[dir.index()]
                .value_clamped(row as isize + dr, col as isize + dc);
            let a = (v as i64).abs();
            if a > best_abs {
                best_abs = a;
                best = dir;
            }
        }
        best
    }
}
