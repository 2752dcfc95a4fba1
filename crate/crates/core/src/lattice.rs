//! Rectangular lattice geometry with open boundaries.
//!
//! Sites are numbered row-major: `index = x + lx * y`. Every CSV written by
//! this crate uses that ordering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice coordinate in units of the lattice constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteCoord {
    pub x: usize,
    pub y: usize,
}

impl SiteCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Continuous position in the lattice plane, used for nuclei that may sit
/// between sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, c: SiteCoord) -> f64 {
        (c.x as f64 - self.x).hypot(c.y as f64 - self.y)
    }
}

impl From<SiteCoord> for Position {
    fn from(c: SiteCoord) -> Self {
        Position::new(c.x as f64, c.y as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    lx: usize,
    ly: usize,
}

impl LatticeGeometry {
    pub fn new(lx: usize, ly: usize) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::domain(format!(
                "lattice extents must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self { lx, ly })
    }

    /// Square `(2p+1) x (2p+1)` lattice with a single centered site.
    pub fn padded(padding: usize) -> Self {
        Self {
            lx: 2 * padding + 1,
            ly: 2 * padding + 1,
        }
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn num_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn contains(&self, c: SiteCoord) -> bool {
        c.x < self.lx && c.y < self.ly
    }

    pub fn site_index(&self, c: SiteCoord) -> Result<usize> {
        if !self.contains(c) {
            return Err(Error::domain(format!(
                "site ({}, {}) outside {}x{} lattice",
                c.x, c.y, self.lx, self.ly
            )));
        }
        Ok(c.x + self.lx * c.y)
    }

    pub fn site_coord(&self, index: usize) -> Result<SiteCoord> {
        if index >= self.num_sites() {
            return Err(Error::domain(format!(
                "site index {index} outside lattice of {} sites",
                self.num_sites()
            )));
        }
        Ok(self.coord_unchecked(index))
    }

    #[inline]
    pub(crate) fn coord_unchecked(&self, index: usize) -> SiteCoord {
        SiteCoord::new(index % self.lx, index / self.lx)
    }

    /// Nearest neighbors with open boundaries, in the order -x, +x, -y, +y.
    pub fn neighbors(&self, c: SiteCoord) -> Vec<SiteCoord> {
        let mut out = Vec::with_capacity(4);
        if !self.contains(c) {
            return out;
        }
        if c.x > 0 {
            out.push(SiteCoord::new(c.x - 1, c.y));
        }
        if c.x + 1 < self.lx {
            out.push(SiteCoord::new(c.x + 1, c.y));
        }
        if c.y > 0 {
            out.push(SiteCoord::new(c.x, c.y - 1));
        }
        if c.y + 1 < self.ly {
            out.push(SiteCoord::new(c.x, c.y + 1));
        }
        out
    }

    /// Each nearest-neighbor bond once, as `(i, j)` site indices with `i < j`.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_sites()).flat_map(move |i| {
            let c = self.coord_unchecked(i);
            let right = (c.x + 1 < self.lx).then_some((i, i + 1));
            let up = (c.y + 1 < self.ly).then_some((i, i + self.lx));
            right.into_iter().chain(up)
        })
    }

    pub fn num_bonds(&self) -> usize {
        self.lx * (self.ly - 1) + self.ly * (self.lx - 1)
    }

    /// All sites in index order.
    pub fn sites(&self) -> impl Iterator<Item = SiteCoord> + '_ {
        (0..self.num_sites()).map(move |i| self.coord_unchecked(i))
    }

    /// Geometric center of the site grid (may fall between sites).
    pub fn center(&self) -> Position {
        Position::new((self.lx - 1) as f64 / 2.0, (self.ly - 1) as f64 / 2.0)
    }
}

pub fn euclidean_distance(a: SiteCoord, b: SiteCoord) -> f64 {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    dx.hypot(dy)
}
