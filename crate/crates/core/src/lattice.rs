//! Square-lattice geometry of the wire array, with periodic boundaries.
//!
//! Sites ("waffles") sit at integer coordinates; each owns four matter
//! wires and touches four gauge links. Links are the lattice bonds: the
//! horizontal link at `(x, y)` runs east to `(x+1, y)`, the vertical link
//! north to `(x, y+1)`. Plaquette `(x, y)` is the unit square with its
//! lower-left corner at site `(x, y)`.
//!
//! Link slots at a site are ordered N, E, S, W; plaquette links are ordered
//! bottom, right, top, left. Both orderings are fixed so that operator
//! construction and serialization are reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Orientation of a link: `H` runs east, `V` runs north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDir {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteIndex {
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkIndex {
    pub x: usize,
    pub y: usize,
    pub dir: LinkDir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatterIndex {
    pub x: usize,
    pub y: usize,
    /// Matter wire slot within the site, 0..4.
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaquetteIndex {
    pub x: usize,
    pub y: usize,
}

/// Star slots in their fixed ordering.
pub const STAR_SLOTS: [&str; 4] = ["N", "E", "S", "W"];

/// Geometry and incidence structure of an `Lx × Ly` torus of waffles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGeometry {
    lx: usize,
    ly: usize,
}

impl LatticeGeometry {
    /// Build the torus. Both dimensions must be even and at least 2 so the
    /// alternating-plaquette loop crystal exists.
    pub fn build(lx: usize, ly: usize) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(CoreError::invalid(format!(
                "lattice dimensions must be at least 2, got {lx}x{ly}"
            )));
        }
        if lx % 2 != 0 || ly % 2 != 0 {
            return Err(CoreError::invalid(format!(
                "lattice dimensions must be even for the alternating-plaquette crystal, got {lx}x{ly}"
            )));
        }
        Ok(LatticeGeometry { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn n_links(&self) -> usize {
        2 * self.lx * self.ly
    }

    pub fn n_matter(&self) -> usize {
        4 * self.lx * self.ly
    }

    pub fn n_plaquettes(&self) -> usize {
        self.lx * self.ly
    }

    #[inline]
    fn wrap_x(&self, x: isize) -> usize {
        x.rem_euclid(self.lx as isize) as usize
    }

    #[inline]
    fn wrap_y(&self, y: isize) -> usize {
        y.rem_euclid(self.ly as isize) as usize
    }

    pub fn site(&self, x: usize, y: usize) -> Result<SiteIndex> {
        if x >= self.lx || y >= self.ly {
            return Err(CoreError::invalid(format!(
                "site ({x},{y}) out of range for {}x{}",
                self.lx, self.ly
            )));
        }
        Ok(SiteIndex { x, y })
    }

    pub fn plaquette(&self, x: usize, y: usize) -> Result<PlaquetteIndex> {
        if x >= self.lx || y >= self.ly {
            return Err(CoreError::invalid(format!(
                "plaquette ({x},{y}) out of range for {}x{}",
                self.lx, self.ly
            )));
        }
        Ok(PlaquetteIndex { x, y })
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteIndex> + '_ {
        (0..self.ly).flat_map(move |y| (0..self.lx).map(move |x| SiteIndex { x, y }))
    }

    pub fn links(&self) -> impl Iterator<Item = LinkIndex> + '_ {
        self.sites().flat_map(|s| {
            [
                LinkIndex {
                    x: s.x,
                    y: s.y,
                    dir: LinkDir::H,
                },
                LinkIndex {
                    x: s.x,
                    y: s.y,
                    dir: LinkDir::V,
                },
            ]
        })
    }

    pub fn plaquettes(&self) -> impl Iterator<Item = PlaquetteIndex> + '_ {
        (0..self.ly).flat_map(move |y| (0..self.lx).map(move |x| PlaquetteIndex { x, y }))
    }

    pub fn matter_wires(&self) -> impl Iterator<Item = MatterIndex> + '_ {
        self.sites().flat_map(|s| {
            (0..4).map(move |slot| MatterIndex {
                x: s.x,
                y: s.y,
                slot,
            })
        })
    }

    /// Flat index of a site: `y * Lx + x`.
    #[inline]
    pub fn site_id(&self, s: SiteIndex) -> usize {
        s.y * self.lx + s.x
    }

    /// Flat index of a link: `2 * site_id + dir`, H first.
    #[inline]
    pub fn link_id(&self, l: LinkIndex) -> usize {
        2 * (l.y * self.lx + l.x) + matches!(l.dir, LinkDir::V) as usize
    }

    pub fn link_from_id(&self, id: usize) -> LinkIndex {
        debug_assert!(id < self.n_links());
        let dir = if id % 2 == 0 { LinkDir::H } else { LinkDir::V };
        let s = id / 2;
        LinkIndex {
            x: s % self.lx,
            y: s / self.lx,
            dir,
        }
    }

    #[inline]
    pub fn matter_id(&self, m: MatterIndex) -> usize {
        4 * (m.y * self.lx + m.x) + m.slot
    }

    #[inline]
    pub fn plaquette_id(&self, p: PlaquetteIndex) -> usize {
        p.y * self.lx + p.x
    }

    /// The four links of the star at `s`, ordered N, E, S, W.
    pub fn star_links(&self, s: SiteIndex) -> Result<[LinkIndex; 4]> {
        let s = self.site(s.x, s.y)?;
        Ok([
            LinkIndex {
                x: s.x,
                y: s.y,
                dir: LinkDir::V,
            },
            LinkIndex {
                x: s.x,
                y: s.y,
                dir: LinkDir::H,
            },
            LinkIndex {
                x: s.x,
                y: self.wrap_y(s.y as isize - 1),
                dir: LinkDir::V,
            },
            LinkIndex {
                x: self.wrap_x(s.x as isize - 1),
                y: s.y,
                dir: LinkDir::H,
            },
        ])
    }

    /// The four boundary links of plaquette `p`, ordered bottom, right,
    /// top, left.
    pub fn plaquette_links(&self, p: PlaquetteIndex) -> Result<[LinkIndex; 4]> {
        let p = self.plaquette(p.x, p.y)?;
        Ok([
            LinkIndex {
                x: p.x,
                y: p.y,
                dir: LinkDir::H,
            },
            LinkIndex {
                x: self.wrap_x(p.x as isize + 1),
                y: p.y,
                dir: LinkDir::V,
            },
            LinkIndex {
                x: p.x,
                y: self.wrap_y(p.y as isize + 1),
                dir: LinkDir::H,
            },
            LinkIndex {
                x: p.x,
                y: p.y,
                dir: LinkDir::V,
            },
        ])
    }

    /// The four corner sites of plaquette `p`, ordered SW, SE, NE, NW.
    pub fn plaquette_corners(&self, p: PlaquetteIndex) -> [SiteIndex; 4] {
        let xe = self.wrap_x(p.x as isize + 1);
        let yn = self.wrap_y(p.y as isize + 1);
        [
            SiteIndex { x: p.x, y: p.y },
            SiteIndex { x: xe, y: p.y },
            SiteIndex { x: xe, y: yn },
            SiteIndex { x: p.x, y: yn },
        ]
    }

    /// The two endpoint sites of a link, in traversal order (west→east for
    /// H, south→north for V).
    pub fn link_endpoints(&self, l: LinkIndex) -> [SiteIndex; 2] {
        match l.dir {
            LinkDir::H => [
                SiteIndex { x: l.x, y: l.y },
                SiteIndex {
                    x: self.wrap_x(l.x as isize + 1),
                    y: l.y,
                },
            ],
            LinkDir::V => [
                SiteIndex { x: l.x, y: l.y },
                SiteIndex {
                    x: l.x,
                    y: self.wrap_y(l.y as isize + 1),
                },
            ],
        }
    }

    /// Which star slot (0..4 for N,E,S,W) the link occupies at site `s`.
    /// `None` if the link is not incident on `s`.
    pub fn slot_at_site(&self, l: LinkIndex, s: SiteIndex) -> Option<usize> {
        let star = self.star_links(s).ok()?;
        star.iter().position(|&k| k == l)
    }

    /// Midpoint of a link in lattice units, for distance binning.
    pub fn link_midpoint(&self, l: LinkIndex) -> (f64, f64) {
        match l.dir {
            LinkDir::H => (l.x as f64 + 0.5, l.y as f64),
            LinkDir::V => (l.x as f64, l.y as f64 + 0.5),
        }
    }

    /// Shortest torus distance between two link midpoints, in lattice units.
    pub fn link_distance(&self, a: LinkIndex, b: LinkIndex) -> f64 {
        let (ax, ay) = self.link_midpoint(a);
        let (bx, by) = self.link_midpoint(b);
        let lx = self.lx as f64;
        let ly = self.ly as f64;
        let dx = (ax - bx).abs();
        let dy = (ay - by).abs();
        let dx = dx.min(lx - dx);
        let dy = dy.min(ly - dy);
        (dx * dx + dy * dy).sqrt()
    }

    /// Geometry summary with full incidence tables, for debugging and
    /// downstream tools.
    pub fn summary(&self) -> GeometrySummary {
        let stars = self
            .sites()
            .map(|s| StarRecord {
                site: s,
                links: self.star_links(s).expect("in range").to_vec(),
            })
            .collect();
        let plaquettes = self
            .plaquettes()
            .map(|p| PlaquetteRecord {
                plaquette: p,
                links: self.plaquette_links(p).expect("in range").to_vec(),
            })
            .collect();
        GeometrySummary {
            lx: self.lx,
            ly: self.ly,
            boundary: "periodic".into(),
            n_sites: self.n_sites(),
            n_links: self.n_links(),
            n_matter: self.n_matter(),
            n_plaquettes: self.n_plaquettes(),
            stars,
            plaquettes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarRecord {
    pub site: SiteIndex,
    pub links: Vec<LinkIndex>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaquetteRecord {
    pub plaquette: PlaquetteIndex,
    pub links: Vec<LinkIndex>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub lx: usize,
    pub ly: usize,
    pub boundary: String,
    pub n_sites: usize,
    pub n_links: usize,
    pub n_matter: usize,
    pub n_plaquettes: usize,
    pub stars: Vec<StarRecord>,
    pub plaquettes: Vec<PlaquetteRecord>,
}
