//! Masked-grid domains: every domain family used by the experiments as a
//! uniform 2D lattice of inside/outside cells, plus the geometric queries
//! the spreading-speed definitions need (tube radii R(e) and R(e,z),
//! geodesic distances, asymptotic connectivity, interior-ball radii).
//!
//! A cell belongs to the domain iff its center satisfies the analytic
//! predicate of the generator; the mask is the geometry everywhere else in
//! the crate. Truncation at the extent edge is not a domain boundary.

mod generators;
mod io;
mod queries;

pub use generators::{
    make_comb_complement, make_cusp, make_exterior, make_half_cylinder, make_plane,
    make_quarter_space, make_spiral, cusp_half_width, Extent, TeethRule,
};
pub use io::{read_mask_binary, read_mask_text, write_mask_binary, write_mask_text};
pub use queries::{
    compute_r, geodesic_distance, hypothesis_hyz, interior_ball_radius, DirectionQuery,
    HyzOutcome, UnitVec2, GEODESIC_METRIC_INFLATION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("mask has no inside cells")]
    EmptyMask,
    #[error("inside region is not edge-connected: {components} components")]
    Disconnected { components: usize },
    #[error("invalid generator argument: {0}")]
    InvalidArgument(String),
    #[error("grid spacing {h} cannot resolve {what}")]
    ResolutionTooCoarse { h: f64, what: String },
    #[error("domain is not strongly unbounded in the requested direction at the truncation scale")]
    NotStronglyUnbounded,
    #[error("direction vector must have unit length within 1e-12, |e| = {norm}")]
    NotUnit { norm: f64 },
    #[error("point ({x}, {y}) is outside the domain mask")]
    PointOutside { x: f64, y: f64 },
    #[error("no path between the requested cells; mask connectivity is broken")]
    Unreachable,
    #[error("ball intersection at station s = {s} is empty")]
    EmptyBallIntersection { s: f64 },
    #[error("axes must be orthogonal within 1e-12, e.e' = {dot}")]
    NonOrthogonal { dot: f64 },
    #[error("mask I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("mask file is malformed: {0}")]
    Malformed(String),
}

/// Uniform cell-centered lattice. `origin` is the world position of the
/// center of cell (0, 0); cell (ix, iy) sits at origin + h*(ix, iy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeom {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl GridGeom {
    /// Grid covering `extent` with spacing `h`; cell centers start half a
    /// cell inside the extent.
    pub fn from_extent(extent: &Extent, h: f64) -> Result<Self, DomainError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(DomainError::InvalidArgument(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let nx = ((extent.x1 - extent.x0) / h).round() as isize;
        let ny = ((extent.y1 - extent.y0) / h).round() as isize;
        if nx < 1 || ny < 1 {
            return Err(DomainError::InvalidArgument(format!(
                "extent {extent:?} is empty at h = {h}"
            )));
        }
        Ok(GridGeom {
            nx: nx as usize,
            ny: ny as usize,
            h,
            origin: [extent.x0 + 0.5 * h, extent.y0 + 0.5 * h],
        })
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin[0] + ix as f64 * self.h,
            self.origin[1] + iy as f64 * self.h,
        )
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell whose center is nearest to the world point, if in range.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let ix = ((x - self.origin[0]) / self.h).round();
        let iy = ((y - self.origin[1]) / self.h).round();
        if ix < 0.0 || iy < 0.0 || ix >= self.nx as f64 || iy >= self.ny as f64 {
            return None;
        }
        Some((ix as usize, iy as usize))
    }

    pub fn extent(&self) -> Extent {
        Extent {
            x0: self.origin[0] - 0.5 * self.h,
            x1: self.origin[0] + (self.nx as f64 - 0.5) * self.h,
            y0: self.origin[1] - 0.5 * self.h,
            y1: self.origin[1] + (self.ny as f64 - 0.5) * self.h,
        }
    }
}

/// Analytic provenance of a mask, written alongside every export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskDescriptor {
    Plane,
    Exterior {
        obstacle_radius: f64,
    },
    HalfCylinder {
        e: [f64; 2],
        a: f64,
        x0: [f64; 2],
        radius: f64,
    },
    QuarterSpace {
        e: [f64; 2],
        e_perp: [f64; 2],
        a: f64,
        b: f64,
    },
    CombComplement {
        thickening: f64,
        teeth_rule: String,
        /// Teeth whose analytic height was clamped by the extent, as
        /// (index, clamped_height).
        clamped_teeth: Vec<(u32, f64)>,
    },
    Spiral {
        tube_radius: f64,
        core_radius: f64,
    },
    Cusp {
        a: f64,
        floor_width: f64,
        /// Abscissa where the analytic half-width falls to `floor_width`.
        clamp_x: f64,
    },
    Custom {
        label: String,
    },
}

/// An inside/outside flag per lattice cell; the discrete stand-in for the
/// unbounded domain, truncated at the extent.
#[derive(Debug, Clone)]
pub struct DomainMask {
    geom: GridGeom,
    inside: Vec<bool>,
    inside_count: usize,
    descriptor: MaskDescriptor,
}

impl DomainMask {
    /// Build from a world-coordinate predicate and check edge-connectivity.
    pub fn from_predicate(
        geom: GridGeom,
        descriptor: MaskDescriptor,
        pred: impl Fn(f64, f64) -> bool,
    ) -> Result<Self, DomainError> {
        let mut inside = vec![false; geom.n_cells()];
        for iy in 0..geom.ny {
            for ix in 0..geom.nx {
                let (x, y) = geom.cell_center(ix, iy);
                inside[geom.idx(ix, iy)] = pred(x, y);
            }
        }
        Self::from_flags(geom, descriptor, inside)
    }

    pub fn from_flags(
        geom: GridGeom,
        descriptor: MaskDescriptor,
        inside: Vec<bool>,
    ) -> Result<Self, DomainError> {
        assert_eq!(inside.len(), geom.n_cells());
        let inside_count = inside.iter().filter(|b| **b).count();
        if inside_count == 0 {
            return Err(DomainError::EmptyMask);
        }
        let components = count_components(&geom, &inside);
        if components != 1 {
            return Err(DomainError::Disconnected { components });
        }
        Ok(DomainMask {
            geom,
            inside,
            inside_count,
            descriptor,
        })
    }

    #[inline]
    pub fn geom(&self) -> &GridGeom {
        &self.geom
    }

    #[inline]
    pub fn is_inside(&self, ix: usize, iy: usize) -> bool {
        self.inside[self.geom.idx(ix, iy)]
    }

    #[inline]
    pub fn inside_flags(&self) -> &[bool] {
        &self.inside
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    pub fn inside_fraction(&self) -> f64 {
        self.inside_count as f64 / self.geom.n_cells() as f64
    }

    pub fn descriptor(&self) -> &MaskDescriptor {
        &self.descriptor
    }

    /// Descriptor plus lattice metadata as a JSON document.
    pub fn descriptor_json(&self) -> serde_json::Value {
        serde_json::json!({
            "descriptor": self.descriptor,
            "nx": self.geom.nx,
            "ny": self.geom.ny,
            "h": self.geom.h,
            "origin": self.geom.origin,
            "inside_cells": self.inside_count,
        })
    }

    /// Nearest inside cell to a world point, if the point's own cell is
    /// inside; error otherwise.
    pub fn locate_inside(&self, x: f64, y: f64) -> Result<(usize, usize), DomainError> {
        match self.geom.nearest_cell(x, y) {
            Some((ix, iy)) if self.is_inside(ix, iy) => Ok((ix, iy)),
            _ => Err(DomainError::PointOutside { x, y }),
        }
    }

    /// Indices of inside cells whose centers lie within `radius` of the
    /// world point `(cx, cy)`.
    pub fn cells_in_ball(&self, cx: f64, cy: f64, radius: f64) -> Vec<usize> {
        let g = &self.geom;
        let lo_x = (((cx - radius - g.origin[0]) / g.h).floor().max(0.0)) as usize;
        let lo_y = (((cy - radius - g.origin[1]) / g.h).floor().max(0.0)) as usize;
        let hi_x = (((cx + radius - g.origin[0]) / g.h).ceil()).min((g.nx - 1) as f64);
        let hi_y = (((cy + radius - g.origin[1]) / g.h).ceil()).min((g.ny - 1) as f64);
        let mut out = Vec::new();
        if hi_x < 0.0 || hi_y < 0.0 {
            return out;
        }
        let r2 = radius * radius;
        for iy in lo_y..=hi_y as usize {
            for ix in lo_x..=hi_x as usize {
                if self.inside[g.idx(ix, iy)] {
                    let (x, y) = g.cell_center(ix, iy);
                    let dx = x - cx;
                    let dy = y - cy;
                    if dx * dx + dy * dy <= r2 {
                        out.push(g.idx(ix, iy));
                    }
                }
            }
        }
        out
    }
}

fn count_components(geom: &GridGeom, inside: &[bool]) -> usize {
    let mut seen = vec![false; inside.len()];
    let mut components = 0;
    let mut stack = Vec::new();
    for start in 0..inside.len() {
        if !inside[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let ix = i % geom.nx;
            let iy = i / geom.nx;
            let mut push = |jx: usize, jy: usize, stack: &mut Vec<usize>| {
                let j = geom.idx(jx, jy);
                if inside[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                push(ix - 1, iy, &mut stack);
            }
            if ix + 1 < geom.nx {
                push(ix + 1, iy, &mut stack);
            }
            if iy > 0 {
                push(ix, iy - 1, &mut stack);
            }
            if iy + 1 < geom.ny {
                push(ix, iy + 1, &mut stack);
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry_round_trips() {
        let extent = Extent::centered(10.0, 6.0);
        let g = GridGeom::from_extent(&extent, 0.5).unwrap();
        assert_eq!((g.nx, g.ny), (20, 12));
        let (x, y) = g.cell_center(0, 0);
        assert!((x - (-4.75)).abs() < 1e-12 && (y - (-2.75)).abs() < 1e-12);
        assert_eq!(g.nearest_cell(x, y), Some((0, 0)));
        let e2 = g.extent();
        assert!((e2.x0 - extent.x0).abs() < 1e-12 && (e2.y1 - extent.y1).abs() < 1e-12);
    }

    #[test]
    fn disconnected_masks_are_rejected() {
        let g = GridGeom::from_extent(&Extent::centered(10.0, 10.0), 1.0).unwrap();
        let res = DomainMask::from_predicate(
            g,
            MaskDescriptor::Custom {
                label: "two blobs".into(),
            },
            |x, _| x < -2.0 || x > 2.0,
        );
        assert!(matches!(res, Err(DomainError::Disconnected { components: 2 })));
    }

    #[test]
    fn empty_mask_is_rejected() {
        let g = GridGeom::from_extent(&Extent::centered(4.0, 4.0), 1.0).unwrap();
        let res = DomainMask::from_predicate(
            g,
            MaskDescriptor::Custom { label: "".into() },
            |_, _| false,
        );
        assert!(matches!(res, Err(DomainError::EmptyMask)));
    }
}
