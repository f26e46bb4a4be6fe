//! Generators for every domain family used by the experiments. Each one is
//! a world-coordinate predicate thickened onto the lattice; the analytic
//! parameters are recorded in the mask descriptor.

use super::{DomainError, DomainMask, GridGeom, MaskDescriptor};

/// Axis-aligned world rectangle, the truncation window of a mask.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extent {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Extent {
    pub fn centered(width: f64, height: f64) -> Self {
        Extent {
            x0: -width / 2.0,
            x1: width / 2.0,
            y0: -height / 2.0,
            y1: height / 2.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// The whole plane, truncated to the extent.
pub fn make_plane(extent: &Extent, h: f64) -> Result<DomainMask, DomainError> {
    let geom = GridGeom::from_extent(extent, h)?;
    DomainMask::from_predicate(geom, MaskDescriptor::Plane, |_, _| true)
}

/// Exterior of the closed disk of `obstacle_radius` centered at the world
/// origin.
pub fn make_exterior(
    obstacle_radius: f64,
    extent: &Extent,
    h: f64,
) -> Result<DomainMask, DomainError> {
    if obstacle_radius <= 0.0 {
        return Err(DomainError::InvalidArgument(format!(
            "obstacle radius must be positive, got {obstacle_radius}"
        )));
    }
    let margin = 2.0 * h;
    if extent.x0 > -obstacle_radius - margin
        || extent.x1 < obstacle_radius + margin
        || extent.y0 > -obstacle_radius - margin
        || extent.y1 < obstacle_radius + margin
    {
        return Err(DomainError::InvalidArgument(format!(
            "obstacle of radius {obstacle_radius} does not fit strictly inside {extent:?}"
        )));
    }
    let geom = GridGeom::from_extent(extent, h)?;
    let r2 = obstacle_radius * obstacle_radius;
    DomainMask::from_predicate(
        geom,
        MaskDescriptor::Exterior { obstacle_radius },
        |x, y| x * x + y * y > r2,
    )
}

/// Semi-infinite cylinder (strip, in 2D) along `e`: points with
/// x.e >= a and transverse distance to the axis through `x0` below `radius`,
/// truncated at the extent. `seed_pad`, when given, unions an extra box so
/// compactly supported initial data fits.
pub fn make_half_cylinder(
    e: [f64; 2],
    a: f64,
    x0: [f64; 2],
    radius: f64,
    extent: &Extent,
    h: f64,
    seed_pad: Option<Extent>,
) -> Result<DomainMask, DomainError> {
    let e = normalize(e)?;
    if radius <= 0.0 {
        return Err(DomainError::InvalidArgument(format!(
            "cylinder radius must be positive, got {radius}"
        )));
    }
    let geom = GridGeom::from_extent(extent, h)?;
    DomainMask::from_predicate(
        geom,
        MaskDescriptor::HalfCylinder {
            e,
            a,
            x0,
            radius,
        },
        |x, y| {
            let s = x * e[0] + y * e[1];
            let tx = (x - x0[0]) - ((x - x0[0]) * e[0] + (y - x0[1]) * e[1]) * e[0];
            let ty = (y - x0[1]) - ((x - x0[0]) * e[0] + (y - x0[1]) * e[1]) * e[1];
            let in_cyl = s >= a && (tx * tx + ty * ty).sqrt() < radius;
            let in_pad = seed_pad
                .map(|p| x > p.x0 && x < p.x1 && y > p.y0 && y < p.y1)
                .unwrap_or(false);
            in_cyl || in_pad
        },
    )
}

/// Quarter space {x.e > a, x.e' > b} for orthogonal unit axes.
pub fn make_quarter_space(
    e: [f64; 2],
    e_perp: [f64; 2],
    a: f64,
    b: f64,
    extent: &Extent,
    h: f64,
) -> Result<DomainMask, DomainError> {
    let e = normalize(e)?;
    let ep = normalize(e_perp)?;
    let dot = e[0] * ep[0] + e[1] * ep[1];
    if dot.abs() > 1e-12 {
        return Err(DomainError::NonOrthogonal { dot });
    }
    let geom = GridGeom::from_extent(extent, h)?;
    DomainMask::from_predicate(
        geom,
        MaskDescriptor::QuarterSpace {
            e,
            e_perp: ep,
            a,
            b,
        },
        |x, y| x * e[0] + y * e[1] > a && x * ep[0] + y * ep[1] > b,
    )
}

/// Tooth-height rule for the comb complement.
#[derive(Debug, Clone)]
pub enum TeethRule {
    /// a_n = n^2, the default superlinear rule.
    Square,
    /// a_n = coeff * n^exponent.
    Power { coeff: f64, exponent: f64 },
}

impl TeethRule {
    fn height(&self, n: u32) -> f64 {
        match self {
            TeethRule::Square => (n as f64) * (n as f64),
            TeethRule::Power { coeff, exponent } => coeff * (n as f64).powf(*exponent),
        }
    }

    fn label(&self) -> String {
        match self {
            TeethRule::Square => "n^2".to_string(),
            TeethRule::Power { coeff, exponent } => format!("{coeff}*n^{exponent}"),
        }
    }
}

/// Complement of an infinite comb: the plane minus the 1/3-thickened set
/// made of the spine {x1 >= 0, x2 = 0} and vertical teeth {n} x [0, a_n] at
/// integer n >= 1. Teeth that would touch the extent top are clamped one
/// unit below it so a bypass corridor survives; clamped teeth are recorded
/// in the descriptor.
pub fn make_comb_complement(
    rule: TeethRule,
    extent: &Extent,
    h: f64,
) -> Result<DomainMask, DomainError> {
    const THICKENING: f64 = 1.0 / 3.0;
    let geom = GridGeom::from_extent(extent, h)?;
    let n_max = extent.x1.floor().max(0.0) as u32;
    let clamp_height = extent.y1 - 1.0;
    if clamp_height <= 1.0 {
        return Err(DomainError::InvalidArgument(
            "extent too shallow for comb teeth".to_string(),
        ));
    }
    let mut heights = Vec::with_capacity(n_max as usize + 1);
    let mut clamped_teeth = Vec::new();
    for n in 0..=n_max {
        let analytic = if n == 0 { 0.0 } else { rule.height(n) };
        let used = analytic.min(clamp_height);
        if n >= 1 && used < analytic {
            clamped_teeth.push((n, used));
        }
        heights.push(used);
    }

    let dist_to_comb = move |x: f64, y: f64| -> f64 {
        // spine: half-line x1 >= 0 at x2 = 0
        let spine = if x >= 0.0 {
            y.abs()
        } else {
            (x * x + y * y).sqrt()
        };
        let mut best = spine;
        // teeth near x; the thickening only reaches one unit sideways
        let lo = (x - 1.0).floor().max(1.0) as u32;
        let hi = (x + 1.0).ceil().max(0.0) as u32;
        for n in lo..=hi.min(n_max) {
            let hgt = heights[n as usize];
            if hgt <= 0.0 {
                continue;
            }
            let dx = x - n as f64;
            let dy = if y < 0.0 {
                -y
            } else if y > hgt {
                y - hgt
            } else {
                0.0
            };
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        best
    };

    DomainMask::from_predicate(
        geom,
        MaskDescriptor::CombComplement {
            thickening: THICKENING,
            teeth_rule: rule.label(),
            clamped_teeth,
        },
        move |x, y| dist_to_comb(x, y) > THICKENING,
    )
}

/// Unit-tube neighborhood of the Archimedean spiral {(t cos t, t sin t)}
/// together with the central disk of radius 2 pi.
pub fn make_spiral(
    tube_radius: f64,
    extent: &Extent,
    h: f64,
) -> Result<DomainMask, DomainError> {
    use std::f64::consts::PI;
    if tube_radius <= 0.0 {
        return Err(DomainError::InvalidArgument(format!(
            "tube radius must be positive, got {tube_radius}"
        )));
    }
    let gap = 2.0 * PI - 2.0 * tube_radius;
    if gap <= 2.0 * h {
        return Err(DomainError::ResolutionTooCoarse {
            h,
            what: format!("the inter-arm gap {gap:.3}"),
        });
    }
    let geom = GridGeom::from_extent(extent, h)?;

    // Dense polyline sampling of the spiral, arc-length step <= h/2,
    // hashed into lattice bins for nearest-distance queries. Arms stop at
    // the circle inscribed in the extent; letting them run into the corners
    // would strand disconnected tube fragments after truncation.
    let reach = extent
        .x0
        .abs()
        .min(extent.x1.abs())
        .min(extent.y0.abs())
        .min(extent.y1.abs())
        - tube_radius
        - 2.0 * h;
    if reach <= 2.0 * PI {
        return Err(DomainError::InvalidArgument(format!(
            "extent {extent:?} too small for the spiral core"
        )));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut t = 0.0f64;
    while t <= reach {
        pts.push((t * t.cos(), t * t.sin()));
        let speed = (1.0 + t * t).sqrt();
        t += (h / 2.0) / speed;
    }

    let bin = tube_radius.max(h);
    let nbx = (extent.width() / bin).ceil() as usize + 3;
    let nby = (extent.height() / bin).ceil() as usize + 3;
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); nbx * nby];
    let to_bin = |x: f64, y: f64| -> Option<(usize, usize)> {
        let bx = ((x - extent.x0) / bin).floor() as isize + 1;
        let by = ((y - extent.y0) / bin).floor() as isize + 1;
        if bx < 0 || by < 0 || bx >= nbx as isize || by >= nby as isize {
            None
        } else {
            Some((bx as usize, by as usize))
        }
    };
    for (i, &(x, y)) in pts.iter().enumerate() {
        if let Some((bx, by)) = to_bin(x, y) {
            bins[by * nbx + bx].push(i as u32);
        }
    }

    let core = 2.0 * PI;
    let near_spiral = move |x: f64, y: f64| -> bool {
        if (x * x + y * y).sqrt() <= core {
            return true;
        }
        let Some((bx, by)) = to_bin(x, y) else {
            return false;
        };
        let r2 = tube_radius * tube_radius;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nbx_i = bx as isize + dx;
                let nby_i = by as isize + dy;
                if nbx_i < 0 || nby_i < 0 || nbx_i >= nbx as isize || nby_i >= nby as isize {
                    continue;
                }
                for &pi in &bins[nby_i as usize * nbx + nbx_i as usize] {
                    let (px, py) = pts[pi as usize];
                    let ddx = x - px;
                    let ddy = y - py;
                    if ddx * ddx + ddy * ddy < r2 {
                        return true;
                    }
                }
            }
        }
        false
    };

    let mask = DomainMask::from_predicate(
        geom,
        MaskDescriptor::Spiral {
            tube_radius,
            core_radius: core,
        },
        near_spiral,
    )?;

    // Adjacent arms must stay separated: the midpoints between consecutive
    // crossings of the positive x-axis are outside the tube.
    let mut k = 1u32;
    loop {
        let mid = 2.0 * PI * k as f64 + PI;
        if mid + tube_radius > extent.x1 - h {
            break;
        }
        if let Some((ix, iy)) = mask.geom().nearest_cell(mid, 0.0) {
            if mask.is_inside(ix, iy) {
                return Err(DomainError::ResolutionTooCoarse {
                    h,
                    what: format!("arm separation at x = {mid:.3}"),
                });
            }
        }
        k += 1;
    }
    Ok(mask)
}

/// Analytic half-width of the cusp, h(s) = exp(-e^s + s).
pub fn cusp_half_width(s: f64) -> f64 {
    (-s.exp() + s).exp()
}

/// Infinite-cusp domain: an entry box of half-width 1 for x1 in [a-1, a],
/// then the channel of half-width max(h(x1), floor_width) for x1 > a,
/// truncated at the extent. The abscissa where the analytic width falls to
/// `floor_width` is recorded in the descriptor.
pub fn make_cusp(
    a: f64,
    extent: &Extent,
    h: f64,
    floor_width: f64,
) -> Result<DomainMask, DomainError> {
    if floor_width < h {
        return Err(DomainError::InvalidArgument(format!(
            "floor width {floor_width} must be at least the grid spacing {h}"
        )));
    }
    if extent.x0 > a - 1.0 || extent.x1 <= a {
        return Err(DomainError::InvalidArgument(format!(
            "extent {extent:?} must contain the entry box [{}, {a}]",
            a - 1.0
        )));
    }
    // h(s) decreases for s > 0; find h(clamp_x) = floor_width by bisection.
    let clamp_x = {
        let mut lo = 0.0f64;
        let mut hi = 10.0f64;
        if cusp_half_width(a.max(0.0)) <= floor_width {
            a.max(0.0)
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cusp_half_width(mid) > floor_width {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };

    let geom = GridGeom::from_extent(extent, h)?;
    DomainMask::from_predicate(
        geom,
        MaskDescriptor::Cusp {
            a,
            floor_width,
            clamp_x,
        },
        move |x, y| {
            if x >= a - 1.0 && x <= a {
                y.abs() < 1.0
            } else if x > a {
                y.abs() < cusp_half_width(x).max(floor_width)
            } else {
                false
            }
        },
    )
}

fn normalize(e: [f64; 2]) -> Result<[f64; 2], DomainError> {
    let norm = (e[0] * e[0] + e[1] * e[1]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(DomainError::NotUnit { norm });
    }
    Ok(e)
}
