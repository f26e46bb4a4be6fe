//! Geometric queries on masks: the tube radii R(e) and R(e,z) of strong
//! unboundedness, geodesic distances on the 8-neighbor grid graph,
//! asymptotic connectivity along a direction, and the discrete
//! interior-ball certificate.

use super::{DomainError, DomainMask};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// The 8-neighbor graph metric over-approximates the continuum geodesic by
/// at most this relative factor (sec(pi/8) - 1).
pub const GEODESIC_METRIC_INFLATION: f64 = 0.0824;

/// A direction on the unit circle, validated to unit length within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec2([f64; 2]);

impl UnitVec2 {
    pub fn new(x: f64, y: f64) -> Result<Self, DomainError> {
        let norm = (x * x + y * y).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(DomainError::NotUnit { norm });
        }
        Ok(UnitVec2([x, y]))
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn from_any(x: f64, y: f64) -> Result<Self, DomainError> {
        let norm = (x * x + y * y).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(DomainError::NotUnit { norm });
        }
        Ok(UnitVec2([x / norm, y / norm]))
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }
    #[inline]
    pub fn dot(&self, x: f64, y: f64) -> f64 {
        self.0[0] * x + self.0[1] * y
    }
}

/// A direction together with an anchor point: the half-line z + s e.
#[derive(Debug, Clone, Copy)]
pub struct DirectionQuery {
    pub e: UnitVec2,
    pub z: [f64; 2],
}

impl DirectionQuery {
    pub fn global(e: UnitVec2) -> Self {
        DirectionQuery { e, z: [0.0, 0.0] }
    }

    pub fn anchored(e: UnitVec2, z: [f64; 2]) -> Self {
        DirectionQuery { e, z }
    }
}

/// Smallest tube radius R such that balls B(z + s e, R) keep meeting the
/// mask for all sampled s beyond the half-range, i.e. the truncation-scale
/// rendering of R(e, z) (R(e) when z is the origin).
///
/// The ball-meets-mask predicate is evaluated for every station s on an
/// h-stride via per-station nearest-cell distances; a monotone bisection in
/// R then locates the infimum, quantized up to a multiple of h.
pub fn compute_r(mask: &DomainMask, q: &DirectionQuery) -> Result<f64, DomainError> {
    let d = station_distances(mask, q)?;
    let k_half = d.len() / 2;
    let tail = &d[k_half..];
    let h = mask.geom().h;
    // A tube radius comparable to the scanned range itself means the
    // predicate failed at every meaningful radius.
    let s_max = (d.len() - 1) as f64 * h;
    let r_cap = 0.25 * s_max + 4.0 * h;

    let pred = |r: f64| tail.iter().all(|&dk| dk <= r);
    if !pred(r_cap) {
        return Err(DomainError::NotStronglyUnbounded);
    }
    let mut lo = 0.0;
    let mut hi = r_cap;
    while hi - lo > h / 8.0 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi / h).ceil() * h)
}

/// Distance from each station z + k h e (k = 0..=K, K set by the extent) to
/// the nearest inside cell center. Exact up to the h/2 quantization of the
/// axial projection.
fn station_distances(mask: &DomainMask, q: &DirectionQuery) -> Result<Vec<f64>, DomainError> {
    let g = mask.geom();
    let h = g.h;
    let extent = g.extent();
    let corners = [
        (extent.x0, extent.y0),
        (extent.x0, extent.y1),
        (extent.x1, extent.y0),
        (extent.x1, extent.y1),
    ];
    let s_max = corners
        .iter()
        .map(|&(x, y)| q.e.dot(x - q.z[0], y - q.z[1]))
        .fold(f64::NEG_INFINITY, f64::max);
    if s_max < 4.0 * h {
        return Err(DomainError::NotStronglyUnbounded);
    }
    let k_max = (s_max / h).floor() as usize;

    // Bucket every inside cell by its axial projection; keep the smallest
    // transverse offset per bucket, then sweep a 1D lower envelope to get
    // exact nearest distances per station.
    let s_min = corners
        .iter()
        .map(|&(x, y)| q.e.dot(x - q.z[0], y - q.z[1]))
        .fold(f64::INFINITY, f64::min);
    let j_min = (s_min / h).floor() as i64 - 1;
    let n_buckets = (k_max as i64 - j_min + 2) as usize;
    let mut best_perp2 = vec![f64::INFINITY; n_buckets];
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            if !mask.is_inside(ix, iy) {
                continue;
            }
            let (x, y) = g.cell_center(ix, iy);
            let dx = x - q.z[0];
            let dy = y - q.z[1];
            let t = q.e.dot(dx, dy);
            let perp2 = (dx * dx + dy * dy - t * t).max(0.0);
            let j = ((t / h).round() as i64 - j_min) as usize;
            if j < n_buckets && perp2 < best_perp2[j] {
                best_perp2[j] = perp2;
            }
        }
    }
    // dt over buckets in cell units
    let scaled: Vec<f64> = best_perp2.iter().map(|p| p / (h * h)).collect();
    let env = lower_envelope_1d(&scaled);
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let j = (k as i64 - j_min) as usize;
        out.push((env[j] * h * h).sqrt());
    }
    Ok(out)
}

/// 1D squared-distance lower envelope: out[q] = min_j (f[j] + (q-j)^2).
/// Entries with infinite f never contribute.
fn lower_envelope_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let finite: Vec<usize> = (0..n).filter(|&i| f[i].is_finite()).collect();
    if finite.is_empty() {
        return out;
    }
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = vec![0.0; finite.len() + 1];
    for &qi in &finite {
        let fq = f[qi];
        let q = qi as f64;
        loop {
            if v.is_empty() {
                v.push(qi);
                z.truncate(0);
                z.push(f64::NEG_INFINITY);
                z.push(f64::INFINITY);
                break;
            }
            let p = *v.last().unwrap();
            let s = ((fq + q * q) - (f[p] + (p * p) as f64)) / (2.0 * q - 2.0 * p as f64);
            if s <= z[v.len() - 1] {
                v.pop();
                z.pop();
            } else {
                v.push(qi);
                let last = z.len() - 1;
                z[last] = s;
                z.push(f64::INFINITY);
                break;
            }
        }
    }
    let mut k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let j = v[k];
        out[q] = f[j] + (q as f64 - j as f64).powi(2);
    }
    out
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    cell: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap must pop the smallest distance
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the 8-neighbor grid graph with weights h and h sqrt(2).
/// Diagonal moves are allowed only when both incident orthogonal cells are
/// inside, so paths cannot cut through wall corners. Stops early once
/// `until` is settled, if given.
pub(crate) fn dijkstra_grid(
    mask: &DomainMask,
    start: usize,
    until: Option<usize>,
) -> Vec<f64> {
    let g = mask.geom();
    let (nx, ny) = (g.nx, g.ny);
    let h = g.h;
    let hd = h * std::f64::consts::SQRT_2;
    let mut dist = vec![f64::INFINITY; g.n_cells()];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        cell: start as u32,
    });

    while let Some(HeapEntry { dist: d, cell }) = heap.pop() {
        let i = cell as usize;
        if d > dist[i] {
            continue;
        }
        if until == Some(i) {
            break;
        }
        let ix = i % nx;
        let iy = i / nx;
        let inside_at = |jx: isize, jy: isize| -> Option<usize> {
            if jx < 0 || jy < 0 || jx >= nx as isize || jy >= ny as isize {
                return None;
            }
            let j = jy as usize * nx + jx as usize;
            mask.inside_flags()[j].then_some(j)
        };
        let mut relax = |j: usize, w: f64, heap: &mut BinaryHeap<HeapEntry>| {
            let nd = d + w;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    cell: j as u32,
                });
            }
        };
        let x = ix as isize;
        let y = iy as isize;
        let e = inside_at(x + 1, y);
        let w = inside_at(x - 1, y);
        let n = inside_at(x, y + 1);
        let s = inside_at(x, y - 1);
        for j in [e, w, n, s].into_iter().flatten() {
            relax(j, h, &mut heap);
        }
        // diagonals, no corner cutting
        if e.is_some() && n.is_some() {
            if let Some(j) = inside_at(x + 1, y + 1) {
                relax(j, hd, &mut heap);
            }
        }
        if w.is_some() && n.is_some() {
            if let Some(j) = inside_at(x - 1, y + 1) {
                relax(j, hd, &mut heap);
            }
        }
        if e.is_some() && s.is_some() {
            if let Some(j) = inside_at(x + 1, y - 1) {
                relax(j, hd, &mut heap);
            }
        }
        if w.is_some() && s.is_some() {
            if let Some(j) = inside_at(x - 1, y - 1) {
                relax(j, hd, &mut heap);
            }
        }
    }
    dist
}

/// Shortest-path distance between two world points along inside cells.
/// Over-approximates the continuum geodesic by at most
/// [`GEODESIC_METRIC_INFLATION`] plus O(h).
pub fn geodesic_distance(
    mask: &DomainMask,
    from: [f64; 2],
    to: [f64; 2],
) -> Result<f64, DomainError> {
    let g = mask.geom();
    let (ax, ay) = mask.locate_inside(from[0], from[1])?;
    let (bx, by) = mask.locate_inside(to[0], to[1])?;
    let a = g.idx(ax, ay);
    let b = g.idx(bx, by);
    let dist = dijkstra_grid(mask, a, Some(b));
    if dist[b].is_finite() {
        Ok(dist[b])
    } else {
        Err(DomainError::Unreachable)
    }
}

/// Result of the asymptotic-connectivity check along a direction.
#[derive(Debug, Clone)]
pub struct HyzReport {
    /// Sampled (s, D(s)) pairs, D being an upper bound for the pairwise
    /// geodesic sup between the two ball slices at station s.
    pub series: Vec<(f64, f64)>,
    /// Least-squares growth rate of D with s.
    pub slope: f64,
    /// Running sup of D over the sampled range.
    pub sup: f64,
    pub outcome: HyzOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HyzOutcome {
    /// Distances stabilize; the hypothesis holds at truncation scale with
    /// the reported bound.
    Satisfied { bound: f64 },
    /// Distances keep growing with s; the witness station attains the sup.
    Violated { witness_s: f64, distance: f64 },
}

/// Growth rate beyond which the sampled distance curve is read as
/// unbounded. Detour distances in the violating geometries grow at least
/// linearly in s, while bounded detours have slope near zero.
const HYZ_GROWTH_SLOPE: f64 = 0.25;

/// Evaluate hypothesis H_{y,z}: slide balls B(y + s e, ry) and
/// B(z + s e, rz) along the direction and bound the geodesic sup between
/// their mask slices. The bound per station is
/// max_z' d(y0, z') + max_y' d(y0, y') for a representative y0, an upper
/// bound for the pairwise sup by the triangle inequality.
pub fn hypothesis_hyz(
    mask: &DomainMask,
    e: UnitVec2,
    y: [f64; 2],
    z: [f64; 2],
    ry: f64,
    rz: f64,
    s_range: (f64, f64),
    n_stations: usize,
) -> Result<HyzReport, DomainError> {
    assert!(n_stations >= 2, "need at least two stations");
    let g = mask.geom();
    let mut series = Vec::with_capacity(n_stations);
    for k in 0..n_stations {
        let s = s_range.0 + (s_range.1 - s_range.0) * k as f64 / (n_stations - 1) as f64;
        let yc = [y[0] + s * e.x(), y[1] + s * e.y()];
        let zc = [z[0] + s * e.x(), z[1] + s * e.y()];
        let y_cells = mask.cells_in_ball(yc[0], yc[1], ry);
        let z_cells = mask.cells_in_ball(zc[0], zc[1], rz);
        if y_cells.is_empty() || z_cells.is_empty() {
            return Err(DomainError::EmptyBallIntersection { s });
        }
        // representative: the y-cell nearest the ball center
        let y0 = *y_cells
            .iter()
            .min_by(|&&a, &&b| {
                let ca = g.cell_center(a % g.nx, a / g.nx);
                let cb = g.cell_center(b % g.nx, b / g.nx);
                let da = (ca.0 - yc[0]).powi(2) + (ca.1 - yc[1]).powi(2);
                let db = (cb.0 - yc[0]).powi(2) + (cb.1 - yc[1]).powi(2);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let dist = dijkstra_grid(mask, y0, None);
        let max_over = |cells: &[usize]| -> f64 {
            cells.iter().map(|&c| dist[c]).fold(0.0, f64::max)
        };
        let dz = max_over(&z_cells);
        let dy = max_over(&y_cells);
        if !dz.is_finite() || !dy.is_finite() {
            return Err(DomainError::Unreachable);
        }
        series.push((s, dz + dy));
    }

    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    let slope = crate::numeric::ols_line(&xs, &ys).map(|f| f.slope).unwrap_or(0.0);
    let (witness_s, sup) = series
        .iter()
        .cloned()
        .fold((s_range.0, 0.0), |acc, (s, d)| if d > acc.1 { (s, d) } else { acc });
    let outcome = if slope > HYZ_GROWTH_SLOPE {
        HyzOutcome::Violated {
            witness_s,
            distance: sup,
        }
    } else {
        HyzOutcome::Satisfied { bound: sup }
    };
    Ok(HyzReport {
        series,
        slope,
        sup,
        outcome,
    })
}

/// Squared Euclidean distance transform (Felzenszwalb), in cell units.
/// `source` marks cells at distance zero.
fn edt_squared(nx: usize, ny: usize, source: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut field = vec![f64::INFINITY; nx * ny];
    for i in 0..nx * ny {
        if source(i) {
            field[i] = 0.0;
        }
    }
    // rows
    let mut row = vec![0.0; nx];
    for iy in 0..ny {
        row.copy_from_slice(&field[iy * nx..(iy + 1) * nx]);
        let env = lower_envelope_1d(&row);
        field[iy * nx..(iy + 1) * nx].copy_from_slice(&env);
    }
    // columns
    let mut col = vec![0.0; ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = field[iy * nx + ix];
        }
        let env = lower_envelope_1d(&col);
        for iy in 0..ny {
            field[iy * nx + ix] = env[iy];
        }
    }
    field
}

/// Discrete interior-ball certificate: the largest radius eps such that
/// every boundary-adjacent inside cell lies within eps of a cell whose
/// clearance to the outside is at least eps. Masks without outside cells
/// (the plane) report the extent scale. The extent edge is truncation, not
/// boundary.
pub fn interior_ball_radius(mask: &DomainMask) -> f64 {
    let g = mask.geom();
    let (nx, ny) = (g.nx, g.ny);
    let h = g.h;
    let n = g.n_cells();
    let extent_scale = (g.nx.min(g.ny) as f64) * h / 2.0;
    if mask.inside_count() == n {
        return extent_scale;
    }

    let inside = mask.inside_flags();
    let clearance2 = edt_squared(nx, ny, |i| !inside[i]);

    // boundary-adjacent inside cells (4-neighbors within the grid)
    let mut boundary: Vec<usize> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let i = g.idx(ix, iy);
            if !inside[i] {
                continue;
            }
            let mut adj = false;
            if ix > 0 && !inside[i - 1] {
                adj = true;
            }
            if ix + 1 < nx && !inside[i + 1] {
                adj = true;
            }
            if iy > 0 && !inside[i - nx] {
                adj = true;
            }
            if iy + 1 < ny && !inside[i + nx] {
                adj = true;
            }
            if adj {
                boundary.push(i);
            }
        }
    }
    if boundary.is_empty() {
        return extent_scale;
    }

    let max_clear = clearance2
        .iter()
        .enumerate()
        .filter(|(i, _)| inside[*i])
        .map(|(_, c)| *c)
        .fold(0.0, f64::max)
        .sqrt()
        * h;

    let pred = |eps: f64| -> bool {
        let eps_cells2 = (eps / h) * (eps / h);
        let dist2 = edt_squared(nx, ny, |i| inside[i] && clearance2[i] >= eps_cells2);
        boundary.iter().all(|&b| dist2[b] * h * h <= eps * eps + 1e-12)
    };

    let mut lo = 0.0;
    let mut hi = max_clear;
    if pred(hi) {
        return hi;
    }
    while hi - lo > h / 8.0 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        make_comb_complement, make_cusp, make_exterior, make_half_cylinder, make_plane,
        make_spiral, Extent, TeethRule,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ex() -> UnitVec2 {
        UnitVec2::new(1.0, 0.0).unwrap()
    }

    #[test]
    fn unit_vector_validation() {
        assert!(UnitVec2::new(1.0, 1.0).is_err());
        let e = UnitVec2::from_any(3.0, 4.0).unwrap();
        assert!((e.x() - 0.6).abs() < 1e-15 && (e.y() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn tube_radius_on_plane_and_exterior() {
        let h = 0.5;
        let plane = make_plane(&Extent::centered(60.0, 60.0), h).unwrap();
        let r = compute_r(&plane, &DirectionQuery::global(ex())).unwrap();
        assert!(r <= h + 1e-12, "plane R(e) = {r}");

        let ext = make_exterior(5.0, &Extent::centered(100.0, 100.0), h).unwrap();
        let r = compute_r(&ext, &DirectionQuery::global(ex())).unwrap();
        assert!(r <= h + 1e-12, "exterior R(e) = {r}");
    }

    #[test]
    fn tube_radius_on_displaced_half_cylinder() {
        let h = 0.25;
        let radius = 5.0;
        let m = make_half_cylinder(
            [1.0, 0.0],
            0.0,
            [0.0, 0.0],
            radius,
            &Extent {
                x0: -5.0,
                x1: 95.0,
                y0: -12.0,
                y1: 12.0,
            },
            h,
            None,
        )
        .unwrap();
        // anchor displaced transversally by less than the radius
        let q = DirectionQuery::anchored(ex(), [0.0, 2.0]);
        let r = compute_r(&m, &q).unwrap();
        assert!(r <= h + 1e-12, "inside-tube anchor gives R = {r}");
        // anchor displaced beyond the radius: R(e,z) ~ delta - radius
        let delta = 9.0;
        let q = DirectionQuery::anchored(ex(), [0.0, delta]);
        let r = compute_r(&m, &q).unwrap();
        assert!(
            (r - (delta - radius)).abs() <= 2.0 * h,
            "displaced anchor R = {r}, expected about {}",
            delta - radius
        );
    }

    #[test]
    fn tube_radius_translation_invariant_along_e() {
        let h = 0.25;
        let m = make_half_cylinder(
            [1.0, 0.0],
            0.0,
            [0.0, 0.0],
            5.0,
            &Extent {
                x0: -5.0,
                x1: 95.0,
                y0: -12.0,
                y1: 12.0,
            },
            h,
            None,
        )
        .unwrap();
        let r0 = compute_r(&m, &DirectionQuery::anchored(ex(), [0.0, 7.0])).unwrap();
        let r1 = compute_r(&m, &DirectionQuery::anchored(ex(), [20.0, 7.0])).unwrap();
        assert!((r0 - r1).abs() <= h + 1e-12, "{r0} vs {r1}");

        let plane = make_plane(&Extent::centered(60.0, 60.0), h).unwrap();
        let r0 = compute_r(&plane, &DirectionQuery::anchored(ex(), [0.0, 0.0])).unwrap();
        let r1 = compute_r(&plane, &DirectionQuery::anchored(ex(), [13.0, 0.0])).unwrap();
        assert!((r0 - r1).abs() <= h + 1e-12);
    }

    #[test]
    fn remark_transverse_offset_inequality() {
        // Triangle inequality for anchored tube radii at 2h tolerance:
        // max(R(e) - |z_perp|, 0) <= R(e,z) <= R(e) + |z_perp|.
        // (The absolute-value form fails already on the plane, where both
        // radii vanish for any offset anchor.)
        let h = 0.25;
        let masks: Vec<DomainMask> = vec![
            make_plane(&Extent::centered(50.0, 50.0), h).unwrap(),
            make_exterior(4.0, &Extent::centered(50.0, 50.0), h).unwrap(),
            make_half_cylinder(
                [1.0, 0.0],
                0.0,
                [0.0, 0.0],
                5.0,
                &Extent {
                    x0: -5.0,
                    x1: 60.0,
                    y0: -10.0,
                    y1: 10.0,
                },
                h,
                None,
            )
            .unwrap(),
        ];
        for m in &masks {
            let r_e = compute_r(m, &DirectionQuery::global(ex())).unwrap();
            for z in [[0.0, 1.5], [0.0, 3.0], [5.0, 2.0]] {
                let r_ez = compute_r(m, &DirectionQuery::anchored(ex(), z)).unwrap();
                let zperp = z[1].abs();
                assert!(
                    (r_e - zperp).max(0.0) - 2.0 * h <= r_ez + 1e-9,
                    "lower remark bound fails: R(e)={r_e} z_perp={zperp} R(e,z)={r_ez}"
                );
                assert!(
                    r_ez <= r_e + zperp + 2.0 * h + 1e-9,
                    "upper remark bound fails: R(e)={r_e} z_perp={zperp} R(e,z)={r_ez}"
                );
            }
        }
    }

    use crate::domain::DomainMask;

    #[test]
    fn not_strongly_unbounded_is_detected() {
        let h = 0.25;
        let m = make_half_cylinder(
            [1.0, 0.0],
            0.0,
            [0.0, 0.0],
            5.0,
            &Extent {
                x0: -5.0,
                x1: 60.0,
                y0: -10.0,
                y1: 10.0,
            },
            h,
            None,
        )
        .unwrap();
        // against the cylinder direction the domain ends
        let q = DirectionQuery::global(UnitVec2::new(-1.0, 0.0).unwrap());
        assert!(matches!(
            compute_r(&m, &q),
            Err(DomainError::NotStronglyUnbounded)
        ));
    }

    #[test]
    fn geodesic_matches_euclid_in_corridor() {
        let h = 0.25;
        let m = make_plane(&Extent::centered(40.0, 6.0), h).unwrap();
        let d = geodesic_distance(&m, [-15.0, 0.0], [15.0, 0.0]).unwrap();
        assert!(d >= 30.0 - 1e-9);
        assert!(d <= 30.0 * (1.0 + GEODESIC_METRIC_INFLATION) + 2.0 * h);
        // a diagonal route
        let d = geodesic_distance(&m, [-10.0, -2.0], [10.0, 2.0]).unwrap();
        let euclid = (20.0f64.powi(2) + 4.0f64.powi(2)).sqrt();
        assert!(d >= euclid - 2.0 * h);
        assert!(d <= euclid * (1.0 + GEODESIC_METRIC_INFLATION) + 2.0 * h);
    }

    #[test]
    fn geodesic_detours_around_obstacle() {
        let h = 0.25;
        let radius = 5.0;
        let m = make_exterior(radius, &Extent::centered(40.0, 40.0), h).unwrap();
        let d = geodesic_distance(&m, [-8.0, 0.0], [8.0, 0.0]).unwrap();
        let euclid = 16.0;
        assert!(d > euclid);
        assert!(
            d <= euclid + std::f64::consts::PI * radius + 2.0 * h,
            "detour {d} exceeds the arc bound"
        );
    }

    #[test]
    fn geodesic_across_comb_tooth() {
        let extent = Extent {
            x0: -4.0,
            x1: 6.0,
            y0: -6.0,
            y1: 14.0,
        };
        // constant teeth of height 9 so the detour is forced over the top
        let m = make_comb_complement(
            TeethRule::Power {
                coeff: 9.0,
                exponent: 0.0,
            },
            &extent,
            0.25,
        )
        .unwrap();
        let d = geodesic_distance(&m, [2.5, 2.0], [2.5, -2.0]).unwrap();
        assert!(
            d >= 2.0 * 4.0,
            "path must climb toward the tooth tops, got {d}"
        );
        let euclid = 4.0;
        assert!(d > 2.0 * euclid);
    }

    #[test]
    fn geodesic_symmetry_and_triangle_inequality() {
        let h = 0.5;
        let m = make_exterior(3.0, &Extent::centered(30.0, 30.0), h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut pts = Vec::new();
        while pts.len() < 6 {
            let x = rng.gen_range(-14.0..14.0);
            let y = rng.gen_range(-14.0..14.0);
            if m.locate_inside(x, y).is_ok() {
                pts.push([x, y]);
            }
        }
        for tri in pts.chunks(3) {
            let (a, b, c) = (tri[0], tri[1], tri[2]);
            let ab = geodesic_distance(&m, a, b).unwrap();
            let ba = geodesic_distance(&m, b, a).unwrap();
            assert!((ab - ba).abs() < 1e-9);
            let bc = geodesic_distance(&m, b, c).unwrap();
            let ac = geodesic_distance(&m, a, c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn spiral_geodesic_grows_like_arc_length() {
        let m = make_spiral(1.0, &Extent::centered(44.0, 44.0), 0.25).unwrap();
        // point on the spiral at parameter T: arc length ~ T^2/2
        let t = 18.0f64;
        let target = [t * t.cos(), t * t.sin()];
        let d = geodesic_distance(&m, [0.0, 0.0], target).unwrap();
        let arc = t * t / 2.0;
        let euclid = t;
        assert!(
            d > 0.6 * arc,
            "geodesic {d} should be comparable to arc length {arc}"
        );
        assert!(d > 3.0 * euclid);
    }

    #[test]
    fn hyz_satisfied_on_plane_and_exterior() {
        let h = 0.5;
        let plane = make_plane(&Extent::centered(60.0, 30.0), h).unwrap();
        let y = [0.0, -4.0];
        let z = [0.0, 4.0];
        let rep = hypothesis_hyz(&plane, ex(), y, z, 1.5, 1.5, (2.0, 24.0), 8).unwrap();
        match rep.outcome {
            HyzOutcome::Satisfied { bound } => {
                // |y - z| + Ry + Rz plus slack for the ball diameters and
                // the grid metric
                let expect = 8.0 + 1.5 + 1.5;
                assert!(
                    bound <= expect + 3.0 + 4.0 * h,
                    "plane bound {bound} vs {expect}"
                );
            }
            other => panic!("plane should satisfy H_yz, got {other:?}"),
        }

        let extm = make_exterior(4.0, &Extent::centered(70.0, 70.0), h).unwrap();
        let rep = hypothesis_hyz(&extm, ex(), [0.0, -6.0], [0.0, 6.0], 2.0, 2.0, (6.0, 30.0), 8)
            .unwrap();
        assert!(matches!(rep.outcome, HyzOutcome::Satisfied { .. }));
    }

    #[test]
    fn hyz_violated_on_comb() {
        let extent = Extent {
            x0: -10.0,
            x1: 16.0,
            y0: -10.0,
            y1: 40.0,
        };
        let m = make_comb_complement(TeethRule::Square, &extent, 0.25).unwrap();
        // y below the spine, z above it: detours climb the teeth
        let rep = hypothesis_hyz(
            &m,
            ex(),
            [0.0, -2.0],
            [0.0, 2.0],
            1.0,
            1.0,
            (2.0, 12.0),
            6,
        )
        .unwrap();
        match rep.outcome {
            HyzOutcome::Violated { distance, .. } => {
                assert!(distance > 10.0, "comb detour should be long, got {distance}");
            }
            other => panic!("comb should violate H_yz, got {other:?}"),
        }
    }

    #[test]
    fn interior_ball_radius_known_shapes() {
        let h = 0.25;
        let plane = make_plane(&Extent::centered(30.0, 30.0), h).unwrap();
        assert!(interior_ball_radius(&plane) >= 14.0);

        // cap at the truncation edge, so only the lateral boundary counts
        // (a right-angle cap corner admits no interior ball at all)
        let radius = 4.0;
        let m = make_half_cylinder(
            [1.0, 0.0],
            0.0,
            [0.0, 0.0],
            radius,
            &Extent {
                x0: 0.0,
                x1: 45.0,
                y0: -8.0,
                y1: 8.0,
            },
            h,
            None,
        )
        .unwrap();
        let eps = interior_ball_radius(&m);
        assert!(
            (eps - radius).abs() <= 4.0 * h,
            "half-cylinder interior ball {eps} vs radius {radius}"
        );

        let fw = 0.06;
        let cusp = make_cusp(
            0.0,
            &Extent {
                x0: -1.0,
                x1: 3.0,
                y0: -1.5,
                y1: 1.5,
            },
            0.02,
            fw,
        )
        .unwrap();
        let eps = interior_ball_radius(&cusp);
        assert!(
            eps <= fw + 4.0 * 0.02 && eps >= fw / 4.0,
            "cusp interior ball {eps} should shrink to the floor width {fw}"
        );
    }
}
