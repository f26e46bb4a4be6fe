//! Finite-volume evolution of the competition system on a masked grid with
//! zero-flux boundaries.
//!
//! The default scheme is explicit Euler under a CFL policy that keeps the
//! update monotone in cooperative coordinates, so the discrete comparison
//! principle holds by construction. An IMEX variant (implicit diffusion,
//! explicit reaction) is available where stability dominates, e.g. on cusp
//! grids with tiny spacing.
//!
//! States must stay inside [0,1]^2; any excursion beyond the bound
//! tolerance is an error, never a clamp.

mod snapshot;

pub use snapshot::{
    read_snapshot, write_snapshot, Probe, ProbeSeries, RunRecord, Snapshot, SnapshotStore,
    SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
};

use crate::domain::DomainMask;
use crate::params::KineticParams;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid initial data: {0}")]
    InvalidInitial(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("state left [0,1]^2 at t = {t}, cell ({ix}, {iy}), value {value}")]
    BoundViolation {
        t: f64,
        ix: usize,
        iy: usize,
        value: f64,
    },
    #[error("comparison ordering violated: max violation {violation:.3e} at t = {t}")]
    OrderingViolation { t: f64, violation: f64 },
    #[error("implicit diffusion solve failed to converge at t = {t}")]
    LinearSolveFailed { t: f64 },
    #[error("snapshot I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot {path}: {reason}")]
    CorruptSnapshot { path: String, reason: String },
}

/// Fields (u, v) over the full lattice at one time. Outside cells carry the
/// resident background (0, 1) and are never read by the stencil.
#[derive(Debug, Clone)]
pub struct StatePair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

/// Compactly supported initial data in the invader class: u0 is a smooth
/// bump, v0 dips from the resident state 1 on the same support.
#[derive(Debug, Clone)]
pub struct InitialCondition {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    /// The compact support disk (center, radius) of (u0, 1 - v0).
    pub support: ([f64; 2], f64),
}

impl InitialCondition {
    /// Smooth bump of the given radius and amplitude at `center`:
    /// u0 = amplitude cos^2(pi d / 2 r) inside the support disk, v0 = 1 -
    /// v_dip times the same profile. Outside the compact set the data are
    /// exactly (0, 1).
    pub fn bump(
        mask: &DomainMask,
        center: [f64; 2],
        radius: f64,
        amplitude: f64,
        v_dip: f64,
    ) -> Result<Self, SolverError> {
        if !(0.0 < amplitude && amplitude <= 1.0) {
            return Err(SolverError::InvalidInitial(format!(
                "bump amplitude must be in (0, 1], got {amplitude}"
            )));
        }
        if !(0.0..1.0).contains(&v_dip) {
            return Err(SolverError::InvalidInitial(format!(
                "v dip must be in [0, 1), got {v_dip}"
            )));
        }
        if radius <= 0.0 {
            return Err(SolverError::InvalidInitial(format!(
                "bump radius must be positive, got {radius}"
            )));
        }
        let g = mask.geom();
        let mut u0 = vec![0.0; g.n_cells()];
        let mut v0 = vec![1.0; g.n_cells()];
        let mut nonzero = false;
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                let i = g.idx(ix, iy);
                if !mask.is_inside(ix, iy) {
                    continue;
                }
                let (x, y) = g.cell_center(ix, iy);
                let d = ((x - center[0]).powi(2) + (y - center[1]).powi(2)).sqrt();
                if d < radius {
                    let shape = (std::f64::consts::FRAC_PI_2 * d / radius).cos().powi(2);
                    u0[i] = amplitude * shape;
                    v0[i] = 1.0 - v_dip * shape;
                    if u0[i] > 0.0 {
                        nonzero = true;
                    }
                }
            }
        }
        if !nonzero {
            return Err(SolverError::InvalidInitial(
                "bump support does not meet the mask".to_string(),
            ));
        }
        Ok(InitialCondition {
            u0,
            v0,
            support: (center, radius),
        })
    }

    pub fn max_u(&self) -> f64 {
        self.u0.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    /// Implicit diffusion with the given time step; reaction stays explicit.
    Imex { dt: f64 },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Safety factor applied to the monotone stability limit, in (0, 1].
    pub cfl_safety: f64,
    pub horizon: f64,
    /// Probe/snapshot cadence; the step size divides it exactly.
    pub snapshot_cadence: f64,
    pub store_snapshots: bool,
    /// Excursion beyond [0,1] greater than this is an error.
    pub bound_tol: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Fronts must stay this many cells from the extent edge.
    pub edge_guard_cells: usize,
    /// Activity threshold for the edge guard.
    pub edge_epsilon: f64,
}

impl SolverConfig {
    pub fn explicit(horizon: f64, snapshot_cadence: f64) -> Self {
        SolverConfig {
            scheme: Scheme::Explicit,
            cfl_safety: 0.9,
            horizon,
            snapshot_cadence,
            store_snapshots: true,
            bound_tol: 1e-12,
            threads: None,
            edge_guard_cells: 10,
            edge_epsilon: 0.01,
        }
    }

    pub fn imex(horizon: f64, snapshot_cadence: f64, dt: f64) -> Self {
        SolverConfig {
            scheme: Scheme::Imex { dt },
            ..Self::explicit(horizon, snapshot_cadence)
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(0.0 < self.cfl_safety && self.cfl_safety <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "cfl safety must be in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if self.horizon < 0.0 {
            return Err(SolverError::InvalidConfig("horizon must be >= 0".into()));
        }
        if self.snapshot_cadence <= 0.0 {
            return Err(SolverError::InvalidConfig(
                "snapshot cadence must be positive".into(),
            ));
        }
        if let Scheme::Imex { dt } = self.scheme {
            if dt <= 0.0 {
                return Err(SolverError::InvalidConfig("imex dt must be positive".into()));
            }
        }
        Ok(())
    }

    /// The step actually taken: at most the stability limit, aligned so an
    /// integer number of steps fills one cadence interval.
    pub fn resolve_dt(&self, mask: &DomainMask, p: &KineticParams) -> f64 {
        let h = mask.geom().h;
        let lr = (p.r1() * (1.0 + p.a1())).max(p.r2() * (1.0 + p.a2()));
        let raw = match self.scheme {
            Scheme::Explicit => {
                // monotone limit: diffusion CFL plus the reaction Lipschitz
                self.cfl_safety / (4.0 * p.d1().max(p.d2()) / (h * h) + lr)
            }
            Scheme::Imex { dt } => dt.min(self.cfl_safety / lr),
        };
        let n = (self.snapshot_cadence / raw).ceil().max(1.0);
        self.snapshot_cadence / n
    }
}

/// Per-cell face flags for the zero-flux stencil.
struct StencilPlan {
    /// bits: 1 = east, 2 = west, 4 = north, 8 = south neighbor inside
    flags: Vec<u8>,
    degree: Vec<f64>,
    inv_h2: f64,
}

impl StencilPlan {
    fn new(mask: &DomainMask) -> Self {
        let g = mask.geom();
        let (nx, ny) = (g.nx, g.ny);
        let inside = mask.inside_flags();
        let mut flags = vec![0u8; g.n_cells()];
        let mut degree = vec![0.0; g.n_cells()];
        for iy in 0..ny {
            for ix in 0..nx {
                let i = g.idx(ix, iy);
                if !inside[i] {
                    continue;
                }
                let mut f = 0u8;
                if ix + 1 < nx && inside[i + 1] {
                    f |= 1;
                }
                if ix > 0 && inside[i - 1] {
                    f |= 2;
                }
                if iy + 1 < ny && inside[i + nx] {
                    f |= 4;
                }
                if iy > 0 && inside[i - nx] {
                    f |= 8;
                }
                flags[i] = f;
                degree[i] = f.count_ones() as f64;
            }
        }
        StencilPlan {
            flags,
            degree,
            inv_h2: 1.0 / (g.h * g.h),
        }
    }
}

/// Five-point finite-volume Laplacian with zero flux across inside/outside
/// faces and at the truncation edge. The face fluxes telescope, so the sum
/// over all cells vanishes up to rounding.
pub fn laplacian_neumann(field: &[f64], mask: &DomainMask) -> Vec<f64> {
    let plan = StencilPlan::new(mask);
    let g = mask.geom();
    let nx = g.nx;
    let mut out = vec![0.0; g.n_cells()];
    for i in 0..g.n_cells() {
        if !mask.inside_flags()[i] {
            continue;
        }
        let f = plan.flags[i];
        let mut s = -plan.degree[i] * field[i];
        if f & 1 != 0 {
            s += field[i + 1];
        }
        if f & 2 != 0 {
            s += field[i - 1];
        }
        if f & 4 != 0 {
            s += field[i + nx];
        }
        if f & 8 != 0 {
            s += field[i - nx];
        }
        out[i] = s * plan.inv_h2;
    }
    out
}

struct Stepper<'a> {
    mask: &'a DomainMask,
    p: KineticParams,
    plan: StencilPlan,
    dt: f64,
    nx: usize,
    imex: bool,
    /// scratch for the implicit solves
    cg_diag_u: Vec<f64>,
    cg_diag_v: Vec<f64>,
    rhs: Vec<f64>,
}

const IMEX_CG_TOL: f64 = 1e-14;
const IMEX_CG_MAX_ITER: usize = 20_000;

impl<'a> Stepper<'a> {
    fn new(mask: &'a DomainMask, p: &KineticParams, dt: f64, imex: bool) -> Self {
        let plan = StencilPlan::new(mask);
        let n = mask.geom().n_cells();
        let (cg_diag_u, cg_diag_v) = if imex {
            let mk = |d: f64| -> Vec<f64> {
                (0..n)
                    .map(|i| {
                        if mask.inside_flags()[i] {
                            1.0 + dt * d * plan.degree[i] * plan.inv_h2
                        } else {
                            1.0
                        }
                    })
                    .collect()
            };
            (mk(p.d1()), mk(p.d2()))
        } else {
            (Vec::new(), Vec::new())
        };
        Stepper {
            mask,
            p: *p,
            plan,
            dt,
            nx: mask.geom().nx,
            imex,
            cg_diag_u,
            cg_diag_v,
            rhs: vec![0.0; n],
        }
    }

    /// One explicit step from (u, v) into (un, vn). Returns the largest
    /// excursion beyond [0,1] observed in the output.
    fn step_explicit(&self, u: &[f64], v: &[f64], un: &mut [f64], vn: &mut [f64]) -> f64 {
        let nx = self.nx;
        let chunk = nx * 8;
        let p = &self.p;
        let (d1, d2, r1, r2, a1, a2) = (p.d1(), p.d2(), p.r1(), p.r2(), p.a1(), p.a2());
        let dt = self.dt;
        let inv_h2 = self.plan.inv_h2;
        let flags = &self.plan.flags;
        let degree = &self.plan.degree;
        let inside = self.mask.inside_flags();

        let maxes: Vec<f64> = un
            .par_chunks_mut(chunk)
            .zip(vn.par_chunks_mut(chunk))
            .enumerate()
            .map(|(ci, (uc, vc))| {
                let base = ci * chunk;
                let mut worst = 0.0f64;
                for k in 0..uc.len() {
                    let i = base + k;
                    if !inside[i] {
                        uc[k] = u[i];
                        vc[k] = v[i];
                        continue;
                    }
                    let f = flags[i];
                    let mut su = -degree[i] * u[i];
                    let mut sv = -degree[i] * v[i];
                    if f & 1 != 0 {
                        su += u[i + 1];
                        sv += v[i + 1];
                    }
                    if f & 2 != 0 {
                        su += u[i - 1];
                        sv += v[i - 1];
                    }
                    if f & 4 != 0 {
                        su += u[i + nx];
                        sv += v[i + nx];
                    }
                    if f & 8 != 0 {
                        su += u[i - nx];
                        sv += v[i - nx];
                    }
                    let ui = u[i];
                    let vi = v[i];
                    let nu = ui + dt * (d1 * su * inv_h2 + r1 * ui * (1.0 - ui - a1 * vi));
                    let nv = vi + dt * (d2 * sv * inv_h2 + r2 * vi * (1.0 - vi - a2 * ui));
                    uc[k] = nu;
                    vc[k] = nv;
                    worst = worst.max(-nu).max(nu - 1.0).max(-nv).max(nv - 1.0);
                }
                worst
            })
            .collect();
        maxes.into_iter().fold(0.0, f64::max)
    }

    /// IMEX step: explicit reaction, then backward-Euler diffusion per
    /// species via conjugate gradients.
    fn step_imex(
        &mut self,
        u: &[f64],
        v: &[f64],
        un: &mut [f64],
        vn: &mut [f64],
        t: f64,
    ) -> Result<f64, SolverError> {
        let p = self.p;
        let dt = self.dt;
        let inside = self.mask.inside_flags();
        let n = u.len();
        for i in 0..n {
            if inside[i] {
                self.rhs[i] = u[i] + dt * p.r1() * u[i] * (1.0 - u[i] - p.a1() * v[i]);
            } else {
                self.rhs[i] = u[i];
            }
        }
        un.copy_from_slice(&self.rhs);
        self.implicit_diffusion(p.d1(), true, un, t)?;

        for i in 0..n {
            if inside[i] {
                self.rhs[i] = v[i] + dt * p.r2() * v[i] * (1.0 - v[i] - p.a2() * u[i]);
            } else {
                self.rhs[i] = v[i];
            }
        }
        vn.copy_from_slice(&self.rhs);
        self.implicit_diffusion(p.d2(), false, vn, t)?;

        let mut worst = 0.0f64;
        for i in 0..n {
            if inside[i] {
                worst = worst
                    .max(-un[i])
                    .max(un[i] - 1.0)
                    .max(-vn[i])
                    .max(vn[i] - 1.0);
            }
        }
        Ok(worst)
    }

    /// Solve (I + dt d A) x = b in place, where A is the negative
    /// finite-volume Laplacian. Outside cells are identity rows.
    fn implicit_diffusion(
        &mut self,
        d: f64,
        species_u: bool,
        x: &mut [f64],
        t: f64,
    ) -> Result<(), SolverError> {
        let dt = self.dt;
        let nx = self.nx;
        let inv_h2 = self.plan.inv_h2;
        let flags = &self.plan.flags;
        let degree = &self.plan.degree;
        let inside = self.mask.inside_flags();
        let b = self.rhs.clone();
        let matvec = |xv: &[f64], out: &mut [f64]| {
            out.par_chunks_mut(nx * 8)
                .enumerate()
                .for_each(|(ci, oc)| {
                    let base = ci * nx * 8;
                    for k in 0..oc.len() {
                        let i = base + k;
                        if !inside[i] {
                            oc[k] = xv[i];
                            continue;
                        }
                        let f = flags[i];
                        let mut s = -degree[i] * xv[i];
                        if f & 1 != 0 {
                            s += xv[i + 1];
                        }
                        if f & 2 != 0 {
                            s += xv[i - 1];
                        }
                        if f & 4 != 0 {
                            s += xv[i + nx];
                        }
                        if f & 8 != 0 {
                            s += xv[i - nx];
                        }
                        oc[k] = xv[i] - dt * d * s * inv_h2;
                    }
                });
        };
        let diag = if species_u {
            &self.cg_diag_u
        } else {
            &self.cg_diag_v
        };
        crate::numeric::conjugate_gradient(&matvec, diag, &b, x, IMEX_CG_TOL, IMEX_CG_MAX_ITER)
            .map(|_| ())
            .ok_or(SolverError::LinearSolveFailed { t })
    }
}

/// One time step of the configured scheme, as a standalone operation.
pub fn step(
    state: &StatePair,
    mask: &DomainMask,
    p: &KineticParams,
    config: &SolverConfig,
) -> Result<StatePair, SolverError> {
    config.validate()?;
    let dt = config.resolve_dt(mask, p);
    let imex = matches!(config.scheme, Scheme::Imex { .. });
    let mut stepper = Stepper::new(mask, p, dt, imex);
    let mut un = vec![0.0; state.u.len()];
    let mut vn = vec![0.0; state.v.len()];
    let worst = if imex {
        stepper.step_imex(&state.u, &state.v, &mut un, &mut vn, state.t)?
    } else {
        stepper.step_explicit(&state.u, &state.v, &mut un, &mut vn)
    };
    if worst > config.bound_tol {
        let (ix, iy, value) = locate_excursion(&un, &vn, mask);
        return Err(SolverError::BoundViolation {
            t: state.t + dt,
            ix,
            iy,
            value,
        });
    }
    Ok(StatePair {
        u: un,
        v: vn,
        t: state.t + dt,
    })
}

fn locate_excursion(u: &[f64], v: &[f64], mask: &DomainMask) -> (usize, usize, f64) {
    let g = mask.geom();
    let mut worst = (0usize, 0usize, 0.0f64);
    let mut wm = -1.0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let i = g.idx(ix, iy);
            if !mask.is_inside(ix, iy) {
                continue;
            }
            for val in [u[i], v[i]] {
                let m = (-val).max(val - 1.0);
                if m > wm {
                    wm = m;
                    worst = (ix, iy, val);
                }
            }
        }
    }
    worst
}

fn border_band(mask: &DomainMask, guard: usize) -> Vec<usize> {
    let g = mask.geom();
    let mut band = Vec::new();
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let near = ix < guard || iy < guard || ix + guard >= g.nx || iy + guard >= g.ny;
            if near && mask.is_inside(ix, iy) {
                band.push(g.idx(ix, iy));
            }
        }
    }
    band
}

fn run_loop(
    mask: &DomainMask,
    p: &KineticParams,
    initial: &InitialCondition,
    config: &SolverConfig,
    probes: &[Probe],
) -> Result<RunRecord, SolverError> {
    config.validate()?;
    validate_theta(mask, initial)?;
    let g = *mask.geom();
    let dt = config.resolve_dt(mask, p);
    let imex = matches!(config.scheme, Scheme::Imex { .. });
    let mut stepper = Stepper::new(mask, p, dt, imex);

    let mut u = initial.u0.clone();
    let mut v = initial.v0.clone();
    let mut un = vec![0.0; u.len()];
    let mut vn = vec![0.0; v.len()];

    let band = border_band(mask, config.edge_guard_cells);
    let steps_per_block = (config.snapshot_cadence / dt).round() as usize;
    let n_blocks = if config.horizon == 0.0 {
        0
    } else {
        (config.horizon / config.snapshot_cadence).round().max(1.0) as usize
    };

    let mut record = RunRecord::new(g, *p, *config, dt, probes);
    let mut t = 0.0;
    record.observe(mask, &u, &v, t, &band, config.edge_epsilon);
    let mut max_excursion = 0.0f64;

    for block in 0..n_blocks {
        for s in 0..steps_per_block {
            let worst = if imex {
                stepper.step_imex(&u, &v, &mut un, &mut vn, t)?
            } else {
                stepper.step_explicit(&u, &v, &mut un, &mut vn)
            };
            std::mem::swap(&mut u, &mut un);
            std::mem::swap(&mut v, &mut vn);
            t = (block * steps_per_block + s + 1) as f64 * dt;
            max_excursion = max_excursion.max(worst);
            if worst > config.bound_tol {
                let (ix, iy, value) = locate_excursion(&u, &v, mask);
                return Err(SolverError::BoundViolation { t, ix, iy, value });
            }
        }
        record.observe(mask, &u, &v, t, &band, config.edge_epsilon);
    }
    record.max_excursion = max_excursion;
    record.final_state = Some(StatePair { u, v, t });
    Ok(record)
}

/// Evolve the system from initial data in the invader class to the horizon,
/// sampling probes and snapshots at the configured cadence.
pub fn evolve(
    initial: &InitialCondition,
    mask: &DomainMask,
    p: &KineticParams,
    config: &SolverConfig,
    probes: &[Probe],
) -> Result<RunRecord, SolverError> {
    match config.threads {
        None => run_loop(mask, p, initial, config, probes),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
            pool.install(|| run_loop(mask, p, initial, config, probes))
        }
    }
}

fn validate_theta(mask: &DomainMask, initial: &InitialCondition) -> Result<(), SolverError> {
    let inside = mask.inside_flags();
    if initial.u0.len() != inside.len() || initial.v0.len() != inside.len() {
        return Err(SolverError::InvalidInitial(
            "field length does not match the mask".to_string(),
        ));
    }
    let mut nonzero = false;
    for i in 0..inside.len() {
        if !inside[i] {
            continue;
        }
        let (u, v) = (initial.u0[i], initial.v0[i]);
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(SolverError::InvalidInitial(format!(
                "initial data ({u}, {v}) outside [0,1]^2"
            )));
        }
        if u > 0.0 {
            nonzero = true;
        }
    }
    if !nonzero {
        return Err(SolverError::InvalidInitial(
            "u0 is identically zero".to_string(),
        ));
    }
    Ok(())
}

/// Ordering tolerance of the comparison harness.
pub const ORDERING_TOL: f64 = 1e-10;

/// Evolve two initial data that are ordered in cooperative coordinates
/// (u_low <= u_high and 1 - v_low <= 1 - v_high) and verify the scheme
/// preserves the ordering at every cadence point. Returns the maximal
/// observed violation; exceeding [`ORDERING_TOL`] is an error.
pub fn comparison_test(
    initial_low: &InitialCondition,
    initial_high: &InitialCondition,
    mask: &DomainMask,
    p: &KineticParams,
    config: &SolverConfig,
) -> Result<f64, SolverError> {
    config.validate()?;
    validate_theta(mask, initial_low)?;
    validate_theta(mask, initial_high)?;
    let inside = mask.inside_flags();
    for i in 0..inside.len() {
        if inside[i]
            && (initial_low.u0[i] > initial_high.u0[i] + 1e-15
                || initial_low.v0[i] < initial_high.v0[i] - 1e-15)
        {
            return Err(SolverError::InvalidInitial(
                "initial data are not cooperatively ordered".to_string(),
            ));
        }
    }

    let dt = config.resolve_dt(mask, p);
    let imex = matches!(config.scheme, Scheme::Imex { .. });
    let mut stepper = Stepper::new(mask, p, dt, imex);
    let mut lo = (initial_low.u0.clone(), initial_low.v0.clone());
    let mut hi = (initial_high.u0.clone(), initial_high.v0.clone());
    let mut scratch = (vec![0.0; lo.0.len()], vec![0.0; lo.0.len()]);

    let steps_per_block = (config.snapshot_cadence / dt).round() as usize;
    let n_blocks = (config.horizon / config.snapshot_cadence).round().max(1.0) as usize;

    let violation_of = |lo: &(Vec<f64>, Vec<f64>), hi: &(Vec<f64>, Vec<f64>)| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..inside.len() {
            if inside[i] {
                worst = worst.max(lo.0[i] - hi.0[i]).max(hi.1[i] - lo.1[i]);
            }
        }
        worst
    };

    let mut max_violation = violation_of(&lo, &hi);
    let mut t = 0.0;
    for _ in 0..n_blocks {
        for _ in 0..steps_per_block {
            for state in [&mut lo, &mut hi] {
                let worst = if imex {
                    stepper.step_imex(&state.0, &state.1, &mut scratch.0, &mut scratch.1, t)?
                } else {
                    stepper.step_explicit(&state.0, &state.1, &mut scratch.0, &mut scratch.1)
                };
                if worst > config.bound_tol {
                    let (ix, iy, value) = locate_excursion(&scratch.0, &scratch.1, mask);
                    return Err(SolverError::BoundViolation { t, ix, iy, value });
                }
                std::mem::swap(&mut state.0, &mut scratch.0);
                std::mem::swap(&mut state.1, &mut scratch.1);
            }
            t += dt;
        }
        max_violation = max_violation.max(violation_of(&lo, &hi));
    }
    if max_violation > ORDERING_TOL {
        return Err(SolverError::OrderingViolation {
            t,
            violation: max_violation,
        });
    }
    Ok(max_violation)
}

/// Record of a single-species pure-diffusion evolution, used by the
/// analysis constructions.
#[derive(Debug, Clone)]
pub struct DiffusionRecord {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    /// (t, min over inside cells) per cadence point.
    pub min_series: Vec<(f64, f64)>,
    pub dt: f64,
}

/// Evolve w_t = d Lap w with zero flux from `w0`, sampling at the cadence.
/// `store_fields` keeps full snapshots; the min series is always recorded.
pub fn evolve_diffusion(
    w0: &[f64],
    mask: &DomainMask,
    d: f64,
    config: &SolverConfig,
    store_fields: bool,
) -> Result<DiffusionRecord, SolverError> {
    config.validate()?;
    let g = mask.geom();
    let h = g.h;
    let imex = matches!(config.scheme, Scheme::Imex { .. });
    let dt = {
        let raw = match config.scheme {
            Scheme::Explicit => config.cfl_safety * h * h / (4.0 * d),
            Scheme::Imex { dt } => dt,
        };
        let n = (config.snapshot_cadence / raw).ceil().max(1.0);
        config.snapshot_cadence / n
    };
    let plan = StencilPlan::new(mask);
    let inside = mask.inside_flags();
    let n = g.n_cells();
    let nx = g.nx;

    let diag: Vec<f64> = (0..n)
        .map(|i| {
            if inside[i] {
                1.0 + dt * d * plan.degree[i] * plan.inv_h2
            } else {
                1.0
            }
        })
        .collect();

    let mut w = w0.to_vec();
    let mut wn = vec![0.0; n];
    let min_inside = |w: &[f64]| -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..n {
            if inside[i] {
                m = m.min(w[i]);
            }
        }
        m
    };

    let steps_per_block = (config.snapshot_cadence / dt).round() as usize;
    let n_blocks = (config.horizon / config.snapshot_cadence).round().max(1.0) as usize;
    let mut rec = DiffusionRecord {
        times: vec![0.0],
        fields: if store_fields {
            vec![w.clone()]
        } else {
            Vec::new()
        },
        min_series: vec![(0.0, min_inside(&w))],
        dt,
    };

    let mut t = 0.0;
    for block in 0..n_blocks {
        for s in 0..steps_per_block {
            if imex {
                let matvec = |xv: &[f64], out: &mut [f64]| {
                    for i in 0..n {
                        if !inside[i] {
                            out[i] = xv[i];
                            continue;
                        }
                        let f = plan.flags[i];
                        let mut sum = -plan.degree[i] * xv[i];
                        if f & 1 != 0 {
                            sum += xv[i + 1];
                        }
                        if f & 2 != 0 {
                            sum += xv[i - 1];
                        }
                        if f & 4 != 0 {
                            sum += xv[i + nx];
                        }
                        if f & 8 != 0 {
                            sum += xv[i - nx];
                        }
                        out[i] = xv[i] - dt * d * sum * plan.inv_h2;
                    }
                };
                wn.copy_from_slice(&w);
                crate::numeric::conjugate_gradient(
                    &matvec,
                    &diag,
                    &w,
                    &mut wn,
                    IMEX_CG_TOL,
                    IMEX_CG_MAX_ITER,
                )
                .ok_or(SolverError::LinearSolveFailed { t })?;
            } else {
                for i in 0..n {
                    if !inside[i] {
                        wn[i] = w[i];
                        continue;
                    }
                    let f = plan.flags[i];
                    let mut sum = -plan.degree[i] * w[i];
                    if f & 1 != 0 {
                        sum += w[i + 1];
                    }
                    if f & 2 != 0 {
                        sum += w[i - 1];
                    }
                    if f & 4 != 0 {
                        sum += w[i + nx];
                    }
                    if f & 8 != 0 {
                        sum += w[i - nx];
                    }
                    wn[i] = w[i] + dt * d * sum * plan.inv_h2;
                }
            }
            std::mem::swap(&mut w, &mut wn);
            t = (block * steps_per_block + s + 1) as f64 * dt;
        }
        rec.times.push(t);
        if store_fields {
            rec.fields.push(w.clone());
        }
        rec.min_series.push((t, min_inside(&w)));
    }
    Ok(rec)
}

#[cfg(test)]
mod tests;
