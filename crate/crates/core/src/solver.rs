//! Discrete minimizers by exact nodewise coordinate descent.
//!
//! At an interior node the functional restricted to `u_i = v` is, up to the
//! factor `h^{d-2}` and a constant,
//!
//! ```text
//!     q(v) = a v² − 2 b v + ε h² β(v),    a = Σ_f w_f,  b = Σ_f w_f u_j,
//! ```
//!
//! summing over the `2d` faces at the node. Each update evaluates `q` at the
//! quadratic minimizer clipped to every constancy interval of `β` and at 0,
//! and takes the smallest value, preferring 0 on ties.
//!
//! Sweeps start from the boundary data extended by zero, which lies below
//! every fixed point; the iteration then increases monotonically towards the
//! fixed point with the largest zero set. Between sweeps the field is
//! optionally polished: the Dirichlet problem on the current positive set is
//! solved by preconditioned conjugate gradients and the result is kept when
//! the energy does not increase. The polish changes no sweep semantics, it
//! only removes the slow Gauss–Seidel relaxation inside the positive phase.
//!
//! Single-node flips leave the front stuck. With unit weights, a zero node
//! next to a flat front of slope `g` only turns positive once `g² > 2dε`,
//! and a positive front node only drops to zero once `g² < ε/(2d)`, while
//! the continuum free boundary condition is `g² = ε`. Once the sweeps
//! converge the solver therefore proposes front moves: grow the positive set
//! by every zero front node with `b²/a > εh²/(2d)`, or shrink it by every
//! positive front node with `b²/a < 2d εh²`. A move re-solves the positive
//! phase and is kept only when the energy strictly drops, after which the
//! sweeps resume.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dirichlet_sum, BoundaryData, EnergyBreakdown, FaceWeightField, Grid, ScalarField};

/// Nondecreasing step function `β: ℝ → [0, 1]`.
///
/// `β(v) = values[k]` where `k` counts the jump locations strictly below
/// `v`, so `β` is lower semicontinuous and the canonical profile is
/// `χ_{(0,∞)}` with `β(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpProfile {
    jumps: Vec<f64>,
    values: Vec<f64>,
}

impl Default for JumpProfile {
    fn default() -> Self {
        JumpProfile::indicator()
    }
}

impl JumpProfile {
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != jumps.len() + 1 {
            return Err(Error::Precondition(format!(
                "{} jumps need {} values, got {}",
                jumps.len(),
                jumps.len() + 1,
                values.len()
            )));
        }
        if jumps.iter().any(|t| !t.is_finite()) || jumps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(
                "jump locations must be finite and increasing".into(),
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("values must be nondecreasing in [0, 1]".into()));
        }
        Ok(JumpProfile { jumps, values })
    }

    /// `χ_{(0,∞)}`.
    pub fn indicator() -> Self {
        JumpProfile {
            jumps: vec![0.0],
            values: vec![0.0, 1.0],
        }
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, v: f64) -> f64 {
        let k = self.jumps.partition_point(|t| *t < v);
        self.values[k]
    }

    fn is_indicator(&self) -> bool {
        self.jumps == [0.0] && self.values == [0.0, 1.0]
    }

    /// Minimizer of `a v² − 2 b v + c β(v)` over `[0, upper]`, ties to the
    /// smallest candidate (0 first).
    #[inline]
    fn local_argmin(&self, a: f64, b: f64, c: f64, upper: f64) -> f64 {
        let q = |v: f64| a * v * v - 2.0 * b * v + c * self.eval(v);
        let star = b / a;
        if self.is_indicator() {
            let v = star.min(upper);
            // q(v) < q(0) = 0 ⇔ a v² − 2bv + c < 0
            return if v > 0.0 && a * v * v - 2.0 * b * v + c < 0.0 {
                v
            } else {
                0.0
            };
        }
        let mut best = 0.0;
        let mut best_q = q(0.0);
        let mut lo = f64::NEG_INFINITY;
        for k in 0..=self.jumps.len() {
            let hi = self.jumps.get(k).copied().unwrap_or(f64::INFINITY);
            let (l, h) = (lo.max(0.0), hi.min(upper));
            if l <= h {
                for v in [star.clamp(l, h), l, h] {
                    let qv = q(v);
                    if qv < best_q || (qv == best_q && v < best) {
                        best = v;
                        best_q = qv;
                    }
                }
            }
            lo = hi;
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    /// Sequential sweep in row-major order; the canonical ordering.
    Lexicographic,
    /// Two half-sweeps over the checkerboard colours, each computed in
    /// parallel.
    RedBlack,
}

/// Resolution of equal nodewise energies. Only the zero preference is
/// implemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Convergence threshold on the largest nodal update of a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    pub ordering: Ordering,
    pub tie_break: TieBreak,
    pub epsilon: f64,
    /// Enables the conjugate-gradient polish of the positive phase.
    pub polish: bool,
    /// Polish at least this often even while the phase is still moving.
    pub polish_interval: usize,
    /// Enables collective front moves after convergence (indicator profile
    /// only).
    pub front_moves: bool,
    pub max_front_moves: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-12,
            max_sweeps: 20_000,
            ordering: Ordering::Lexicographic,
            tie_break: TieBreak::Zero,
            epsilon: 1.0,
            polish: true,
            polish_interval: 8,
            front_moves: true,
            max_front_moves: 10_000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Precondition(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Precondition("max_sweeps must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Precondition(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: ScalarField,
    /// Energy after each sweep.
    pub energy_history: Vec<EnergyBreakdown>,
    pub sweeps: usize,
    pub converged: bool,
    pub phase_flips_last_sweep: usize,
    pub last_update: f64,
    /// Accepted conjugate-gradient polishes.
    pub polishes: usize,
    /// Accepted front moves.
    pub front_moves: usize,
}

impl SolveResult {
    pub fn final_energy(&self) -> f64 {
        self.energy_history.last().map_or(f64::NAN, |e| e.total)
    }

    pub fn totals(&self) -> Vec<f64> {
        self.energy_history.iter().map(|e| e.total).collect()
    }
}

/// Discrete functional with a general jump profile:
/// Dirichlet part plus `ε h^d Σ β(u_i)`.
pub fn profile_energy(
    u: &ScalarField,
    w: &FaceWeightField,
    epsilon: f64,
    profile: &JumpProfile,
) -> Result<EnergyBreakdown> {
    if u.grid != w.grid {
        return Err(Error::ShapeMismatch("field and weights live on different grids".into()));
    }
    let g = &u.grid;
    let dirichlet = g.h().powi(g.dim() as i32 - 2) * dirichlet_sum(&u.values, w, |_| true);
    let beta_sum: f64 = if profile.is_indicator() {
        u.positive_count() as f64
    } else {
        u.values.iter().map(|v| profile.eval(*v)).sum()
    };
    let volume = epsilon * g.cell_volume() * beta_sum;
    Ok(EnergyBreakdown {
        dirichlet,
        volume,
        total: dirichlet + volume,
        epsilon,
    })
}

struct Sweeper<'a> {
    w: &'a FaceWeightField,
    profile: &'a JumpProfile,
    /// `ε h²`.
    jump: f64,
    upper: f64,
    interior: Vec<usize>,
    colors: [Vec<usize>; 2],
}

impl<'a> Sweeper<'a> {
    fn new(w: &'a FaceWeightField, profile: &'a JumpProfile, epsilon: f64, upper: f64) -> Self {
        let g = &w.grid;
        let interior: Vec<usize> = (0..g.len()).filter(|&i| !g.is_boundary(i)).collect();
        let mut colors = [Vec::new(), Vec::new()];
        for &i in &interior {
            let parity: usize = (0..g.dim()).map(|a| g.axis_index(i, a)).sum::<usize>() % 2;
            colors[parity].push(i);
        }
        Sweeper {
            w,
            profile,
            jump: epsilon * g.h() * g.h(),
            upper,
            interior,
            colors,
        }
    }

    #[inline]
    fn coefficients(&self, u: &[f64], i: usize) -> (f64, f64) {
        let g = &self.w.grid;
        let mut a = 0.0;
        let mut b = 0.0;
        for axis in 0..g.dim() {
            let s = g.stride(axis);
            let wp = self.w.faces[axis][i];
            let wm = self.w.faces[axis][i - s];
            a += wp + wm;
            b += wp * u[i + s] + wm * u[i - s];
        }
        (a, b)
    }

    #[inline]
    fn update(&self, u: &[f64], i: usize) -> f64 {
        let (a, b) = self.coefficients(u, i);
        self.profile.local_argmin(a, b, self.jump, self.upper)
    }

    fn has_neighbor(&self, u: &[f64], i: usize, positive: bool) -> bool {
        let g = &self.w.grid;
        (0..g.dim()).any(|axis| {
            let s = g.stride(axis);
            (u[i + s] > 0.0) == positive || (u[i - s] > 0.0) == positive
        })
    }

    /// Front nodes that a collective move would flip.
    fn front_candidates(&self, u: &[f64], grow: bool) -> Vec<usize> {
        self.interior
            .iter()
            .copied()
            .filter(|&i| {
                if (u[i] > 0.0) == grow || !self.has_neighbor(u, i, !grow) {
                    return false;
                }
                let (a, b) = self.coefficients(u, i);
                let slope = b * b / a;
                let d = self.w.grid.dim() as f64;
                if grow {
                    b > 0.0 && slope > self.jump / (2.0 * d)
                } else {
                    slope < 2.0 * d * self.jump
                }
            })
            .collect()
    }

    /// One sweep; returns (largest update, phase flips).
    fn sweep(&self, u: &mut [f64], ordering: Ordering) -> (f64, usize) {
        let mut max_update: f64 = 0.0;
        let mut flips = 0usize;
        match ordering {
            Ordering::Lexicographic => {
                for &i in &self.interior {
                    let v = self.update(u, i);
                    max_update = max_update.max((v - u[i]).abs());
                    if (v > 0.0) != (u[i] > 0.0) {
                        flips += 1;
                    }
                    u[i] = v;
                }
            }
            Ordering::RedBlack => {
                for color in &self.colors {
                    let snapshot: &[f64] = u;
                    let new: Vec<f64> = color
                        .par_iter()
                        .with_min_len(512)
                        .map(|&i| self.update(snapshot, i))
                        .collect();
                    for (&i, v) in color.iter().zip(new) {
                        max_update = max_update.max((v - u[i]).abs());
                        if (v > 0.0) != (u[i] > 0.0) {
                            flips += 1;
                        }
                        u[i] = v;
                    }
                }
            }
        }
        (max_update, flips)
    }
}

/// Computes a discrete local minimizer starting from the boundary data
/// extended by zero.
pub fn minimize_cavitation(
    grid: &Grid,
    w: &FaceWeightField,
    f: &BoundaryData,
    profile: &JumpProfile,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    if grid != f.grid() {
        return Err(Error::ShapeMismatch("boundary data lives on a different grid".into()));
    }
    minimize_from(w, f, profile, cfg, f.extend_by_zero())
}

/// Coordinate descent from an arbitrary initial field; boundary values are
/// overwritten by `f` and the field is clipped to `[0, sup f]`.
pub fn minimize_from(
    w: &FaceWeightField,
    f: &BoundaryData,
    profile: &JumpProfile,
    cfg: &SolveConfig,
    initial: ScalarField,
) -> Result<SolveResult> {
    cfg.validate()?;
    let grid = &w.grid;
    if initial.grid != *grid || f.grid() != grid {
        return Err(Error::ShapeMismatch(
            "initial field, data and weights must share a grid".into(),
        ));
    }
    let upper = f.sup_norm();
    let mut u = initial.values;
    for (i, v) in u.iter_mut().enumerate() {
        *v = if grid.is_boundary(i) {
            f.value(i)
        } else {
            v.clamp(0.0, upper)
        };
    }
    let sweeper = Sweeper::new(w, profile, cfg.epsilon, upper);
    let energy_of = |u: &[f64]| -> EnergyBreakdown {
        let field = ScalarField {
            grid: grid.clone(),
            values: u.to_vec(),
        };
        profile_energy(&field, w, cfg.epsilon, profile).expect("shared grid")
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut flips = 0;
    let mut last_update = f64::INFINITY;
    let mut sweeps = 0;
    let mut polishes = 0;
    let mut since_polish = 0;
    let mut moves = 0;
    let try_moves = cfg.front_moves && profile.is_indicator();
    while sweeps < cfg.max_sweeps {
        let (upd, fl) = sweeper.sweep(&mut u, cfg.ordering);
        sweeps += 1;
        since_polish += 1;
        flips = fl;
        last_update = upd;
        let e = energy_of(&u);
        history.push(e);
        if upd < cfg.tol && fl == 0 {
            if try_moves && moves < cfg.max_front_moves && front_move(&sweeper, &mut u, cfg.tol, e.total, &energy_of) {
                moves += 1;
                history.push(energy_of(&u));
                continue;
            }
            converged = true;
            break;
        }
        if cfg.polish && (fl == 0 || since_polish >= cfg.polish_interval) {
            since_polish = 0;
            if polish_positive_phase(w, &mut u, upper, cfg.tol, e.total, &energy_of) {
                polishes += 1;
            }
        }
    }
    if !converged {
        log::warn!("coordinate descent stopped after {sweeps} sweeps (update {last_update:e}, {flips} flips)");
    }
    Ok(SolveResult {
        field: ScalarField {
            grid: grid.clone(),
            values: u,
        },
        energy_history: history,
        sweeps,
        converged,
        phase_flips_last_sweep: flips,
        last_update,
        polishes,
        front_moves: moves,
    })
}

/// Tries a growing move, then a shrinking one; keeps the first that lowers
/// the energy.
fn front_move<E>(sweeper: &Sweeper, u: &mut [f64], tol: f64, before: f64, energy_of: &E) -> bool
where
    E: Fn(&[f64]) -> EnergyBreakdown,
{
    let g = &sweeper.w.grid;
    let threshold = before - 1e-13 * before.abs();
    for grow in [true, false] {
        let flip = sweeper.front_candidates(u, grow);
        if flip.is_empty() {
            continue;
        }
        let mut trial = u.to_vec();
        for &i in &flip {
            trial[i] = if grow {
                let (a, b) = sweeper.coefficients(u, i);
                b / a
            } else {
                0.0
            };
        }
        let unknowns: Vec<usize> = (0..g.len()).filter(|&i| trial[i] > 0.0 && !g.is_boundary(i)).collect();
        if !unknowns.is_empty() {
            let _ = solve_dirichlet(sweeper.w, &mut trial, &unknowns, 1e-3 * tol, 200 + 4 * unknowns.len());
            for &i in &unknowns {
                trial[i] = trial[i].clamp(0.0, sweeper.upper);
            }
        }
        if energy_of(&trial).total < threshold {
            u.copy_from_slice(&trial);
            return true;
        }
    }
    false
}

fn polish_positive_phase<E>(
    w: &FaceWeightField,
    u: &mut [f64],
    upper: f64,
    tol: f64,
    before: f64,
    energy_of: &E,
) -> bool
where
    E: Fn(&[f64]) -> EnergyBreakdown,
{
    let g = &w.grid;
    let unknowns: Vec<usize> = (0..g.len()).filter(|&i| u[i] > 0.0 && !g.is_boundary(i)).collect();
    if unknowns.is_empty() {
        return false;
    }
    let mut trial = u.to_vec();
    let target = 1e-3 * tol;
    let max_iter = 200 + 4 * unknowns.len();
    // an unconverged solve is still an improvement when the energy drops
    let _ = solve_dirichlet(w, &mut trial, &unknowns, target, max_iter);
    for &i in &unknowns {
        trial[i] = trial[i].clamp(0.0, upper);
    }
    let after = energy_of(&trial).total;
    if after <= before {
        u.copy_from_slice(&trial);
        true
    } else {
        false
    }
}

/// Outcome of a Jacobi-preconditioned conjugate-gradient solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    /// Largest `|r_i| / a_i`, the nodal correction a Jacobi step would make.
    pub residual: f64,
}

/// Solves `Σ_f w_f (u_i − u_j) = 0` at every node in `unknowns` (interior
/// nodes only), with all other nodes held at their current values in `u`.
/// Stops when every scaled residual `|r_i| / a_i` is at most `tol`.
pub fn solve_dirichlet(
    w: &FaceWeightField,
    u: &mut [f64],
    unknowns: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<LinearSolveStats> {
    let g = &w.grid;
    let d = g.dim();
    let m = unknowns.len();
    let mut local = vec![usize::MAX; g.len()];
    for (k, &i) in unknowns.iter().enumerate() {
        if g.is_boundary(i) {
            return Err(Error::Precondition(format!(
                "unknown node {i} lies on the grid boundary"
            )));
        }
        local[i] = k;
    }
    // neighbours as (local index or MAX, global index, weight)
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut links: Vec<(usize, f64)> = Vec::with_capacity(2 * d * m);
    for (k, &i) in unknowns.iter().enumerate() {
        for a in 0..d {
            let s = g.stride(a);
            for (j, wf) in [(i + s, w.faces[a][i]), (i - s, w.faces[a][i - s])] {
                diag[k] += wf;
                if local[j] == usize::MAX {
                    rhs[k] += wf * u[j];
                    links.push((usize::MAX, 0.0));
                } else {
                    links.push((local[j], wf));
                }
            }
        }
    }
    let stride = 2 * d;
    let apply = |x: &[f64], out: &mut [f64]| {
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(k, o)| {
            let mut acc = diag[k] * x[k];
            for &(j, wf) in &links[k * stride..(k + 1) * stride] {
                if j != usize::MAX {
                    acc -= wf * x[j];
                }
            }
            *o = acc;
        });
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scaled_max = |r: &[f64]| r.iter().zip(&diag).map(|(ri, di)| (ri / di).abs()).fold(0.0, f64::max);

    let mut x: Vec<f64> = unknowns.iter().map(|&i| u[i]).collect();
    let mut ax = vec![0.0; m];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut residual = scaled_max(&r);
    let mut iterations = 0;
    let mut ap = vec![0.0; m];
    while residual > tol && iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        iterations += 1;
        // refresh the recursive residual now and then against drift
        if iterations % 200 == 0 {
            apply(&x, &mut ax);
            for k in 0..m {
                r[k] = rhs[k] - ax[k];
            }
        }
        residual = scaled_max(&r);
        for k in 0..m {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    for (k, &i) in unknowns.iter().enumerate() {
        u[i] = x[k];
    }
    if residual > tol {
        return Err(Error::NotConverged { iterations, residual });
    }
    Ok(LinearSolveStats { iterations, residual })
}

/// Energies reached from several starting fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub energies: Vec<f64>,
    pub converged: Vec<bool>,
    /// Largest `|E_k − E_0|` against the canonical start.
    pub max_gap: f64,
    /// True when some start ended more than `gap_tol` away.
    pub flagged: bool,
    pub noise_amplitude: f64,
}

/// Runs the canonical start plus `starts − 1` perturbed starts. Perturbed
/// starts add i.i.d. uniform noise in `[0, δ]` at interior nodes with
/// `δ = h/2 · sqrt(ε / (2d · cap))`, the scale below which a node can still
/// fall back into the zero phase.
pub fn multi_start(
    grid: &Grid,
    w: &FaceWeightField,
    f: &BoundaryData,
    profile: &JumpProfile,
    cfg: &SolveConfig,
    starts: usize,
    seed: u64,
    gap_tol: f64,
) -> Result<(SolveResult, MultiStartReport)> {
    let canonical = minimize_cavitation(grid, w, f, profile, cfg)?;
    let d = grid.dim() as f64;
    let delta = 0.5 * grid.h() * (cfg.epsilon.max(f64::MIN_POSITIVE) / (2.0 * d * w.cap)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut energies = vec![canonical.final_energy()];
    let mut converged = vec![canonical.converged];
    for _ in 1..starts.max(1) {
        let mut start = f.extend_by_zero();
        for (i, v) in start.values.iter_mut().enumerate() {
            if !grid.is_boundary(i) {
                *v += rng.gen_range(0.0..=delta);
            }
        }
        let r = minimize_from(w, f, profile, cfg, start)?;
        energies.push(r.final_energy());
        converged.push(r.converged);
    }
    let max_gap = energies.iter().map(|e| (e - energies[0]).abs()).fold(0.0, f64::max);
    if max_gap > gap_tol {
        log::warn!("multi-start energies differ by {max_gap:e}");
    }
    let report = MultiStartReport {
        energies,
        converged,
        max_gap,
        flagged: max_gap > gap_tol,
        noise_amplitude: delta,
    };
    Ok((canonical, report))
}

/// `w`-harmonic replacement of `u` in the discrete ball `|x − c| ≤ R`.
///
/// Solved to a scaled residual of `tol · ‖u‖_∞`.
pub fn harmonic_replacement(
    u: &ScalarField,
    w: &FaceWeightField,
    center: &[f64],
    radius: f64,
    tol: f64,
) -> Result<ScalarField> {
    if u.grid != w.grid {
        return Err(Error::ShapeMismatch("field and weights live on different grids".into()));
    }
    let g = &u.grid;
    let nodes = g.ball_nodes(center, radius);
    if !g.ball_inside(center, radius) || nodes.iter().any(|&i| g.is_boundary(i)) {
        return Err(Error::Precondition("replacement ball must lie inside the grid".into()));
    }
    let mut values = u.values.clone();
    let scale = u
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    solve_dirichlet(w, &mut values, &nodes, tol * scale, 50 * nodes.len() + 1000)?;
    Ok(ScalarField {
        grid: g.clone(),
        values,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRecord {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Slack on `ε R^d` accepted by [`closeness_gap`].
pub const CLOSENESS_SLACK: f64 = 1.1;

/// Weighted Dirichlet energy of `u − h` against `ε R^d`.
pub fn closeness_gap(
    u: &ScalarField,
    h: &ScalarField,
    w: &FaceWeightField,
    center: &[f64],
    radius: f64,
    epsilon: f64,
) -> Result<ClosenessRecord> {
    if u.grid != h.grid || u.grid != w.grid {
        return Err(Error::ShapeMismatch("fields and weights must share a grid".into()));
    }
    let g = &u.grid;
    let diff: Vec<f64> = u.values.iter().zip(&h.values).map(|(a, b)| a - b).collect();
    let inside: Vec<bool> = {
        let mut m = vec![false; g.len()];
        for i in g.ball_nodes(center, radius) {
            m[i] = true;
        }
        m
    };
    let lhs = g.h().powi(g.dim() as i32 - 2) * dirichlet_sum(&diff, w, |i| inside[i]);
    let rhs = epsilon * radius.powi(g.dim() as i32);
    Ok(ClosenessRecord {
        lhs,
        rhs,
        pass: lhs <= CLOSENESS_SLACK * rhs,
    })
}

fn project_to_sphere(x: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let r = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    x.iter().zip(center).map(|(a, c)| c + (a - c) * radius / r).collect()
}

/// Solves the `w`-harmonic problem in the open ball `B_{4R}(c)` and returns
/// `sup/inf` over `B_R(c)`. Nodes next to the ball take the value of
/// `profile` at their radial projection onto `∂B_{4R}(c)`.
pub fn harnack_ratio<P>(w: &FaceWeightField, center: &[f64], radius: f64, profile: P) -> Result<f64>
where
    P: Fn(&[f64]) -> f64,
{
    let g = &w.grid;
    let outer = 4.0 * radius;
    if !g.ball_inside(center, outer) {
        return Err(Error::Precondition("B_4R must lie inside the grid".into()));
    }
    let dist2 = |i: usize| -> f64 { g.point(i).iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum() };
    let unknowns: Vec<usize> = g
        .ball_nodes(center, outer)
        .into_iter()
        .filter(|&i| dist2(i) < outer * outer)
        .collect();
    let mut is_unknown = vec![false; g.len()];
    for &i in &unknowns {
        is_unknown[i] = true;
    }
    // data is needed only on the nodes adjacent to the open ball
    let mut values = vec![0.0; g.len()];
    for &i in &unknowns {
        for a in 0..g.dim() {
            for j in [i + g.stride(a), i - g.stride(a)] {
                if is_unknown[j] {
                    continue;
                }
                let p = project_to_sphere(&g.point(j), center, outer);
                let data = profile(&p);
                if !(data.is_finite() && data >= 0.0) {
                    return Err(Error::Precondition(format!(
                        "boundary profile {data} at {p:?} is negative"
                    )));
                }
                values[j] = data;
            }
        }
        values[i] = profile(&g.point(i)).max(0.0);
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(*v)).max(f64::MIN_POSITIVE);
    solve_dirichlet(w, &mut values, &unknowns, 1e-13 * scale, 50 * unknowns.len() + 1000)?;
    let inner = g.ball_nodes(center, radius);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &inner {
        lo = lo.min(values[i]);
        hi = hi.max(values[i]);
    }
    if unknowns.iter().any(|&i| values[i] <= 0.0) {
        return Err(Error::Internal("harmonic solution is not positive".into()));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::energy;

    #[test]
    fn indicator_threshold() {
        let p = JumpProfile::indicator();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1e-300), 1.0);
        // b²/a = 1 > c = 0.5 → positive
        assert_eq!(p.local_argmin(1.0, 1.0, 0.5, 10.0), 1.0);
        // b²/a = c → tie goes to zero
        assert_eq!(p.local_argmin(1.0, 1.0, 1.0, 10.0), 0.0);
        assert_eq!(p.local_argmin(4.0, 4.0, 1.0, 0.5), 0.5);
    }

    #[test]
    fn general_profile_matches_indicator() {
        let g = JumpProfile::new(vec![0.0], vec![0.0, 1.0]).unwrap();
        let h = JumpProfile::new(vec![-1.0, 0.0], vec![0.0, 0.0, 1.0]).unwrap();
        for (a, b, c) in [(2.0, 1.0, 0.3), (2.0, 1.0, 0.6), (1.0, 0.0, 0.0), (3.0, 2.5, 2.0)] {
            let x = g.local_argmin(a, b, c, 5.0);
            assert_eq!(x, h.local_argmin(a, b, c, 5.0));
        }
    }

    #[test]
    fn multi_jump_profile_picks_global_minimum() {
        // β = 0 on (−∞,0], 0.5 on (0,1], 1 above
        let p = JumpProfile::new(vec![0.0, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let (a, b, c) = (1.0, 2.0, 1.0);
        let v = p.local_argmin(a, b, c, 10.0);
        let q = |v: f64| a * v * v - 2.0 * b * v + c * p.eval(v);
        let brute = (0..=100_000)
            .map(|k| k as f64 * 1e-4)
            .map(q)
            .fold(f64::INFINITY, f64::min);
        assert!(q(v) <= brute + 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn profile_validation() {
        assert!(JumpProfile::new(vec![0.0], vec![0.5]).is_err());
        assert!(JumpProfile::new(vec![0.0], vec![1.0, 0.5]).is_err());
        assert!(JumpProfile::new(vec![1.0, 0.0], vec![0.0, 0.5, 1.0]).is_err());
        assert!(JumpProfile::new(vec![0.0], vec![0.0, 1.5]).is_err());
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid::cube(2, -1.0, 1.0, 17).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let f = BoundaryData::constant(&g, 0.0).unwrap();
        let r = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &SolveConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.field.values.iter().all(|v| *v == 0.0));
        assert_eq!(r.final_energy(), 0.0);
    }

    #[test]
    fn energy_history_is_nonincreasing() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let f = BoundaryData::from_fn(&g, |x| 0.2 * (1.0 + x[0])).unwrap();
        for ordering in [Ordering::Lexicographic, Ordering::RedBlack] {
            for polish in [true, false] {
                let cfg = SolveConfig {
                    ordering,
                    polish,
                    epsilon: 0.3,
                    tol: 1e-10,
                    ..SolveConfig::default()
                };
                let r = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &cfg).unwrap();
                assert!(r.converged, "{ordering:?} polish={polish}");
                let t = r.totals();
                assert!(t.windows(2).all(|p| p[1] <= p[0] + 1e-12));
                let e = energy(&r.field, &w, 0.3).unwrap();
                assert_eq!(e.total, r.final_energy());
            }
        }
    }

    #[test]
    fn replacement_of_constant_data_is_constant() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let u = ScalarField::from_fn(&g, |x| if x[0] * x[0] + x[1] * x[1] <= 0.25 { 0.0 } else { 0.7 });
        let h = harmonic_replacement(&u, &w, &[0.0, 0.0], 0.5, 1e-13).unwrap();
        assert!(h.values.iter().all(|v| (v - 0.7).abs() < 1e-11));
        assert!(harmonic_replacement(&u, &w, &[0.8, 0.0], 0.5, 1e-13).is_err());
    }

    #[test]
    fn harnack_of_constant_data_is_one() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let r = harnack_ratio(&w, &[0.0, 0.0], 0.2, |_| 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(harnack_ratio(&w, &[0.0, 0.0], 0.3, |_| 2.0).is_err());
    }
}
