//! Explicit finite differences for `u_t = Delta u` in the half-space with
//! `-d_n u = |u|^{2/(n-2)} u` on the boundary, reduced to the cylinder
//! variables `r = |x~ - q~|` and `xn`, together with the exact self-similar
//! type-I solution that validates it.

use crate::ansatz::{Ansatz, AnsatzConfig, Corrections, LeadingPath, ModulationPath};
use crate::base::Tolerances;
use crate::error::{invalid, BblError, Result};
use crate::numerics::fit::linear_fit;
use crate::numerics::quad::{integrate, integrate_pts};
use crate::numerics::{gamma, sphere_area};
use crate::profiles::CylField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact type-I data `u_1`, independent of `x~`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeISpec {
    pub alpha: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub c_ap: f64,
}

/// `C_{alpha,p} = [ (4^alpha Gamma(alpha))^{-1} int_1^inf (1 - z^{-a}) (z-1)^{-1-alpha} dz ]^{1/(p-1)}`
/// with `a = alpha/(p-1)`.
pub fn c_alpha_p(alpha: f64, p: f64, tol: &Tolerances) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 && p > 1.0) {
        return invalid("need 0 < alpha < 1 and p > 1");
    }
    let a = alpha / (p - 1.0);
    // on [1, 2]: z - 1 = w^k with k(1 - alpha) = 1 removes the endpoint singularity
    let k = 1.0 / (1.0 - alpha);
    let g = |w: f64| {
        if w <= 0.0 {
            return a * k;
        }
        let d = w.powf(k);
        let num = -(-a * d.ln_1p()).exp_m1();
        num * k * w.powf(k - 1.0 - k * (1.0 + alpha))
    };
    let head = integrate(g, 0.0, 1.0, 0.1 * tol.quad_abs, 0.1 * tol.quad_rel)?.value;
    // on [2, inf): the constant part is 1/alpha; the rest maps to a finite
    // interval through z = 1/u, u = v^{1/(a+alpha)}
    let e = a + alpha;
    let h = |v: f64| (1.0 - v.powf(1.0 / e)).powf(-1.0 - alpha) / e;
    let rest = integrate(h, 0.0, 0.5f64.powf(e), 0.1 * tol.quad_abs, 0.1 * tol.quad_rel)?.value;
    let tail = 1.0 / alpha - rest;
    let inner = (head + tail) / (4f64.powf(alpha) * gamma(alpha));
    Ok(inner.powf(1.0 / (p - 1.0)))
}

impl TypeISpec {
    pub fn new(alpha: f64, p: f64, big_t: f64, tol: &Tolerances) -> Result<Self> {
        if !(big_t > 0.0) {
            return invalid("blow-up time must be positive");
        }
        Ok(Self { alpha, p, big_t, c_ap: c_alpha_p(alpha, p, tol)? })
    }

    /// The case matching the five-dimensional problem: `alpha = 1/2`, `p = 5/3`.
    pub fn critical(big_t: f64, tol: &Tolerances) -> Result<Self> {
        Self::new(0.5, 5.0 / 3.0, big_t, tol)
    }

    /// Rate exponent `-alpha/(p-1)`.
    pub fn exponent(&self) -> f64 {
        -self.alpha / (self.p - 1.0)
    }

    pub fn boundary_value(&self, t: f64) -> Result<f64> {
        if !(t < self.big_t) {
            return Err(BblError::PastBlowup { t, big_t: self.big_t });
        }
        Ok(self.c_ap * (self.big_t - t).powf(self.exponent()))
    }
}

/// `u_1(xn, t) = C/Gamma(alpha+1) int_0^inf exp(-s) (T - t + xn^2/(4s))^{-a} dv`, `s = v^{1/alpha}`.
pub fn type1_exact(spec: &TypeISpec, xn: f64, t: f64, tol: &Tolerances) -> Result<f64> {
    if !(spec.c_ap > 0.0 && spec.alpha > 0.0 && spec.alpha < 1.0 && spec.p > 1.0) {
        return invalid("type-I parameters out of range");
    }
    if !(xn >= 0.0) {
        return invalid("xn must be non-negative");
    }
    let tau = spec.big_t - t;
    if !(tau > 0.0) {
        return Err(BblError::PastBlowup { t, big_t: spec.big_t });
    }
    if xn == 0.0 {
        return spec.boundary_value(t);
    }
    let a = -spec.exponent();
    let inv = 1.0 / spec.alpha;
    let x2 = xn * xn;
    let f = |v: f64| {
        let s = v.powf(inv);
        if s <= 0.0 {
            return 0.0;
        }
        (-s).exp() * (4.0 * s / (4.0 * s * tau + x2)).powf(a)
    };
    let knee = (x2 / (4.0 * tau)).powf(spec.alpha);
    let end = 745f64.powf(spec.alpha);
    let mut pts = vec![0.0, 1.0, end];
    if knee > 0.0 && knee < end {
        pts.push(knee);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let v = integrate_pts(f, &pts, 1e-3 * tol.quad_abs, 1e-2 * tol.quad_rel, 4000)?.value;
    Ok(spec.c_ap * v / gamma(spec.alpha + 1.0))
}

/// Uniform `(r, xn)` grid on `[0, r_max] x [0, h_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub dim: usize,
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub h_max: f64,
}

impl CylGrid {
    pub fn new(dim: usize, nr: usize, nz: usize, r_max: f64, h_max: f64) -> Result<Self> {
        let g = Self { dim, nr, nz, r_max, h_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return invalid("dimension must be at least 3");
        }
        if self.nr < 2 || self.nz < 3 {
            return invalid("grid needs at least 2 radial and 3 normal nodes");
        }
        if !(self.r_max > 0.0 && self.h_max > 0.0) {
            return invalid("grid extents must be positive");
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        self.r_max / (self.nr - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        self.h_max / (self.nz - 1) as f64
    }

    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.nr).map(|i| i as f64 * self.dr()).collect()
    }

    pub fn xn_nodes(&self) -> Vec<f64> {
        (0..self.nz).map(|j| j as f64 * self.dz()).collect()
    }

    fn radial_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let k = (self.dim - 2) as i32;
        let dr = self.dr();
        let inv = 1.0 / (dr * dr);
        let mut west = vec![0.0; self.nr];
        let mut east = vec![0.0; self.nr];
        // axis: the limit of (n-2)/r d_r is (n-2) d_rr
        east[0] = 2.0 * (self.dim - 1) as f64 * inv;
        for i in 1..self.nr {
            let r = i as f64;
            let w = ((r - 0.5) / r).powi(k) * inv;
            let e = ((r + 0.5) / r).powi(k) * inv;
            if i + 1 < self.nr {
                west[i] = w;
                east[i] = e;
            } else {
                // mirror ghost at the far wall
                west[i] = w + e;
            }
        }
        (west, east)
    }

    /// Largest step keeping every linear update coefficient non-negative,
    /// capped at `0.4 min(dr, dz)^2 / 2`.
    pub fn max_dt(&self) -> f64 {
        let (w, e) = self.radial_weights();
        let dz = self.dz();
        let worst = w.iter().zip(&e).map(|(a, b)| a + b).fold(0.0, f64::max) + 2.0 / (dz * dz);
        let h = self.dr().min(dz);
        (0.9 / worst).min(0.2 * h * h)
    }

    /// Discrete maximum principle for the linear update with step `dt`.
    pub fn max_principle_holds(&self, dt: f64) -> bool {
        let (w, e) = self.radial_weights();
        let dz = self.dz();
        w.iter().zip(&e).all(|(a, b)| *a >= 0.0 && *b >= 0.0 && 1.0 - dt * (a + b + 2.0 / (dz * dz)) >= 0.0)
    }
}

/// Default constant in the boundary-stiffness step `dt <= kappa dz / sup|u|^{2/(n-2)}`.
pub const DEFAULT_STIFFNESS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub grid: CylGrid,
    pub u: CylField,
    pub t: f64,
    pub dt: f64,
    pub step_count: u64,
    pub closure: BoundaryClosure,
}

/// Update rule on the boundary row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClosure {
    /// Ghost value `u_1 + 2 dz |u_0|^{2/(n-2)} u_0` only.
    #[default]
    Ghost,
    /// Ghost value plus the `dz/3` flux correction.
    Corrected,
}

impl SolverState {
    pub fn new(grid: CylGrid, u: CylField, t: f64) -> Result<Self> {
        grid.validate()?;
        if u.dim != grid.dim || u.r_nodes.len() != grid.nr || u.xn_nodes.len() != grid.nz {
            return invalid("field does not live on the solver grid");
        }
        let mut s = Self { grid, u, t, dt: 0.0, step_count: 0, closure: BoundaryClosure::default() };
        s.dt = s.stable_dt(DEFAULT_STIFFNESS, 1.0);
        Ok(s)
    }

    pub fn from_fn(grid: CylGrid, t: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (rn, zn) = (grid.r_nodes(), grid.xn_nodes());
        let mut values = Vec::with_capacity(grid.nr * grid.nz);
        for &r in &rn {
            for &z in &zn {
                values.push(f(r, z));
            }
        }
        Self::new(grid, CylField::new(grid.dim, rn, zn, values, Some(t))?, t)
    }

    fn power(&self) -> f64 {
        2.0 / (self.grid.dim as f64 - 2.0)
    }

    pub fn sup(&self) -> f64 {
        self.u.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup |u|` over the boundary row `xn = 0`.
    pub fn boundary_sup(&self) -> f64 {
        (0..self.grid.nr).fold(0.0, |m, i| m.max(self.u.get(i, 0).abs()))
    }

    /// Trapezoidal `int u dx` over the truncated half-cylinder.
    pub fn mass_proxy(&self) -> f64 {
        let g = &self.grid;
        let (dr, dz) = (g.dr(), g.dz());
        let k = (g.dim - 2) as i32;
        let area = sphere_area(g.dim - 1);
        let mut m = 0.0;
        for i in 0..g.nr {
            let wr = if i == 0 || i + 1 == g.nr { 0.5 } else { 1.0 } * (i as f64 * dr).powi(k);
            for j in 0..g.nz {
                let wz = if j == 0 || j + 1 == g.nz { 0.5 } else { 1.0 };
                m += wr * wz * self.u.get(i, j);
            }
        }
        m * area * dr * dz
    }

    /// Linear stability step, tightened as `sup|u|` grows.
    pub fn stable_dt(&self, stiffness: f64, cfl: f64) -> f64 {
        let lin = cfl * self.grid.max_dt();
        let s = self.sup().powf(self.power());
        if s > 0.0 {
            lin.min(stiffness * self.grid.dz() / s)
        } else {
            lin
        }
    }

    /// One explicit step with the stored `dt`; on a non-finite result the
    /// state is left untouched and blow-up is reported.
    pub fn advance(&mut self, scratch: &mut Vec<f64>) -> Result<()> {
        let g = self.grid;
        if !(self.dt > 0.0 && self.dt <= g.max_dt() * (1.0 + 1e-12)) {
            return invalid(format!("step {} outside the stable range (0, {}]", self.dt, g.max_dt()));
        }
        let (west, east) = g.radial_weights();
        let (nr, nz) = (g.nr, g.nz);
        let dz = g.dz();
        let iz = 1.0 / (dz * dz);
        let (dt, pw, closure) = (self.dt, self.power(), self.closure);
        let u = &self.u.values;
        scratch.resize(u.len(), 0.0);
        scratch.par_chunks_mut(nz).enumerate().for_each(|(i, row)| {
            let at = |ii: usize, j: usize| u[ii * nz + j];
            for j in 0..nz {
                let c = at(i, j);
                let mut lr = east[i] * (if i + 1 < nr { at(i + 1, j) } else { c } - c);
                if i > 0 {
                    lr += west[i] * (at(i - 1, j) - c);
                }
                let lz = if j == 0 {
                    let ghost = at(i, 1) + 2.0 * dz * c.abs().powf(pw) * c;
                    (at(i, 1) - 2.0 * c + ghost) * iz
                } else if j + 1 == nz {
                    2.0 * (at(i, j - 1) - c) * iz
                } else {
                    (at(i, j - 1) - 2.0 * c + at(i, j + 1)) * iz
                };
                let mut rate = lr + lz;
                if j == 0 && closure == BoundaryClosure::Corrected {
                    // third-order flux closure: the ghost stencil leaves (dz/3) d_n^3 u,
                    // and d_n^3 u = -f'(u) u_t + Delta_r f(u) on the boundary
                    let f = |v: f64| v.abs().powf(pw) * v;
                    let fc = f(c);
                    let mut lf = east[i] * (if i + 1 < nr { f(at(i + 1, 0)) } else { fc } - fc);
                    if i > 0 {
                        lf += west[i] * (f(at(i - 1, 0)) - fc);
                    }
                    // clamped once the layer is unresolved and the expansion is void
                    let denom = (1.0 - dz / 3.0 * (1.0 + pw) * c.abs().powf(pw)).max(0.5);
                    rate = (rate - dz / 3.0 * lf) / denom;
                }
                row[j] = c + dt * rate;
            }
        });
        if scratch.iter().any(|v| !v.is_finite()) {
            return Err(BblError::BlowUp { t: self.t });
        }
        std::mem::swap(&mut self.u.values, scratch);
        self.t += dt;
        self.u.time = Some(self.t);
        self.step_count += 1;
        Ok(())
    }
}

/// Functional form of [`SolverState::advance`].
pub fn step(state: &SolverState) -> Result<SolverState> {
    let mut next = state.clone();
    next.advance(&mut Vec::new())?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Record at least once per this much time.
    pub output_interval: f64,
    /// Also record whenever `sup|u|` grew by this factor since the last row.
    pub growth: f64,
    pub stiffness: f64,
    /// Fraction of the largest stable linear step.
    pub cfl: f64,
    pub max_steps: u64,
    pub closure: BoundaryClosure,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { output_interval: 1e-3, growth: 0.02, stiffness: DEFAULT_STIFFNESS, cfl: 1.0, max_steps: 50_000_000, closure: BoundaryClosure::Corrected }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub t_end: Option<f64>,
    pub sup_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub dt: f64,
    pub sup_u: f64,
    pub boundary_sup: f64,
    pub mass_proxy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RunOutcome {
    ReachedEnd,
    ReachedThreshold,
    BlowUp { t: f64 },
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: Vec<SeriesRow>,
    /// Last valid state.
    pub state: SolverState,
    pub outcome: RunOutcome,
}

impl RunOutput {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.series {
            w.serialize(r).map_err(|e| BblError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| BblError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BblError::Io(e.to_string()))
    }
}

fn row(s: &SolverState) -> SeriesRow {
    SeriesRow { t: s.t, dt: s.dt, sup_u: s.sup(), boundary_sup: s.boundary_sup(), mass_proxy: s.mass_proxy() }
}

/// Steps until the stop rule fires, recording the monitored norms.
pub fn run(mut state: SolverState, cfg: &RunConfig, stop: &StopRule) -> Result<RunOutput> {
    if stop.t_end.is_none() && stop.sup_threshold.is_none() {
        return invalid("stop rule needs t_end or sup_threshold");
    }
    if let Some(te) = stop.t_end {
        if !(te > state.t) {
            return invalid("t_end must lie after the initial time");
        }
    }
    if !(cfg.output_interval > 0.0 && cfg.growth >= 0.0 && cfg.stiffness > 0.0 && cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return invalid("run config needs output_interval > 0, growth >= 0, stiffness > 0, 0 < cfl <= 1");
    }
    let mut scratch = Vec::new();
    state.closure = cfg.closure;
    state.dt = state.stable_dt(cfg.stiffness, cfg.cfl);
    let mut series = vec![row(&state)];
    let mut next_out = state.t + cfg.output_interval;
    let mut last_sup = series[0].sup_u;
    let outcome = loop {
        if let Some(th) = stop.sup_threshold {
            if state.sup() >= th {
                break RunOutcome::ReachedThreshold;
            }
        }
        if let Some(te) = stop.t_end {
            if state.t >= te * (1.0 - 1e-15) {
                break RunOutcome::ReachedEnd;
            }
        }
        if state.step_count >= cfg.max_steps {
            break RunOutcome::StepLimit;
        }
        let mut dt = state.stable_dt(cfg.stiffness, cfg.cfl);
        if let Some(te) = stop.t_end {
            dt = dt.min(te - state.t);
        }
        state.dt = dt;
        match state.advance(&mut scratch) {
            Ok(()) => {}
            Err(BblError::BlowUp { t }) => break RunOutcome::BlowUp { t },
            Err(e) => return Err(e),
        }
        let s = state.sup();
        if state.t >= next_out || (cfg.growth > 0.0 && s >= last_sup * (1.0 + cfg.growth)) {
            series.push(row(&state));
            last_sup = s;
            while next_out <= state.t {
                next_out += cfg.output_interval;
            }
        }
    };
    if series.last().map(|r| r.t) != Some(state.t) {
        series.push(row(&state));
    }
    Ok(RunOutput { series, state, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    #[serde(rename = "T_est")]
    pub t_est: f64,
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

fn r2_at(t: &[f64], ls: &[f64], big_t: f64) -> f64 {
    let x: Vec<f64> = t.iter().map(|v| (big_t - v).ln()).collect();
    linear_fit(&x, ls).r2
}

/// Fits `sup ~ A (T - t)^b` on the last `window_fraction` of the time span,
/// choosing `T` to maximise `r^2`.
pub fn fit_rate(t: &[f64], sup: &[f64], window_fraction: f64) -> Result<RateFit> {
    if t.len() != sup.len() || t.len() < 30 {
        return invalid("rate fit needs at least 30 paired samples");
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return invalid("window fraction must lie in (0, 1]");
    }
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let lo = t1 - window_fraction * (t1 - t0);
    let idx: Vec<usize> = (0..t.len()).filter(|&k| t[k] >= lo).collect();
    if idx.len() < 10 {
        return Err(BblError::FitRejected(format!("only {} samples in the fit window", idx.len())));
    }
    let tw: Vec<f64> = idx.iter().map(|&k| t[k]).collect();
    let sw: Vec<f64> = idx.iter().map(|&k| sup[k]).collect();
    if tw.windows(2).any(|w| w[1] <= w[0]) || sw.windows(2).any(|w| w[1] <= w[0]) || sw[0] <= 0.0 {
        return invalid("series must be strictly increasing in t and sup inside the fit window");
    }
    let ls: Vec<f64> = sw.iter().map(|v| v.ln()).collect();
    let span = tw[tw.len() - 1] - tw[0];
    let last = tw[tw.len() - 1];
    // coarse scan of the gap T - t_last on a log scale, then golden section
    let (g_lo, g_hi) = ((1e-12 * span).ln(), (10.0 * span).ln());
    let m = 400;
    let score = |lg: f64| r2_at(&tw, &ls, last + lg.exp());
    let grid: Vec<f64> = (0..=m).map(|k| g_lo + (g_hi - g_lo) * k as f64 / m as f64).collect();
    let best = (0..=m).max_by(|&a, &b| score(grid[a]).total_cmp(&score(grid[b]))).unwrap_or(0);
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(m)]);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    while (b - a).abs() > 1e-13 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = score(d);
        }
    }
    let t_est = last + (0.5 * (a + b)).exp();
    let x: Vec<f64> = tw.iter().map(|v| (t_est - v).ln()).collect();
    let f = linear_fit(&x, &ls);
    let fit = RateFit { t_est, exponent: f.slope, prefactor: f.intercept.exp(), r2: f.r2, window: (tw[0], last), samples: tw.len() };
    if f.r2 < 0.99 {
        return Err(BblError::FitRejected(format!("r^2 = {:.4} below 0.99", f.r2)));
    }
    Ok(fit)
}

/// Type-I data sampled on the grid at time `t`.
pub fn type1_field(spec: &TypeISpec, grid: &CylGrid, t: f64, tol: &Tolerances) -> Result<CylField> {
    let zn = grid.xn_nodes();
    let col = zn.iter().map(|&z| type1_exact(spec, z, t, tol)).collect::<Result<Vec<_>>>()?;
    let values = (0..grid.nr).flat_map(|_| col.iter().copied()).collect();
    CylField::new(grid.dim, grid.r_nodes(), zn, values, Some(t))
}

/// Minimum number of cells across the bubble core `mu`.
pub const CORE_CELLS: f64 = 8.0;

/// Samples the bare single-bubble ansatz at `t0` with `r = |x~ - q~|`.
pub fn seed_with_ansatz(cfg: &AnsatzConfig, t0: f64, grid: &CylGrid, tol: &Tolerances) -> Result<CylField> {
    grid.validate()?;
    if cfg.dim != grid.dim {
        return invalid("ansatz and grid dimensions differ");
    }
    if cfg.include_phi || cfg.include_psi {
        return invalid("seeding uses the bare ansatz");
    }
    let (rn, zn) = (grid.r_nodes(), grid.xn_nodes());
    match cfg.bubbles.len() {
        0 => return CylField::new(grid.dim, rn, zn, vec![0.0; grid.nr * grid.nz], Some(t0)),
        1 => {}
        _ => return invalid("the cylindrical reduction holds a single bubble"),
    }
    let path = LeadingPath::new(cfg, tol)?;
    let mu = path.state(0, t0)?.mu;
    let h = grid.dr().max(grid.dz());
    if mu < CORE_CELLS * h {
        let need_r = (CORE_CELLS * grid.r_max / mu).ceil() + 1.0;
        let need_z = (CORE_CELLS * grid.h_max / mu).ceil() + 1.0;
        return Err(BblError::Infeasible(format!(
            "bubble core mu = {mu:.3e} at t0 = {t0} needs cells of size <= mu/{CORE_CELLS} = {:.3e}, grid has {h:.3e}; \
             that takes {need_r:.0} radial and {need_z:.0} normal nodes",
            mu / CORE_CELLS
        )));
    }
    let a = Ansatz::new(cfg, &path, Corrections::none())?;
    let q = &cfg.bubbles[0].q;
    let mut values = Vec::with_capacity(grid.nr * grid.nz);
    for &r in &rn {
        for &z in &zn {
            let mut x = q.clone();
            x[0] += r;
            x.push(z);
            values.push(a.value(&x, t0)?);
        }
    }
    CylField::new(grid.dim, rn, zn, values, Some(t0))
}

/// Outcome of the type-I reproduction run.
#[derive(Debug, Clone, Serialize)]
pub struct TypeICheck {
    /// Largest relative boundary-trace error over rows with `T - t >= 50 dt`.
    pub trace_error: f64,
    pub rows_checked: usize,
    pub fit: RateFit,
    #[serde(skip)]
    pub output: RunOutput,
}

/// Runs the solver from the type-I profile at `t = 0` until `sup|u|` reaches
/// `threshold`, then compares the boundary trace and fits the rate.
pub fn type1_check(spec: &TypeISpec, grid: &CylGrid, threshold: f64, window_fraction: f64, cfg: &RunConfig, tol: &Tolerances) -> Result<TypeICheck> {
    let u0 = type1_field(spec, grid, 0.0, tol)?;
    let state = SolverState::new(*grid, u0, 0.0)?;
    let out = run(state, cfg, &StopRule { t_end: Some(spec.big_t), sup_threshold: Some(threshold) })?;
    let mut err: f64 = 0.0;
    let mut rows = 0;
    for r in &out.series {
        let tau = spec.big_t - r.t;
        if tau >= 50.0 * r.dt && r.dt > 0.0 {
            let exact = spec.boundary_value(r.t)?;
            err = err.max((r.boundary_sup - exact).abs() / exact);
            rows += 1;
        }
    }
    let t: Vec<f64> = out.series.iter().map(|r| r.t).collect();
    let s: Vec<f64> = out.series.iter().map(|r| r.sup_u).collect();
    let fit = fit_rate(&t, &s, window_fraction)?;
    Ok(TypeICheck { trace_error: err, rows_checked: rows, fit, output: out })
}

#[cfg(test)]
mod tests;
