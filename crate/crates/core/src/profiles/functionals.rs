use super::field::{CylFunction, ProfileField};
use super::grid::QuadratureGrid;
use crate::error::{invalid, Result};
use crate::numerics::sphere_area;

fn critical_p(dim: usize) -> f64 {
    dim as f64 / (dim as f64 - 2.0)
}

/// `int |grad f|^2` over the half-space.
pub fn dirichlet_energy(f: &dyn CylFunction, grid: &QuadratureGrid) -> Result<f64> {
    grid.integrate(|r, xn| {
        let (a, b) = f.grad(r, xn);
        a * a + b * b
    })
}

/// `int |f(x~, 0)|^q` over the boundary.
pub fn boundary_power(f: &dyn CylFunction, grid: &QuadratureGrid, q: f64) -> Result<f64> {
    grid.integrate_boundary(|r| f.value(r, 0.0).abs().powf(q))
}

/// Energy `1/2 int |grad f|^2 - 1/(p+1) int_bdry |f|^{p+1}`.
pub fn functional_j(f: &dyn CylFunction, grid: &QuadratureGrid) -> Result<f64> {
    let p = critical_p(grid.dim);
    Ok(0.5 * dirichlet_energy(f, grid)? - boundary_power(f, grid, p + 1.0)? / (p + 1.0))
}

/// Nehari functional `int |grad f|^2 - int_bdry |f|^{p+1}`.
pub fn functional_i(f: &dyn CylFunction, grid: &QuadratureGrid) -> Result<f64> {
    let p = critical_p(grid.dim);
    Ok(dirichlet_energy(f, grid)? - boundary_power(f, grid, p + 1.0)?)
}

/// Second variation of the energy at `U`:
/// `int grad f . grad g - p int_bdry U^{p-1} f g`.
pub fn quadform_bu(f: &dyn CylFunction, g: &dyn CylFunction, grid: &QuadratureGrid) -> Result<f64> {
    let p = critical_p(grid.dim);
    let u = ProfileField { dim: grid.dim };
    let bulk = grid.integrate(|r, xn| {
        let (a, b) = f.grad(r, xn);
        let (c, d) = g.grad(r, xn);
        a * c + b * d
    })?;
    let bd = grid.integrate_boundary(|r| u.value(r, 0.0).powf(p - 1.0) * f.value(r, 0.0) * g.value(r, 0.0))?;
    Ok(bulk - p * bd)
}

/// Trace quotient `||grad f||_2^2 / ||f(., 0)||_{p+1}^2`.
pub fn rayleigh_q(f: &dyn CylFunction, grid: &QuadratureGrid) -> Result<f64> {
    let p = critical_p(grid.dim);
    let den = boundary_power(f, grid, p + 1.0)?;
    if den <= 0.0 {
        return invalid("field has zero boundary trace");
    }
    Ok(dirichlet_energy(f, grid)? / den.powf(2.0 / (p + 1.0)))
}

/// Best constant of the trace inequality, `(n-2)/2 |S^{n-1}|^{1/(n-1)}`.
pub fn sharp_trace_constant(dim: usize) -> f64 {
    (dim as f64 - 2.0) / 2.0 * sphere_area(dim).powf(1.0 / (dim as f64 - 1.0))
}
