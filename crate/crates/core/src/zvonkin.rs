//! Elliptic drift removal for the Hölder velocity drift (one-dimensional
//! state, `z = (x, y)`).
//!
//! For each regime `i` and `lambda > 0` we solve
//! `lambda u - 1/2 a(z,i) u_yy - b2(z,i) u_y = b2(z,i)` on a rectangle.
//! The operator differentiates only in `y`, so the solve splits into
//! independent two-point problems per x-slice, each a tridiagonal system
//! from second-order central differences. The far-field boundary condition
//! is the large-`lambda` asymptote `u = b2 / lambda`. Once the gradient
//! bound drops below one half, `y -> y + u(x, y)` is strictly increasing
//! along every slice and the transformed drift is Lipschitz.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;
use crate::model::ModelSpec;
use crate::segment::Segment;
use crate::Regime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_max: f64,
    pub y_max: f64,
    /// Node counts (at least 3 each; odd counts put a node on the axes).
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn hx(&self) -> f64 {
        2.0 * self.x_max / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        2.0 * self.y_max / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.x_max + self.hx() * i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.y_max + self.hy() * j as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 || !(self.x_max > 0.0) || !(self.y_max > 0.0) {
            return Err(CoreError::Contract(String::from(
                "grid needs positive extents and at least 3 nodes per axis",
            )));
        }
        Ok(())
    }
}

/// Grid solution of the elliptic equation with precomputed difference
/// fields (interior central differences).
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub regime: Regime,
    pub lambda: f64,
    pub grid: GridSpec,
    /// `nx * ny` row-major over x then y.
    pub values: Vec<f64>,
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
    pub d_xx: Vec<f64>,
    pub d_yy: Vec<f64>,
    pub d_xy: Vec<f64>,
    /// Max interior residual of the discrete equation.
    pub residual: f64,
}

impl EllipticSolution {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.grid.ny + j
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)))
    }

    /// Bilinear interpolation of a field at `(x, y)`.
    fn interp(&self, field: &[f64], x: f64, y: f64) -> Result<f64> {
        let g = &self.grid;
        if math::abs(x) > g.x_max || math::abs(y) > g.y_max {
            return Err(CoreError::Extrapolation(format!(
                "({x}, {y}) outside the solved rectangle"
            )));
        }
        let fx = ((x + g.x_max) / g.hx()).min((g.nx - 2) as f64);
        let fy = ((y + g.y_max) / g.hy()).min((g.ny - 2) as f64);
        let i = fx as usize;
        let j = fy as usize;
        let wx = fx - i as f64;
        let wy = fy - j as f64;
        let v00 = field[i * g.ny + j];
        let v01 = field[i * g.ny + j + 1];
        let v10 = field[(i + 1) * g.ny + j];
        let v11 = field[(i + 1) * g.ny + j + 1];
        Ok(v00 * (1.0 - wx) * (1.0 - wy)
            + v01 * (1.0 - wx) * wy
            + v10 * wx * (1.0 - wy)
            + v11 * wx * wy)
    }

    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        self.interp(&self.values, x, y)
    }

    pub fn grad_at(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        Ok((self.interp(&self.d_x, x, y)?, self.interp(&self.d_y, x, y)?))
    }
}

fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    let mut c_prime = alloc::vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(CoreError::Numeric(String::from("singular tridiagonal pivot")));
    }
    c_prime[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c_prime[i - 1];
        if denom == 0.0 {
            return Err(CoreError::Numeric(String::from("singular tridiagonal pivot")));
        }
        if i < n - 1 {
            c_prime[i] = sup[i] / denom;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
    Ok(())
}

/// Solve the regime-`i` elliptic equation on the grid.
pub fn solve_elliptic(
    model: &ModelSpec,
    regime: Regime,
    lambda: f64,
    grid: GridSpec,
) -> Result<EllipticSolution> {
    grid.validate()?;
    if model.dimension() != 1 {
        return Err(CoreError::Contract(String::from(
            "the elliptic lab is restricted to d = 1",
        )));
    }
    if regime >= model.states() {
        return Err(CoreError::Contract(format!("no regime {regime}")));
    }
    if !(lambda > 0.0) {
        return Err(CoreError::Contract(String::from("lambda must be positive")));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let hy = grid.hy();
    let mut values = alloc::vec![0.0; nx * ny];
    let mut b2_buf = [0.0f64; 1];
    let mut sigma_buf = [0.0f64; 1];
    let mut z = [0.0f64; 2];

    let mut sub = alloc::vec![0.0; ny - 2];
    let mut diag = alloc::vec![0.0; ny - 2];
    let mut sup = alloc::vec![0.0; ny - 2];
    let mut rhs = alloc::vec![0.0; ny - 2];

    for i in 0..nx {
        let x = grid.x(i);
        // Boundary values: the large-lambda asymptote u = b2 / lambda.
        z[0] = x;
        z[1] = grid.y(0);
        model.eval_b2(&z, regime, &mut b2_buf);
        let u_lo = b2_buf[0] / lambda;
        z[1] = grid.y(ny - 1);
        model.eval_b2(&z, regime, &mut b2_buf);
        let u_hi = b2_buf[0] / lambda;
        values[i * ny] = u_lo;
        values[i * ny + ny - 1] = u_hi;

        for j in 1..ny - 1 {
            z[1] = grid.y(j);
            model.eval_b2(&z, regime, &mut b2_buf);
            model.eval_sigma(&z, regime, &mut sigma_buf);
            let a = sigma_buf[0] * sigma_buf[0];
            if a <= 0.0 {
                return Err(CoreError::Contract(String::from(
                    "non-positive diffusion on the grid",
                )));
            }
            let b2v = b2_buf[0];
            let diff = 0.5 * a / (hy * hy);
            let adv = b2v / (2.0 * hy);
            sub[j - 1] = -diff + adv;
            diag[j - 1] = lambda + 2.0 * diff;
            sup[j - 1] = -diff - adv;
            rhs[j - 1] = b2v;
        }
        rhs[0] -= sub[0] * u_lo;
        rhs[ny - 3] -= sup[ny - 3] * u_hi;
        thomas_solve(&sub, &diag, &sup, &mut rhs)?;
        for j in 1..ny - 1 {
            values[i * ny + j] = rhs[j - 1];
        }
    }

    // Residual of the discrete equation on interior nodes.
    let mut residual = 0.0f64;
    for i in 0..nx {
        let x = grid.x(i);
        for j in 1..ny - 1 {
            z[0] = x;
            z[1] = grid.y(j);
            model.eval_b2(&z, regime, &mut b2_buf);
            model.eval_sigma(&z, regime, &mut sigma_buf);
            let a = sigma_buf[0] * sigma_buf[0];
            let u = values[i * ny + j];
            let u_m = values[i * ny + j - 1];
            let u_p = values[i * ny + j + 1];
            let uyy = (u_p - 2.0 * u + u_m) / (hy * hy);
            let uy = (u_p - u_m) / (2.0 * hy);
            let res = lambda * u - 0.5 * a * uyy - b2_buf[0] * uy - b2_buf[0];
            residual = residual.max(math::abs(res));
        }
    }

    // Difference fields (interior central differences; edges one-sided in
    // the interpolation sense are simply left at zero and excluded from the
    // gradient bound).
    let hx = grid.hx();
    let mut d_x = alloc::vec![0.0; nx * ny];
    let mut d_y = alloc::vec![0.0; nx * ny];
    let mut d_xx = alloc::vec![0.0; nx * ny];
    let mut d_yy = alloc::vec![0.0; nx * ny];
    let mut d_xy = alloc::vec![0.0; nx * ny];
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let c = i * ny + j;
            d_x[c] = (values[(i + 1) * ny + j] - values[(i - 1) * ny + j]) / (2.0 * hx);
            d_y[c] = (values[i * ny + j + 1] - values[i * ny + j - 1]) / (2.0 * hy);
            d_xx[c] = (values[(i + 1) * ny + j] - 2.0 * values[c] + values[(i - 1) * ny + j])
                / (hx * hx);
            d_yy[c] = (values[i * ny + j + 1] - 2.0 * values[c] + values[i * ny + j - 1])
                / (hy * hy);
            d_xy[c] = (values[(i + 1) * ny + j + 1] - values[(i + 1) * ny + j - 1]
                - values[(i - 1) * ny + j + 1]
                + values[(i - 1) * ny + j - 1])
                / (4.0 * hx * hy);
        }
    }

    Ok(EllipticSolution {
        regime,
        lambda,
        grid,
        values,
        d_x,
        d_y,
        d_xx,
        d_yy,
        d_xy,
        residual,
    })
}

/// `sup` over interior nodes of `|grad f| + |Hess f|_F`; below one half the
/// transform is a diffeomorphism.
pub fn gradient_bound(sol: &EllipticSolution) -> f64 {
    let (nx, ny) = (sol.grid.nx, sol.grid.ny);
    let mut bound = 0.0f64;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let c = i * ny + j;
            let grad = math::sqrt(sol.d_x[c] * sol.d_x[c] + sol.d_y[c] * sol.d_y[c]);
            let hess = math::sqrt(
                sol.d_xx[c] * sol.d_xx[c]
                    + 2.0 * sol.d_xy[c] * sol.d_xy[c]
                    + sol.d_yy[c] * sol.d_yy[c],
            );
            bound = bound.max(grad + hess);
        }
    }
    bound
}

/// Drift of the transformed velocity at `z = (x, y)` in regime `i`:
/// `lambda f_i + b1 + <grad_x f_i, ax + by> + <grad_y f_i, b1>` plus the
/// switching generator applied to `g(z, .) = y + f(z, .)`.
///
/// `solutions` must hold one solution per regime on a common grid.
pub fn transformed_drift(
    z: &[f64],
    regime: Regime,
    solutions: &[EllipticSolution],
    model: &ModelSpec,
) -> Result<f64> {
    if model.dimension() != 1 || z.len() != 2 {
        return Err(CoreError::Contract(String::from(
            "transformed drift is defined for d = 1",
        )));
    }
    if solutions.len() != model.states() {
        return Err(CoreError::Contract(format!(
            "need one solution per regime ({} given, {} regimes)",
            solutions.len(),
            model.states()
        )));
    }
    let (x, y) = (z[0], z[1]);
    let sol = &solutions[regime];
    let f_i = sol.value_at(x, y)?;
    let (fx, fy) = sol.grad_at(x, y)?;
    // b1 evaluated on the constant history equal to z.
    let phi = Segment::constant(model.decay_rate, 1, alloc::vec![x, y])?;
    let b1 = model.eval_b1(&phi, regime)?[0];
    let mut drift = sol.lambda * f_i
        + b1
        + fx * (model.coefficients.drift_a * x + model.coefficients.drift_b * y)
        + fy * b1;
    for l in 0..model.states() {
        if l != regime {
            let f_l = solutions[l].value_at(x, y)?;
            drift += model.rates.q_hat(regime, l) * (f_l - f_i);
        }
    }
    Ok(drift)
}

/// One row of a lambda scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub lambda: f64,
    pub residual: f64,
    pub gradient_bound: f64,
    pub sup_f: f64,
}

/// Solve over a ladder of lambdas and report residual, gradient bound, and
/// `sup |f|` per lambda.
pub fn scan_lambda(
    model: &ModelSpec,
    regime: Regime,
    lambdas: &[f64],
    grid: GridSpec,
) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let sol = solve_elliptic(model, regime, lambda, grid)?;
        rows.push(ScanRow {
            lambda,
            residual: sol.residual,
            gradient_bound: gradient_bound(&sol),
            sup_f: sol.sup_abs(),
        });
    }
    Ok(rows)
}

/// Smallest scanned lambda whose gradient bound is below one half.
pub fn lambda_star(rows: &[ScanRow]) -> Option<f64> {
    rows.iter()
        .find(|r| r.gradient_bound < 0.5)
        .map(|r| r.lambda)
}

/// Nodal injectivity proxy: `y -> y + f(x, y)` strictly increasing along
/// every x-slice.
pub fn transform_strictly_increasing(sol: &EllipticSolution) -> bool {
    let (nx, ny) = (sol.grid.nx, sol.grid.ny);
    for i in 0..nx {
        for j in 0..ny - 1 {
            let g0 = sol.grid.y(j) + sol.values[i * ny + j];
            let g1 = sol.grid.y(j + 1) + sol.values[i * ny + j + 1];
            if g1 <= g0 {
                return false;
            }
        }
    }
    true
}
