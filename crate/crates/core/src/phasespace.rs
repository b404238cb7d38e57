//! Coordinate-space and phase-space pictures of the field: oscillator
//! eigenfunctions, quantum carpets `|ψ(x,t)|²` and Wigner functions.

use std::{f64::consts::PI, fmt::Write as _};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    dynamics::JointState,
    observables::{DensityMatrix, FieldComponents},
    C64,
};

pub const GRID_SCHEMA: &str = "qdkerr.grid/1";

/// Row integrals of a carpet below this are reported as clipped.
pub const CARPET_ROW_WARN: f64 = 0.999;

// recurrences are rescaled whenever a value leaves [1/BIG, BIG]
const BIG: f64 = 1e150;

/// Uniform sampling `min, …, max` with `points ≥ 2` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for Axis {
    fn default() -> Self {
        Axis {
            min: -10.0,
            max: 10.0,
            points: 801,
        }
    }
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Axis { min, max, points }
    }

    pub fn is_valid(&self) -> bool {
        self.points >= 2 && self.min.is_finite() && self.max.is_finite() && self.max > self.min
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.max
                } else {
                    self.min + i as f64 * h
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowAxis {
    /// Carpet rows, one per time sample.
    T,
    /// Wigner rows, one per momentum sample.
    P,
}

/// A real-valued map sampled on `rows × x`: a carpet (rows are times) or a
/// Wigner function (rows are momenta). `values[[row, ix]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub row_axis: RowAxis,
    pub x: Axis,
    pub rows: Vec<f64>,
    pub values: Array2<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PhaseSpaceGrid {
    pub fn x_values(&self) -> Vec<f64> {
        self.x.values()
    }

    /// Trapezoid integral of each row over x.
    pub fn row_integrals(&self) -> Vec<f64> {
        let h = self.x.step();
        self.values
            .rows()
            .into_iter()
            .map(|r| trapezoid(r.as_slice().expect("standard layout"), h))
            .collect()
    }

    /// Trapezoid integral over the whole grid (rows assumed uniform).
    pub fn integral(&self) -> f64 {
        trapezoid(&self.row_integrals(), self.row_step())
    }

    /// Integral over rows at each x: the x-marginal of a Wigner grid.
    pub fn marginal_x(&self) -> Vec<f64> {
        let h = self.row_step();
        self.values
            .columns()
            .into_iter()
            .map(|c| trapezoid(&c.to_vec(), h))
            .collect()
    }

    fn row_step(&self) -> f64 {
        if self.rows.len() < 2 {
            return 0.0;
        }
        (self.rows[self.rows.len() - 1] - self.rows[0]) / (self.rows.len() - 1) as f64
    }

    /// Copy with each row scaled to unit maximum, for visualization.
    pub fn row_max_normalized(&self) -> PhaseSpaceGrid {
        let mut out = self.clone();
        for mut row in out.values.rows_mut() {
            let m = row.iter().cloned().fold(0.0, f64::max);
            if m > 0.0 {
                row.mapv_inplace(|v| v / m);
            }
        }
        out
    }

    /// CSV with `#`-prefixed header lines, an x header row, and the row
    /// coordinate (t or p) in the first column.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        let label = match self.row_axis {
            RowAxis::T => "t",
            RowAxis::P => "p",
        };
        out.push_str(label);
        out.push_str("\\x");
        for x in self.x_values() {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
        for (r, row) in self.rows.iter().zip(self.values.rows()) {
            let _ = write!(out, "{r}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, meta: &serde_json::Value) -> String {
        let values: Vec<Vec<f64>> = self.values.rows().into_iter().map(|r| r.to_vec()).collect();
        let doc = serde_json::json!({
            "schema": GRID_SCHEMA,
            "meta": meta,
            "row_axis": self.row_axis,
            "x": self.x,
            "rows": self.rows,
            "values": values,
            "warnings": self.warnings,
        });
        serde_json::to_string(&doc).expect("grid is plain data")
    }
}

fn trapezoid(y: &[f64], h: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (y[0] + y[n - 1]) + y[1..n - 1].iter().sum::<f64>()),
    }
}

/// `Fₙ(x) = ⟨x|n⟩` for `n = 0..=max_n`, by the three-term recurrence on
/// normalized functions
/// `F_{n+1} = √(2/(n+1)) x Fₙ − √(n/(n+1)) F_{n−1}`.
pub fn fock_wavefunctions(max_n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_n + 1];
    // values are carried as mantissa · e^{log_scale}
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let mut scale = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = cur * scale;
    for n in 0..max_n {
        let next = (2.0 / (n + 1) as f64).sqrt() * x * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
            scale = log_scale.exp();
        }
        out[n + 1] = cur * scale;
    }
    out
}

/// Normalized oscillator eigenfunction
/// `Fₙ(x) = π^{−1/4} (2ⁿ n!)^{−1/2} Hₙ(x) e^{−x²/2}`.
pub fn fock_wavefunction(n: usize, x: f64) -> f64 {
    fock_wavefunctions(n, x)[n]
}

/// `Fₙ(x_j)` for all `n < dim` on an axis, as a `dim × points` matrix.
fn wavefunction_table(dim: usize, xs: &[f64]) -> Array2<f64> {
    let mut table = Array2::zeros((dim, xs.len()));
    if dim == 0 {
        return table;
    }
    for (j, &x) in xs.iter().enumerate() {
        for (n, f) in fock_wavefunctions(dim - 1, x).into_iter().enumerate() {
            table[[n, j]] = f;
        }
    }
    table
}

/// `|ψ(x)|²` summed over the incoherent components of a state.
pub fn position_density(s: &impl FieldComponents, x: &Axis) -> Vec<f64> {
    let xs = x.values();
    let dim = s.components().iter().map(|c| c.len()).max().unwrap_or(0);
    let table = wavefunction_table(dim, &xs);
    density_row(&s.components(), &table)
}

fn density_row(components: &[&[C64]], table: &Array2<f64>) -> Vec<f64> {
    let points = table.ncols();
    let mut row = vec![0.0; points];
    for c in components {
        for (j, r) in row.iter_mut().enumerate() {
            let psi: C64 = c
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != C64::new(0.0, 0.0))
                .map(|(n, a)| a * table[[n, j]])
                .sum();
            *r += psi.norm_sqr();
        }
    }
    row
}

/// Quantum carpet: one row `|Σ gₙFₙ(x)|² + |Σ eₙFₙ(x)|²` per state.
///
/// Pass lab-frame states to see the free oscillation of the wave packet.
pub fn carpet(traj: &[JointState], x: &Axis) -> PhaseSpaceGrid {
    let xs = x.values();
    let dim = traj.iter().map(|s| s.dim()).max().unwrap_or(0);
    let table = wavefunction_table(dim, &xs);
    let rows: Vec<Vec<f64>> = traj
        .par_iter()
        .map(|s| density_row(&s.components(), &table))
        .collect();
    let mut values = Array2::zeros((traj.len(), xs.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    let mut grid = PhaseSpaceGrid {
        row_axis: RowAxis::T,
        x: *x,
        rows: traj.iter().map(|s| s.t).collect(),
        values,
        warnings: Vec::new(),
    };
    let clipped: Vec<(f64, f64)> = grid
        .rows
        .iter()
        .zip(grid.row_integrals())
        .filter(|(_, i)| *i < CARPET_ROW_WARN)
        .map(|(t, i)| (*t, i))
        .collect();
    if let Some(&(t, i)) = clipped.iter().min_by(|a, b| a.1.total_cmp(&b.1)) {
        grid.warnings.push(format!(
            "{} carpet rows integrate below {CARPET_ROW_WARN} (worst {i:.6} at t = {t}); widen the x range",
            clipped.len()
        ));
    }
    grid
}

/// Natural logs of `0!, 1!, …, n!`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Normalized Laguerre functions
/// `f_j = √(j!/(j+k)!) u^{k/2} e^{−u/2} L_j^{(k)}(u)` for `j < len`.
fn laguerre_functions(k: usize, u: f64, len: usize, ln_fact_k: f64, out: &mut [f64]) {
    if len == 0 {
        return;
    }
    if k > 0 && u == 0.0 {
        out[..len].iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let kf = k as f64;
    let ln_u_term = if k == 0 { 0.0 } else { 0.5 * kf * u.ln() };
    let mut log_scale = -0.5 * u + ln_u_term - 0.5 * ln_fact_k;
    let mut scale = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = scale;
    for j in 0..len - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - u) * cur - (jf * (jf + kf)).sqrt() * prev)
            / ((jf + 1.0) * (jf + 1.0 + kf)).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
            scale = log_scale.exp();
        }
        out[j + 1] = cur * scale;
    }
}

/// Which sub-diagonals `ρ_{n+k,n}` hold any nonzero element; parity states
/// leave every odd one empty.
fn active_diagonals(rho: &DensityMatrix) -> Vec<bool> {
    let dim = rho.dim();
    (0..dim)
        .map(|k| (0..dim - k).any(|n| rho.elements[[n + k, n]] != C64::new(0.0, 0.0)))
        .collect()
}

/// `W(x, p)` at a single point, from the Fock-basis kernel
///
/// ```text
/// W_{n+k,n}(x,p) = (−1)ⁿ/π · √(n!/(n+k)!) (√2 (x − ip))^k e^{−(x²+p²)} L_n^{(k)}(2(x²+p²))
/// ```
///
/// summed against `ρ_{n+k,n}` (and its conjugate for `k > 0`).
pub fn wigner_at(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let ln_fact = log_factorials(dim);
    let mut buf = vec![0.0; dim];
    wigner_point(rho, &active_diagonals(rho), x, p, &ln_fact, &mut buf)
}

fn wigner_point(
    rho: &DensityMatrix,
    active: &[bool],
    x: f64,
    p: f64,
    ln_fact: &[f64],
    buf: &mut [f64],
) -> f64 {
    let dim = rho.dim();
    let u = 2.0 * (x * x + p * p);
    let phi = p.atan2(x);
    let mut total = 0.0;
    for k in 0..dim {
        if !active[k] {
            continue;
        }
        let len = dim - k;
        laguerre_functions(k, u, len, ln_fact[k], buf);
        let mut acc = C64::new(0.0, 0.0);
        for (n, f) in buf[..len].iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            acc += rho.elements[[n + k, n]] * (sign * f);
        }
        if k == 0 {
            total += acc.re;
        } else {
            // (x − ip)^k carries e^{−ikφ}
            total += 2.0 * (acc * C64::from_polar(1.0, -(k as f64) * phi)).re;
        }
    }
    total / PI
}

/// Wigner function of a field density matrix on `p × x`.
pub fn wigner(rho: &DensityMatrix, x: &Axis, p: &Axis) -> PhaseSpaceGrid {
    let xs = x.values();
    let ps = p.values();
    let dim = rho.dim();
    let ln_fact = log_factorials(dim);
    let active = active_diagonals(rho);
    let rows: Vec<Vec<f64>> = ps
        .par_iter()
        .map(|&pv| {
            let mut buf = vec![0.0; dim];
            xs.iter()
                .map(|&xv| wigner_point(rho, &active, xv, pv, &ln_fact, &mut buf))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((ps.len(), xs.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    PhaseSpaceGrid {
        row_axis: RowAxis::P,
        x: *x,
        rows: ps,
        values,
        warnings: Vec::new(),
    }
}

/// `∬ max(−W, 0) dx dp` by the trapezoid rule.
pub fn negativity_volume(w: &PhaseSpaceGrid) -> f64 {
    let neg = PhaseSpaceGrid {
        values: w.values.mapv(|v| (-v).max(0.0)),
        ..w.clone()
    };
    neg.integral()
}

/// A carpet row whose dominant peak is narrower than the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingZone {
    pub t: f64,
    pub x_left: f64,
    pub x_right: f64,
    /// Full width at half maximum of the dominant peak.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneReport {
    /// FWHM of the dominant peak in the first row.
    pub initial_width: f64,
    pub zones: Vec<SqueezingZone>,
    /// `(t, σ[x])` for every row, with `σ[x] = √Var[x]` from the row itself.
    pub sigma_x: Vec<(f64, f64)>,
}

/// Half-maximum crossings around the global maximum of a row, by linear
/// interpolation; a peak that runs into the grid edge is cut there.
fn dominant_peak(row: &[f64], xs: &[f64]) -> Option<(f64, f64)> {
    let (jm, &vmax) = row
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if vmax <= 0.0 {
        return None;
    }
    let half = 0.5 * vmax;
    let mut left = xs[0];
    for j in (0..jm).rev() {
        if row[j] <= half {
            let f = (half - row[j]) / (row[j + 1] - row[j]);
            left = xs[j] + f * (xs[j + 1] - xs[j]);
            break;
        }
    }
    let mut right = xs[xs.len() - 1];
    for j in jm + 1..row.len() {
        if row[j] <= half {
            let f = (row[j - 1] - half) / (row[j - 1] - row[j]);
            right = xs[j - 1] + f * (xs[j] - xs[j - 1]);
            break;
        }
    }
    Some((left, right))
}

/// Finds carpet rows whose dominant peak has FWHM below
/// `threshold × (FWHM of the first row)`, sorted by time.
pub fn squeezing_zones(c: &PhaseSpaceGrid, threshold: f64) -> ZoneReport {
    let xs = c.x_values();
    let h = c.x.step();
    let mut widths = Vec::with_capacity(c.rows.len());
    let mut sigma_x = Vec::with_capacity(c.rows.len());
    for (t, row) in c.rows.iter().zip(c.values.rows()) {
        let row = row.to_vec();
        widths.push(dominant_peak(&row, &xs));
        let norm = trapezoid(&row, h);
        let first: Vec<f64> = row.iter().zip(&xs).map(|(v, x)| v * x).collect();
        let second: Vec<f64> = row.iter().zip(&xs).map(|(v, x)| v * x * x).collect();
        let mean = trapezoid(&first, h) / norm;
        let var = trapezoid(&second, h) / norm - mean * mean;
        sigma_x.push((*t, var.max(0.0).sqrt()));
    }
    let initial_width = widths
        .first()
        .copied()
        .flatten()
        .map(|(l, r)| r - l)
        .unwrap_or(f64::NAN);
    let mut zones: Vec<SqueezingZone> = c
        .rows
        .iter()
        .zip(&widths)
        .filter_map(|(t, w)| {
            let (l, r) = (*w)?;
            (r - l < threshold * initial_width).then_some(SqueezingZone {
                t: *t,
                x_left: l,
                x_right: r,
                width: r - l,
            })
        })
        .collect();
    zones.sort_by(|a, b| a.t.total_cmp(&b.t));
    ZoneReport {
        initial_width,
        zones,
        sigma_x,
    }
}
