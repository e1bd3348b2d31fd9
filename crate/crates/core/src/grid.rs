//! Uniform grids and piecewise-smooth grid functions.
//!
//! Solutions of the compression equations are step-like: they are smooth
//! between finitely many jump points, and every jump sits on a grid node
//! (the delta reflections demand lattice alignment). A [`GridFn`] therefore
//! stores node samples plus a sparse map of jump sizes, and the integrators
//! here evaluate composite trapezoid sums cell by cell with one-sided limits,
//! which keeps them second order across jumps.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance (in cells) for deciding that a point sits on the lattice.
pub const LATTICE_TOL: f64 = 1e-9;

/// Uniform grid left + i*h for i in 0..n.
#[derive(Debug, Clone)]
pub struct Grid {
    left: f64,
    h: f64,
    n: usize,
}

impl Grid {
    pub fn new(left: f64, h: f64, n: usize) -> Result<Grid> {
        if !(h > 0.0) || n < 2 {
            return Err(Error::GridMismatch(format!(
                "need h > 0 and at least two nodes, got h = {h}, n = {n}"
            )));
        }
        Ok(Grid { left, h, n })
    }

    /// Grid containing `t` as a node, spanning [t - left_margin, t + right_margin].
    /// Margins are rounded up to whole cells.
    pub fn anchored(t: f64, left_margin: f64, right_margin: f64, h: f64) -> Result<Grid> {
        if !(left_margin > 0.0) || !(right_margin > 0.0) {
            return Err(Error::GridMismatch("margins must be positive".into()));
        }
        let lm = (left_margin / h - LATTICE_TOL).ceil() as usize;
        let rm = (right_margin / h - LATTICE_TOL).ceil() as usize;
        Ok(Grid {
            left: t - lm as f64 * h,
            h,
            n: lm + rm + 1,
        })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.left + i as f64 * self.h
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.node(self.n - 1)
    }

    /// Index of a lattice-aligned point, if it is one (within [`LATTICE_TOL`] cells).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let r = (x - self.left) / self.h;
        let i = r.round();
        if (r - i).abs() <= LATTICE_TOL.max(1e-12 * r.abs()) && i >= 0.0 && (i as usize) < self.n {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Like [`Grid::index_of`] but a hard error when `x` is off the lattice.
    pub fn index_exact(&self, x: f64) -> Result<usize> {
        self.index_of(x).ok_or_else(|| {
            let r = (x - self.left) / self.h;
            Error::DeltaOffGrid {
                location: x,
                offset: (r - r.round()).abs(),
            }
        })
    }

    /// Trapezoid weight of node i for integration over the index range [a, b].
    pub fn weight(&self, i: usize, a: usize, b: usize) -> f64 {
        if i < a || i > b || a == b {
            0.0
        } else if i == a || i == b {
            self.h / 2.0
        } else {
            self.h
        }
    }

    fn assert_same(&self, other: &Grid) -> Result<()> {
        if (self.left - other.left).abs() > 1e-12
            || (self.h - other.h).abs() > 1e-15
            || self.n != other.n
        {
            return Err(Error::GridMismatch("grids differ".into()));
        }
        Ok(())
    }
}

/// Complex grid function supported on the node range [lo, hi], zero outside.
///
/// Stored samples are the left-limit at interior jump nodes and the inside
/// value at the two support edges; `jumps` maps node index to
/// (right limit - left limit).
#[derive(Debug, Clone)]
pub struct GridFn {
    grid: Arc<Grid>,
    lo: usize,
    vals: Vec<Complex64>,
    jumps: BTreeMap<usize, Complex64>,
}

impl GridFn {
    pub fn new(grid: Arc<Grid>, lo: usize, vals: Vec<Complex64>) -> GridFn {
        assert!(!vals.is_empty() && lo + vals.len() <= grid.len());
        GridFn {
            grid,
            lo,
            vals,
            jumps: BTreeMap::new(),
        }
    }

    pub fn from_fn(grid: Arc<Grid>, lo: usize, hi: usize, f: impl Fn(f64) -> Complex64) -> GridFn {
        let vals = (lo..=hi).map(|i| f(grid.node(i))).collect();
        GridFn::new(grid, lo, vals)
    }

    pub fn zero(grid: Arc<Grid>) -> GridFn {
        let n = grid.len();
        GridFn::new(grid, 0, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.lo + self.vals.len() - 1
    }

    /// Stored sample (zero outside the support).
    pub fn val(&self, i: usize) -> Complex64 {
        if i < self.lo || i > self.hi() {
            Complex64::new(0.0, 0.0)
        } else {
            self.vals[i - self.lo]
        }
    }

    /// Limit of f(x) as x increases to node i.
    pub fn limit_left(&self, i: usize) -> Complex64 {
        if i <= self.lo || i > self.hi() {
            Complex64::new(0.0, 0.0)
        } else {
            self.vals[i - self.lo]
        }
    }

    /// Limit of f(x) as x decreases to node i.
    pub fn limit_right(&self, i: usize) -> Complex64 {
        if i < self.lo || i >= self.hi() {
            Complex64::new(0.0, 0.0)
        } else {
            self.vals[i - self.lo] + self.jumps.get(&i).copied().unwrap_or_default()
        }
    }

    /// Jump (right minus left limit) at node i, edge drops included.
    pub fn jump_at(&self, i: usize) -> Complex64 {
        self.limit_right(i) - self.limit_left(i)
    }

    pub fn add_jump(&mut self, i: usize, jump: Complex64) {
        assert!(i >= self.lo && i < self.hi(), "jump must be interior");
        *self.jumps.entry(i).or_default() += jump;
    }

    pub fn set_val(&mut self, i: usize, v: Complex64) {
        assert!(i >= self.lo && i <= self.hi());
        self.vals[i - self.lo] = v;
    }

    pub fn interior_jumps(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.jumps.iter().map(|(&i, &j)| (i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise combination a*self + b*other; jumps merge, support edges of
    /// the narrower operand become interior jumps of the result.
    pub fn axpy(&self, a: Complex64, other: &GridFn, b: Complex64) -> Result<GridFn> {
        self.grid.assert_same(&other.grid)?;
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let vals = (lo..=hi).map(|i| a * self.val(i) + b * other.val(i)).collect();
        let mut out = GridFn::new(self.grid.clone(), lo, vals);
        let mut candidates: Vec<usize> = self
            .jumps
            .keys()
            .chain(other.jumps.keys())
            .copied()
            .chain([self.lo, self.hi(), other.lo, other.hi()])
            .filter(|&i| i > lo && i < hi)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        for i in candidates {
            let j = a * self.jump_at(i) + b * other.jump_at(i);
            if j.norm() > 0.0 {
                out.jumps.insert(i, j);
            }
        }
        Ok(out)
    }

    /// Restriction to [a, b] (support intersected). Samples at the new
    /// support edges take the limit from inside the kept range.
    pub fn restrict(&self, a: usize, b: usize) -> GridFn {
        let lo = self.lo.max(a);
        let hi = self.hi().min(b);
        assert!(lo <= hi);
        let mut vals: Vec<Complex64> = (lo..=hi).map(|i| self.val(i)).collect();
        if lo > self.lo {
            vals[0] = self.limit_right(lo);
        }
        if hi < self.hi() {
            let last = vals.len() - 1;
            vals[last] = self.limit_left(hi);
        }
        let mut out = GridFn::new(self.grid.clone(), lo, vals);
        for (i, j) in self.jumps.iter() {
            if *i > lo && *i < hi {
                out.add_jump(*i, *j);
            }
        }
        out
    }

    /// Weighted L2 norm over the support (trapezoid).
    pub fn norm_l2(&self) -> f64 {
        integrate_pair(self, self, self.lo, self.hi())
            .re
            .max(0.0)
            .sqrt()
    }
}

/// Composite trapezoid of f(x) g(x) over [node a, node b] with one-sided
/// limits of f at cell endpoints; g is assumed continuous.
pub fn integrate_weighted(
    f: &GridFn,
    a: usize,
    b: usize,
    g: impl Fn(f64) -> Complex64,
) -> Complex64 {
    let grid = f.grid();
    let h = grid.spacing();
    let mut acc = Complex64::default();
    for k in a..b {
        let xl = grid.node(k);
        let xr = grid.node(k + 1);
        acc += (f.limit_right(k) * g(xl) + f.limit_left(k + 1) * g(xr)) * (h / 2.0);
    }
    acc
}

fn exp_moments(q: Complex64) -> (Complex64, Complex64) {
    // A(q) = int_0^1 (1-s) e^{qs} ds, B(q) = int_0^1 s e^{qs} ds.
    if q.norm() < 1e-3 {
        let mut a = Complex64::default();
        let mut b = Complex64::default();
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact2 = 2.0; // (k+2)!
        let mut fact1 = 1.0; // (k+1)!
        for k in 0..9 {
            a += pow / fact2;
            b += pow * (1.0 / fact1 - 1.0 / fact2);
            pow *= q;
            fact1 = fact2;
            fact2 *= (k + 3) as f64;
        }
        (a, b)
    } else {
        let e = q.exp();
        let one = Complex64::new(1.0, 0.0);
        let a = (e - one - q) / (q * q);
        let b = (one + (q - one) * e) / (q * q);
        (a, b)
    }
}

/// int f(x) e^{izx} dx over [node a, node b] with f piecewise linear between
/// nodes (one-sided limits at cell endpoints) and the exponential integrated
/// exactly per cell. Exact for piecewise-linear f, O(h^2) otherwise.
pub fn fourier_integral(f: &GridFn, z: Complex64, a: usize, b: usize) -> Complex64 {
    let grid = f.grid();
    let h = grid.spacing();
    let w = Complex64::new(0.0, 1.0) * z;
    let q = w * h;
    let (ma, mb) = exp_moments(q);
    let mut acc = Complex64::default();
    for k in a..b {
        let e0 = (w * grid.node(k)).exp();
        acc += h * e0 * (f.limit_right(k) * ma + f.limit_left(k + 1) * mb);
    }
    acc
}

/// Composite trapezoid of f(x) conj(g(x)) over [node a, node b], jumps of
/// both operands honored.
pub fn integrate_pair(f: &GridFn, g: &GridFn, a: usize, b: usize) -> Complex64 {
    let grid = f.grid();
    let h = grid.spacing();
    let mut acc = Complex64::default();
    for k in a..b {
        acc += (f.limit_right(k) * g.limit_right(k).conj()
            + f.limit_left(k + 1) * g.limit_left(k + 1).conj())
            * (h / 2.0);
    }
    acc
}

/// Node weights W_j with mean values at jumps so that sum_j K(x_i + x_j) W_j
/// reproduces the cell-wise trapezoid of K(x_i + y) conj(f(y)) over the whole
/// support. Returns (lo, weights).
pub fn conjugate_node_weights(f: &GridFn) -> (usize, Vec<Complex64>) {
    let h = f.grid().spacing();
    let lo = f.lo();
    let hi = f.hi();
    let w = (lo..=hi)
        .map(|j| (f.limit_left(j) + f.limit_right(j)).conj() * (h / 2.0))
        .collect();
    (lo, w)
}
