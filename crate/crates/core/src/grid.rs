//! Discretization of the potential-profit axis.
//!
//! A [`Grid`] splits `[lower, upper]` into `bins` equal bins, each further
//! split into `subsamples` quadrature cells. Every integral in the crate is a
//! midpoint rule over those cells, so results are deterministic for a fixed
//! grid. [`Tabulated`] holds a function sampled on the grid (at bin midpoints
//! or at quadrature cells) and evaluates it by linear interpolation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lower: f64,
    upper: f64,
    bins: usize,
    subsamples: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, bins: usize, subsamples: usize) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{lower}, {upper}]"
            )));
        }
        if lower >= upper {
            return Err(Error::InvalidGrid(format!(
                "lower bound {lower} must be below upper bound {upper}"
            )));
        }
        if bins < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 bins, got {bins}")));
        }
        if subsamples < 1 {
            return Err(Error::InvalidGrid("need at least 1 subsample per bin".into()));
        }
        Ok(Self {
            lower,
            upper,
            bins,
            subsamples,
        })
    }

    /// `[0, 10]` with 50 bins and 200 quadrature cells per bin.
    pub fn standard() -> Self {
        Self::new(0.0, 10.0, 50, 200).expect("standard grid is valid")
    }

    pub fn with_subsamples(&self, subsamples: usize) -> Result<Self> {
        Self::new(self.lower, self.upper, self.bins, subsamples)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn subsamples(&self) -> usize {
        self.subsamples
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    /// Width of one quadrature cell.
    pub fn cell_width(&self) -> f64 {
        self.width() / self.subsamples as f64
    }

    pub fn cells(&self) -> usize {
        self.bins * self.subsamples
    }

    /// Edge `i` for `i` in `0..=bins`; edge `bins` is exactly `upper`.
    pub fn edge(&self, i: usize) -> f64 {
        if i == self.bins {
            self.upper
        } else {
            self.lower + i as f64 * self.width()
        }
    }

    pub fn bin_lower(&self, b: usize) -> f64 {
        self.edge(b)
    }

    pub fn bin_upper(&self, b: usize) -> f64 {
        self.edge(b + 1)
    }

    pub fn midpoint(&self, b: usize) -> f64 {
        self.lower + (b as f64 + 0.5) * self.width()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|i| self.edge(i)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.bins).map(|b| self.midpoint(b)).collect()
    }

    pub fn cell_midpoint(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.cell_width()
    }

    /// Midpoints of every quadrature cell, in order.
    pub fn cell_midpoints(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.cell_midpoint(i)).collect()
    }

    /// Bin containing `x`; `upper` itself belongs to the last bin.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(self.lower..=self.upper).contains(&x) {
            return None;
        }
        let b = ((x - self.lower) / self.width()).floor() as usize;
        Some(b.min(self.bins - 1))
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    /// Midpoint-rule integral of `f` over `[from, to]` using the grid's
    /// quadrature cells. Cells cut by the interval ends contribute their
    /// clipped length evaluated at the clipped midpoint.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, from: f64, to: f64) -> f64 {
        debug_assert!(from <= to, "integration bounds out of order");
        let from = from.max(self.lower);
        let to = to.min(self.upper);
        if from >= to {
            return 0.0;
        }
        let dq = self.cell_width();
        let first = (((from - self.lower) / dq).floor() as usize).min(self.cells() - 1);
        let last = (((to - self.lower) / dq).ceil() as usize).min(self.cells());
        let mut total = 0.0;
        for i in first..last {
            let lo = self.lower + i as f64 * dq;
            let hi = lo + dq;
            let a = lo.max(from);
            let b = hi.min(to);
            if b <= a {
                continue;
            }
            if a == lo && b == hi {
                total += dq * f(self.cell_midpoint(i));
            } else {
                total += (b - a) * f(0.5 * (a + b));
            }
        }
        total
    }

    /// Integral over the whole grid.
    pub fn integrate_all<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let dq = self.cell_width();
        (0..self.cells()).map(|i| dq * f(self.cell_midpoint(i))).sum()
    }
}

/// What a tabulated function represents; controls evaluation outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    /// Zero outside `[lower, upper]`, nonnegative.
    Density,
    /// Payment above the critical value; clamps outside the node range.
    Rule,
    /// Bidder shade; clamps outside the node range.
    Strategy,
}

/// Where the nodes of a [`Tabulated`] sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// One node per bin, at the bin midpoint.
    Midpoints,
    /// One node per quadrature cell, at the cell midpoint.
    Cells,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Grid,
    layout: Layout,
    kind: Kind,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(grid: Grid, layout: Layout, kind: Kind, values: Vec<f64>) -> Result<Self> {
        let expected = node_count(&grid, layout);
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} node values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite node value {v}")));
        }
        if kind == Kind::Density {
            if let Some(v) = values.iter().find(|v| **v < 0.0) {
                return Err(Error::InvalidParameter(format!("negative density {v}")));
            }
        }
        Ok(Self {
            grid,
            layout,
            kind,
            values,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid, layout: Layout, kind: Kind, f: F) -> Result<Self> {
        let values = (0..node_count(&grid, layout))
            .map(|i| f(node_position(&grid, layout, i)))
            .collect();
        Self::new(grid, layout, kind, values)
    }

    pub fn zeros(grid: Grid, kind: Kind) -> Self {
        Self {
            grid,
            layout: Layout::Midpoints,
            kind,
            values: vec![0.0; grid.bins()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        node_position(&self.grid, self.layout, i)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    fn step(&self) -> f64 {
        match self.layout {
            Layout::Midpoints => self.grid.width(),
            Layout::Cells => self.grid.cell_width(),
        }
    }

    /// Linear interpolation between nodes. Densities vanish outside the grid;
    /// everything else extends flat past the first and last node.
    pub fn eval(&self, x: f64) -> f64 {
        if self.kind == Kind::Density && !self.grid.contains(x) {
            return 0.0;
        }
        interpolate(&self.values, self.node(0), self.step(), x)
    }

    /// Quadrature of the interpolant over the grid.
    pub fn mass(&self) -> f64 {
        self.grid.integrate_all(|x| self.eval(x))
    }

    /// Rescales to unit mass.
    pub fn normalized(mut self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroMass(format!("tabulated function has mass {mass}")));
        }
        for v in &mut self.values {
            *v /= mass;
        }
        Ok(self)
    }

    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(
            self.grid,
            self.layout,
            self.kind,
            self.values.iter().map(|v| f(*v)).collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W, value_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["psi", value_column])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.node(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a two-column CSV written by [`Tabulated::write_csv`]. The node
    /// positions must match the grid's midpoints or cell midpoints.
    pub fn read_csv<R: Read>(reader: R, grid: Grid, kind: Kind) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut psi = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Config(format!("expected 2 columns, got {}", record.len())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
            };
            psi.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        let layout = if psi.len() == grid.bins() {
            Layout::Midpoints
        } else if psi.len() == grid.cells() {
            Layout::Cells
        } else {
            return Err(Error::Config(format!(
                "{} rows do not match a grid with {} bins",
                psi.len(),
                grid.bins()
            )));
        };
        let tol = 1e-9 * (grid.upper() - grid.lower()).abs().max(1.0);
        for (i, x) in psi.iter().enumerate() {
            let expected = node_position(&grid, layout, i);
            if (x - expected).abs() > tol {
                return Err(Error::Config(format!(
                    "row {i}: psi {x} does not match grid node {expected}"
                )));
            }
        }
        Self::new(grid, layout, kind, values)
    }
}

fn node_count(grid: &Grid, layout: Layout) -> usize {
    match layout {
        Layout::Midpoints => grid.bins(),
        Layout::Cells => grid.cells(),
    }
}

fn node_position(grid: &Grid, layout: Layout, i: usize) -> f64 {
    match layout {
        Layout::Midpoints => grid.midpoint(i),
        Layout::Cells => grid.cell_midpoint(i),
    }
}

/// Piecewise-linear interpolation on uniformly spaced nodes, flat beyond the
/// end nodes.
pub(crate) fn interpolate(values: &[f64], first: f64, step: f64, x: f64) -> f64 {
    let n = values.len();
    let t = node_coordinate(first, step, x);
    if t <= 0.0 {
        return values[0];
    }
    if t >= (n - 1) as f64 {
        return values[n - 1];
    }
    let i = t.floor() as usize;
    let a = t - i as f64;
    if a == 0.0 {
        values[i]
    } else {
        values[i] * (1.0 - a) + values[i + 1] * a
    }
}

/// Fractional node index of `x`, snapped to the nearest integer when
/// rounding noise is all that separates them.
pub(crate) fn node_coordinate(first: f64, step: f64, x: f64) -> f64 {
    let t = (x - first) / step;
    let r = t.round();
    if (t - r).abs() < 1e-9 {
        r
    } else {
        t
    }
}

/// A probability density that can be sampled onto a grid.
pub trait Density {
    fn density(&self, x: f64) -> f64;

    /// Probability mass of each bin.
    fn bin_masses(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.bins())
            .map(|b| grid.integrate(|x| self.density(x), grid.bin_lower(b), grid.bin_upper(b)))
            .collect()
    }

    /// Density at every quadrature cell midpoint.
    fn on_cells(&self, grid: &Grid) -> Vec<f64> {
        grid.cell_midpoints().into_iter().map(|x| self.density(x)).collect()
    }
}

impl Density for Tabulated {
    fn density(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn on_cells(&self, grid: &Grid) -> Vec<f64> {
        if self.layout == Layout::Cells && self.grid == *grid {
            self.values.clone()
        } else {
            grid.cell_midpoints().into_iter().map(|x| self.eval(x)).collect()
        }
    }
}
