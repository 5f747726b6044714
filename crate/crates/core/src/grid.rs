//! Uniform symmetric grids and sampled profiles with explicit limits at ±∞.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{KinkError, Result};
use crate::scalar::{cast, from_usize, to_f64, Real};

pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_SPACING: f64 = 0.05;

/// Nodes `x_j = j·h`, `j = −M..=M`, with `M·h = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    half_width: T,
    spacing: T,
    n_points: usize,
}

/// Builds the grid `[-L, L]` with spacing `h`.
///
/// `L/h` must be within `1e-9` of an integer (relaxed to a few ulps for
/// single precision), `L ≥ 5` and `h ≤ 0.5`.
pub fn make_grid<T: Real>(half_width: T, spacing: T) -> Result<GridSpec<T>> {
    if !(half_width.is_finite() && spacing.is_finite() && half_width > T::zero() && spacing > T::zero())
    {
        return Err(KinkError::InvalidParameter(format!(
            "grid needs positive finite half-width and spacing, got L={half_width}, h={spacing}"
        )));
    }
    if half_width < cast(5.0) || spacing > cast(0.5) {
        return Err(KinkError::InvalidParameter(format!(
            "grid requires L >= 5 and h <= 0.5, got L={half_width}, h={spacing}"
        )));
    }
    let ratio = half_width / spacing;
    let m = ratio.round();
    let tol = cast::<T>(1e-9).max(T::epsilon() * ratio * cast(4.0));
    if (ratio - m).abs() > tol {
        return Err(KinkError::InvalidParameter(format!(
            "L/h = {ratio} is not an integer (L={half_width}, h={spacing})"
        )));
    }
    let m = m.to_usize().expect("positive node count");
    Ok(GridSpec { half_width: spacing * from_usize(m), spacing, n_points: 2 * m + 1 })
}

impl<T: Real> GridSpec<T> {
    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Index of the node at `x = 0`.
    pub fn center(&self) -> usize {
        self.n_points / 2
    }

    /// Coordinate of node `j` (0-based from the left end).
    #[inline]
    pub fn x(&self, j: usize) -> T {
        let m = self.center();
        if j >= m {
            from_usize::<T>(j - m) * self.spacing
        } else {
            -(from_usize::<T>(m - j) * self.spacing)
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Index of the mirror node `−x_j`.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        self.n_points - 1 - j
    }

    /// Grid with the same half-width and half the spacing.
    pub fn refined(&self) -> Result<Self> {
        make_grid(self.half_width, self.spacing * cast(0.5))
    }
}

/// A function sampled on a grid, with its limits at `+∞` and `−∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    grid: GridSpec<T>,
    values: Vec<T>,
    tail_right: T,
    tail_left: T,
}

impl<T: Real> Profile<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<T>, tail_right: T, tail_left: T) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(KinkError::InvalidParameter(format!(
                "profile has {} values for a grid of {} nodes",
                values.len(),
                grid.n_points()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(KinkError::NonFinite { index });
        }
        if !(tail_right.is_finite() && tail_left.is_finite()) {
            return Err(KinkError::NonFinite { index: values.len() });
        }
        Ok(Self { grid, values, tail_right, tail_left })
    }

    /// Constant profile with matching tails.
    pub fn constant(grid: GridSpec<T>, c: T) -> Self {
        Self { grid, values: vec![c; grid.n_points()], tail_right: c, tail_left: c }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn tail_right(&self) -> T {
        self.tail_right
    }

    pub fn tail_left(&self) -> T {
        self.tail_left
    }

    /// Value at `+L`.
    pub fn right_end(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Value at node `j`, or the matching tail value when `j` falls off
    /// either end of the grid.
    #[inline]
    pub fn extended(&self, j: isize) -> T {
        if j < 0 {
            self.tail_left
        } else if j as usize >= self.values.len() {
            self.tail_right
        } else {
            self.values[j as usize]
        }
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Node-wise map; tails are mapped too.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect(), f(self.tail_right), f(self.tail_left))
    }

    /// `a·self + b·other`, including tails.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Self::new(self.grid, values, a * self.tail_right + b * other.tail_right, a * self.tail_left + b * other.tail_left)
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(KinkError::GridMismatch);
        }
        Ok(())
    }

    /// Odd part `(Φ(x) − Φ(−x))/2`; requires `tail_left = −tail_right`.
    pub fn project_odd(&self) -> Result<Self> {
        if self.tail_left != -self.tail_right {
            return Err(KinkError::TailMismatch {
                left: to_f64(self.tail_left),
                right: to_f64(self.tail_right),
            });
        }
        let half = cast::<T>(0.5);
        let values = (0..self.values.len())
            .map(|j| (self.values[j] - self.values[self.grid.mirror(j)]) * half)
            .collect();
        Ok(Self { grid: self.grid, values, tail_right: self.tail_right, tail_left: self.tail_left })
    }

    /// `max_j |Φ(x_j) + Φ(−x_j)|`, tails included.
    pub fn antisymmetry_defect(&self) -> T {
        let n = self.values.len();
        (0..=n / 2)
            .map(|j| (self.values[j] + self.values[n - 1 - j]).abs())
            .fold((self.tail_left + self.tail_right).abs(), T::max)
    }

    pub fn is_odd(&self, tol: T) -> bool {
        self.antisymmetry_defect() <= tol
    }

    /// Largest `|Φ|` over nodes and tails.
    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(self.tail_right.abs().max(self.tail_left.abs()), |m, v| m.max(v.abs()))
    }

    /// Largest `|Φ − R|` over nodes and tails.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        let tails = (self.tail_right - other.tail_right).abs().max((self.tail_left - other.tail_left).abs());
        Ok(self.values.iter().zip(&other.values).fold(tails, |m, (a, b)| m.max((*a - *b).abs())))
    }

    /// Every other node of a profile on the refined grid.
    pub fn coarsen(&self) -> Result<Self> {
        if self.values.len() % 4 != 1 {
            return Err(KinkError::InvalidParameter("grid cannot be coarsened by two".into()));
        }
        let grid = make_grid(self.grid.half_width, self.grid.spacing * cast(2.0))?;
        Self::new(grid, self.values.iter().step_by(2).copied().collect(), self.tail_right, self.tail_left)
    }

    /// CSV with header `x,phi`, 17 significant digits, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 48);
        out.push_str("x,phi\n");
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", to_f64(self.grid.x(j)), to_f64(*v));
        }
        out
    }

    /// Parses the CSV form; tails are not stored there and must be supplied.
    pub fn from_csv(text: &str, tail_right: T, tail_left: T) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("x,phi") => {}
            other => return Err(KinkError::Parse(format!("expected header `x,phi`, found {other:?}"))),
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .ok_or_else(|| KinkError::Parse(format!("row {}: missing column", row + 1)))?
                    .parse::<f64>()
                    .map_err(|e| KinkError::Parse(format!("row {}: {e}", row + 1)))
            };
            xs.push(parse(cols.next())?);
            values.push(cast::<T>(parse(cols.next())?));
            if cols.next().is_some() {
                return Err(KinkError::Parse(format!("row {}: too many columns", row + 1)));
            }
        }
        if xs.len() < 3 {
            return Err(KinkError::Parse("profile CSV needs at least three rows".into()));
        }
        let half_width = *xs.last().expect("non-empty");
        let spacing = (half_width - xs[0]) / (xs.len() - 1) as f64;
        let grid = make_grid(cast::<T>(half_width), cast::<T>(spacing))?;
        if grid.n_points() != xs.len() {
            return Err(KinkError::Parse("x column is not a symmetric uniform grid".into()));
        }
        Self::new(grid, values, tail_right, tail_left)
    }

    pub fn to_json_record(&self) -> ProfileRecord {
        ProfileRecord {
            half_width: to_f64(self.grid.half_width),
            spacing: to_f64(self.grid.spacing),
            tail_right: to_f64(self.tail_right),
            tail_left: to_f64(self.tail_left),
            values: self.values.iter().map(|&v| to_f64(v)).collect(),
        }
    }

    pub fn from_json_record(rec: &ProfileRecord) -> Result<Self> {
        let grid = make_grid(cast::<T>(rec.half_width), cast::<T>(rec.spacing))?;
        Self::new(
            grid,
            rec.values.iter().map(|&v| cast(v)).collect(),
            cast(rec.tail_right),
            cast(rec.tail_left),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_record()).expect("profile serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_record(&serde_json::from_str(text)?)
    }
}

/// JSON layout of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub half_width: f64,
    pub spacing: f64,
    pub tail_right: f64,
    pub tail_left: f64,
    pub values: Vec<f64>,
}

/// Samples `f` on every node.
pub fn sample<T: Real>(f: impl Fn(T) -> T, grid: &GridSpec<T>, tail_right: T, tail_left: T) -> Result<Profile<T>> {
    Profile::new(*grid, grid.nodes().into_iter().map(f).collect(), tail_right, tail_left)
}
