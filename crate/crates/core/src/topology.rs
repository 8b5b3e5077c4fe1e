//! Base-station and user point sets.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist2(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point2D) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point2D {
        Point2D::new(self.x + dx, self.y + dy)
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite())
            || x_max <= x_min
            || y_max <= y_min
        {
            return Err(Error::Degenerate(format!("window {r:?}")));
        }
        Ok(r)
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, 0.0, side, side)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2D {
        Point2D::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, p: &Point2D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    /// Shrinks by `margin` on every side.
    pub fn inset(&self, margin: f64) -> Result<Rect> {
        Rect::new(
            self.x_min + margin,
            self.y_min + margin,
            self.x_max - margin,
            self.y_max - margin,
        )
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point2D {
        Point2D::new(
            self.x_min + rng.random::<f64>() * self.width(),
            self.y_min + rng.random::<f64>() * self.height(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    PerturbedGrid {
        p: f64,
        cell_size: f64,
        rows: usize,
        cols: usize,
    },
    Ppp {
        density: f64,
    },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub bs_positions: Vec<Point2D>,
    pub window: Rect,
    pub analysis_window: Rect,
    pub seed: u64,
    pub generator: Generator,
}

impl Topology {
    /// Validates and assembles a topology. The `≥ 3` requirement is enforced
    /// by the triangulation, not here, so that two-site layouts stay usable
    /// for nearest-pair queries.
    pub fn new(
        bs_positions: Vec<Point2D>,
        window: Rect,
        analysis_window: Rect,
        seed: u64,
        generator: Generator,
    ) -> Result<Self> {
        if !window.contains_rect(&analysis_window) {
            return invalid("analysis window must lie inside the window");
        }
        for (i, p) in bs_positions.iter().enumerate() {
            if !p.is_finite() {
                return invalid(format!("BS {i} has non-finite coordinates"));
            }
            if !window.contains(p) {
                return invalid(format!("BS {i} at ({}, {}) is outside the window", p.x, p.y));
            }
        }
        let mut sorted: Vec<(f64, f64, usize)> =
            bs_positions.iter().enumerate().map(|(i, p)| (p.x, p.y, i)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Degenerate(format!(
                    "BS {} and BS {} coincide",
                    w[0].2, w[1].2
                )));
            }
        }
        Ok(Self {
            bs_positions,
            window,
            analysis_window,
            seed,
            generator,
        })
    }

    /// Explicit layout. Without a window, the bounding box padded by 10% of
    /// its larger side is used, and the analysis window equals the window.
    pub fn explicit(bs_positions: Vec<Point2D>, window: Option<Rect>) -> Result<Self> {
        let window = match window {
            Some(w) => w,
            None => padded_bbox(&bs_positions)?,
        };
        Self::new(bs_positions, window, window, 0, Generator::Explicit)
    }

    pub fn len(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bs_positions.is_empty()
    }

    pub fn with_analysis_window(mut self, analysis_window: Rect) -> Result<Self> {
        if !self.window.contains_rect(&analysis_window) {
            return invalid("analysis window must lie inside the window");
        }
        self.analysis_window = analysis_window;
        Ok(self)
    }

    /// Serializes the BS positions in the coordinate-file format.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::from("# x y (meters)\n");
        for p in &self.bs_positions {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }
}

fn padded_bbox(points: &[Point2D]) -> Result<Rect> {
    if points.is_empty() {
        return invalid("empty coordinate list");
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let pad = (0.1 * (x1 - x0).max(y1 - y0)).max(1.0);
    Rect::new(x0 - pad, y0 - pad, x1 + pad, y1 + pad)
}

/// One BS per grid cell, uniform inside the centered `p × p` sub-square.
///
/// Index order is row-major: BS `r * cols + c` sits in row `r` (y) and
/// column `c` (x). The analysis window drops one cell-wide guard ring when
/// the grid is at least 3×3.
pub fn generate_perturbed_grid(
    rows: usize,
    cols: usize,
    cell_size: f64,
    p: f64,
    seed: u64,
) -> Result<Topology> {
    if rows * cols < 3 {
        return invalid(format!("grid {rows}x{cols} has fewer than 3 cells"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return invalid(format!("cell size {cell_size} must be positive"));
    }
    if !(0.0..=cell_size).contains(&p) {
        return invalid(format!("perturbation p = {p} outside [0, {cell_size}]"));
    }
    let mut rng = rng::stream(seed, purpose::TOPOLOGY, 0);
    let mut bs = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let cx = (c as f64 + 0.5) * cell_size;
            let cy = (r as f64 + 0.5) * cell_size;
            // Draw both offsets unconditionally so the stream layout does not depend on p.
            let ux: f64 = rng.random();
            let uy: f64 = rng.random();
            bs.push(Point2D::new(cx + (ux - 0.5) * p, cy + (uy - 0.5) * p));
        }
    }
    let window = Rect::new(0.0, 0.0, cols as f64 * cell_size, rows as f64 * cell_size)?;
    let analysis_window = if rows >= 3 && cols >= 3 {
        window.inset(cell_size)?
    } else {
        window
    };
    Topology::new(
        bs,
        window,
        analysis_window,
        seed,
        Generator::PerturbedGrid {
            p,
            cell_size,
            rows,
            cols,
        },
    )
}

/// Homogeneous PPP of intensity `density` (per m²) restricted to `window`.
pub fn generate_ppp(density: f64, window: Rect, seed: u64) -> Result<Topology> {
    if !(density > 0.0 && density.is_finite()) {
        return invalid(format!("PPP density {density} must be positive"));
    }
    let window = Rect::new(window.x_min, window.y_min, window.x_max, window.y_max)?;
    let mut rng = rng::stream(seed, purpose::TOPOLOGY, 1);
    let mean = density * window.area();
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let bs = (0..count).map(|_| window.sample(&mut rng)).collect();
    Topology::new(bs, window, window, seed, Generator::Ppp { density })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UserDensity {
    PerBs(usize),
    PerArea(f64),
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSet {
    pub user_positions: Vec<Point2D>,
    pub seed: u64,
    pub density: UserDensity,
}

impl UserSet {
    pub fn len(&self) -> usize {
        self.user_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_positions.is_empty()
    }
}

/// `count` i.i.d. uniform users over the whole topology window.
pub fn drop_users(topology: &Topology, count: usize, seed: u64) -> UserSet {
    let mut rng = rng::stream(seed, purpose::USERS, 0);
    let user_positions = (0..count).map(|_| topology.window.sample(&mut rng)).collect();
    UserSet {
        user_positions,
        seed,
        density: UserDensity::Count,
    }
}

/// `k_per_bs × |BS|` uniform users.
pub fn drop_users_per_bs(topology: &Topology, k_per_bs: usize, seed: u64) -> UserSet {
    let mut users = drop_users(topology, k_per_bs * topology.len(), seed);
    users.density = UserDensity::PerBs(k_per_bs);
    users
}

/// Parses the coordinate-file format: one `x y` pair per line, `#` starts a
/// comment, blank lines ignored.
pub fn parse_coordinates(text: &str) -> Result<Vec<Point2D>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        if fields.len() != 2 {
            return Err(parse_err(format!("expected `x y`, got {} fields", fields.len())));
        }
        let x: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad x `{}`", fields[0])))?;
        let y: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad y `{}`", fields[1])))?;
        let p = Point2D::new(x, y);
        if !p.is_finite() {
            return Err(parse_err("non-finite coordinate".into()));
        }
        out.push(p);
    }
    Ok(out)
}
