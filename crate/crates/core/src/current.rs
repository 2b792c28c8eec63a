//! Two-dimensional turbulent current maps built from superposed Lamb vortices.
//!
//! Each vortex contributes a Lamb–Oseen tangential profile
//! `v(r) = Gamma / (2 pi r) * (1 - exp(-r^2 / (2 rc^2)))`, smooth at the core
//! and divergence-free. The field stores velocities on a regular grid of cell
//! centers and answers point queries by bilinear interpolation, clamped to
//! the boundary outside the domain.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("domain extent must be positive on both axes, got {0} x {1}")]
    ZeroAreaExtent(f64, f64),
    #[error("grid must be at least 2x2, got {0}x{1}")]
    GridTooSmall(usize, usize),
    #[error("vortex core radius must be positive, got {0}")]
    BadCoreRadius(f64),
    #[error("invalid range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("field files disagree: {0}")]
    InconsistentFiles(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// One Lamb vortex: center, signed circulation, and core radius.
///
/// The circulation sign sets the rotation direction (positive is
/// counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub center: [f64; 2],
    pub circulation: f64,
    pub core_radius: f64,
}

impl Vortex {
    pub fn new(center: [f64; 2], circulation: f64, core_radius: f64) -> Result<Self, FieldError> {
        if !(core_radius > 0.0) || !circulation.is_finite() {
            return Err(FieldError::BadCoreRadius(core_radius));
        }
        Ok(Self { center, circulation, core_radius })
    }
}

/// Velocity induced by a single vortex at `(x, y)`.
///
/// Returns `(0, 0)` exactly at the center, by continuity.
pub fn vortex_velocity(v: &Vortex, x: f64, y: f64) -> [f64; 2] {
    let dx = x - v.center[0];
    let dy = y - v.center[1];
    let r2 = dx * dx + dy * dy;
    if r2 == 0.0 {
        return [0.0, 0.0];
    }
    // v_theta / r, computed via expm1 so it stays accurate near the core.
    let s = r2 / (2.0 * v.core_radius * v.core_radius);
    let factor = v.circulation / (2.0 * std::f64::consts::PI) * (-(-s).exp_m1()) / r2;
    [-factor * dy, factor * dx]
}

/// Velocity sample with derived polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentSample {
    pub vx: f64,
    pub vy: f64,
    pub magnitude: f64,
    /// Heading of the current vector, radians from the x axis.
    pub heading: f64,
}

impl CurrentSample {
    fn from_components(vx: f64, vy: f64) -> Self {
        Self { vx, vy, magnitude: vx.hypot(vy), heading: vy.atan2(vx) }
    }
}

/// Gridded 2-D current map. Immutable after generation; cheap to share
/// between concurrent readers.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    nx: usize,
    ny: usize,
    extent: [f64; 2],
    /// Row-major velocities at cell centers: index `iy * nx + ix`.
    data: Vec<[f64; 2]>,
    vortices: Vec<Vortex>,
    seed: u64,
}

/// JSON header that, together with the velocity CSV, replays a field exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: [usize; 2],
    pub extent: [f64; 2],
    pub vortices: Vec<Vortex>,
    pub seed: u64,
}

impl CurrentField {
    /// Generate a field of `n_vortices` vortices.
    ///
    /// Centers are drawn from a Gaussian at the domain midpoint with standard
    /// deviation `extent / 4` per axis (redrawn until inside the domain);
    /// circulation magnitude and core radius are uniform in their ranges,
    /// with a random sign on the circulation.
    pub fn generate(
        n_vortices: usize,
        grid_shape: (usize, usize),
        extent: (f64, f64),
        strength_range: (f64, f64),
        core_range: (f64, f64),
        seed: u64,
    ) -> Result<Self, FieldError> {
        if !(extent.0 > 0.0 && extent.1 > 0.0) {
            return Err(FieldError::ZeroAreaExtent(extent.0, extent.1));
        }
        if grid_shape.0 < 2 || grid_shape.1 < 2 {
            return Err(FieldError::GridTooSmall(grid_shape.0, grid_shape.1));
        }
        for (lo, hi) in [strength_range, core_range] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(FieldError::BadRange(lo, hi));
            }
        }
        if core_range.0 <= 0.0 {
            return Err(FieldError::BadCoreRadius(core_range.0));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss_x = Normal::new(extent.0 / 2.0, extent.0 / 4.0).expect("positive sd");
        let gauss_y = Normal::new(extent.1 / 2.0, extent.1 / 4.0).expect("positive sd");
        let mut vortices = Vec::with_capacity(n_vortices);
        for _ in 0..n_vortices {
            let center = loop {
                let x = gauss_x.sample(&mut rng);
                let y = gauss_y.sample(&mut rng);
                if (0.0..=extent.0).contains(&x) && (0.0..=extent.1).contains(&y) {
                    break [x, y];
                }
            };
            let magnitude = rng.gen_range(strength_range.0..=strength_range.1);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let core_radius = rng.gen_range(core_range.0..=core_range.1);
            vortices.push(Vortex { center, circulation: sign * magnitude, core_radius });
        }

        Ok(Self::from_vortices(grid_shape, extent, vortices, seed))
    }

    /// Build the grid by superposing the given vortices.
    pub fn from_vortices(
        grid_shape: (usize, usize),
        extent: (f64, f64),
        vortices: Vec<Vortex>,
        seed: u64,
    ) -> Self {
        let (nx, ny) = grid_shape;
        let mut data = vec![[0.0f64; 2]; nx * ny];
        let dx = extent.0 / nx as f64;
        let dy = extent.1 / ny as f64;
        for iy in 0..ny {
            for ix in 0..nx {
                let x = (ix as f64 + 0.5) * dx;
                let y = (iy as f64 + 0.5) * dy;
                let mut v = [0.0, 0.0];
                for vortex in &vortices {
                    let dv = vortex_velocity(vortex, x, y);
                    v[0] += dv[0];
                    v[1] += dv[1];
                }
                data[iy * nx + ix] = v;
            }
        }
        Self { nx, ny, extent: [extent.0, extent.1], data, vortices, seed }
    }

    /// Zero-velocity field of the given shape (no vortices).
    pub fn zeros(grid_shape: (usize, usize), extent: (f64, f64)) -> Self {
        Self::from_vortices(grid_shape, extent, Vec::new(), 0)
    }

    /// Build a field directly from stored velocities (row-major, `iy * nx + ix`).
    pub fn from_grid(
        grid_shape: (usize, usize),
        extent: (f64, f64),
        data: Vec<[f64; 2]>,
    ) -> Result<Self, FieldError> {
        let (nx, ny) = grid_shape;
        if nx < 2 || ny < 2 {
            return Err(FieldError::GridTooSmall(nx, ny));
        }
        if !(extent.0 > 0.0 && extent.1 > 0.0) {
            return Err(FieldError::ZeroAreaExtent(extent.0, extent.1));
        }
        if data.len() != nx * ny {
            return Err(FieldError::InconsistentFiles(format!(
                "grid data holds {} cells, shape wants {}",
                data.len(),
                nx * ny
            )));
        }
        Ok(Self { nx, ny, extent: [extent.0, extent.1], data, vortices: Vec::new(), seed: 0 })
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn vortices(&self) -> &[Vortex] {
        &self.vortices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// World position of the cell center `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            (ix as f64 + 0.5) * self.extent[0] / self.nx as f64,
            (iy as f64 + 0.5) * self.extent[1] / self.ny as f64,
        ]
    }

    /// Stored velocity at cell `(ix, iy)`.
    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        self.data[iy * self.nx + ix]
    }

    /// Bilinearly interpolated velocity at `(x, y)`.
    ///
    /// Out-of-domain queries clamp to the nearest boundary cell, so the
    /// sampled field is continuous everywhere.
    pub fn sample(&self, x: f64, y: f64) -> CurrentSample {
        let dx = self.extent[0] / self.nx as f64;
        let dy = self.extent[1] / self.ny as f64;
        let u = (x / dx - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let w = (y / dy - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (u.floor() as usize).min(self.nx - 2);
        let j0 = (w.floor() as usize).min(self.ny - 2);
        let fu = u - i0 as f64;
        let fw = w - j0 as f64;
        let mut v = [0.0f64; 2];
        for axis in 0..2 {
            let c00 = self.at(i0, j0)[axis];
            let c10 = self.at(i0 + 1, j0)[axis];
            let c01 = self.at(i0, j0 + 1)[axis];
            let c11 = self.at(i0 + 1, j0 + 1)[axis];
            v[axis] = c00 * (1.0 - fu) * (1.0 - fw)
                + c10 * fu * (1.0 - fw)
                + c01 * (1.0 - fu) * fw
                + c11 * fu * fw;
        }
        CurrentSample::from_components(v[0], v[1])
    }

    /// Central-difference divergence at an interior grid point, 1/s.
    pub fn divergence(&self, ix: usize, iy: usize) -> f64 {
        assert!(ix > 0 && ix < self.nx - 1 && iy > 0 && iy < self.ny - 1, "interior points only");
        let dx = self.extent[0] / self.nx as f64;
        let dy = self.extent[1] / self.ny as f64;
        (self.at(ix + 1, iy)[0] - self.at(ix - 1, iy)[0]) / (2.0 * dx)
            + (self.at(ix, iy + 1)[1] - self.at(ix, iy - 1)[1]) / (2.0 * dy)
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            grid: [self.nx, self.ny],
            extent: self.extent,
            vortices: self.vortices.clone(),
            seed: self.seed,
        }
    }

    /// Write the velocity grid as CSV rows `x_index, y_index, v_cx, v_cy`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FieldError> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record(["x_index", "y_index", "v_cx", "v_cy"])?;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let v = self.at(ix, iy);
                csv_writer.write_record(&[
                    ix.to_string(),
                    iy.to_string(),
                    format!("{:.17e}", v[0]),
                    format!("{:.17e}", v[1]),
                ])?;
            }
        }
        csv_writer.flush()?;
        Ok(())
    }

    /// Save the field as a JSON header plus a velocity CSV.
    pub fn save(&self, json_path: &Path, csv_path: &Path) -> Result<(), FieldError> {
        let json = serde_json::to_string_pretty(&self.header())?;
        std::fs::write(json_path, json + "\n")?;
        let file = std::fs::File::create(csv_path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(())
    }

    /// Load a field from its JSON header and velocity CSV, verifying that the
    /// two files describe the same grid.
    pub fn load(json_path: &Path, csv_path: &Path) -> Result<Self, FieldError> {
        let header: FieldHeader = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        let (nx, ny) = (header.grid[0], header.grid[1]);
        if nx < 2 || ny < 2 {
            return Err(FieldError::GridTooSmall(nx, ny));
        }
        let mut data = vec![[0.0f64; 2]; nx * ny];
        let mut seen = vec![false; nx * ny];
        let file = std::fs::File::open(csv_path)?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(std::io::BufReader::new(file));
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64, FieldError> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| FieldError::InconsistentFiles(format!("bad csv row {record:?}")))
            };
            let ix = parse(0)? as usize;
            let iy = parse(1)? as usize;
            if ix >= nx || iy >= ny {
                return Err(FieldError::InconsistentFiles(format!(
                    "cell ({ix}, {iy}) outside {nx}x{ny} grid from header"
                )));
            }
            data[iy * nx + ix] = [parse(2)?, parse(3)?];
            seen[iy * nx + ix] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(FieldError::InconsistentFiles(format!(
                "csv covers {} of {} cells declared by the header",
                seen.iter().filter(|s| **s).count(),
                nx * ny
            )));
        }
        Ok(Self {
            nx,
            ny,
            extent: header.extent,
            data,
            vortices: header.vortices,
            seed: header.seed,
        })
    }

    /// Read just the header of a saved field.
    pub fn load_header(json_path: &Path) -> Result<FieldHeader, FieldError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(json_path)?)?)
    }
}

/// Skip leading `#` comment lines (used by CSV files that embed their config).
pub fn skip_comment_lines<R: BufRead>(reader: &mut R) -> Result<(), std::io::Error> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.first() == Some(&b'#') {
            let mut line = String::new();
            reader.read_line(&mut line)?;
        } else {
            return Ok(());
        }
    }
}
