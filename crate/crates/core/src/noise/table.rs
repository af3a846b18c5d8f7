//! Tabulated correlation functions.
//!
//! Two layouts are supported: a stationary correlator `C(tau)` sampled on an
//! increasing grid starting at `tau = 0` (linear interpolation), and a
//! two-time correlator `C(t1, t2)` sampled on a square grid (bilinear
//! interpolation). Double integrals of the interpolants are computed exactly,
//! cell by cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A correlation function given by samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TabulatedCorrelation {
    /// Stationary correlator `C(tau)` on `tau[0] = 0 < tau[1] < ...`.
    Stationary {
        /// Lags, increasing, starting at zero.
        tau: Vec<f64>,
        /// Correlator values at the lags.
        c: Vec<f64>,
    },
    /// Two-time correlator `C(t1, t2) = values[i][j]` at `(times[i], times[j])`.
    TwoTime {
        /// Grid, increasing, starting at zero.
        times: Vec<f64>,
        /// Square matrix of correlator values.
        values: Vec<Vec<f64>>,
    },
}

impl TabulatedCorrelation {
    /// Builds a stationary table after validating the grid.
    pub fn stationary(tau: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let t = Self::Stationary { tau, c };
        t.validate()?;
        Ok(t)
    }

    /// Reads a two-column `(tau, C)` CSV table. Lines starting with `#` and a
    /// single non-numeric header row are skipped.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut tau = Vec::new();
        let mut c = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("CSV row {}: {e}", row + 1)))?;
            if record.len() < 2 {
                return Err(Error::Parse(format!("CSV row {} has fewer than two columns", row + 1)));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    tau.push(x);
                    c.push(y);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "CSV row {}: cannot parse numbers from {:?}",
                        row + 1,
                        record
                    )))
                }
            }
        }
        Self::stationary(tau, c)
    }

    /// Checks grid monotonicity, coverage of zero and shape consistency.
    pub fn validate(&self) -> Result<()> {
        let check_grid = |g: &[f64], name: &str| -> Result<()> {
            if g.len() < 2 {
                return Err(Error::InvalidParameter(format!("{name} grid needs at least two points")));
            }
            if g[0] != 0.0 {
                return Err(Error::InvalidParameter(format!("{name} grid must start at 0")));
            }
            if g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} grid must be finite and strictly increasing"
                )));
            }
            Ok(())
        };
        match self {
            Self::Stationary { tau, c } => {
                check_grid(tau, "tau")?;
                if tau.len() != c.len() || c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "correlator column must be finite and match the tau column".into(),
                    ));
                }
            }
            Self::TwoTime { times, values } => {
                check_grid(times, "time")?;
                if values.len() != times.len()
                    || values.iter().any(|r| r.len() != times.len() || r.iter().any(|v| !v.is_finite()))
                {
                    return Err(Error::InvalidParameter(
                        "two-time table must be a finite square matrix matching the grid".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether the table describes a stationary correlator.
    pub fn is_stationary(&self) -> bool {
        matches!(self, Self::Stationary { .. })
    }

    /// Largest time (or lag) covered by the table.
    pub fn extent(&self) -> f64 {
        match self {
            Self::Stationary { tau, .. } => *tau.last().expect("validated grid"),
            Self::TwoTime { times, .. } => *times.last().expect("validated grid"),
        }
    }

    fn check_cover(&self, t: f64) -> Result<()> {
        if t > self.extent() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "time {t} exceeds the tabulated range {}",
                self.extent()
            )));
        }
        Ok(())
    }

    /// Interpolated two-time correlator.
    pub fn correlation(&self, t1: f64, t2: f64) -> Result<f64> {
        match self {
            Self::Stationary { tau, c } => {
                let lag = (t1 - t2).abs();
                self.check_cover(lag)?;
                Ok(interp_linear(tau, c, lag))
            }
            Self::TwoTime { times, values } => {
                self.check_cover(t1.max(t2))?;
                let (i, u) = locate(times, t1);
                let (j, v) = locate(times, t2);
                let f = |a: usize, b: usize| values[a][b];
                Ok((1.0 - u) * (1.0 - v) * f(i, j)
                    + u * (1.0 - v) * f(i + 1, j)
                    + (1.0 - u) * v * f(i, j + 1)
                    + u * v * f(i + 1, j + 1))
            }
        }
    }

    /// `Phi(tau) = int_0^tau (tau - v) C(v) dv` for a stationary table.
    pub fn phi(&self, lag: f64) -> Result<f64> {
        let Self::Stationary { tau, c } = self else {
            return Err(Error::InvalidParameter("phi is defined for stationary tables only".into()));
        };
        let lag = lag.abs();
        self.check_cover(lag)?;
        let mut total = 0.0;
        for k in 0..tau.len() - 1 {
            let (a, b) = (tau[k], tau[k + 1].min(lag));
            if a >= lag {
                break;
            }
            // Integrand (lag - v) * C(v) is quadratic on the cell: Simpson is exact.
            let g = |v: f64| (lag - v) * interp_linear(tau, c, v);
            let m = 0.5 * (a + b);
            total += (b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b));
        }
        Ok(total)
    }

    /// `G(x, y) = int_0^x int_0^y C(s, s') ds ds'`.
    pub fn cumulative(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Self::Stationary { .. } => Ok(self.phi(x)? + self.phi(y)? - self.phi(x - y)?),
            Self::TwoTime { times, values } => {
                self.check_cover(x.max(y))?;
                let mut total = 0.0;
                for i in 0..times.len() - 1 {
                    let (a0, a1) = (times[i], times[i + 1].min(x));
                    if a0 >= x {
                        break;
                    }
                    for j in 0..times.len() - 1 {
                        let (b0, b1) = (times[j], times[j + 1].min(y));
                        if b0 >= y {
                            break;
                        }
                        total += bilinear_cell_integral(times, values, i, j, (a0, a1), (b0, b1));
                    }
                }
                Ok(total)
            }
        }
    }
}

fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    let idx = match grid.binary_search_by(|g| g.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    };
    let u = ((x - grid[idx]) / (grid[idx + 1] - grid[idx])).clamp(0.0, 1.0);
    (idx, u)
}

fn interp_linear(grid: &[f64], vals: &[f64], x: f64) -> f64 {
    let (i, u) = locate(grid, x);
    (1.0 - u) * vals[i] + u * vals[i + 1]
}

/// Exact integral of the bilinear interpolant of cell `(i, j)` over the
/// sub-rectangle `[a0, a1] x [b0, b1]` of that cell.
fn bilinear_cell_integral(
    g: &[f64],
    v: &[Vec<f64>],
    i: usize,
    j: usize,
    (a0, a1): (f64, f64),
    (b0, b1): (f64, f64),
) -> f64 {
    let hx = g[i + 1] - g[i];
    let hy = g[j + 1] - g[j];
    // Integrals of the hat weights (1-u) and u over [a0, a1].
    let ux0 = (a0 - g[i]) / hx;
    let ux1 = (a1 - g[i]) / hx;
    let wx1 = hx * (ux1 * ux1 - ux0 * ux0) / 2.0;
    let wx0 = (a1 - a0) - wx1;
    let uy0 = (b0 - g[j]) / hy;
    let uy1 = (b1 - g[j]) / hy;
    let wy1 = hy * (uy1 * uy1 - uy0 * uy0) / 2.0;
    let wy0 = (b1 - b0) - wy1;
    wx0 * wy0 * v[i][j] + wx1 * wy0 * v[i + 1][j] + wx0 * wy1 * v[i][j + 1] + wx1 * wy1 * v[i + 1][j + 1]
}
