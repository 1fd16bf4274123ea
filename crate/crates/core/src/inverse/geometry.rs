use super::tags;
use crate::dislocation::Setup;
use crate::error::{Error, Result};
use crate::mesh::generate::{triangulate, ColumnGrid, Side, Tagging};
use crate::mesh::{BoundaryRoles, Point};

/// Rectangular body, mesh size, safety box and measurement patch for the
/// inverse problem. The bottom is clamped, the other sides are free and Ξ is
/// the part [xi₀, xi₁] of the top side.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub h: f64,
    /// Faults must stay this far inside the rectangle.
    pub safety_margin: f64,
    pub xi: [f64; 2],
    /// Number of equally spaced sample points on Ξ.
    pub samples: usize,
    /// Rows of cells under the fault that form Ω⁻.
    pub omega_minus_rows: usize,
}

impl Default for Domain {
    fn default() -> Self {
        Domain {
            x: [0.0, 1.0],
            y: [0.0, 1.0],
            h: 1.0 / 32.0,
            safety_margin: 0.1,
            xi: [0.375, 0.625],
            samples: 17,
            omega_minus_rows: 3,
        }
    }
}

impl Domain {
    pub fn diameter(&self) -> f64 {
        (self.x[1] - self.x[0]).hypot(self.y[1] - self.y[0])
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x[1] > self.x[0]
            && self.y[1] > self.y[0]
            && self.h > 0.0
            && self.safety_margin >= 0.0
            && self.xi[0] >= self.x[0]
            && self.xi[1] <= self.x[1]
            && self.xi[1] > self.xi[0]
            && self.samples >= 2
            && self.omega_minus_rows >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid inverse domain {self:?}")))
        }
    }
}

/// Fault as the graph x₂′ = ψ(x₁′) in a frame rotated by `frame` radians,
/// ψ piecewise linear with values `heights` at abscissae `knots`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultParam {
    pub frame: f64,
    pub knots: Vec<f64>,
    pub heights: Vec<f64>,
}

impl FaultParam {
    /// Straight fault at height `y` over [a, b] with `m` knots, unrotated.
    pub fn horizontal(a: f64, b: f64, y: f64, m: usize) -> Self {
        let knots = (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect();
        FaultParam { frame: 0.0, knots, heights: vec![y; m] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.len() < 2 || self.knots.len() != self.heights.len() {
            return Err(Error::Domain(format!(
                "fault needs at least 2 knots and one height per knot (got {} knots, {} heights)",
                self.knots.len(),
                self.heights.len()
            )));
        }
        let finite = self.frame.is_finite() && self.knots.iter().chain(&self.heights).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite fault parameter".into()));
        }
        if self.knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("fault knots must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Polyline vertices in global coordinates.
    pub fn points(&self) -> Vec<Point> {
        let (s, c) = self.frame.sin_cos();
        self.knots
            .iter()
            .zip(&self.heights)
            .map(|(&xp, &yp)| [c * xp - s * yp, s * xp + c * yp])
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.points().windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

const MIN_ANGLE_DEG: f64 = 15.0;

/// Conforming mesh of the domain with the fault polyline as interior facets.
///
/// Mesh columns are placed at the polyline vertices and the ends of Ξ (grid
/// columns too close to them are dropped), one grid row is moved onto the
/// fault in every column it spans and relaxed back to its grid height away
/// from it, and each column is stretched piecewise linearly around that row.
/// Ω⁻ is the band of `omega_minus_rows` cell rows directly below the fault.
pub fn realize_fault(fp: &FaultParam, dom: &Domain) -> Result<Setup> {
    fp.validate()?;
    dom.validate()?;
    let pts = fp.points();
    let lo = [dom.x[0] + dom.safety_margin, dom.y[0] + dom.safety_margin];
    let hi = [dom.x[1] - dom.safety_margin, dom.y[1] - dom.safety_margin];
    for p in &pts {
        if !(p[0] > lo[0] && p[0] < hi[0] && p[1] > lo[1] && p[1] < hi[1]) {
            return Err(Error::Geometry(format!("fault point {p:?} leaves the safety box {lo:?}..{hi:?}")));
        }
    }
    if pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(Error::Geometry(
            "fault is not a graph over the horizontal axis (frame angle too steep for column meshing)".into(),
        ));
    }
    let fx: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let fy: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let (xa, xb) = (fx[0], fx[fx.len() - 1]);

    let width = dom.x[1] - dom.x[0];
    let height = dom.y[1] - dom.y[0];
    let nx = (width / dom.h).ceil() as usize;
    let ny = (height / dom.h).ceil() as usize;
    let hx = width / nx as f64;
    let hy = height / ny as f64;
    let mut special: Vec<f64> = fx.clone();
    special.extend(dom.xi.iter().copied().filter(|&x| x > dom.x[0] && x < dom.x[1]));
    let mut xs: Vec<f64> = (0..=nx)
        .map(|i| if i == nx { dom.x[1] } else { dom.x[0] + hx * i as f64 })
        .filter(|&x| {
            x == dom.x[0] || x == dom.x[1] || special.iter().all(|&s| (s - x).abs() > 0.35 * hx)
        })
        .collect();
    xs.extend(special);
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let rows: Vec<f64> = (0..=ny)
        .map(|j| if j == ny { dom.y[1] } else { dom.y[0] + hy * j as f64 })
        .collect();
    let mean_y = fy.iter().sum::<f64>() / fy.len() as f64;
    let jstar = (1..ny)
        .min_by(|&a, &b| (rows[a] - mean_y).abs().total_cmp(&(rows[b] - mean_y).abs()))
        .ok_or_else(|| Error::Geometry("mesh too coarse to hold a fault".into()))?;
    if jstar <= dom.omega_minus_rows {
        return Err(Error::Geometry("fault too close to the clamped boundary for the Ω⁻ band".into()));
    }
    let relax = 4.0 * hx;
    let fault_row = |x: f64| -> f64 {
        if x >= xa && x <= xb {
            interp(&fx, &fy, x)
        } else {
            let (xe, ye) = if x < xa { (xa, fy[0]) } else { (xb, fy[fy.len() - 1]) };
            let w = (1.0 - (x - xe).abs() / relax).max(0.0);
            rows[jstar] + (ye - rows[jstar]) * w
        }
    };
    let heights: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let ys = fault_row(x);
            let (y0, y1, yj) = (rows[0], rows[ny], rows[jstar]);
            rows.iter()
                .enumerate()
                .map(|(j, &y)| {
                    if j == jstar {
                        ys
                    } else if j == 0 || j == ny {
                        y
                    } else if j < jstar {
                        y0 + (y - y0) * (ys - y0) / (yj - y0)
                    } else {
                        y1 - (y1 - y) * (y1 - ys) / (y1 - yj)
                    }
                })
                .collect()
        })
        .collect();
    let grid = ColumnGrid { xs: xs.clone(), heights: heights.clone() };

    let k = dom.omega_minus_rows;
    let eps = 1e-12 * width;
    let region = |c: Point| {
        if c[0] < xa || c[0] > xb {
            return tags::OUTER;
        }
        let i = xs.partition_point(|&v| v <= c[0]).clamp(1, xs.len() - 1) - 1;
        let t = (c[0] - xs[i]) / (xs[i + 1] - xs[i]);
        let line = |j: usize| heights[i][j] + t * (heights[i + 1][j] - heights[i][j]);
        if c[1] < line(jstar) && c[1] > line(jstar - k) {
            tags::OMEGA_MINUS
        } else {
            tags::OUTER
        }
    };
    let boundary = |s: Side, m: Point| match s {
        Side::Bottom => tags::SIGMA,
        Side::Right => tags::RIGHT,
        Side::Left => tags::LEFT,
        Side::Top if m[0] > dom.xi[0] && m[0] < dom.xi[1] => tags::XI,
        Side::Top => tags::TOP,
    };
    let on_fault_row = |p: Point| {
        xs.binary_search_by(|v| v.total_cmp(&p[0]))
            .map(|i| heights[i][jstar] == p[1] && p[0] >= xa - eps && p[0] <= xb + eps)
            .unwrap_or(false)
    };
    let interior = |a: Point, b: Point| (on_fault_row(a) && on_fault_row(b)).then_some(tags::FAULT);
    let mesh = triangulate(&grid, &Tagging { region: &region, boundary: &boundary, interior: &interior });
    let angle = mesh.min_angle_deg();
    if angle < MIN_ANGLE_DEG {
        return Err(Error::Geometry(format!(
            "fault mesh quality {angle:.2}° is below the {MIN_ANGLE_DEG}° floor"
        )));
    }
    let roles = BoundaryRoles {
        sigma_tags: [tags::SIGMA].into(),
        free_tags: [tags::RIGHT, tags::TOP, tags::LEFT, tags::XI].into(),
        xi_tags: [tags::XI].into(),
        fault_tags: [tags::FAULT].into(),
        omega_minus_regions: [tags::OMEGA_MINUS].into(),
    };
    Setup::new(mesh, roles)
}
