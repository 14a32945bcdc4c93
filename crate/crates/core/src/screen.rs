//! Angular screen: grids on the sphere, density maps and click histograms,
//! fringe visibility and spacing along cuts, map distances and map files.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, BufRead, Write};

use log::warn;
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::classical::{classical_intensity, ClassicalConfig};
use crate::emission::{clamp_density, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::steady::steady_emission_density;
use crate::trajectory::{ClickRecord, ClickStream};

/// Relative peak-to-peak variation below which a cut counts as flat.
pub const FLAT_TOL: f64 = 1e-3;
/// Moving-average window applied before extremum detection on histograms.
pub const HISTOGRAM_SMOOTHING: usize = 3;
/// Mean count per cell below which histogram visibilities are unreliable.
pub const MIN_MEAN_COUNT: f64 = 10.0;

/// Equal-angle grid with `theta` cells spanning `[0, pi]` and `phi` cells
/// spanning `[0, 2 pi)`. Values live at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AngularGrid {
    n_theta: usize,
    n_phi: usize,
}

impl AngularGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::InvalidConfig(format!("grid {n_theta}x{n_phi} has no cells")));
        }
        Ok(Self { n_theta, n_phi })
    }

    /// 128 x 256, the image resolution.
    pub fn image() -> Self {
        Self { n_theta: 128, n_phi: 256 }
    }

    /// 32 x 64, the resolution for statistical comparisons.
    pub fn statistics() -> Self {
        Self { n_theta: 32, n_phi: 64 }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.d_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.d_phi()
    }

    pub fn direction(&self, i: usize, j: usize) -> Direction {
        Direction::from_angles(self.theta(i), self.phi(j))
    }

    /// Exact solid angle of a cell in row `i`,
    /// `(cos theta_lo - cos theta_hi) d_phi = 2 sin(theta) sin(d_theta / 2) d_phi`.
    pub fn weight(&self, i: usize) -> f64 {
        2.0 * self.theta(i).sin() * (0.5 * self.d_theta()).sin() * self.d_phi()
    }

    /// Cell containing `k`.
    pub fn cell_of(&self, k: &Direction) -> (usize, usize) {
        let i = ((k.theta() / self.d_theta()) as usize).min(self.n_theta - 1);
        let j = ((k.phi() / self.d_phi()) as usize).min(self.n_phi - 1);
        (i, j)
    }

    pub fn nearest_theta(&self, theta: f64) -> Result<usize> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::BadCut(format!("theta = {theta} outside [0, pi]")));
        }
        Ok(((theta / self.d_theta()) as usize).min(self.n_theta - 1))
    }

    pub fn nearest_phi(&self, phi: f64) -> Result<usize> {
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::BadCut(format!("phi = {phi} outside [0, 2 pi)")));
        }
        Ok(((phi / self.d_phi()) as usize).min(self.n_phi - 1))
    }
}

impl fmt::Display for AngularGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_theta, self.n_phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Click density per unit solid angle.
    Density,
    /// Click counts per cell.
    Histogram,
    /// Classical intensity per unit solid angle.
    Classical,
}

impl MapKind {
    fn name(self) -> &'static str {
        match self {
            MapKind::Density => "density",
            MapKind::Histogram => "histogram",
            MapKind::Classical => "classical",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(MapKind::Density),
            "histogram" => Ok(MapKind::Histogram),
            "classical" => Ok(MapKind::Classical),
            other => Err(Error::Parse(format!("unknown map kind {other:?}"))),
        }
    }
}

/// Values on an [`AngularGrid`], rows indexed by `theta`, columns by `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMap {
    grid: AngularGrid,
    values: DMatrix<f64>,
    kind: MapKind,
}

impl AngularMap {
    pub fn zeros(grid: AngularGrid, kind: MapKind) -> Self {
        Self { grid, values: DMatrix::zeros(grid.n_theta, grid.n_phi), kind }
    }

    pub fn from_values(grid: AngularGrid, values: DMatrix<f64>, kind: MapKind) -> Result<Self> {
        if values.nrows() != grid.n_theta || values.ncols() != grid.n_phi {
            return Err(Error::GridMismatch(format!("{}x{} values on a {grid} grid", values.nrows(), values.ncols())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidConfig(format!("map value {v} is negative or not finite")));
        }
        if kind == MapKind::Histogram && values.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::InvalidConfig("histogram counts must be integers".into()));
        }
        Ok(Self { grid, values, kind })
    }

    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Solid-angle-weighted sum; for histograms, the total count.
    pub fn total(&self) -> f64 {
        match self.kind {
            MapKind::Histogram => self.values.sum(),
            _ => (0..self.grid.n_theta).map(|i| self.grid.weight(i) * self.values.row(i).sum()).sum(),
        }
    }

    /// Cell probabilities summing to one.
    pub fn cell_probabilities(&self) -> Result<DMatrix<f64>> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::EmptyMap);
        }
        let mut p = self.values.clone();
        if self.kind != MapKind::Histogram {
            for i in 0..self.grid.n_theta {
                let w = self.grid.weight(i);
                p.row_mut(i).iter_mut().for_each(|v| *v *= w);
            }
        }
        Ok(p / total)
    }

    /// Adds the counts of `other` to this histogram.
    pub fn merge(&mut self, other: &AngularMap) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{} vs {}", self.grid, other.grid)));
        }
        if self.kind != MapKind::Histogram || other.kind != MapKind::Histogram {
            return Err(Error::InvalidConfig("only histograms can be merged".into()));
        }
        self.values += &other.values;
        Ok(())
    }

    /// Values along a cut, with the natural coordinate of each point.
    /// Histogram counts are divided by the cell solid angle.
    pub fn profile(&self, cut: &CutSpec) -> Result<Profile> {
        let g = &self.grid;
        let scale = |i: usize| if self.kind == MapKind::Histogram { 1.0 / g.weight(i) } else { 1.0 };
        match *cut {
            CutSpec::ThetaScan(at) => {
                let j = at.resolve(g.n_phi, |phi| g.nearest_phi(phi))?;
                // increasing cos(theta) order
                let (x, y) = (0..g.n_theta).rev().map(|i| (g.theta(i).cos(), self.values[(i, j)] * scale(i))).unzip();
                Ok(Profile { x, y, periodic: false, span: 2.0 })
            }
            CutSpec::PhiScan(at) => {
                let i = at.resolve(g.n_theta, |theta| g.nearest_theta(theta))?;
                let (x, y) = (0..g.n_phi).map(|j| (g.phi(j), self.values[(i, j)] * scale(i))).unzip();
                Ok(Profile { x, y, periodic: true, span: 2.0 * PI })
            }
        }
    }
}

/// Evaluates `density` at every cell center. Values below `-1e-12` abort;
/// smaller negatives are rounding and clamp to zero.
pub fn angular_map<F: Fn(&Direction) -> f64>(density: F, grid: AngularGrid) -> Result<AngularMap> {
    map_with(grid, MapKind::Density, |k| clamp_density(density(k), k))
}

fn map_with<F: Fn(&Direction) -> Result<f64>>(grid: AngularGrid, kind: MapKind, f: F) -> Result<AngularMap> {
    let mut values = DMatrix::zeros(grid.n_theta, grid.n_phi);
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let v = f(&grid.direction(i, j))?;
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("non-finite density in cell ({i}, {j})")));
            }
            values[(i, j)] = v;
        }
    }
    Ok(AngularMap { grid, values, kind })
}

/// Cell averages of `density` from `sub x sub` midpoint subcells, each
/// weighted by its exact solid angle. Needed when fringes are narrower than
/// a cell, as for histogram comparisons on coarse grids.
pub fn angular_map_cell_averaged<F: Fn(&Direction) -> f64>(
    density: F,
    grid: AngularGrid,
    sub: usize,
) -> Result<AngularMap> {
    let sub = sub.max(1);
    let fine = AngularGrid::new(grid.n_theta * sub, grid.n_phi * sub)?;
    let mut values = DMatrix::zeros(grid.n_theta, grid.n_phi);
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let mut acc = 0.0;
            let mut area = 0.0;
            for a in 0..sub {
                let fi = i * sub + a;
                let w = fine.weight(fi);
                for b in 0..sub {
                    let k = fine.direction(fi, j * sub + b);
                    acc += w * clamp_density(density(&k), &k)?;
                    area += w;
                }
            }
            values[(i, j)] = acc / area;
        }
    }
    Ok(AngularMap { grid, values, kind: MapKind::Density })
}

/// Steady-state click density map.
pub fn steady_map(cfg: &ExperimentConfig, grid: AngularGrid) -> Result<AngularMap> {
    map_with(grid, MapKind::Density, |k| steady_emission_density(cfg, k))
}

pub fn classical_map(cfg: &ClassicalConfig, grid: AngularGrid) -> Result<AngularMap> {
    map_with(grid, MapKind::Classical, |k| Ok(classical_intensity(k, cfg)))
}

/// Histogram of click directions with `t >= burn_in`.
pub fn accumulate_clicks(stream: &ClickStream, grid: AngularGrid, burn_in: f64) -> Result<AngularMap> {
    accumulate_records(&stream.records, grid, burn_in)
}

pub fn accumulate_records(records: &[ClickRecord], grid: AngularGrid, burn_in: f64) -> Result<AngularMap> {
    if !(burn_in >= 0.0) {
        return Err(Error::InvalidConfig(format!("burn-in must be non-negative, got {burn_in}")));
    }
    let mut map = AngularMap::zeros(grid, MapKind::Histogram);
    for r in records.iter().filter(|r| r.t >= burn_in) {
        let (i, j) = grid.cell_of(&r.direction);
        map.values[(i, j)] += 1.0;
    }
    Ok(map)
}

/// Where a cut sits: a grid index or an angle rounded to its cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutAt {
    Index(usize),
    Angle(f64),
}

impl CutAt {
    fn resolve<F: Fn(f64) -> Result<usize>>(self, n: usize, nearest: F) -> Result<usize> {
        match self {
            CutAt::Index(i) if i < n => Ok(i),
            CutAt::Index(i) => Err(Error::BadCut(format!("index {i} outside 0..{n}"))),
            CutAt::Angle(a) => nearest(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutSpec {
    /// Scan over `theta` at a fixed `phi`; coordinate `cos(theta)`.
    ThetaScan(CutAt),
    /// Scan over `phi` at a fixed `theta`; coordinate `phi`, periodic.
    PhiScan(CutAt),
}

impl CutSpec {
    /// `theta` scan at `phi = pi / 2`, where a dipole along x radiates
    /// (nearly) isotropically in `theta`.
    pub fn equatorial() -> Self {
        CutSpec::ThetaScan(CutAt::Angle(PI / 2.0))
    }
}

/// A one-dimensional intensity profile with increasing coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Whether the coordinate wraps with period `span`.
    pub periodic: bool,
    /// Length of the coordinate's natural domain.
    pub span: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FringeOptions {
    /// Odd moving-average window used for extremum detection; 0 or 1 disables.
    pub smoothing: usize,
}

impl FringeOptions {
    pub fn for_kind(kind: MapKind) -> Self {
        match kind {
            MapKind::Histogram => Self { smoothing: HISTOGRAM_SMOOTHING },
            _ => Self::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeReport {
    pub visibility: f64,
    pub mean_max: f64,
    pub mean_min: f64,
    pub maxima: usize,
    pub minima: usize,
    /// Mean distance between neighbouring maxima in the profile coordinate.
    pub spacing: Option<f64>,
    pub spacing_std: Option<f64>,
    /// Number of fringe periods across the coordinate's whole domain.
    pub fringe_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum FringeOutcome {
    Fringes(FringeReport),
    NoFringes,
}

impl FringeOutcome {
    pub fn visibility(&self) -> Option<f64> {
        match self {
            FringeOutcome::Fringes(r) => Some(r.visibility),
            FringeOutcome::NoFringes => None,
        }
    }
}

fn smooth(y: &[f64], window: usize, periodic: bool) -> Vec<f64> {
    if window <= 1 {
        return y.to_vec();
    }
    let n = y.len() as isize;
    let h = (window / 2) as isize;
    (0..n)
        .map(|i| {
            let (mut sum, mut count) = (0.0, 0.0);
            for d in -h..=h {
                let k = i + d;
                let k = if periodic {
                    k.rem_euclid(n)
                } else if k < 0 || k >= n {
                    continue;
                } else {
                    k
                };
                sum += y[k as usize];
                count += 1.0;
            }
            sum / count
        })
        .collect()
}

fn local_extrema(y: &[f64], periodic: bool) -> (Vec<usize>, Vec<usize>) {
    let n = y.len();
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    if n < 3 {
        return (maxima, minima);
    }
    let range: Box<dyn Iterator<Item = usize>> = if periodic { Box::new(0..n) } else { Box::new(1..n - 1) };
    for i in range {
        let (l, r) = (y[(i + n - 1) % n], y[(i + 1) % n]);
        if y[i] > l && y[i] >= r {
            maxima.push(i);
        } else if y[i] < l && y[i] <= r {
            minima.push(i);
        }
    }
    (maxima, minima)
}

impl Profile {
    fn offset(&self, from: f64, to: f64) -> f64 {
        let d = to - from;
        if self.periodic {
            d - self.span * (d / self.span).round()
        } else {
            d
        }
    }

    /// Fringe period from extremum positions: the least-squares slope of
    /// position against half-period index, doubled. Maxima and minima of a
    /// sampled profile alternate, so each step in the merged sequence is
    /// half a period; a repeated kind means the opposite extremum was lost
    /// and counts as two steps. Also returns the spread of the gaps between
    /// neighbouring extrema of the same kind.
    fn spacing(&self, maxima: &[f64], minima: &[f64]) -> Option<(f64, f64)> {
        let mut all: Vec<(f64, bool)> =
            maxima.iter().map(|&x| (x, true)).chain(minima.iter().map(|&x| (x, false))).collect();
        if all.len() < 2 {
            return None;
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut index = vec![0.0];
        for w in all.windows(2) {
            let step = if w[0].1 == w[1].1 { 2.0 } else { 1.0 };
            index.push(index[index.len() - 1] + step);
        }
        let m = index.len() as f64;
        let mi = index.iter().sum::<f64>() / m;
        let mx = all.iter().map(|p| p.0).sum::<f64>() / m;
        let sxy: f64 = index.iter().zip(&all).map(|(i, p)| (i - mi) * (p.0 - mx)).sum();
        let sxx: f64 = index.iter().map(|i| (i - mi).powi(2)).sum();
        let spacing = 2.0 * sxy / sxx;
        if !(spacing > 0.0) {
            return None;
        }
        let mut per = Vec::new();
        for kind in [true, false] {
            let pos: Vec<f64> = all.iter().filter(|p| p.1 == kind).map(|p| p.0).collect();
            for w in pos.windows(2) {
                let gap = w[1] - w[0];
                per.push(gap / (gap / spacing).round().max(1.0));
            }
        }
        let std = if per.is_empty() {
            0.0
        } else {
            (per.iter().map(|p| (p - spacing).powi(2)).sum::<f64>() / per.len() as f64).sqrt()
        };
        Some((spacing, std))
    }

    /// Least-squares sinusoid of period `spacing` through the raw samples
    /// within one period of `x0`; returns the refined extremum position and
    /// value, or `None` if the fit is ill-posed or its extremum is far off.
    fn refine(&self, x0: f64, spacing: f64, maximum: bool) -> Option<(f64, f64)> {
        let omega = 2.0 * PI / spacing;
        let mut ata = Matrix3::<f64>::zeros();
        let mut aty = Vector3::<f64>::zeros();
        let mut count = 0;
        for (x, y) in self.x.iter().zip(&self.y) {
            let d = self.offset(x0, *x);
            if d.abs() <= spacing {
                let row = Vector3::new(1.0, (omega * d).cos(), (omega * d).sin());
                ata += row * row.transpose();
                aty += row * *y;
                count += 1;
            }
        }
        if count < 3 {
            return None;
        }
        let sol = ata.lu().solve(&aty)?;
        let (a, c, s) = (sol[0], sol[1], sol[2]);
        let amp = c.hypot(s);
        let shift = if maximum { s.atan2(c) } else { (-s).atan2(-c) } / omega;
        if !amp.is_finite() || shift.abs() > 0.5 * spacing {
            return None;
        }
        Some((x0 + shift, if maximum { a + amp } else { a - amp }))
    }

    /// Visibility `(I_max - I_min) / (I_max + I_min)` from the means of all
    /// interior local maxima and minima.
    ///
    /// Extrema are found by three-point comparison on the (optionally
    /// smoothed) profile, then each is refined by a local sinusoid fit,
    /// with the period re-estimated from the refined maxima a few times.
    /// This recovers fringe extrema that fall between samples, which matters
    /// when a fringe spans only two or three cells.
    pub fn analyze(&self, options: &FringeOptions) -> Result<FringeOutcome> {
        if self.x.len() != self.y.len() {
            return Err(Error::GridMismatch("profile coordinates and values differ in length".into()));
        }
        let smoothed = smooth(&self.y, options.smoothing, self.periodic);
        let hi = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = smoothed.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.y.is_empty() || !(hi > 0.0) || hi - lo <= FLAT_TOL * hi {
            return Ok(FringeOutcome::NoFringes);
        }
        let (max_idx, min_idx) = local_extrema(&smoothed, self.periodic);
        let found = max_idx.len() + min_idx.len();
        if max_idx.is_empty() || min_idx.is_empty() {
            return Err(Error::InsufficientExtrema { found, needed: 2 });
        }

        let raw = |idx: &[usize]| -> Vec<(f64, f64)> { idx.iter().map(|&i| (self.x[i], smoothed[i])).collect() };
        let (mut maxima, mut minima) = (raw(&max_idx), raw(&min_idx));
        let positions = |v: &[(f64, f64)]| -> Vec<f64> { v.iter().map(|p| p.0).collect() };
        let mut spacing = self.spacing(&positions(&maxima), &positions(&minima));

        if let Some((mut s, _)) = spacing {
            for _ in 0..8 {
                let refine_all = |idx: &[usize], maximum: bool| -> Vec<(f64, f64)> {
                    idx.iter()
                        .map(|&i| self.refine(self.x[i], s, maximum).unwrap_or((self.x[i], smoothed[i])))
                        .collect()
                };
                maxima = refine_all(&max_idx, true);
                minima = refine_all(&min_idx, false);
                match self.spacing(&positions(&maxima), &positions(&minima)) {
                    Some(next) => {
                        spacing = Some(next);
                        if (next.0 - s).abs() <= 1e-14 * s {
                            break;
                        }
                        s = next.0;
                    }
                    None => break,
                }
            }
        }

        let mean = |v: &[(f64, f64)]| v.iter().map(|p| p.1).sum::<f64>() / v.len() as f64;
        let (mean_max, mean_min) = (mean(&maxima), mean(&minima).max(0.0));
        Ok(FringeOutcome::Fringes(FringeReport {
            visibility: ((mean_max - mean_min) / (mean_max + mean_min)).clamp(0.0, 1.0),
            mean_max,
            mean_min,
            maxima: maxima.len(),
            minima: minima.len(),
            spacing: spacing.map(|s| s.0),
            spacing_std: spacing.map(|s| s.1),
            fringe_count: spacing.map(|s| (self.span / s.0).round() as usize),
        }))
    }
}

/// Fringe visibility along `cut`, with the smoothing appropriate to the
/// map kind. Histogram cuts should average at least [`MIN_MEAN_COUNT`]
/// clicks per cell.
pub fn visibility_along_cut(map: &AngularMap, cut: &CutSpec) -> Result<FringeOutcome> {
    visibility_along_cut_with(map, cut, &FringeOptions::for_kind(map.kind))
}

pub fn visibility_along_cut_with(map: &AngularMap, cut: &CutSpec, options: &FringeOptions) -> Result<FringeOutcome> {
    let profile = map.profile(cut)?;
    if map.kind == MapKind::Histogram {
        let counts: f64 = match *cut {
            CutSpec::ThetaScan(at) => {
                let j = at.resolve(map.grid.n_phi, |p| map.grid.nearest_phi(p))?;
                map.values.column(j).sum() / map.grid.n_theta as f64
            }
            CutSpec::PhiScan(at) => {
                let i = at.resolve(map.grid.n_theta, |t| map.grid.nearest_theta(t))?;
                map.values.row(i).sum() / map.grid.n_phi as f64
            }
        };
        if counts < MIN_MEAN_COUNT {
            warn!("only {counts:.1} clicks per cell along the cut; visibility is noise dominated");
        }
    }
    profile.analyze(options)
}

/// Mean spacing of neighbouring maxima and its standard deviation, in
/// `cos(theta)` for theta scans and radians for phi scans.
pub fn fringe_spacing(map: &AngularMap, cut: &CutSpec) -> Result<(f64, f64)> {
    match visibility_along_cut(map, cut)? {
        FringeOutcome::Fringes(FringeReport { spacing: Some(s), spacing_std: Some(sd), maxima, minima, .. })
            if maxima + minima >= 3 =>
        {
            Ok((s, sd))
        }
        FringeOutcome::Fringes(r) => Err(Error::InsufficientExtrema { found: r.maxima + r.minima, needed: 3 }),
        FringeOutcome::NoFringes => Err(Error::InsufficientExtrema { found: 0, needed: 3 }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapMetric {
    L1Normalized,
    LinfNormalized,
}

/// Distance between the cell-probability versions of two maps; zero iff
/// they are proportional.
pub fn map_distance(a: &AngularMap, b: &AngularMap, metric: MapMetric) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{} vs {}", a.grid, b.grid)));
    }
    let diff = a.cell_probabilities()? - b.cell_probabilities()?;
    Ok(match metric {
        MapMetric::L1Normalized => diff.iter().map(|d| d.abs()).sum(),
        MapMetric::LinfNormalized => diff.amax(),
    })
}

/// CSV: a `# n_theta=..,n_phi=..,kind=..` line, a `theta,phi,value` header,
/// then one row per cell in row-major order.
pub fn write_map_csv<W: Write>(map: &AngularMap, mut w: W) -> io::Result<()> {
    let g = &map.grid;
    writeln!(w, "# n_theta={},n_phi={},kind={}", g.n_theta, g.n_phi, map.kind.name())?;
    writeln!(w, "theta,phi,value")?;
    for i in 0..g.n_theta {
        for j in 0..g.n_phi {
            writeln!(w, "{},{},{}", g.theta(i), g.phi(j), map.values[(i, j)])?;
        }
    }
    Ok(())
}

pub fn read_map_csv<R: BufRead>(r: R) -> Result<AngularMap> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            Some((n, Ok(l))) => Ok(Some((n + 1, l))),
            Some((n, Err(e))) => Err(Error::Parse(format!("line {}: {e}", n + 1))),
            None => Ok(None),
        }
    };
    let (_, spec) = next()?.ok_or_else(|| Error::Parse("empty map file".into()))?;
    let spec =
        spec.strip_prefix('#').ok_or_else(|| Error::Parse("line 1: expected grid spec starting with '#'".into()))?;
    let (mut nt, mut np, mut kind) = (None, None, None);
    for part in spec.trim().split(',') {
        let (key, value) =
            part.split_once('=').ok_or_else(|| Error::Parse(format!("line 1: malformed entry {part:?}")))?;
        let count = || value.trim().parse::<usize>().map_err(|e| Error::Parse(format!("line 1: {key}: {e}")));
        match key.trim() {
            "n_theta" => nt = Some(count()?),
            "n_phi" => np = Some(count()?),
            "kind" => kind = Some(MapKind::parse(value.trim())?),
            other => return Err(Error::Parse(format!("line 1: unknown key {other:?}"))),
        }
    }
    let missing = |name: &str| Error::Parse(format!("line 1: missing {name}"));
    let grid = AngularGrid::new(nt.ok_or_else(|| missing("n_theta"))?, np.ok_or_else(|| missing("n_phi"))?)?;
    let kind = kind.ok_or_else(|| missing("kind"))?;
    match next()? {
        Some((_, h)) if h.trim() == "theta,phi,value" => {}
        _ => return Err(Error::Parse("line 2: expected header theta,phi,value".into())),
    }
    let mut values = DMatrix::zeros(grid.n_theta, grid.n_phi);
    let mut rows = 0;
    while let Some((n, line)) = next()? {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("line {n}: expected 3 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {n}: {e}")));
        let (theta, phi, v) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        if rows >= grid.n_theta * grid.n_phi {
            return Err(Error::Parse(format!("line {n}: more rows than the {grid} grid holds")));
        }
        let (i, j) = (rows / grid.n_phi, rows % grid.n_phi);
        if (theta - grid.theta(i)).abs() > 1e-9 || (phi - grid.phi(j)).abs() > 1e-9 {
            return Err(Error::Parse(format!("line {n}: cell ({theta}, {phi}) out of order")));
        }
        values[(i, j)] = v;
        rows += 1;
    }
    if rows != grid.n_theta * grid.n_phi {
        return Err(Error::Parse(format!("expected {} rows, found {rows}", grid.n_theta * grid.n_phi)));
    }
    AngularMap::from_values(grid, values, kind)
}

/// Linear gray-level scaling used for a PGM image.
#[derive(Debug, Clone, Serialize)]
pub struct ImageScaling {
    pub min: f64,
    pub max: f64,
    pub rows: usize,
    pub cols: usize,
    pub kind: MapKind,
    pub rows_are: &'static str,
    pub cols_are: &'static str,
}

/// 8-bit binary PGM: rows are `theta` cells, columns `phi` cells, values
/// mapped linearly from `[min, max]` to `[0, 255]`.
pub fn write_pgm<W: Write>(map: &AngularMap, mut w: W) -> io::Result<ImageScaling> {
    let g = &map.grid;
    let min = map.values.min();
    let max = map.values.max();
    write!(w, "P5\n{} {}\n255\n", g.n_phi, g.n_theta)?;
    let mut bytes = Vec::with_capacity(g.n_theta * g.n_phi);
    for i in 0..g.n_theta {
        for j in 0..g.n_phi {
            let level = if max > min { (255.0 * (map.values[(i, j)] - min) / (max - min)).round() } else { 0.0 };
            bytes.push(level as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok(ImageScaling {
        min,
        max,
        rows: g.n_theta,
        cols: g.n_phi,
        kind: map.kind,
        rows_are: "theta cells, top = 0",
        cols_are: "phi cells, left = 0",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{dm_from_pure, PureState4, I21};
    use crate::{emission::emission_density_mixed, geometry::Vec3};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_weights_cover_sphere() {
        for &(nt, np) in &[(1, 1), (32, 64), (128, 256), (7, 3)] {
            let g = AngularGrid::new(nt, np).unwrap();
            let total: f64 = (0..nt).map(|i| g.weight(i) * np as f64).sum();
            assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-10);
        }
        assert!(AngularGrid::new(0, 4).is_err());
    }

    #[test]
    fn cell_lookup() {
        let g = AngularGrid::statistics();
        for i in [0, 5, 31] {
            for j in [0, 17, 63] {
                assert_eq!(g.cell_of(&g.direction(i, j)), (i, j));
            }
        }
        assert_eq!(g.cell_of(&Direction::z()), (0, 0));
        assert_eq!(g.cell_of(&Direction::z().flipped()).0, 31);
    }

    #[test]
    fn constant_map() {
        let m = angular_map(|_| 0.25 / PI, AngularGrid::statistics()).unwrap();
        assert!(m.values().iter().all(|v| *v == 0.25 / PI));
        assert_abs_diff_eq!(m.total(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn negative_density_aborts() {
        assert!(matches!(angular_map(|_| -1e-9, AngularGrid::statistics()), Err(Error::NegativeDensity { .. })));
        let m = angular_map(|_| -1e-14, AngularGrid::statistics()).unwrap();
        assert_eq!(m.total(), 0.0);
    }

    #[test]
    fn single_atom_pattern() {
        let cfg = ExperimentConfig::reference_setup().with_rabi(c(0.3), c(0.0)).with_dipole(Direction::z());
        let m = steady_map(&cfg, AngularGrid::statistics()).unwrap();
        let g = m.grid();
        let scale = m.value(10, 0) / g.theta(10).sin().powi(2);
        for i in 0..g.n_theta() {
            for j in 0..g.n_phi() {
                assert_abs_diff_eq!(m.value(i, j), scale * g.theta(i).sin().powi(2), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fringe_maxima_follow_drive_phase() {
        let phase = 1.1;
        let cfg = ExperimentConfig::reference_setup().with_rabi(c(0.3), Complex64::from_polar(0.3, phase));
        let m = steady_map(&cfg, AngularGrid::new(2000, 4).unwrap()).unwrap();
        let p = m.profile(&CutSpec::ThetaScan(CutAt::Index(1))).unwrap();
        let (maxima, _) = local_extrema(&p.y, false);
        assert!(maxima.len() > 30);
        for i in maxima {
            let delta = K0_SEP * p.x[i] - phase;
            let wrapped = delta - 2.0 * PI * (delta / (2.0 * PI)).round();
            // half the phase advance per cell near the equator
            assert!(wrapped.abs() < 0.11, "{wrapped}");
        }
    }

    const K0_SEP: f64 = 2.0 * PI * 20.0;

    #[test]
    fn histogram_accumulation() {
        let g = AngularGrid::statistics();
        let empty = accumulate_records(&[], g, 0.0).unwrap();
        assert_eq!(empty.values().sum(), 0.0);
        let recs = [
            ClickRecord { t: 1.0, direction: g.direction(3, 4) },
            ClickRecord { t: 2.0, direction: g.direction(3, 4) },
            ClickRecord { t: 3.0, direction: g.direction(20, 60) },
            ClickRecord { t: 0.5, direction: g.direction(0, 0) },
        ];
        let h = accumulate_records(&recs, g, 1.0).unwrap();
        assert_eq!(h.value(3, 4), 2.0);
        assert_eq!(h.value(20, 60), 1.0);
        assert_eq!(h.total(), 3.0);
        assert!(accumulate_records(&recs, g, -1.0).is_err());

        let mut merged = h.clone();
        merged.merge(&h).unwrap();
        assert_eq!(merged.value(3, 4), 4.0);
        assert!(merged.merge(&empty_other_grid()).is_err());
    }

    fn empty_other_grid() -> AngularMap {
        AngularMap::zeros(AngularGrid::image(), MapKind::Histogram)
    }

    #[test]
    fn reference_setup_visibility_and_spacing() {
        let m = steady_map(&ExperimentConfig::reference_setup(), AngularGrid::image()).unwrap();
        let FringeOutcome::Fringes(r) = visibility_along_cut(&m, &CutSpec::equatorial()).unwrap() else {
            panic!("expected fringes");
        };
        assert_abs_diff_eq!(r.visibility, 0.84745762711864414, epsilon = 1e-3);
        assert_abs_diff_eq!(r.spacing.unwrap(), 0.05, epsilon = 1e-3);
        assert_eq!(r.fringe_count, Some(40));
    }

    #[test]
    fn spacing_scales_with_separation() {
        let cfg = ExperimentConfig::on_z_axis(5.0, c(0.3), c(0.3)).unwrap();
        let m = steady_map(&cfg, AngularGrid::image()).unwrap();
        let (s, sd) = fringe_spacing(&m, &CutSpec::equatorial()).unwrap();
        assert_abs_diff_eq!(s, 0.2, epsilon = 2e-3);
        assert!(sd < 0.01);

        let cl = classical_map(&ClassicalConfig::matching(&ExperimentConfig::reference_setup()), AngularGrid::image())
            .unwrap();
        let (sc, _) = fringe_spacing(&cl, &CutSpec::equatorial()).unwrap();
        let (sq, _) = fringe_spacing(
            &steady_map(&ExperimentConfig::reference_setup(), AngularGrid::image()).unwrap(),
            &CutSpec::equatorial(),
        )
        .unwrap();
        assert_abs_diff_eq!(sc, sq, epsilon = 1e-9);
    }

    #[test]
    fn classical_equal_sources_visibility_one() {
        let cl = classical_map(&ClassicalConfig::matching(&ExperimentConfig::reference_setup()), AngularGrid::image())
            .unwrap();
        let v = visibility_along_cut(&cl, &CutSpec::equatorial()).unwrap().visibility().unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn incoherent_mixture_has_no_fringes() {
        let cfg = ExperimentConfig::reference_setup();
        let rho = dm_from_pure(&PureState4::basis(I21)).unwrap();
        let m = angular_map(|k| emission_density_mixed(&rho, k, &cfg).unwrap(), AngularGrid::image()).unwrap();
        assert_eq!(visibility_along_cut(&m, &CutSpec::equatorial()).unwrap(), FringeOutcome::NoFringes);
    }

    #[test]
    fn synthetic_cosine_calibration() {
        for &(a, b, period, phase) in &[(1.0, 0.5, 0.05, 0.3), (2.0, 1.9, 0.11, 2.0), (3.0, 0.2, 0.3, -1.0)] {
            let n = 400;
            let x: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect();
            let y = x.iter().map(|u| a + b * (2.0 * PI * u / period + phase).cos()).collect();
            let p = Profile { x, y, periodic: false, span: 2.0 };
            let FringeOutcome::Fringes(r) = p.analyze(&FringeOptions::default()).unwrap() else { panic!() };
            assert_abs_diff_eq!(r.visibility, b / a, epsilon = 1e-9);
            assert!((r.spacing.unwrap() - period).abs() < 0.01 * period);
        }
    }

    #[test]
    fn periodic_profile() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| 2.0 * PI * (i as f64 + 0.5) / n as f64).collect();
        let y = x.iter().map(|p| 1.0 + 0.4 * (3.0 * p).cos()).collect();
        let p = Profile { x, y, periodic: true, span: 2.0 * PI };
        let FringeOutcome::Fringes(r) = p.analyze(&FringeOptions::default()).unwrap() else { panic!() };
        assert_eq!(r.maxima, 3);
        assert_eq!(r.fringe_count, Some(3));
        assert_abs_diff_eq!(r.visibility, 0.4, epsilon = 1e-9);
    }

    #[test]
    fn monotone_profile_is_an_error() {
        let p = Profile { x: vec![0.0, 1.0, 2.0, 3.0], y: vec![1.0, 2.0, 3.0, 4.0], periodic: false, span: 3.0 };
        assert!(matches!(p.analyze(&FringeOptions::default()), Err(Error::InsufficientExtrema { .. })));
    }

    #[test]
    fn bad_cuts() {
        let m = AngularMap::zeros(AngularGrid::statistics(), MapKind::Density);
        assert!(matches!(m.profile(&CutSpec::ThetaScan(CutAt::Index(64))), Err(Error::BadCut(_))));
        assert!(matches!(m.profile(&CutSpec::PhiScan(CutAt::Angle(4.0))), Err(Error::BadCut(_))));
        assert_eq!(visibility_along_cut(&m, &CutSpec::equatorial()).unwrap(), FringeOutcome::NoFringes);
    }

    #[test]
    fn distances() {
        let cfg = ExperimentConfig::reference_setup();
        let m = steady_map(&cfg, AngularGrid::statistics()).unwrap();
        assert_eq!(map_distance(&m, &m, MapMetric::L1Normalized).unwrap(), 0.0);
        let doubled = AngularMap::from_values(m.grid(), m.values() * 2.0, MapKind::Density).unwrap();
        assert!(map_distance(&m, &doubled, MapMetric::L1Normalized).unwrap() < 1e-15);
        assert!(map_distance(&m, &doubled, MapMetric::LinfNormalized).unwrap() < 1e-15);
        let other = AngularMap::zeros(AngularGrid::image(), MapKind::Density);
        assert!(matches!(map_distance(&m, &other, MapMetric::L1Normalized), Err(Error::GridMismatch(_))));
        let flat = angular_map(|_| 1.0, m.grid()).unwrap();
        assert!(map_distance(&m, &flat, MapMetric::L1Normalized).unwrap() > 0.1);
        let zero = AngularMap::zeros(m.grid(), MapKind::Density);
        assert_eq!(map_distance(&m, &zero, MapMetric::L1Normalized), Err(Error::EmptyMap));
    }

    #[test]
    fn weak_drive_maps_agree() {
        let cfg = ExperimentConfig::reference_setup().with_rabi(c(0.01), c(0.01));
        let q = steady_map(&cfg, AngularGrid::statistics()).unwrap();
        let cl = classical_map(&ClassicalConfig::matching(&cfg), AngularGrid::statistics()).unwrap();
        assert!(map_distance(&q, &cl, MapMetric::L1Normalized).unwrap() <= 0.02);
    }

    #[test]
    fn quadrature_sanity() {
        let cfg = ExperimentConfig::reference_setup();
        let m = steady_map(&cfg, AngularGrid::image()).unwrap();
        let rate = crate::steady::steady_click_rate(&cfg);
        // |gamma| / A ~ 1e-4 here, far below the tolerance
        assert!((m.total() - rate).abs() < 1e-3 * rate, "{} vs {rate}", m.total());
    }

    #[test]
    fn cell_average_of_constant_is_exact() {
        let m = angular_map_cell_averaged(|_| 2.0, AngularGrid::statistics(), 4).unwrap();
        assert!(m.values().iter().all(|v| (v - 2.0).abs() < 1e-14));
    }

    #[test]
    fn csv_round_trip() {
        let cfg =
            ExperimentConfig::reference_setup().with_positions(Vec3::new(0.0, 0.0, 1.5), Vec3::new(0.0, 0.0, -1.5));
        let m = steady_map(&cfg, AngularGrid::new(8, 16).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_map_csv(&m, &mut buf).unwrap();
        let back = read_map_csv(io::Cursor::new(&buf)).unwrap();
        assert_eq!(back, m);

        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_map_csv(io::Cursor::new(truncated)), Err(Error::Parse(_))));
        assert!(read_map_csv(io::Cursor::new("theta,phi,value\n")).is_err());
    }

    #[test]
    fn pgm_layout() {
        let g = AngularGrid::new(2, 3).unwrap();
        let vals = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
        let m = AngularMap::from_values(g, vals, MapKind::Density).unwrap();
        let mut buf = Vec::new();
        let s = write_pgm(&m, &mut buf).unwrap();
        assert_eq!((s.min, s.max), (0.0, 4.0));
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[0, 64, 128, 191, 255, 255]);
    }
}
