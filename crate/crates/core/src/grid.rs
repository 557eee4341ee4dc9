//! Radial grids on the ball `B_R ⊂ ℝⁿ`, quadrature with the sphere area folded
//! into the weights, and the two group actions used throughout the crate:
//! dilation `u ↦ u(·/β)` and amplitude scaling `u ↦ βu`.
//!
//! Node layout: spacing between consecutive nodes grows geometrically by
//! `stretch`, the first node sits at half the first spacing (so no node is at
//! `r = 0`) and the last node is exactly `R`. Each node owns the dual cell
//! bounded by the midpoints to its neighbours, with `0` and `R` closing the
//! first and last cells. Node weights are the exact measures of the dual
//! shells, so the constant `1` integrates to the ball volume up to rounding.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interp::Pchip;

pub const MIN_NODES: usize = 2;

/// Area of the unit sphere `S^{n-1}`, i.e. `2 π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / half_integer_gamma(n)
}

/// `Γ(n/2)` for a positive integer `n`.
fn half_integer_gamma(n: u32) -> f64 {
    let (mut x, mut acc) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = n as f64 / 2.0;
    while x < target {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// Volume of the ball of radius `r` in ℝⁿ.
pub fn ball_volume(n: u32, r: f64) -> f64 {
    sphere_area(n) * r.powi(n as i32) / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: u32,
    radius: f64,
    stretch: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Dual-cell boundaries, `m + 1` entries from `0` to `R`.
    boundaries: Vec<f64>,
}

/// Builds a radial grid with `m` nodes on `(0, R]`.
pub fn build_radial_grid(n: u32, radius: f64, m: usize, stretch: f64) -> Result<RadialGrid> {
    if n < 1 {
        return Err(invalid("grid: dimension n must be at least 1"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid(format!(
            "grid: radius must be positive, got {radius}"
        )));
    }
    if m < MIN_NODES {
        return Err(invalid(format!(
            "grid: need at least {MIN_NODES} nodes, got {m}"
        )));
    }
    if !(stretch.is_finite() && stretch >= 1.0) {
        return Err(invalid(format!(
            "grid: stretch must be >= 1, got {stretch}"
        )));
    }
    let growth_sum: f64 = (0..m - 1).map(|k| stretch.powi(k as i32)).sum();
    let h = radius / (0.5 + growth_sum);
    if !(h > radius * 1e-12) {
        return Err(invalid(format!(
            "grid: stretch {stretch} is too aggressive for {m} nodes (first spacing {h:e})"
        )));
    }
    let mut nodes = Vec::with_capacity(m);
    let mut r = 0.5 * h;
    let mut spacing = h;
    for _ in 0..m {
        nodes.push(r);
        r += spacing;
        spacing *= stretch;
    }
    nodes[m - 1] = radius;

    let mut boundaries = Vec::with_capacity(m + 1);
    boundaries.push(0.0);
    for w in nodes.windows(2) {
        boundaries.push(0.5 * (w[0] + w[1]));
    }
    boundaries.push(radius);

    let omega = sphere_area(n);
    let nf = n as f64;
    let weights = boundaries
        .windows(2)
        .map(|b| omega * (b[1].powi(n as i32) - b[0].powi(n as i32)) / nf)
        .collect();

    Ok(RadialGrid {
        n,
        radius,
        stretch,
        nodes,
        weights,
        boundaries,
    })
}

impl RadialGrid {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights including the sphere-area factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Exact measure `|S^{n-1}| ∫ r^{n-1} dr` of each shell between consecutive nodes.
    pub fn edge_weights(&self) -> Vec<f64> {
        let omega = sphere_area(self.n);
        let k = self.n as i32;
        self.nodes
            .windows(2)
            .map(|r| omega * (r[1].powi(k) - r[0].powi(k)) / self.n as f64)
            .collect()
    }

    /// Exact `|S^{n-1}| ∫ r^{n-1-s} dr` over each dual cell, for `s < n`.
    pub fn singular_weights(&self, s: f64) -> Vec<f64> {
        let omega = sphere_area(self.n);
        let e = self.n as f64 - s;
        self.boundaries
            .windows(2)
            .map(|b| omega * (b[1].powf(e) - b[0].powf(e)) / e)
            .collect()
    }

    pub fn record(&self) -> GridRecord {
        GridRecord {
            n: self.n,
            radius: self.radius,
            m: self.len(),
            stretch: self.stretch,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// JSON form of a grid. Nodes and weights are informational; loading rebuilds
/// from `(n, R, m, stretch)` and checks the stored nodes agree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridRecord {
    pub n: u32,
    #[serde(rename = "R")]
    pub radius: f64,
    pub m: usize,
    pub stretch: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GridRecord {
    pub fn rebuild(&self) -> Result<RadialGrid> {
        let grid = build_radial_grid(self.n, self.radius, self.m, self.stretch)?;
        let matches = grid.nodes.len() == self.nodes.len()
            && grid
                .nodes
                .iter()
                .zip(&self.nodes)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * self.radius);
        if !matches {
            return Err(Error::Parse(
                "grid record nodes do not match its parameters".into(),
            ));
        }
        Ok(grid)
    }
}

/// A radial profile sampled at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid function has non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_grid(&self, other: &Arc<RadialGrid>) -> bool {
        Arc::ptr_eq(&self.grid, other) || *self.grid == **other
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks that `|u|` over the outer tenth of the nodes stays below
    /// `rel_tol · max|u|`. Logs a warning and returns `false` otherwise.
    pub fn tail_check(&self, rel_tol: f64) -> bool {
        let m = self.values.len();
        let start = m - (m / 10).max(1);
        let tail = self.values[start..]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let ok = tail <= rel_tol * self.max_abs();
        if !ok {
            log::warn!(
                "profile has not decayed at the truncation radius: tail {:e} vs max {:e}",
                tail,
                self.max_abs()
            );
        }
        ok
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r},{v}")?;
        }
        Ok(())
    }

    /// Reads a `r,value` CSV written for `grid`.
    pub fn read_csv<R: BufRead>(grid: Arc<RadialGrid>, input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "r,value" => {}
            _ => return Err(Error::Parse("expected header `r,value`".into())),
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Parse(format!("row {i}: missing column")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {i}: {e}")))
            };
            let r = parse(parts.next())?;
            let v = parse(parts.next())?;
            match grid.nodes().get(values.len()) {
                Some(&node) if (node - r).abs() <= 1e-12 * grid.radius() => {}
                _ => {
                    return Err(Error::GridMismatch(format!(
                        "row {i}: radius {r} is not a grid node"
                    )))
                }
            }
            values.push(v);
        }
        Self::new(grid, values)
    }
}

/// `∫ g dx` over the ball.
pub fn quadrature(g: &GridFunction) -> f64 {
    weighted_sum(g.grid.weights(), &g.values)
}

pub(crate) fn weighted_sum(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingKind {
    /// `u ↦ u(x/β)`
    Dilation,
    /// `u ↦ βu`
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingAction {
    pub kind: ScalingKind,
    pub beta: f64,
}

impl ScalingAction {
    pub fn dilation(beta: f64) -> Self {
        Self {
            kind: ScalingKind::Dilation,
            beta,
        }
    }

    pub fn amplitude(beta: f64) -> Self {
        Self {
            kind: ScalingKind::Amplitude,
            beta,
        }
    }
}

pub fn apply_scaling(u: &GridFunction, action: ScalingAction) -> Result<GridFunction> {
    let values = scale_values(&u.grid, &u.values, action)?;
    Ok(GridFunction {
        grid: u.grid.clone(),
        values,
    })
}

pub(crate) fn scale_values(
    grid: &RadialGrid,
    values: &[f64],
    action: ScalingAction,
) -> Result<Vec<f64>> {
    let beta = action.beta;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!(
            "scaling factor must be positive, got {beta}"
        )));
    }
    match action.kind {
        ScalingKind::Amplitude => Ok(values.iter().map(|v| beta * v).collect()),
        ScalingKind::Dilation => {
            if beta == 1.0 {
                return Ok(values.to_vec());
            }
            let interp = radial_interpolant(grid, values)?;
            let rmax = grid.radius();
            Ok(grid
                .nodes()
                .iter()
                .map(|&r| {
                    let x = r / beta;
                    if x > rmax {
                        0.0
                    } else {
                        interp.eval(x)
                    }
                })
                .collect())
        }
    }
}

/// PCHIP through the nodes plus the mirror node `-r_0`, so the even extension
/// through the origin is respected on `[0, r_0]`.
fn radial_interpolant(grid: &RadialGrid, values: &[f64]) -> Result<Pchip> {
    let nodes = grid.nodes();
    let mut x = Vec::with_capacity(nodes.len() + 1);
    let mut y = Vec::with_capacity(nodes.len() + 1);
    x.push(-nodes[0]);
    y.push(values[0]);
    x.extend_from_slice(nodes);
    y.extend_from_slice(values);
    Pchip::new(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn two_node_uniform_grid() {
        let g = build_radial_grid(3, 1.0, 2, 1.0).unwrap();
        // half-offset convention: r_0 = h/2, r_1 = 3h/2 = R
        assert!((g.nodes()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.nodes()[1], 1.0);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ball_volume_and_second_moment() {
        let g = Arc::new(build_radial_grid(3, 1.0, 400, 1.0).unwrap());
        let one = GridFunction::from_fn(g.clone(), |_| 1.0);
        assert!(rel(quadrature(&one), 4.0 * PI / 3.0) < 1e-3);
        let r2 = GridFunction::from_fn(g, |r| r * r);
        assert!(rel(quadrature(&r2), 4.0 * PI / 5.0) < 1e-3);
    }

    #[test]
    fn quadrature_of_zero_and_linearity() {
        let g = Arc::new(build_radial_grid(4, 2.0, 50, 1.02).unwrap());
        assert_eq!(quadrature(&GridFunction::zeros(g.clone())), 0.0);
        let u = GridFunction::from_fn(g, |r| (-r).exp());
        let a = 3.0;
        let scaled = u.map(|v| a * v);
        assert!((quadrature(&scaled) - a * quadrature(&u)).abs() <= 1e-14 * quadrature(&scaled));
    }

    #[test]
    fn quadrature_is_second_order() {
        let f = |r: f64| (1.0 - r * r).powi(2) * (2.0 * r).cos();
        let exact = {
            // fine-grid reference with the same rule
            let g = Arc::new(build_radial_grid(3, 1.0, 64_000, 1.0).unwrap());
            quadrature(&GridFunction::from_fn(g, f))
        };
        let err = |m: usize| {
            let g = Arc::new(build_radial_grid(3, 1.0, m, 1.0).unwrap());
            (quadrature(&GridFunction::from_fn(g, f)) - exact).abs()
        };
        let (e1, e2, e3) = (err(100), err(200), err(400));
        assert!(
            e1 / e2 > 3.0 && e2 / e3 > 3.0,
            "ratios {} {}",
            e1 / e2,
            e2 / e3
        );
    }

    #[test]
    fn stretched_grid_invariants() {
        let g = build_radial_grid(5, 30.0, 300, 1.01).unwrap();
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.nodes()[0] > 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 30.0);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        let d0 = g.nodes()[1] - g.nodes()[0];
        let dl = g.nodes()[299] - g.nodes()[298];
        assert!(dl > 10.0 * d0);
        assert!((g.nodes()[0] - 0.5 * d0).abs() < 1e-12);
        let vol: f64 = g.weights().iter().sum();
        assert!(rel(vol, ball_volume(5, 30.0)) < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(build_radial_grid(3, 0.0, 10, 1.0).is_err());
        assert!(build_radial_grid(3, -1.0, 10, 1.0).is_err());
        assert!(build_radial_grid(3, 1.0, 1, 1.0).is_err());
        assert!(build_radial_grid(0, 1.0, 10, 1.0).is_err());
        assert!(build_radial_grid(3, 1.0, 10, 0.5).is_err());
        assert!(build_radial_grid(3, 1.0, 800, 1.05).is_err());
    }

    #[test]
    fn identity_actions() {
        let g = Arc::new(build_radial_grid(3, 5.0, 100, 1.0).unwrap());
        let u = GridFunction::from_fn(g, |r| (-r * r).exp());
        for kind in [ScalingKind::Amplitude, ScalingKind::Dilation] {
            let v = apply_scaling(&u, ScalingAction { kind, beta: 1.0 }).unwrap();
            assert_eq!(v.values(), u.values());
        }
        assert!(apply_scaling(&u, ScalingAction::dilation(0.0)).is_err());
        assert!(apply_scaling(&u, ScalingAction::amplitude(-1.0)).is_err());
    }

    #[test]
    fn amplitude_is_a_group_action() {
        let g = Arc::new(build_radial_grid(3, 5.0, 100, 1.0).unwrap());
        let u = GridFunction::from_fn(g, |r| (-r * r).exp() * (1.0 + r));
        let (b1, b2) = (0.75f64, 2.0f64);
        let a = apply_scaling(
            &apply_scaling(&u, ScalingAction::amplitude(b1)).unwrap(),
            ScalingAction::amplitude(b2),
        )
        .unwrap();
        let b = apply_scaling(&u, ScalingAction::amplitude(b1 * b2)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    fn bump(r: f64) -> f64 {
        if r < 1.0 {
            (-1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn dilation_scales_mass_like_beta_to_the_n() {
        let g = Arc::new(build_radial_grid(3, 4.0, 4000, 1.0).unwrap());
        let big_g = |s: f64| -0.5 * s * s + s.abs().powf(3.0) / 3.0;
        let u = GridFunction::from_fn(g, |r| 3.0 * bump(r));
        let base = quadrature(&u.map(big_g));
        for beta in [0.25, 0.5, 2.0, 4.0] {
            let d = apply_scaling(&u, ScalingAction::dilation(beta)).unwrap();
            let got = quadrature(&d.map(big_g));
            let want = beta.powi(3) * base;
            assert!(
                (got - want).abs() <= 1e-3 * want.abs(),
                "beta {beta}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = Arc::new(build_radial_grid(3, 2.0, 17, 1.1).unwrap());
        let u = GridFunction::from_fn(g.clone(), |r| (r * 1.7).sin() / 3.0);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn grid_record_rebuilds() {
        let g = build_radial_grid(5, 30.0, 64, 1.02).unwrap();
        let json = serde_json::to_string(&g.record()).unwrap();
        assert!(json.contains("\"R\":30"));
        let rec: GridRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(rec.rebuild().unwrap(), g);
    }

    #[test]
    fn tail_check_flags_slow_decay() {
        let g = Arc::new(build_radial_grid(3, 30.0, 300, 1.0).unwrap());
        assert!(GridFunction::from_fn(g.clone(), |r| (-r).exp()).tail_check(1e-8));
        assert!(!GridFunction::from_fn(g, |r| 1.0 / (1.0 + r)).tail_check(1e-8));
    }
}
