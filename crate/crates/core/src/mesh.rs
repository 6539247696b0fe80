//! Grids, per-subinterval sampling, interpolation and quadrature.
//!
//! Every grid subinterval `[x_{i-1}, x_i]` (a *panel*) carries `S + 1` samples,
//! `S` even, uniform in a panel coordinate `tau in [0, 1]`. Ordinary panels map
//! `x = a + L tau`. A panel whose left end is singular for the problem data
//! (e.g. `1/sqrt(x)` at `x = 0`) maps `x = a + L tau^2`, which turns an
//! inverse-square-root endpoint singularity into a smooth integrand in `tau`.

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("a grid needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid nodes must be strictly increasing (node {index}: {prev} -> {next})")]
    NotIncreasing { index: usize, prev: f64, next: f64 },
    #[error("invalid uniform grid: step {h}, count {n}")]
    InvalidUniform { h: f64, n: usize },
    #[error("quadrature needs an even positive number of samples per subinterval, got {0}")]
    OddSamples(usize),
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("integration interval [{a}, {b}] is empty or reversed")]
    EmptyInterval { a: f64, b: f64 },
    #[error("x = {x} lies outside the grid [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
}

/// Strictly increasing finite set of nodes `x_0 < ... < x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    h: f64,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Grid, MeshError> {
        if nodes.len() < 2 {
            return Err(MeshError::TooFewNodes(nodes.len()));
        }
        let mut h: f64 = 0.0;
        for (i, w) in nodes.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) || !w[1].is_finite() || !w[0].is_finite() {
                return Err(MeshError::NotIncreasing {
                    index: i + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
            h = h.max(step);
        }
        Ok(Grid { nodes, h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Maximum step.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` of the subinterval `[x_{i-1}, x_i]` (0-based: `i - 1`)
    /// containing `x`; right-continuous except at the last node.
    pub fn locate(&self, x: f64) -> Result<usize, MeshError> {
        if !(x >= self.start() && x <= self.end()) {
            return Err(MeshError::OutOfDomain {
                x,
                lo: self.start(),
                hi: self.end(),
            });
        }
        let idx = self.nodes.partition_point(|&n| n <= x);
        Ok(idx.saturating_sub(1).min(self.intervals() - 1))
    }
}

/// Nodes `x_i = x0 + i h`, `i = 0..=n`.
pub fn uniform_grid(x0: f64, h: f64, n: usize) -> Result<Grid, MeshError> {
    if !(h > 0.0) || !h.is_finite() || n == 0 || !x0.is_finite() {
        return Err(MeshError::InvalidUniform { h, n });
    }
    let nodes = (0..=n).map(|i| x0 + i as f64 * h).collect();
    let mut grid = Grid::new(nodes)?;
    // Rounding in x0 + i h can perturb individual steps; the nominal step is
    // the grid's step.
    grid.h = h;
    Ok(grid)
}

/// Composite Simpson rule on `S + 1` equispaced samples per subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadrature {
    samples: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { samples: 32 }
    }
}

impl Quadrature {
    pub fn new(samples: usize) -> Result<Quadrature, MeshError> {
        if samples == 0 || !samples.is_multiple_of(2) {
            return Err(MeshError::OddSamples(samples));
        }
        Ok(Quadrature { samples })
    }

    /// `S`, the number of sample spacings per subinterval.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Simpson weights for `[a, b]`.
    pub fn weights(&self, a: f64, b: f64) -> Vec<f64> {
        let s = self.samples;
        let step = (b - a) / s as f64;
        (0..=s)
            .map(|k| {
                let w = if k == 0 || k == s {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * step / 3.0
            })
            .collect()
    }

    fn check(&self, values: &[f64], a: f64, b: f64) -> Result<(), MeshError> {
        if values.len() != self.samples + 1 {
            return Err(MeshError::SampleCount {
                expected: self.samples + 1,
                got: values.len(),
            });
        }
        if !(b > a) {
            return Err(MeshError::EmptyInterval { a, b });
        }
        Ok(())
    }

    /// `int_a^b f` from samples at `a + k (b - a) / S`.
    pub fn integrate(&self, values: &[f64], a: f64, b: f64) -> Result<f64, MeshError> {
        self.check(values, a, b)?;
        Ok(simpson(values, (b - a) / self.samples as f64))
    }

    /// Running integrals `int_a^{x_k} f` at every sample.
    pub fn cumulative(&self, values: &[f64], a: f64, b: f64) -> Result<Vec<f64>, MeshError> {
        self.check(values, a, b)?;
        Ok(cumulative_simpson(values, (b - a) / self.samples as f64))
    }
}

/// Composite Simpson over an even number of spacings.
pub fn integrate(values: &[f64], a: f64, b: f64) -> Result<f64, MeshError> {
    let s = values.len().saturating_sub(1);
    Quadrature::new(s)?.integrate(values, a, b)
}

fn simpson(values: &[f64], step: f64) -> f64 {
    let s = values.len() - 1;
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, v) in values.iter().enumerate().take(s).skip(1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    step / 3.0 * (values[0] + values[s] + 4.0 * odd + 2.0 * even)
}

/// Simpson at even samples; at odd samples the quadratic through the
/// enclosing pair of spacings is integrated over its first half.
fn cumulative_simpson(values: &[f64], step: f64) -> Vec<f64> {
    let s = values.len() - 1;
    let mut out = vec![0.0; s + 1];
    let mut acc = 0.0;
    let mut k = 0;
    while k < s {
        let (f0, f1, f2) = (values[k], values[k + 1], values[k + 2]);
        out[k + 1] = acc + step / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        acc += step / 3.0 * (f0 + 4.0 * f1 + f2);
        out[k + 2] = acc;
        k += 2;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelKind {
    /// `x = a + L tau`
    Uniform,
    /// `x = a + L tau^2`, for an integrable singularity at the left end.
    Clustered,
}

/// One grid subinterval with its sample positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub kind: PanelKind,
    xs: Vec<f64>,
    jac: Vec<f64>,
}

impl Panel {
    fn new(a: f64, b: f64, kind: PanelKind, samples: usize) -> Panel {
        let len = b - a;
        let mut xs = Vec::with_capacity(samples + 1);
        let mut jac = Vec::with_capacity(samples + 1);
        for k in 0..=samples {
            let tau = k as f64 / samples as f64;
            match kind {
                PanelKind::Uniform => {
                    xs.push(a + len * tau);
                    jac.push(len);
                }
                PanelKind::Clustered => {
                    xs.push(a + len * tau * tau);
                    jac.push(2.0 * len * tau);
                }
            }
        }
        // Pin the endpoints so neighbouring panels share nodes bit-exactly.
        xs[0] = a;
        xs[samples] = b;
        Panel {
            a,
            b,
            kind,
            xs,
            jac,
        }
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// `dx/dtau` at each sample.
    pub fn jacobian(&self) -> &[f64] {
        &self.jac
    }

    /// Integrand in the panel coordinate, `f(x_k) dx/dtau`.
    ///
    /// On a clustered panel the left-end value may be non-finite (the
    /// singular point itself); it is replaced by cubic extrapolation from the
    /// next four samples, since the transformed integrand is smooth in `tau`.
    pub fn integrand(&self, f: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = f.iter().zip(&self.jac).map(|(v, j)| v * j).collect();
        if self.kind == PanelKind::Clustered && !g[0].is_finite() && g.len() >= 5 {
            g[0] = 4.0 * g[1] - 6.0 * g[2] + 4.0 * g[3] - g[4];
        }
        g
    }

    /// Running integral `int_a^{x_k} f dx` at every sample.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let g = self.integrand(f);
        cumulative_simpson(&g, 1.0 / (g.len() - 1) as f64)
    }

    /// `int_a^b f dx`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        let g = self.integrand(f);
        simpson(&g, 1.0 / (g.len() - 1) as f64)
    }
}

/// A grid together with its sample layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    grid: Grid,
    quad: Quadrature,
    panels: Vec<Panel>,
}

impl Mesh {
    /// All panels uniform.
    pub fn new(grid: Grid, quad: Quadrature) -> Mesh {
        let kinds = vec![PanelKind::Uniform; grid.intervals()];
        Mesh::with_kinds(grid, quad, &kinds)
    }

    /// # Panics
    /// Panics if `kinds.len()` differs from the number of subintervals.
    pub fn with_kinds(grid: Grid, quad: Quadrature, kinds: &[PanelKind]) -> Mesh {
        assert_eq!(kinds.len(), grid.intervals());
        let panels = grid
            .nodes()
            .windows(2)
            .zip(kinds)
            .map(|(w, &kind)| Panel::new(w[0], w[1], kind, quad.samples()))
            .collect();
        Mesh { grid, quad, panels }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad
    }

    pub fn samples(&self) -> usize {
        self.quad.samples()
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn panel(&self, i: usize) -> &Panel {
        &self.panels[i]
    }

    /// Every sample as `(panel, index, x)`, shared nodes listed once (taken
    /// from the panel on their left).
    pub fn sample_points(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.panels.iter().enumerate().flat_map(|(i, p)| {
            let first = if i == 0 { 0 } else { 1 };
            (first..p.xs.len()).map(move |k| (i, k, p.xs[k]))
        })
    }
}

/// Cubic Lagrange interpolation through the four samples nearest `x`,
/// returning `(value, derivative)`.
fn cubic_local(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let n = xs.len();
    if n < 4 {
        // Linear fallback for degenerate sample sets.
        let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
        return (ys[k - 1] + slope * (x - xs[k - 1]), slope);
    }
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1);
    let start = k.saturating_sub(1).min(n - 4);
    let px = &xs[start..start + 4];
    let py = &ys[start..start + 4];
    let mut value = 0.0;
    let mut deriv = 0.0;
    for j in 0..4 {
        let mut denom = 1.0;
        let mut num = 1.0;
        for m in 0..4 {
            if m != j {
                denom *= px[j] - px[m];
                num *= x - px[m];
            }
        }
        // d/dx prod_{m != j} (x - x_m)
        let mut dnum = 0.0;
        for l in 0..4 {
            if l == j {
                continue;
            }
            let mut prod = 1.0;
            for (m, xm) in px.iter().enumerate() {
                if m != j && m != l {
                    prod *= x - xm;
                }
            }
            dnum += prod;
        }
        value += py[j] * num / denom;
        deriv += py[j] * dnum / denom;
    }
    (value, deriv)
}

/// One series term stored as samples on every panel.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTerm {
    mesh: Arc<Mesh>,
    samples: Vec<Vec<f64>>,
    derivs: Option<Vec<Vec<f64>>>,
    endpoint_values: Vec<f64>,
}

impl PiecewiseTerm {
    /// Builds a term from per-panel samples. Node values are read from the
    /// panel to the left of each node (the right panel for `x_0`).
    ///
    /// # Panics
    /// Panics if the sample layout does not match the mesh.
    pub fn from_samples(
        mesh: Arc<Mesh>,
        samples: Vec<Vec<f64>>,
        derivs: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let s = mesh.samples();
        assert_eq!(samples.len(), mesh.grid().intervals());
        assert!(samples.iter().all(|p| p.len() == s + 1));
        if let Some(d) = &derivs {
            assert_eq!(d.len(), samples.len());
            assert!(d.iter().all(|p| p.len() == s + 1));
        }
        let mut endpoint_values = Vec::with_capacity(samples.len() + 1);
        endpoint_values.push(samples[0][0]);
        endpoint_values.extend(samples.iter().map(|p| p[s]));
        PiecewiseTerm {
            mesh,
            samples,
            derivs,
            endpoint_values,
        }
    }

    /// Samples a function at every sample position.
    pub fn sample<E>(mesh: Arc<Mesh>, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<Self, E> {
        let samples = mesh
            .panels()
            .iter()
            .map(|p| p.xs().iter().map(|&x| f(x)).collect::<Result<Vec<_>, E>>())
            .collect::<Result<Vec<_>, E>>()?;
        Ok(PiecewiseTerm::from_samples(mesh, samples, None))
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let s = mesh.samples();
        let n = mesh.grid().intervals();
        PiecewiseTerm::from_samples(
            mesh,
            vec![vec![0.0; s + 1]; n],
            Some(vec![vec![0.0; s + 1]; n]),
        )
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn grid(&self) -> &Grid {
        self.mesh.grid()
    }

    pub fn panel_samples(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// Derivative samples, when the producer knows them exactly.
    pub fn derivs(&self) -> Option<&[Vec<f64>]> {
        self.derivs.as_deref()
    }

    pub fn endpoint_values(&self) -> &[f64] {
        &self.endpoint_values
    }

    /// Value at a grid node.
    pub fn node_value(&self, i: usize) -> f64 {
        self.endpoint_values[i]
    }

    /// Local cubic interpolation; exact at samples and grid nodes.
    pub fn eval(&self, x: f64) -> Result<f64, MeshError> {
        let grid = self.mesh.grid();
        let i = grid.locate(x)?;
        if let Ok(node) = grid
            .nodes()
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            return Ok(self.endpoint_values[node]);
        }
        let panel = self.mesh.panel(i);
        Ok(cubic_local(panel.xs(), &self.samples[i], x).0)
    }

    /// Derivative at `x`, one-sided (from the right) at interior grid nodes.
    /// Uses stored derivative samples when present, otherwise differentiates
    /// the local cubic interpolant.
    pub fn eval_derivative(&self, x: f64) -> Result<f64, MeshError> {
        let i = self.mesh.grid().locate(x)?;
        Ok(self.panel_derivative(i, x))
    }

    /// Derivative at `x` using panel `i` only.
    pub fn panel_derivative(&self, i: usize, x: f64) -> f64 {
        let panel = self.mesh.panel(i);
        match &self.derivs {
            Some(d) => {
                if let Some(k) = panel.xs().iter().position(|&s| s == x) {
                    d[i][k]
                } else {
                    cubic_local(panel.xs(), &d[i], x).0
                }
            }
            None => cubic_local(panel.xs(), &self.samples[i], x).1,
        }
    }

    /// Derivative at sample `k` of panel `i`.
    pub fn sample_derivative(&self, i: usize, k: usize) -> f64 {
        match &self.derivs {
            Some(d) => d[i][k],
            None => {
                let panel = self.mesh.panel(i);
                cubic_local(panel.xs(), &self.samples[i], panel.xs()[k]).1
            }
        }
    }

    /// `max |value|` over all samples.
    pub fn sup_norm(&self) -> f64 {
        self.samples
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max |derivative|` over all samples, skipping non-finite entries
    /// (singular endpoints).
    pub fn derivative_sup_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (i, p) in self.samples.iter().enumerate() {
            for k in 0..p.len() {
                let d = self.sample_derivative(i, k);
                if d.is_finite() {
                    m = m.max(d.abs());
                }
            }
        }
        m
    }

    /// Largest relative jump `|u(x_i+) - u(x_i-)| / (1 + |u(x_i-)|)` over the
    /// interior nodes.
    pub fn max_node_jump(&self) -> f64 {
        let s = self.mesh.samples();
        self.samples
            .windows(2)
            .map(|w| (w[1][0] - w[0][s]).abs() / (1.0 + w[0][s].abs()))
            .fold(0.0, f64::max)
    }

    /// Pointwise sum of terms sharing a mesh.
    ///
    /// # Panics
    /// Panics on an empty slice.
    pub fn sum(terms: &[&PiecewiseTerm]) -> PiecewiseTerm {
        let first = terms[0];
        let mut samples = first.samples.clone();
        let mut derivs = first.derivs.clone();
        for t in &terms[1..] {
            for (acc, p) in samples.iter_mut().zip(&t.samples) {
                for (a, v) in acc.iter_mut().zip(p) {
                    *a += v;
                }
            }
            derivs = match (derivs, &t.derivs) {
                (Some(mut acc), Some(d)) => {
                    for (a, p) in acc.iter_mut().zip(d) {
                        for (x, v) in a.iter_mut().zip(p) {
                            *x += v;
                        }
                    }
                    Some(acc)
                }
                _ => None,
            };
        }
        PiecewiseTerm::from_samples(first.mesh.clone(), samples, derivs)
    }
}
