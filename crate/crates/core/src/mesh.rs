//! Layer-adapted meshes on `[0, 2]`.
//!
//! Every layered mesh shares one layout. The half `[0, 1]` is split into a
//! boundary-layer region `[0, λ]` with `N/8` cells, a coarse uniform region
//! `[λ, 1 − τ]` with `N/4` cells and an inner-layer region `[1 − τ, 1]` with
//! `N/8` cells, where the inner transition `τ` is `λ`, `μ` or `ν` depending on
//! the inner mesh. The half `[1, 2]` is the mirror image about `x = 1`, which
//! for the plain S-type mesh coincides with the translate `x ↦ 1 + x`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mesh-generating function `φ` of an S-type mesh, `φ(0) = 0`,
/// `φ(1/2) = ln N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerFamily {
    Shishkin,
    BakhvalovS,
}

impl LayerFamily {
    pub fn phi(self, t: f64, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            LayerFamily::Shishkin => 2.0 * t * nf.ln(),
            LayerFamily::BakhvalovS => -(1.0 - 2.0 * t * (1.0 - 1.0 / nf)).ln(),
        }
    }

    /// Mesh-characterising function `ψ = e^{−φ}`.
    pub fn psi(self, t: f64, n: usize) -> f64 {
        (-self.phi(t, n)).exp()
    }

    pub fn psi_prime(self, t: f64, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            LayerFamily::Shishkin => -2.0 * nf.ln() * nf.powf(-2.0 * t),
            LayerFamily::BakhvalovS => -2.0 * (1.0 - 1.0 / nf),
        }
    }

    /// Analytic bound on `max |ψ′|` over `[0, 1/2]`.
    pub fn psi_prime_bound(self, n: usize) -> f64 {
        match self {
            LayerFamily::Shishkin => 2.0 * (n as f64).ln(),
            LayerFamily::BakhvalovS => 2.0,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LayerFamily::Shishkin => "Shishkin",
            LayerFamily::BakhvalovS => "BS",
        }
    }
}

/// Mesh used around the inner layer at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMesh {
    /// S-type grading with the boundary transition point λ.
    SType(LayerFamily),
    /// Uniform cells in `(1 − μ, 1 + μ)`.
    WeakEquidistant,
    /// S-type grading with the weak-layer transition point ν.
    WeakSType(LayerFamily),
}

/// Boundary-layer family plus inner mesh, e.g. `BS-weakShishkin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshSpec {
    pub boundary: LayerFamily,
    pub inner: InnerMesh,
}

impl MeshSpec {
    pub const BS_BS: MeshSpec = MeshSpec {
        boundary: LayerFamily::BakhvalovS,
        inner: InnerMesh::SType(LayerFamily::BakhvalovS),
    };
    pub const BS_SHISHKIN: MeshSpec = MeshSpec {
        boundary: LayerFamily::BakhvalovS,
        inner: InnerMesh::SType(LayerFamily::Shishkin),
    };
    pub const BS_WEAKEQ: MeshSpec = MeshSpec {
        boundary: LayerFamily::BakhvalovS,
        inner: InnerMesh::WeakEquidistant,
    };
    pub const BS_WEAK_SHISHKIN: MeshSpec = MeshSpec {
        boundary: LayerFamily::BakhvalovS,
        inner: InnerMesh::WeakSType(LayerFamily::Shishkin),
    };

    pub fn stype(family: LayerFamily) -> Self {
        MeshSpec {
            boundary: family,
            inner: InnerMesh::SType(family),
        }
    }

    /// All supported combinations, used by property sweeps.
    pub fn all() -> Vec<MeshSpec> {
        let fams = [LayerFamily::Shishkin, LayerFamily::BakhvalovS];
        let mut out = Vec::new();
        for &b in &fams {
            for &i in &fams {
                out.push(MeshSpec { boundary: b, inner: InnerMesh::SType(i) });
                out.push(MeshSpec { boundary: b, inner: InnerMesh::WeakSType(i) });
            }
            out.push(MeshSpec { boundary: b, inner: InnerMesh::WeakEquidistant });
        }
        out
    }

    pub fn label(&self) -> String {
        let inner = match self.inner {
            InnerMesh::SType(f) => f.short_name().to_string(),
            InnerMesh::WeakEquidistant => "weakeq".to_string(),
            InnerMesh::WeakSType(f) => format!("weak{}", f.short_name()),
        };
        format!("{}-{}", self.boundary.short_name(), inner)
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for LayerFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bs" | "bakhvalov" | "bakhvalov_s" | "bakhvalov-s" => Ok(LayerFamily::BakhvalovS),
            "shishkin" | "s" => Ok(LayerFamily::Shishkin),
            other => Err(Error::config("bmesh", format!("unknown layer family `{other}`"))),
        }
    }
}

impl FromStr for InnerMesh {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "weakeq" | "weak_equidistant" | "weak-equidistant" => Ok(InnerMesh::WeakEquidistant),
            _ => {
                if let Some(rest) = lower.strip_prefix("weak") {
                    let rest = rest.trim_start_matches(['_', '-']);
                    rest.parse::<LayerFamily>()
                        .map(InnerMesh::WeakSType)
                        .map_err(|_| Error::config("imesh", format!("unknown inner mesh `{s}`")))
                } else {
                    lower
                        .parse::<LayerFamily>()
                        .map(InnerMesh::SType)
                        .map_err(|_| Error::config("imesh", format!("unknown inner mesh `{s}`")))
                }
            }
        }
    }
}

impl FromStr for MeshSpec {
    type Err = Error;
    /// Parses labels like `BS-BS`, `BS-weakeq`, `Shishkin-weakShishkin`.
    fn from_str(s: &str) -> Result<Self> {
        let (b, i) = s
            .split_once('-')
            .ok_or_else(|| Error::config("mesh", format!("expected `<boundary>-<inner>`, got `{s}`")))?;
        Ok(MeshSpec {
            boundary: b.parse()?,
            inner: i.parse()?,
        })
    }
}

/// Parameters shared by all mesh builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    pub n: usize,
    pub epsilon: f64,
    pub sigma: f64,
    pub beta: f64,
    /// Polynomial degree the mesh is built for (enters μ and ν).
    pub q: usize,
    /// Replaces the weak-layer exponent `1 − 5/(2(q+1))` in μ and ν; with
    /// an override μ is no longer fixed to 1/4 for `q ≤ 2`.
    pub weak_exponent: Option<f64>,
}

impl MeshParams {
    /// Default `σ = q + 1`.
    pub fn new(n: usize, epsilon: f64, beta: f64, q: usize) -> Self {
        MeshParams {
            n,
            epsilon,
            sigma: q as f64 + 1.0,
            beta,
            q,
            weak_exponent: None,
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        MeshParams { sigma, ..self }
    }

    pub fn with_weak_exponent(self, gamma: Option<f64>) -> Self {
        MeshParams { weak_exponent: gamma, ..self }
    }

    /// μ for these parameters.
    pub fn mu(&self) -> f64 {
        match self.weak_exponent {
            None => transition_mu(self.q, self.epsilon, self.beta),
            Some(g) => (self.epsilon.powf(g) / self.beta).min(0.25),
        }
    }

    /// Scale `σ ε^γ / β` of the weak S-type inner region.
    pub fn weak_scale(&self) -> f64 {
        let g = self.weak_exponent.unwrap_or_else(|| weak_exponent(self.q));
        self.sigma * self.epsilon.powf(g) / self.beta
    }

    fn validate(&self) -> Result<()> {
        if self.n < 8 || self.n % 8 != 0 {
            return Err(Error::InvalidInput(format!("N = {} must be a positive multiple of 8", self.n)));
        }
        if !(self.epsilon > 0.0 && self.sigma > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidInput("ε, σ and β must be positive".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidInput("q must be at least 1".into()));
        }
        Ok(())
    }
}

/// `λ = min(σ ε ln N / β, 1/4)`.
pub fn transition_lambda(epsilon: f64, sigma: f64, beta: f64, n: usize) -> f64 {
    (sigma * epsilon * (n as f64).ln() / beta).min(0.25)
}

/// Exponent `1 − 5/(2(q+1)) = (2q − 3)/(2(q + 1))` of the weak inner layer.
pub fn weak_exponent(q: usize) -> f64 {
    1.0 - 5.0 / (2.0 * (q as f64 + 1.0))
}

/// `μ = 1/4` for `q ≤ 2`, else `min(ε^{1−5/(2(q+1))}/β, 1/4)`.
pub fn transition_mu(q: usize, epsilon: f64, beta: f64) -> f64 {
    if q <= 2 {
        0.25
    } else {
        (epsilon.powf(weak_exponent(q)) / beta).min(0.25)
    }
}

/// `ν = min(σ ε^{1−5/(2(q+1))} ln N / β, 1/4)`.
pub fn transition_nu(q: usize, epsilon: f64, sigma: f64, beta: f64, n: usize) -> f64 {
    (sigma * epsilon.powf(weak_exponent(q)) * (n as f64).ln() / beta).min(0.25)
}

/// One graded (or, when capped, uniform) layer region with `N/8` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRegion {
    /// `None` for the uniform weak-equidistant region.
    pub family: Option<LayerFamily>,
    pub transition: f64,
    /// Length scale κ with `x = κ φ(t)`; `σε/β` or `σε^γ/β`.
    pub scale: f64,
    /// The transition hit the 1/4 cap and the region is uniform.
    pub capped: bool,
}

impl LayerRegion {
    fn graded(family: LayerFamily, scale: f64, n: usize) -> Self {
        let raw = scale * (n as f64).ln();
        LayerRegion {
            family: Some(family),
            transition: raw.min(0.25),
            scale,
            capped: raw >= 0.25,
        }
    }

    fn uniform(transition: f64) -> Self {
        LayerRegion {
            family: None,
            transition,
            scale: f64::NAN,
            capped: false,
        }
    }

    fn is_graded(&self) -> bool {
        self.family.is_some() && !self.capped
    }

    /// Distance from the layer of node `i` of `0..=N/8`.
    fn offset(&self, i: usize, n: usize) -> f64 {
        let n8 = n / 8;
        if i == n8 {
            return self.transition;
        }
        match self.family {
            Some(fam) if !self.capped => self.scale * fam.phi(4.0 * i as f64 / n as f64, n),
            _ => self.transition * i as f64 / n8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    /// `None` for uniform or user-supplied node sets.
    pub spec: Option<MeshSpec>,
    pub params: Option<MeshParams>,
    pub boundary_region: Option<LayerRegion>,
    pub inner_region: Option<LayerRegion>,
}

impl Mesh1D {
    /// Builds a layered mesh for the given family combination.
    pub fn build(spec: MeshSpec, params: MeshParams) -> Result<Self> {
        params.validate()?;
        let MeshParams { n, epsilon, sigma, beta, .. } = params;
        let boundary = LayerRegion::graded(spec.boundary, sigma * epsilon / beta, n);
        let inner = match spec.inner {
            InnerMesh::SType(fam) => LayerRegion::graded(fam, sigma * epsilon / beta, n),
            InnerMesh::WeakEquidistant => LayerRegion::uniform(params.mu()),
            InnerMesh::WeakSType(fam) => LayerRegion::graded(fam, params.weak_scale(), n),
        };
        let lambda = boundary.transition;
        let tau = inner.transition;
        if lambda + tau >= 1.0 {
            return Err(Error::Mesh(format!("layer regions collide: λ = {lambda}, inner transition = {tau}")));
        }

        let n8 = n / 8;
        let mut nodes = vec![0.0; n + 1];
        for i in 0..=n8 {
            nodes[i] = boundary.offset(i, n);
        }
        let coarse = 1.0 - tau - lambda;
        for i in n8..=3 * n8 {
            nodes[i] = lambda + coarse * (i - n8) as f64 / (2 * n8) as f64;
        }
        for i in 3 * n8..=4 * n8 {
            nodes[i] = 1.0 - inner.offset(4 * n8 - i, n);
        }
        nodes[n8] = lambda;
        nodes[3 * n8] = 1.0 - tau;
        nodes[4 * n8] = 1.0;

        let translate = matches!(spec.inner, InnerMesh::SType(f) if f == spec.boundary);
        let half = n / 2;
        for j in 1..=half {
            nodes[half + j] = if translate {
                1.0 + nodes[j]
            } else {
                2.0 - nodes[half - j]
            };
        }
        nodes[n] = 2.0;

        let mesh = Mesh1D {
            nodes,
            spec: Some(spec),
            params: Some(params),
            boundary_region: Some(boundary),
            inner_region: Some(inner),
        };
        if !mesh.is_strictly_increasing() {
            return Err(Error::Mesh(format!("{spec} with {params:?} produced non-increasing nodes")));
        }
        Ok(mesh)
    }

    /// S-type mesh with the same family for all layers.
    pub fn build_stype(n: usize, epsilon: f64, sigma: f64, beta: f64, family: LayerFamily) -> Result<Self> {
        let params = MeshParams::new(n, epsilon, beta, 1).with_sigma(sigma);
        Self::build(MeshSpec::stype(family), params)
    }

    pub fn build_weak_equidistant(
        n: usize,
        epsilon: f64,
        sigma: f64,
        beta: f64,
        q: usize,
        boundary: LayerFamily,
    ) -> Result<Self> {
        let spec = MeshSpec { boundary, inner: InnerMesh::WeakEquidistant };
        Self::build(spec, MeshParams::new(n, epsilon, beta, q).with_sigma(sigma))
    }

    pub fn build_weak_stype(
        n: usize,
        epsilon: f64,
        sigma: f64,
        beta: f64,
        q: usize,
        boundary: LayerFamily,
        inner: LayerFamily,
    ) -> Result<Self> {
        let spec = MeshSpec { boundary, inner: InnerMesh::WeakSType(inner) };
        Self::build(spec, MeshParams::new(n, epsilon, beta, q).with_sigma(sigma))
    }

    /// Uniform mesh with `n` cells; `n` must be even so that `x = 1` is a node.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("uniform mesh needs an even cell count, got {n}")));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
        nodes[n / 2] = 1.0;
        nodes[n] = 2.0;
        Self::from_nodes(nodes)
    }

    /// Wraps an arbitrary node vector; it must start at 0, end at 2, contain
    /// 1 exactly and be strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let mesh = Mesh1D {
            nodes,
            spec: None,
            params: None,
            boundary_region: None,
            inner_region: None,
        };
        if mesh.nodes.len() < 3
            || mesh.nodes[0] != 0.0
            || *mesh.nodes.last().unwrap() != 2.0
            || !mesh.is_strictly_increasing()
        {
            return Err(Error::Mesh("nodes must increase strictly from 0 to 2".into()));
        }
        if mesh.nodes.binary_search_by(|x| x.total_cmp(&1.0)).is_err() {
            return Err(Error::Mesh("x = 1 must be a mesh node".into()));
        }
        Ok(mesh)
    }

    /// Macro mesh made of the cell pairs `(2i, 2i+1)`.
    pub fn pair_coarsened(&self) -> Result<Self> {
        let n = self.n_cells();
        if n % 2 != 0 {
            return Err(Error::InvalidInput("odd cell count cannot be paired".into()));
        }
        if self.midpoint_index() % 2 != 0 {
            return Err(Error::InvalidInput("a macro cell would straddle x = 1".into()));
        }
        let nodes = self.nodes.iter().step_by(2).copied().collect();
        let mut coarse = Self::from_nodes(nodes)?;
        coarse.spec = self.spec;
        coarse.params = self.params.map(|p| MeshParams { n: p.n / 2, ..p });
        coarse.boundary_region = self.boundary_region;
        coarse.inner_region = self.inner_region;
        Ok(coarse)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn width(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node `x = 1`.
    pub fn midpoint_index(&self) -> usize {
        self.nodes
            .binary_search_by(|x| x.total_cmp(&1.0))
            .expect("x = 1 is a node of every mesh")
    }

    pub fn lambda(&self) -> Option<f64> {
        self.boundary_region.map(|r| r.transition)
    }

    pub fn inner_transition(&self) -> Option<f64> {
        self.inner_region.map(|r| r.transition)
    }

    /// Cell containing `x`; at an interior node the cell to the left is used.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=2.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        let idx = self.nodes.partition_point(|&p| p < x);
        Ok(idx.saturating_sub(1).min(self.n_cells() - 1))
    }

    fn is_strictly_increasing(&self) -> bool {
        self.nodes.windows(2).all(|w| w[0] < w[1])
    }

    /// Writes one node per line with 17 significant digits.
    pub fn write_nodes(&self, mut out: impl Write) -> std::io::Result<()> {
        for x in &self.nodes {
            writeln!(out, "{x:.16e}")?;
        }
        Ok(())
    }

    pub fn export_nodes(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_nodes(std::io::BufWriter::new(file))?;
        Ok(())
    }

    pub fn read_nodes(text: &str) -> Result<Self> {
        let nodes = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("node `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_nodes(nodes)
    }
}

/// Constant in the layer width bound `h_i ≤ C κ N⁻¹ max|ψ′| e^{dist/κ}`,
/// with κ the layer scale and dist the distance of the cell's near end from
/// the layer. The ratio `ψ(t_{i−1})/ψ(t_i)` is at most 9 for both families,
/// and `t` advances by `4/N` per cell.
pub const LAYER_WIDTH_CONSTANT: f64 = 36.0;

/// Mesh quality report.
#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub n_cells: usize,
    pub h_min: f64,
    pub h_max: f64,
    /// Cells in `[0,λ], [λ,1−τ], [1−τ,1], [1,1+τ], [1+τ,2−λ], [2−λ,2]`.
    pub region_counts: Vec<usize>,
    pub strictly_increasing: bool,
    pub divisible_by_8: bool,
    pub transitions_at_expected_nodes: bool,
    pub midpoint_exact: bool,
    pub translate_symmetric: bool,
    /// Largest relative mismatch between neighbouring branches at
    /// `i = N/8` and `i = 3N/8` (0 for uniform or capped regions).
    pub branch_mismatch: f64,
    /// Largest `h_i / (κ N⁻¹ max|ψ′| e^{dist/κ})` over graded layer cells.
    pub layer_width_ratio: f64,
    pub layer_width_ok: bool,
    /// Sampled `max |ψ′|` on `[0, 1/2]` for each graded family, with its bound.
    pub psi_prime: Vec<(String, f64, f64)>,
    pub psi_prime_ok: bool,
    pub lambda_capped: bool,
    pub inner_capped: bool,
}

impl MeshReport {
    pub fn all_ok(&self) -> bool {
        self.strictly_increasing
            && self.divisible_by_8
            && self.transitions_at_expected_nodes
            && self.midpoint_exact
            && self.branch_mismatch <= 1e-14
            && self.layer_width_ok
            && self.psi_prime_ok
    }
}

pub fn mesh_diagnostics(mesh: &Mesh1D) -> MeshReport {
    let n = mesh.n_cells();
    let nodes = mesh.nodes();
    let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    let h_min = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = widths.iter().copied().fold(0.0, f64::max);
    let half = n / 2;
    let translate_symmetric = n % 2 == 0
        && nodes[half] == 1.0
        && (0..=half).all(|j| (nodes[half + j] - (1.0 + nodes[j])).abs() <= 4.0 * f64::EPSILON);

    let mut report = MeshReport {
        n_cells: n,
        h_min,
        h_max,
        region_counts: Vec::new(),
        strictly_increasing: mesh.is_strictly_increasing(),
        divisible_by_8: n % 8 == 0,
        transitions_at_expected_nodes: true,
        midpoint_exact: n % 2 == 0 && nodes[half] == 1.0,
        translate_symmetric,
        branch_mismatch: 0.0,
        layer_width_ratio: 0.0,
        layer_width_ok: true,
        psi_prime: Vec::new(),
        psi_prime_ok: true,
        lambda_capped: false,
        inner_capped: false,
    };

    let (Some(bnd), Some(inn), Some(params)) = (mesh.boundary_region, mesh.inner_region, mesh.params) else {
        return report;
    };
    report.lambda_capped = bnd.capped;
    report.inner_capped = inn.capped;
    let n8 = n / 8;
    let lambda = bnd.transition;
    let tau = inn.transition;
    report.transitions_at_expected_nodes = n % 8 == 0
        && nodes[n8] == lambda
        && nodes[3 * n8] == 1.0 - tau
        && nodes[4 * n8] == 1.0
        && (nodes[5 * n8] - (1.0 + tau)).abs() <= 4.0 * f64::EPSILON
        && (nodes[7 * n8] - (2.0 - lambda)).abs() <= 4.0 * f64::EPSILON;
    let bounds = [0.0, lambda, 1.0 - tau, 1.0, 1.0 + tau, 2.0 - lambda, 2.0];
    report.region_counts = bounds
        .windows(2)
        .map(|b| {
            (0..n)
                .filter(|&i| {
                    let mid = 0.5 * (nodes[i] + nodes[i + 1]);
                    mid > b[0] && mid < b[1]
                })
                .count()
        })
        .collect();

    // Branch continuity: graded formula evaluated at t = 1/2 against the
    // transition point used by the coarse branch.
    let mut mismatch: f64 = 0.0;
    for region in [bnd, inn] {
        if let Some(fam) = region.family.filter(|_| !region.capped) {
            let graded = region.scale * fam.phi(0.5, params.n);
            mismatch = mismatch.max((graded - region.transition).abs() / region.transition);
        }
    }
    report.branch_mismatch = mismatch;

    // Layer widths in the four graded regions, measured as distance from the
    // layer the region resolves.
    let mut ratio: f64 = 0.0;
    let mut check_region = |region: &LayerRegion, cells: Vec<(f64, f64)>| {
        let Some(fam) = region.family else { return };
        let scale = if region.capped {
            region.transition / (params.n as f64).ln()
        } else {
            region.scale
        };
        let bound = scale / params.n as f64 * fam.psi_prime_bound(params.n);
        for (near, h) in cells {
            ratio = ratio.max(h / (bound * (near / scale).exp()));
        }
    };
    let cells_from = |range: std::ops::Range<usize>, anchor: f64| -> Vec<(f64, f64)> {
        range
            .map(|i| {
                let d0 = (nodes[i] - anchor).abs();
                let d1 = (nodes[i + 1] - anchor).abs();
                (d0.min(d1), nodes[i + 1] - nodes[i])
            })
            .collect()
    };
    check_region(&bnd, cells_from(0..n8, 0.0));
    check_region(&bnd, cells_from(7 * n8..n, 2.0));
    check_region(&inn, cells_from(3 * n8..4 * n8, 1.0));
    check_region(&inn, cells_from(4 * n8..5 * n8, 1.0));
    report.layer_width_ratio = ratio;
    report.layer_width_ok = ratio <= LAYER_WIDTH_CONSTANT;

    let mut fams = vec![bnd.family];
    if inn.is_graded() || inn.family.is_some() {
        fams.push(inn.family);
    }
    for fam in fams.into_iter().flatten() {
        let sampled = (0..=1000)
            .map(|k| fam.psi_prime(0.5 * k as f64 / 1000.0, params.n).abs())
            .fold(0.0, f64::max);
        let bound = fam.psi_prime_bound(params.n);
        report.psi_prime_ok &= sampled <= bound * (1.0 + 1e-14);
        report.psi_prime.push((fam.short_name().to_string(), sampled, bound));
    }
    report
}
