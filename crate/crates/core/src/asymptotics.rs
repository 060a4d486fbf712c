//! Leading terms of the formal solution decomposition
//! `u ≈ S₀ + E_left + E_right + ε³ W₃` for constant coefficients.
//!
//! `S₀` solves the reduced second-order problem numerically; the layer terms
//! are closed-form profiles `ε^p (α + γt) e^{−√b t}` in a stretched variable
//! `t` measured away from their anchor point.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::errors::{function_parts, NormParts};
use crate::fem::{assemble_with, solve_with_stats, AssembleOptions, DiscreteSpace, FieldValue, PairField};
use crate::mesh::Mesh1D;
use crate::problem::{BcOrder, ProblemSpec};
use crate::quadrature::graded_breakpoints;
use crate::{Error, Result};

/// Polynomial degree of the reduced solve.
pub const REDUCED_DEGREE: usize = 4;
/// Smallest admissible number of cells for the reduced solve.
pub const MIN_REDUCED_CELLS: usize = 1024;

/// The ε-independent outer term `S₀` together with the boundary and jump
/// data the layer terms are built from.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    /// `S₀` in the `u` component; `w` is zero.
    pub field: PairField,
    /// `S₀′(0)`, `S₀′(2)`.
    pub slope: [f64; 2],
    /// `S₀″(0)`, `S₀″(2)`.
    pub curvature: [f64; 2],
    /// `⟦S₀‴⟧(1) = S₀‴(1⁺) − S₀‴(1⁻)`.
    pub third_jump: f64,
    pub relative_residual: f64,
}

impl ReducedSolution {
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.field.eval(x)?.u)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(self.field.eval(x)?.du)
    }
}

/// Fourth-order one-sided difference for the first derivative from the
/// samples `v[i] = g(x₀ + i·h)`, `i = 0..4`.
fn one_sided_first(v: [f64; 5], h: f64) -> f64 {
    (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
}

/// Solves `−b S″ + c S + d S(·−1) χ₍₁,₂₎ = f − d Φ(·−1) χ₍₀,₁₎`,
/// `S(0) = S(2) = 0`, with degree-[`REDUCED_DEGREE`] elements on `n_fine`
/// uniform cells.
pub fn solve_reduced(spec: &ProblemSpec, n_fine: usize) -> Result<ReducedSolution> {
    if n_fine < MIN_REDUCED_CELLS || n_fine % 8 != 0 {
        return Err(Error::InvalidInput(format!(
            "reduced solve needs at least {MIN_REDUCED_CELLS} cells divisible by 8, got {n_fine}"
        )));
    }
    let mesh = Mesh1D::uniform(n_fine)?;
    let h = 2.0 / n_fine as f64;
    let space = DiscreteSpace::new(mesh, REDUCED_DEGREE, spec.m)?;
    let opts = AssembleOptions {
        epsilon: Some(0.0),
        ..AssembleOptions::default()
    };
    let (field, stats) = solve_with_stats(&assemble_with(spec, &space, opts)?)?;
    let at = |x: f64| field.eval(x).map(|v| v.u);
    let mut left = [0.0; 5];
    let mut right = [0.0; 5];
    for i in 0..5 {
        left[i] = at(i as f64 * h)?;
        right[i] = at(2.0 - i as f64 * h)?;
    }
    let slope = [one_sided_first(left, h), -one_sided_first(right, h)];

    // The reduced equation at the end points, with S₀(0) = S₀(2) = 0.
    let b0 = spec.b.eval(0.0);
    let b2 = spec.b.eval(2.0);
    let curvature = [
        (spec.d.eval(0.0) * spec.history(-1.0)? - spec.f.eval(0.0)) / b0,
        (spec.d.eval(2.0) * at(1.0)? - spec.f.eval(2.0)) / b2,
    ];

    // Differentiating the equation across x = 1 leaves
    // −b ⟦S₀‴⟧ + d (S₀′(0) − Φ′(0)) = 0.
    let hp = 1e-3;
    let mut hist = [0.0; 5];
    for (i, v) in hist.iter_mut().enumerate() {
        *v = spec.history(-(i as f64) * hp)?;
    }
    let phi_slope = -one_sided_first(hist, hp);
    let third_jump = spec.d.eval(1.0) * (slope[0] - phi_slope) / spec.b.eval(1.0);

    Ok(ReducedSolution {
        field,
        slope,
        curvature,
        third_jump,
        relative_residual: stats.relative_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    ELeft,
    ERight,
    WLeft,
    WRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `ε^power · P(t)` with `P(t) = (α + γt) e^{−rate·t}` and
/// `t = (x − anchor) / (direction · ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerComponent {
    pub kind: ComponentKind,
    pub epsilon: f64,
    pub power: i32,
    pub rate: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Coefficient `g` of the forcing `g e^{−rate·t}` in `P⁗ − rate² P″`.
    pub forcing: f64,
    pub anchor: f64,
    pub direction: f64,
}

impl LayerComponent {
    fn support(&self) -> (f64, f64) {
        match self.kind {
            ComponentKind::ELeft | ComponentKind::ERight => (0.0, 2.0),
            ComponentKind::WLeft => (0.0, 1.0),
            ComponentKind::WRight => (1.0, 2.0),
        }
    }

    fn contains(&self, x: f64) -> bool {
        let (a, b) = self.support();
        match self.kind {
            ComponentKind::WLeft => x >= a && x < b,
            _ => x >= a && x <= b,
        }
    }

    /// Stretched variable of `x`.
    pub fn stretched(&self, x: f64) -> f64 {
        (x - self.anchor) / (self.direction * self.epsilon)
    }

    /// `P⁽ᵏ⁾(t)`.
    pub fn profile(&self, t: f64, k: u32) -> f64 {
        let ms = -self.rate;
        let e = (-self.rate * t).exp();
        let lead = ms.powi(k as i32) * (self.alpha + self.gamma * t);
        let tail = if k == 0 { 0.0 } else { k as f64 * ms.powi(k as i32 - 1) * self.gamma };
        e * (lead + tail)
    }

    /// `P⁗ − rate² P″ − g e^{−rate·t}`.
    pub fn ode_residual(&self, t: f64) -> f64 {
        self.profile(t, 4) - self.rate * self.rate * self.profile(t, 2) - self.forcing * (-self.rate * t).exp()
    }

    /// k-th derivative in `x`; zero outside the component's half.
    pub fn eval(&self, x: f64, k: u32) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let scale = self.epsilon.powi(self.power - k as i32) * self.direction.powi(k as i32);
        scale * self.profile(self.stretched(x), k)
    }

    /// `(u, u′, w, w′)` with `w = εu″`.
    pub fn pair_value(&self, x: f64) -> FieldValue {
        FieldValue {
            u: self.eval(x, 0),
            du: self.eval(x, 1),
            w: self.epsilon * self.eval(x, 2),
            dw: self.epsilon * self.eval(x, 3),
        }
    }

    /// Distance from the anchor.
    pub fn layer_distance(&self, x: f64) -> f64 {
        (x - self.anchor).abs()
    }
}

/// Leading boundary-layer term at `side`. For `m = 1` it corrects `S₀′`,
/// for `m = 2` it corrects `S₀″`; the rate is `√b` at the boundary.
pub fn boundary_layer_leading(spec: &ProblemSpec, s0: &ReducedSolution, side: Side) -> LayerComponent {
    let (x0, dir, idx, kind) = match side {
        Side::Left => (0.0, 1.0, 0, ComponentKind::ELeft),
        Side::Right => (2.0, -1.0, 1, ComponentKind::ERight),
    };
    let b = spec.b.eval(x0);
    let s = b.sqrt();
    let (power, alpha) = match spec.m {
        // E′(x₀) = −dir·s·α must cancel S₀′(x₀).
        BcOrder::One => (1, dir * s0.slope[idx] / s),
        BcOrder::Two => (2, -s0.curvature[idx] / b),
    };
    LayerComponent {
        kind,
        epsilon: spec.epsilon,
        power,
        rate: s,
        alpha,
        gamma: 0.0,
        forcing: 0.0,
        anchor: x0,
        direction: dir,
    }
}

/// Leading inner-layer pair `(W₃_left, W₃_right)` at `x = 1`.
///
/// The right half is forced by the shifted left boundary layer (only for
/// `m = 1`; for `m = 2` that term enters at higher order). Matching
/// `W̃_L″(0) = W̃_R″(0)` and `W̃_L‴(0) + W̃_R‴(0) = −⟦S₀‴⟧(1)` restores the
/// continuity of `u″` and `u‴` across `x = 1`.
pub fn inner_layer_leading(
    spec: &ProblemSpec,
    e_left: &LayerComponent,
    s0: &ReducedSolution,
) -> Result<(LayerComponent, LayerComponent)> {
    let s = spec.b.eval(1.0).sqrt();
    let d = spec.d.eval(1.0);
    let forcing = match spec.m {
        BcOrder::One => {
            if (e_left.rate - s).abs() > 1e-12 * s {
                return Err(Error::Assumption(
                    "inner-layer closed form needs b(0) = b(1)".into(),
                ));
            }
            -d * e_left.alpha
        }
        BcOrder::Two => 0.0,
    };
    // (α + γt)e^{−st}: P⁗ − s²P″ = −2s³γ e^{−st}.
    let gamma = -forcing / (2.0 * s * s * s);
    // P″(0) = s²α − 2sγ,  P‴(0) = −s³α + 3s²γ.
    let m = nalgebra::Matrix2::new(s * s, -s * s, -s * s * s, -s * s * s);
    let rhs = nalgebra::Vector2::new(-2.0 * s * gamma, -s0.third_jump - 3.0 * s * s * gamma);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("inner-layer matching system".into()))?;
    let base = LayerComponent {
        kind: ComponentKind::WLeft,
        epsilon: spec.epsilon,
        power: 3,
        rate: s,
        alpha: sol[0],
        gamma: 0.0,
        forcing: 0.0,
        anchor: 1.0,
        direction: -1.0,
    };
    let right = LayerComponent {
        kind: ComponentKind::WRight,
        alpha: sol[1],
        gamma,
        forcing,
        direction: 1.0,
        ..base
    };
    Ok((base, right))
}

/// All leading-order terms for one ε.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub s0: Arc<ReducedSolution>,
    pub e_left: LayerComponent,
    pub e_right: LayerComponent,
    pub w_left: LayerComponent,
    pub w_right: LayerComponent,
}

impl Decomposition {
    pub fn build(spec: &ProblemSpec, s0: Arc<ReducedSolution>) -> Result<Self> {
        if !spec.is_constant_coefficient() {
            return Err(Error::Assumption("closed-form layer terms need constant coefficients".into()));
        }
        let e_left = boundary_layer_leading(spec, &s0, Side::Left);
        let e_right = boundary_layer_leading(spec, &s0, Side::Right);
        let (w_left, w_right) = inner_layer_leading(spec, &e_left, &s0)?;
        Ok(Decomposition {
            s0,
            e_left,
            e_right,
            w_left,
            w_right,
        })
    }

    pub fn boundary_layers(&self, x: f64, k: u32) -> f64 {
        self.e_left.eval(x, k) + self.e_right.eval(x, k)
    }

    pub fn inner_layer(&self, x: f64, k: u32) -> f64 {
        self.w_left.eval(x, k) + self.w_right.eval(x, k)
    }

    /// `V₀(x) = S₀ + E + W`.
    pub fn v0(&self, x: f64) -> Result<f64> {
        Ok(self.s0.value(x)? + self.boundary_layers(x, 0) + self.inner_layer(x, 0))
    }

    /// Components at `x`: `(S₀, E, W, V₀)`.
    pub fn sample(&self, x: f64) -> Result<[f64; 4]> {
        let s = self.s0.value(x)?;
        let e = self.boundary_layers(x, 0);
        let w = self.inner_layer(x, 0);
        Ok([s, e, w, s + e + w])
    }
}

/// Energy norm of a sum of layer components, integrated on panels graded
/// towards the anchors with smallest width `ε/10`.
pub fn layer_energy_norm(spec: &ProblemSpec, comps: &[&LayerComponent]) -> f64 {
    layer_norm_parts(spec.epsilon, comps).energy(spec.beta, spec.delta)
}

pub fn layer_norm_parts(epsilon: f64, comps: &[&LayerComponent]) -> NormParts {
    let mut breaks = Vec::new();
    for (a, b) in [(0.0, 1.0), (1.0, 2.0)] {
        let part = graded_breakpoints(a, b, &[a, b], epsilon / 10.0);
        if !breaks.is_empty() {
            breaks.pop();
        }
        breaks.extend(part);
    }
    function_parts(&breaks, 12, &|x| {
        let mut v = FieldValue::default();
        for c in comps {
            let p = c.pair_value(x);
            v.u += p.u;
            v.du += p.du;
            v.w += p.w;
            v.dw += p.dw;
        }
        v
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("slope fit needs at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Norm scalings of the layer terms over an ε list.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub epsilons: Vec<f64>,
    pub boundary_norms: Vec<f64>,
    pub inner_norms: Vec<f64>,
    pub boundary_slope: f64,
    pub inner_slope: f64,
}

/// `|||(E, εE″)|||` and `|||(ε³W, ε⁴W″)|||` for each ε, with their log-log
/// slopes. `S₀` does not depend on ε and is reused.
pub fn norm_scalings(spec: &ProblemSpec, s0: Arc<ReducedSolution>, epsilons: &[f64]) -> Result<ScalingReport> {
    let mut boundary_norms = Vec::with_capacity(epsilons.len());
    let mut inner_norms = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let sp = spec.with_epsilon(eps)?;
        let dec = Decomposition::build(&sp, s0.clone())?;
        boundary_norms.push(layer_energy_norm(&sp, &[&dec.e_left, &dec.e_right]));
        inner_norms.push(layer_energy_norm(&sp, &[&dec.w_left, &dec.w_right]));
    }
    Ok(ScalingReport {
        boundary_slope: loglog_slope(epsilons, &boundary_norms)?,
        inner_slope: loglog_slope(epsilons, &inner_norms)?,
        epsilons: epsilons.to_vec(),
        boundary_norms,
        inner_norms,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub epsilon: f64,
    /// `max |u_h − V₀|` over the sample grid.
    pub max_difference: f64,
    pub at: f64,
    /// Where `w_h′` changes fastest in `[1/4, 7/4]` (difference quotients
    /// between neighbouring samples).
    pub inner_peak: f64,
    pub samples: usize,
}

/// Compares a discrete solution with `V₀` on the solution's mesh nodes plus
/// `per_cell − 1` points per cell.
pub fn decomposition_compare(fem: &PairField, dec: &Decomposition, per_cell: usize) -> Result<ComparisonReport> {
    let xs = crate::fem::sample_points(fem.mesh(), per_cell);
    let mut max_difference: f64 = 0.0;
    let mut at = 0.0;
    let mut peak = (0.0, f64::NAN);
    let mut prev: Option<(f64, f64)> = None;
    for &x in &xs {
        let v = fem.eval(x)?;
        let diff = (v.u - dec.v0(x)?).abs();
        if diff > max_difference {
            max_difference = diff;
            at = x;
        }
        if (0.25..=1.75).contains(&x) {
            if let Some((xp, dwp)) = prev {
                let slope = ((v.dw - dwp) / (x - xp)).abs();
                if slope > peak.0 {
                    peak = (slope, 0.5 * (x + xp));
                }
            }
            prev = Some((x, v.dw));
        }
    }
    Ok(ComparisonReport {
        epsilon: dec.e_left.epsilon,
        max_difference,
        at,
        inner_peak: peak.1,
        samples: xs.len(),
    })
}

/// Writes `x,S0,E,W,V0[,u_h]` rows.
pub fn write_components_csv(dec: &Decomposition, fem: Option<&PairField>, xs: &[f64], mut out: impl Write) -> Result<()> {
    if fem.is_some() {
        writeln!(out, "x,S0,E,W,V0,u_h")?;
    } else {
        writeln!(out, "x,S0,E,W,V0")?;
    }
    for &x in xs {
        let [s, e, w, v] = dec.sample(x)?;
        write!(out, "{x:.5e},{s:.5e},{e:.5e},{w:.5e},{v:.5e}")?;
        if let Some(f) = fem {
            write!(out, ",{:.5e}", f.eval(x)?.u)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
