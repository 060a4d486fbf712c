//! Green's function of `ε²∂⁴ − b∂² + c` on `(0,1)` with clamped (`G = G_x = 0`)
//! or hinged (`G = G_xx = 0`) ends, its moment integrals and the 2×2 matrix
//! that couples the two halves of the shifted problem.
//!
//! Each piece of `G(·,t)` is expanded in exponentials anchored where they
//! are largest: `e^{−μx}, e^{−μ(t−x)}` left of `t` and `e^{−μ(x−t)},
//! e^{−μ(1−x)}` right of it, for `μ ∈ {μ₁, μ₂}`. Every basis function is
//! bounded by one on its piece, so the 8×8 system stays well scaled for any ε.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::quadrature::{graded_breakpoints, GaussRule};
use crate::{Error, Result};

/// Gauss points per panel for all integrals in this module.
pub const GAUSS_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GreensVariant {
    /// `G = G_x = 0` at both ends.
    M1,
    /// `G = G_xx = 0` at both ends.
    M2,
}

impl std::str::FromStr for GreensVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m1" | "1" => Ok(GreensVariant::M1),
            "m2" | "2" => Ok(GreensVariant::M2),
            other => Err(Error::InvalidInput(format!("unknown variant `{other}` (expected m1 or m2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensParams {
    pub b: f64,
    pub c: f64,
    pub epsilon: f64,
    pub variant: GreensVariant,
}

impl GreensParams {
    pub fn new(b: f64, c: f64, epsilon: f64, variant: GreensVariant) -> Result<Self> {
        let p = GreensParams { b, c, epsilon, variant };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.c > 0.0 && self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Green's function needs b, c, ε > 0, got b = {}, c = {}, ε = {}",
                self.b, self.c, self.epsilon
            )));
        }
        if !(self.discriminant() > 0.0) {
            return Err(Error::Assumption(format!(
                "b² − 4ε²c = {} is not positive: characteristic roots collide",
                self.discriminant()
            )));
        }
        Ok(())
    }

    fn discriminant(&self) -> f64 {
        self.b * self.b - 4.0 * self.epsilon * self.epsilon * self.c
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        GreensParams::new(self.b, self.c, epsilon, self.variant)
    }
}

/// `(μ₁, μ₂)` with `μ₁ ≈ √b/ε` and `μ₂ ≈ √(c/b)`; the small root is
/// computed without cancellation.
pub fn char_roots(b: f64, c: f64, epsilon: f64) -> Result<(f64, f64)> {
    let disc = b * b - 4.0 * epsilon * epsilon * c;
    if !(disc > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Assumption(format!(
            "no distinct real roots for b = {b}, c = {c}, ε = {epsilon}"
        )));
    }
    let r = disc.sqrt();
    let mu1 = ((b + r) / (2.0 * epsilon * epsilon)).sqrt();
    let mu2 = (2.0 * c / (b + r)).sqrt();
    Ok((mu1, mu2))
}

/// `e^{−μ·dir·(x − anchor)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ExpFn {
    mu: f64,
    anchor: f64,
    dir: f64,
}

impl ExpFn {
    fn deriv(&self, x: f64, k: u32) -> f64 {
        (-self.mu * self.dir).powi(k as i32) * (-self.mu * self.dir * (x - self.anchor)).exp()
    }
}

/// Coefficients of `G(·, t)` over the anchored exponential bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensKernel {
    pub t: f64,
    pub c_left: [f64; 4],
    pub c_right: [f64; 4],
    left: [ExpFn; 4],
    right: [ExpFn; 4],
}

impl GreensKernel {
    /// `∂ₓᵏ G(x, t)`; the left piece is used for `x < t`.
    pub fn eval(&self, x: f64, k: u32) -> f64 {
        let (c, f) = if x < self.t {
            (&self.c_left, &self.left)
        } else {
            (&self.c_right, &self.right)
        };
        c.iter().zip(f).map(|(c, f)| c * f.deriv(x, k)).sum()
    }

    fn side(&self, right: bool, x: f64, k: u32) -> (f64, f64) {
        let (c, f) = if right {
            (&self.c_right, &self.right)
        } else {
            (&self.c_left, &self.left)
        };
        c.iter().zip(f).fold((0.0, 0.0), |(s, a), (c, f)| {
            let v = c * f.deriv(x, k);
            (s + v, a + v.abs())
        })
    }

    /// Relative defects of the eight defining conditions: the four end
    /// conditions, then the jumps of `G, G_x, G_xx` and `G_xxx − ε⁻²` at `t`.
    pub fn residuals(&self, params: &GreensParams) -> [f64; 8] {
        let kb = end_order(params.variant);
        let rel = |(v, a): (f64, f64), target: f64| (v - target).abs() / (a + target.abs()).max(f64::MIN_POSITIVE);
        let mut out = [0.0; 8];
        out[0] = rel(self.side(false, 0.0, 0), 0.0);
        out[1] = rel(self.side(false, 0.0, kb), 0.0);
        out[2] = rel(self.side(true, 1.0, 0), 0.0);
        out[3] = rel(self.side(true, 1.0, kb), 0.0);
        let jump_target = 1.0 / (params.epsilon * params.epsilon);
        for k in 0..4u32 {
            let (r, ra) = self.side(true, self.t, k);
            let (l, la) = self.side(false, self.t, k);
            let target = if k == 3 { jump_target } else { 0.0 };
            out[4 + k as usize] = rel((r - l, ra + la), target);
        }
        out
    }
}

fn end_order(v: GreensVariant) -> u32 {
    match v {
        GreensVariant::M1 => 1,
        GreensVariant::M2 => 2,
    }
}

/// Solves the 8 conditions for `G(·, t)`.
pub fn kernel_at(params: &GreensParams, t: f64) -> Result<GreensKernel> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfDomain(t));
    }
    let (mu1, mu2) = char_roots(params.b, params.c, params.epsilon)?;
    let e = |mu, anchor, dir| ExpFn { mu, anchor, dir };
    let left = [e(mu1, 0.0, 1.0), e(mu2, 0.0, 1.0), e(mu1, t, -1.0), e(mu2, t, -1.0)];
    let right = [e(mu1, t, 1.0), e(mu2, t, 1.0), e(mu1, 1.0, -1.0), e(mu2, 1.0, -1.0)];
    let kb = end_order(params.variant);

    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut rhs = SVector::<f64, 8>::zeros();
    for i in 0..4 {
        a[(0, i)] = left[i].deriv(0.0, 0);
        a[(1, i)] = left[i].deriv(0.0, kb);
        a[(2, 4 + i)] = right[i].deriv(1.0, 0);
        a[(3, 4 + i)] = right[i].deriv(1.0, kb);
        for k in 0..4u32 {
            a[(4 + k as usize, i)] = -left[i].deriv(t, k);
            a[(4 + k as usize, 4 + i)] = right[i].deriv(t, k);
        }
    }
    rhs[7] = 1.0 / (params.epsilon * params.epsilon);
    for r in 0..8 {
        let s = a.row(r).amax();
        if s > 0.0 {
            a.row_mut(r).scale_mut(1.0 / s);
            rhs[r] /= s;
        }
    }
    let lu = a.lu();
    let singular = || Error::Singular(format!("Green's function system at t = {t}"));
    let mut z = lu.solve(&rhs).ok_or_else(singular)?;
    // Refinement drives the componentwise backward error down to rounding
    // level, which matters for the tiny coefficients next to the ends.
    for _ in 0..2 {
        let r = rhs - a * z;
        z += lu.solve(&r).ok_or_else(singular)?;
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(singular());
    }
    Ok(GreensKernel {
        t,
        c_left: [z[0], z[1], z[2], z[3]],
        c_right: [z[4], z[5], z[6], z[7]],
        left,
        right,
    })
}

/// `G(x, t)` and its x-derivatives.
pub fn green(params: &GreensParams, x: f64, t: f64, k: u32) -> Result<f64> {
    Ok(kernel_at(params, t)?.eval(x, k))
}

fn panels(params: &GreensParams, foci: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0, 1.0];
    f.extend_from_slice(foci);
    graded_breakpoints(0.0, 1.0, &f, params.epsilon / 10.0)
}

fn gauss_nodes(breaks: &[f64]) -> Vec<(f64, f64)> {
    let rule = GaussRule::new(GAUSS_POINTS);
    let mut out = Vec::with_capacity((breaks.len() - 1) * GAUSS_POINTS);
    for w in breaks.windows(2) {
        let h = w[1] - w[0];
        for (s, wt) in rule.points.iter().zip(&rule.weights) {
            out.push((w[0] + h * s, wt * h));
        }
    }
    out
}

/// `∫₀¹ ∂ₓ^deriv G(x0, t) tᵏ dt` for `k = 0..3` at once.
pub fn moments(params: &GreensParams, x0: f64, deriv: u32) -> Result<[f64; 4]> {
    let nodes = gauss_nodes(&panels(params, &[x0]));
    let parts: Result<Vec<[f64; 4]>> = nodes
        .par_iter()
        .map(|&(t, w)| {
            let g = kernel_at(params, t)?.eval(x0, deriv) * w;
            Ok([g, g * t, g * t * t, g * t * t * t])
        })
        .collect();
    Ok(sum4(parts?))
}

/// Single moment `∫₀¹ ∂ₓ^deriv G(x0, t) tᵏ dt`.
pub fn moment_integrals(params: &GreensParams, x0: f64, deriv: u32, k: usize) -> Result<f64> {
    if k > 3 {
        return Err(Error::InvalidInput(format!("moment order {k} > 3")));
    }
    Ok(moments(params, x0, deriv)?[k])
}

/// `∫₀¹ |∂ₓ^deriv G(x0, t)| dt`.
pub fn abs_moment(params: &GreensParams, x0: f64, deriv: u32) -> Result<f64> {
    let nodes = gauss_nodes(&panels(params, &[x0]));
    let parts: Result<Vec<f64>> = nodes
        .par_iter()
        .map(|&(t, w)| Ok(kernel_at(params, t)?.eval(x0, deriv).abs() * w))
        .collect();
    Ok(parts?.into_iter().sum())
}

fn sum4(parts: Vec<[f64; 4]>) -> [f64; 4] {
    parts.into_iter().fold([0.0; 4], |mut acc, p| {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        acc
    })
}

/// `∫₀¹ G(x, s) sᵏ ds` for `k = 0..3`.
pub fn inner_moments(params: &GreensParams, x: f64) -> Result<[f64; 4]> {
    let mut acc = [0.0; 4];
    for (s, w) in gauss_nodes(&panels(params, &[x])) {
        let g = kernel_at(params, s)?.eval(x, 0) * w;
        acc[0] += g;
        acc[1] += g * s;
        acc[2] += g * s * s;
        acc[3] += g * s * s * s;
    }
    Ok(acc)
}

/// `∫₀¹ G(x, t) dt`, the response to a unit load.
pub fn load_response(params: &GreensParams, x: f64) -> Result<f64> {
    Ok(inner_moments(params, x)?[0])
}

/// Nested integrals `∫₀¹ ∂ₓ^j G(0, t) ∫₀¹ G(t, s) sᵏ ds dt` for
/// `j ∈ {2, 3}` (rows) and `k = 0..3` (columns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleMoments {
    pub second: [f64; 4],
    pub third: [f64; 4],
}

pub fn double_moments(params: &GreensParams) -> Result<DoubleMoments> {
    let nodes = gauss_nodes(&panels(params, &[]));
    let parts: Result<Vec<[f64; 8]>> = nodes
        .par_iter()
        .map(|&(t, w)| {
            let kern = kernel_at(params, t)?;
            let g2 = kern.eval(0.0, 2) * w;
            let g3 = kern.eval(0.0, 3) * w;
            let inner = inner_moments(params, t)?;
            let mut out = [0.0; 8];
            for k in 0..4 {
                out[k] = g2 * inner[k];
                out[4 + k] = g3 * inner[k];
            }
            Ok(out)
        })
        .collect();
    let mut acc = [0.0; 8];
    for p in parts? {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    Ok(DoubleMoments {
        second: [acc[0], acc[1], acc[2], acc[3]],
        third: [acc[4], acc[5], acc[6], acc[7]],
    })
}

/// Single nested integral, `deriv ∈ {2, 3}`.
pub fn double_integrals(params: &GreensParams, k: usize, deriv: u32) -> Result<f64> {
    let d = double_moments(params)?;
    match (deriv, k) {
        (2, 0..=3) => Ok(d.second[k]),
        (3, 0..=3) => Ok(d.third[k]),
        _ => Err(Error::InvalidInput(format!("no double integral for deriv = {deriv}, k = {k}"))),
    }
}

/// Cubic `a₀ + a₁x + a₂x² + a₃x³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn eval(&self, x: f64, k: u32) -> f64 {
        let a = self.0;
        match k {
            0 => a[0] + x * (a[1] + x * (a[2] + x * a[3])),
            1 => a[1] + x * (2.0 * a[2] + 3.0 * x * a[3]),
            2 => 2.0 * a[2] + 6.0 * x * a[3],
            3 => 6.0 * a[3],
            _ => 0.0,
        }
    }

    /// Monomial coefficients of the second derivative.
    pub fn second_derivative(&self) -> Cubic {
        Cubic([2.0 * self.0[2], 6.0 * self.0[3], 0.0, 0.0])
    }

    pub fn combine(&self, a: f64, other: &Cubic, b: f64) -> Cubic {
        let mut c = [0.0; 4];
        for i in 0..4 {
            c[i] = a * self.0[i] + b * other.0[i];
        }
        Cubic(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HermiteKind {
    /// Dual to `v(0), v(1), v′(0), v′(1)`.
    ValueDerivative,
    /// Dual to `v(0), v(1), v″(0), v″(1)`.
    ValueSecondDerivative,
}

impl HermiteKind {
    fn order(self) -> u32 {
        match self {
            HermiteKind::ValueDerivative => 1,
            HermiteKind::ValueSecondDerivative => 2,
        }
    }
}

/// Cubic basis dual to the end values and the end derivatives of the
/// kind's order, in the order `v(0), v(1), v⁽ʲ⁾(0), v⁽ʲ⁾(1)`.
pub fn hermite_basis(kind: HermiteKind) -> [Cubic; 4] {
    match kind {
        HermiteKind::ValueDerivative => [
            Cubic([1.0, 0.0, -3.0, 2.0]),
            Cubic([0.0, 0.0, 3.0, -2.0]),
            Cubic([0.0, 1.0, -2.0, 1.0]),
            Cubic([0.0, 0.0, -1.0, 1.0]),
        ],
        HermiteKind::ValueSecondDerivative => {
            let m = functional_matrix(kind);
            let inv = m.try_inverse().expect("Hermite evaluation matrix is regular");
            std::array::from_fn(|j| Cubic([inv[(0, j)], inv[(1, j)], inv[(2, j)], inv[(3, j)]]))
        }
    }
}

/// Rows: the four functionals; columns: monomials `1, x, x², x³`.
fn functional_matrix(kind: HermiteKind) -> Matrix4<f64> {
    let mono = |i: usize| {
        let mut a = [0.0; 4];
        a[i] = 1.0;
        Cubic(a)
    };
    let j = kind.order();
    Matrix4::from_fn(|r, c| {
        let p = mono(c);
        match r {
            0 => p.eval(0.0, 0),
            1 => p.eval(1.0, 0),
            2 => p.eval(0.0, j),
            _ => p.eval(1.0, j),
        }
    })
}

/// `functional_i(basis_j)`, which is the identity for a dual basis.
pub fn duality_matrix(kind: HermiteKind) -> Matrix4<f64> {
    let basis = hermite_basis(kind);
    let j = kind.order();
    Matrix4::from_fn(|r, c| {
        let p = basis[c];
        match r {
            0 => p.eval(0.0, 0),
            1 => p.eval(1.0, 0),
            2 => p.eval(0.0, j),
            _ => p.eval(1.0, j),
        }
    })
}

/// The coupling matrix together with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityMatrix {
    pub epsilon: f64,
    pub d: f64,
    /// `[[ε(F₃″−F₁″), ε(F₄″−F₂″+8)], [ε²(F₃‴−F₁‴−24), ε²(F₄‴−F₂‴)]]`.
    pub a: [[f64; 2]; 2],
    pub det: f64,
    pub inverse_norm_inf: f64,
    /// `F_i″(1)`, `i = 1..4`.
    pub f_second: [f64; 4],
    /// `F_i‴(1)`, `i = 1..4`.
    pub f_third: [f64; 4],
}

fn dot(p: &Cubic, m: &[f64; 4]) -> f64 {
    p.0.iter().zip(m).map(|(a, b)| a * b).sum()
}

/// Moment data of `G` needed by the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingMoments {
    pub epsilon: f64,
    /// `∫ ∂ₓʲ G(1, t) tᵏ dt` for `j = 2, 3`.
    pub right: [[f64; 4]; 2],
    /// `∫ ∂ₓʲ G(0, t) tᵏ dt` for `j = 2, 3`.
    pub left: [[f64; 4]; 2],
    pub double: DoubleMoments,
}

pub fn coupling_moments(params: &GreensParams) -> Result<CouplingMoments> {
    if params.variant != GreensVariant::M1 {
        return Err(Error::InvalidInput(
            "the coupling matrix is only defined for clamped ends".into(),
        ));
    }
    params.validate()?;
    Ok(CouplingMoments {
        epsilon: params.epsilon,
        right: [moments(params, 1.0, 2)?, moments(params, 1.0, 3)?],
        left: [moments(params, 0.0, 2)?, moments(params, 0.0, 3)?],
        double: double_moments(params)?,
    })
}

/// Builds `F₁..F₄` at `x = 1` from monomial moments of their integrands and
/// forms the matrix. `F₁, F₂` integrate `G(1,·)` against
/// `bΦ₂″ − cΦ₂` and `bΦ₄″ − cΦ₄`; `F₃, F₄` integrate `G(0,·)` against
/// `bΦ₁″ − cΦ₁ + dΦ₂ − dF₁` and `bΦ₃″ − cΦ₃ + dΦ₄ − dF₂`.
///
/// `b, c` here only weight the integrands; the kernel behind `mom` keeps
/// the coefficients it was computed with.
pub fn coupling_matrix(mom: &CouplingMoments, b: f64, c: f64, d: f64) -> StabilityMatrix {
    let eps = mom.epsilon;
    let h = hermite_basis(HermiteKind::ValueDerivative);
    let op = |p: &Cubic| p.second_derivative().combine(b, p, -c);
    let p1 = op(&h[1]);
    let p2 = op(&h[3]);
    let p3 = op(&h[0]).combine(1.0, &h[1], d);
    let p4 = op(&h[2]).combine(1.0, &h[3], d);
    let dd = [mom.double.second, mom.double.third];

    let mut f = [[0.0; 4]; 2];
    for j in 0..2 {
        f[j][0] = dot(&p1, &mom.right[j]);
        f[j][1] = dot(&p2, &mom.right[j]);
        f[j][2] = dot(&p3, &mom.left[j]) - d * dot(&p1, &dd[j]);
        f[j][3] = dot(&p4, &mom.left[j]) - d * dot(&p2, &dd[j]);
    }
    // Jumps of the Hermite lift across x = 1 per unit α₂ and β₂.
    let jump = |i: usize, k: usize, j: u32| -(h[i].eval(0.0, j) - h[k].eval(1.0, j));
    let a = [
        [
            eps * (f[0][2] - f[0][0] + jump(0, 1, 2)),
            eps * (f[0][3] - f[0][1] + jump(2, 3, 2)),
        ],
        [
            eps * eps * (f[1][2] - f[1][0] + jump(0, 1, 3)),
            eps * eps * (f[1][3] - f[1][1] + jump(2, 3, 3)),
        ],
    ];
    let m = Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
    let det = m.determinant();
    let inverse_norm_inf = m
        .try_inverse()
        .map(|inv| (0..2).map(|r| inv[(r, 0)].abs() + inv[(r, 1)].abs()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    StabilityMatrix {
        epsilon: eps,
        d,
        a,
        det,
        inverse_norm_inf,
        f_second: f[0],
        f_third: f[1],
    }
}

/// [`coupling_matrix`] with the kernel's own `b, c`.
pub fn assemble_a(params: &GreensParams, d: f64) -> Result<StabilityMatrix> {
    let mom = coupling_moments(params)?;
    Ok(coupling_matrix(&mom, params.b, params.c, d))
}

/// Leading ε-constants of the moment integrals and of the coupling matrix,
/// valid for `b = c = 1`.
pub mod targets {
    use std::f64::consts::E;

    fn q1() -> f64 {
        E * E - 1.0
    }

    fn q2() -> f64 {
        q1() * q1()
    }

    /// Limit of `ε ∫ G_xx(x0, t) tᵏ dt`, `x0 ∈ {0, 1}`.
    pub fn moment(x0: u8, k: usize) -> f64 {
        let e = E;
        match (x0, k) {
            (1, 0) | (0, 0) => (e - 1.0) / (e + 1.0),
            (1, 1) => 2.0 / q1(),
            (1, 2) => (e * e - 4.0 * e + 5.0) / q1(),
            (1, 3) => (16.0 - 2.0 * e * e) / q1(),
            (0, 1) => (e * e - 2.0 * e - 1.0) / q1(),
            (0, 2) => (2.0 * e * e - 6.0 * e + 2.0) / q1(),
            (0, 3) => (6.0 * e * e - 14.0 * e - 6.0) / q1(),
            _ => f64::NAN,
        }
    }

    /// Limit of `ε ∫ G_xx(0, t) ∫ G(t, s) sᵏ ds dt`.
    pub fn double(k: usize) -> f64 {
        let e = E;
        let (e2, e3, e4) = (e * e, e * e * e, e * e * e * e);
        match k {
            0 => (e2 - 2.0 * e - 1.0) / (2.0 * (1.0 + e) * (1.0 + e)),
            1 => (e4 - 2.0 * e3 - 2.0 * e2 + 1.0) / q2(),
            2 => (3.0 * e4 - 10.0 * e3 + 4.0 * e2 + 4.0 * e - 3.0) / q2(),
            3 => (12.0 * e4 - 26.0 * e3 - 24.0 * e2 + 12.0 * e + 12.0) / q2(),
            _ => f64::NAN,
        }
    }

    /// Limit of `∫ G(1/2, t) dt`.
    pub fn mid_load() -> f64 {
        (E.sqrt() - 1.0).powi(2) / (E + 1.0)
    }

    /// Leading values of the four matrix entries.
    pub fn matrix(b: f64, c: f64, d: f64) -> [[f64; 2]; 2] {
        let e = E;
        let (e2, e3, e4) = (e * e, e * e * e, e * e * e * e);
        let r = (3.0 * e4 - 8.0 * e3 + 1.0) / q2();
        let s = (15.0 * e4 - 22.0 * e3 - 60.0 * e2 + 12.0 * e + 33.0) / q2();
        let t = (9.0 * e4 - 16.0 * e3 - 28.0 * e2 + 8.0 * e + 15.0) / q2();
        let a00 = 12.0 * (3.0 - e) / (e - 1.0) * b + 6.0 * r * b * d + (17.0 * e2 - 26.0 * e - 39.0) / q1() * c
            - s * c * d
            - 2.0 * (3.0 * e2 - 5.0 * e - 9.0) / q1() * d;
        let a01 = 6.0 * (e - 3.0) / (e - 1.0) * b - 3.0 * r * b * d - (7.0 * e2 - 10.0 * e - 21.0) / q1() * c
            + t * c * d
            + 4.0 * (e2 - 2.0 * e - 2.0) / q1() * d;
        // These two entries print (e²−1) instead of (e²−1)² under the
        // bd and cd terms; used as printed.
        let a10 = 36.0 * (e - 1.0) / (e + 1.0) * b - 6.0 * r * b * d - (3.0 * e - 5.0) / (e - 1.0) * c
            + s * q1() * c * d
            + 2.0 * (3.0 * e2 - 5.0 * e - 9.0) / q1() * d;
        let a11 = -18.0 * (e - 1.0) / (e + 1.0) * b + 3.0 * r * q1() * b * d + (e - 1.0) / (e + 1.0) * c
            - t * c * d
            - 4.0 * (e2 - 2.0 * e - 2.0) / q1() * d;
        [[a00, a01], [a10, a11]]
    }

    /// Leading value of `det A`, reading the `1 − e^(2)` denominator as
    /// `1 − e²`.
    pub fn det(b: f64, c: f64, d: f64) -> f64 {
        let e = E;
        let (e2, e3, e4) = (e * e, e * e * e, e * e * e * e);
        -4.0 * (e4 + 4.0 * e3 - 27.0 * e2 + 10.0 * e + 36.0) / q2() * c * c
            - 24.0 * (e4 - 5.0 * e3 + 10.0 * e2 - 11.0 * e + 3.0) / q2() * b * d
            - 24.0 * (2.0 * e4 - 9.0 * e3 + 17.0 * e2 - 11.0 * e - 3.0) / q2() * b * c
            - 4.0 * (5.0 * e2 - 25.0 * e + 31.0) / (1.0 - e2) * c * d
            - 4.0 * (9.0 * e4 - 47.0 * e3 + 59.0 * e2 + 26.0 * e - 54.0) / q2() * c * c * d
            - 6.0 * (3.0 * e4 - 12.0 * e3 + 22.0 * e2 - 40.0 * e + 23.0) / q2() * b * c * d
    }
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub epsilon: f64,
    /// ε-scaled computed value.
    pub value: f64,
    pub target: f64,
    pub relative_error: f64,
}

impl CheckRow {
    fn new(name: impl Into<String>, epsilon: f64, value: f64, target: f64) -> Self {
        let relative_error = if target != 0.0 {
            ((value - target) / target).abs()
        } else {
            value.abs()
        };
        CheckRow {
            name: name.into(),
            epsilon,
            value,
            target,
            relative_error,
        }
    }
}

/// Everything compared against the leading constants at one ε: eight single
/// moments, four nested integrals, `∫G(1/2,t)dt`, `det A` at `d`.
pub fn expansion_rows(params: &GreensParams, d: f64) -> Result<Vec<CheckRow>> {
    let eps = params.epsilon;
    let mut rows = Vec::new();
    for x0 in [1u8, 0] {
        let m = moments(params, x0 as f64, 2)?;
        for (k, v) in m.iter().enumerate() {
            rows.push(CheckRow::new(
                format!("eps*int Gxx({x0},t) t^{k}"),
                eps,
                eps * v,
                targets::moment(x0, k),
            ));
        }
    }
    let dm = double_moments(params)?;
    for (k, v) in dm.second.iter().enumerate() {
        rows.push(CheckRow::new(
            format!("eps*int Gxx(0,t) int G(t,s) s^{k}"),
            eps,
            eps * v,
            targets::double(k),
        ));
    }
    rows.push(CheckRow::new("int G(1/2,t)", eps, load_response(params, 0.5)?, targets::mid_load()));
    let a = assemble_a(params, d)?;
    rows.push(CheckRow::new(
        "det A",
        eps,
        a.det,
        targets::det(params.b, params.c, d),
    ));
    Ok(rows)
}

/// Largest kernel residual over `t = (i + 1/2)/50`, as a row with target 0.
pub fn residual_row(params: &GreensParams) -> Result<CheckRow> {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let k = kernel_at(params, (i as f64 + 0.5) / 50.0)?;
        worst = k.residuals(params).iter().copied().fold(worst, f64::max);
    }
    Ok(CheckRow::new("kernel residual", params.epsilon, worst, 0.0))
}

/// Ratios `ε ∫G_xxx(x0,t)tᵏ / ∫G_xx(x0,t)tᵏ`, expected near `+1` at `x0 = 1`
/// and `−1` at `x0 = 0`.
pub fn third_to_second_ratios(params: &GreensParams, x0: f64) -> Result<[f64; 4]> {
    let m2 = moments(params, x0, 2)?;
    let m3 = moments(params, x0, 3)?;
    Ok(std::array::from_fn(|k| params.epsilon * m3[k] / m2[k]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub epsilons: Vec<f64>,
    /// `∫ G(1/2, t) dt` per ε.
    pub mid_load: Vec<f64>,
    /// `min_x ∫G(x,t)dt` over the sample points, per ε.
    pub min_load: Vec<f64>,
    /// `max_x ∫G(x,t)dt − ∫G(1/2,t)dt`, per ε.
    pub max_excess: Vec<f64>,
    /// `ε ∫|G_xx(0,t)|dt`.
    pub scaled_abs_second: Vec<f64>,
    /// `ε² ∫|G_xxx(0,t)|dt`.
    pub scaled_abs_third: Vec<f64>,
}

/// Load responses at `x = 0.1, …, 0.9` and scaled absolute derivative
/// integrals for each parameter set.
pub fn stability_bound_check(params_list: &[GreensParams]) -> Result<StabilityReport> {
    let mut rep = StabilityReport {
        epsilons: Vec::new(),
        mid_load: Vec::new(),
        min_load: Vec::new(),
        max_excess: Vec::new(),
        scaled_abs_second: Vec::new(),
        scaled_abs_third: Vec::new(),
    };
    for p in params_list {
        let eps = p.epsilon;
        let mid = load_response(p, 0.5)?;
        let loads: Result<Vec<f64>> = (1..10).map(|i| load_response(p, 0.1 * i as f64)).collect();
        let loads = loads?;
        rep.epsilons.push(eps);
        rep.mid_load.push(mid);
        rep.min_load.push(loads.iter().copied().fold(f64::INFINITY, f64::min));
        rep.max_excess.push(loads.iter().copied().fold(f64::NEG_INFINITY, f64::max) - mid);
        rep.scaled_abs_second.push(eps * abs_moment(p, 0.0, 2)?);
        rep.scaled_abs_third.push(eps * eps * abs_moment(p, 0.0, 3)?);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eps: f64, variant: GreensVariant) -> GreensParams {
        GreensParams::new(1.0, 1.0, eps, variant).unwrap()
    }

    #[test]
    fn roots() {
        let (m1, m2) = char_roots(1.0, 2.0, 0.1).unwrap();
        // roots of ε²μ⁴ − bμ² + c: μ₁²+μ₂² = b/ε², μ₁²μ₂² = c/ε²
        assert!((m1 * m1 + m2 * m2 - 100.0).abs() < 1e-12);
        assert!((m1 * m1 * m2 * m2 - 200.0).abs() < 1e-11);
        assert!((m1 - 9.89739).abs() < 1e-5, "{m1}");
        assert!((m2 - 1.42887).abs() < 1e-5, "{m2}");
        for eps in [1e-3, 1e-5] {
            let (m1, m2) = char_roots(3.0, 2.0, eps).unwrap();
            assert!((m1 * eps - 3f64.sqrt()).abs() < 10.0 * eps * eps);
            assert!((m2 - (2.0f64 / 3.0).sqrt()).abs() < 10.0 * eps * eps);
        }
        assert_eq!(char_roots(1.0, 0.0, 0.1).unwrap().1, 0.0);
        assert!(char_roots(1.0, 30.0, 0.1).is_err());
    }

    #[test]
    fn kernel_conditions_hold() {
        for variant in [GreensVariant::M1, GreensVariant::M2] {
            for eps in [1e-2, 1e-3, 1e-6] {
                let params = GreensParams::new(1.0, 2.0, eps, variant).unwrap();
                for i in 1..50 {
                    let t = i as f64 / 50.0;
                    let k = kernel_at(&params, t).unwrap();
                    let r = k.residuals(&params);
                    assert!(r.iter().all(|v| *v <= 1e-10), "{variant:?} eps={eps} t={t} {r:?}");
                }
            }
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let params = GreensParams::new(1.0, 2.0, 1e-2, GreensVariant::M1).unwrap();
        for i in 0..20 {
            let x = 0.03 + 0.047 * i as f64;
            let t = 0.95 - 0.043 * i as f64;
            let a = green(&params, x, t, 0).unwrap();
            let b = green(&params, t, x, 0).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()), "{x} {t}: {a} {b}");
        }
    }

    #[test]
    fn hermite_duality() {
        for kind in [HermiteKind::ValueDerivative, HermiteKind::ValueSecondDerivative] {
            let m = duality_matrix(kind);
            assert!((m - Matrix4::identity()).amax() < 1e-14);
        }
        let psi = hermite_basis(HermiteKind::ValueSecondDerivative);
        assert!((psi[2].eval(0.0, 2) - 1.0).abs() < 1e-14);
        assert!(psi[2].eval(0.0, 0).abs() < 1e-14 && psi[2].eval(1.0, 0).abs() < 1e-14);
        assert!(psi[2].eval(1.0, 2).abs() < 1e-14);
        let phi = hermite_basis(HermiteKind::ValueDerivative);
        assert_eq!(phi[0].eval(0.0, 0), 1.0);
        assert_eq!(phi[0].eval(1.0, 0), 0.0);
        assert_eq!(phi[0].eval(0.0, 1), 0.0);
        assert_eq!(phi[0].eval(1.0, 1), 0.0);
    }

    #[test]
    fn printed_jump_constants() {
        let h = hermite_basis(HermiteKind::ValueDerivative);
        let jump = |i: usize, k: usize, j: u32| -(h[i].eval(0.0, j) - h[k].eval(1.0, j));
        assert_eq!(jump(0, 1, 2), 0.0);
        assert_eq!(jump(2, 3, 2), 8.0);
        assert_eq!(jump(0, 1, 3), -24.0);
        assert_eq!(jump(2, 3, 3), 0.0);
    }

    #[test]
    fn load_response_is_bounded_by_midpoint() {
        let params = p(1e-3, GreensVariant::M1);
        let mid = load_response(&params, 0.5).unwrap();
        for i in 1..10 {
            let v = load_response(&params, 0.1 * i as f64).unwrap();
            assert!(v >= -1e-10 && v <= mid + 1e-8);
        }
    }

    #[test]
    fn shift_terms_of_matrix_match_leading_constants() {
        let params = p(1e-4, GreensVariant::M1);
        let mom = coupling_moments(&params).unwrap();
        let entry = |b, c, d| coupling_matrix(&mom, b, c, d).a;
        let t_entry = |b, c, d| targets::matrix(b, c, d);
        let zero = entry(0.0, 0.0, 0.0);
        let (d_only, d_t) = (entry(0.0, 0.0, 1.0), t_entry(0.0, 0.0, 1.0));
        let (cd1, cd0, cd_t1, cd_t0) = (entry(0.0, 1.0, 1.0), entry(0.0, 1.0, 0.0), t_entry(0.0, 1.0, 1.0), t_entry(0.0, 1.0, 0.0));
        for i in 0..2 {
            for j in 0..2 {
                assert!((d_only[i][j] - d_t[i][j]).abs() < 0.05 * d_t[i][j].abs(), "d {i}{j}: {} vs {}", d_only[i][j], d_t[i][j]);
                let cd = cd1[i][j] - cd0[i][j] - d_only[i][j] + zero[i][j];
                let mut cd_t = cd_t1[i][j] - cd_t0[i][j] - d_t[i][j];
                if i == 1 && j == 0 {
                    // printed with (e²−1) in place of (e²−1)²
                    cd_t /= std::f64::consts::E.powi(2) - 1.0;
                }
                assert!((cd - cd_t).abs() < 0.05 * cd_t.abs(), "cd {i}{j}: {cd} vs {cd_t}");
            }
        }
        // the pure b and c parts of the diagonal cancel by the symmetry x ↦ 1 − x
        let b_only = entry(1.0, 0.0, 0.0);
        let c_only = entry(0.0, 1.0, 0.0);
        assert!(b_only[0][0].abs() < 1e-2 && b_only[1][1].abs() < 1e-2);
        assert!(c_only[0][0].abs() < 1e-2 && c_only[1][1].abs() < 1e-2);
    }

    #[test]
    fn matrix_is_linear_in_d() {
        let params = p(1e-2, GreensVariant::M1);
        let a0 = assemble_a(&params, 0.0).unwrap();
        let a1 = assemble_a(&params, 1.0).unwrap();
        let a2 = assemble_a(&params, 2.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let lin = 2.0 * a1.a[i][j] - a0.a[i][j];
                assert!((a2.a[i][j] - lin).abs() < 1e-9 * (1.0 + a2.a[i][j].abs()));
            }
        }
        assert!(assemble_a(&p(1e-2, GreensVariant::M2), 1.0).is_err());
    }
}
