//! Energy and L² norms, fine reference solutions and convergence tables.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::fem::{solve_with_stats, assemble, DiscreteSpace, FieldValue, PairField, SLIVER_TOL};
use crate::interp::{interpolate_field, postprocess};
use crate::mesh::{Mesh1D, MeshParams, MeshSpec};
use crate::problem::ProblemSpec;
use crate::quadrature::{merge_breakpoints, GaussRule};
use crate::{Error, Result};

/// Squared contributions `‖w‖², ‖u′‖², ‖u‖²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormParts {
    pub w2: f64,
    pub du2: f64,
    pub u2: f64,
}

impl NormParts {
    /// `sqrt(‖w‖² + (β²/2)‖u′‖² + δ‖u‖²)`.
    pub fn energy(&self, beta: f64, delta: f64) -> f64 {
        (self.w2 + 0.5 * beta * beta * self.du2 + delta * self.u2).sqrt()
    }

    pub fn l2_u(&self) -> f64 {
        self.u2.sqrt()
    }

    pub fn l2_w(&self) -> f64 {
        self.w2.sqrt()
    }
}

fn accumulate(parts: &mut NormParts, rule: &GaussRule, a: f64, b: f64, f: &mut dyn FnMut(f64) -> FieldValue) {
    let h = b - a;
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let v = f(a + h * s);
        parts.w2 += w * h * v.w * v.w;
        parts.du2 += w * h * v.du * v.du;
        parts.u2 += w * h * v.u * v.u;
    }
}

/// Norm parts of `a − b` (or of `a` alone), integrated on the union of both
/// meshes with Gauss order `max(q_a, q_b) + 3`.
pub fn difference_parts(a: &PairField, b: Option<&PairField>) -> NormParts {
    let qmax = a.degree().max(b.map_or(0, |f| f.degree()));
    let rule = GaussRule::new(qmax + 3);
    let lists: Vec<&[f64]> = match b {
        Some(b) => vec![a.mesh().nodes(), b.mesh().nodes()],
        None => vec![a.mesh().nodes()],
    };
    let breaks = merge_breakpoints(0.0, 2.0, &lists, SLIVER_TOL);
    let mut parts = NormParts::default();
    for seg in breaks.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        let ca = a.mesh().locate(mid).expect("inside");
        let cb = b.map(|f| f.mesh().locate(mid).expect("inside"));
        accumulate(&mut parts, &rule, seg[0], seg[1], &mut |x| {
            let va = a.eval_in_cell(ca, x);
            match (b, cb) {
                (Some(f), Some(c)) => {
                    let vb = f.eval_in_cell(c, x);
                    FieldValue {
                        u: va.u - vb.u,
                        du: va.du - vb.du,
                        w: va.w - vb.w,
                        dw: va.dw - vb.dw,
                    }
                }
                _ => va,
            }
        });
    }
    parts
}

/// `|||(u, w)|||` of a discrete pair.
pub fn energy_norm(spec: &ProblemSpec, pair: &PairField) -> f64 {
    difference_parts(pair, None).energy(spec.beta, spec.delta)
}

/// `|||(u_a − u_b, w_a − w_b)|||` for fields on possibly different meshes.
pub fn energy_distance(spec: &ProblemSpec, a: &PairField, b: &PairField) -> f64 {
    difference_parts(a, Some(b)).energy(spec.beta, spec.delta)
}

/// Norm parts of a function pair given pointwise, integrated with `order`
/// Gauss points on the panels `breaks`.
pub fn function_parts(breaks: &[f64], order: usize, f: &dyn Fn(f64) -> FieldValue) -> NormParts {
    let rule = GaussRule::new(order);
    let mut parts = NormParts::default();
    for seg in breaks.windows(2) {
        accumulate(&mut parts, &rule, seg[0], seg[1], &mut |x| f(x));
    }
    parts
}

/// Where a reference solution came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceMeta {
    pub example: String,
    pub epsilon: f64,
    pub m: u32,
    pub q_ref: usize,
    pub n_ref: usize,
    pub mesh: String,
    pub sigma: f64,
    pub residual: f64,
}

impl ReferenceMeta {
    pub fn key(&self) -> String {
        format!(
            "{}_eps{:e}_m{}_q{}_N{}_{}_s{}",
            self.example, self.epsilon, self.m, self.q_ref, self.n_ref, self.mesh, self.sigma
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub field: PairField,
    pub meta: ReferenceMeta,
}

pub const DEFAULT_Q_REF: usize = 5;
pub const DEFAULT_N_REF: usize = 1024;

impl ReferenceSolution {
    /// Checks `N_ref ≥ 4N` and `q_ref ≥ q + 1` for a run of degree `q` on `N` cells.
    pub fn check_dominates(&self, q: usize, n: usize) -> Result<()> {
        if self.meta.n_ref < 4 * n || self.meta.q_ref < q + 1 {
            return Err(Error::Domination(format!(
                "reference (q = {}, N = {}) cannot serve a run with q = {q}, N = {n}",
                self.meta.q_ref, self.meta.n_ref
            )));
        }
        Ok(())
    }
}

fn reference_mesh(spec: &ProblemSpec, q_ref: usize, n_ref: usize, family: MeshSpec, sigma: f64) -> Result<Mesh1D> {
    let params = MeshParams::new(n_ref, spec.epsilon, spec.beta, q_ref).with_sigma(sigma);
    Mesh1D::build(family, params)
}

/// Solves on a fine mesh of the given family with `σ = q_ref + 1`.
pub fn compute_reference(spec: &ProblemSpec, q_ref: usize, n_ref: usize, family: MeshSpec) -> Result<ReferenceSolution> {
    compute_reference_sigma(spec, q_ref, n_ref, family, q_ref as f64 + 1.0)
}

pub fn compute_reference_sigma(
    spec: &ProblemSpec,
    q_ref: usize,
    n_ref: usize,
    family: MeshSpec,
    sigma: f64,
) -> Result<ReferenceSolution> {
    let mesh = reference_mesh(spec, q_ref, n_ref, family, sigma)?;
    let space = DiscreteSpace::new(mesh, q_ref, spec.m)?;
    let (field, stats) = solve_with_stats(&assemble(spec, &space)?)?;
    Ok(ReferenceSolution {
        field,
        meta: ReferenceMeta {
            example: spec.name.clone(),
            epsilon: spec.epsilon,
            m: spec.m.as_int(),
            q_ref,
            n_ref,
            mesh: family.label(),
            sigma,
            residual: stats.relative_residual,
        },
    })
}

fn cache_locks() -> &'static Mutex<HashMap<PathBuf, Arc<Mutex<()>>>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    LOCKS.get_or_init(|| Mutex::new(HashMap::new()))
}

/// On-disk store of reference solutions, one plain-text file per key.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    pub fn path_for(&self, meta: &ReferenceMeta) -> PathBuf {
        self.dir.join(format!("{}.ref", meta.key()))
    }

    /// Loads the reference if cached, otherwise computes and stores it.
    /// Access to one file is serialised within the process.
    pub fn load_or_compute(
        &self,
        spec: &ProblemSpec,
        q_ref: usize,
        n_ref: usize,
        family: MeshSpec,
        sigma: f64,
    ) -> Result<ReferenceSolution> {
        let probe = ReferenceMeta {
            example: spec.name.clone(),
            epsilon: spec.epsilon,
            m: spec.m.as_int(),
            q_ref,
            n_ref,
            mesh: family.label(),
            sigma,
            residual: 0.0,
        };
        let path = self.path_for(&probe);
        let lock = cache_locks().lock().unwrap().entry(path.clone()).or_default().clone();
        let _guard = lock.lock().unwrap();
        if path.exists() {
            if let Ok(r) = read_reference(&path, spec, family) {
                return Ok(r);
            }
        }
        let r = compute_reference_sigma(spec, q_ref, n_ref, family, sigma)?;
        std::fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        write_reference(&r, std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(&tmp, &path)?;
        Ok(r)
    }
}

pub fn write_reference(r: &ReferenceSolution, mut out: impl Write) -> Result<()> {
    let m = &r.meta;
    writeln!(out, "# example {}", m.example)?;
    writeln!(out, "# epsilon {:.16e}", m.epsilon)?;
    writeln!(out, "# m {}", m.m)?;
    writeln!(out, "# q_ref {}", m.q_ref)?;
    writeln!(out, "# n_ref {}", m.n_ref)?;
    writeln!(out, "# mesh {}", m.mesh)?;
    writeln!(out, "# sigma {:.16e}", m.sigma)?;
    writeln!(out, "# residual {:.16e}", m.residual)?;
    for (u, w) in r.field.u.iter().zip(&r.field.w) {
        writeln!(out, "{u:.16e} {w:.16e}")?;
    }
    Ok(())
}

fn read_reference(path: &Path, spec: &ProblemSpec, family: MeshSpec) -> Result<ReferenceSolution> {
    let text = std::fs::read_to_string(path)?;
    let mut header = HashMap::new();
    let mut u = Vec::new();
    let mut w = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix("# ") {
            if let Some((k, v)) = h.split_once(' ') {
                header.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        let mut it = line.split_whitespace().map(|t| t.parse::<f64>());
        match (it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b))) => {
                u.push(a);
                w.push(b);
            }
            _ => return Err(Error::Parse(format!("bad reference line `{line}`"))),
        }
    }
    let get = |k: &str| header.get(k).cloned().ok_or_else(|| Error::Parse(format!("missing header `{k}`")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|e| Error::Parse(format!("{k}: {e}"))) };
    let meta = ReferenceMeta {
        example: get("example")?,
        epsilon: num("epsilon")?,
        m: num("m")? as u32,
        q_ref: num("q_ref")? as usize,
        n_ref: num("n_ref")? as usize,
        mesh: get("mesh")?,
        sigma: num("sigma")?,
        residual: num("residual")?,
    };
    if meta.example != spec.name || meta.epsilon != spec.epsilon || meta.m != spec.m.as_int() {
        return Err(Error::Parse("cached reference belongs to another problem".into()));
    }
    let mesh = reference_mesh(spec, meta.q_ref, meta.n_ref, family, meta.sigma)?;
    let space = DiscreteSpace::new(mesh, meta.q_ref, spec.m)?;
    let field = PairField::from_nodal(&space, u, w)?;
    Ok(ReferenceSolution { field, meta })
}

/// Run identification attached to every error report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub example: String,
    pub epsilon: f64,
    pub m: u32,
    pub q: usize,
    pub n: usize,
    pub mesh: String,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub energy_error: f64,
    pub l2_u: f64,
    pub l2_w: f64,
    /// `|||(I₁u_ref − u_h, I₂w_ref − w_h)|||`.
    pub supercloseness: f64,
    /// Energy error of the macro-mesh postprocessed solution.
    pub postprocessed_energy: Option<f64>,
    pub meta: RunMeta,
}

/// Errors of `solution` measured against `reference`.
pub fn error_report(
    spec: &ProblemSpec,
    solution: &PairField,
    reference: &ReferenceSolution,
    meta: RunMeta,
    with_postprocessing: bool,
) -> Result<ErrorReport> {
    let n = solution.mesh().n_cells();
    reference.check_dominates(solution.degree(), n)?;
    let parts = difference_parts(&reference.field, Some(solution));
    let interp = interpolate_field(&reference.field, solution.space());
    let sc = difference_parts(&interp, Some(solution)).energy(spec.beta, spec.delta);
    let postprocessed_energy = if with_postprocessing {
        let pp = postprocess(solution)?;
        Some(energy_distance(spec, &reference.field, &pp))
    } else {
        None
    };
    Ok(ErrorReport {
        energy_error: parts.energy(spec.beta, spec.delta),
        l2_u: parts.l2_u(),
        l2_w: parts.l2_w(),
        supercloseness: sc,
        postprocessed_energy,
        meta,
    })
}

/// Experimental order `log₂(e_coarse / e_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::InvalidInput(format!("EOC needs positive errors, got {e_coarse}, {e_fine}")));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Writes `q,N,energy,energy_rate,l2_u,l2_u_rate,l2_w,l2_w_rate` rows; rates
/// compare consecutive rows of equal `q` and are empty otherwise.
pub fn convergence_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("q,N,energy,energy_rate,l2_u,l2_u_rate,l2_w,l2_w_rate\n");
    let rate = |prev: Option<&ErrorReport>, f: fn(&ErrorReport) -> f64, cur: &ErrorReport| -> String {
        prev.and_then(|p| eoc(f(p), f(cur)).ok()).map_or(String::new(), |r| format!("{r:.2}"))
    };
    for (i, r) in reports.iter().enumerate() {
        let prev = i
            .checked_sub(1)
            .map(|j| &reports[j])
            .filter(|p| p.meta.q == r.meta.q && p.meta.n * 2 == r.meta.n);
        let _ = writeln!(
            out,
            "{},{},{:.5e},{},{:.5e},{},{:.5e},{}",
            r.meta.q,
            r.meta.n,
            r.energy_error,
            rate(prev, |e| e.energy_error, r),
            r.l2_u,
            rate(prev, |e| e.l2_u, r),
            r.l2_w,
            rate(prev, |e| e.l2_w, r),
        );
    }
    out
}
