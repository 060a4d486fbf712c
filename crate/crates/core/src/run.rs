//! Experiment drivers behind the command-line tool.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{decomposition_compare, norm_scalings, solve_reduced, ComparisonReport, Decomposition, ReducedSolution, ScalingReport, MIN_REDUCED_CELLS};
use crate::config::RunConfig;
use crate::errors::{eoc, error_report, ErrorReport, ReferenceCache, ReferenceSolution, RunMeta};
use crate::fem::{assemble, solve, DiscreteSpace, PairField};
use crate::greens::{expansion_rows, residual_row, CheckRow, GreensVariant};
use crate::mesh::{Mesh1D, MeshSpec};
use crate::problem::ProblemSpec;
use crate::{Error, Result};

/// The mesh combinations compared side by side.
pub const COMPARED_MESHES: [MeshSpec; 4] = [
    MeshSpec::BS_BS,
    MeshSpec::BS_SHISHKIN,
    MeshSpec::BS_WEAKEQ,
    MeshSpec::BS_WEAK_SHISHKIN,
];

/// Reference solution for `spec` as configured (BS mesh everywhere,
/// `σ = q_ref + 1`), read from or written to the cache when one is set.
pub fn reference(cfg: &RunConfig, spec: &ProblemSpec) -> Result<ReferenceSolution> {
    let r = &cfg.reference;
    let sigma = r.q_ref as f64 + 1.0;
    match &r.cache_dir {
        Some(dir) => ReferenceCache::new(dir).load_or_compute(spec, r.q_ref, r.n_ref, MeshSpec::BS_BS, sigma),
        None => crate::errors::compute_reference_sigma(spec, r.q_ref, r.n_ref, MeshSpec::BS_BS, sigma),
    }
}

/// Solves on an `n`-cell mesh of `family` with degree `q`. `sigma` replaces
/// the configured σ when given.
pub fn solve_on(cfg: &RunConfig, spec: &ProblemSpec, family: MeshSpec, q: usize, n: usize, sigma: Option<f64>) -> Result<PairField> {
    let mut params = cfg.mesh_params(spec, n, q);
    if let Some(s) = sigma {
        params = params.with_sigma(s);
    }
    let mesh = Mesh1D::build(family, params)?;
    let space = DiscreteSpace::new(mesh, q, spec.m)?;
    solve(&assemble(spec, &space)?)
}

/// Error reports for every `(family, q, N)` of the grid, ordered by family,
/// then q, then N. Runs in parallel; the result does not depend on the
/// scheduling.
pub fn error_grid(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    families: &[MeshSpec],
    reference: &ReferenceSolution,
    postprocessing: bool,
) -> Result<Vec<ErrorReport>> {
    let mut jobs = Vec::new();
    for &fam in families {
        for &q in &cfg.q {
            for &n in &cfg.n {
                jobs.push((fam, q, n));
            }
        }
    }
    jobs.par_iter()
        .map(|&(fam, q, n)| {
            reference.check_dominates(q, n)?;
            // postprocessing runs on σ = q + 2 unless σ is pinned
            let sigma = cfg.sigma.unwrap_or(q as f64 + if postprocessing { 2.0 } else { 1.0 });
            let uh = solve_on(cfg, spec, fam, q, n, Some(sigma))?;
            let meta = RunMeta {
                example: spec.name.clone(),
                epsilon: spec.epsilon,
                m: spec.m.as_int(),
                q,
                n,
                mesh: fam.label(),
                sigma,
            };
            error_report(spec, &uh, reference, meta, postprocessing)
        })
        .collect()
}

fn rate(prev: Option<f64>, cur: f64) -> String {
    prev.and_then(|p| eoc(p, cur).ok()).map_or(String::new(), |r| format!("{r:.2}"))
}

fn previous<'a>(reports: &'a [ErrorReport], i: usize) -> Option<&'a ErrorReport> {
    let r = &reports[i];
    i.checked_sub(1)
        .map(|j| &reports[j])
        .filter(|p| p.meta.q == r.meta.q && p.meta.mesh == r.meta.mesh && p.meta.n * 2 == r.meta.n)
}

/// Energy errors per mesh family side by side:
/// `N,<label>,<label>_rate,...` for the families in order of appearance.
pub fn mesh_table_csv(reports: &[ErrorReport]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    let mut ns: Vec<usize> = Vec::new();
    for r in reports {
        if !labels.contains(&r.meta.mesh.as_str()) {
            labels.push(&r.meta.mesh);
        }
        if !ns.contains(&r.meta.n) {
            ns.push(r.meta.n);
        }
    }
    let mut out = String::from("q,N");
    for l in &labels {
        let _ = write!(out, ",{l},{l}_rate");
    }
    out.push('\n');
    let mut qs: Vec<usize> = reports.iter().map(|r| r.meta.q).collect();
    qs.dedup();
    for q in qs {
        for &n in &ns {
            let _ = write!(out, "{q},{n}");
            for l in &labels {
                let find = |n: usize| reports.iter().find(|r| r.meta.q == q && r.meta.n == n && r.meta.mesh == *l);
                match find(n) {
                    Some(r) => {
                        let prev = find(n / 2).map(|p| p.energy_error);
                        let _ = write!(out, ",{:.5e},{}", r.energy_error, rate(prev, r.energy_error));
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// `q,N,energy,...,supercloseness,...,postprocessed,...` with rates.
pub fn postprocess_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from("q,N,energy,energy_rate,supercloseness,supercloseness_rate,postprocessed,postprocessed_rate\n");
    for (i, r) in reports.iter().enumerate() {
        let prev = previous(reports, i);
        let pp = r.postprocessed_energy.unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{},{},{:.5e},{},{:.5e},{},{:.5e},{}",
            r.meta.q,
            r.meta.n,
            r.energy_error,
            rate(prev.map(|p| p.energy_error), r.energy_error),
            r.supercloseness,
            rate(prev.map(|p| p.supercloseness), r.supercloseness),
            pp,
            rate(prev.and_then(|p| p.postprocessed_energy), pp),
        );
    }
    out
}

/// Rates of consecutive mesh doublings, selected by `pick`.
pub fn rates(reports: &[ErrorReport], pick: fn(&ErrorReport) -> Option<f64>) -> Vec<f64> {
    (0..reports.len())
        .filter_map(|i| {
            let p = previous(reports, i)?;
            eoc(pick(p)?, pick(&reports[i])?).ok()
        })
        .collect()
}

/// Greens verification rows for every configured ε. The hinged-end
/// variant has no leading constants and only yields residual rows.
pub fn greens_rows(cfg: &RunConfig) -> Result<Vec<CheckRow>> {
    let per_eps: Result<Vec<Vec<CheckRow>>> = cfg
        .epsilons
        .par_iter()
        .map(|&eps| {
            let p = cfg.greens_params(eps)?;
            let mut rows = Vec::new();
            if p.variant == GreensVariant::M1 {
                rows.extend(expansion_rows(&p, cfg.greens.d)?);
            }
            rows.push(residual_row(&p)?);
            Ok(rows)
        })
        .collect();
    Ok(per_eps?.into_iter().flatten().collect())
}

pub fn check_rows_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("name,epsilon,value,target,relative_error\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.5e},{:.5e},{:.5e},{:.5e}", r.name, r.epsilon, r.value, r.target, r.relative_error);
    }
    out
}

/// One decomposition run: the layer terms, the discrete solution they are
/// compared with and the comparison.
pub struct DecomposeRun {
    pub decomposition: Decomposition,
    pub solution: PairField,
    pub comparison: ComparisonReport,
}

pub fn reduced(spec: &ProblemSpec) -> Result<Arc<ReducedSolution>> {
    if !spec.is_constant_coefficient() {
        return Err(Error::Assumption("decomposition needs constant coefficients".into()));
    }
    Ok(Arc::new(solve_reduced(spec, MIN_REDUCED_CELLS)?))
}

/// Builds the decomposition at `spec.epsilon` and compares it with the
/// solution for the first configured `(q, N)`.
pub fn decompose(cfg: &RunConfig, spec: &ProblemSpec, s0: Arc<ReducedSolution>) -> Result<DecomposeRun> {
    let decomposition = Decomposition::build(spec, s0)?;
    let family = cfg.mesh_spec()?;
    let solution = solve_on(cfg, spec, family, cfg.q[0], cfg.n[0], None)?;
    let comparison = decomposition_compare(&solution, &decomposition, cfg.samples_per_cell)?;
    Ok(DecomposeRun {
        decomposition,
        solution,
        comparison,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeSummary {
    pub comparison: ComparisonReport,
    /// Comparison at ε/10.
    pub finer: ComparisonReport,
    /// `max|u_h − V₀|` at ε over the same at ε/10.
    pub ratio: f64,
    pub scalings: Option<ScalingReport>,
}

/// Comparison at ε and ε/10, plus the norm scalings over the configured ε
/// list when `sweep` is set.
pub fn decompose_summary(cfg: &RunConfig, spec: &ProblemSpec, s0: Arc<ReducedSolution>, first: &DecomposeRun, sweep: bool) -> Result<DecomposeSummary> {
    let finer_spec = spec.with_epsilon(spec.epsilon / 10.0)?;
    let finer = decompose(cfg, &finer_spec, s0.clone())?.comparison;
    let scalings = if sweep {
        Some(norm_scalings(spec, s0, &cfg.epsilons)?)
    } else {
        None
    };
    Ok(DecomposeSummary {
        ratio: first.comparison.max_difference / finer.max_difference,
        comparison: first.comparison.clone(),
        finer,
        scalings,
    })
}

/// `# key,value...` lines appended to the components CSV.
pub fn summary_lines(s: &DecomposeSummary) -> String {
    let mut out = String::new();
    for c in [&s.comparison, &s.finer] {
        let _ = writeln!(
            out,
            "# compare,epsilon={:.5e},max_difference={:.5e},at={:.5e},inner_peak={:.5e}",
            c.epsilon, c.max_difference, c.at, c.inner_peak
        );
    }
    let _ = writeln!(out, "# ratio,{:.5e}", s.ratio);
    if let Some(sc) = &s.scalings {
        for ((e, b), w) in sc.epsilons.iter().zip(&sc.boundary_norms).zip(&sc.inner_norms) {
            let _ = writeln!(out, "# norms,epsilon={e:.5e},boundary={b:.5e},inner={w:.5e}");
        }
        let _ = writeln!(out, "# slopes,boundary={:.4},inner={:.4}", sc.boundary_slope, sc.inner_slope);
    }
    out
}
