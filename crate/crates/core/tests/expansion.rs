use shiftbeam::greens::{expansion_rows, stability_bound_check, GreensParams, GreensVariant};

fn rows(eps: f64) -> Vec<shiftbeam::greens::CheckRow> {
    let p = GreensParams::new(1.0, 1.0, eps, GreensVariant::M1).unwrap();
    expansion_rows(&p, 1.0).unwrap()
}

#[test]
fn single_moments_converge_monotonically() {
    let sweeps: Vec<_> = [1e-2, 1e-3, 1e-4].iter().map(|&e| rows(e)).collect();
    for i in 0..8 {
        let errs: Vec<f64> = sweeps.iter().map(|r| r[i].relative_error).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{}: {errs:?}", sweeps[0][i].name);
        assert!(errs[2] <= 1e-2, "{}: {errs:?}", sweeps[0][i].name);
    }
}

#[test]
fn double_moments_and_midpoint_load() {
    let r = rows(1e-4);
    for row in &r[8..13] {
        assert!(row.relative_error <= 2e-2, "{row:?}");
    }
}

#[test]
fn load_bounds() {
    let params: Vec<_> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| GreensParams::new(1.0, 2.0, e, GreensVariant::M1).unwrap())
        .collect();
    let rep = stability_bound_check(&params).unwrap();
    for i in 0..3 {
        assert!(rep.min_load[i] >= -1e-10);
        assert!(rep.max_excess[i] <= 1e-8);
        assert!(rep.scaled_abs_second[i] < 1.0 && rep.scaled_abs_third[i] < 1.0);
    }
}
