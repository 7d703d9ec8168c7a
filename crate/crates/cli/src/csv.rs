//! Bit-stable CSV emission.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips `f64` exactly; lines end with `\n`; identical inputs produce
//! identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use henle_core::diagnostics::{ConvergenceReport, DiagnosticSeries};
use henle_core::{Trajectory3, Trajectory5};

/// 17-significant-digit scientific notation; exact `f64` round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `fields.csv`: one row per snapshot and cell, `t,x,u1,u2,q1,q2,u0`.
pub fn write_fields_full(traj: &Trajectory5, path: &Path) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,x,u1,u2,q1,q2,u0")?;
    let g = &traj.grid;
    for s in &traj.snaps {
        for i in 0..g.n {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt_f64(s.t),
                fmt_f64(g.center(i)),
                fmt_f64(s.u1[i]),
                fmt_f64(s.u2[i]),
                fmt_f64(s.q1[i]),
                fmt_f64(s.q2[i]),
                fmt_f64(s.u0[i]),
            )?;
        }
    }
    w.flush()
}

/// Reduced-model `fields.csv`: the epithelial columns stay empty.
pub fn write_fields_reduced(traj: &Trajectory3, path: &Path) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,x,u1,u2,q1,q2,u0")?;
    let g = &traj.grid;
    for s in &traj.snaps {
        for i in 0..g.n {
            writeln!(
                w,
                "{},{},{},{},,,{}",
                fmt_f64(s.t),
                fmt_f64(g.center(i)),
                fmt_f64(s.u1[i]),
                fmt_f64(s.u2[i]),
                fmt_f64(s.u0[i]),
            )?;
        }
    }
    w.flush()
}

/// `boundary.csv`: per-step boundary traces, `t,u1_at_L,u2_at_0`.
pub fn write_boundary(
    boundary: &[henle_core::TraceSample],
    path: &Path,
) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,u1_at_L,u2_at_0")?;
    for tr in boundary {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(tr.t),
            fmt_f64(tr.u1_at_l),
            fmt_f64(tr.u2_at_0)
        )?;
    }
    w.flush()
}

/// `invariants.csv`: per-snapshot diagnostics,
/// `t,H,balance_residual,min_val,max_val,tv_total`.
pub fn write_invariants(series: &DiagnosticSeries, path: &Path) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "t,H,balance_residual,min_val,max_val,tv_total")?;
    for j in 0..series.t.len() {
        let tv_total: f64 = series.tv_x[j].iter().sum();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(series.t[j]),
            fmt_f64(series.h[j]),
            fmt_f64(series.balance_residual[j]),
            fmt_f64(series.min_val[j]),
            fmt_f64(series.max_val[j]),
            fmt_f64(tv_total),
        )?;
    }
    w.flush()
}

/// `convergence.csv`: one row per relaxation parameter,
/// `eps,gap_q1u1,gap_q2u2,dist_u1,dist_u2,dist_u0`, followed by a
/// comment row with the fitted orders (empty where no fit exists).
pub fn write_convergence(report: &ConvergenceReport, path: &Path) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "eps,gap_q1u1,gap_q2u2,dist_u1,dist_u2,dist_u0")?;
    for (j, eps) in report.eps_list.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(*eps),
            fmt_f64(report.gap_q1u1[j]),
            fmt_f64(report.gap_q2u2[j]),
            fmt_f64(report.dist_u1[j]),
            fmt_f64(report.dist_u2[j]),
            fmt_f64(report.dist_u0[j]),
        )?;
    }
    let opt = |o: Option<f64>| o.map(fmt_f64).unwrap_or_default();
    writeln!(
        w,
        "# fitted_order,{},{},{},{},{}",
        opt(report.order_gap_q1u1),
        opt(report.order_gap_q2u2),
        opt(report.order_dist_u1),
        opt(report.order_dist_u2),
        opt(report.order_dist_u0),
    )?;
    w.flush()
}

/// `crossval.csv`: a single summary row for a solver cross-validation.
pub fn write_crossval(
    eps: f64,
    n: usize,
    window_steps: usize,
    l1_distance: f64,
    path: &Path,
) -> std::io::Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "eps,n,window_steps,l1_distance")?;
    writeln!(
        w,
        "{},{},{},{}",
        fmt_f64(eps),
        n,
        window_steps,
        fmt_f64(l1_distance)
    )?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use henle_core::grid::Grid1D;
    use henle_core::Params;

    #[test]
    fn floats_round_trip_exactly() {
        for v in [
            0.0,
            -0.0,
            1.0,
            -1.0 / 3.0,
            6.02e23,
            5e-324,
            f64::MAX,
            0.1 + 0.2,
            (-2.0f64 / 3.0).exp(),
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn empty_trajectory_writes_header_only() {
        let p = Params::default();
        let g = Grid1D::new(&p, 4).unwrap();
        let traj = Trajectory5 { snaps: Vec::new(), boundary: Vec::new(), grid: g };
        let dir = std::env::temp_dir().join("henle_csv_test_header");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("fields.csv");
        write_fields_full(&traj, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,x,u1,u2,q1,q2,u0\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
