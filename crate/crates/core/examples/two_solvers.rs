//! Runs the same problem through the grid stepper and the mild-solution
//! solver and prints their space-time distance alongside the relaxation gap.

use henle_core::characteristics::PicardConfig;
use henle_core::diagnostics::{cross_validate, l1_dist};
use henle_core::grid::{run_full, Grid1D};
use henle_core::{presets, Params};

fn main() {
    let p = Params { eps: 0.05, ..Params::default() };
    let g = Grid1D::new(&p, 200).expect("desk grid");
    let d = presets::bump(p.length, p.t_final);

    let traj = run_full(&p, &d, &g, 20).expect("grid run");
    println!("t        |q1-u1|_L1   |q2-u2|_L1");
    for s in &traj.snaps {
        println!(
            "{:6.3}   {:.4e}   {:.4e}",
            s.t,
            l1_dist(&s.q1, &s.u1, g.dx),
            l1_dist(&s.q2, &s.u2, g.dx)
        );
    }

    let cfg = PicardConfig::for_params(&p, &g).expect("contraction window");
    let dist = cross_validate(&p, &d, &g, &cfg).expect("cross validation");
    println!("\nsolver cross-validation: space-time L1 distance = {dist:.4e} (dx = {})", g.dx);
}
