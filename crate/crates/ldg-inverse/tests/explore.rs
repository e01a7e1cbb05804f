//! Temporary exploration harness (run with --ignored --nocapture).

use std::sync::Arc;

use ldg_inverse::mesh::build_unit_square_mesh;
use ldg_inverse::model::{tangent_bc, vortex_bc, QField};
use ldg_inverse::solver::{
    branch_seed, classify_branch, solve_branch, BranchSeed, Discretization, SolverConfig,
};

fn corners(q: &QField) -> Vec<(f64, f64, f64, f64)> {
    let mesh = &q.mesh;
    let targets = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let mut out = Vec::new();
    for c in targets {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for i in 0..mesh.n_nodes() {
            if mesh.is_boundary(i) {
                continue;
            }
            let p = mesh.nodes[i];
            let d = (p[0] - c[0]).hypot(p[1] - c[1]);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        let p = mesh.nodes[best];
        out.push((p[0], p[1], q.q11[best], q.q12[best]));
    }
    out
}

#[test]
#[ignore]
fn probe_branches() {
    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = tangent_bc(0.06).unwrap();
    let cfg = SolverConfig::default();
    for (kind, alpha, beta) in [
        (BranchSeed::D1, 0.004, 1.0),
        (BranchSeed::D2, 0.004, 1.0),
        (BranchSeed::R1, 0.004, 1.0),
        (BranchSeed::R2, 0.004, 1.0),
        (BranchSeed::R3, 0.004, 1.0),
        (BranchSeed::R4, 0.004, 1.0),
        (BranchSeed::Wors, 0.004, 1.0),
        (BranchSeed::D1, 0.004, 0.6),
        (BranchSeed::R4, 0.004, 0.6),
        (BranchSeed::D1, 0.0008, 1.4),
        (BranchSeed::R4, 0.0008, 1.4),
        (BranchSeed::D1, 10.0, 1.0),
    ] {
        let t0 = std::time::Instant::now();
        match solve_branch(&disc, &kind, alpha, beta, &bc, &cfg) {
            Ok(rep) => {
                println!(
                    "{:>4} a={:<7} b={:<4} iters={} class={:?} mismatch={} dt={:?}",
                    kind.name(),
                    alpha,
                    beta,
                    rep.iterations,
                    rep.branch,
                    rep.branch_mismatch,
                    t0.elapsed()
                );
                println!("   residuals: {:?}", rep.residual_history);
                for (x, y, a, b) in corners(&rep.solution) {
                    println!("   corner ({x:.3},{y:.3}): q11={a:+.6e} q12={b:+.6e}");
                }
                let seed = branch_seed(&kind, &mesh, &bc);
                let e_seed = disc.energy(&seed, alpha, beta);
                let e_sol = disc.energy(&rep.solution, alpha, beta);
                println!("   energy seed={e_seed:.6} sol={e_sol:.6}");
                println!("   max|q12| = {:.3e}", rep.solution.q12.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
            Err(e) => println!("{:>4} a={alpha} b={beta}: FAILED {e}", kind.name()),
        }
    }
}

#[test]
#[ignore]
fn probe_acceptance() {
    use ldg_inverse::bayes::{
        error_variances, log_posterior, Observation, PosteriorTarget, Prior,
    };
    use ldg_inverse::bayes::ForwardModel;
    use ldg_inverse::mcmc::{acceptance_rate, run_chain, ProposalConfig};
    use ldg_inverse::stats::{discard_burn_in, summarize, CiLevel};

    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = tangent_bc(0.06).unwrap();
    let cfg = SolverConfig::default();
    let rep = solve_branch(&disc, &BranchSeed::D1, 0.004, 1.0, &bc, &cfg).unwrap();
    let obs = Observation { field: rep.solution, provenance: None };
    let err = error_variances(&obs).unwrap();
    println!("sigma11^2 = {:.6e}, sigma12^2 = {:.6e}", err.sigma11_sq, err.sigma12_sq);

    // likelihood curvature scan around alpha*
    let mut fwd = ForwardModel::new(&disc, &bc, cfg, &obs, Some(1.0));
    for a in [0.0035, 0.0038, 0.004, 0.0042, 0.0045, 0.005] {
        let lp = log_posterior(&Prior::UniformPositive, &obs, &err, &[a], &mut fwd);
        println!("  loglik({a}) = {lp:.4}");
    }

    for (label, sigma, prior) in [
        ("UP s=0.001", 0.001, Prior::UniformPositive),
        ("UP s=0.0005", 0.0005, Prior::UniformPositive),
        (
            "GP s=0.001",
            0.001,
            Prior::GaussianTruncated { center: vec![0.004], sigma: vec![0.0005] },
        ),
        (
            "GP s=0.0005",
            0.0005,
            Prior::GaussianTruncated { center: vec![0.004], sigma: vec![0.0005] },
        ),
    ] {
        let t0 = std::time::Instant::now();
        let mut target = PosteriorTarget {
            prior,
            obs: &obs,
            err,
            fwd: ForwardModel::new(&disc, &bc, cfg, &obs, Some(1.0)),
        };
        let chain = run_chain(
            &mut target,
            &[0.005],
            3000,
            ProposalConfig::Univariate { sigma },
            17,
        )
        .unwrap();
        let seg = discard_burn_in(&chain, 200).unwrap();
        let s = summarize(&seg, 15, CiLevel::P95).unwrap();
        println!(
            "{label}: acc={:.1}% mean={:.7} median={:.7} std={:.7} gamma={:.3e} ci=({:.6},{:.6}) solves={} fails={} dt={:?}",
            100.0 * acceptance_rate(&chain),
            s.mean[0],
            s.median[0],
            s.std_dev[0],
            s.gamma_sq[0].sqrt(),
            s.ci[0].0,
            s.ci[0].1,
            target.fwd.n_solve,
            target.fwd.n_fail,
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_acceptance_2d() {
    use ldg_inverse::bayes::{error_variances, Observation, PosteriorTarget, Prior};
    use ldg_inverse::bayes::ForwardModel;
    use ldg_inverse::mcmc::{acceptance_rate, run_chain, ProposalConfig};
    use ldg_inverse::stats::{discard_burn_in, summarize, CiLevel};

    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = tangent_bc(0.06).unwrap();
    let cfg = SolverConfig::default();

    for (branch, a_star, b_star, sig, init) in [
        (BranchSeed::D1, 0.004, 0.6, (0.001, 0.1), (0.01, 0.5)),
        (BranchSeed::R4, 0.004, 0.6, (0.001, 0.1), (0.01, 0.5)),
        (BranchSeed::D1, 0.0008, 1.4, (0.005, 0.1), (0.005, 0.8)),
        (BranchSeed::R4, 0.0008, 1.4, (0.005, 0.1), (0.005, 0.8)),
    ] {
        let rep = solve_branch(&disc, &branch, a_star, b_star, &bc, &cfg).unwrap();
        let obs = Observation { field: rep.solution, provenance: None };
        let err = error_variances(&obs).unwrap();
        let t0 = std::time::Instant::now();
        let mut target = PosteriorTarget {
            prior: Prior::UniformPositive,
            obs: &obs,
            err,
            fwd: ForwardModel::new(&disc, &bc, cfg, &obs, None),
        };
        let chain = run_chain(
            &mut target,
            &[init.0, init.1],
            3000,
            ProposalConfig::Bivariate {
                sigma_alpha: sig.0,
                sigma_beta: sig.1,
                rho: 0.8,
            },
            23,
        )
        .unwrap();
        let seg = discard_burn_in(&chain, 200).unwrap();
        let s = summarize(&seg, 15, CiLevel::P95).unwrap();
        println!(
            "{} ({a_star},{b_star}) UP: acc={:.1}% mean=({:.7},{:.5}) std=({:.2e},{:.2e}) rho={:.4} fails={} dt={:?}",
            branch.name(),
            100.0 * acceptance_rate(&chain),
            s.mean[0],
            s.mean[1],
            s.std_dev[0],
            s.std_dev[1],
            s.correlation.unwrap(),
            target.fwd.n_fail,
            t0.elapsed()
        );
    }
}

#[test]
#[ignore]
fn probe_r4_ridge() {
    use ldg_inverse::bayes::{error_variances, Observation, PosteriorTarget, Prior};
    use ldg_inverse::bayes::{log_posterior, ForwardModel};
    use ldg_inverse::mcmc::{acceptance_rate, run_chain, ProposalConfig};
    use ldg_inverse::stats::{discard_burn_in, summarize, CiLevel};

    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = tangent_bc(0.06).unwrap();
    let cfg = SolverConfig::default();
    let rep = solve_branch(&disc, &BranchSeed::R4, 0.004, 0.6, &bc, &cfg).unwrap();
    let obs = Observation { field: rep.solution, provenance: None };
    let err = error_variances(&obs).unwrap();

    // scan the ridge the short chain wandered to
    let mut fwd = ForwardModel::new(&disc, &bc, cfg, &obs, None);
    for (a, b) in [
        (0.004, 0.6),
        (0.005, 0.61),
        (0.006, 0.62),
        (0.008, 0.63),
        (0.0098, 0.635),
        (0.01, 0.5),
        (0.012, 0.65),
        (0.02, 0.7),
    ] {
        let t0 = std::time::Instant::now();
        let lp = log_posterior(&Prior::UniformPositive, &obs, &err, &[a, b], &mut fwd);
        println!("  loglik({a}, {b}) = {lp:.3}  dt={:?}", t0.elapsed());
    }

    // full-length chain with the published settings
    let mut target = PosteriorTarget {
        prior: Prior::UniformPositive,
        obs: &obs,
        err,
        fwd: ForwardModel::new(&disc, &bc, cfg, &obs, None),
    };
    let t0 = std::time::Instant::now();
    let chain = run_chain(
        &mut target,
        &[0.01, 0.5],
        10_000,
        ProposalConfig::Bivariate { sigma_alpha: 0.001, sigma_beta: 0.1, rho: 0.8 },
        23,
    )
    .unwrap();
    println!("full R4 chain: dt={:?} acc={:.1}%", t0.elapsed(), 100.0 * acceptance_rate(&chain));
    for k in (0..10_000).step_by(500) {
        println!("  step {k}: ({:.6}, {:.4})", chain.samples[k][0], chain.samples[k][1]);
    }
    let seg = discard_burn_in(&chain, 200).unwrap();
    let s = summarize(&seg, 15, CiLevel::P95).unwrap();
    println!(
        "stats: mean=({:.7},{:.5}) median=({:.7},{:.5}) rho={:.4} fails={}",
        s.mean[0], s.mean[1], s.median[0], s.median[1],
        s.correlation.unwrap(),
        target.fwd.n_fail
    );
}

#[test]
#[ignore]
fn probe_quadrature_oracle() {
    use ldg_inverse::bayes::{
        error_variances, log_posterior, quadrature_moments, Observation, Prior, ForwardModel,
    };

    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = tangent_bc(0.06).unwrap();
    let cfg = SolverConfig::default();
    let rep = solve_branch(&disc, &BranchSeed::D1, 0.004, 1.0, &bc, &cfg).unwrap();
    let obs = Observation { field: rep.solution, provenance: None };
    let err = error_variances(&obs).unwrap();
    let mut fwd = ForwardModel::new(&disc, &bc, cfg, &obs, Some(1.0));
    let grid: Vec<f64> = (0..200).map(|i| 0.002 + i as f64 * (0.004 / 199.0)).collect();
    let t0 = std::time::Instant::now();
    let q = quadrature_moments(&grid, |a| {
        log_posterior(&Prior::UniformPositive, &obs, &err, &[a], &mut fwd)
    });
    println!(
        "UP quadrature: mean={:.7} median={:.7} mass_escape={} dt={:?}",
        q.mean, q.median, q.mass_escape, t0.elapsed()
    );
    println!("true mean bias = {:+.4}%", 100.0 * (q.mean - 0.004) / 0.004);
}

#[test]
#[ignore]
fn probe_vortex() {
    let mesh = Arc::new(build_unit_square_mesh(32).unwrap());
    let disc = Discretization::new(mesh.clone());
    let bc = vortex_bc(0.25, 0.75).unwrap();
    let cfg = SolverConfig::default();
    for alpha in [1.0, 0.1, 0.01, 5.0, 0.001] {
        let seed_field = QField::from_fn(mesh.clone(), |x, y| {
            let dx = x - 0.25;
            let dy = y - 0.75;
            let r = dx.hypot(dy);
            if r < 1e-12 {
                [0.0, 0.0]
            } else {
                [dx / r, dy / r]
            }
        });
        let t0 = std::time::Instant::now();
        match solve_branch(
            &disc,
            &BranchSeed::FromField(seed_field),
            alpha,
            1.0,
            &bc,
            &cfg,
        ) {
            Ok(rep) => println!(
                "vortex a={alpha}: iters={} class={:?} dt={:?} residuals={:?}",
                rep.iterations,
                rep.branch,
                t0.elapsed(),
                rep.residual_history.last()
            ),
            Err(e) => println!("vortex a={alpha}: FAILED {e}"),
        }
    }
    let _ = classify_branch as fn(&QField) -> _;
}
