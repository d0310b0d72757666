use perturbqp::asqp::{active_set_solve, crossover_from};
use perturbqp::gen::{generate, GenParams, ProblemKind};
use perturbqp::ipm::{solve, SolveOptions, SolveStatus};

/// Small QTS1 instances with degenerate optimal vertices. These used to cycle
/// between zero-length releases or stall on a rank-deficient face.
const DEGENERATE_SEEDS: [u64; 6] = [3, 179, 290, 327, 364, 377];

#[test]
fn degenerate_vertices_terminate() {
    for seed in DEGENERATE_SEEDS {
        let params = GenParams {
            seed,
            m_range: (4, 8),
            n_range: (8, 16),
            ..GenParams::default()
        };
        let qp = generate(ProblemKind::Qts1, &params).unwrap().qp;
        let reference = active_set_solve(&qp, None).unwrap();
        let tight = SolveOptions {
            mu_tolerance: 1e-11,
            ..SolveOptions::default().unperturbed()
        };
        let ipm = solve(&qp, &tight).unwrap();
        assert_eq!(ipm.status, SolveStatus::Converged, "seed {seed}");
        let (a, b) = (
            qp.objective(&reference.x),
            qp.objective(&ipm.final_iterate.x),
        );
        assert!(
            (a - b).abs() <= 1e-8 * (1.0 + a.abs()),
            "seed {seed}: {a} vs {b}"
        );

        for opts in [
            SolveOptions::default(),
            SolveOptions::default().unperturbed(),
        ] {
            let r = solve(&qp, &opts).unwrap();
            let out = crossover_from(
                &qp,
                &r.prediction.active,
                &reference.x,
                Some(&r.final_iterate.x),
            )
            .unwrap();
            assert!(out.score.feasibility_error <= 1e-8, "seed {seed}");
        }
    }
}
