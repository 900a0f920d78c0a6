//! Closed forms against the absorbing-chain solver on finite truncations.

use trapwalk::geometry::*;
use trapwalk::network::*;

const BETAS: [f64; 3] = [1.5, 2.0, 3.0];

#[test]
fn core_hit_closed_form_matches_linear_solve() {
    for beta in BETAS {
        let bias = Bias::new(beta).unwrap();
        for e in [1u64, 2, 5] {
            let trap = TrapSpec::new(Vertex::new(40, 0), e as i128, 4, 1).unwrap();
            let edges = trap_edges(&trap).unwrap();
            let sol = absorbing_solve(
                &edges,
                &bias,
                &[trap.anchor, trap.core_entry()],
                &Reward::HitProbability(vec![trap.core_entry()]),
            )
            .unwrap();
            assert!(sol.residual < 1e-10);
            let got = sol.get(trap.mouth()).unwrap();
            let want = (beta - 1.0) / (beta.powi(e as i32 + 1) + beta - 2.0);
            assert!((got - want).abs() < 1e-10, "beta {beta} e {e}: {got} vs {want}");
            assert!((hit_core_probability(e, &bias) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn anchor_escape_matches_linear_solve_on_truncated_line() {
    let cfg = WarmupConfig::new(1.0).unwrap();
    for beta in BETAS {
        let bias = Bias::new(beta).unwrap();
        let anchor = Vertex::new(cfg.anchor_x(2).unwrap(), 0);
        // Far enough right that the missing tail is below 1e-12.
        let far = anchor.x + 120;
        let edges = window_edges(&cfg, &Window::new(0, far, -1, 3).unwrap()).unwrap();
        let end = Vertex::new(far, 0);
        let sol = absorbing_solve(&edges, &bias, &[anchor, end], &Reward::HitProbability(vec![end])).unwrap();
        let nb = cfg.neighbors(anchor).unwrap();
        let weights = conductance_step_weights(anchor, nb.as_slice(), beta);
        let solved: f64 = nb.iter().zip(&weights).map(|(u, w)| w * sol.get(*u).unwrap()).sum();
        let closed = (beta - 1.0) / (beta + 2.0);
        assert!((solved - closed).abs() < 1e-10, "beta {beta}: {solved} vs {closed}");
        let interval = escape_probability(anchor, &cfg, &bias, 200).unwrap();
        assert!(interval.contains(solved) || (interval.midpoint() - solved).abs() < 1e-10);
    }
}

#[test]
fn path_resistance_matches_series_sum() {
    let cfg = WarmupConfig::naked();
    for beta in BETAS {
        let bias = Bias::new(beta).unwrap();
        let r = effective_resistance_path(Vertex::new(2, 0), Vertex::new(9, 0), &cfg, &bias).unwrap();
        let want: f64 = (3..=9).map(|i| beta.powi(-i)).sum();
        assert!((r - want).abs() < 1e-14);
    }
    let bias = Bias::new(2.0).unwrap();
    let r = effective_resistance_path(Vertex::new(0, 0), Vertex::new(3, 0), &cfg, &bias).unwrap();
    assert!((r - 0.875).abs() < 1e-15);
}

#[test]
fn stationary_return_time_matches_solver_on_fractal_cone() {
    // Expected return time to a vertex equals one plus the mean hitting
    // time from its neighbors, weighted by the step law.
    let cfg = FractalConfig::new(2.0, 8).unwrap();
    let edges = window_edges(&cfg, &Window::new(0, 11, 0, 12).unwrap()).unwrap();
    let bias = Bias::new(2.0).unwrap();
    let v = Vertex::new(11, 6);
    let sol = absorbing_solve(&edges, &bias, &[v], &Reward::ExpectedTime).unwrap();
    let nb: Vec<Vertex> = cfg
        .neighbors(v)
        .unwrap()
        .iter()
        .copied()
        .filter(|u| edges.iter().any(|e| e.other(v) == Some(*u)))
        .collect();
    let weights = conductance_step_weights(v, &nb, 2.0);
    let via_solver: f64 = 1.0 + nb.iter().zip(&weights).map(|(u, w)| w * sol.get(*u).unwrap()).sum::<f64>();
    let direct = stationary_return_time(&edges, &bias, v).unwrap();
    assert!((via_solver - direct).abs() < 1e-9 * direct, "{via_solver} vs {direct}");
}
