use num_rational::Ratio;
use proptest::prelude::*;
use trapwalk::geometry::*;
use trapwalk::network::conductance_step_weights;
use trapwalk::network::Bias;
use trapwalk::walker::*;

fn fractal() -> FractalConfig {
    FractalConfig::new(2.0, 8).unwrap()
}

fn symmetric<C: Configuration>(cfg: &C, v: Vertex) -> Result<(), TestCaseError> {
    for u in cfg.neighbors(v).unwrap().iter() {
        prop_assert!(u.is_adjacent(v));
        prop_assert!(cfg.neighbors(*u).unwrap().contains(&v), "{u} lists no edge back to {v}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn fractal_neighbors_are_symmetric(x in 0i128..2_000_000, y in -380i128..380) {
        symmetric(&fractal(), Vertex::new(x, y))?;
    }

    #[test]
    fn warmup_neighbors_are_symmetric(x in -5i128..200_000, y in -2i128..4, alpha in 0.5f64..3.0) {
        symmetric(&WarmupConfig::new(alpha).unwrap(), Vertex::new(x, y))?;
    }

    #[test]
    fn shifted_oracle_commutes_with_translation(
        sx in 0i128..236_196, sy in -60i128..60, x in -1000i128..100_000, y in -150i128..150,
    ) {
        let base = fractal();
        let shifted = ShiftedConfig::new(base.clone(), sx, sy).unwrap();
        let w = Vertex::new(x, y);
        let got: Vec<Vertex> = shifted.neighbors(w).unwrap().iter().copied().collect();
        let want: Vec<Vertex> = base
            .neighbors(Vertex::new(x + sx, y - sy))
            .unwrap()
            .iter()
            .map(|u| Vertex::new(u.x - sx, u.y + sy))
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn step_rule_is_normalized_conductance(mask in 0u8..16, num in 2i64..50, den in 1i64..50) {
        prop_assume!(num > den);
        let beta = Ratio::new(num, den);
        let c = Vertex::new(-7, 11);
        let all = [c.right().unwrap(), c.left().unwrap(), c.up().unwrap(), c.down().unwrap()];
        let nb: Vec<Vertex> = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
        match step_distribution(c, &nb, beta) {
            StepDistribution::Stay => prop_assert!(nb.is_empty()),
            StepDistribution::Weights(w) => {
                prop_assert_eq!(w.iter().sum::<Ratio<i64>>(), Ratio::from_integer(1));
                prop_assert_eq!(w, conductance_step_weights(c, &nb, beta));
            }
        }
    }

    #[test]
    fn walks_are_reproducible_and_first_passages_increase(
        seed in any::<u64>(), stream in 0u64..1000, beta in 1.2f64..5.0, fractal_model in any::<bool>(),
    ) {
        let bias = Bias::new(beta).unwrap();
        let warm = WarmupConfig::new(1.0).unwrap();
        let frac = fractal();
        let (cfg, start): (&dyn Configuration, Vertex) =
            if fractal_model { (&frac, Vertex::new(0, 3)) } else { (&warm, Vertex::new(0, 0)) };
        let go = || {
            let mut rng = replicate_rng(seed, stream);
            run(start, cfg, &bias, 20_000, StopRule::Horizon, &WalkOptions::standard(), &mut rng).unwrap()
        };
        let (a, b) = (go(), go());
        prop_assert_eq!(a.final_state.position, b.final_state.position);
        prop_assert_eq!(&a.first_passage, &b.first_passage);
        prop_assert_eq!(a.trap_visits.len(), b.trap_visits.len());
        prop_assert_eq!(a.first_passage[0], 0);
        prop_assert!(a.first_passage.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(a.time_on_path + a.time_off_path, a.elapsed());
        let reached = a.start.x + a.first_passage.len() as i128 - 1;
        prop_assert!(a.final_state.position.x <= reached);
    }

    #[test]
    fn oracle_answers_are_deterministic(x in 0i128..1_000_000, y in -200i128..200) {
        let v = Vertex::new(x, y);
        let (a, b) = (fractal().neighbors(v).unwrap(), fractal().neighbors(v).unwrap());
        prop_assert_eq!(a.as_slice(), b.as_slice());
        prop_assert_eq!(fractal().locate(v).unwrap(), fractal().locate(v).unwrap());
    }
}
