use platesize::config::ExperimentConfig;
use platesize::couple::CoupleField;
use platesize::geometry::{geometric_constants, k_of_rho, make_domain, DomainSpec};
use platesize::mesh::{generate_mesh, MeshOptions};
use platesize::morley::MorleySpace;
use platesize::plate::{solve_problem, Material};
use platesize::size::{linear_fit, verify_energy_lemma, EnergyBudget};
use platesize::smallness::{frequency_scan, three_spheres_fit, ThreeSpheresSample};
use platesize::tensor::{JumpSign, PlateTensorField, TensorField};
use proptest::prelude::*;

fn budget(w: f64, w0: f64, hess_d: f64, sign: JumpSign) -> EnergyBudget {
    EnergyBudget {
        w,
        w0,
        hess_d,
        hess_sup_d: hess_d,
        xi0: 0.1,
        xi1: 0.4,
        eta0: 0.5,
        eta1: 2.0,
        sign,
    }
}

proptest! {
    #[test]
    fn rel_gap_is_scale_invariant(w0 in 0.1f64..10.0, frac in 0.0f64..0.9, t in 1e-3f64..1e3) {
        let b = budget(w0 * (1.0 - frac), w0, 1.0, JumpSign::Plus);
        let s = budget(t * b.w, t * b.w0, t, JumpSign::Plus);
        let (r, rs) = (b.rel_gap().unwrap(), s.rel_gap().unwrap());
        prop_assert!((r - rs).abs() <= 1e-12 * r.max(1e-300) + 1e-15);
        let (c, cs) = (verify_energy_lemma(&b, 0.0).unwrap(), verify_energy_lemma(&s, 0.0).unwrap());
        prop_assert_eq!(c.holds(), cs.holds());
        prop_assert!((c.lower_slack - cs.lower_slack).abs() <= 1e-9 * c.lower_slack.abs().max(1.0));
    }

    #[test]
    fn wrong_sign_is_rejected(w0 in 0.1f64..10.0, frac in 0.01f64..0.9) {
        let b = budget(w0 * (1.0 + frac), w0, 1.0, JumpSign::Plus);
        prop_assert!(b.gap().is_err());
        let m = budget(w0 * (1.0 - frac), w0, 1.0, JumpSign::Minus);
        prop_assert!(m.gap().is_err());
    }

    #[test]
    fn linear_fit_recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0, xs in prop::collection::vec(-10.0f64..10.0, 3..20)) {
        prop_assume!(xs.iter().any(|x| (x - xs[0]).abs() > 1e-3));
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let (fa, fb) = linear_fit(&xs, &ys).unwrap();
        prop_assert!((fa - a).abs() < 1e-8 && (fb - b).abs() < 1e-8);
    }

    #[test]
    fn three_spheres_fit_satisfies_every_sample(
        raw in prop::collection::vec((0.01f64..1.0, 0.0f64..1.0, 1.0f64..4.0), 1..30)
    ) {
        // I1 ≤ I2 with I2 strictly log-below the chord from I1 to I3
        let samples: Vec<ThreeSpheresSample> = raw
            .iter()
            .map(|&(i1, t, growth)| {
                let i3 = i1 * growth.exp();
                let i2 = i1.powf(0.5 + 0.4 * t) * i3.powf(0.5 - 0.4 * t);
                ThreeSpheresSample { center: [0.0, 0.0], radii: [0.1, 0.2, 0.4], integrals: [i1, i2, i3] }
            })
            .collect();
        let fit = three_spheres_fit(&samples).unwrap();
        prop_assert!(fit.delta > 0.0 && fit.delta < 1.0);
        prop_assert!(fit.feasible);
        for s in &samples {
            let [i1, i2, i3] = s.integrals;
            prop_assert!(i2 <= fit.c * i1.powf(fit.delta) * i3.powf(1.0 - fit.delta) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn chain_length_shrinks_as_rho_grows(m0 in 0.2f64..5.0, u in 0.05f64..0.95) {
        let c = geometric_constants(m0, 0.5).unwrap();
        let rho = u * c.rho_bar;
        if let (Ok(a), Ok(b)) = (k_of_rho(rho, &c), k_of_rho(0.5 * rho, &c)) {
            prop_assert!(b.k >= a.k);
            prop_assert!(a.lower <= a.r_k * (1.0 + 1e-12) && a.r_k <= a.upper * (1.0 + 1e-12));
        }
    }

    #[test]
    fn config_survives_round_trip(seed in any::<u64>(), h in 0.02f64..0.3, levels in 1usize..4) {
        let mut cfg = ExperimentConfig::from_json(
            r#"{"domain":{"kind":"disc","center":[0.0,0.0],"radius":1.0},"tensor":{"thickness":0.1,"reference":{"kind":"isotropic","lambda":1.0,"mu":1.0}},"couple":{"kind":"zero"}}"#,
        ).unwrap();
        cfg.seed = seed;
        cfg.mesh.h = h;
        cfg.mesh.levels = levels;
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), cfg.to_json());
        prop_assert_eq!(back.seed, seed);
        prop_assert_eq!(back.mesh.h, h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn frequency_ratio_is_monotone(seed in any::<u64>(), t0 in 0.0f64..0.4) {
        let dom = make_domain(&DomainSpec::unit_disc()).unwrap();
        let sp = MorleySpace::new(generate_mesh(&dom, &MeshOptions::uniform(0.15)).unwrap(), &dom);
        let p = PlateTensorField::new(TensorField::isotropic(1.0, 1.0), 0.1);
        let f = CoupleField::random_fourier(&dom.curve, (t0, t0 + 0.5), 4, seed).unwrap();
        let (_, out) = solve_problem(&sp, &dom, &Material::homogeneous(p), &f).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let scan = frequency_scan(&sp, &dom, &out.solution, &grid);
        prop_assert_eq!(scan.rows[0].1, 1.0);
        for w in scan.rows.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-12);
            prop_assert!(w[1].1 >= 0.0);
        }
    }
}
