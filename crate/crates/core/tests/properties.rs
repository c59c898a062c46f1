use mccm::cascade::{block_sums, refine, sample_field, total_mass};
use mccm::estimators::replicate_seed;
use mccm::io;
use mccm::numeric::{bisect_secant, golden_section, linear_fit, log_add_exp};
use mccm::regimes::{biggins_kyprianou, fourier_dimension, hausdorff_dimension, second_moment_series};
use mccm::spectrum::{fourier_all, fourier_at, PhaseTable};
use mccm::weights::{sample, ModelSpec, NodeId, WeightModel};
use proptest::prelude::*;

fn discrete_law() -> impl Strategy<Value = WeightModel> {
    // Positive atoms rescaled to mean one.
    prop::collection::vec((0.05f64..3.0, 0.05f64..1.0), 2..5).prop_map(|raw| {
        let total: f64 = raw.iter().map(|a| a.1).sum();
        let mean: f64 = raw.iter().map(|(v, p)| v * p / total).sum();
        WeightModel::discrete(raw.iter().map(|(v, p)| (v / mean, p / total)).collect()).unwrap()
    })
}

fn any_law() -> impl Strategy<Value = WeightModel> {
    prop_oneof![
        (0.0f64..0.9).prop_map(|s| WeightModel::lognormal(s).unwrap()),
        (0.05f64..0.95).prop_map(|x| WeightModel::two_point(x).unwrap()),
        discrete_law(),
    ]
}

fn small_spec() -> impl Strategy<Value = ModelSpec> {
    (any_law(), 2u32..5).prop_map(|(w, b)| ModelSpec::new(w, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_have_unit_mean(w in any_law()) {
        prop_assert!((w.moment(1.0) - 1.0).abs() < 1e-12);
        prop_assert!(w.moment(0.0) > 0.0);
    }

    #[test]
    fn weight_draws_are_deterministic(spec in small_spec(), seed in any::<u64>(), digits in prop::collection::vec(0u32..2, 0..8)) {
        let node = NodeId::from_digits(spec.b, &digits);
        let a = sample(&spec.weight, spec.b, node.clone(), seed);
        let c = sample(&spec.weight, spec.b, node, seed);
        prop_assert_eq!(a.to_bits(), c.to_bits());
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn refinement_matches_direct_sampling(spec in small_spec(), seed in any::<u64>(), n in 1u32..5, extra in 1u32..3) {
        let shallow = sample_field(&spec, n, seed, None).unwrap();
        let deep = sample_field(&spec, n + extra, seed, None).unwrap();
        let refined = refine(&shallow, extra).unwrap();
        prop_assert_eq!(refined.masses.len(), deep.masses.len());
        for (x, y) in refined.masses.iter().zip(&deep.masses) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn block_sums_preserve_total(spec in small_spec(), seed in any::<u64>(), up in 0u32..4) {
        let f = sample_field(&spec, 4, seed, None).unwrap();
        let blocks = block_sums(&f.masses, spec.b, up);
        prop_assert_eq!(blocks.len(), f.masses.len() / (spec.b as usize).pow(up));
        let t = total_mass(&f);
        prop_assert!((blocks.iter().sum::<f64>() - t).abs() <= 1e-12 * t.max(1.0));
    }

    #[test]
    fn fourier_paths_agree(spec in small_spec(), seed in any::<u64>(), kmax in 1u64..200) {
        let f = sample_field(&spec, 4, seed, None).unwrap();
        let all = fourier_all(&f, kmax);
        let freqs: Vec<u64> = (0..=kmax).collect();
        let table = PhaseTable::new(f.masses.len() as u64).coeffs(&f.masses, &freqs);
        let scale = total_mass(&f).max(1e-300);
        for s in 0..=kmax as usize {
            let direct = fourier_at(&f, s as u64);
            prop_assert!((all.coeffs[s] - direct).norm() <= 1e-9 * scale);
            prop_assert!((table[s] - direct).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn coefficients_bounded_by_mass(spec in small_spec(), seed in any::<u64>()) {
        let f = sample_field(&spec, 5, seed, None).unwrap();
        let sp = fourier_all(&f, 300);
        let m0 = sp.coeffs[0].norm();
        prop_assert!((m0 - total_mass(&f)).abs() <= 1e-12 * m0.max(1.0));
        for c in &sp.coeffs {
            prop_assert!(c.norm() <= m0 * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn fourier_dimension_below_hausdorff(spec in small_spec()) {
        if let (Ok(df), Ok(dh)) = (fourier_dimension(&spec), hausdorff_dimension(&spec)) {
            prop_assert!(df <= dh + 1e-9, "d_f {} > d_h {}", df, dh);
            prop_assert!(df >= 0.0);
        }
    }

    #[test]
    fn lognormal_closed_form(b in 2u32..12, ratio in 0.0f64..1.9) {
        let lb = (b as f64).ln();
        let spec = ModelSpec::new(WeightModel::lognormal((ratio * lb).sqrt()).unwrap(), b).unwrap();
        let expect = if ratio <= 0.5 { 1.0 - ratio } else { (2f64.sqrt() - ratio.sqrt()).powi(2) };
        prop_assert!((fourier_dimension(&spec).unwrap() - expect).abs() < 1e-9);
        prop_assert!((hausdorff_dimension(&spec).unwrap() - (1.0 - ratio / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn boundary_transform_is_normalised(spec in small_spec()) {
        if let Ok(Some(tr)) = biggins_kyprianou(&spec) {
            prop_assert!(tr.residual() < 1e-8);
            prop_assert!(tr.psi(1.0).abs() < 1e-8);
            prop_assert!(tr.psi_prime(1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn series_badic_identity(spec in small_spec(), s in 1u64..50, depth in 1u32..8) {
        // E|mu_hat_n(b s)|^2 equals the depth n-1 sum at s scaled by E[W^2]/b.
        let b = spec.b as u64;
        let lhs = second_moment_series(&spec, b * s, Some(depth + 1), 0.0).unwrap();
        let inner = second_moment_series(&spec, s, Some(depth), 0.0).unwrap();
        let first = second_moment_series(&spec, b * s, Some(1), 0.0).unwrap();
        let ratio = spec.weight.moment(2.0) / spec.b as f64;
        prop_assert!((lhs - first - ratio * inner).abs() <= 1e-12 * lhs.abs().max(1e-300));
    }

    #[test]
    fn replicate_seeds_are_distinct(seed in any::<u64>(), other in any::<u64>()) {
        let a: Vec<u64> = (0..64).map(|r| replicate_seed(seed, r)).collect();
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), 64);
        if other != seed {
            let c: Vec<u64> = (0..64).map(|r| replicate_seed(other, r)).collect();
            prop_assert!(a != c);
        }
    }

    #[test]
    fn io_round_trip(spec in small_spec(), seed in any::<u64>(), kmax in 1u64..64) {
        let dir = tempfile::tempdir().unwrap();
        let f = sample_field(&spec, 3, seed, None).unwrap();
        let sp = fourier_all(&f, kmax);
        for ext in ["csv", "bin"] {
            let p = dir.path().join(format!("s.{ext}"));
            if ext == "csv" { io::write_spectrum_csv(&p, &sp).unwrap() } else { io::write_spectrum_bin(&p, &sp).unwrap() }
            prop_assert_eq!(io::read_spectrum(&p).unwrap(), sp.clone());
            let q = dir.path().join(format!("f.{ext}"));
            let dump = io::FieldDump::from(&f);
            if ext == "csv" { io::write_field_csv(&q, &dump).unwrap() } else { io::write_field_bin(&q, &dump).unwrap() }
            prop_assert_eq!(io::read_field(&q).unwrap(), dump);
        }
    }

    #[test]
    fn numeric_helpers(root in -5.0f64..5.0, slope in -3.0f64..3.0, icpt in -3.0f64..3.0, a in -700.0f64..700.0, c in -700.0f64..700.0) {
        let r = bisect_secant(|x| (x - root) * (1.0 + x * x), -10.0, 10.0, 1e-12, 200).unwrap();
        prop_assert!((r - root).abs() < 1e-9);
        let (xm, _) = golden_section(|x| (x - root).powi(2), -10.0, 10.0, 1e-9);
        prop_assert!((xm - root).abs() < 1e-6);
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + icpt).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        let expect = a.max(c) + (1.0 + (-(a - c).abs()).exp()).ln();
        prop_assert!((log_add_exp(a, c) - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }
}
