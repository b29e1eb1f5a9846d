use apmoments::coeffs::{self, CoefficientSeries, WeightKind};
use apmoments::harness::{self, DualParams};
use apmoments::qrprimes::{self, ZSpec};
use apmoments::voronoi::{self, WindowSpec, WindowTransform};
use apmoments::PrimePowerModulus;
use proptest::prelude::*;
use std::sync::OnceLock;

const KIND: WeightKind = WeightKind::Integral { kappa: 12 };

fn delta() -> &'static CoefficientSeries {
    static S: OnceLock<CoefficientSeries> = OnceLock::new();
    S.get_or_init(|| coeffs::generate_delta(1 << 18).unwrap())
}

fn transform() -> &'static WindowTransform {
    static T: OnceLock<WindowTransform> = OnceLock::new();
    T.get_or_init(|| WindowTransform::with_defaults(WindowSpec::default_bump(), KIND).unwrap())
}

#[test]
fn file_series_drives_the_voronoi_check() {
    let dir = std::env::temp_dir().join(format!("apmoments-pipeline-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("delta.csv");
    coeffs::write_coefficients(&delta().truncated(200_000), &path).unwrap();
    let loaded = coeffs::load_with_sidecar(&path).unwrap();
    assert_eq!(loaded.values(), delta().truncated(200_000).values());
    let q = PrimePowerModulus::new(5, 2).unwrap();
    let from_file = voronoi::voronoi_residual(&loaded, None, &q, 3, 5000.0, transform(), 1e-9).unwrap();
    let generated = voronoi::voronoi_residual(delta(), None, &q, 3, 5000.0, transform(), 1e-9).unwrap();
    assert_eq!(from_file.lhs, generated.lhs);
    assert!(from_file.residual < 1e-8, "{}", from_file.residual);
}

#[test]
fn direct_sums_follow_the_dual_side_as_p_grows() {
    let rows = harness::dual_vs_direct(delta(), transform(), &[5, 7, 11], 2, 2.0, 100_000).unwrap();
    assert!(rows.iter().all(|r| r.max_gap < 1e-2), "{rows:?}");
    assert!(rows[2].max_gap < rows[0].max_gap);
}

#[test]
fn class_split_reassembles_the_full_moment() {
    let q = PrimePowerModulus::new(11, 2).unwrap();
    let params = DualParams::from_y(2.0, q, KIND, harness::DEFAULT_ETA).unwrap();
    let direct = harness::compute_e(delta(), &params, transform().window()).unwrap();
    assert!(direct.partition_defect() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dual_values_vanish_off_the_squares(index in 0usize..20) {
        let primes = qrprimes::search(2000, ZSpec::Const(3.0)).unwrap();
        let p = primes[index % primes.len()].p;
        let q = PrimePowerModulus::new(p, 2).unwrap();
        let params = DualParams::from_y(2.0, q, KIND, harness::DEFAULT_ETA).unwrap();
        prop_assume!((params.m_max as u64) <= qrprimes::least_nonresidue(p));
        let m = harness::compute_dual_m(delta(), &params, transform()).unwrap();
        prop_assert!(m.class_values(-1).iter().all(|v| *v == 0.0));
        let units = m.unit_values();
        let zeros = units.iter().filter(|v| **v == 0.0).count();
        prop_assert_eq!(2 * zeros, units.len());
    }

    #[test]
    fn distribution_record_recovers_mixture_moments(v in 0.05f64..2.0) {
        // Values +-sqrt(2v c) with c = 3 +- sqrt(6) reproduce the Gaussian
        // second and fourth moments exactly; half the mass sits at 0.
        let (c1, c2) = (3.0 - 6f64.sqrt(), 3.0 + 6f64.sqrt());
        let (w1, w2) = (c2 - 1.0, 1.0 - c1);
        let total = w1 + w2;
        let scale = 1_000_000.0;
        let n1 = (scale * w1 / total).round() as usize;
        let n2 = (scale * w2 / total).round() as usize;
        let mut values = Vec::new();
        for (n, c) in [(n1, c1), (n2, c2)] {
            let x = (2.0 * v * c).sqrt();
            values.extend(std::iter::repeat_n(x, n));
            values.extend(std::iter::repeat_n(-x, n));
        }
        let nonzero = values.len();
        values.extend(std::iter::repeat_n(0.0, nonzero));
        let r = harness::distribution_test(&values, v).unwrap();
        prop_assert!((r.zero_mass - 0.5).abs() < 1e-12);
        for k in 0..4 {
            let scale = harness::mixture_moment(k as u32 + 1, v).abs().max(1e-12);
            prop_assert!((r.empirical[k] - r.mixture[k]).abs() < 1e-4 * scale.max(1.0), "{k}: {r:?}");
        }
    }
}
