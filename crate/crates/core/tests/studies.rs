use frs_core::cq::{InitialApproximation, SchemeVariant};
use frs_core::fem::l2_norm_values;
use frs_core::harness::{run_spatial_study, run_temporal_study, StudyConfig};
use frs_core::harness::fit_rate;
use frs_core::oracle::{discrete_eigenvalue, mode_response, scalar_cq_response};
use frs_core::{InitialData, MeshFamily, Nonlinearity};

fn small_spatial() -> StudyConfig {
    StudyConfig {
        case: InitialData::CaseB,
        alphas: vec![0.5],
        m_list: vec![4, 8],
        n_list: vec![10],
        ..StudyConfig::default()
    }
}

#[test]
fn studies_are_deterministic() {
    let cfg = small_spatial();
    let a = run_spatial_study(&cfg).unwrap();
    let b = run_spatial_study(&cfg).unwrap();
    assert_eq!(a[0].to_csv(), b[0].to_csv());
    assert_eq!(a[0].to_markdown(), b[0].to_markdown());
}

#[test]
fn cached_study_matches_uncached() {
    let dir = tempfile::tempdir().unwrap();
    let plain = run_spatial_study(&small_spatial()).unwrap();
    let cfg = StudyConfig {
        cache_dir: Some(dir.path().to_path_buf()),
        ..small_spatial()
    };
    let first = run_spatial_study(&cfg).unwrap();
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 3);
    let second = run_spatial_study(&cfg).unwrap();
    for rep in [&first[0], &second[0]] {
        for (a, b) in rep.errors().iter().zip(plain[0].errors()) {
            assert!((a - b).abs() <= 1e-14 * b.abs(), "{a} vs {b}");
        }
    }
}

#[test]
fn single_mode_temporal_error_is_scalar_cq_error() {
    let (alpha, m) = (0.5, 8);
    let cfg = StudyConfig {
        case: InitialData::SingleMode { k: 1, l: 2 },
        alphas: vec![alpha],
        nonlinearity: Nonlinearity::Zero,
        scheme: SchemeVariant::LumpedLinearized,
        initial: InitialApproximation::Interpolation,
        m_list: vec![m],
        n_list: vec![10, 20, 40],
        tol: 1e-14,
        ..StudyConfig::default()
    };
    let rep = &run_temporal_study(&cfg).unwrap()[0];
    let mesh = MeshFamily::Symmetric(m).build().unwrap();
    let u0 = mesh.interpolate(|x, y| cfg.case.eval(x, y));
    let norm = l2_norm_values(&mesh, &u0);
    let lambda = discrete_eigenvalue(1, 2, m);
    let s_ref = *scalar_cq_response(lambda, alpha, 1.0, 1.0, 320).last().unwrap();
    let exact = mode_response(lambda, 1.0, alpha, 1.0).unwrap();
    let mut true_errors = Vec::new();
    for row in &rep.rows {
        let n = (1.0 / row.param).round() as usize;
        let s = *scalar_cq_response(lambda, alpha, 1.0, 1.0, n).last().unwrap();
        let expected = (s - s_ref).abs() * norm;
        assert!((row.error - expected).abs() <= 1e-8 * expected, "N = {n}: {} vs {expected}", row.error);
        true_errors.push((row.param, (s - exact).abs()));
    }
    let rate = fit_rate(&true_errors).unwrap();
    assert!((rate - 1.0).abs() < 0.1, "{true_errors:?} rate {rate}");
    // a reference only 8 times finer than the finest run biases the fitted rate upwards
    let rate = rep.fitted_rate.unwrap();
    assert!((rate - 1.0).abs() < 0.2, "{rate}");
}
