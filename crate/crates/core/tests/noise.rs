use lg4nmr_core::noise::{ou_sample_path, OuNoiseProcess};

#[test]
fn ou_statistics_over_a_million_steps() {
    let tau = 1e-3;
    let rabi = std::f64::consts::TAU * 150e3;
    let process = OuNoiseProcess::new(tau, 0.0024, 42).unwrap();
    let dt = tau / 50.0;
    let n = 1_000_000;
    let path = ou_sample_path(&process, dt, n, rabi).unwrap();
    let sigma = 0.0024 * rabi;

    let mean = path.iter().sum::<f64>() / n as f64;
    let var = path.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    assert!((var.sqrt() / sigma - 1.0).abs() < 0.05, "σ ratio {}", var.sqrt() / sigma);

    let lag = 50;
    let cov = path.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum::<f64>() / (n - lag) as f64;
    let rho = cov / var;
    let expected = (-1.0f64).exp();
    assert!((rho / expected - 1.0).abs() < 0.05, "lag-τ autocorrelation {rho}");
}

#[test]
fn different_seeds_differ() {
    let a = ou_sample_path(&OuNoiseProcess::new(1e-3, 0.01, 1).unwrap(), 1e-5, 100, 1e6).unwrap();
    let b = ou_sample_path(&OuNoiseProcess::new(1e-3, 0.01, 2).unwrap(), 1e-5, 100, 1e6).unwrap();
    assert_ne!(a, b);
}
