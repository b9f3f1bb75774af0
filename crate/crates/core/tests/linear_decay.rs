use spectral_cns::linear::{linear_decay_profile, RadialData};

fn slope(t: &[f64], v: &[f64]) -> f64 {
    let n = t.len() as f64;
    let x: Vec<f64> = t.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn whole_space_slopes_match_exponents() {
    let t: Vec<f64> = (0..=40).map(|i| 10f64.powf(1.0 + 2.0 * i as f64 / 40.0)).collect();
    for (d, s, want, tol) in [(2, 0.0, -0.5, 0.03), (2, 1.0, -1.0, 0.05), (3, 0.0, -0.75, 0.04)] {
        let data = RadialData::indicator(d, 1.0, 1.0, 0.0).unwrap();
        let c = linear_decay_profile(&data, &[s], &t, 0).unwrap();
        let k = slope(&t, &c.plain[0]);
        assert!((k - want).abs() <= tol, "d = {d}, s = {s}: slope {k}");
    }
}
