use serde::Serialize;

/// Principal branch of the Lambert function on `x >= 0`: the `w >= 0` with `w e^w = x`.
pub fn lambert_w(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "lambert_w needs finite x >= 0, got {x}");
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x < std::f64::consts::E {
        x.ln_1p() * 0.8
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let fp = ew * (w + 1.0);
        let step = f / (fp - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    w
}

/// Asymptotic mean and standard deviation of the chordal complexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMoments {
    pub n: f64,
    pub w: f64,
    pub mean: f64,
    pub sigma: f64,
}

/// `E_n = (2W - 1) e^{2W} / 4` and `sigma_n = sqrt((3W^2 - 4W + 2)/(W + 1) e^{3W}) / 3`, with `W = W(n)`.
pub fn asymptotic_moments(n: f64) -> AsymptoticMoments {
    let w = lambert_w(n);
    let mean = 0.25 * (2.0 * w - 1.0) * (2.0 * w).exp();
    let sigma = ((3.0 * w * w - 4.0 * w + 2.0) / (w + 1.0) * (3.0 * w).exp()).sqrt() / 3.0;
    AsymptoticMoments { n, w, mean, sigma }
}
