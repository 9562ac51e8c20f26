use std::io::Write;

use acluster_core::exact::{
    asymptotic_moments, bell, complexity_polynomial, exact_moments, pgf_closed_form_1, pgf_closed_form_2,
};
use anyhow::Result;
use serde_json::{json, Value};

use crate::Format;

/// Truncation tolerance for the series form of the generating function.
const SERIES_TOL: f64 = 1e-15;

fn pgf(n: usize, q: f64) -> Value {
    let poly = complexity_polynomial(n).eval_normalized(q);
    let cf1 = match pgf_closed_form_1(n, q) {
        Ok(c) => json!({"value": c.value, "cancellation": c.cancellation, "fragile": c.fragile}),
        Err(e) => json!({"error": e.to_string()}),
    };
    let cf2 = match pgf_closed_form_2(n, q, SERIES_TOL) {
        Ok(v) => json!({"value": v}),
        Err(e) => json!({"error": e.to_string()}),
    };
    json!({"q": q, "polynomial": poly, "alternating": cf1, "series": cf2})
}

pub fn run(n: usize, q: Option<f64>, format: Format) -> Result<()> {
    anyhow::ensure!(n >= 1, "n must be at least 1");
    let poly = complexity_polynomial(n);
    let m = exact_moments(n);
    let asym = asymptotic_moments(n as f64);
    let pgf = q.map(|q| pgf(n, q));
    let stdout = std::io::stdout();
    match format {
        Format::Json => {
            let coefficients: Vec<Value> = poly
                .to_map()
                .into_iter()
                .map(|(i, c)| json!({"queries": i, "count": c.to_string()}))
                .collect();
            let mut doc = json!({
                "n": n,
                "bell": bell(n).to_string(),
                "coefficients": coefficients,
                "mean": m.mean_f64(),
                "mean_exact": m.mean.to_string(),
                "variance": m.variance_f64(),
                "variance_exact": m.variance.to_string(),
                "asymptotic": {"mean": asym.mean, "sigma": asym.sigma, "w": asym.w},
            });
            if let Some(p) = pgf {
                doc["pgf"] = p;
            }
            writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["field", "queries", "value"])?;
            for (i, c) in poly.to_map() {
                w.write_record(["coefficient", &i.to_string(), &c.to_string()])?;
            }
            let rows = [
                ("bell", bell(n).to_string()),
                ("mean", m.mean_f64().to_string()),
                ("mean_exact", m.mean.to_string()),
                ("variance", m.variance_f64().to_string()),
                ("variance_exact", m.variance.to_string()),
                ("asymptotic_mean", asym.mean.to_string()),
                ("asymptotic_sigma", asym.sigma.to_string()),
            ];
            for (k, v) in rows {
                w.write_record([k, "", &v])?;
            }
            if let Some(p) = pgf {
                w.write_record(["pgf_q", "", &p["q"].to_string()])?;
                w.write_record(["pgf_polynomial", "", &p["polynomial"].to_string()])?;
                for key in ["alternating", "series"] {
                    let v = p[key].get("value").map_or(String::new(), |v| v.to_string());
                    w.write_record([&format!("pgf_{key}"), "", &v])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}
