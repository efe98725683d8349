//! Monte Carlo report record and order-insensitive accumulation helpers.

use serde::Serialize;

/// Universal Monte Carlo output record: a value with its standard error and
/// the full parameter set needed to reproduce it.
#[derive(Clone, Debug, Serialize)]
pub struct EstimatorReport {
    /// Name of the estimated quantity (e.g. "drift", "lyapunov").
    pub quantity: String,
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    /// Wall-clock seconds; excluded from reproducibility comparisons.
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl EstimatorReport {
    /// CSV row matching the documented column order
    /// `quantity,value,std_error,N,horizon,step,seed`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{},{},{},{}",
            self.quantity, self.value, self.std_error, self.n, self.horizon, self.step, self.seed
        )
    }
}

/// Pairwise (cascade) summation: deterministic for a fixed input order and
/// accurate for large sample counts.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Sample mean and standard error of the mean via pairwise sums.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.5, -1.25, 0.125];
        assert_eq!(pairwise_sum(&xs), 5.375);
    }

    #[test]
    fn mean_and_se_basic() {
        let xs = [1.0, 3.0];
        let (m, se) = mean_and_std_error(&xs);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_row_layout() {
        let r = EstimatorReport {
            quantity: "drift".into(),
            value: 1.0,
            std_error: 0.01,
            n: 64,
            horizon: 50.0,
            step: 0.01,
            seed: 7,
            wall_time: 0.0,
            warning: None,
        };
        let row = r.csv_row();
        assert!(row.starts_with("drift,"));
        assert_eq!(row.split(',').count(), 7);
    }

    #[test]
    fn json_serialization_skips_absent_warning() {
        let mut r = EstimatorReport {
            quantity: "drift".into(),
            value: 1.0,
            std_error: 0.01,
            n: 64,
            horizon: 50.0,
            step: 0.01,
            seed: 7,
            wall_time: 0.25,
            warning: None,
        };
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(v["quantity"], "drift");
        assert_eq!(v["n"], 64);
        assert!(v.get("warning").is_none());
        r.warning = Some("short horizon".into());
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(v["warning"], "short horizon");
    }
}
