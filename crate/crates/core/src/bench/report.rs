use serde::{Deserialize, Serialize};

/// Mean and sample standard deviation (divisor R - 1) of a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Summarizes values in the order given so repeated runs reduce identically.
pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            mean: f64::NAN,
            std: f64::NAN,
            count,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std, count }
}

/// `mean ± std` with four decimals, or `n/a`.
pub fn fmt_pm(s: &Summary) -> String {
    if s.count == 0 {
        "n/a".into()
    } else {
        format!("{:.4} ± {:.4}", s.mean, s.std)
    }
}
