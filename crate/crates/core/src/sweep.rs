use serde::{Deserialize, Serialize};

/// One row of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub param: f64,
    pub visibility_model: f64,
    pub visibility_mc: Option<f64>,
    pub stderr: Option<f64>,
}

impl SweepRecord {
    pub fn model(param: f64, visibility_model: f64) -> Self {
        SweepRecord {
            param,
            visibility_model,
            visibility_mc: None,
            stderr: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Name of the swept quantity, with unit suffix.
    pub param_name: String,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn new(param_name: impl Into<String>, records: Vec<SweepRecord>) -> Self {
        SweepResult {
            param_name: param_name.into(),
            records,
        }
    }

    pub fn has_monte_carlo(&self) -> bool {
        self.records.iter().any(|r| r.visibility_mc.is_some())
    }

    pub fn model_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.visibility_model).collect()
    }

    /// CSV with header `param,visibility_model[,visibility_mc,stderr]`.
    ///
    /// Floats use the shortest round-trip representation, so equal inputs give
    /// byte-identical output.
    pub fn to_csv(&self) -> String {
        let mc = self.has_monte_carlo();
        let mut out = String::from("param,visibility_model");
        if mc {
            out.push_str(",visibility_mc,stderr");
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{}", r.param, r.visibility_model));
            if mc {
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!(",{},{}", opt(r.visibility_mc), opt(r.stderr)));
            }
            out.push('\n');
        }
        out
    }
}

/// `n` points spaced logarithmically between `lo` and `hi`, inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` evenly spaced points between `lo` and `hi`, inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}
