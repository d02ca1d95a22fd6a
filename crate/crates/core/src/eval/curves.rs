use super::stats::{mean, sample_std};
use crate::learner::StepLog;

/// Floor applied before taking the log of a reward.
pub const REWARD_FLOOR: f64 = 1e-12;

pub fn log_reward(r: f64) -> f64 {
    r.max(REWARD_FLOOR).log10()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curves {
    pub reward_csv: String,
    pub value_csv: String,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn column(logs: &[&[StepLog]], step: usize, f: impl Fn(&StepLog) -> f64) -> Vec<f64> {
    logs.iter().filter_map(|l| l.get(step)).map(f).collect()
}

/// Per-step across-trial curves: log reward, mean model Q and edge count.
/// Runs of different length contribute to the steps they reached.
pub fn emit_curves(logs: &[&[StepLog]]) -> Curves {
    let steps = logs.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut reward = String::from("step,n,log_reward_mean,log_reward_std\n");
    let mut value = String::from("step,n,mean_q_mean,mean_q_std,edges_mean,edges_std\n");
    for k in 0..steps {
        let r = column(logs, k, |s| log_reward(s.reward));
        let q = column(logs, k, |s| s.mean_q);
        let e = column(logs, k, |s| s.edge_count as f64);
        reward.push_str(&format!("{},{},{},{}\n", k + 1, r.len(), mean(&r), fmt_opt(sample_std(&r))));
        value.push_str(&format!(
            "{},{},{},{},{},{}\n",
            k + 1,
            q.len(),
            mean(&q),
            fmt_opt(sample_std(&q)),
            mean(&e),
            fmt_opt(sample_std(&e))
        ));
    }
    Curves {
        reward_csv: reward,
        value_csv: value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_rule() {
        assert_eq!(log_reward(1.0), 0.0);
        assert_eq!(log_reward(0.0), -12.0);
    }
}
