use serde::{Deserialize, Serialize};

/// How a dataset of `alpha` images is split into independent graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub alpha: usize,
    pub xi: usize,
    pub mu: usize,
    pub tau: usize,
    pub gamma: usize,
    /// Graph index of each image.
    pub assignment: Vec<usize>,
}

/// Round half away from zero (non-negative inputs only).
fn round_half_away(v: f64) -> usize {
    (v + 0.5).floor() as usize
}

/// Splits `alpha` images with `xi` superpixels each into graphs of at most
/// roughly `mu` nodes.
///
/// `tau = round(alpha·xi / mu)` (at least 1) and `gamma = round(alpha / tau)`
/// (at least 1). Images are assigned contiguously, `gamma` per graph, with
/// the last graph taking whatever remains. When the rounding leaves
/// trailing graphs empty they are dropped and `tau` shrinks to match.
pub fn plan_partition(alpha: usize, xi: usize, mu: usize) -> PartitionPlan {
    let alpha = alpha.max(1);
    let (xi, mu) = (xi.max(1), mu.max(1));
    let tau = round_half_away(alpha as f64 * xi as f64 / mu as f64).max(1);
    let gamma = round_half_away(alpha as f64 / tau as f64).max(1);
    let assignment: Vec<usize> = (0..alpha).map(|i| (i / gamma).min(tau - 1)).collect();
    let tau = assignment.last().map_or(1, |&g| g + 1);
    PartitionPlan {
        alpha,
        xi,
        mu,
        tau,
        gamma,
        assignment,
    }
}

impl PartitionPlan {
    /// Image indices belonging to graph `p`, ascending.
    pub fn images_of(&self, p: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &g)| g == p)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.tau];
        for &g in &self.assignment {
            s[g] += 1;
        }
        s
    }
}
