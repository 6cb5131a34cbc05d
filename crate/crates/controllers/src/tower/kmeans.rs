//! One-dimensional k-means over per-service average CPU usage.
//!
//! Lloyd's algorithm with deterministic quantile seeding (min/max for k=2),
//! point ties resolved toward the lower-index centroid, and empty clusters
//! refilled with the point farthest from its centroid. Groups come back
//! ordered by descending centroid, so group 0 is the "high usage" class.

/// Service indices grouped by usage class, highest-centroid group first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub groups: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    /// Group index for a service.
    pub fn group_of(&self, service: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&service))
            .expect("service not assigned")
    }
}

pub fn cluster_services(avg_usage_cores: &[f64], k: usize) -> ClusterAssignment {
    assert!(k >= 1, "need at least one cluster");
    assert!(
        avg_usage_cores.iter().all(|u| u.is_finite() && *u >= 0.0),
        "usages must be finite and non-negative"
    );
    let n = avg_usage_cores.len();
    if n == 0 {
        return ClusterAssignment { groups: vec![] };
    }
    if n < k {
        // Fewer services than clusters: each service its own group.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            avg_usage_cores[b]
                .partial_cmp(&avg_usage_cores[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        return ClusterAssignment {
            groups: order.into_iter().map(|s| vec![s]).collect(),
        };
    }

    let mut sorted = avg_usage_cores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut centroids: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                sorted[(n - 1) / 2]
            } else {
                sorted[i * (n - 1) / (k - 1)]
            }
        })
        .collect();

    let mut assignment = vec![0usize; n];
    for _ in 0..200 {
        let mut next: Vec<usize> = avg_usage_cores
            .iter()
            .map(|&u| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (c, &centroid) in centroids.iter().enumerate() {
                    let d = (u - centroid).abs();
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect();

        // Refill any empty cluster with the point farthest from its centroid.
        for c in 0..k {
            if next.contains(&c) {
                continue;
            }
            let farthest = (0..n)
                .max_by(|&a, &b| {
                    let da = (avg_usage_cores[a] - centroids[next[a]]).abs();
                    let db = (avg_usage_cores[b] - centroids[next[b]]).abs();
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            next[farthest] = c;
        }

        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<f64> = (0..n)
                .filter(|&s| next[s] == c)
                .map(|s| avg_usage_cores[s])
                .collect();
            if !members.is_empty() {
                *centroid = members.iter().sum::<f64>() / members.len() as f64;
            }
        }
        let converged = next == assignment;
        assignment = next;
        if converged {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centroids[b].partial_cmp(&centroids[a]).unwrap());
    let groups = order
        .into_iter()
        .map(|c| (0..n).filter(|&s| assignment[s] == c).collect())
        .collect();
    ClusterAssignment { groups }
}
