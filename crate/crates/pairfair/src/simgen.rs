//! Seeded synthetic ranking data with group-dependent feature quality.
//!
//! Each query has 11 candidates, exactly one of which is relevant. A
//! candidate's two features are drawn from a Gaussian whose mean depends on
//! its label and its group, so one group's relevant candidates look
//! systematically weaker: a score function trained for accuracy alone will
//! order that group's positives below the other group's.
//!
//! All draws come from a single seeded ChaCha8 stream in a fixed order
//! (relevant slot, then group and features per candidate), and Gaussians use
//! the Box-Muller transform, so a given seed yields identical bytes on every
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Example, Protection, Task};

pub const CANDIDATES_PER_QUERY: usize = 11;

/// Feature means by (label, group); sigma is the common scale of the
/// isotropic covariance.
const TWO_GROUP_NEG_MEANS: [[f64; 2]; 2] = [[-1.0, 1.0], [-2.0, -1.0]];
const TWO_GROUP_POS_MEANS: [[f64; 2]; 2] = [[1.0, 0.0], [-1.5, 0.75]];
const THREE_GROUP_NEG_MEANS: [[f64; 2]; 3] = [[-1.0, 1.0], [-2.0, -1.0], [-1.0, 1.0]];
const THREE_GROUP_POS_MEANS: [[f64; 2]; 3] = [[1.0, 0.0], [-1.5, 0.75], [1.5, 0.5]];

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mut u1: f64 = rng.random();
    while u1 <= 0.0 {
        u1 = rng.random();
    }
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

fn generate(
    n_queries: usize,
    seed: u64,
    k: usize,
    draw_group: impl Fn(f64) -> u16,
    neg_means: &[[f64; 2]],
    pos_means: &[[f64; 2]],
    pos_sigma: impl Fn(u16) -> f64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(n_queries * CANDIDATES_PER_QUERY);
    for q in 0..n_queries {
        let relevant = rng.random_range(0..CANDIDATES_PER_QUERY);
        for c in 0..CANDIDATES_PER_QUERY {
            let group = draw_group(rng.random());
            let positive = c == relevant;
            let (mean, sigma) = if positive {
                (pos_means[group as usize], pos_sigma(group))
            } else {
                (neg_means[group as usize], 1.0)
            };
            let (z0, z1) = box_muller(&mut rng);
            examples.push(Example {
                features: vec![mean[0] + sigma * z0, mean[1] + sigma * z1],
                label: if positive { 1.0 } else { -1.0 },
                query_id: Some(q as i64),
                group: Some(group),
                attribute: None,
            });
        }
    }
    Dataset {
        examples,
        dim: 2,
        task: Task::Ranking,
        protection: Protection::Discrete { k },
        split: None,
    }
}

/// Two groups; group 1 appears with probability 0.1 and its relevant
/// candidates are drawn from a shifted, tighter Gaussian.
pub fn two_group(n_queries: usize, seed: u64) -> Dataset {
    generate(
        n_queries,
        seed,
        2,
        |u| u16::from(u < 0.1),
        &TWO_GROUP_NEG_MEANS,
        &TWO_GROUP_POS_MEANS,
        |g| if g == 1 { 0.5f64.sqrt() } else { 1.0 },
    )
}

/// Three groups with probabilities 0.45 / 0.10 / 0.45; groups 0 and 1 match
/// the two-group generator and group 2 has well-separated positives.
pub fn three_group(n_queries: usize, seed: u64) -> Dataset {
    generate(
        n_queries,
        seed,
        3,
        |u| {
            if u < 0.45 {
                0
            } else if u < 0.55 {
                1
            } else {
                2
            }
        },
        &THREE_GROUP_NEG_MEANS,
        &THREE_GROUP_POS_MEANS,
        |g| if g == 1 { 0.5f64.sqrt() } else { 1.0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::write_csv;

    #[test]
    fn two_group_counts_and_group_rate() {
        let ds = two_group(5000, 1);
        assert_eq!(ds.len(), 55000);
        let positives = ds.examples.iter().filter(|e| e.label > 0.0).count();
        assert_eq!(positives, 5000);
        let g1 = ds
            .examples
            .iter()
            .filter(|e| e.group == Some(1))
            .count() as f64;
        let n = ds.len() as f64;
        let sigma = (0.1 * 0.9 / n).sqrt();
        assert!((g1 / n - 0.1).abs() < 3.0 * sigma, "rate {}", g1 / n);
        // One positive per query.
        let mut per_query = std::collections::HashMap::new();
        for e in &ds.examples {
            if e.label > 0.0 {
                *per_query.entry(e.query_id.unwrap()).or_insert(0) += 1;
            }
        }
        assert!(per_query.values().all(|&c| c == 1));
    }

    #[test]
    fn feature_means_match_generator_table() {
        let ds = two_group(5000, 3);
        for (label, group, mean) in [
            (-1.0, 0u16, [-1.0, 1.0]),
            (-1.0, 1, [-2.0, -1.0]),
            (1.0, 0, [1.0, 0.0]),
            (1.0, 1, [-1.5, 0.75]),
        ] {
            let cell: Vec<&Example> = ds
                .examples
                .iter()
                .filter(|e| e.label == label && e.group == Some(group))
                .collect();
            assert!(cell.len() > 50, "cell ({}, {}) too small", label, group);
            for d in 0..2 {
                let avg: f64 =
                    cell.iter().map(|e| e.features[d]).sum::<f64>() / cell.len() as f64;
                let tol = 4.0 / (cell.len() as f64).sqrt();
                assert!(
                    (avg - mean[d]).abs() < tol,
                    "cell ({}, {}) dim {}: {} vs {}",
                    label,
                    group,
                    d,
                    avg,
                    mean[d]
                );
            }
        }
    }

    #[test]
    fn positive_group1_variance_is_halved() {
        let ds = two_group(20000, 9);
        let cell: Vec<f64> = ds
            .examples
            .iter()
            .filter(|e| e.label > 0.0 && e.group == Some(1))
            .map(|e| e.features[0])
            .collect();
        let n = cell.len() as f64;
        let mean = cell.iter().sum::<f64>() / n;
        let var = cell.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!((var - 0.5).abs() < 0.1, "var {}", var);
    }

    #[test]
    fn three_group_rates() {
        let ds = three_group(5000, 1);
        assert_eq!(ds.len(), 55000);
        let n = ds.len() as f64;
        for (g, p) in [(0u16, 0.45), (1, 0.10), (2, 0.45)] {
            let count = ds.examples.iter().filter(|e| e.group == Some(g)).count() as f64;
            let sigma = (p * (1.0 - p) / n).sqrt();
            assert!(
                (count / n - p).abs() < 4.0 * sigma,
                "group {} rate {}",
                g,
                count / n
            );
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let c = dir.path().join("c.csv");
        write_csv(&two_group(50, 42), &a).unwrap();
        write_csv(&two_group(50, 42), &b).unwrap();
        write_csv(&two_group(50, 43), &c).unwrap();
        let bytes_a = std::fs::read(&a).unwrap();
        assert_eq!(bytes_a, std::fs::read(&b).unwrap());
        assert_ne!(bytes_a, std::fs::read(&c).unwrap());
    }
}
