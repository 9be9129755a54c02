//! Brute-force reference implementations shared by integration tests.
//! Written from the definitions, without calling the library's versions.
#![allow(dead_code)]

use concept_fusion::classifiers::{logreg_loss_grad, LogRegParams};
use concept_fusion::data::ProbabilityVector;
use concept_fusion::ensemble::{assign_ranks, confidence_sum, decide, rank_sum};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TIE_TOLERANCE: f64 = 1e-12;

/// rank_i = 1 + #{j : p_j < p_i} + #{j != i : p_j == p_i} / 2
pub fn ranks(p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let below = (0..p.len()).filter(|&j| p[j] < p[i]).count() as f64;
            let tied = (0..p.len()).filter(|&j| j != i && p[j] == p[i]).count() as f64;
            1.0 + below + tied / 2.0
        })
        .collect()
}

pub fn weighted_total(rows: &[Vec<f64>], w: &[f64], weighted: bool) -> Vec<f64> {
    let m = rows[0].len();
    let mut s = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = 0.0;
        for g in 0..rows.len() {
            acc += if weighted { w[g] * rows[g][k] } else { rows[g][k] };
        }
        s.push(acc);
    }
    s
}

pub fn rank_total(probs: &[Vec<f64>], w: &[f64], weighted: bool) -> Vec<f64> {
    let r: Vec<Vec<f64>> = probs.iter().map(|p| ranks(p)).collect();
    weighted_total(&r, w, weighted)
}

/// First index whose score is within the tie tolerance of the maximum.
pub fn decide_ref(s: &[f64]) -> usize {
    let mut scale = 0.0f64;
    for v in s {
        scale = scale.max(v.abs());
    }
    for i in 0..s.len() {
        if s.iter().all(|&v| v <= s[i] + TIE_TOLERANCE * scale) {
            return i;
        }
    }
    unreachable!("some entry attains the maximum")
}

/// Probability vectors built from small integer counts so that exact ties
/// occur often and distinct values are far apart.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let g = rng.random_range(1..=5);
    let m = rng.random_range(2..=6);
    let probs = (0..g)
        .map(|_| {
            let mut counts: Vec<u32> = (0..m).map(|_| rng.random_range(0..4)).collect();
            if counts.iter().all(|&c| c == 0) {
                counts[rng.random_range(0..m)] = 1;
            }
            let total: u32 = counts.iter().sum();
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        })
        .collect();
    let mut priorities: Vec<f64> = (0..g).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
    if priorities.iter().all(|&p| p == 0.0) {
        priorities[0] = 0.5;
    }
    (probs, priorities)
}

/// Number of instances on which any of the four ensemble functions differs
/// from the reference; `Err` describes the first difference.
pub fn ensemble_mismatches(instances: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = None;
    let mut count = 0;
    for case in 0..instances {
        let (probs, w) = random_instance(&mut rng);
        let pv: Vec<ProbabilityVector> = probs.iter().map(|p| ProbabilityVector::new(p.clone()).unwrap()).collect();
        let mut bad = Vec::new();
        for (p, v) in probs.iter().zip(&pv) {
            if assign_ranks(v).as_slice() != ranks(p).as_slice() {
                bad.push("assign_ranks");
            }
        }
        for weighted in [false, true] {
            let cs = confidence_sum(&pv, &w, weighted).unwrap();
            let cs_ref = weighted_total(&probs, &w, weighted);
            if cs.as_slice() != cs_ref.as_slice() {
                bad.push("confidence_sum");
            }
            if decide(&cs) != decide_ref(&cs_ref) {
                bad.push("decide");
            }
            let rs = rank_sum(&pv, &w, weighted).unwrap();
            let rs_ref = rank_total(&probs, &w, weighted);
            if rs.as_slice() != rs_ref.as_slice() {
                bad.push("rank_sum");
            }
            if decide(&rs) != decide_ref(&rs_ref) {
                bad.push("decide");
            }
        }
        if !bad.is_empty() {
            count += 1;
            first.get_or_insert_with(|| format!("case {case}: {bad:?} on {probs:?} / {w:?}"));
        }
    }
    match first {
        Some(msg) => Err(format!("{count} mismatching instances, first {msg}")),
        None => Ok(0),
    }
}

/// Mean cross-entropy plus `(lambda/2)‖W‖²`, computed directly.
pub fn logreg_loss(w: &Array2<f64>, b: &Array1<f64>, x: &Array2<f64>, y: &[usize], lambda: f64) -> f64 {
    let (n, d) = x.dim();
    let m = b.len();
    let mut total = 0.0;
    for i in 0..n {
        let z: Vec<f64> = (0..m).map(|k| b[k] + (0..d).map(|j| x[[i, j]] * w[[j, k]]).sum::<f64>()).collect();
        let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + z.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        total += lse - z[y[i]];
    }
    total / n as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Largest absolute difference between the analytic gradient (weights and
/// bias) and central differences with step `h`, over `instances` random
/// problems with n ≤ 10, d ≤ 5, m ≤ 4.
pub fn max_gradient_error(instances: usize, seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=10);
        let d = rng.random_range(1..=5);
        let m = rng.random_range(2..=4);
        let lambda = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) };
        let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
        let w = Array2::from_shape_fn((d, m), |_| rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
        let params = LogRegParams { weights: w.clone(), bias: b.clone() };
        let (loss, grad) = logreg_loss_grad(&params, x.view(), &y, lambda).unwrap();
        worst = worst.max((loss - logreg_loss(&w, &b, &x, &y, lambda)).abs());
        for j in 0..d {
            for k in 0..m {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[[j, k]] += h;
                down[[j, k]] -= h;
                let fd = (logreg_loss(&up, &b, &x, &y, lambda) - logreg_loss(&down, &b, &x, &y, lambda)) / (2.0 * h);
                worst = worst.max((fd - grad.weights[[j, k]]).abs());
            }
        }
        for k in 0..m {
            let (mut up, mut down) = (b.clone(), b.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (logreg_loss(&w, &up, &x, &y, lambda) - logreg_loss(&w, &down, &x, &y, lambda)) / (2.0 * h);
            worst = worst.max((fd - grad.bias[k]).abs());
        }
    }
    worst
}

/// Plain fixed-step batch gradient descent on the same objective.
pub fn reference_logreg(x: &Array2<f64>, y: &[usize], m: usize, lambda: f64, step: f64, iters: usize) -> (Array2<f64>, Array1<f64>) {
    let (n, d) = x.dim();
    let mut w = Array2::<f64>::zeros((d, m));
    let mut b = Array1::<f64>::zeros(m);
    for _ in 0..iters {
        let mut gw = Array2::<f64>::zeros((d, m));
        let mut gb = Array1::<f64>::zeros(m);
        for i in 0..n {
            let z: Vec<f64> = (0..m).map(|k| b[k] + (0..d).map(|j| x[[i, j]] * w[[j, k]]).sum::<f64>()).collect();
            let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
            let s: f64 = e.iter().sum();
            for k in 0..m {
                let r = e[k] / s - if y[i] == k { 1.0 } else { 0.0 };
                gb[k] += r / n as f64;
                for j in 0..d {
                    gw[[j, k]] += x[[i, j]] * r / n as f64;
                }
            }
        }
        gw = gw + &w * lambda;
        w = w - gw * step;
        b = b - gb * step;
    }
    (w, b)
}

pub fn linear_predict(w: &Array2<f64>, b: &Array1<f64>, x: &Array2<f64>) -> Vec<usize> {
    let z = x.dot(w) + b;
    z.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for k in 1..r.len() {
                if r[k] > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}
