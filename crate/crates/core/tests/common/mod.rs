//! Brute-force oracles shared by the integration tests. None of these call
//! into the code paths they check.
#![allow(dead_code)]

/// Explicit-loop mean and population standard deviation.
pub fn naive_mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for &x in xs {
        sum += x;
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for &x in xs {
        sq += (x - mean) * (x - mean);
    }
    (mean, (sq / n).sqrt())
}

/// Per-bin KL with ε smoothing, plain loop, natural log.
pub fn naive_kl(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let a = p[i] + eps;
        let b = q[i] + eps;
        total += a * (a / b).ln();
    }
    total
}

fn ascending(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Number of entries `>= t` in an ascending slice, by binary search.
fn count_at_least(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&s| s < t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub frr: f64,
    pub eer: f64,
}

/// Evaluates every candidate threshold (each distinct score plus `max + 1`)
/// by counting, then picks the minimum |FAR − FRR| compared exactly as
/// rationals, preferring the lower threshold on ties.
pub fn sweep_eer(genuine: &[f64], impostor: &[f64]) -> SweepPoint {
    let mut candidates: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    candidates.dedup();
    candidates.insert(0, candidates[0] + 1.0);

    let g = genuine.len() as i128;
    let n = impostor.len() as i128;
    let (gs, is) = (ascending(genuine), ascending(impostor));
    let mut best: Option<(i128, f64, i128, i128)> = None;
    for &t in &candidates {
        let ga = count_at_least(&gs, t) as i128;
        let ia = count_at_least(&is, t) as i128;
        // |ia/n − (g−ga)/g| · g·n
        let gap = (ia * g - (g - ga) * n).abs();
        match best {
            Some((b, ..)) if gap > b => {}
            _ => best = Some((gap, t, ga, ia)),
        }
    }
    let (_, threshold, ga, ia) = best.unwrap();
    let tpr = ga as f64 / g as f64;
    let fpr = ia as f64 / n as f64;
    let frr = (g - ga) as f64 / g as f64;
    SweepPoint {
        threshold,
        tpr,
        fpr,
        frr,
        eer: (fpr + frr) / 2.0,
    }
}

/// `(threshold, tpr, fpr)` for every candidate threshold, by counting.
pub fn brute_roc(genuine: &[f64], impostor: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut candidates: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    candidates.dedup();
    candidates.insert(0, candidates[0] + 1.0);
    candidates
        .into_iter()
        .map(|t| {
            let tp = genuine.iter().filter(|&&s| s >= t).count() as f64 / genuine.len() as f64;
            let fp = impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64;
            (t, tp, fp)
        })
        .collect()
}

/// Mean and std of normal(mu, sigma) truncated to [-1, 1], by composite
/// Simpson quadrature of the unnormalised density.
pub fn truncated_normal_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let intervals = 20_000;
    let h = 2.0 / intervals as f64;
    let density = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp();
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..=intervals {
        let x = -1.0 + k as f64 * h;
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = density(x);
        z += w * f;
        m1 += w * x * f;
        m2 += w * x * x * f;
    }
    let mean = m1 / z;
    (mean, (m2 / z - mean * mean).sqrt())
}

/// Tiny deterministic generator for test inputs (xorshift64*), independent
/// of the crate's own RNG.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
