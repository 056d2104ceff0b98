use disteval::mdp::{induced_kernel, mixing_time, stationary, GenerativeConfig, Gallery, Kernel, TransitionSampler};
use disteval::rng::stream;

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn gallery_chains_are_ergodic_with_minimal_mixing_times() {
    for e in Gallery::embedded().entries() {
        let k = induced_kernel(&e.mdp, &e.policy).unwrap();
        let mu = stationary(&k).unwrap();
        let back = k.left_mul(&mu);
        assert!(tv(&back, &mu) * 2.0 <= 1e-10, "{}", e.name);
        let t = mixing_time(&k, &mu).unwrap();
        // direct powering of the rows
        let n = k.n();
        let mut rows: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|j| (s == j) as u8 as f64).collect()).collect();
        let mut worst = Vec::new();
        for _ in 0..t {
            rows = rows.iter().map(|r| k.left_mul(r)).collect();
            worst.push(rows.iter().map(|r| tv(r, &mu)).fold(0.0, f64::max));
        }
        assert!(worst[t - 1] <= 0.25, "{}", e.name);
        if t > 1 {
            assert!(worst[t - 2] > 0.25, "{}", e.name);
        }
    }
}

#[test]
fn slow_two_state_chain_matches_eigenvalue_formula() {
    let eps = 0.01;
    let k = Kernel::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap();
    let mu = stationary(&k).unwrap();
    // TV(P^t(.|s), mu) = |1 - 2 eps|^t / 2
    let expect = (1..).find(|&t| (1.0f64 - 2.0 * eps).powi(t) / 2.0 <= 0.25).unwrap() as usize;
    assert_eq!(mixing_time(&k, &mu).unwrap(), expect);
}

#[test]
fn markov_frequencies_approach_stationary_law() {
    let e = Gallery::embedded().get("chain3").unwrap().clone();
    let k = induced_kernel(&e.mdp, &e.policy).unwrap();
    let mu = stationary(&k).unwrap();
    let sampler = TransitionSampler::new(&e.mdp, &e.policy).unwrap();
    let mut rng = stream(21, 0);
    let n = 200_000;
    let mut counts = vec![0usize; mu.len()];
    let mut s = 0;
    for _ in 0..n {
        s = sampler.step(&mut rng, s).s_next;
        counts[s] += 1;
    }
    for (c, m) in counts.iter().zip(&mu) {
        // generous band: autocorrelation inflates the iid standard error
        let band = 10.0 * (m * (1.0 - m) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - m).abs() <= band);
    }
}

#[test]
fn generative_frequencies_match_mu() {
    let e = Gallery::embedded().get("chain3").unwrap().clone();
    let cfg = GenerativeConfig::new(vec![0.2, 0.3, 0.5]).unwrap();
    let sampler = TransitionSampler::new(&e.mdp, &e.policy).unwrap();
    let mut rng = stream(22, 0);
    let n = 100_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[sampler.generative(&mut rng, &cfg).s] += 1;
    }
    for (c, m) in counts.iter().zip(cfg.mu()) {
        let sd = (m * (1.0 - m) / n as f64).sqrt();
        assert!((*c as f64 / n as f64 - m).abs() <= 3.0 * sd);
    }
}
