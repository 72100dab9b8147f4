//! Middle-layer disagreement scores.
//!
//! A span's pooled representation at layer j is compared across layers via
//! cosine distance. Two aggregations are provided: consecutive middle layers
//! (`con_mlds`) and each middle layer against the final layer (`f_mlds`).
//! Both divide by N = n - m + 1; for `con_mlds` that means n - m summands
//! over N, which is kept as published rather than "corrected".

use std::collections::BTreeMap;

use crate::error::Error;
use crate::types::LayerStates;

/// Near-zero vectors carry no agreement evidence; their cosine similarity is
/// defined as 0 instead of propagating NaN.
const ZERO_NORM_EPS: f64 = 1e-12;

/// Middle-layer window [m, n] within a model whose final layer is L.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerWindow {
    pub m: usize,
    pub n: usize,
    /// Final layer index.
    pub last: usize,
}

impl LayerWindow {
    pub fn new(m: usize, n: usize, last: usize) -> Result<Self, Error> {
        if m < 1 || m > n || n > last {
            return Err(Error::InvalidConfig(format!(
                "layer window needs 1 <= m <= n <= L, got m={m} n={n} L={last}"
            )));
        }
        Ok(LayerWindow { m, n, last })
    }

    /// Number of middle layers N.
    pub fn width(&self) -> usize {
        self.n - self.m + 1
    }

    /// Layers a span must pool to evaluate either metric: m..=n plus L.
    pub fn layers_needed(&self) -> Vec<usize> {
        let mut layers: Vec<usize> = (self.m..=self.n).collect();
        if self.last > self.n {
            layers.push(self.last);
        }
        layers
    }
}

/// Default middle-layer window: m = floor(L/3), n = floor(2L/3).
pub fn default_window(num_layers: usize) -> Result<LayerWindow, Error> {
    if num_layers < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 layers for a middle window, got {num_layers}"
        )));
    }
    let m = (num_layers / 3).max(1);
    let n = 2 * num_layers / 3;
    LayerWindow::new(m, n, num_layers)
}

/// Cosine similarity, clamped to [-1, 1]. Identical inputs short-circuit to
/// exactly 1 so self-comparison terms vanish without rounding residue.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a == b {
        return Ok(if norm(a) < ZERO_NORM_EPS { 0.0 } else { 1.0 });
    }
    let (na, nb) = (norm(a), norm(b));
    if na < ZERO_NORM_EPS || nb < ZERO_NORM_EPS {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Component-wise mean of the hidden vectors at layer `layer` over positions
/// p..=q.
pub fn mean_pool(
    states: &LayerStates,
    p: usize,
    q: usize,
    layer: usize,
) -> Result<Vec<f64>, Error> {
    if p > q {
        return Err(Error::InvalidConfig(format!(
            "span positions must satisfy p <= q, got p={p} q={q}"
        )));
    }
    let mut acc = states.state(p, layer)?.to_vec();
    for pos in p + 1..=q {
        for (a, v) in acc.iter_mut().zip(states.state(pos, layer)?) {
            *a += v;
        }
    }
    let count = (q - p + 1) as f64;
    for a in acc.iter_mut() {
        *a /= count;
    }
    Ok(acc)
}

/// Consecutive middle-layer disagreement:
/// (1/N) * sum_{j=m}^{n-1} (1 - cos(H_j, H_{j+1})).
pub fn con_mlds(pooled: &BTreeMap<usize, Vec<f64>>, window: &LayerWindow) -> Result<f64, Error> {
    let mut sum = 0.0;
    for j in window.m..window.n {
        let a = pooled.get(&j).ok_or(Error::MissingLayer { layer: j })?;
        let b = pooled
            .get(&(j + 1))
            .ok_or(Error::MissingLayer { layer: j + 1 })?;
        sum += 1.0 - cosine_similarity(a, b)?;
    }
    // j = n is read above only as the right end of the last pair; require it
    // explicitly so m = n still validates the window contents.
    if window.m == window.n && !pooled.contains_key(&window.m) {
        return Err(Error::MissingLayer { layer: window.m });
    }
    Ok(sum / window.width() as f64)
}

/// Final-layer-referenced disagreement:
/// (1/N) * sum_{j=m}^{n} (1 - cos(H_j, H_L)).
pub fn f_mlds(pooled: &BTreeMap<usize, Vec<f64>>, window: &LayerWindow) -> Result<f64, Error> {
    let reference = pooled
        .get(&window.last)
        .ok_or(Error::MissingLayer { layer: window.last })?;
    let mut sum = 0.0;
    for j in window.m..=window.n {
        let h = pooled.get(&j).ok_or(Error::MissingLayer { layer: j })?;
        sum += 1.0 - cosine_similarity(h, reference)?;
    }
    Ok(sum / window.width() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pooled_from(entries: &[(usize, Vec<f64>)]) -> BTreeMap<usize, Vec<f64>> {
        entries.iter().cloned().collect()
    }

    #[test]
    fn cosine_self_is_exactly_one() {
        let v = vec![1.0, 2.0, 3.0];
        assert_eq!(cosine_similarity(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn cosine_orthogonal_is_zero() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.70711 is the frozen hand-derived oracle value
    fn cosine_hand_value() {
        // [1,1] vs [1,0] -> 1/sqrt(2)
        let got = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((got - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn cosine_zero_norm_guard() {
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[1e-13, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        // both sides zero hits the equality fast path
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_dimension_mismatch() {
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mean_pool_singleton_is_exact() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let states = LayerStates::from_flat(data, 3, 1, 2).unwrap();
        assert_eq!(
            mean_pool(&states, 1, 1, 1).unwrap(),
            states.state(1, 1).unwrap()
        );
    }

    #[test]
    fn mean_pool_midpoint() {
        // two positions, single layer level beyond embedding
        // position 0 layer 1 = [0,2]; position 1 layer 1 = [2,0]
        let data = vec![9.0, 9.0, 0.0, 2.0, 9.0, 9.0, 2.0, 0.0];
        let states = LayerStates::from_flat(data, 2, 1, 2).unwrap();
        assert_eq!(mean_pool(&states, 0, 1, 1).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn mean_pool_matches_brute_force() {
        let mut data = Vec::new();
        for i in 0..24 {
            data.push((i as f64 * 0.37).sin());
        }
        // 3 positions, L=1, dim 4
        let states = LayerStates::from_flat(data, 3, 1, 4).unwrap();
        let got = mean_pool(&states, 0, 2, 1).unwrap();
        for (k, value) in got.iter().enumerate() {
            let mut sum = 0.0;
            for pos in 0..3 {
                sum += states.state(pos, 1).unwrap()[k];
            }
            assert!((value - sum / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_pool_rejects_bad_ranges() {
        let states = LayerStates::from_flat(vec![0.0; 8], 2, 1, 2).unwrap();
        assert!(mean_pool(&states, 1, 0, 1).is_err());
        assert!(mean_pool(&states, 0, 2, 1).is_err());
        assert!(mean_pool(&states, 0, 1, 5).is_err());
    }

    #[test]
    fn default_window_values() {
        let w = default_window(32).unwrap();
        assert_eq!((w.m, w.n), (10, 21));
        let w = default_window(3).unwrap();
        assert_eq!((w.m, w.n), (1, 2));
        let w = default_window(6).unwrap();
        assert_eq!((w.m, w.n), (2, 4));
        assert!(default_window(2).is_err());
    }

    #[test]
    fn con_mlds_identical_layers_is_zero() {
        let v = vec![0.3, -0.7, 1.1];
        let pooled = pooled_from(&[(1, v.clone()), (2, v.clone()), (3, v.clone())]);
        let w = LayerWindow::new(1, 3, 3).unwrap();
        assert_eq!(con_mlds(&pooled, &w).unwrap(), 0.0);
    }

    #[test]
    fn con_mlds_single_layer_window_is_zero() {
        let pooled = pooled_from(&[(2, vec![1.0, 0.0])]);
        let w = LayerWindow::new(2, 2, 4).unwrap();
        assert_eq!(con_mlds(&pooled, &w).unwrap(), 0.0);
        // the lone window layer must still be present
        let w2 = LayerWindow::new(3, 3, 4).unwrap();
        assert!(matches!(
            con_mlds(&pooled, &w2),
            Err(Error::MissingLayer { layer: 3 })
        ));
    }

    #[test]
    fn con_mlds_hand_value() {
        // window (1,3): H1=[1,0], H2=[0,1], H3=[-1,0]
        // (1/3) * ((1-0) + (1-0)) = 2/3
        let pooled = pooled_from(&[
            (1, vec![1.0, 0.0]),
            (2, vec![0.0, 1.0]),
            (3, vec![-1.0, 0.0]),
        ]);
        let w = LayerWindow::new(1, 3, 3).unwrap();
        assert!((con_mlds(&pooled, &w).unwrap() - 0.66667).abs() < 1e-5);
    }

    #[test]
    fn f_mlds_agreement_with_final_is_zero() {
        let v = vec![2.0, 2.0];
        let pooled = pooled_from(&[(1, v.clone()), (2, v.clone()), (3, v.clone())]);
        let w = LayerWindow::new(1, 2, 3).unwrap();
        assert_eq!(f_mlds(&pooled, &w).unwrap(), 0.0);
    }

    #[test]
    fn f_mlds_single_orthogonal_term() {
        let pooled = pooled_from(&[(2, vec![1.0, 0.0]), (3, vec![0.0, 1.0])]);
        let w = LayerWindow::new(2, 2, 3).unwrap();
        assert_eq!(f_mlds(&pooled, &w).unwrap(), 1.0);
    }

    #[test]
    fn f_mlds_hand_value() {
        // window (1,2), L=3: H1=[1,0], H2=[1,1], H3=[0,1]
        // (1/2) * ((1-0) + (1-1/sqrt(2)))
        let pooled = pooled_from(&[
            (1, vec![1.0, 0.0]),
            (2, vec![1.0, 1.0]),
            (3, vec![0.0, 1.0]),
        ]);
        let w = LayerWindow::new(1, 2, 3).unwrap();
        assert!((f_mlds(&pooled, &w).unwrap() - 0.64645).abs() < 1e-5);
    }

    #[test]
    fn f_mlds_n_equals_last_term_vanishes() {
        // window (2,3) with L=3: the j=3 term compares the stored final-layer
        // vector with itself and must contribute exactly 0.
        let pooled = pooled_from(&[(2, vec![1.0, 0.0]), (3, vec![0.0, 2.0])]);
        let w = LayerWindow::new(2, 3, 3).unwrap();
        // only the j=2 term survives: (1 - 0) / 2
        assert_eq!(f_mlds(&pooled, &w).unwrap(), 0.5);
    }

    #[test]
    fn missing_layer_is_reported() {
        let pooled = pooled_from(&[(1, vec![1.0, 0.0]), (3, vec![0.0, 1.0])]);
        let w = LayerWindow::new(1, 2, 3).unwrap();
        assert!(matches!(
            con_mlds(&pooled, &w),
            Err(Error::MissingLayer { layer: 2 })
        ));
        assert!(matches!(
            f_mlds(&pooled, &w),
            Err(Error::MissingLayer { layer: 2 })
        ));
    }

    // Straight-line transcriptions of the two formulas, kept independent of
    // the library path (own cosine included).
    mod oracle {
        pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na < 1e-12 || nb < 1e-12 {
                return 0.0;
            }
            if a == b {
                return 1.0;
            }
            (dot / (na * nb)).clamp(-1.0, 1.0)
        }

        pub fn con(
            pooled: &std::collections::BTreeMap<usize, Vec<f64>>,
            m: usize,
            n: usize,
        ) -> f64 {
            let cap_n = (n - m + 1) as f64;
            let mut sum = 0.0;
            for j in m..n {
                sum += 1.0 - cosine(&pooled[&j], &pooled[&(j + 1)]);
            }
            sum / cap_n
        }

        pub fn f(
            pooled: &std::collections::BTreeMap<usize, Vec<f64>>,
            m: usize,
            n: usize,
            last: usize,
        ) -> f64 {
            let cap_n = (n - m + 1) as f64;
            let mut sum = 0.0;
            for j in m..=n {
                sum += 1.0 - cosine(&pooled[&j], &pooled[&last]);
            }
            sum / cap_n
        }
    }

    fn random_pooled(seed: u64, last: usize, dim: usize) -> BTreeMap<usize, Vec<f64>> {
        // small deterministic LCG so the oracle comparison stays dependency-free
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        (0..=last)
            .map(|l| (l, (0..dim).map(|_| next()).collect()))
            .collect()
    }

    #[test]
    fn metrics_match_oracle_on_random_instances() {
        for trial in 0..100u64 {
            let last = 3 + (trial % 8) as usize; // L in 3..=10
            let dim = 1 + (trial % 8) as usize; // d in 1..=8
            let pooled = random_pooled(trial + 1, last, dim);
            let w = default_window(last).unwrap();
            let got_con = con_mlds(&pooled, &w).unwrap();
            let got_f = f_mlds(&pooled, &w).unwrap();
            assert!((got_con - oracle::con(&pooled, w.m, w.n)).abs() < 1e-12);
            assert!((got_f - oracle::f(&pooled, w.m, w.n, w.last)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn scale_invariance(
            seed in 0u64..5000,
            scales in proptest::collection::vec(1e-3f64..1e3, 11),
        ) {
            let last = 3 + (seed % 8) as usize;
            let pooled = random_pooled(seed, last, 4);
            let w = default_window(last).unwrap();
            let scaled: BTreeMap<usize, Vec<f64>> = pooled
                .iter()
                .map(|(l, v)| (*l, v.iter().map(|x| x * scales[*l]).collect()))
                .collect();
            let dc = (con_mlds(&pooled, &w).unwrap() - con_mlds(&scaled, &w).unwrap()).abs();
            let df = (f_mlds(&pooled, &w).unwrap() - f_mlds(&scaled, &w).unwrap()).abs();
            prop_assert!(dc <= 1e-9);
            prop_assert!(df <= 1e-9);
        }

        #[test]
        fn ranges_hold(seed in 0u64..5000) {
            let last = 3 + (seed % 8) as usize;
            let pooled = random_pooled(seed, last, 4);
            let w = default_window(last).unwrap();
            let c = con_mlds(&pooled, &w).unwrap();
            let f = f_mlds(&pooled, &w).unwrap();
            let n = w.width() as f64;
            prop_assert!((0.0..=2.0 * (n - 1.0) / n + 1e-12).contains(&c));
            prop_assert!((0.0..=2.0 + 1e-12).contains(&f));
        }
    }
}
