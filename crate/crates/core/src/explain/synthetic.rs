//! Synthetic games with known structure, for validating Shapley estimators.

use rand::Rng;

use super::coalition::Coalition;
use super::shapley::FnGame;

/// `v(C) = Σ_{i∈C} w_i`; the Shapley value of feature `i` is `w_i`.
pub fn additive_game(weights: Vec<f64>) -> FnGame<impl Fn(&Coalition) -> f64> {
    FnGame::new(weights.len(), move |c: &Coalition| c.indices().iter().map(|&i| weights[i]).sum())
}

/// Random game on `d ≤ 16` features: additive weights in `[-5, 5]`, pairwise
/// interactions in `[-1, 1]`, plus an arbitrary higher-order term in
/// `[-0.5, 0.5]` per coalition.
pub fn random_game<R: Rng + ?Sized>(d: usize, rng: &mut R) -> FnGame<impl Fn(&Coalition) -> f64> {
    assert!(d <= 16, "random_game tabulates 2^d coalitions");
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let u: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let noise: Vec<f64> = (0..1usize << d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    FnGame::new(d, move |c: &Coalition| {
        let members = c.indices();
        let mut v: f64 = members.iter().map(|&i| w[i]).sum();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                v += u[i * d + j];
            }
        }
        let mask: usize = members.iter().map(|&i| 1usize << i).sum();
        v + noise[mask]
    })
}
