use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vxslice::agent::{Agent, AttentionActor, AttentionMode, ExplainTargets, TrainConfig, Variant};
use vxslice::explain::normalize_importance;
use vxslice::nn::gradcheck::{numeric_gradient, relative_error};
use vxslice::nn::{Activation, DenseNet};

const H: f64 = 1e-6;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

/// Loss `Σ c ⊙ net(x)` with fixed random `c`, so `dL/dY = c`.
fn linear_loss(net: &DenseNet, x: &Array2<f64>, c: &Array2<f64>) -> f64 {
    (&net.predict_batch(x).unwrap() * c).sum()
}

pub fn random_net(rng: &mut ChaCha8Rng) -> DenseNet {
    let depth = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=5)).collect();
    let choices = [Activation::Identity, Activation::Relu, Activation::Sigmoid, Activation::Softmax];
    let acts: Vec<Activation> = (0..depth).map(|_| choices[rng.gen_range(0..choices.len())]).collect();
    DenseNet::new(&sizes, &acts, rng).unwrap()
}

#[test]
fn dense_net_parameter_and_input_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let net = random_net(&mut rng);
        let x = random_matrix(3, net.input_dim(), &mut rng);
        let c = random_matrix(3, net.output_dim(), &mut rng);
        let cache = net.forward_batch(&x).unwrap();
        let (grads, dx) = net.backward(&cache, &c).unwrap();

        let numeric = numeric_gradient(&net.flat_params(), H, |p| {
            let mut n = net.clone();
            n.set_flat_params(p).unwrap();
            linear_loss(&n, &x, &c)
        });
        let err = relative_error(&grads.flat(), &numeric, 1e-8);
        assert!(err < 1e-4, "parameter gradient rel err {err} for {:?}", net.signature());

        let flat_x: Vec<f64> = x.iter().copied().collect();
        let numeric_x = numeric_gradient(&flat_x, H, |p| {
            let xp = Array2::from_shape_vec(x.raw_dim(), p.to_vec()).unwrap();
            linear_loss(&net, &xp, &c)
        });
        let analytic_x: Vec<f64> = dx.iter().copied().collect();
        assert!(relative_error(&analytic_x, &numeric_x, 1e-8) < 1e-4);
    }
}

fn small_actor(mode: AttentionMode, seed: u64) -> AttentionActor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = AttentionActor::new(5, 3, &[6], mode, &mut rng).unwrap();
    // move the attention layer away from its near-uniform start
    let p: Vec<f64> = actor
        .attention
        .flat_params()
        .iter()
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    actor.attention.set_flat_params(&p).unwrap();
    actor
}

#[test]
fn actor_gradients_reach_attention_and_body() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..10 {
        let actor = small_actor(AttentionMode::Learned, seed);
        let s = random_matrix(4, 5, &mut rng);
        let c = random_matrix(4, 3, &mut rng);
        let cache = actor.forward_batch(&s).unwrap();
        let g = actor.backward(&cache, &c).unwrap();
        let loss = |a: &AttentionActor| (&a.predict_batch(&s).unwrap() * &c).sum();

        let num_att = numeric_gradient(&actor.attention.flat_params(), H, |p| {
            let mut a = actor.clone();
            a.attention.set_flat_params(p).unwrap();
            loss(&a)
        });
        assert!(relative_error(&g.attention.as_ref().unwrap().flat(), &num_att, 1e-8) < 1e-4);

        let num_body = numeric_gradient(&actor.body.flat_params(), H, |p| {
            let mut a = actor.clone();
            a.body.set_flat_params(p).unwrap();
            loss(&a)
        });
        assert!(relative_error(&g.body.flat(), &num_body, 1e-8) < 1e-4);
    }
}

#[test]
fn explanation_loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let actor = small_actor(AttentionMode::Learned, 100 + seed);
        let s = random_matrix(3, 5, &mut rng);
        let mut targets = Array2::zeros((3, 5));
        for mut row in targets.rows_mut() {
            let raw: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            row.assign(&ndarray::Array1::from(normalize_importance(&raw)));
        }
        let (_, g) = actor.explanation_loss(&s, &targets).unwrap();
        assert!(g.body.l2_norm() == 0.0, "explanation loss must not touch the body");
        let numeric = numeric_gradient(&actor.attention.flat_params(), H, |p| {
            let mut a = actor.clone();
            a.attention.set_flat_params(p).unwrap();
            a.explanation_loss(&s, &targets).unwrap().0
        });
        assert!(relative_error(&g.attention.unwrap().flat(), &numeric, 1e-10) < 1e-4);
    }
}

#[test]
fn total_loss_gradient_is_ddpg_plus_weighted_explanation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TrainConfig {
        variant: Variant::AttentionSverl,
        actor_hidden: vec![8],
        critic_hidden: vec![8],
        ..Default::default()
    };
    let agent = Agent::new(5, 4, &cfg, &mut rng).unwrap();
    let states = random_matrix(6, 5, &mut rng);
    let explain = ExplainTargets {
        states: random_matrix(2, 5, &mut rng),
        targets: Array2::from_elem((2, 5), 0.2),
    };
    let (_, _, base) = agent.actor_gradients(&states, None, 0.0).unwrap();
    let (_, _, zero) = agent.actor_gradients(&states, Some(&explain), 0.0).unwrap();
    let lambda = 0.37;
    let (_, _, total) = agent.actor_gradients(&states, Some(&explain), lambda).unwrap();
    let (_, expl) = agent.actor.explanation_loss(&explain.states, &explain.targets).unwrap();

    assert_eq!(zero, base, "λ = 0 must leave the DDPG gradient untouched");
    let att = |g: &vxslice::agent::ActorGradients| g.attention.as_ref().unwrap().flat();
    let expected: Vec<f64> = att(&base).iter().zip(att(&expl)).map(|(b, e)| b + lambda * e).collect();
    assert!(relative_error(&att(&total), &expected, 1e-12) < 1e-9);
    assert_eq!(total.body, base.body);
}
