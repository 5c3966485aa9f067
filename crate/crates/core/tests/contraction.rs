use hmprate::belief::forward_step_into;
use hmprate::{
    birkhoff_coefficients, compose, hilbert_distance, primitivity_certificate, simulate_path, FiniteStateChannel, HiddenMarkovModel, MarkovInput,
    Matrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn positive_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn birkhoff_inequality(m in prop::collection::vec(1e-3f64..1.0, 9), u in positive_vec(3), v in positive_vec(3)) {
        let m = Matrix::from_vec(3, 3, m);
        let tau = birkhoff_coefficients(&m).unwrap().tau;
        let before = hilbert_distance(&u, &v).unwrap();
        let after = hilbert_distance(&m.vec_mul(&u), &m.vec_mul(&v)).unwrap();
        prop_assert!(after <= tau * before + 1e-12, "{} > {} * {}", after, tau, before);
    }

    #[test]
    fn phi_lower_bound(m in prop::collection::vec(1e-3f64..1.0, 9)) {
        let m = Matrix::from_vec(3, 3, m);
        let phi = birkhoff_coefficients(&m).unwrap().phi;
        prop_assert!(phi >= (m.min_entry() / m.max_entry()).powi(2) - 1e-15);
    }

    #[test]
    fn one_norm_is_bounded_by_hilbert(u in positive_vec(4), v in positive_vec(4)) {
        let su: f64 = u.iter().sum();
        let sv: f64 = v.iter().sum();
        let u: Vec<f64> = u.iter().map(|x| x / su).collect();
        let v: Vec<f64> = v.iter().map(|x| x / sv).collect();
        let l1: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        let d = hilbert_distance(&u, &v).unwrap();
        prop_assert!(l1 <= d.exp_m1() + 1e-12);
    }
}

/// Output process of a (0,1)-RLL input with `p00 = 0.5` observed through a BSC(0.1).
fn rll_model() -> HiddenMarkovModel {
    compose(&FiniteStateChannel::bsc(0.1).unwrap(), &MarkovInput::rll01(0.5).unwrap()).unwrap().output
}

#[test]
fn forward_beliefs_forget_their_start() {
    let model = rll_model();
    let cert = primitivity_certificate(&model, model.chain().wielandt_bound()).unwrap();
    assert!(cert.certified);
    assert!(cert.tau_ratio <= 1.0 + 1e-12);
    let ms = model.observations().matrices().unwrap();
    let q = model.num_states();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 60;
    for path_seed in 0..100 {
        let path = simulate_path(&model, n, path_seed);
        let mut a: Vec<f64> = (0..q).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = a.iter().sum();
        a.iter_mut().for_each(|x| *x /= s);
        let mut b = model.pi().to_vec();
        let mut next = vec![0.0; q];
        for (t, y) in path.outputs.iter().enumerate() {
            let m = &ms[y.symbol()];
            forward_step_into(&a, m, &mut next).unwrap();
            std::mem::swap(&mut a, &mut next);
            forward_step_into(&b, m, &mut next).unwrap();
            std::mem::swap(&mut b, &mut next);
            let steps = t + 1;
            if steps >= cert.k {
                let d = hilbert_distance(&a, &b).unwrap();
                let bound = cert.forgetting_bound(steps);
                assert!(d <= bound * (1.0 + 1e-9) + 1e-12, "path {path_seed} step {steps}: {d} > {bound}");
            }
        }
    }
}

#[test]
fn certificate_implies_stationary_mass() {
    let model = rll_model();
    let cert = primitivity_certificate(&model, 20).unwrap();
    let floor = cert.k as f64 * cert.epsilon;
    assert!(model.pi().iter().all(|&p| p >= floor));
}
