//! The one-sided walk of the right half of a Bernoulli substrate: the law of
//! its argmax from path restarts, and the Lindley recursion on one path.

use geoforest::analytics::{mm1_params, prob_max_zero, Side};
use geoforest::walk::{conditioned_sampler, conditioned_z_law, direct_max, lindley_process, lindley_tau};
use rand::SeedableRng;

fn main() -> geoforest::Result<()> {
    let q = mm1_params(1.0 / 3.0, 1.0, Side::Plus)?;
    let law = q.law();
    let p0 = prob_max_zero(&q);

    let z_law = conditioned_z_law(&law, 6, 50_000, p0, 1)?;
    for (n, p) in z_law.iter().enumerate() {
        println!("P(Z = {n}) ~ {p:.4}");
    }
    let s = conditioned_sampler(&law, 3, 50_000, p0, 1e-3, 2)?;
    let mean = s.values.iter().sum::<f64>() / s.values.len() as f64;
    println!("given Z = 3: E[M] ~ {mean:.3} from {} accepted paths", s.values.len());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let incs: Vec<f64> = (0..200).map(|_| law.sample(&mut rng)).collect();
        let w = lindley_process(&incs)?;
        let (tau, w_max) = lindley_tau(&w);
        let (arg, m) = direct_max(&incs);
        println!("200 steps: direct max {m:.4} at {arg}, Lindley {w_max:.4} at {tau}");
    }
    Ok(())
}
