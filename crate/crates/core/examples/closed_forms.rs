//! Root probabilities of the substrate families as functions of the slope.

use geoforest::analytics::{
    bernoulli_optimum, bernoulli_root_prob, finite_rooted_direction_prob, finite_rooted_finite_prob,
    periodic_root_prob, weighted_bound, weighted_root_prob,
};

fn main() -> geoforest::Result<()> {
    let (pm, pp) = (2.0 / 3.0, 1.0 / 3.0);
    let (best_a, best) = bernoulli_optimum(pm, pp)?;
    println!("Bernoulli({pm:.3}, {pp:.3}): best slope {best_a:.3} with P(Z = 0) = {best:.4}");
    for a in [0.5, 1.0, 2.0, 3.5] {
        println!("  a = {a:<4} P(Z = 0) = {:.4}", bernoulli_root_prob(a, pm, pp)?);
    }

    println!("periodic (1 right per down, 3 up per left):");
    for a in [1.5, 2.0, 4.0] {
        println!("  a = {a:<4} P(Z = 0) = {:.4}", periodic_root_prob(a, 1, 3)?);
    }

    for m in [1, 2, 5] {
        println!("finite rooted m = {m}: P(finite tree) = {:.4}, P(Z(1) = 0) = {:.4}",
            finite_rooted_finite_prob(m)?, finite_rooted_direction_prob(1.0, m)?);
    }

    let (mu_m, mu_p) = (3.0, 1.5);
    println!("weighted ({mu_m}, {mu_p}): sup P = {:.4}", weighted_bound(mu_m, mu_p));
    for a in [0.5, 1.0, 2.0] {
        println!("  a = {a:<4} P(K = 0) = {:.4}", weighted_root_prob(a, mu_m, mu_p)?);
    }
    Ok(())
}
