//! The sum-of-absolute-values integrand, its plateau, and the pointwise
//! minimizer that drives controls onto the alphabet.
//!
//! ```bash
//! cargo run --example cost_profile
//! ```

use soav::cost::CostProfile;
use soav::plant::Alphabet;

fn main() -> soav::Result<()> {
    let alphabet = Alphabet::new(vec![0.0, 0.2, 0.6, 1.0], vec![0.1, 0.2, 0.3, 0.4])?;
    let profile = CostProfile::new(&alphabet)?;

    println!("levels  {:?}", alphabet.symmetric_levels());
    println!("plateau {:.6}  (integrand on [-U_min, U_min])", profile.plateau());
    println!("J_min over T = 5: {:.6}\n", profile.jmin(5.0));

    println!("{:>6}  {:>10}", "u", "L(u)");
    for k in 0..=10 {
        let u = -1.0 + 0.2 * k as f64;
        println!("{u:>6.2}  {:>10.6}", profile.integrand(u)?);
    }

    println!("\nargmin over |u| <= 1 of L(u) + q u:");
    println!("{:>6}  {:>8}  tie interval", "q", "u*");
    for q in [-2.0, -1.0, -0.5, -0.3, 0.0, 0.25, 0.4, 0.7, 1.0, 1.5] {
        let m = profile.pointwise_minimizer(q);
        let tie = m.tie.map_or(String::new(), |(a, b)| format!("[{a}, {b}]"));
        println!("{q:>6.2}  {:>8.3}  {tie}", m.value);
    }
    Ok(())
}
