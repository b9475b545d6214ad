//! Seeded random problems: every verdict is checked against retraining
//! without the block.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support_constraints::analyze::AnalysisOptions;
use support_constraints::random::{check_soundness, random_problem, RandomConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totals = [0usize; 4];
    for _ in 0..25 {
        let problem = random_problem(&mut rng, &RandomConfig::default());
        let s = check_soundness(&problem, &AnalysisOptions::default())?;
        totals[0] += s.removable;
        totals[1] += s.entailed;
        totals[2] += s.necessary;
        totals[3] += s.violations.len();
    }
    println!(
        "removable {} entailed {} necessary {} violations {}",
        totals[0], totals[1], totals[2], totals[3]
    );
    Ok(())
}
