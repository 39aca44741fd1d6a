//! Build a Gaussian Chebyshev policy, sample from it, check the score function
//! and round-trip it through the JSON policy file.
//!
//!     cargo run --release --example policy_io

use chebycar::env::{EnvKind, McParams};
use chebycar::policy::{init_policy, PolicyFile, PolicyInit};
use chebycar::rng;

fn main() -> chebycar::Result<()> {
    let init = PolicyInit {
        seed: 3,
        amplitude: 0.1,
        sigma_const: 0.5,
        with_critic: false,
    };
    let pol = init_policy(3, 2, McParams::default().bounds(), init)?;
    let obs = [-0.5, 0.01];
    let mut r = rng::seeded(3, 0);
    for _ in 0..5 {
        let s = pol.act_stochastic(&obs, &mut r)?;
        println!(
            "a={:+.4} mu={:+.4} sigma={:.4} log p={:+.4}",
            s.action, s.mu, s.sigma, s.log_prob
        );
    }
    println!("deterministic: {:+.6}", pol.act_deterministic(&obs)?);

    let g = pol.logprob_grad(&obs, 0.3)?;
    println!("score |d/dmu|={} |d/dsigma|={}", g.mu.len(), g.sigma.len());

    let dir = tempfile_dir();
    let path = dir.join("policy.json");
    PolicyFile::new(EnvKind::MountainCar, "example", 3, &pol).save(&path)?;
    let back = PolicyFile::load(&path)?.into_policy()?;
    assert_eq!(back.act_deterministic(&obs)?, pol.act_deterministic(&obs)?);
    println!("saved and reloaded {}", path.display());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("chebycar-policy-io");
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}
