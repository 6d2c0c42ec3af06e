//! Compare analytic gradients with central differences on random layers.

use satnet::oracle::{run_gradcheck, GradcheckOptions};

fn main() -> satnet::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let report = run_gradcheck(&GradcheckOptions { instances: 5, seed, ..Default::default() })?;
    println!("{report}");
    Ok(())
}
