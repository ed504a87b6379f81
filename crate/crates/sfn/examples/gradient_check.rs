//! Tree-propagated gradients against central differences on random trees.

use sfn::check::gradient_check_suite;

fn main() -> sfn::Result<()> {
    let cases = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    for h in [1e-4, 1e-6, 1e-8] {
        let r = gradient_check_suite(cases, 0, h)?;
        println!(
            "h = {h:e}: {} cases ({} redrawn), max relative error {:.3e} at case {}",
            r.cases, r.redrawn, r.max_rel_error, r.worst_case
        );
    }
    Ok(())
}
