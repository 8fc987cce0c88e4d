//! Regenerate the seeded fixtures and the synthetic 113-bus case under `data/`.
//!
//! ```text
//! cargo run -p gridrestore-core --example gen_data
//! ```

#[path = "../tests/common/mod.rs"]
mod common;

use gridrestore::io;

fn main() -> std::io::Result<()> {
    let dir = common::data_dir();
    for seed in common::FIXTURE_SEEDS {
        let (case, scenario) = common::random_instance(seed);
        let (c, s) = common::fixture_paths(seed);
        io::write_case(&dir.join(c), &case)?;
        io::write_scenario(&dir.join(s), &scenario)?;
    }
    let (case, scenario) = common::synthetic_113();
    io::write_case(&dir.join("cases/synthetic113.json"), &case)?;
    io::write_scenario(&dir.join("scenarios/synthetic113_all.json"), &scenario)?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
