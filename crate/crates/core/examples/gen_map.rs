//! Prints a generated map. With no arguments it reproduces the bundled
//! 80-node map.
//!
//! cargo run --example gen_map -- [rows cols obstacles smoothing seed]

use synclearn::coverage::generate_map;
use synclearn::fixtures::{GRID80_SEED, GRID80_SMOOTHING};

fn main() {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let [rows, cols, obstacles, smoothing, seed] = match args.as_slice() {
        [] => [10, 10, 20, GRID80_SMOOTHING as u64, GRID80_SEED],
        &[r, c, o, s, seed] => [r, c, o, s, seed],
        _ => {
            eprintln!("usage: gen_map [rows cols obstacles smoothing seed]");
            std::process::exit(2);
        }
    };
    let map = generate_map(
        rows as usize,
        cols as usize,
        obstacles as usize,
        &[1, 3, 5, 7],
        smoothing as usize,
        seed,
    )
    .unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1);
    });
    print!("{map}");
}
