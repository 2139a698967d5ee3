//! Prints partition plans for a dataset size across superpixel counts.
//!
//! cargo run --example partition_plan -- [images] [max_nodes]

use hgcn::graph::plan_partition;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let images = args.first().copied().unwrap_or(10_582);
    let mu = args.get(1).copied().unwrap_or(40_000);
    println!("{:>6} {:>6} {:>6} {:>10}", "xi", "tau", "gamma", "last");
    for xi in [50, 100, 200, 400, 800] {
        let p = plan_partition(images, xi, mu);
        println!("{xi:>6} {:>6} {:>6} {:>10}", p.tau, p.gamma, p.sizes().last().unwrap());
    }
}
