use gladmix::chains::{ChainSpec, StrengthTable};
use gladmix::exact::assemble_kernel;
use gladmix::flows::xt_canonical_congestion;
use gladmix::measures::stationary_distribution;
use gladmix::rat;
use num::ToPrimitive;

fn main() {
    let max_n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let tables: Vec<[i64; 3]> = vec![[1, 3, 7], [1, 4, 16], [1, 3, 8], [2, 5, 11], [1, 5, 25]];
    let mut worst_ratio = 0.0f64;
    let mut worst_desc = String::new();
    for n in 2..=max_n {
        for a in 0..=n {
            for b in 0..=n - a {
                let c = n - a - b;
                for table in &tables {
                    let spec = ChainSpec::JumpHop {
                        counts: [a, b, c],
                        strengths: StrengthTable::from_ints(table).unwrap(),
                    };
                    let kernel = assemble_kernel(&spec).unwrap();
                    let (pi, _) = stationary_distribution(&spec).unwrap();
                    let report = xt_canonical_congestion(&spec, &kernel, &pi).unwrap();
                    let phi = report.max_value.to_f64().unwrap();
                    let ratio = phi / n as f64;
                    if ratio > worst_ratio {
                        worst_ratio = ratio;
                        worst_desc = format!("counts ({a},{b},{c}) s={table:?} phi={} (~{phi:.3}) vs n={n}", report.max_value);
                    }
                    if report.max_value > rat(n as i64, 1) {
                        println!("VIOLATION: counts ({a},{b},{c}) s={table:?}: phi={} > n={n}", report.max_value);
                    }
                }
            }
        }
        println!("n themes <= {n} done; worst ratio so far {worst_ratio:.4}: {worst_desc}");
    }
}
