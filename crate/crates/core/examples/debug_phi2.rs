use gladmix::chains::{ChainSpec, StrengthTable};
use gladmix::exact::assemble_kernel;
use gladmix::flows::{build_xt_path, xt_canonical_congestion};
use gladmix::measures::stationary_distribution;
use num::ToPrimitive;

fn main() {
    let spec = ChainSpec::JumpHop {
        counts: [1, 4, 1],
        strengths: StrengthTable::from_ints(&[1, 5, 25]).unwrap(),
    };
    let space = spec.state_space();
    let kernel = assemble_kernel(&spec).unwrap();
    let (pi, _) = stationary_distribution(&spec).unwrap();
    let report = xt_canonical_congestion(&spec, &kernel, &pi).unwrap();
    let states = space.enumerate().unwrap();
    let mut edges: Vec<_> = report.per_edge.clone();
    edges.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top edges by phi:");
    for ((u, v), phi) in edges.iter().take(6) {
        println!(
            "  {} -> {}  phi ~ {:.3}  P = {}  pi(u) = {}",
            states[*u as usize], states[*v as usize],
            phi.to_f64().unwrap(),
            kernel.prob(*u as usize, *v as usize),
            pi.probs[*u as usize],
        );
    }
    let (wu, wv) = report.max_edge;
    let (wu, wv) = (wu as usize, wv as usize);
    println!("worst edge: {} -> {}", states[wu], states[wv]);
    let mut count = 0;
    for sx in &states {
        for sy in &states {
            if sx == sy { continue; }
            let paths = build_xt_path(sx.as_word().unwrap(), sy.as_word().unwrap(), &spec).unwrap();
            for (w, seq) in &paths {
                let uses = seq.windows(2).any(|p| {
                    p[0].to_string() == states[wu].to_string() && p[1].to_string() == states[wv].to_string()
                });
                if uses && count < 12 {
                    count += 1;
                    let strs: Vec<String> = seq.iter().map(|a| a.to_string()).collect();
                    println!("  pair {sx}->{sy} w={w}: {}", strs.join(" "));
                }
            }
        }
    }
}
