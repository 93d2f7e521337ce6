use gladmix::chains::{ChainSpec, StrengthTable};
use gladmix::combinatorics::State;
use gladmix::exact::assemble_kernel;
use gladmix::flows::{build_xt_path, xt_canonical_congestion};
use gladmix::measures::stationary_distribution;

fn main() {
    let spec = ChainSpec::JumpHop {
        counts: [1, 1, 1],
        strengths: StrengthTable::from_ints(&[1, 2, 8]).unwrap(),
    };
    let space = spec.state_space();
    let kernel = assemble_kernel(&spec).unwrap();
    let (pi, _) = stationary_distribution(&spec).unwrap();
    let report = xt_canonical_congestion(&spec, &kernel, &pi).unwrap();
    let states = space.enumerate().unwrap();
    println!("pi:");
    for (i, st) in states.iter().enumerate() {
        println!("  {i} {st} {}", pi.probs[i]);
    }
    let mut edges: Vec<_> = report.per_edge.clone();
    edges.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("top edges by phi:");
    for ((u, v), phi) in edges.iter().take(8) {
        println!(
            "  {} -> {}  phi = {} (~{:.3})  P = {}",
            states[*u as usize],
            states[*v as usize],
            phi,
            num::ToPrimitive::to_f64(phi).unwrap(),
            kernel.prob(*u as usize, *v as usize),
        );
    }
    // Show every pair's path set through the worst edge.
    let (wu, wv) = report.max_edge;
    println!("worst edge: {} -> {}", states[wu as usize], states[wv as usize]);
    for sx in &states {
        for sy in &states {
            if sx == sy { continue; }
            let paths = build_xt_path(sx.as_word().unwrap(), sy.as_word().unwrap(), &spec).unwrap();
            for (w, seq) in &paths {
                let uses: bool = seq.windows(2).any(|p| {
                    space.rank(&State::Word(p[0].clone())).unwrap().idx == wu as usize
                        && space.rank(&State::Word(p[1].clone())).unwrap().idx == wv as usize
                });
                if uses {
                    let strs: Vec<String> = seq.iter().map(|a| a.to_string()).collect();
                    println!("  pair {sx}->{sy} w={w}: {}", strs.join(" "));
                }
            }
        }
    }
}
