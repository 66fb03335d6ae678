//! Tick-by-tick reference simulator for always-awake, delay-free, lossless
//! pulse coupling. Shares no code with the event engine: phases, the
//! advancement rule and the metrics are recomputed here from scratch.

/// Per-period observations.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    /// `(tick, node)` in firing order.
    pub fires: Vec<(u64, u32)>,
    /// Literal and circular average phase difference at each boundary `kT`.
    pub dphi_literal: Vec<f64>,
    pub dphi_circular: Vec<f64>,
    /// Summed phase jumps per period, divided by the node count.
    pub dplus: Vec<f64>,
}

fn advance(phi: f64, eps: f64, sigma: f64) -> f64 {
    if eps < phi && phi < 1.0 - eps {
        1.0 - sigma * (1.0 - phi)
    } else {
        phi
    }
}

fn dphi(adj: &[Vec<usize>], phase: &[f64], circular: bool) -> f64 {
    let mut total = 0.0;
    let mut counted = 0usize;
    for (i, ns) in adj.iter().enumerate() {
        if ns.is_empty() {
            continue;
        }
        let mut s = 0.0;
        for &j in ns {
            let d = (phase[i] - phase[j]).abs();
            s += if circular { d.min(1.0 - d) } else { d };
        }
        total += s / ns.len() as f64;
        counted += 1;
    }
    total / counted as f64
}

/// `adj[i]` lists the nodes `i` hears, ascending. `elapsed[i]` is the number of
/// ticks node `i` is into its period at time 0.
pub fn simulate(adj: &[Vec<usize>], period: u64, eps: f64, sigma: f64, elapsed: &[u64], horizon: u32) -> OracleRun {
    let n = adj.len();
    let p = period as f64;
    // Ticks until each node's next fire.
    let mut rem: Vec<u64> = elapsed.iter().map(|&e| period - e).collect();
    let mut out = OracleRun {
        fires: Vec::new(),
        dphi_literal: Vec::new(),
        dphi_circular: Vec::new(),
        dplus: Vec::new(),
    };
    let mut jump_sum = 0.0;
    let mut t = 0u64;
    loop {
        if t > 0 && t.is_multiple_of(period) {
            let phase: Vec<f64> = rem.iter().map(|&r| (p - r as f64) / p).collect();
            out.dphi_literal.push(dphi(adj, &phase, false));
            out.dphi_circular.push(dphi(adj, &phase, true));
            out.dplus.push(jump_sum / n as f64);
            jump_sum = 0.0;
            if t / period == horizon as u64 {
                return out;
            }
        }
        let mut heard: Vec<(usize, usize)> = Vec::new();
        for (i, r) in rem.iter_mut().enumerate() {
            if *r == 0 {
                out.fires.push((t, i as u32));
                *r = period;
                for (r, ns) in adj.iter().enumerate() {
                    if ns.contains(&i) {
                        heard.push((r, i));
                    }
                }
            }
        }
        heard.sort_unstable();
        for (r, _sender) in heard {
            let old = (p - rem[r] as f64) / p;
            let new = advance(old, eps, sigma);
            if new <= old {
                continue;
            }
            let d = (((1.0 - new) * p).round() as u64).max(1);
            if d < rem[r] {
                rem[r] = d;
                jump_sum += ((p - d as f64) / p - old).abs();
            }
        }
        for r in rem.iter_mut() {
            *r -= 1;
        }
        t += 1;
    }
}
