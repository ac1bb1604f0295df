use super::SocTrajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cycle {
    /// Fraction of e_max.
    pub depth: f64,
    /// 0.5 for a half cycle, 1.0 for a full cycle.
    pub weight: f64,
}

pub type CycleList = Vec<Cycle>;

/// Local extrema of `xs`, endpoints included, plateaus collapsed.
pub fn turning_points(xs: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(xs.len());
    for &x in xs {
        if pts.last() == Some(&x) {
            continue;
        }
        if pts.len() >= 2 {
            let a = pts[pts.len() - 2];
            let b = pts[pts.len() - 1];
            if (b - a) * (x - b) > 0.0 {
                // b lies on a monotone run and is not an extremum
                pts.pop();
            }
        }
        pts.push(x);
    }
    pts
}

/// Four-point rainflow counting. Unclosed excursions are emitted as half
/// cycles; two residual half cycles of identical depth are reported as one
/// full cycle.
pub fn rainflow_from_points(xs: &[f64]) -> CycleList {
    let mut out = Vec::new();
    let mut stack: Vec<f64> = Vec::new();
    for p in turning_points(xs) {
        stack.push(p);
        while stack.len() >= 4 {
            let n = stack.len();
            let (a, b, c, d) = (stack[n - 4], stack[n - 3], stack[n - 2], stack[n - 1]);
            let inner = (c - b).abs();
            if inner <= (b - a).abs() && inner <= (d - c).abs() {
                if inner > 0.0 {
                    out.push(Cycle { depth: inner, weight: 1.0 });
                }
                stack.truncate(n - 3);
                stack.push(d);
            } else {
                break;
            }
        }
    }
    let mut halves: Vec<f64> = stack
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|&d| d > 0.0)
        .collect();
    halves.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < halves.len() {
        if i + 1 < halves.len() && halves[i] == halves[i + 1] {
            out.push(Cycle { depth: halves[i], weight: 1.0 });
            i += 2;
        } else {
            out.push(Cycle { depth: halves[i], weight: 0.5 });
            i += 1;
        }
    }
    out
}

pub fn rainflow_cycles(traj: &SocTrajectory) -> CycleList {
    rainflow_from_points(&traj.soc)
}
