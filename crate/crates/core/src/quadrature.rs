//! Midpoint quadrature over balls with singular-point exclusion.
//!
//! A ball `B_r(c)` is covered by the `res^d` midpoint cells of its bounding
//! cube; cells whose midpoint lies in the closed ball contribute. When the
//! integrand is not finite at a midpoint (the midpoint sits on the singular
//! set of the weight) the value is replaced by the mean over the `2^d`
//! symmetric offsets `±cell/8` along every axis, i.e. at distance
//! `(cell diagonal)/8` from the midpoint.

/// Midpoints of the cells of `[c - r, c + r]^d` that fall inside the ball.
pub fn ball_midpoints(center: &[f64], radius: f64, resolution: usize) -> (Vec<Vec<f64>>, f64) {
    let d = center.len();
    let cell = 2.0 * radius / resolution as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    let total = resolution.pow(d as u32);
    for _ in 0..total {
        let p: Vec<f64> = (0..d)
            .map(|a| center[a] - radius + (idx[a] as f64 + 0.5) * cell)
            .collect();
        let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
        if r2 <= radius * radius {
            out.push(p);
        }
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < resolution {
                break;
            }
            idx[a] = 0;
        }
    }
    (out, cell)
}

/// The `2^d` points `p + (±s, …, ±s)`.
pub fn symmetric_offsets(p: &[f64], s: f64) -> impl Iterator<Item = Vec<f64>> + '_ {
    let d = p.len();
    (0..(1usize << d)).map(move |mask| {
        (0..d)
            .map(|a| if mask & (1 << a) != 0 { p[a] + s } else { p[a] - s })
            .collect()
    })
}

/// Evaluates `f` at `p`, falling back to the offset average when the value is
/// not finite. Returns `None` when every offset is singular as well.
pub fn sample_regularized<F>(f: &F, p: &[f64], cell: f64) -> Option<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let v = f(p);
    if v.is_finite() {
        return Some(v);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for q in symmetric_offsets(p, cell / 8.0) {
        let w = f(&q);
        if w.is_finite() {
            sum += w;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Result of averaging one or more integrands over the same ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallAverage {
    pub values: Vec<f64>,
    /// Midpoints that contributed.
    pub nodes: usize,
    /// Midpoints dropped because the integrand and all offsets were singular.
    pub skipped: usize,
}

/// Averages several integrands over `B_r(c)` on a shared node set. A node is
/// dropped for all integrands if any of them cannot be regularized there.
pub fn ball_average_many<F>(fs: &[F], center: &[f64], radius: f64, resolution: usize) -> BallAverage
where
    F: Fn(&[f64]) -> f64,
{
    let (nodes, cell) = ball_midpoints(center, radius, resolution);
    let mut sums = vec![0.0; fs.len()];
    let mut used = 0usize;
    let mut skipped = 0usize;
    let mut vals = vec![0.0; fs.len()];
    'nodes: for p in &nodes {
        for (k, f) in fs.iter().enumerate() {
            match sample_regularized(f, p, cell) {
                Some(v) => vals[k] = v,
                None => {
                    skipped += 1;
                    continue 'nodes;
                }
            }
        }
        for (s, v) in sums.iter_mut().zip(&vals) {
            *s += v;
        }
        used += 1;
    }
    let values = if used == 0 {
        vec![f64::NAN; fs.len()]
    } else {
        sums.iter().map(|s| s / used as f64).collect()
    };
    BallAverage {
        values,
        nodes: used,
        skipped,
    }
}

/// Average of a single integrand over `B_r(c)`; `None` if no node survives.
pub fn ball_average<F>(f: F, center: &[f64], radius: f64, resolution: usize) -> Option<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let avg = ball_average_many(&[f], center, radius, resolution);
    (avg.nodes > 0).then(|| avg.values[0])
}

/// Lebesgue measure of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 / 3.0 * std::f64::consts::PI,
        _ => {
            // Γ-free recursion V_d = 2π/d · V_{d-2}
            2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_cover_ball_volume() {
        let (nodes, cell) = ball_midpoints(&[0.0, 0.0], 1.0, 200);
        let area = nodes.len() as f64 * cell * cell;
        assert!((area - std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn singular_midpoint_uses_offsets() {
        let f = |x: &[f64]| x[0].abs().powf(-0.5);
        let v = sample_regularized(&f, &[0.0, 0.3], 0.08).unwrap();
        assert!((v - 0.01f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn fully_singular_integrand_is_dropped() {
        let f = |_: &[f64]| f64::INFINITY;
        assert!(ball_average(f, &[0.0, 0.0], 1.0, 8).is_none());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(3) - 4.18879020478639).abs() < 1e-12);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }
}
