//! Euclidean projection onto the ℓ¹ ball.

/// Projects `v` onto `{w : ‖w‖₁ ≤ radius}`.
pub fn proj_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    proj_l1_ball_in_place(&mut out, radius, &mut Vec::new());
    out
}

/// In-place variant of [`proj_l1_ball`]; `work` is reused scratch space.
///
/// Returns the soft-threshold level `θ` (zero when `v` is feasible).
pub fn proj_l1_ball_in_place(v: &mut [f64], radius: f64, work: &mut Vec<f64>) -> f64 {
    assert!(radius > 0.0, "radius must be positive");
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total <= radius {
        return 0.0;
    }
    let theta = threshold(v, radius, total, work);
    for x in v.iter_mut() {
        let a = x.abs() - theta;
        *x = if a > 0.0 { a.copysign(*x) } else { 0.0 };
    }
    theta
}

/// Water-filling level `θ` with `Σ max(|v_i| - θ, 0) = radius`.
///
/// Entries below `(‖v‖₁ - radius)/len` can never be active, so only the
/// rest is sorted.
fn threshold(v: &[f64], radius: f64, total: f64, work: &mut Vec<f64>) -> f64 {
    let lower = (total - radius) / v.len() as f64;
    work.clear();
    work.extend(v.iter().map(|x| x.abs()).filter(|a| *a > lower));
    work.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = lower;
    for (i, a) in work.iter().enumerate() {
        cum += a;
        let cand = (cum - radius) / (i + 1) as f64;
        if *a > cand {
            theta = cand;
        } else {
            break;
        }
    }
    theta.max(0.0)
}
