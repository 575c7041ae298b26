//! Fixed-step classical Runge–Kutta.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    rk4_step_checked(f, t, y, h, |_| true).expect("unchecked step cannot be rejected")
}

/// RK4 step that gives up (`None`) as soon as a stage point or the result
/// fails `admissible`.
pub fn rk4_step_checked<F, A>(f: &F, t: f64, y: &[f64], h: f64, admissible: A) -> Option<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    A: Fn(&[f64]) -> bool,
{
    let axpy =
        |a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect() };
    let k1 = f(t, y);
    let y2 = axpy(0.5 * h, &k1);
    if !admissible(&y2) {
        return None;
    }
    let k2 = f(t + 0.5 * h, &y2);
    let y3 = axpy(0.5 * h, &k2);
    if !admissible(&y3) {
        return None;
    }
    let k3 = f(t + 0.5 * h, &y3);
    let y4 = axpy(h, &k3);
    if !admissible(&y4) {
        return None;
    }
    let k4 = f(t + h, &y4);
    let next: Vec<f64> = (0..y.len())
        .map(|m| y[m] + h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]))
        .collect();
    admissible(&next).then_some(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_exponential() {
        let f = |_t: f64, y: &[f64]| vec![-y[0]];
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = vec![1.0];
            for s in 0..n {
                y = rk4_step(&f, s as f64 * h, &y, h);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((14.0..18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn rejection_reports_none() {
        let f = |_t: f64, _y: &[f64]| vec![-10.0];
        assert!(rk4_step_checked(&f, 0.0, &[0.5], 0.1, |y| y[0] >= 0.0).is_none());
    }
}
