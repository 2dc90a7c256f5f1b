//! Small numeric helpers.

/// Compensated (Neumaier) summation. Keeps per-queue sums stable when the
/// number of queues gets large.
pub(crate) fn csum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
