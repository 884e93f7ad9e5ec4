//! Order-preserving parallel map over independent work items.

use std::thread;

/// Applies `f` to every index in `0..n` across the available cores and
/// returns the results in index order. The first error (by index) wins.
pub fn try_map<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let workers = thread::available_parallelism().map_or(1, |p| p.get()).min(n.max(1));
    if workers <= 1 || n < 64 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let f = &f;
    let parts: Vec<Result<Vec<T>, E>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = (w * chunk).min(n);
                let hi = ((w + 1) * chunk).min(n);
                scope.spawn(move || (lo..hi).map(f).collect::<Result<Vec<T>, E>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(n);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    #[test]
    fn keeps_order_and_reports_first_error() {
        let v: Result<Vec<usize>, ()> = super::try_map(1000, |i| Ok(i * i));
        assert_eq!(v.unwrap()[999], 999 * 999);
        let e: Result<Vec<usize>, usize> = super::try_map(1000, |i| if i % 300 == 299 { Err(i) } else { Ok(i) });
        assert_eq!(e.unwrap_err(), 299);
    }
}
