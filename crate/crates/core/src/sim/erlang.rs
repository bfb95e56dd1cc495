/// Blocking probability of an M/M/m/m loss system offered `load` Erlangs,
/// by the recursion `B(k) = a B(k-1) / (k + a B(k-1))`, `B(0) = 1`.
pub fn erlang_b(servers: u32, load: f64) -> f64 {
    (1..=servers).fold(1.0, |b, k| load * b / (k as f64 + load * b))
}
