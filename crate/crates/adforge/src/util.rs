use sha2::{Digest, Sha256};

/// Maps `f` over `items` with at most `limit` calls in flight, returning the
/// results in input order.
pub(crate) fn bounded_map<T, R, F>(items: &[T], limit: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let limit = limit.max(1);
    if limit == 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let mut out = Vec::with_capacity(items.len());
    for (chunk_idx, chunk) in items.chunks(limit).enumerate() {
        let base = chunk_idx * limit;
        let f = &f;
        let results: Vec<R> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .enumerate()
                .map(|(j, t)| s.spawn(move || f(base + j, t)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        out.extend(results);
    }
    out
}

/// Stable 64-bit digest of a sequence of byte strings.
pub(crate) fn digest64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}

pub(crate) fn hex_id(parts: &[&[u8]]) -> String {
    format!("{:016x}", digest64(parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_map_preserves_order() {
        let items: Vec<u32> = (0..23).collect();
        let out = bounded_map(&items, 4, |i, x| (i, x * 2));
        for (i, (idx, v)) in out.into_iter().enumerate() {
            assert_eq!(idx, i);
            assert_eq!(v, 2 * i as u32);
        }
    }

    #[test]
    fn digest_separates_parts() {
        assert_ne!(digest64(&[b"ab", b"c"]), digest64(&[b"a", b"bc"]));
    }
}
