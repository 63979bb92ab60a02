//! Progressive-filling max-min fair rate allocation.

use alloc::vec;
use alloc::vec::Vec;

/// Reusable buffers for [`allocate`].
#[derive(Default)]
pub(crate) struct Scratch {
    cap: Vec<f64>,
    count: Vec<u32>,
    users: Vec<Vec<u32>>,
    touched: Vec<usize>,
    frozen: Vec<bool>,
}

/// Writes the max-min fair rate of every flow into `rates`.
///
/// `flows[i]` lists the resources flow `i` crosses; `caps[r]` is the capacity
/// of resource `r`. Repeatedly saturates the resource offering the smallest
/// equal share and freezes its flows at that share. Ties go to the lowest
/// resource index.
pub(crate) fn allocate<const K: usize>(caps: &[f64], flows: &[[u32; K]], rates: &mut Vec<f64>, s: &mut Scratch) {
    rates.clear();
    rates.resize(flows.len(), 0.0);
    if flows.is_empty() {
        return;
    }
    s.cap.clear();
    s.cap.extend_from_slice(caps);
    s.count.clear();
    s.count.resize(caps.len(), 0);
    if s.users.len() < caps.len() {
        s.users.resize_with(caps.len(), Vec::new);
    }
    s.touched.clear();
    for (i, res) in flows.iter().enumerate() {
        for &r in res {
            let r = r as usize;
            if s.count[r] == 0 {
                s.touched.push(r);
                s.users[r].clear();
            }
            s.count[r] += 1;
            s.users[r].push(i as u32);
        }
    }
    s.touched.sort_unstable();
    s.frozen.clear();
    s.frozen.resize(flows.len(), false);

    loop {
        let mut best: Option<(usize, f64)> = None;
        for &r in &s.touched {
            if s.count[r] == 0 {
                continue;
            }
            let share = s.cap[r] / f64::from(s.count[r]);
            if best.is_none_or(|(_, b)| share < b) {
                best = Some((r, share));
            }
        }
        let Some((r, share)) = best else { break };
        let share = share.max(0.0);
        for k in 0..s.users[r].len() {
            let i = s.users[r][k] as usize;
            if s.frozen[i] {
                continue;
            }
            s.frozen[i] = true;
            rates[i] = share;
            for &rr in &flows[i] {
                let rr = rr as usize;
                s.cap[rr] -= share;
                s.count[rr] -= 1;
            }
        }
        s.cap[r] = 0.0;
    }
}

/// Convenience wrapper for tests and one-off calls.
pub fn max_min_rates<const K: usize>(caps: &[f64], flows: &[[u32; K]]) -> Vec<f64> {
    let mut rates = vec![];
    allocate(caps, flows, &mut rates, &mut Scratch::default());
    rates
}
