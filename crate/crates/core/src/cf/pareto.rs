//! Dominance utilities for minimization problems.

use crate::scalar::Scalar;

/// `a` dominates `b`: no worse everywhere and strictly better somewhere.
pub fn dominates<T: Scalar>(a: &[T], b: &[T]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp_nan_last(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Indices of the non-dominated points, ascending.
///
/// Points are swept in lexicographic order: any dominator of a point sorts
/// before it, so comparing against the front collected so far suffices.
/// Points with identical objectives do not dominate each other and are all
/// kept.
pub fn pareto_front_indices<T: Scalar, V: AsRef<[T]>>(objs: &[V]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..objs.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(objs[a].as_ref(), objs[b].as_ref()).then(a.cmp(&b)));
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates(objs[f].as_ref(), objs[i].as_ref())) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Fronts of successive non-domination rank (fast non-dominated sort).
pub fn non_dominated_sort<T: Scalar, V: AsRef<[T]>>(objs: &[V]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (objs[i].as_ref(), objs[j].as_ref());
            if dominates(a, b) {
                dominated_by_me[i].push(j);
                dom_count[j] += 1;
            } else if dominates(b, a) {
                dominated_by_me[j].push(i);
                dom_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dom_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                dom_count[j] -= 1;
                if dom_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front`, in `front` order. Boundary
/// points on any objective get infinity.
pub fn crowding_distance<T: Scalar, V: AsRef<[T]>>(objs: &[V], front: &[usize]) -> Vec<T> {
    let n = front.len();
    let mut dist = vec![T::zero(); n];
    if n == 0 {
        return dist;
    }
    let m = objs[front[0]].as_ref().len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            objs[front[a]].as_ref()[k]
                .total_cmp_nan_last(&objs[front[b]].as_ref()[k])
                .then(front[a].cmp(&front[b]))
        });
        let lo = objs[front[order[0]]].as_ref()[k];
        let hi = objs[front[order[n - 1]]].as_ref()[k];
        dist[order[0]] = T::infinity();
        dist[order[n - 1]] = T::infinity();
        let span = hi - lo;
        if span > T::zero() {
            for w in 1..n.saturating_sub(1) {
                let prev = objs[front[order[w - 1]]].as_ref()[k];
                let next = objs[front[order[w + 1]]].as_ref()[k];
                dist[order[w]] = dist[order[w]] + (next - prev) / span;
            }
        }
    }
    dist
}
