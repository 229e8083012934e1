//! Independent oracles and generators shared by the integration tests and
//! the acceptance runner.

#![allow(dead_code)]

pub mod checks;

use expgraft::experience::{Trajectory, Transition};
use rand::Rng;

/// Exact 1-D earth mover's distance between two mass vectors on the unit
/// grid `0, 1, ..., n-1`, solved as a min-cost flow on the complete
/// bipartite graph with successive shortest paths (Bellman-Ford).
pub fn ot_oracle(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    assert_eq!(n, q.len());
    // nodes: source, p_0..p_{n-1}, q_0..q_{n-1}, sink
    let (src, sink) = (0, 2 * n + 1);
    let nodes = 2 * n + 2;
    struct Edge {
        to: usize,
        cap: f64,
        cost: f64,
    }
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj = vec![Vec::new(); nodes];
    let add = |edges: &mut Vec<Edge>,
               adj: &mut Vec<Vec<usize>>,
               a: usize,
               b: usize,
               cap: f64,
               cost: f64| {
        adj[a].push(edges.len());
        edges.push(Edge { to: b, cap, cost });
        adj[b].push(edges.len());
        edges.push(Edge {
            to: a,
            cap: 0.0,
            cost: -cost,
        });
    };
    for i in 0..n {
        add(&mut edges, &mut adj, src, 1 + i, p[i], 0.0);
        add(&mut edges, &mut adj, 1 + n + i, sink, q[i], 0.0);
        for j in 0..n {
            add(
                &mut edges,
                &mut adj,
                1 + i,
                1 + n + j,
                f64::INFINITY,
                (i as f64 - j as f64).abs(),
            );
        }
    }
    let mut total = 0.0;
    let tiny = 1e-15;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > tiny && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != src {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != src {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        total += push * dist[sink];
    }
}

/// Random probability vector of length `n`; about a third of the entries are
/// exactly zero.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 {
            return raw.iter().map(|x| x / sum).collect();
        }
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn finite_difference<F: FnMut(&[f64]) -> f64>(x: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, or the absolute norm when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

/// A random walk on a coarse lattice, so that different trajectories revisit
/// the same states and grafting has something to find.
pub fn lattice_trajectory<R: Rng>(
    rng: &mut R,
    len: usize,
    dim: usize,
    terminal_end: bool,
) -> Trajectory<f64> {
    let mut s: Vec<f64> = (0..dim).map(|_| rng.random_range(0..3) as f64).collect();
    let transitions = (0..len)
        .map(|i| {
            let mut next = s.clone();
            let k = rng.random_range(0..dim);
            next[k] += if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let r = rng.random_range(-2.0..2.0);
            let t = Transition::new(
                s.clone(),
                vec![rng.random_range(-1.0..1.0)],
                r,
                next.clone(),
                terminal_end && i + 1 == len,
            )
            .unwrap();
            s = next;
            t
        })
        .collect();
    Trajectory::new(transitions, true).unwrap()
}

/// Random state with coordinates drawn from a small grid plus jitter.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.random_range(-3..3) as f64 * 0.5 + rng.random_range(-0.2..0.2))
        .collect()
}
