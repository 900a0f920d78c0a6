//! Builds the fractal edge set top-down, branch by branch, and compares it
//! with the lazy bottom-up oracle on a finite window.

use std::collections::HashSet;

use trapwalk::geometry::{Configuration, FractalConfig, Vertex};

type Key = ((i128, i128), (i128, i128));

fn key(a: (i128, i128), b: (i128, i128)) -> Key {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Explicit {
    edges: HashSet<Key>,
}

impl Explicit {
    fn add_path(&mut self, pts: &[(i128, i128)]) {
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
            let mut p = a;
            while p != b {
                let q = (p.0 + dx, p.1 + dy);
                self.edges.insert(key(p, q));
                p = q;
            }
        }
    }

    /// All structures on lines `|y| <= y_span` with some column `<= x_max`.
    fn build(gamma: f64, top: u32, x_max: i128, y_span: i128) -> Self {
        let b = |k: u32| 4 * 3i128.pow(k * (k - 1) / 2);
        let q = |k: u32| 3i128.pow(k) - 1;
        let c = |k: u32| 3i128.pow((k - 1) * (k - 2) / 2);
        let e = |k: u32| {
            let mut e = 1i128;
            // Smallest e with gamma^e >= k, by repeated multiplication.
            let mut g = gamma;
            while g < k as f64 * (1.0 - 1e-12) {
                g *= gamma;
                e += 1;
            }
            e.min(c(k))
        };

        // Tips of every order, generated from the single infinite top branch.
        let mut tips = vec![Vec::new(); top as usize + 1];
        tips[top as usize].push(0i128);
        for k in (1..top).rev() {
            let parents = tips[k as usize + 1].clone();
            for p in parents {
                for j in 0..q(k) {
                    let t = p + j * b(k);
                    if t <= x_max {
                        tips[k as usize].push(t);
                    }
                }
            }
        }

        let mut out = Explicit { edges: HashSet::new() };
        for y in -y_span..=y_span {
            if y == 0 || y % 3 != 0 {
                continue;
            }
            let k = (y / 3).trailing_zeros() + 1;
            if k > top {
                continue;
            }
            if k == top {
                out.add_path(&[(0, y), (x_max + 2, y)]);
                continue;
            }
            let s = 3i128 << (k - 1);
            for &t in &tips[k as usize] {
                let corner = t + b(k) - 1;
                out.add_path(&[(t, y), (corner, y)]);
                // The root must land on a line of the next order.
                let up = y + s;
                let root = if ((up / s) / 2) % 2 != 0 && (up / s) % 2 == 0 { up } else { y - s };
                assert_eq!(
                    ((root / 3).trailing_zeros() + 1),
                    k + 1,
                    "root of branch at ({t},{y}) misses the parent line"
                );
                out.add_path(&[(corner, y), (corner, root)]);
                if k >= 2 {
                    let d = corner - 2 * c(k);
                    let left = d - e(k);
                    out.add_path(&[(d, y), (d, y + 1), (left, y + 1), (left, y + 2), (left + c(k), y + 2)]);
                }
            }
        }
        out
    }

    fn neighbors(&self, v: (i128, i128)) -> Vec<(i128, i128)> {
        let (x, y) = v;
        [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
            .into_iter()
            .filter(|&u| self.edges.contains(&key(v, u)))
            .collect()
    }
}

fn compare(gamma: f64, top: u32, x_max: i128, y_min: i128, y_max: i128) {
    let lazy = FractalConfig::new(gamma, top).unwrap();
    let explicit = Explicit::build(gamma, top, x_max + 10, 3 << top);
    let mut checked = 0;
    for y in y_min..=y_max {
        for x in 0..=x_max {
            let got: Vec<(i128, i128)> = lazy
                .neighbors(Vertex::new(x, y))
                .unwrap()
                .iter()
                .map(|u| (u.x, u.y))
                .collect();
            assert_eq!(got, explicit.neighbors((x, y)), "at ({x},{y}) gamma {gamma} order {top}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn lazy_oracle_matches_explicit_construction_gamma_two() {
    compare(2.0, 5, 3000, -40, 90);
}

#[test]
fn lazy_oracle_matches_explicit_construction_slow_gamma() {
    // Entrances saturate at the core length for small orders.
    compare(1.1, 5, 3000, -40, 90);
}

#[test]
fn lazy_oracle_matches_explicit_construction_order_six() {
    compare(3.0, 6, 2000, -100, 180);
}
