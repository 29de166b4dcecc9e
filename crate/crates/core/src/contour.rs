//! Marching-squares iso-lines on a rectilinear grid.

use std::collections::HashMap;

pub type Polyline = Vec<(f64, f64)>;

/// Grid edge holding a crossing: horizontal edges join `(i, j)`–`(i+1, j)`,
/// vertical edges join `(i, j)`–`(i, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Iso-lines of `values` at `level`. `values[j][i]` is the sample at
/// `(xs[i], ys[j])`. Segments are joined into polylines; closed loops repeat
/// their first point at the end.
pub fn iso_lines(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    assert_eq!(values.len(), ys.len(), "one row per y coordinate");
    assert!(values.iter().all(|row| row.len() == xs.len()), "one column per x coordinate");
    if xs.len() < 2 || ys.len() < 2 {
        return vec![];
    }

    let above = |i: usize, j: usize| values[j][i] > level;
    let point = |e: Edge| -> (f64, f64) {
        let (a, b, pa, pb) = match e {
            Edge::H(i, j) => (values[j][i], values[j][i + 1], (xs[i], ys[j]), (xs[i + 1], ys[j])),
            Edge::V(i, j) => (values[j][i], values[j + 1][i], (xs[i], ys[j]), (xs[i], ys[j + 1])),
        };
        let t = (level - a) / (b - a);
        (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..xs.len() - 1 {
            let (b00, b10, b11, b01) = (above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1));
            let (bottom, right, top, left) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            let mut crossed = Vec::with_capacity(4);
            if b00 != b10 {
                crossed.push(bottom);
            }
            if b10 != b11 {
                crossed.push(right);
            }
            if b11 != b01 {
                crossed.push(top);
            }
            if b01 != b00 {
                crossed.push(left);
            }
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = 0.25 * (values[j][i] + values[j][i + 1] + values[j + 1][i] + values[j + 1][i + 1]);
                    if (centre > level) == b00 {
                        // Corners 00 and 11 connect through the centre.
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((top, right));
                    }
                }
                _ => {}
            }
        }
    }

    join(&segments).into_iter().map(|chain| chain.into_iter().map(point).collect()).collect()
}

fn join(segments: &[(Edge, Edge)]) -> Vec<Vec<Edge>> {
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        at.entry(*a).or_default().push(k);
        at.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let other = |k: usize, e: Edge| if segments[k].0 == e { segments[k].1 } else { segments[k].0 };
    let next_unused = |e: Edge, used: &[bool]| at[&e].iter().copied().find(|&k| !used[k]);

    let mut chains = Vec::new();
    // Open chains start at edges touched by a single segment (the grid border).
    let mut starts: Vec<Edge> = at.iter().filter(|(_, ks)| ks.len() == 1).map(|(e, _)| *e).collect();
    starts.sort_by_key(|e| match *e {
        Edge::H(i, j) => (0, j, i),
        Edge::V(i, j) => (1, j, i),
    });
    let seeds = starts.into_iter().chain(segments.iter().map(|s| s.0));

    for start in seeds {
        let Some(mut k) = next_unused(start, &used) else { continue };
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            used[k] = true;
            cur = other(k, cur);
            chain.push(cur);
            match next_unused(cur, &used) {
                Some(n) => k = n,
                None => break,
            }
        }
        chains.push(chain);
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn circle_is_a_closed_loop() {
        let xs = grid(61, -3.0, 3.0);
        let ys = grid(61, -3.0, 3.0);
        let values: Vec<Vec<f64>> = ys.iter().map(|y| xs.iter().map(|x| x * x + y * y).collect()).collect();
        let lines = iso_lines(&xs, &ys, &values, 4.0);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
        for (x, y) in line {
            assert!(((x * x + y * y).sqrt() - 2.0).abs() < 0.01);
        }
    }

    #[test]
    fn plane_gives_straight_open_line() {
        let xs = grid(11, 0.0, 1.0);
        let ys = grid(7, 0.0, 2.0);
        let values: Vec<Vec<f64>> = ys.iter().map(|_| xs.to_vec()).collect();
        let lines = iso_lines(&xs, &ys, &values, 0.45);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), ys.len());
        assert!(lines[0].iter().all(|(x, _)| (x - 0.45).abs() < 1e-12));
    }

    #[test]
    fn saddle_uses_centre_value() {
        let xs = [0.0, 1.0];
        let ys = [0.0, 1.0];
        let high_centre = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let lines = iso_lines(&xs, &ys, &high_centre, 0.4);
        assert_eq!(lines.len(), 2);
        let low_centre = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(iso_lines(&xs, &ys, &low_centre, 0.6).len(), 2);
    }

    #[test]
    fn level_outside_range_has_no_lines() {
        let values = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        assert!(iso_lines(&[0.0, 1.0], &[0.0, 1.0], &values, 5.0).is_empty());
    }
}
