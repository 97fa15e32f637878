//! Simple polygons: membership, edge distance and shortest paths through the
//! visibility graph of reflex vertices.

use super::{GeometryError, GEOMETRY_TOL};
use crate::point::Point;

type V2 = [f64; 2];

fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn dist(a: V2, b: V2) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

fn segment_distance(p: V2, a: V2, b: V2) -> f64 {
    let e = sub(b, a);
    let len2 = dot(e, e);
    let t = (dot(sub(p, a), e) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * e[0], a[1] + t * e[1]])
}

/// Closed-segment intersection test, touching included.
fn segments_touch(a: V2, b: V2, c: V2, d: V2, tol: f64) -> bool {
    let d1 = cross(sub(d, c), sub(a, c));
    let d2 = cross(sub(d, c), sub(b, c));
    let d3 = cross(sub(b, a), sub(c, a));
    let d4 = cross(sub(b, a), sub(d, a));
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)) {
        return true;
    }
    segment_distance(a, c, d) <= tol
        || segment_distance(b, c, d) <= tol
        || segment_distance(c, a, b) <= tol
        || segment_distance(d, a, b) <= tol
}

/// A simple, counterclockwise polygon.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<V2>,
    area: f64,
    tol: f64,
    reflex: Vec<usize>,
    /// Pairwise visible distances between reflex vertices (infinity if the
    /// segment leaves the closure).
    reflex_graph: Vec<Vec<f64>>,
}

impl Polygon {
    /// Validates and normalises the vertex list: a repeated closing vertex is
    /// dropped and clockwise input is reversed.
    pub fn new(vertices: &[V2]) -> Result<Self, GeometryError> {
        let invalid = |m: &str| Err(GeometryError::InvalidDomain(m.to_string()));
        let mut v: Vec<V2> = vertices.to_vec();
        if v.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return invalid("non-finite polygon vertex");
        }
        if v.len() >= 2 && v[0] == v[v.len() - 1] {
            v.pop();
        }
        if v.len() < 3 {
            return invalid("polygon needs at least three vertices");
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &v {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let scale = dist(lo, hi).max(1.0);
        let tol = GEOMETRY_TOL * scale;
        let n = v.len();
        for i in 0..n {
            if dist(v[i], v[(i + 1) % n]) <= tol {
                return invalid("repeated polygon vertex");
            }
        }
        let signed: f64 = (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5;
        if signed.abs() <= tol * scale {
            return invalid("polygon has zero area");
        }
        if signed < 0.0 {
            v.reverse();
        }
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (v[j], v[(j + 1) % n]);
                if adjacent {
                    // Adjacent edges share one vertex; they must not fold back.
                    let (shared, other_a, other_b) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    let e1 = sub(other_a, shared);
                    let e2 = sub(other_b, shared);
                    if cross(e1, e2).abs() <= tol * scale && dot(e1, e2) > 0.0 {
                        return invalid("polygon folds back on itself");
                    }
                } else if segments_touch(a, b, c, d, tol) {
                    return invalid("polygon is not simple");
                }
            }
        }
        let reflex = (0..n)
            .filter(|&i| {
                let prev = v[(i + n - 1) % n];
                let next = v[(i + 1) % n];
                cross(sub(v[i], prev), sub(next, v[i])) < -tol
            })
            .collect::<Vec<_>>();
        let mut poly = Self {
            vertices: v,
            area: signed.abs(),
            tol,
            reflex,
            reflex_graph: Vec::new(),
        };
        let r = poly.reflex.len();
        let mut graph = vec![vec![f64::INFINITY; r]; r];
        for a in 0..r {
            graph[a][a] = 0.0;
            for b in (a + 1)..r {
                let (pa, pb) = (poly.vertices[poly.reflex[a]], poly.vertices[poly.reflex[b]]);
                if poly.segment_in_closure(pa, pb) {
                    let l = dist(pa, pb);
                    graph[a][b] = l;
                    graph[b][a] = l;
                }
            }
        }
        poly.reflex_graph = graph;
        Ok(poly)
    }

    pub fn vertices(&self) -> &[V2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn reflex_vertices(&self) -> &[usize] {
        &self.reflex
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (Point::xy(lo[0], lo[1]), Point::xy(hi[0], hi[1]))
    }

    fn edges(&self) -> impl Iterator<Item = (V2, V2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd crossing test; the result on the boundary is arbitrary.
    fn crossing_inside(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > y) != (b[1] > y) {
                let xi = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.crossing_inside(x, y) && self.boundary_distance(x, y) > self.tol
    }

    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance([x, y], a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn in_closure(&self, p: V2) -> bool {
        self.crossing_inside(p[0], p[1]) || self.boundary_distance(p[0], p[1]) <= self.tol
    }

    /// Whether the closed segment `pq` lies in the closure of the polygon.
    ///
    /// The segment is cut at every parameter where it meets the boundary;
    /// each piece is then entirely inside, outside or on the boundary, so
    /// testing its midpoint decides it.
    pub fn segment_in_closure(&self, p: V2, q: V2) -> bool {
        let d = sub(q, p);
        let len2 = dot(d, d);
        if len2 == 0.0 {
            return self.in_closure(p);
        }
        let len = len2.sqrt();
        let mut ts = vec![0.0, 1.0];
        for (a, b) in self.edges() {
            let e = sub(b, a);
            let elen = dot(e, e).sqrt();
            let denom = cross(d, e);
            let ap = sub(a, p);
            if denom.abs() > GEOMETRY_TOL * len * elen {
                let t = cross(ap, e) / denom;
                let u = cross(ap, d) / denom;
                let (et, eu) = (self.tol / len, self.tol / elen);
                if t >= -et && t <= 1.0 + et && u >= -eu && u <= 1.0 + eu {
                    ts.push(t.clamp(0.0, 1.0));
                }
            } else if cross(ap, d).abs() <= self.tol * len {
                for v in [a, b] {
                    let t = dot(sub(v, p), d) / len2;
                    if (0.0..=1.0).contains(&t) {
                        ts.push(t);
                    }
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.windows(2).all(|w| {
            if w[1] - w[0] <= GEOMETRY_TOL {
                return true;
            }
            let t = 0.5 * (w[0] + w[1]);
            self.in_closure([p[0] + t * d[0], p[1] + t * d[1]])
        })
    }

    /// Shortest path length inside the closure; `None` if no path exists.
    pub fn geodesic(&self, p: V2, q: V2) -> Option<f64> {
        if self.segment_in_closure(p, q) {
            return Some(dist(p, q));
        }
        let r = self.reflex.len();
        let reflex_pt = |i: usize| self.vertices[self.reflex[i]];
        let to_q: Vec<f64> = (0..r)
            .map(|i| {
                let v = reflex_pt(i);
                if self.segment_in_closure(v, q) {
                    dist(v, q)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let mut best = vec![f64::INFINITY; r];
        let mut done = vec![false; r];
        for i in 0..r {
            let v = reflex_pt(i);
            if self.segment_in_closure(p, v) {
                best[i] = dist(p, v);
            }
        }
        let mut answer = f64::INFINITY;
        loop {
            let next = (0..r)
                .filter(|&i| !done[i] && best[i].is_finite())
                .min_by(|&a, &b| best[a].total_cmp(&best[b]));
            let Some(u) = next else { break };
            if best[u] >= answer {
                break;
            }
            done[u] = true;
            answer = answer.min(best[u] + to_q[u]);
            for w in 0..r {
                let l = self.reflex_graph[u][w];
                if !done[w] && l.is_finite() && best[u] + l < best[w] {
                    best[w] = best[u] + l;
                }
            }
        }
        answer.is_finite().then_some(answer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> Polygon {
        Polygon::new(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(Polygon::new(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::new(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(Polygon::new(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // bow tie
        assert!(Polygon::new(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let p = Polygon::new(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!(p.reflex_vertices().is_empty());
    }

    #[test]
    fn l_shape_has_one_reflex_vertex() {
        let p = l_shape();
        assert_eq!(p.reflex_vertices(), &[3]);
        assert!(p.contains(0.25, 0.75));
        assert!(!p.contains(0.75, 0.75));
        assert!(!p.contains(0.5, 0.75));
    }

    #[test]
    fn visible_pair_is_euclidean() {
        let g = l_shape().geodesic([0.9, 0.25], [0.9, 0.45]).unwrap();
        assert!((g - 0.2).abs() < 1e-15);
    }

    #[test]
    fn path_bends_at_reflex_vertex() {
        let p = l_shape();
        let g = p.geodesic([0.9, 0.4], [0.4, 0.9]).unwrap();
        let expected = dist([0.9, 0.4], [0.5, 0.5]) + dist([0.5, 0.5], [0.4, 0.9]);
        assert!((g - expected).abs() < 1e-14);
        assert!(!p.segment_in_closure([0.9, 0.4], [0.4, 0.9]));
    }

    #[test]
    fn grazing_the_reflex_vertex_stays_in_closure() {
        let p = l_shape();
        assert!(p.segment_in_closure([0.75, 0.25], [0.25, 0.75]));
        let g = p.geodesic([0.75, 0.25], [0.25, 0.75]).unwrap();
        assert!((g - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn segment_along_an_edge_is_in_closure() {
        let p = l_shape();
        assert!(p.segment_in_closure([0.0, 0.2], [0.0, 0.8]));
        assert!(p.segment_in_closure([0.2, 0.5], [0.8, 0.5]));
    }

    #[test]
    fn two_bend_path_in_u_shape() {
        // U shape: a slot [1,2] x [1,3] removed from [0,3] x [0,3].
        let u = Polygon::new(&[
            [0.0, 0.0],
            [3.0, 0.0],
            [3.0, 3.0],
            [2.0, 3.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 3.0],
            [0.0, 3.0],
        ])
        .unwrap();
        assert_eq!(u.reflex_vertices().len(), 2);
        let g = u.geodesic([0.5, 2.5], [2.5, 2.5]).unwrap();
        let expected = dist([0.5, 2.5], [1.0, 1.0]) + 1.0 + dist([2.0, 1.0], [2.5, 2.5]);
        assert!((g - expected).abs() < 1e-13);
    }
}
