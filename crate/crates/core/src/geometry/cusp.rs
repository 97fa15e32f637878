use super::GeometryError;

/// Power cusp `{0 < x1 < 1, |x2| < x1^gamma}` with `gamma > 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cusp {
    gamma: f64,
}

const GRID: usize = 32;
const GOLDEN_ITERS: usize = 90;

impl Cusp {
    pub fn new(gamma: f64) -> Result<Self, GeometryError> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(GeometryError::InvalidDomain(format!("cusp exponent {gamma} must exceed 1")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn area(&self) -> f64 {
        2.0 / (self.gamma + 1.0)
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        x1 > 0.0 && x1 < 1.0 && x2.abs() < x1.powf(self.gamma)
    }

    /// Distance to the boundary for an interior point.
    ///
    /// The right edge `x1 = 1` contributes `1 - x1`. For the curved part
    /// (upper branch by symmetry) the nearest parameter `t` satisfies
    /// `|t - x1| <= x1^gamma - |x2|`, so the squared distance is scanned on a
    /// grid inside that window and each discrete local minimum is refined by
    /// golden-section search.
    pub fn boundary_distance(&self, x1: f64, x2: f64) -> f64 {
        let b = x2.abs();
        let vertical = x1.powf(self.gamma) - b;
        let edge = 1.0 - x1;
        let window = vertical.min(edge);
        let lo = (x1 - window).max(0.0);
        let hi = (x1 + window).min(1.0);
        let g = |t: f64| {
            let dy = t.powf(self.gamma) - b;
            let dx = t - x1;
            dx * dx + dy * dy
        };
        let step = (hi - lo) / GRID as f64;
        let vals: Vec<f64> = (0..=GRID).map(|k| g(lo + step * k as f64)).collect();
        let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
        for k in 0..=GRID {
            let left = if k == 0 { f64::INFINITY } else { vals[k - 1] };
            let right = if k == GRID { f64::INFINITY } else { vals[k + 1] };
            if vals[k] <= left && vals[k] <= right {
                let a = lo + step * k.saturating_sub(1) as f64;
                let c = (lo + step * (k + 1) as f64).min(hi);
                best = best.min(golden_min(&g, a, c));
            }
        }
        best.sqrt().min(edge)
    }
}

fn golden_min(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_8;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - R * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + R * (b - a);
            gd = g(d);
        }
        if b - a < 1e-16 {
            break;
        }
    }
    gc.min(gd).min(g(a)).min(g(b))
}
