//! One-dimensional minimisation: a uniform coarse grid locates the best
//! bracket, golden-section search refines it.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Settings for [`grid_golden_min`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGolden {
    /// Number of coarse grid points (endpoints included).
    pub grid_points: usize,
    /// Golden-section stops once the bracket is narrower than this.
    pub x_tolerance: f64,
}

impl Default for GridGolden {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            x_tolerance: 1e-12,
        }
    }
}

/// Minimum of `f` on `[lo, hi]`, returned as `(f_min, x_min)`.
///
/// The result is never worse than the best coarse grid point.
pub fn grid_golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: GridGolden,
) -> (f64, f64) {
    if !(hi > lo) {
        return (f(lo), lo);
    }
    let n = cfg.grid_points.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let at = |i: usize| if i == n - 1 { hi } else { lo + step * i as f64 };

    let mut best = (f64::INFINITY, lo);
    let mut best_i = 0;
    for i in 0..n {
        let x = at(i);
        let v = f(x);
        if v < best.0 {
            best = (v, x);
            best_i = i;
        }
    }

    let mut a = at(best_i.saturating_sub(1));
    let mut d = at((best_i + 1).min(n - 1));
    let mut b = d - INV_PHI * (d - a);
    let mut c = a + INV_PHI * (d - a);
    let mut fb = f(b);
    let mut fc = f(c);
    while d - a > cfg.x_tolerance {
        if fb < fc {
            d = c;
            c = b;
            fc = fb;
            b = d - INV_PHI * (d - a);
            fb = f(b);
        } else {
            a = b;
            b = c;
            fb = fc;
            c = a + INV_PHI * (d - a);
            fc = f(c);
        }
    }
    for (v, x) in [(fb, b), (fc, c)] {
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}
