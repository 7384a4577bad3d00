//! Small fixed-size vector and box helpers shared across the crate.

use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];

/// Snap margin, in cell units, applied by [`cell_index`]. Positions within
/// this fraction of a cell boundary are assigned to the upper cell, so
/// lattice-aligned geometry resolves deterministically despite f64 noise.
pub const CELL_SNAP: f64 = 1e-7;

/// Canonical world-to-cell coordinate along one axis.
pub fn cell_index(x: f64, origin: f64, res: f64) -> i64 {
    ((x - origin) / res + CELL_SNAP).floor() as i64
}

pub fn add2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale2(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm2(a: Vec2) -> f64 {
    dot2(a, a).sqrt()
}

pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    norm2(sub2(a, b))
}

pub fn add3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn dist3(a: Vec3, b: Vec3) -> f64 {
    norm3(sub3(a, b))
}

/// Axis-aligned box in 3D. `min <= max` componentwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb3 {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb3 { min, max }
    }

    /// Smallest box containing all points; `None` for an empty iterator.
    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Aabb3::new(first, first);
        for p in it {
            for a in 0..3 {
                b.min[a] = b.min[a].min(p[a]);
                b.max[a] = b.max[a].max(p[a]);
            }
        }
        Some(b)
    }

    pub fn extents(&self) -> Vec3 {
        sub3(self.max, self.min)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extents();
        (e[0].max(0.0)) * (e[1].max(0.0)) * (e[2].max(0.0))
    }

    pub fn pad(&self, d: f64) -> Self {
        Aabb3::new(
            [self.min[0] - d, self.min[1] - d, self.min[2] - d],
            [self.max[0] + d, self.max[1] + d, self.max[2] + d],
        )
    }

    pub fn union(&self, other: &Aabb3) -> Aabb3 {
        let mut b = *self;
        for a in 0..3 {
            b.min[a] = b.min[a].min(other.min[a]);
            b.max[a] = b.max[a].max(other.max[a]);
        }
        b
    }

    /// Volume of the overlap region; 0 when disjoint.
    pub fn intersection_volume(&self, other: &Aabb3) -> f64 {
        let mut v = 1.0;
        for a in 0..3 {
            let lo = self.min[a].max(other.min[a]);
            let hi = self.max[a].min(other.max[a]);
            if hi <= lo {
                return 0.0;
            }
            v *= hi - lo;
        }
        v
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|a| !(self.max[a] - self.min[a] > 0.0) || !self.min[a].is_finite())
    }
}

/// Axis-aligned rectangle in 2D.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb2 {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb2 {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Aabb2 { min, max }
    }

    pub fn extents(&self) -> Vec2 {
        sub2(self.max, self.min)
    }

    pub fn is_degenerate(&self) -> bool {
        (0..2).any(|a| !(self.max[a] - self.min[a] > 0.0) || !self.min[a].is_finite())
    }
}

/// Area of triangle `abc`.
pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm3(cross3(sub3(b, a), sub3(c, a)))
}

/// Unit normal of triangle `abc` from its winding; `None` when degenerate.
pub fn triangle_normal(a: Vec3, b: Vec3, c: Vec3) -> Option<Vec3> {
    let n = cross3(sub3(b, a), sub3(c, a));
    let len = norm3(n);
    if len < 1e-14 {
        None
    } else {
        Some(scale3(n, 1.0 / len))
    }
}

/// Exact distance from `p` to the closed triangle `abc` (Ericson's
/// closest-point construction via barycentric regions).
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return dist3(p, a);
    }
    let bp = sub3(p, b);
    let d3 = dot3(ab, bp);
    let d4 = dot3(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return dist3(p, b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return dist3(p, add3(a, scale3(ab, t)));
    }
    let cp = sub3(p, c);
    let d5 = dot3(ab, cp);
    let d6 = dot3(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return dist3(p, c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return dist3(p, add3(a, scale3(ac, t)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return dist3(p, add3(b, scale3(sub3(c, b), t)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    dist3(p, add3(a, add3(scale3(ab, v), scale3(ac, w))))
}
