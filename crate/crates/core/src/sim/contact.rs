use crate::linalg::cross;

/// Hand contacts of a bimanual grasp, positions relative to their centroid.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPair {
    pub f_l: [f64; 3],
    pub f_r: [f64; 3],
    pub r_l: [f64; 3],
    pub r_r: [f64; 3],
    /// Contact centroid in the object frame (meters).
    pub centroid: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspResiduals {
    /// `Σ fᵢᵀfᵢ` (N²).
    pub f2: f64,
    /// `Σ |rᵢ × fᵢ|²` (N²m²).
    pub m2: f64,
    /// Squared norm of the net force `f_L + f_R`.
    pub net_force2: f64,
    /// Squared norm of the net moment `r_L × f_L + r_R × f_R`.
    pub net_moment2: f64,
}

impl GraspResiduals {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.net_force2 <= tol && self.net_moment2 <= tol
    }
}

fn norm2(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn grasp_residuals(c: &ContactPair) -> GraspResiduals {
    let m_l = cross(&c.r_l, &c.f_l);
    let m_r = cross(&c.r_r, &c.f_r);
    GraspResiduals {
        f2: norm2(c.f_l) + norm2(c.f_r),
        m2: norm2(m_l) + norm2(m_r),
        net_force2: norm2(add(c.f_l, c.f_r)),
        net_moment2: norm2(add(m_l, m_r)),
    }
}
