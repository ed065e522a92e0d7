//! Small dense complex matrices (dimension ≤ 6) and matrix exponentials.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub const MAX_DIM: usize = 6;

#[derive(Clone, Copy, PartialEq)]
pub struct CMat {
    n: usize,
    a: [C64; MAX_DIM * MAX_DIM],
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:+.6e}{:+.6e}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix dimension {n} out of range");
        Self {
            n,
            a: [C64::new(0.0, 0.0); MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] *= s;
            }
        }
        m
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Top-left `k × k` block.
    pub fn block(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self[(i, j)])
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Self::identity(self.n)).max_abs()
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self[(i, j)])
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Solve `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        let mut a = *self;
        let mut b = *rhs;
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| {
                a[(x, col)]
                    .norm()
                    .partial_cmp(&a[(y, col)].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(piv, col)].norm() == 0.0 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                    let tmp = b[(col, j)];
                    b[(col, j)] = b[(piv, j)];
                    b[(piv, j)] = tmp;
                }
            }
            let d = a[(col, col)];
            for r in col + 1..n {
                let f = a[(r, col)] / d;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] -= f * v;
                }
                for j in 0..n {
                    let v = b[(col, j)];
                    b[(r, j)] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[(col, col)];
            for j in 0..n {
                let mut acc = b[(col, j)];
                for k in col + 1..n {
                    acc -= a[(col, k)] * b[(k, j)];
                }
                b[(col, j)] = acc / d;
            }
        }
        Some(b)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * MAX_DIM + j]
    }
}

impl Mul for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.a[i * MAX_DIM + j] += a * rhs.a[k * MAX_DIM + j];
                }
            }
        }
        out
    }
}

impl Add for CMat {
    type Output = CMat;
    fn add(self, rhs: CMat) -> CMat {
        let mut out = self;
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] += rhs[(i, j)];
            }
        }
        out
    }
}

impl Sub for CMat {
    type Output = CMat;
    fn sub(self, rhs: CMat) -> CMat {
        let mut out = self;
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] -= rhs[(i, j)];
            }
        }
        out
    }
}

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
        ],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        _ => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
    }
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant whose degree (3 to 13) is chosen from the 1-norm so that the
/// backward error is at double precision.
pub fn expm(a: &CMat) -> CMat {
    let n = a.dim();
    let id = CMat::identity(n);
    let norm = a.norm1();
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade_low(a, m, &id);
        }
    }
    let s = ((norm / THETA[4].1).log2().ceil()).max(0.0) as i32;
    let scaled = a.scale_re(0.5f64.powi(s));
    let mut r = pade13(&scaled, &id);
    for _ in 0..s {
        r = r * r;
    }
    r
}

fn pade_low(a: &CMat, m: usize, id: &CMat) -> CMat {
    let b = pade_coeffs(m);
    let a2 = *a * *a;
    let mut powers = vec![*id, a2];
    while powers.len() <= m / 2 {
        let last = *powers.last().unwrap();
        powers.push(last * a2);
    }
    let mut u = CMat::zeros(a.dim());
    let mut v = CMat::zeros(a.dim());
    for k in 0..=m / 2 {
        u = u + powers[k].scale_re(b[2 * k + 1]);
        v = v + powers[k].scale_re(b[2 * k]);
    }
    let u = *a * u;
    finish_pade(&u, &v)
}

fn pade13(a: &CMat, id: &CMat) -> CMat {
    let b = pade_coeffs(13);
    let a2 = *a * *a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6.scale_re(b[13]) + a4.scale_re(b[11]) + a2.scale_re(b[9]))
        + a6.scale_re(b[7])
        + a4.scale_re(b[5])
        + a2.scale_re(b[3])
        + id.scale_re(b[1]);
    let u = *a * u_inner;
    let v = a6 * (a6.scale_re(b[12]) + a4.scale_re(b[10]) + a2.scale_re(b[8]))
        + a6.scale_re(b[6])
        + a4.scale_re(b[4])
        + a2.scale_re(b[2])
        + id.scale_re(b[0]);
    finish_pade(&u, &v)
}

fn finish_pade(u: &CMat, v: &CMat) -> CMat {
    (*v - *u)
        .solve(&(*v + *u))
        .expect("Padé denominator is nonsingular for norms within the theta bounds")
}

/// `exp(−i H dt)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian_eig(h: &CMat, dt: f64) -> CMat {
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let v = CMat::from_nalgebra(&eig.eigenvectors);
    let n = h.dim();
    let mut d = CMat::zeros(n);
    for i in 0..n {
        d[(i, i)] = C64::from_polar(1.0, -eig.eigenvalues[i] * dt);
    }
    v * d * v.adjoint()
}

/// `exp(−i H dt)` by Padé scaling and squaring.
pub fn expm_unitary(h: &CMat, dt: f64) -> CMat {
    expm(&h.scale(C64::new(0.0, -dt)))
}
