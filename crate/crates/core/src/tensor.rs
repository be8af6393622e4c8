//! Dense `d × d` tensor algebra, written for a generic dimension `D`.

pub type Mat<const D: usize> = [[f64; D]; D];
pub type Mat2 = Mat<2>;

pub fn zero<const D: usize>() -> Mat<D> {
    [[0.0; D]; D]
}

pub fn identity<const D: usize>() -> Mat<D> {
    let mut m = zero::<D>();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn trace<const D: usize>(a: &Mat<D>) -> f64 {
    (0..D).map(|i| a[i][i]).sum()
}

pub fn transpose<const D: usize>(a: &Mat<D>) -> Mat<D> {
    let mut t = zero::<D>();
    for i in 0..D {
        for j in 0..D {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// `(A + Aᵀ) / 2`.
pub fn sym<const D: usize>(a: &Mat<D>) -> Mat<D> {
    let mut s = zero::<D>();
    for i in 0..D {
        for j in 0..D {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    s
}

/// `A - (tr A / D) I`.
pub fn deviatoric<const D: usize>(a: &Mat<D>) -> Mat<D> {
    let mean = trace(a) / D as f64;
    let mut d = *a;
    for (i, row) in d.iter_mut().enumerate() {
        row[i] -= mean;
    }
    d
}

/// Frobenius product `A : B`.
pub fn ddot<const D: usize>(a: &Mat<D>, b: &Mat<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

pub fn norm_sq<const D: usize>(a: &Mat<D>) -> f64 {
    ddot(a, a)
}

pub fn add<const D: usize>(a: &Mat<D>, b: &Mat<D>) -> Mat<D> {
    let mut c = *a;
    for i in 0..D {
        for j in 0..D {
            c[i][j] += b[i][j];
        }
    }
    c
}

pub fn scale<const D: usize>(a: &Mat<D>, s: f64) -> Mat<D> {
    let mut c = *a;
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    c
}

/// `s I`.
pub fn spherical<const D: usize>(s: f64) -> Mat<D> {
    scale(&identity::<D>(), s)
}
