//! Truncated Taylor (jet) arithmetic of order <= 3.
//!
//! The composite expressions in the Lagrangian gradient (three applications
//! of `(1 + V')^{-1} d/dx` to `U (1 + V')^{-1}`) are evaluated pointwise by
//! propagating Taylor coefficients: exact derivative values go in, the exact
//! value of the composition comes out, with no finite differencing.

/// A jet of Taylor coefficients `a[k] = f^(k)(x0) / k!` valid up to order
/// `ord` (0..=3).
#[derive(Clone, Copy, Debug)]
pub struct Jet {
    a: [f64; 4],
    ord: usize,
}

impl Jet {
    /// Build a jet from derivative values `f, f', f'', f'''` (as many as the
    /// requested order needs).
    pub fn from_derivs(d: &[f64], ord: usize) -> Jet {
        assert!(ord <= 3 && d.len() > ord);
        let mut a = [0.0; 4];
        let fact = [1.0, 1.0, 2.0, 6.0];
        for k in 0..=ord {
            a[k] = d[k] / fact[k];
        }
        Jet { a, ord }
    }

    pub fn constant(c: f64, ord: usize) -> Jet {
        let mut a = [0.0; 4];
        a[0] = c;
        Jet { a, ord }
    }

    pub fn value(&self) -> f64 {
        self.a[0]
    }

    pub fn order(&self) -> usize {
        self.ord
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let ord = self.ord.min(o.ord);
        let mut a = [0.0; 4];
        for k in 0..=ord {
            a[k] = self.a[k] + o.a[k];
        }
        Jet { a, ord }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let ord = self.ord.min(o.ord);
        let mut a = [0.0; 4];
        for k in 0..=ord {
            for j in 0..=k {
                a[k] += self.a[j] * o.a[k - j];
            }
        }
        Jet { a, ord }
    }

    /// Reciprocal 1/f (requires f(x0) != 0).
    pub fn recip(&self) -> Jet {
        let mut a = [0.0; 4];
        let inv = 1.0 / self.a[0];
        a[0] = inv;
        for k in 1..=self.ord {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.a[j] * a[k - j];
            }
            a[k] = -inv * acc;
        }
        Jet { a, ord: self.ord }
    }

    /// Derivative jet (order drops by one).
    pub fn deriv(&self) -> Jet {
        assert!(self.ord >= 1, "cannot differentiate an order-0 jet");
        let mut a = [0.0; 4];
        for k in 0..self.ord {
            a[k] = (k as f64 + 1.0) * self.a[k + 1];
        }
        Jet {
            a,
            ord: self.ord - 1,
        }
    }

    /// Truncate to a lower order.
    pub fn truncate(&self, ord: usize) -> Jet {
        assert!(ord <= self.ord);
        let mut a = [0.0; 4];
        a[..=ord].copy_from_slice(&self.a[..=ord]);
        Jet { a, ord }
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: usize) -> Jet {
        let mut out = Jet::constant(1.0, self.ord);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    pub fn neg(&self) -> Jet {
        let mut a = self.a;
        for v in &mut a {
            *v = -*v;
        }
        Jet { a, ord: self.ord }
    }
}
