use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;

type Coeffs = SmallVec<[f64; 8]>;

/// Truncated Taylor series `c_0 + c_1 d + ... + c_K d^K` in a formal
/// increment `d`.
///
/// All arithmetic is the exact truncation of formal power-series arithmetic
/// to order `K`. Operands of binary operations must share the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Coeffs,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Jet {
        let mut coeffs: Coeffs = SmallVec::from_elem(0.0, order + 1);
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity `value + d`.
    pub fn variable(value: f64, order: usize) -> Jet {
        let mut j = Jet::constant(value, order);
        if order > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    /// # Panics
    /// Panics on an empty coefficient vector.
    pub fn from_coeffs(coeffs: impl Into<Vec<f64>>) -> Jet {
        let coeffs: Vec<f64> = coeffs.into();
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet {
            coeffs: SmallVec::from_vec(coeffs),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `p!`-scaled coefficient, i.e. the `p`-th derivative at the base point.
    pub fn derivative(&self, p: usize) -> f64 {
        let fact: f64 = (1..=p).map(|k| k as f64).product();
        self.coeffs[p] * fact
    }

    fn zeros(order: usize) -> Coeffs {
        SmallVec::from_elem(0.0, order + 1)
    }

    fn check_order(&self, other: &Jet) {
        assert_eq!(
            self.order(),
            other.order(),
            "jet order mismatch ({} vs {})",
            self.order(),
            other.order()
        );
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, &'static str> {
        self.check_order(other);
        let b0 = other.coeffs[0];
        if b0 == 0.0 {
            return Err("division by zero");
        }
        let k = self.order();
        let mut c = Jet::zeros(k);
        for n in 0..=k {
            let mut acc = self.coeffs[n];
            for j in 0..n {
                acc -= c[j] * other.coeffs[n - j];
            }
            c[n] = acc / b0;
        }
        Ok(Jet { coeffs: c })
    }

    pub fn exp(&self) -> Jet {
        let k = self.order();
        let mut e = Jet::zeros(k);
        e[0] = self.coeffs[0].exp();
        for n in 1..=k {
            let mut acc = 0.0;
            for j in 1..=n {
                acc += j as f64 * self.coeffs[j] * e[n - j];
            }
            e[n] = acc / n as f64;
        }
        Jet { coeffs: e }
    }

    pub fn ln(&self) -> Result<Jet, &'static str> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err("logarithm of a non-positive value");
        }
        let k = self.order();
        let mut l = Jet::zeros(k);
        l[0] = a0.ln();
        for n in 1..=k {
            let mut acc = 0.0;
            for j in 1..n {
                acc += j as f64 * l[j] * self.coeffs[n - j];
            }
            l[n] = (self.coeffs[n] - acc / n as f64) / a0;
        }
        Ok(Jet { coeffs: l })
    }

    fn sin_cos(&self) -> (Jet, Jet) {
        let k = self.order();
        let mut s = Jet::zeros(k);
        let mut c = Jet::zeros(k);
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for n in 1..=k {
            let mut sa = 0.0;
            let mut ca = 0.0;
            for j in 1..=n {
                let ja = j as f64 * self.coeffs[j];
                sa += ja * c[n - j];
                ca += ja * s[n - j];
            }
            s[n] = sa / n as f64;
            c[n] = -ca / n as f64;
        }
        (Jet { coeffs: s }, Jet { coeffs: c })
    }

    pub fn sin(&self) -> Jet {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Jet {
        self.sin_cos().1
    }

    pub fn sqrt(&self) -> Result<Jet, &'static str> {
        let a0 = self.coeffs[0];
        let k = self.order();
        if a0 < 0.0 {
            return Err("square root of a negative value");
        }
        if a0 == 0.0 {
            if self.coeffs[1..].iter().all(|&c| c == 0.0) {
                return Ok(Jet::constant(0.0, k));
            }
            return Err("square root is not differentiable at zero");
        }
        let mut r = Jet::zeros(k);
        r[0] = a0.sqrt();
        for n in 1..=k {
            let mut acc = self.coeffs[n];
            for j in 1..n {
                acc -= r[j] * r[n - j];
            }
            r[n] = acc / (2.0 * r[0]);
        }
        Ok(Jet { coeffs: r })
    }

    pub fn abs(&self) -> Result<Jet, &'static str> {
        let a0 = self.coeffs[0];
        if a0 > 0.0 {
            Ok(self.clone())
        } else if a0 < 0.0 {
            Ok(-self)
        } else if self.coeffs[1..].iter().all(|&c| c == 0.0) {
            Ok(self.clone())
        } else {
            Err("abs is not differentiable at zero")
        }
    }

    /// Integer power by binary exponentiation; exact for `a0 == 0` when `n >= 0`.
    pub fn powi(&self, n: i32) -> Result<Jet, &'static str> {
        let k = self.order();
        let mut result = Jet::constant(1.0, k);
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        if n < 0 {
            Jet::constant(1.0, k).div(&result)
        } else {
            Ok(result)
        }
    }

    /// Real power `self^p = exp(p ln self)`, defined for a positive base only.
    pub fn pow(&self, p: &Jet) -> Result<Jet, &'static str> {
        if self.coeffs[0] <= 0.0 {
            return Err("non-integer power of a non-positive base");
        }
        Ok((p * &self.ln()?).exp())
    }

    /// Composition `self(inner)` where `self` is a series in `d` about its base
    /// point and `inner` is a series in `t` whose constant term is ignored
    /// (the increment `d(t) = inner(t) - inner(0)` is substituted).
    ///
    /// The result is truncated to `inner.order()`.
    pub fn compose(&self, inner: &Jet) -> Jet {
        let k = inner.order();
        let mut delta = inner.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet::constant(self.coeffs[0], k);
        // Powers of delta have valuation >= p, so terms with p > k vanish.
        let mut power = Jet::constant(1.0, k);
        for p in 1..=k.min(self.order()) {
            power = &power * &delta;
            let c = self.coeffs[p];
            if c != 0.0 {
                for n in p..=k {
                    out.coeffs[n] += c * power.coeffs[n];
                }
            }
        }
        out
    }
}

impl std::ops::Index<usize> for Jet {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coeffs[i]
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.check_order(rhs);
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.check_order(rhs);
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.check_order(rhs);
        let k = self.order();
        let mut c = Jet::zeros(k);
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs[..=k - i].iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Jet { coeffs: c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
