//! Scalar transforms with their shifted quotients and Lipschitz data.
//!
//! A transform f carries its shifted quotient fbar(x) = (f(x) - f(0)) / x
//! (with the removable singularity filled analytically), Lipschitz constants
//! for both, and the radius around squared singular values on which those
//! constants are guaranteed.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

type Eval = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone)]
pub struct ScalarFunction {
    name: String,
    f: Eval,
    fbar: Eval,
    f0: Complex64,
    lipschitz: f64,
    lipschitz_bar: f64,
    /// Guaranteed-smoothness radius around the squared singular values;
    /// infinity when the constants hold globally.
    radius: f64,
}

impl ScalarFunction {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        fbar: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        f0: Complex64,
        lipschitz: f64,
        lipschitz_bar: f64,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            fbar: Arc::new(fbar),
            f0,
            lipschitz,
            lipschitz_bar,
            radius: f64::INFINITY,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }

    /// The shifted quotient (f(x) - f(0)) / x with fbar(0) = f'(0).
    pub fn eval_bar(&self, x: f64) -> Complex64 {
        (self.fbar)(x)
    }

    pub fn f0(&self) -> Complex64 {
        self.f0
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn lipschitz_bar(&self) -> f64 {
        self.lipschitz_bar
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest finite-difference slope of f (and fbar) on a grid, for
    /// validating the declared constants.
    pub fn max_grid_slope(&self, lo: f64, hi: f64, points: usize) -> (f64, f64) {
        let mut worst_f = 0.0f64;
        let mut worst_bar = 0.0f64;
        let step = (hi - lo) / points as f64;
        for k in 0..points {
            let x = lo + step * k as f64;
            let y = x + step;
            let df = ((self.f)(y) - (self.f)(x)).norm() / step;
            let dbar = ((self.fbar)(y) - (self.fbar)(x)).norm() / step;
            worst_f = worst_f.max(df);
            worst_bar = worst_bar.max(dbar);
        }
        (worst_f, worst_bar)
    }

    // -- standard library ---------------------------------------------------

    pub fn constant(value: Complex64) -> Self {
        Self::new("constant", move |_| value, |_| c(0.0), value, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| c(x), |_| c(1.0), c(0.0), 1.0, 0.0)
    }

    /// Smooth step used by the recommendation pipeline: zero up to
    /// (1-eta)^2 sigma^2, one from (1+eta)^2 sigma^2, linear in between.
    pub fn threshold_step(sigma: f64, eta: f64) -> Result<Self> {
        if sigma <= 0.0 || !(0.0 < eta && eta <= 0.99) {
            return Err(Error::InvalidParam(
                "threshold step needs sigma > 0, 0 < eta <= 0.99".into(),
            ));
        }
        let lo = (1.0 - eta).powi(2) * sigma * sigma;
        let hi = (1.0 + eta).powi(2) * sigma * sigma;
        let slope = 1.0 / (4.0 * eta * sigma * sigma);
        let f = move |x: f64| {
            if x < lo {
                c(0.0)
            } else if x < hi {
                c((x - lo) * slope)
            } else {
                c(1.0)
            }
        };
        let fbar = move |x: f64| {
            if x <= 0.0 || x < lo {
                c(0.0)
            } else if x < hi {
                c((x - lo) * slope / x)
            } else {
                c(1.0 / x)
            }
        };
        let l = slope;
        let l_bar = 1.0 / (4.0 * eta * (1.0 - eta).powi(2) * sigma.powi(4));
        Ok(Self::new("threshold_step", f, fbar, c(0.0), l, l_bar))
    }

    /// Thresholded inverse for regularized least squares: zero below
    /// sigma^2 (1-eta), 1/x above sigma^2, linear bridge in between.
    pub fn thresholded_inverse(sigma: f64, eta: f64) -> Result<Self> {
        if sigma <= 0.0 || !(0.0 < eta && eta <= 0.99) {
            return Err(Error::InvalidParam(
                "thresholded inverse needs sigma > 0, 0 < eta <= 0.99".into(),
            ));
        }
        let lo = sigma * sigma * (1.0 - eta);
        let hi = sigma * sigma;
        let slope = 1.0 / (eta * sigma.powi(4));
        let f = move |x: f64| {
            if x < lo {
                c(0.0)
            } else if x < hi {
                c((x - lo) * slope)
            } else {
                c(1.0 / x)
            }
        };
        let fbar = move |x: f64| {
            if x <= 0.0 || x < lo {
                c(0.0)
            } else if x < hi {
                c((x - lo) * slope / x)
            } else {
                c(1.0 / (x * x))
            }
        };
        let l = slope;
        let l_bar = 1.0 / (eta * eta * (1.0 - eta).powi(2) * sigma.powi(6));
        Ok(Self::new("thresholded_inverse", f, fbar, c(0.0), l, l_bar))
    }

    /// Smooth projector onto large squared singular values, with knees at
    /// eps^2/(2 L^2) and eps^2/L^2.
    pub fn smooth_projector(eps: f64, l: f64) -> Result<Self> {
        if eps <= 0.0 || l <= 0.0 {
            return Err(Error::InvalidParam("smooth projector needs eps, L > 0".into()));
        }
        let hi = eps * eps / (l * l);
        let lo = hi / 2.0;
        let slope = 2.0 * l * l / (eps * eps);
        let f = move |x: f64| {
            if x < lo {
                c(0.0)
            } else if x < hi {
                c(slope * x - 1.0)
            } else {
                c(1.0)
            }
        };
        let fbar = move |x: f64| {
            if x <= 0.0 || x < lo {
                c(0.0)
            } else if x < hi {
                c(slope - 1.0 / x)
            } else {
                c(1.0 / x)
            }
        };
        let l_bar = 1.0 / (lo * lo);
        Ok(Self::new("smooth_projector", f, fbar, c(0.0), slope, l_bar))
    }

    /// PCA window around an eigenvalue estimate: one on
    /// |x - center| <= width/8, zero beyond width/4, linear in between.
    /// `width` is the gap scale eta ||X||^2.
    pub fn pca_window(center: f64, width: f64) -> Result<Self> {
        if width <= 0.0 {
            return Err(Error::InvalidParam("pca window needs width > 0".into()));
        }
        if center - width / 4.0 <= 0.0 {
            return Err(Error::InvalidParam(
                "pca window support must stay right of zero".into(),
            ));
        }
        let plateau = width / 8.0;
        let support = width / 4.0;
        let slope = 8.0 / width;
        let f = move |x: f64| {
            let d = (x - center).abs();
            if d <= plateau {
                c(1.0)
            } else if d < support {
                c(2.0 - slope * d)
            } else {
                c(0.0)
            }
        };
        let x_min = center - support;
        let f2 = f;
        let fbar = move |x: f64| {
            if x <= 0.0 {
                c(0.0)
            } else {
                f2(x) / x
            }
        };
        let l_bar = slope / x_min + 1.0 / (x_min * x_min);
        Ok(Self::new("pca_window", f, fbar, c(0.0), slope, l_bar))
    }

    /// cos(sqrt(x)), the even part of the complex exponential.
    pub fn hamiltonian_cos(mode: HamiltonianMode) -> Self {
        let f = |x: f64| c(cos_sqrt(x));
        let fbar = |x: f64| c(cos_sqrt_bar(x));
        let (l, l_bar, radius) = match mode {
            HamiltonianMode::General => (0.5, 1.0 / 24.0, f64::INFINITY),
            HamiltonianMode::LowRank { sigma } => (
                (0.5f64).min(1.0 / (2f64.sqrt() * sigma)),
                (1.0 / 24.0f64).min(5.0 * 2f64.sqrt() / sigma.powi(3)),
                sigma * sigma / 2.0,
            ),
        };
        Self::new("hamiltonian_cos", f, fbar, c(1.0), l, l_bar).with_radius(radius)
    }

    /// i * sinc(sqrt(x)); multiplied by H it gives the odd part i sin(H).
    pub fn hamiltonian_sinc(mode: HamiltonianMode) -> Self {
        let f = |x: f64| Complex64::new(0.0, sinc_sqrt(x));
        let fbar = |x: f64| Complex64::new(0.0, sinc_sqrt_bar(x));
        let (l, l_bar, radius) = match mode {
            HamiltonianMode::General => (0.25, 1.0 / 60.0, f64::INFINITY),
            HamiltonianMode::LowRank { sigma } => (
                (0.25f64).min(2.0 / (sigma * sigma)),
                (1.0 / 60.0f64).min(12.0 / sigma.powi(4)),
                sigma * sigma / 2.0,
            ),
        };
        Self::new("hamiltonian_sinc", f, fbar, Complex64::new(0.0, 1.0), l, l_bar)
            .with_radius(radius)
    }

    /// Thresholded square root for the discriminant between-class factor.
    pub fn disc_sqrt(sigma: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidParam("disc sqrt needs sigma > 0".into()));
        }
        let lo = sigma * sigma / 2.0;
        let hi = sigma * sigma;
        let s = sigma;
        let f = move |x: f64| {
            if x < lo {
                c(0.0)
            } else if x < hi {
                c(2.0 * x / s - s)
            } else {
                c(x.sqrt())
            }
        };
        let f2 = f;
        let fbar = move |x: f64| if x <= 0.0 { c(0.0) } else { f2(x) / x };
        let l = 2.0 / sigma;
        let l_bar = 4.0 / sigma.powi(3);
        Ok(Self::new("disc_sqrt", f, fbar, c(0.0), l, l_bar))
    }

    /// Thresholded inverse for the discriminant within-class factor.
    pub fn disc_inv(sigma: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidParam("disc inv needs sigma > 0".into()));
        }
        let lo = sigma * sigma / 2.0;
        let hi = sigma * sigma;
        let s4 = sigma.powi(4);
        let s2 = sigma * sigma;
        let f = move |x: f64| {
            if x < lo {
                c(0.0)
            } else if x < hi {
                c(2.0 * x / s4 - 1.0 / s2)
            } else {
                c(1.0 / x)
            }
        };
        let f2 = f;
        let fbar = move |x: f64| if x <= 0.0 { c(0.0) } else { f2(x) / x };
        let l = 2.0 / s4;
        let l_bar = 4.0 / sigma.powi(6);
        Ok(Self::new("disc_inv", f, fbar, c(0.0), l, l_bar))
    }

    /// f(x) = 1 / (x + shift), the resolvent used by the block-inversion SVM
    /// route. Here shift = sigma^2 = 1/gamma > 0.
    pub fn inverse_shift(shift: f64) -> Result<Self> {
        if shift <= 0.0 {
            return Err(Error::InvalidParam("inverse shift needs shift > 0".into()));
        }
        let f = move |x: f64| c(1.0 / (x + shift));
        let fbar = move |x: f64| c(-1.0 / (shift * (x + shift)));
        Ok(Self::new(
            "inverse_shift",
            f,
            fbar,
            c(1.0 / shift),
            1.0 / (shift * shift),
            1.0 / (shift * shift * shift),
        ))
    }

    /// Hold f constant outside [0, hi]: transforms that are only smooth on
    /// the occupied spectrum can be applied with infinite radius this way.
    pub fn clamp_outside(self, hi: f64) -> Self {
        let inner = self.f.clone();
        let inner_bar = self.fbar.clone();
        let f0 = self.f0;
        let f = move |x: f64| inner(x.clamp(0.0, hi));
        let fbar = move |x: f64| {
            if x <= hi {
                inner_bar(x.max(0.0))
            } else {
                // (f(hi) - f(0)) / x for x > hi
                inner_bar(hi) * c(hi / x)
            }
        };
        Self {
            name: format!("{}_clamped", self.name),
            f: Arc::new(f),
            fbar: Arc::new(fbar),
            f0,
            lipschitz: self.lipschitz,
            lipschitz_bar: self.lipschitz_bar,
            radius: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum HamiltonianMode {
    General,
    /// All singular values of H are at least sigma.
    LowRank { sigma: f64 },
}

// Series-stabilized evaluations near the removable singularities.

fn cos_sqrt(x: f64) -> f64 {
    if x >= 0.0 {
        x.sqrt().cos()
    } else {
        // cos(sqrt(x)) continues to cosh for negative arguments.
        (-x).sqrt().cosh()
    }
}

fn cos_sqrt_bar(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // (cos(sqrt(x)) - 1)/x = -1/2 + x/24 - x^2/720 + ...
        -0.5 + x / 24.0 - x * x / 720.0
    } else {
        (cos_sqrt(x) - 1.0) / x
    }
}

fn sinc_sqrt(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x / 6.0
    } else if x > 0.0 {
        let y = x.sqrt();
        y.sin() / y
    } else {
        let y = (-x).sqrt();
        y.sinh() / y
    }
}

fn sinc_sqrt_bar(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // (sinc(sqrt(x)) - 1)/x = -1/6 + x/120 - x^2/5040 + ...
        -1.0 / 6.0 + x / 120.0 - x * x / 5040.0
    } else {
        (sinc_sqrt(x) - 1.0) / x
    }
}
