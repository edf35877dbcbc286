//! Dormand–Prince 8(5,3) embedded Runge–Kutta integrator with the seventh
//! order dense output of Hairer, Nørsett & Wanner.
//!
//! The stepper is written for autonomous systems `ẏ = f(y)` with a fixed
//! state dimension `N`. Each accepted step yields a [`DenseSegment`] that
//! interpolates the solution over the step; an optional projection hook lets
//! a system pull the state back onto an invariant manifold after each step.

// The tableau is quoted with the full published digits.
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An autonomous ODE `ẏ = f(y)` in `N` dimensions.
pub trait OdeSystem<T: Scalar, const N: usize> {
    /// Evaluates `f(y)` into `dy`.
    fn rhs(&self, y: &[T; N], dy: &mut [T; N]);

    /// Optionally projects an accepted state back onto an invariant set,
    /// returning the size of the correction (0 when nothing was done).
    fn project(&self, _y: &mut [T; N]) -> T {
        T::zero()
    }
}

/// Local error control settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T = f64> {
    /// Absolute tolerance per component.
    pub abs: T,
    /// Relative tolerance per component.
    pub rel: T,
    /// Maximum number of attempted steps per integration.
    pub max_steps: usize,
    /// Maximum step size magnitude.
    pub h_max: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            abs: T::lit(1e-12),
            rel: T::lit(1e-10),
            max_steps: 2_000_000,
            h_max: T::infinity(),
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    pub fn new(abs: T, rel: T) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }

    pub fn with_h_max(mut self, h_max: T) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }
}

/// Work counters of an integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats<T = f64> {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest correction applied by [`OdeSystem::project`].
    pub max_projection: T,
}

/// Continuous extension of the solution over one accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseSegment<T, const N: usize> {
    pub t0: T,
    pub h: T,
    cont: [[T; N]; 8],
}

impl<T: Scalar, const N: usize> DenseSegment<T, N> {
    /// End time of the segment.
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    /// State at the start of the segment.
    pub fn y0(&self) -> [T; N] {
        self.cont[0]
    }

    /// State at the end of the segment (before any projection).
    pub fn y1(&self) -> [T; N] {
        let mut y = self.cont[0];
        for (yi, di) in y.iter_mut().zip(self.cont[1].iter()) {
            *yi = *yi + *di;
        }
        y
    }

    /// Evaluates the interpolant at `t` (meaningful for `t` in the step).
    pub fn eval(&self, t: T) -> [T; N] {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let c = &self.cont;
        let mut y = [T::zero(); N];
        for i in 0..N {
            let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * s) * s1) * s;
            y[i] = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * s1) * s) * s1) * s;
        }
        y
    }

    /// Evaluates a single component of the interpolant at `t`.
    pub fn eval_component(&self, t: T, i: usize) -> T {
        let s = (t - self.t0) / self.h;
        let s1 = T::one() - s;
        let c = &self.cont;
        let conpar = c[4][i] + (c[5][i] + (c[6][i] + c[7][i] * s) * s1) * s;
        c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + conpar * s1) * s) * s1) * s
    }
}

/// Step-by-step driver. Create with [`Dop853::new`], then call
/// [`Dop853::step`] repeatedly; each call performs exactly one accepted step.
pub struct Dop853<'s, T: Scalar, S: OdeSystem<T, N>, const N: usize> {
    sys: &'s S,
    tol: Tolerances<T>,
    t: T,
    y: [T; N],
    k1: [T; N],
    h: T,
    dir: T,
    facold: T,
    last_rejected: bool,
    attempts: usize,
    stats: StepStats<T>,
}

#[inline]
fn combo<T: Scalar, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for &(c, k) in terms {
        let ch = T::lit(c) * h;
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o = *o + ch * *ki;
        }
    }
    out
}

#[inline]
fn weighted<T: Scalar, const N: usize>(terms: &[(f64, &[T; N])]) -> [T; N] {
    combo(&[T::zero(); N], T::one(), terms)
}

fn all_finite<T: Scalar, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

impl<'s, T: Scalar, S: OdeSystem<T, N>, const N: usize> Dop853<'s, T, S, N> {
    /// Prepares an integration starting at `(t0, y0)` and heading towards
    /// `t_dir` (only the direction and distance are used for the first step).
    pub fn new(sys: &'s S, t0: T, y0: [T; N], t_dir: T, tol: Tolerances<T>) -> Result<Self> {
        if !all_finite(&y0) {
            return Err(Error::NonFinite { t: t0.as_f64() });
        }
        let mut k1 = [T::zero(); N];
        sys.rhs(&y0, &mut k1);
        if !all_finite(&k1) {
            return Err(Error::NonFinite { t: t0.as_f64() });
        }
        let dir = if t_dir >= t0 { T::one() } else { -T::one() };
        let mut me = Self {
            sys,
            tol,
            t: t0,
            y: y0,
            k1,
            h: T::zero(),
            dir,
            facold: T::lit(1e-4),
            last_rejected: false,
            attempts: 0,
            stats: StepStats {
                rhs_evals: 1,
                ..Default::default()
            },
        };
        me.h = me.initial_step((t_dir - t0).abs());
        Ok(me)
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> &[T; N] {
        &self.y
    }

    /// Derivative at the current state.
    pub fn dy(&self) -> &[T; N] {
        &self.k1
    }

    pub fn stats(&self) -> StepStats<T> {
        self.stats
    }

    fn sk(&self, a: T, b: T) -> T {
        self.tol.abs + self.tol.rel * a.abs().max(b.abs())
    }

    fn initial_step(&mut self, span: T) -> T {
        let mut dnf = T::zero();
        let mut dny = T::zero();
        for i in 0..N {
            let sk = self.sk(self.y[i], T::zero());
            dnf = dnf + (self.k1[i] / sk).powi(2);
            dny = dny + (self.y[i] / sk).powi(2);
        }
        let h_max = self.tol.h_max.min(span.max(T::eps()));
        let mut h = if dnf <= T::lit(1e-10) || dny <= T::lit(1e-10) {
            T::lit(1e-6)
        } else {
            (dny / dnf).sqrt() * T::lit(0.01)
        };
        h = h.min(h_max);
        let y1 = combo(&self.y, h * self.dir, &[(1.0, &self.k1)]);
        let mut k2 = [T::zero(); N];
        self.sys.rhs(&y1, &mut k2);
        self.stats.rhs_evals += 1;
        let mut der2 = T::zero();
        for i in 0..N {
            let sk = self.sk(self.y[i], T::zero());
            der2 = der2 + ((k2[i] - self.k1[i]) / sk).powi(2);
        }
        let der2 = if der2.is_finite() {
            der2.sqrt() / h
        } else {
            T::zero()
        };
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= T::lit(1e-15) {
            (h * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / der12).powf(T::lit(1.0 / 8.0))
        };
        (T::lit(100.0) * h).min(h1).min(h_max)
    }

    /// Performs one accepted step without passing `t_limit`, returning the
    /// dense-output segment of that step.
    pub fn step(&mut self, t_limit: T) -> Result<DenseSegment<T, N>> {
        let remaining = (t_limit - self.t) * self.dir;
        if !(remaining > T::zero()) {
            return Err(Error::RootFinding(
                "step requested past the integration limit".into(),
            ));
        }
        loop {
            self.attempts += 1;
            if self.attempts > self.tol.max_steps {
                return Err(Error::MaxSteps(self.tol.max_steps));
            }
            let mut h = self.h.min(self.tol.h_max);
            let last = h >= remaining * T::lit(1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let floor = T::lit(16.0) * T::eps() * self.t.abs().max(T::one());
            if h < floor {
                return Err(Error::StepUnderflow { t: self.t.as_f64() });
            }
            match self.attempt(h * self.dir, last.then_some(t_limit))? {
                Some(seg) => return Ok(seg),
                None => continue,
            }
        }
    }

    /// One attempted step of signed size `h`; `None` on rejection.
    fn attempt(&mut self, h: T, exact_end: Option<T>) -> Result<Option<DenseSegment<T, N>>> {
        let f = |y: &[T; N], out: &mut [T; N]| self.sys.rhs(y, out);
        let y = self.y;
        let k1 = self.k1;
        let z = [T::zero(); N];
        let (mut k2, mut k3, mut k4, mut k5, mut k6) = (z, z, z, z, z);
        let (mut k7, mut k8, mut k9, mut k10) = (z, z, z, z);

        f(&combo(&y, h, &[(A21, &k1)]), &mut k2);
        f(&combo(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(&combo(&y, h, &[(A41, &k1), (A43, &k3)]), &mut k4);
        f(
            &combo(&y, h, &[(A51, &k1), (A53, &k3), (A54, &k4)]),
            &mut k5,
        );
        f(
            &combo(&y, h, &[(A61, &k1), (A64, &k4), (A65, &k5)]),
            &mut k6,
        );
        f(
            &combo(&y, h, &[(A71, &k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
            &mut k7,
        );
        f(
            &combo(
                &y,
                h,
                &[(A81, &k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)],
            ),
            &mut k8,
        );
        f(
            &combo(
                &y,
                h,
                &[
                    (A91, &k1),
                    (A94, &k4),
                    (A95, &k5),
                    (A96, &k6),
                    (A97, &k7),
                    (A98, &k8),
                ],
            ),
            &mut k9,
        );
        f(
            &combo(
                &y,
                h,
                &[
                    (A101, &k1),
                    (A104, &k4),
                    (A105, &k5),
                    (A106, &k6),
                    (A107, &k7),
                    (A108, &k8),
                    (A109, &k9),
                ],
            ),
            &mut k10,
        );
        let mut k11 = z;
        f(
            &combo(
                &y,
                h,
                &[
                    (A111, &k1),
                    (A114, &k4),
                    (A115, &k5),
                    (A116, &k6),
                    (A117, &k7),
                    (A118, &k8),
                    (A119, &k9),
                    (A1110, &k10),
                ],
            ),
            &mut k11,
        );
        let mut k12 = z;
        f(
            &combo(
                &y,
                h,
                &[
                    (A121, &k1),
                    (A124, &k4),
                    (A125, &k5),
                    (A126, &k6),
                    (A127, &k7),
                    (A128, &k8),
                    (A129, &k9),
                    (A1210, &k10),
                    (A1211, &k11),
                ],
            ),
            &mut k12,
        );
        self.stats.rhs_evals += 11;

        let bsum = weighted(&[
            (B1, &k1),
            (B6, &k6),
            (B7, &k7),
            (B8, &k8),
            (B9, &k9),
            (B10, &k10),
            (B11, &k11),
            (B12, &k12),
        ]);
        let y_new = combo(&y, h, &[(1.0, &bsum)]);

        let mut err = T::zero();
        let mut err2 = T::zero();
        for i in 0..N {
            let sk = self.sk(y[i], y_new[i]);
            let e2 = bsum[i] - T::lit(BHH1) * k1[i] - T::lit(BHH2) * k9[i] - T::lit(BHH3) * k12[i];
            err2 = err2 + (e2 / sk).powi(2);
            let e1 = T::lit(ER1) * k1[i]
                + T::lit(ER6) * k6[i]
                + T::lit(ER7) * k7[i]
                + T::lit(ER8) * k8[i]
                + T::lit(ER9) * k9[i]
                + T::lit(ER10) * k10[i]
                + T::lit(ER11) * k11[i]
                + T::lit(ER12) * k12[i];
            err = err + (e1 / sk).powi(2);
        }
        let mut deno = err + T::lit(0.01) * err2;
        if deno <= T::zero() {
            deno = T::one();
        }
        let err = h.abs() * err * (T::one() / (deno * T::of_usize(N))).sqrt();

        let safe = T::lit(0.9);
        let (facc1, facc2) = (T::lit(1.0 / 0.333), T::lit(1.0 / 6.0));
        let beta = T::lit(0.04);
        let expo1 = T::lit(1.0 / 8.0) - beta * T::lit(0.2);

        if !err.is_finite() || !all_finite(&y_new) {
            self.stats.rejected += 1;
            self.last_rejected = true;
            self.h = h.abs() * T::lit(0.1);
            return Ok(None);
        }

        let fac11 = err.powf(expo1);
        if err > T::one() {
            self.stats.rejected += 1;
            self.last_rejected = true;
            self.h = h.abs() / facc1.min(fac11 / safe);
            return Ok(None);
        }

        // Accepted: proportional-integral update of the step size.
        let fac = facc2.max(facc1.min(fac11 / self.facold.powf(beta) / safe));
        let mut h_new = h.abs() / fac;
        if self.last_rejected {
            h_new = h_new.min(h.abs());
        }
        self.facold = err.max(T::lit(1e-4));
        self.last_rejected = false;

        let mut f_new = z;
        f(&y_new, &mut f_new);
        self.stats.rhs_evals += 1;
        if !all_finite(&f_new) {
            self.stats.rejected += 1;
            self.last_rejected = true;
            self.h = h.abs() * T::lit(0.1);
            return Ok(None);
        }

        // Dense output coefficients.
        let mut cont = [z; 8];
        cont[0] = y;
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * f_new[i] - bspl;
        }
        cont[4] = weighted(&[
            (D41, &k1),
            (D46, &k6),
            (D47, &k7),
            (D48, &k8),
            (D49, &k9),
            (D410, &k10),
            (D411, &k11),
            (D412, &k12),
        ]);
        cont[5] = weighted(&[
            (D51, &k1),
            (D56, &k6),
            (D57, &k7),
            (D58, &k8),
            (D59, &k9),
            (D510, &k10),
            (D511, &k11),
            (D512, &k12),
        ]);
        cont[6] = weighted(&[
            (D61, &k1),
            (D66, &k6),
            (D67, &k7),
            (D68, &k8),
            (D69, &k9),
            (D610, &k10),
            (D611, &k11),
            (D612, &k12),
        ]);
        cont[7] = weighted(&[
            (D71, &k1),
            (D76, &k6),
            (D77, &k7),
            (D78, &k8),
            (D79, &k9),
            (D710, &k10),
            (D711, &k11),
            (D712, &k12),
        ]);
        let (mut k14, mut k15, mut k16) = (z, z, z);
        f(
            &combo(
                &y,
                h,
                &[
                    (A141, &k1),
                    (A147, &k7),
                    (A148, &k8),
                    (A149, &k9),
                    (A1410, &k10),
                    (A1411, &k11),
                    (A1412, &k12),
                    (A1413, &f_new),
                ],
            ),
            &mut k14,
        );
        f(
            &combo(
                &y,
                h,
                &[
                    (A151, &k1),
                    (A156, &k6),
                    (A157, &k7),
                    (A158, &k8),
                    (A1511, &k11),
                    (A1512, &k12),
                    (A1513, &f_new),
                    (A1514, &k14),
                ],
            ),
            &mut k15,
        );
        f(
            &combo(
                &y,
                h,
                &[
                    (A161, &k1),
                    (A166, &k6),
                    (A167, &k7),
                    (A168, &k8),
                    (A169, &k9),
                    (A1613, &f_new),
                    (A1614, &k14),
                    (A1615, &k15),
                ],
            ),
            &mut k16,
        );
        self.stats.rhs_evals += 3;
        for (row, d) in [
            (4usize, [D413, D414, D415, D416]),
            (5, [D513, D514, D515, D516]),
            (6, [D613, D614, D615, D616]),
            (7, [D713, D714, D715, D716]),
        ] {
            for i in 0..N {
                let v = cont[row][i]
                    + T::lit(d[0]) * f_new[i]
                    + T::lit(d[1]) * k14[i]
                    + T::lit(d[2]) * k15[i]
                    + T::lit(d[3]) * k16[i];
                cont[row][i] = v * h;
            }
        }

        let seg = DenseSegment {
            t0: self.t,
            h,
            cont,
        };

        let mut y_next = y_new;
        let correction = self.sys.project(&mut y_next);
        if correction > T::zero() {
            self.stats.max_projection = self.stats.max_projection.max(correction);
            f(&y_next, &mut f_new);
            self.stats.rhs_evals += 1;
        }
        self.t = exact_end.unwrap_or(self.t + h);
        self.y = y_next;
        self.k1 = f_new;
        self.h = h_new;
        self.stats.accepted += 1;
        Ok(Some(seg))
    }
}

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;
const A141: f64 = 5.61675022830479523392909219681E-2;
const A147: f64 = 2.53500210216624811088794765333E-1;
const A148: f64 = -2.46239037470802489917441475441E-1;
const A149: f64 = -1.24191423263816360469010140626E-1;
const A1410: f64 = 1.5329179827876569731206322685E-1;
const A1411: f64 = 8.20105229563468988491666602057E-3;
const A1412: f64 = 7.56789766054569976138603589584E-3;
const A1413: f64 = -8.298E-3;
const A151: f64 = 3.18346481635021405060768473261E-2;
const A156: f64 = 2.83009096723667755288322961402E-2;
const A157: f64 = 5.35419883074385676223797384372E-2;
const A158: f64 = -5.49237485713909884646569340306E-2;
const A1511: f64 = -1.08347328697249322858509316994E-4;
const A1512: f64 = 3.82571090835658412954920192323E-4;
const A1513: f64 = -3.40465008687404560802977114492E-4;
const A1514: f64 = 1.41312443674632500278074618366E-1;
const A161: f64 = -4.28896301583791923408573538692E-1;
const A166: f64 = -4.69762141536116384314449447206E0;
const A167: f64 = 7.68342119606259904184240953878E0;
const A168: f64 = 4.06898981839711007970213554331E0;
const A169: f64 = 3.56727187455281109270669543021E-1;
const A1613: f64 = -1.39902416515901462129418009734E-3;
const A1614: f64 = 2.9475147891527723389556272149E0;
const A1615: f64 = -9.15095847217987001081870187138E0;
const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;
const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;
const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
const D41: f64 = -0.84289382761090128651353491142E+01;
const D46: f64 = 0.56671495351937776962531783590E+00;
const D47: f64 = -0.30689499459498916912797304727E+01;
const D48: f64 = 0.23846676565120698287728149680E+01;
const D49: f64 = 0.21170345824450282767155149946E+01;
const D410: f64 = -0.87139158377797299206789907490E+00;
const D411: f64 = 0.22404374302607882758541771650E+01;
const D412: f64 = 0.63157877876946881815570249290E+00;
const D413: f64 = -0.88990336451333310820698117400E-01;
const D414: f64 = 0.18148505520854727256656404962E+02;
const D415: f64 = -0.91946323924783554000451984436E+01;
const D416: f64 = -0.44360363875948939664310572000E+01;
const D51: f64 = 0.10427508642579134603413151009E+02;
const D56: f64 = 0.24228349177525818288430175319E+03;
const D57: f64 = 0.16520045171727028198505394887E+03;
const D58: f64 = -0.37454675472269020279518312152E+03;
const D59: f64 = -0.22113666853125306036270938578E+02;
const D510: f64 = 0.77334326684722638389603898808E+01;
const D511: f64 = -0.30674084731089398182061213626E+02;
const D512: f64 = -0.93321305264302278729567221706E+01;
const D513: f64 = 0.15697238121770843886131091075E+02;
const D514: f64 = -0.31139403219565177677282850411E+02;
const D515: f64 = -0.93529243588444783865713862664E+01;
const D516: f64 = 0.35816841486394083752465898540E+02;
const D61: f64 = 0.19985053242002433820987653617E+02;
const D66: f64 = -0.38703730874935176555105901742E+03;
const D67: f64 = -0.18917813819516756882830838328E+03;
const D68: f64 = 0.52780815920542364900561016686E+03;
const D69: f64 = -0.11573902539959630126141871134E+02;
const D610: f64 = 0.68812326946963000169666922661E+01;
const D611: f64 = -0.10006050966910838403183860980E+01;
const D612: f64 = 0.77771377980534432092869265740E+00;
const D613: f64 = -0.27782057523535084065932004339E+01;
const D614: f64 = -0.60196695231264120758267380846E+02;
const D615: f64 = 0.84320405506677161018159903784E+02;
const D616: f64 = 0.11992291136182789328035130030E+02;
const D71: f64 = -0.25693933462703749003312586129E+02;
const D76: f64 = -0.15418974869023643374053993627E+03;
const D77: f64 = -0.23152937917604549567536039109E+03;
const D78: f64 = 0.35763911791061412378285349910E+03;
const D79: f64 = 0.93405324183624310003907691704E+02;
const D710: f64 = -0.37458323136451633156875139351E+02;
const D711: f64 = 0.10409964950896230045147246184E+03;
const D712: f64 = 0.29840293426660503123344363579E+02;
const D713: f64 = -0.43533456590011143754432175058E+02;
const D714: f64 = 0.96324553959188282948394950600E+02;
const D715: f64 = -0.39177261675615439165231486172E+02;
const D716: f64 = -0.14972683625798562581422125276E+03;

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<f64, 2> for Oscillator {
        fn rhs(&self, y: &[f64; 2], dy: &mut [f64; 2]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    struct Decay;
    impl OdeSystem<f32, 1> for Decay {
        fn rhs(&self, y: &[f32; 1], dy: &mut [f32; 1]) {
            dy[0] = -y[0];
        }
    }

    fn run<S: OdeSystem<f64, 2>>(
        sys: &S,
        t1: f64,
        tol: Tolerances,
    ) -> (f64, [f64; 2], Vec<DenseSegment<f64, 2>>) {
        let mut st = Dop853::new(sys, 0.0, [1.0, 0.0], t1, tol).unwrap();
        let mut segs = Vec::new();
        while st.t() < t1 {
            segs.push(st.step(t1).unwrap());
        }
        (st.t(), *st.y(), segs)
    }

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let t1 = 20.0;
        let (t, y, segs) = run(&Oscillator, t1, Tolerances::new(1e-12, 1e-12));
        assert_eq!(t, t1);
        assert!((y[0] - t1.cos()).abs() < 1e-10, "{}", y[0] - t1.cos());
        assert!((y[1] + t1.sin()).abs() < 1e-10);
        // Dense output is accurate in the middle of every step.
        for s in &segs {
            let tm = s.t0 + 0.37 * s.h;
            let ym = s.eval(tm);
            assert!((ym[0] - tm.cos()).abs() < 1e-9);
            assert!((s.eval_component(tm, 1) + tm.sin()).abs() < 1e-9);
            assert!((s.eval(s.t1())[0] - s.y1()[0]).abs() < 1e-13);
            assert_eq!(s.eval(s.t0), s.y0());
        }
    }

    #[test]
    fn tighter_tolerance_means_smaller_error() {
        let err = |tol: f64| {
            let (_, y, _) = run(&Oscillator, 10.0, Tolerances::new(tol, tol));
            (y[0] - 10f64.cos()).abs()
        };
        assert!(err(1e-10) < err(1e-6));
    }

    #[test]
    fn backwards_integration() {
        let mut st =
            Dop853::new(&Oscillator, 0.0, [1.0, 0.0], -3.0, Tolerances::default()).unwrap();
        while st.t() > -3.0 {
            st.step(-3.0).unwrap();
        }
        assert!((st.y()[0] - 3f64.cos()).abs() < 1e-9);
        assert!((st.y()[1] - 3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn single_precision_stepper() {
        let tol = Tolerances::<f32>::new(1e-6, 1e-6);
        let mut st = Dop853::new(&Decay, 0.0f32, [1.0], 2.0, tol).unwrap();
        while st.t() < 2.0 {
            st.step(2.0).unwrap();
        }
        assert!((st.y()[0] - (-2.0f32).exp()).abs() < 1e-5);
    }

    struct Blowup;
    impl OdeSystem<f64, 1> for Blowup {
        fn rhs(&self, y: &[f64; 1], dy: &mut [f64; 1]) {
            dy[0] = y[0] * y[0];
        }
    }

    #[test]
    fn finite_time_blowup_is_reported() {
        let mut st = Dop853::new(
            &Blowup,
            0.0,
            [1.0],
            2.0,
            Tolerances::default().with_max_steps(100_000),
        )
        .unwrap();
        let mut res = Ok(());
        while st.t() < 2.0 {
            if let Err(e) = st.step(2.0) {
                res = Err(e);
                break;
            }
        }
        assert!(
            matches!(res, Err(Error::StepUnderflow { .. } | Error::MaxSteps(_))),
            "{res:?}"
        );
    }
}
