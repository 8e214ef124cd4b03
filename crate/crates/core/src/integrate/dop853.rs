//! Dormand-Prince 8(5,3) stepper with Hairer's step-size control and
//! 7th-order continuous extension.

use nalgebra::SVector;

use super::tableau::*;
use super::{DenseStep, Tolerances, VectorField};
use crate::error::{Error, Result};

const SAFE: f64 = 0.9;
const FAC1: f64 = 0.333;
const FAC2: f64 = 6.0;
const BETA: f64 = 0.0;

pub(crate) struct Stepper<'a, F: ?Sized, const N: usize> {
    field: &'a F,
    tol: Tolerances,
    t: f64,
    y: SVector<f64, N>,
    f: SVector<f64, N>,
    h: f64,
    direction: f64,
    facold: f64,
    last_rejected: bool,
    pub(crate) steps: usize,
    max_steps: usize,
}

impl<'a, F, const N: usize> Stepper<'a, F, N>
where
    F: VectorField<N> + ?Sized,
{
    pub(crate) fn new(
        field: &'a F,
        t0: f64,
        y0: SVector<f64, N>,
        t_end: f64,
        tol: Tolerances,
    ) -> Self {
        let f = field.eval(&y0);
        let direction = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut s = Stepper {
            field,
            tol,
            t: t0,
            y: y0,
            f,
            h: 0.0,
            direction,
            facold: 1e-4,
            last_rejected: false,
            steps: 0,
            max_steps: tol.max_steps,
        };
        let h_max = tol.h_max.min((t_end - t0).abs()).max(f64::MIN_POSITIVE);
        s.h = s.initial_step(h_max);
        s
    }

    pub(crate) fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn y(&self) -> &SVector<f64, N> {
        &self.y
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.tol.abs + self.tol.rel * a.abs().max(b.abs())
    }

    fn initial_step(&self, h_max: f64) -> f64 {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..N {
            let sk = self.tol.abs + self.tol.rel * self.y[i].abs();
            dnf += (self.f[i] / sk).powi(2);
            dny += (self.y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(h_max) * self.direction;
        let y1 = self.y + self.f * h;
        let f1 = self.field.eval(&y1);
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = self.tol.abs + self.tol.rel * self.y[i].abs();
            der2 += ((f1[i] - self.f[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h.abs();
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h.abs() * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        (100.0 * h.abs()).min(h1).min(h_max) * self.direction
    }

    /// Takes one accepted step without passing `t_limit` and returns its
    /// continuous extension.
    pub(crate) fn step(&mut self, t_limit: f64) -> Result<DenseStep<N>> {
        let expo1 = 1.0 / 8.0 - BETA * 0.2;
        let facc1 = 1.0 / FAC1;
        let facc2 = 1.0 / FAC2;
        loop {
            if self.steps >= self.max_steps {
                return Err(Error::MaxSteps { steps: self.steps, t: self.t });
            }
            let remaining = t_limit - self.t;
            let mut last = false;
            if (self.h.abs()) >= remaining.abs() {
                self.h = remaining;
                last = true;
            }
            let h = self.h;
            if h.abs() <= 1e-15 * self.t.abs().max(1.0) {
                if last && remaining.abs() <= 1e-15 * self.t.abs().max(1.0) {
                    // Already at the limit: report a zero-length step.
                    return Ok(DenseStep::constant(self.t, self.y));
                }
                return Err(Error::StepUnderflow { t: self.t });
            }
            self.steps += 1;

            let fld = self.field;
            let y = &self.y;
            let k1 = self.f;
            let k2 = fld.eval(&(y + k1 * (A21 * h)));
            let k3 = fld.eval(&(y + (k1 * A31 + k2 * A32) * h));
            let k4 = fld.eval(&(y + (k1 * A41 + k3 * A43) * h));
            let k5 = fld.eval(&(y + (k1 * A51 + k3 * A53 + k4 * A54) * h));
            let k6 = fld.eval(&(y + (k1 * A61 + k4 * A64 + k5 * A65) * h));
            let k7 = fld.eval(&(y + (k1 * A71 + k4 * A74 + k5 * A75 + k6 * A76) * h));
            let k8 = fld.eval(&(y + (k1 * A81 + k4 * A84 + k5 * A85 + k6 * A86 + k7 * A87) * h));
            let k9 = fld.eval(
                &(y + (k1 * A91 + k4 * A94 + k5 * A95 + k6 * A96 + k7 * A97 + k8 * A98) * h),
            );
            let k10 = fld.eval(
                &(y + (k1 * A101
                    + k4 * A104
                    + k5 * A105
                    + k6 * A106
                    + k7 * A107
                    + k8 * A108
                    + k9 * A109)
                    * h),
            );
            let k11 = fld.eval(
                &(y + (k1 * A111
                    + k4 * A114
                    + k5 * A115
                    + k6 * A116
                    + k7 * A117
                    + k8 * A118
                    + k9 * A119
                    + k10 * A1110)
                    * h),
            );
            let yy1 = y
                + (k1 * A121
                    + k4 * A124
                    + k5 * A125
                    + k6 * A126
                    + k7 * A127
                    + k8 * A128
                    + k9 * A129
                    + k10 * A1210
                    + k11 * A1211)
                    * h;
            let k12 = fld.eval(&yy1);
            let kb = k1 * B1
                + k6 * B6
                + k7 * B7
                + k8 * B8
                + k9 * B9
                + k10 * B10
                + k11 * B11
                + k12 * B12;
            let y_new = y + kb * h;

            let mut err = 0.0;
            let mut err2 = 0.0;
            for i in 0..N {
                let sk = self.scale(y[i], y_new[i]);
                let e2 = kb[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
                err2 += (e2 / sk).powi(2);
                let e = ER1 * k1[i]
                    + ER6 * k6[i]
                    + ER7 * k7[i]
                    + ER8 * k8[i]
                    + ER9 * k9[i]
                    + ER10 * k10[i]
                    + ER11 * k11[i]
                    + ER12 * k12[i];
                err += (e / sk).powi(2);
            }
            let mut deno = err + 0.01 * err2;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h.abs() * err * (1.0 / (deno * N as f64)).sqrt();

            if !err.is_finite() || !y_new.iter().all(|v| v.is_finite()) {
                self.h *= 0.1;
                self.last_rejected = true;
                continue;
            }

            let fac11 = err.powf(expo1);
            let fac = fac11 / self.facold.powf(BETA);
            let fac = facc2.max(facc1.min(fac / SAFE));
            let mut h_new = h / fac;

            if err <= 1.0 {
                self.facold = err.max(1e-4);
                let f_new = fld.eval(&y_new);
                if !f_new.iter().all(|v| v.is_finite()) {
                    self.h *= 0.1;
                    self.last_rejected = true;
                    continue;
                }

                // continuous extension
                let ydiff = y_new - y;
                let bspl = k1 * h - ydiff;
                let c4 = ydiff - f_new * h - bspl;
                let mut c5 = k1 * D41
                    + k6 * D46
                    + k7 * D47
                    + k8 * D48
                    + k9 * D49
                    + k10 * D410
                    + k11 * D411
                    + k12 * D412;
                let mut c6 = k1 * D51
                    + k6 * D56
                    + k7 * D57
                    + k8 * D58
                    + k9 * D59
                    + k10 * D510
                    + k11 * D511
                    + k12 * D512;
                let mut c7 = k1 * D61
                    + k6 * D66
                    + k7 * D67
                    + k8 * D68
                    + k9 * D69
                    + k10 * D610
                    + k11 * D611
                    + k12 * D612;
                let mut c8 = k1 * D71
                    + k6 * D76
                    + k7 * D77
                    + k8 * D78
                    + k9 * D79
                    + k10 * D710
                    + k11 * D711
                    + k12 * D712;
                let k14 = fld.eval(
                    &(y + (k1 * A141
                        + k7 * A147
                        + k8 * A148
                        + k9 * A149
                        + k10 * A1410
                        + k11 * A1411
                        + k12 * A1412
                        + f_new * A1413)
                        * h),
                );
                let k15 = fld.eval(
                    &(y + (k1 * A151
                        + k6 * A156
                        + k7 * A157
                        + k8 * A158
                        + k11 * A1511
                        + k12 * A1512
                        + f_new * A1513
                        + k14 * A1514)
                        * h),
                );
                let k16 = fld.eval(
                    &(y + (k1 * A161
                        + k6 * A166
                        + k7 * A167
                        + k8 * A168
                        + k9 * A169
                        + f_new * A1613
                        + k14 * A1614
                        + k15 * A1615)
                        * h),
                );
                c5 = (c5 + f_new * D413 + k14 * D414 + k15 * D415 + k16 * D416) * h;
                c6 = (c6 + f_new * D513 + k14 * D514 + k15 * D515 + k16 * D516) * h;
                c7 = (c7 + f_new * D613 + k14 * D614 + k15 * D615 + k16 * D616) * h;
                c8 = (c8 + f_new * D713 + k14 * D714 + k15 * D715 + k16 * D716) * h;

                let dense = DenseStep {
                    t: self.t,
                    h,
                    cont: [*y, ydiff, bspl, c4, c5, c6, c7, c8],
                };

                if self.last_rejected {
                    h_new = self.direction * h_new.abs().min(h.abs());
                }
                self.last_rejected = false;
                self.t = if last { t_limit } else { self.t + h };
                self.y = y_new;
                self.f = f_new;
                self.h = self.direction * h_new.abs().min(self.tol.h_max);
                return Ok(dense);
            } else {
                h_new = h / facc1.min(fac11 / SAFE);
                self.last_rejected = true;
                self.h = h_new;
            }
        }
    }
}
