//! Adaptive Dormand–Prince 5(4) integrator with continuous output.

use crate::error::{Error, Result};

/// Right-hand side `dy/dz = f(z, y)` written into the last argument.
pub trait Rhs {
    fn eval(&mut self, z: f64, y: &[f64], dydz: &mut [f64]);
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Rhs for F {
    fn eval(&mut self, z: f64, y: &[f64], dydz: &mut [f64]) {
        self(z, y, dydz)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrate from `z = 0` to the last entry of `outputs` (ascending, ≥ 0),
/// returning the state at every output point.
pub fn integrate<R: Rhs>(rhs: &mut R, y0: &[f64], outputs: &[f64], tol: Tolerance) -> Result<(Vec<Vec<f64>>, Stats)> {
    let n = y0.len();
    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(outputs.len());
    let Some(&z_end) = outputs.last() else {
        return Ok((out, stats));
    };
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= 0.0 {
        out.push(y0.to_vec());
        next_out += 1;
    }

    let mut z = 0.0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut cont = vec![vec![0.0; n]; 5];
    rhs.eval(z, &y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = (0.01 * z_end).max(1e-6).min(z_end);

    while z < z_end {
        if z + h > z_end {
            h = z_end - z;
        }
        if h <= 1e-13 * z_end.max(1.0) {
            return Err(Error::StepUnderflow { z_km: z });
        }
        let stage = |k: &Vec<Vec<f64>>, coeffs: &[(usize, f64)], tmp: &mut Vec<f64>| {
            for i in 0..n {
                let mut acc = y[i];
                for &(s, a) in coeffs {
                    acc += h * a * k[s][i];
                }
                tmp[i] = acc;
            }
        };
        stage(&k, &[(0, A21)], &mut tmp);
        rhs.eval(z + C2 * h, &tmp, &mut k[1]);
        stage(&k, &[(0, A31), (1, A32)], &mut tmp);
        rhs.eval(z + C3 * h, &tmp, &mut k[2]);
        stage(&k, &[(0, A41), (1, A42), (2, A43)], &mut tmp);
        rhs.eval(z + C4 * h, &tmp, &mut k[3]);
        stage(&k, &[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp);
        rhs.eval(z + C5 * h, &tmp, &mut k[4]);
        stage(&k, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &mut tmp);
        rhs.eval(z + h, &tmp, &mut k[5]);
        stage(&k, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], &mut y_new);
        rhs.eval(z + h, &y_new, &mut k[6]);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            let z_new = z + h;
            if next_out < outputs.len() && outputs[next_out] <= z_new {
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    cont[4][i] = h
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                while next_out < outputs.len() && outputs[next_out] <= z_new {
                    let zo = outputs[next_out];
                    if zo == z_new {
                        out.push(y_new.clone());
                    } else {
                        let th = (zo - z) / h;
                        let th1 = 1.0 - th;
                        out.push(
                            (0..n)
                                .map(|i| {
                                    cont[0][i]
                                        + th * (cont[1][i] + th1 * (cont[2][i] + th * (cont[3][i] + th1 * cont[4][i])))
                                })
                                .collect(),
                        );
                    }
                    next_out += 1;
                }
            }
            z = z_new;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut f = |_z: f64, y: &[f64], d: &mut [f64]| d[0] = -0.5 * y[0];
        let outs: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let tol = Tolerance { rtol: 1e-10, atol: 1e-14 };
        let (ys, _) = integrate(&mut f, &[1.0], &outs, tol).unwrap();
        for (z, y) in outs.iter().zip(&ys) {
            assert!((y[0] - (-0.5 * z).exp()).abs() < 1e-9, "{z}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let mut f = |_z: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let outs: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let tol = Tolerance { rtol: 1e-10, atol: 1e-12 };
        let (ys, stats) = integrate(&mut f, &[0.0, 1.0], &outs, tol).unwrap();
        assert!(stats.accepted < 400);
        for (z, y) in outs.iter().zip(&ys) {
            assert!((y[0] - z.sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn blowup_reports_position() {
        let mut f = |_z: f64, y: &[f64], d: &mut [f64]| d[0] = y[0] * y[0];
        let tol = Tolerance { rtol: 1e-8, atol: 1e-12 };
        let err = integrate(&mut f, &[1.0], &[2.0], tol).unwrap_err();
        match err {
            Error::StepUnderflow { z_km } => assert!((z_km - 1.0).abs() < 1e-2),
            e => panic!("{e}"),
        }
    }
}
