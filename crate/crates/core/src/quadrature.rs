//! Gauss–Legendre rules, sphere rules and tensor-product box quadrature.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on `[a, b]` split at the given interior breakpoints.
pub fn composite(breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(per_panel);
    let mut xs = Vec::with_capacity((breaks.len() - 1) * per_panel);
    let mut ws = Vec::with_capacity(xs.capacity());
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(mid + half * x);
            ws.push(half * w);
        }
    }
    (xs, ws)
}

/// Uniform composite Gauss rule with `panels` panels on `[a, b]`.
pub fn uniform_composite(a: f64, b: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let breaks: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
    composite(&breaks, per_panel)
}

/// Quadrature on the unit sphere `S^{d-1}`; weights sum to its measure.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `d = 1`: the two points ±1 with unit weight. `d = 2`: `resolution`
    /// equispaced angles. `d = 3`: the Lebedev rule with at least
    /// `resolution` points among {26, 50, 86}.
    pub fn new(d: usize, resolution: usize) -> Result<Self> {
        match d {
            1 => Ok(Self { points: vec![vec![1.0], vec![-1.0]], weights: vec![1.0, 1.0] }),
            2 => {
                let m = resolution.max(4);
                let points = (0..m)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / m as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                Ok(Self { points, weights: vec![2.0 * PI / m as f64; m] })
            }
            3 => Ok(lebedev(resolution)),
            _ => Err(Error::Domain(format!("sphere quadrature implemented for d <= 3, got {d}"))),
        }
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Surface measure of `S^{d-1}`.
pub fn sphere_measure(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // 2 π^{d/2} / Γ(d/2)
            let half = d as f64 / 2.0;
            2.0 * PI.powf(half) / gamma_half_integer(d)
        }
    }
}

fn gamma_half_integer(d: usize) -> f64 {
    // Γ(d/2)
    if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 1e-12 < d as f64 / 2.0 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

fn orbit_a1(out: &mut Vec<Vec<f64>>) {
    for k in 0..3 {
        for s in [1.0, -1.0] {
            let mut p = vec![0.0; 3];
            p[k] = s;
            out.push(p);
        }
    }
}

fn orbit_a2(out: &mut Vec<Vec<f64>>) {
    let a = 0.5f64.sqrt();
    for zero in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let mut p = vec![0.0; 3];
                let idx: Vec<usize> = (0..3).filter(|&i| i != zero).collect();
                p[idx[0]] = s1 * a;
                p[idx[1]] = s2 * a;
                out.push(p);
            }
        }
    }
}

fn orbit_a3(out: &mut Vec<Vec<f64>>) {
    let a = (1.0f64 / 3.0).sqrt();
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            for s3 in [1.0, -1.0] {
                out.push(vec![s1 * a, s2 * a, s3 * a]);
            }
        }
    }
}

fn orbit_bk(out: &mut Vec<Vec<f64>>, l: f64) {
    let m = (1.0 - 2.0 * l * l).sqrt();
    for big in 0..3 {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                for s3 in [1.0, -1.0] {
                    let mut p = vec![0.0; 3];
                    let idx: Vec<usize> = (0..3).filter(|&i| i != big).collect();
                    p[idx[0]] = s1 * l;
                    p[idx[1]] = s2 * l;
                    p[big] = s3 * m;
                    out.push(p);
                }
            }
        }
    }
}

fn orbit_ck(out: &mut Vec<Vec<f64>>, p: f64) {
    let q = (1.0 - p * p).sqrt();
    for zero in 0..3 {
        let idx: Vec<usize> = (0..3).filter(|&i| i != zero).collect();
        for (u, v) in [(p, q), (q, p)] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let mut pt = vec![0.0; 3];
                    pt[idx[0]] = s1 * u;
                    pt[idx[1]] = s2 * v;
                    out.push(pt);
                }
            }
        }
    }
}

fn lebedev(resolution: usize) -> SphereRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let add = |pts: Vec<Vec<f64>>, w: f64, points: &mut Vec<Vec<f64>>, weights: &mut Vec<f64>| {
        weights.extend(std::iter::repeat_n(4.0 * PI * w, pts.len()));
        points.extend(pts);
    };
    let orbit = |f: &dyn Fn(&mut Vec<Vec<f64>>)| {
        let mut v = Vec::new();
        f(&mut v);
        v
    };
    if resolution <= 26 {
        add(orbit(&orbit_a1), 0.047619047619047616, &mut points, &mut weights);
        add(orbit(&orbit_a2), 0.038095238095238099, &mut points, &mut weights);
        add(orbit(&orbit_a3), 0.032142857142857140, &mut points, &mut weights);
    } else if resolution <= 50 {
        add(orbit(&orbit_a1), 0.012698412698412698, &mut points, &mut weights);
        add(orbit(&orbit_a2), 0.022574955908289243, &mut points, &mut weights);
        add(orbit(&orbit_a3), 0.021093750000000000, &mut points, &mut weights);
        add(orbit(&|o| orbit_bk(o, 0.30151134457776357)), 0.020173335537918871, &mut points, &mut weights);
    } else {
        add(orbit(&orbit_a1), 0.011544011544011544, &mut points, &mut weights);
        add(orbit(&orbit_a3), 0.011943909085856280, &mut points, &mut weights);
        add(orbit(&|o| orbit_bk(o, 0.36960284645415020)), 0.011110555710603400, &mut points, &mut weights);
        add(orbit(&|o| orbit_bk(o, 0.69435400660266640)), 0.011876501294537140, &mut points, &mut weights);
        add(orbit(&|o| orbit_ck(o, 0.37424303909034120)), 0.011812303746904480, &mut points, &mut weights);
    }
    SphereRule { points, weights }
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn cube(d: usize, half: f64) -> Self {
        Self { lo: vec![-half; d], hi: vec![half; d] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }
}

/// Tensor-product composite Gauss rule on a box.
pub struct BoxRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl BoxRule {
    pub fn new(domain: &BoxDomain, panels: usize, per_panel: usize) -> Self {
        let axes: Vec<(Vec<f64>, Vec<f64>)> = domain
            .lo
            .iter()
            .zip(&domain.hi)
            .map(|(&a, &b)| uniform_composite(a, b, panels, per_panel))
            .collect();
        let mut points = vec![Vec::new()];
        let mut weights = vec![1.0];
        for (xs, ws) in &axes {
            let mut np = Vec::with_capacity(points.len() * xs.len());
            let mut nw = Vec::with_capacity(np.capacity());
            for (p, w) in points.iter().zip(&weights) {
                for (x, wx) in xs.iter().zip(ws) {
                    let mut q = p.clone();
                    q.push(*x);
                    np.push(q);
                    nw.push(w * wx);
                }
            }
            points = np;
            weights = nw;
        }
        Self { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1);
        assert!((x[0]).abs() < 1e-15 && (w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lebedev_moments() {
        for res in [26, 50, 86] {
            let rule = SphereRule::new(3, res).unwrap();
            assert_eq!(rule.len(), res);
            assert!((rule.measure() - 4.0 * PI).abs() < 1e-12);
            let x2: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0] * p[0]).sum();
            assert!((x2 - 4.0 * PI / 3.0).abs() < 1e-12, "res {res}: {x2}");
            let x2y2: f64 =
                rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0] * p[0] * p[1] * p[1]).sum();
            assert!((x2y2 - 4.0 * PI / 15.0).abs() < 1e-12, "res {res}: {x2y2}");
            let x4: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(4)).sum();
            assert!((x4 - 4.0 * PI / 5.0).abs() < 1e-12);
        }
        // degree 10 moment needs the 50-point rule
        let rule = SphereRule::new(3, 50).unwrap();
        let x10: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[2].powi(10)).sum();
        assert!((x10 - 4.0 * PI / 11.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(sphere_measure(1), 2.0);
        assert!((sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sphere_measure(5) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_rule_volume() {
        let b = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 3.0]);
        let r = BoxRule::new(&b, 2, 4);
        let v: f64 = r.weights.iter().sum();
        assert!((v - 6.0).abs() < 1e-13);
    }
}
