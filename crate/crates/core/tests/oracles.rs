//! Fast implementations against slow direct references on random small
//! instances.

use amis::{
    distances, learn_step, mixture_log_density, CdfGrid, FamilySpec, GridSpec, Normalization,
    ProposalParams,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn brute_mixture_density(x: &[f64], comps: &[(Vec<f64>, Vec<f64>)], counts: &[usize]) -> f64 {
    let d = x.len();
    let omega: usize = counts.iter().sum();
    let mut total = 0.0;
    for ((mean, cov), n) in comps.iter().zip(counts) {
        let s = DMatrix::from_row_slice(d, d, cov);
        let inv = s.clone().try_inverse().unwrap();
        let r = DVector::from_iterator(d, x.iter().zip(mean).map(|(a, b)| a - b));
        let q = (r.transpose() * inv * &r)[(0, 0)];
        let norm = ((2.0 * std::f64::consts::PI).powi(d as i32) * s.determinant()).sqrt();
        total += *n as f64 * (-0.5 * q).exp() / norm;
    }
    total / omega as f64
}

fn pd_matrix(d: usize, a: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(d, d, &a[..d * d]);
    let s = &m * m.transpose() + DMatrix::identity(d, d) * 0.3;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(0.5 * (s[(i, j)] + s[(j, i)]));
        }
    }
    out
}

fn components(d: usize) -> impl Strategy<Value = Vec<(Vec<f64>, Vec<f64>)>> {
    prop::collection::vec(
        (prop::collection::vec(-3.0..3.0f64, d), prop::collection::vec(-1.5..1.5f64, d * d)),
        1..5,
    )
    .prop_map(move |v| v.into_iter().map(|(m, a)| (m, pd_matrix(d, &a))).collect())
}

fn mixture_case() -> impl Strategy<Value = (Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>, Vec<usize>)> {
    (1usize..=2).prop_flat_map(|d| {
        components(d).prop_flat_map(move |comps| {
            let k = comps.len();
            (
                prop::collection::vec(-4.0..4.0f64, d),
                Just(comps),
                prop::collection::vec(1usize..500, k),
            )
        })
    })
}

fn brute_distances(fh: &[f64], f: &[f64], n0: usize, n1: usize, area: f64) -> (f64, f64, f64) {
    // true-CDF cell masses by differencing axis 1, then axis 0
    let mut d1 = vec![0.0; n0 * n1];
    for i in 0..n0 {
        for j in 0..n1 {
            d1[i * n1 + j] = f[i * n1 + j] - if j > 0 { f[i * n1 + j - 1] } else { 0.0 };
        }
    }
    let mut cvm = 0.0;
    let mut sq = 0.0;
    let mut sup = 0.0f64;
    for i in 0..n0 {
        for j in 0..n1 {
            let mass = d1[i * n1 + j] - if i > 0 { d1[(i - 1) * n1 + j] } else { 0.0 };
            let e = fh[i * n1 + j] - f[i * n1 + j];
            cvm += e * e * mass;
            sq += e * e;
            sup = sup.max(e.abs());
        }
    }
    (cvm, (sq * area).sqrt(), sup)
}

fn cumulative(raw: &[f64], n0: usize, n1: usize) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    let mut out = vec![0.0; n0 * n1];
    for i in 0..n0 {
        for j in 0..n1 {
            let mut s = 0.0;
            for a in 0..=i {
                for b in 0..=j {
                    s += raw[a * n1 + b];
                }
            }
            out[i * n1 + j] = s / total;
        }
    }
    out
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE) || a == b
}

fn brute_weighted_moments(points: &[f64], log_w: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let sw: f64 = w.iter().sum();
    let mut mean = vec![0.0; d];
    for (x, wi) in points.chunks(d).zip(&w) {
        for a in 0..d {
            mean[a] += wi * x[a] / sw;
        }
    }
    let mut cov = vec![0.0; d * d];
    for (x, wi) in points.chunks(d).zip(&w) {
        for a in 0..d {
            for b in 0..d {
                cov[a * d + b] += wi * (x[a] - mean[a]) * (x[b] - mean[b]) / sw;
            }
        }
    }
    (mean, cov)
}

// |got - want| over the weighted size of the summands, per coordinate
fn sum_rel(got: &[f64], want: &[f64], points: &[f64], w: &[f64], div: f64) -> f64 {
    let d = got.len();
    (0..d)
        .map(|a| {
            let scale = points.chunks(d).zip(w).map(|(x, wi)| wi * x[a].abs()).sum::<f64>() / div;
            (got[a] - want[a]).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn norm_rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mixture_density_matches_direct_sum((x, comps, counts) in mixture_case()) {
        let params: Vec<ProposalParams> = comps
            .iter()
            .map(|(m, c)| ProposalParams::from_slices(m, c).unwrap())
            .collect();
        let fast = mixture_log_density(&x, &params, &counts).unwrap().exp();
        let slow = brute_mixture_density(&x, &comps, &counts);
        prop_assert!(rel_close(fast, slow, 1e-12), "{} vs {}", fast, slow);
    }

    #[test]
    fn distances_match_double_loop(
        n0 in 1usize..12,
        n1 in 1usize..12,
        seed in prop::collection::vec(0.0..1.0f64, 288),
        w in 0.1..3.0f64,
        h in 0.1..3.0f64,
    ) {
        let f = cumulative(&seed[..n0 * n1], n0, n1);
        let fh = cumulative(&seed[144..144 + n0 * n1], n0, n1);
        let grid = GridSpec::new(vec![0.0, -1.0], vec![w, h - 1.0], vec![n0, n1]).unwrap();
        let r = distances(
            &CdfGrid::new(grid.clone(), fh.clone()).unwrap(),
            &CdfGrid::new(grid.clone(), f.clone()).unwrap(),
        )
        .unwrap();
        let (cvm, l2, sup) = brute_distances(&fh, &f, n0, n1, grid.cell_area());
        prop_assert!(rel_close(r.cvm, cvm, 1e-12), "{} {}", r.cvm, cvm);
        prop_assert!(rel_close(r.l2, l2, 1e-12), "{} {}", r.l2, l2);
        prop_assert!(rel_close(r.linf, sup, 1e-12), "{} {}", r.linf, sup);
    }

    #[test]
    fn weighted_moments_match_two_pass(
        d in 1usize..=2,
        n in 6usize..80,
        raw in prop::collection::vec(-5.0..5.0f64, 160),
        lw in prop::collection::vec(-8.0..8.0f64, 80),
    ) {
        let pts = &raw[..n * d];
        let lw = &lw[..n];
        let fam = FamilySpec::gaussian(d);
        let p = learn_step(pts, lw, &fam, Normalization::SelfNormalized).unwrap();
        let (mean, cov) = brute_weighted_moments(pts, lw, d);
        let got_cov: Vec<f64> = p.cov().transpose().iter().copied().collect();
        let w: Vec<f64> = lw.iter().map(|l| l.exp()).collect();
        let sw: f64 = w.iter().sum();
        prop_assert!(sum_rel(p.mean().as_slice(), &mean, pts, &w, sw) <= 1e-12);
        prop_assert!(norm_rel(&got_cov, &cov) <= 1e-12, "{:?} {:?}", got_cov, cov);

        let q = learn_step(pts, lw, &fam, Normalization::Normalized);
        let m1: Vec<f64> = (0..d)
            .map(|a| pts.chunks(d).zip(lw).map(|(x, l)| l.exp() * x[a]).sum::<f64>() / n as f64)
            .collect();
        if let Ok(q) = q {
            prop_assert!(sum_rel(q.raw_m1().as_slice(), &m1, pts, &w, n as f64) <= 1e-12);
        }
    }
}
