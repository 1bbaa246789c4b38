//! Analytic triplet-loss gradients against central finite differences.

use oadr_core::{triplet_loss_grad, EmbeddingVector, LinearAdapter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

/// Loss as a plain function of the adapter parameters, written out
/// directly from the hinge definition.
fn loss_at(w: &[f64], b: &[f64], a: &[f64], p: &[f64], n: &[f64], margin: f64) -> f64 {
    let dim = a.len();
    let dist = |x: &[f64]| {
        (0..dim)
            .map(|i| {
                let fx = b[i] + (0..dim).map(|j| w[i * dim + j] * x[j]).sum::<f64>();
                (a[i] - fx).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    (dist(p) - dist(n) + margin).max(0.0)
}

fn hinge_arg(w: &[f64], b: &[f64], a: &[f64], p: &[f64], n: &[f64], margin: f64) -> f64 {
    // loss_at with an effectively infinite margin shift removed
    loss_at(w, b, a, p, n, margin + 1e6) - 1e6
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < 1e-7 {
        diff
    } else {
        diff / scale
    }
}

struct Instance {
    a: Vec<f32>,
    p: Vec<f32>,
    n: Vec<f32>,
    w: Vec<f64>,
    b: Vec<f64>,
    margin: f64,
}

fn draw(rng: &mut ChaCha8Rng, dim: usize) -> Instance {
    loop {
        let mut vec = |scale: f32| (0..dim).map(|_| rng.gen_range(-scale..scale)).collect::<Vec<f32>>();
        let (a, p, n) = (vec(1.0), vec(1.0), vec(1.0));
        let mut w: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-0.3..0.3)).collect();
        for i in 0..dim {
            w[i * dim + i] += 1.0;
        }
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let margin = rng.gen_range(0.0..1.5);
        let wide = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
        let arg = hinge_arg(&w, &b, &wide(&a), &wide(&p), &wide(&n), margin);
        // Keep clear of the kink so both difference points sit on one side.
        if arg.abs() > 1e-3 {
            return Instance { a, p, n, w, b, margin };
        }
    }
}

fn max_error_for(dim: usize, seed: u64, instances: usize) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut active = 0;
    for _ in 0..instances {
        let inst = draw(&mut rng, dim);
        let adapter = LinearAdapter::from_parts(dim, inst.w.clone(), inst.b.clone()).unwrap();
        let ev = |v: &[f32]| EmbeddingVector::new(v.to_vec()).unwrap();
        let g = triplet_loss_grad(&ev(&inst.a), &ev(&inst.p), &ev(&inst.n), &adapter, inst.margin, 1e-12).unwrap();
        if g.loss > 0.0 {
            active += 1;
        }

        let wide = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
        let (a, p, n) = (wide(&inst.a), wide(&inst.p), wide(&inst.n));
        let f = |w: &[f64], b: &[f64]| loss_at(w, b, &a, &p, &n, inst.margin);

        let mut w = inst.w.clone();
        for k in 0..w.len() {
            let orig = w[k];
            w[k] = orig + STEP;
            let up = f(&w, &inst.b);
            w[k] = orig - STEP;
            let down = f(&w, &inst.b);
            w[k] = orig;
            worst = worst.max(rel_err(g.d_weights[k], (up - down) / (2.0 * STEP)));
        }
        let mut b = inst.b.clone();
        for k in 0..b.len() {
            let orig = b[k];
            b[k] = orig + STEP;
            let up = f(&inst.w, &b);
            b[k] = orig - STEP;
            let down = f(&inst.w, &b);
            b[k] = orig;
            worst = worst.max(rel_err(g.d_bias[k], (up - down) / (2.0 * STEP)));
        }
    }
    (worst, active)
}

#[test]
fn gradients_match_finite_differences() {
    for (dim, seed) in [(2, 11), (8, 12), (32, 13)] {
        let (worst, active) = max_error_for(dim, seed, 100);
        assert!(worst < TOLERANCE, "dim {dim}: max relative error {worst:e}");
        assert!(active > 50, "dim {dim}: only {active} active-hinge instances");
    }
}

#[test]
fn identity_example_matches_finite_differences() {
    let v = |x: &[f32]| EmbeddingVector::new(x.to_vec()).unwrap();
    let g = triplet_loss_grad(&v(&[0.0, 0.0]), &v(&[6.0, 8.0]), &v(&[3.0, 4.0]), &LinearAdapter::identity(2), 1.0, 1e-12)
        .unwrap();
    let (a, p, n) = ([0.0, 0.0], [6.0, 8.0], [3.0, 4.0]);
    let w0 = LinearAdapter::identity(2).weights().to_vec();
    let b0 = vec![0.0; 2];
    for k in 0..2 {
        let mut b = b0.clone();
        b[k] += STEP;
        let up = loss_at(&w0, &b, &a, &p, &n, 1.0);
        b[k] -= 2.0 * STEP;
        let down = loss_at(&w0, &b, &a, &p, &n, 1.0);
        assert!(rel_err(g.d_bias[k], (up - down) / (2.0 * STEP)) < TOLERANCE);
    }
    for k in 0..4 {
        let mut w = w0.clone();
        w[k] += STEP;
        let up = loss_at(&w, &b0, &a, &p, &n, 1.0);
        w[k] -= 2.0 * STEP;
        let down = loss_at(&w, &b0, &a, &p, &n, 1.0);
        assert!(rel_err(g.d_weights[k], (up - down) / (2.0 * STEP)) < TOLERANCE);
    }
    // u_p = u_n = (-0.6, -0.8), so the bias gradient cancels exactly.
    assert_eq!(g.d_bias, vec![0.0, 0.0]);
}
