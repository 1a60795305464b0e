//! Seeded synthetic signals: a dead-leaves image model, harmonic tones,
//! sparse geometric images and stroke-rendered handwritten-style digits.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::signal::{Shape, Signal};

/// Dead-leaves image on an `n x n` periodic grid: occluding disks with
/// power-law radii and uniform gray levels. Values lie in `[0, 1]`.
pub fn dead_leaves(n: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = vec![rng.random_range(0.2..0.8); n * n];
    let (r_min, r_max) = (1.0f64, n as f64 / 4.0);
    let count = 6 * n;
    for _ in 0..count {
        // Inverse-CDF sampling of p(r) ~ r^-3 on [r_min, r_max].
        let u: f64 = rng.random();
        let r = 1.0 / ((1.0 - u) / (r_min * r_min) + u / (r_max * r_max)).sqrt();
        let (cy, cx): (f64, f64) = (rng.random_range(0.0..n as f64), rng.random_range(0.0..n as f64));
        let gray: f64 = rng.random();
        let reach = r.ceil() as isize;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (py, px) = (cy.floor() as isize + dy, cx.floor() as isize + dx);
                let (fy, fx) = (py as f64 + 0.5 - cy, px as f64 + 0.5 - cx);
                if fy * fy + fx * fx <= r * r {
                    let idx = py.rem_euclid(n as isize) as usize * n + px.rem_euclid(n as isize) as usize;
                    img[idx] = gray;
                }
            }
        }
    }
    Signal::from_real(Shape::D2(n, n), &img).expect("power-of-two grid")
}

/// Sequence of notes with decaying harmonics, `n` samples.
pub fn harmonic_tones(n: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n];
    let notes = 6;
    let len = n / notes;
    for note in 0..notes {
        // Fundamental in cycles per sample on a half-tone scale.
        let f0 = 0.01 * 2f64.powf(rng.random_range(0..24) as f64 / 12.0);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let start = note * len;
        for t in 0..len {
            let env = (-(t as f64) / (0.4 * len as f64)).exp() * (1.0 - (-(t as f64) / 8.0).exp());
            let mut s = 0.0;
            for h in 1..=5 {
                let f = f0 * h as f64;
                if f < 0.45 {
                    s += (2.0 * PI * f * (start + t) as f64 + phase * h as f64).sin() / h as f64;
                }
            }
            v[start + t] += env * s;
        }
    }
    Signal::from_real(Shape::D1(n), &v).expect("power-of-two grid")
}

/// Filled square of side `side` centered on an `n x n` grid (value 1 on a
/// zero background). Point symmetric about the grid center.
pub fn centered_square(n: usize, side: usize) -> Signal {
    let lo = (n - side) / 2;
    let mut v = vec![0.0; n * n];
    for r in lo..lo + side {
        for c in lo..lo + side {
            v[r * n + c] = 1.0;
        }
    }
    Signal::from_real(Shape::D2(n, n), &v).expect("power-of-two grid")
}

/// Isolated unit spikes at `count` random positions.
pub fn sparse_spikes(shape: Shape, count: usize, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; shape.len()];
    for _ in 0..count {
        v[rng.random_range(0..shape.len())] = 1.0;
    }
    Signal::from_real(shape, &v).expect("valid grid")
}

/// Zero-mean Gaussian white noise with standard deviation `sigma`.
pub fn white_noise(shape: Shape, sigma: f64, rng: &mut impl Rng) -> Signal {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let v: Vec<f64> = (0..shape.len()).map(|_| normal.sample(rng)).collect();
    Signal::from_real(shape, &v).expect("valid grid")
}

type Stroke = Vec<(f64, f64)>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from_deg: f64, to_deg: f64) -> Stroke {
    let steps = 24;
    (0..=steps)
        .map(|i| {
            let t = (from_deg + (to_deg - from_deg) * i as f64 / steps as f64).to_radians();
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

/// Stroke skeleton of digit `d` in unit coordinates `(x, y)`, `y` pointing down.
fn digit_strokes(d: usize) -> Vec<Stroke> {
    match d {
        0 => vec![arc(0.5, 0.5, 0.28, 0.38, 0.0, 360.0)],
        1 => vec![vec![(0.36, 0.26), (0.52, 0.12), (0.52, 0.88)]],
        2 => {
            let mut top = arc(0.5, 0.32, 0.22, 0.2, 180.0, 380.0);
            top.extend([(0.24, 0.88), (0.78, 0.88)]);
            vec![top]
        }
        3 => vec![arc(0.48, 0.31, 0.2, 0.19, 200.0, 450.0), arc(0.48, 0.69, 0.22, 0.2, 270.0, 520.0)],
        4 => vec![vec![(0.64, 0.12), (0.2, 0.62), (0.82, 0.62)], vec![(0.64, 0.12), (0.64, 0.88)]],
        5 => vec![
            vec![(0.74, 0.13), (0.32, 0.13), (0.3, 0.46)],
            arc(0.48, 0.66, 0.23, 0.21, 220.0, 520.0),
        ],
        6 => vec![
            vec![(0.68, 0.12), (0.45, 0.3), (0.32, 0.55), (0.31, 0.68)],
            arc(0.5, 0.67, 0.19, 0.2, 0.0, 360.0),
        ],
        7 => vec![vec![(0.22, 0.13), (0.78, 0.13), (0.42, 0.88)]],
        8 => vec![arc(0.5, 0.3, 0.18, 0.17, 0.0, 360.0), arc(0.5, 0.68, 0.22, 0.2, 0.0, 360.0)],
        9 => vec![
            arc(0.5, 0.33, 0.19, 0.2, 0.0, 360.0),
            vec![(0.69, 0.35), (0.66, 0.6), (0.55, 0.88)],
        ],
        _ => panic!("digit {d} out of range"),
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Random shape variation of one rendered digit.
#[derive(Clone, Copy, Debug)]
struct Style {
    rotation: f64,
    scale: f64,
    shear: f64,
    shift: (f64, f64),
    thickness: f64,
}

fn render_digit(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const CANVAS: usize = 28;
    const BOX: f64 = 20.0;
    let style = Style {
        rotation: rng.random_range(-0.25..0.25),
        scale: rng.random_range(0.85..1.12),
        shear: rng.random_range(-0.25..0.25),
        shift: (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)),
        thickness: rng.random_range(1.3..2.4),
    };
    let jitter = Normal::new(0.0, 0.045).expect("finite sigma");
    let center = CANVAS as f64 / 2.0;
    let (s, c) = style.rotation.sin_cos();
    let strokes: Vec<Stroke> = digit_strokes(d)
        .into_iter()
        .map(|stroke| {
            // One jitter offset per control point, then the global affine map.
            stroke
                .into_iter()
                .map(|(x, y)| {
                    let x = (x + jitter.sample(rng) - 0.5) * BOX * style.scale;
                    let y = (y + jitter.sample(rng) - 0.5) * BOX * style.scale;
                    let x = x + style.shear * y;
                    (center + c * x - s * y + style.shift.0, center + s * x + c * y + style.shift.1)
                })
                .collect()
        })
        .collect();
    let half = style.thickness / 2.0;
    let mut img = vec![0.0; CANVAS * CANVAS];
    for r in 0..CANVAS {
        for col in 0..CANVAS {
            let p = (col as f64 + 0.5, r as f64 + 0.5);
            let d = strokes
                .iter()
                .flat_map(|st| st.windows(2).map(move |w| segment_distance(p, w[0], w[1])))
                .fold(f64::INFINITY, f64::min);
            img[r * CANVAS + col] = (half + 0.5 - d).clamp(0.0, 1.0);
        }
    }
    img
}

/// `count` digits with balanced labels `0..=9`, each a 28x28 rendering
/// zero-padded to 32x32 with intensities in `[0, 1]`.
pub fn digits(count: usize, seed: u64) -> (Vec<Signal>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let d = i % 10;
        let small = render_digit(d, &mut rng);
        let mut v = vec![0.0; 32 * 32];
        for r in 0..28 {
            v[(r + 2) * 32 + 2..(r + 2) * 32 + 30].copy_from_slice(&small[r * 28..(r + 1) * 28]);
        }
        images.push(Signal::from_real(Shape::D2(32, 32), &v).expect("32x32 grid"));
        labels.push(d);
    }
    (images, labels)
}
