//! Eigenvalue localization by the argument principle and the contour families
//! γ_n (circles around eigenvalue pairs) and Γ_m (rectangles around windows).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryMatrixPair, UnperturbedSpectrum};
use crate::error::{DiracError, Result};
use crate::mat2::{C64, I, ZERO};
use crate::ode::DiracOperator;
use crate::potentials::boundary_twist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Contour {
    Circle {
        center: C64,
        radius: f64,
    },
    Rectangle {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
    },
}

impl Contour {
    pub fn circle(center: C64, radius: f64) -> Contour {
        Contour::Circle { center, radius }
    }

    pub fn rectangle(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Contour {
        Contour::Rectangle {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Contour::Circle { radius, .. } => 2.0 * PI * radius,
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => 2.0 * ((re_max - re_min) + (im_max - im_min)),
        }
    }

    /// Point at parameter s ∈ [0, 1), traversed counterclockwise.
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            Contour::Circle { center, radius } => center + (I * (2.0 * PI * s)).exp() * radius,
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let w = re_max - re_min;
                let h = im_max - im_min;
                let mut t = s.rem_euclid(1.0) * 2.0 * (w + h);
                if t < w {
                    return C64::new(re_min + t, im_min);
                }
                t -= w;
                if t < h {
                    return C64::new(re_max, im_min + t);
                }
                t -= h;
                if t < w {
                    return C64::new(re_max - t, im_max);
                }
                t -= w;
                C64::new(re_min, im_max - t)
            }
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Contour::Circle { center, radius } => (z - center).norm() < radius,
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => z.re > re_min && z.re < re_max && z.im > im_min && z.im < im_max,
        }
    }

    /// Distance from z to the contour itself.
    pub fn boundary_distance(&self, z: C64) -> f64 {
        match *self {
            Contour::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            Contour::Rectangle {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let dx = (z.re - re_min).min(re_max - z.re);
                let dy = (z.im - im_min).min(im_max - z.im);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    let ox = (re_min - z.re).max(z.re - re_max).max(0.0);
                    let oy = (im_min - z.im).max(z.im - im_max).max(0.0);
                    ox.hypot(oy)
                }
            }
        }
    }

    pub fn nodes(&self, count: usize) -> Vec<C64> {
        (0..count)
            .map(|j| self.point(j as f64 / count as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindingOptions {
    pub nodes_per_unit: f64,
    pub min_nodes: usize,
    pub max_doublings: u32,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            nodes_per_unit: 64.0,
            min_nodes: 32,
            max_doublings: 5,
        }
    }
}

/// Samples of a holomorphic function around a contour with its continuous logarithm.
#[derive(Debug, Clone)]
pub struct ContourTrace {
    pub nodes: Vec<C64>,
    pub values: Vec<C64>,
    /// log f along the contour with the argument unwrapped continuously.
    pub log: Vec<C64>,
    pub winding: i64,
}

fn eval_all<F>(f: &F, zs: &[C64]) -> Result<Vec<C64>>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    zs.par_iter().map(|&z| f(z)).collect()
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Tracks arg f around the contour, doubling the node count while any step
/// between neighbouring nodes exceeds π/2.
pub fn trace_contour<F>(f: &F, contour: &Contour, opts: &WindingOptions) -> Result<ContourTrace>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let mut count = ((contour.length() * opts.nodes_per_unit).ceil() as usize).max(opts.min_nodes);
    let mut nodes = contour.nodes(count);
    let mut values = eval_all(f, &nodes)?;
    for attempt in 0..=opts.max_doublings {
        if let Some(z) = nodes.iter().zip(&values).find(|(_, v)| v.norm() == 0.0 || !v.norm().is_finite()) {
            return Err(DiracError::ContourValidation(format!(
                "function vanishes or is not finite at {} on {contour:?}",
                z.0
            )));
        }
        let args: Vec<f64> = values.iter().map(|v| v.arg()).collect();
        let mut steps = Vec::with_capacity(count);
        let mut ok = true;
        for j in 0..count {
            let d = wrap(args[(j + 1) % count] - args[j]);
            if d.abs() > PI / 2.0 {
                ok = false;
                break;
            }
            steps.push(d);
        }
        if ok {
            let total: f64 = steps.iter().sum();
            let winding = (total / (2.0 * PI)).round();
            if (total / (2.0 * PI) - winding).abs() > 1e-6 {
                return Err(DiracError::WindingFailed {
                    contour: format!("{contour:?}"),
                });
            }
            let mut log = Vec::with_capacity(count);
            let mut arg = args[0];
            for (j, v) in values.iter().enumerate() {
                if j > 0 {
                    arg += steps[j - 1];
                }
                log.push(C64::new(v.norm().ln(), arg));
            }
            return Ok(ContourTrace {
                nodes,
                values,
                log,
                winding: winding as i64,
            });
        }
        if attempt == opts.max_doublings {
            break;
        }
        // Insert midpoints (in parameter) between existing nodes.
        let mids: Vec<C64> = (0..count)
            .map(|j| contour.point((2 * j + 1) as f64 / (2 * count) as f64))
            .collect();
        let mid_values = eval_all(f, &mids)?;
        let mut n2 = Vec::with_capacity(2 * count);
        let mut v2 = Vec::with_capacity(2 * count);
        for j in 0..count {
            n2.push(nodes[j]);
            n2.push(mids[j]);
            v2.push(values[j]);
            v2.push(mid_values[j]);
        }
        nodes = n2;
        values = v2;
        count *= 2;
    }
    Err(DiracError::WindingFailed {
        contour: format!("{contour:?}: argument steps stay above π/2 after {} doublings; move the contour away from zeros", opts.max_doublings),
    })
}

pub fn winding_number<F>(f: &F, contour: &Contour, opts: &WindingOptions) -> Result<i64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    Ok(trace_contour(f, contour, opts)?.winding)
}

/// Number of zeros of Δ inside the contour.
pub fn winding_count(op: &DiracOperator, contour: &Contour, opts: &WindingOptions) -> Result<i64> {
    winding_number(&|z| op.char_det(z), contour, opts)
}

/// Zeros inside a circle from its trace, by power sums of (λ − center).
///
/// Uses g = log f − N log(z − c), which is periodic and analytic on the circle,
/// so the trapezoid rule for the power sums converges geometrically.
pub fn circle_roots(trace: &ContourTrace, center: C64) -> Result<Vec<C64>> {
    let n = trace.winding;
    let k = trace.nodes.len() as f64;
    let sums: Vec<C64> = (1..=n.max(0))
        .map(|p| {
            let mut acc = ZERO;
            let mut prev_theta = None::<f64>;
            let mut theta_run = 0.0;
            for (z, l) in trace.nodes.iter().zip(&trace.log) {
                let w = *z - center;
                let th = w.arg();
                theta_run = match prev_theta {
                    None => th,
                    Some(pt) => theta_run + wrap(th - pt),
                };
                prev_theta = Some(th);
                let g = *l - C64::new(n as f64 * w.norm().ln(), n as f64 * theta_run);
                acc += w.powi(p as i32) * g;
            }
            acc * (-(p as f64) / k)
        })
        .collect();
    let roots = match n {
        0 => vec![],
        1 => vec![center + sums[0]],
        2 => {
            let (s1, s2) = (sums[0], sums[1]);
            let disc = (s2 * 2.0 - s1 * s1).sqrt() * 0.5;
            vec![center + s1 * 0.5 - disc, center + s1 * 0.5 + disc]
        }
        _ => {
            return Err(DiracError::ContourValidation(format!(
                "{n} zeros inside one circle; subdivide"
            )))
        }
    };
    Ok(roots)
}

/// Newton iteration on Δ with a central-difference derivative.
/// Returns the root and the number of iterations used.
pub fn newton(op: &DiracOperator, seed: C64, max_iter: usize) -> Result<(C64, usize)> {
    newton_deflated(op, seed, &[], max_iter)
}

fn newton_deflated(op: &DiracOperator, seed: C64, known: &[C64], max_iter: usize) -> Result<(C64, usize)> {
    let f = |z: C64| -> Result<C64> {
        let mut v = op.char_det(z)?;
        for r in known {
            v /= z - *r;
        }
        Ok(v)
    };
    let mut z = seed;
    for it in 1..=max_iter {
        let h = 1e-5 * z.norm().max(1.0);
        let fz = f(z)?;
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 {
            break;
        }
        let step = fz / d;
        z -= step;
        if step.norm() <= 1e-13 * z.norm().max(1.0) {
            return Ok((z, it));
        }
    }
    Err(DiracError::NotAnEigenvalue {
        lambda: z,
        residual: op.char_det(z).map(|v| v.norm()).unwrap_or(f64::NAN),
        tolerance: 1e-13,
    })
}

/// Pairs whose computed roots are closer than this are reported as one double eigenvalue.
pub const MULTIPLICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizeOptions {
    /// Margin δ between contours and eigenvalues.
    pub delta: f64,
    pub winding: WindingOptions,
    pub newton_iterations: usize,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            delta: 0.25,
            winding: WindingOptions::default(),
            newton_iterations: 20,
        }
    }
}

/// Eigenvalues λ_n for n ∈ [−2·m_max, 2·m_max+1], paired with the eigenvalues
/// λ_n⁰ of the comparison operator (the free operator when P has zero diagonal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenvalueList {
    pub m_max: usize,
    values: Vec<C64>,
    reference: Vec<C64>,
    multiplicity: Vec<u8>,
    /// N₀: pairs (λ_{2k}, λ_{2k+1}) with |k| ≥ N₀ were separated by their own
    /// circle; the rest were found inside one block rectangle.
    pub tail_start: usize,
    /// Spectral shift γ = (1/2π)∫(p₁ + p₄).
    pub shift: C64,
    pub diagnostics: Vec<String>,
}

impl EigenvalueList {
    pub fn first_index(&self) -> i64 {
        -2 * self.m_max as i64
    }

    pub fn last_index(&self) -> i64 {
        2 * self.m_max as i64 + 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.first_index()..=self.last_index()
    }

    fn slot(&self, n: i64) -> usize {
        assert!(self.indices().contains(&n), "index {n} outside the localized window");
        (n - self.first_index()) as usize
    }

    pub fn get(&self, n: i64) -> C64 {
        self.values[self.slot(n)]
    }

    pub fn reference(&self, n: i64) -> C64 {
        self.reference[self.slot(n)]
    }

    pub fn multiplicity(&self, n: i64) -> u8 {
        self.multiplicity[self.slot(n)]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// max |λ_n − λ_n⁰| over lo ≤ |n| ≤ hi.
    pub fn max_deviation(&self, lo: i64, hi: i64) -> f64 {
        self.indices()
            .filter(|n| (lo..=hi).contains(&n.abs()))
            .map(|n| (self.get(n) - self.reference(n)).norm())
            .fold(0.0, f64::max)
    }
}

/// Seeds for the perturbed eigenvalues: γ + λ_n⁰(Ũ), the exact spectrum of the
/// diagonal comparison operator.
pub fn reference_spectrum(op: &DiracOperator) -> Result<(UnperturbedSpectrum, C64, BoundaryMatrixPair)> {
    let mesh = op.mesh();
    let p = op.potential();
    let gamma = (mesh.integrate_fn(p.p1()) + mesh.integrate_fn(p.p4())) / (2.0 * PI);
    let twisted = op.form().with_scaled_d(boundary_twist(p, mesh));
    Ok((twisted.unperturbed_spectrum()?, gamma, twisted))
}

/// Circle for a pair of points given the other points that must stay outside:
/// radius max(spread/2 + δ, d/2) with d the distance from the centre to the nearest
/// other point; `None` if that radius comes within δ of an outside point.
pub fn pair_circle(a: C64, b: C64, others: impl IntoIterator<Item = C64>, delta: f64) -> Option<Contour> {
    let center = (a + b) * 0.5;
    let spread = (a - b).norm();
    let near = others
        .into_iter()
        .map(|z| (z - center).norm())
        .fold(f64::INFINITY, f64::min);
    let radius = (0.5 * spread + delta).max(0.5 * near);
    if radius.is_finite() && radius <= near - delta {
        Some(Contour::circle(center, radius))
    } else if !near.is_finite() {
        Some(Contour::circle(center, 0.5 * spread + delta))
    } else {
        None
    }
}

struct PairResult {
    roots: Option<[C64; 2]>,
    note: Option<String>,
}

fn polish(op: &DiracOperator, roots: Vec<C64>, iters: usize) -> Vec<C64> {
    if roots.len() == 2 && (roots[0] - roots[1]).norm() < MULTIPLICITY_TOL {
        let m = (roots[0] + roots[1]) * 0.5;
        return vec![m, m];
    }
    let polished: Vec<C64> = roots
        .iter()
        .map(|&r| match newton(op, r, iters) {
            Ok((z, _)) if (z - r).norm() < 1e-4 => z,
            _ => r,
        })
        .collect();
    if polished.len() == 2 && (polished[0] - polished[1]).norm() < MULTIPLICITY_TOL {
        // Newton collapsed two distinct estimates onto one root; keep the estimates.
        return roots;
    }
    polished
}

fn match_pair(roots: &[C64], s0: C64, s1: C64) -> [C64; 2] {
    let direct = (roots[0] - s0).norm() + (roots[1] - s1).norm();
    let swapped = (roots[1] - s0).norm() + (roots[0] - s1).norm();
    if direct <= swapped {
        [roots[0], roots[1]]
    } else {
        [roots[1], roots[0]]
    }
}

fn localize_pair(op: &DiracOperator, seeds: &[C64], k_slot: usize, opts: &LocalizeOptions) -> PairResult {
    let (s0, s1) = (seeds[2 * k_slot], seeds[2 * k_slot + 1]);
    let others = seeds
        .iter()
        .enumerate()
        .filter(|(j, _)| j / 2 != k_slot)
        .map(|(_, z)| *z);
    let Some(circle) = pair_circle(s0, s1, others, opts.delta) else {
        return PairResult {
            roots: None,
            note: Some("seed circle would capture a neighbour".into()),
        };
    };
    let Contour::Circle { center, .. } = circle else { unreachable!() };
    let f = |z: C64| op.char_det(z);
    match trace_contour(&f, &circle, &opts.winding) {
        Ok(trace) if trace.winding == 2 => match circle_roots(&trace, center) {
            Ok(roots) => {
                let roots = polish(op, roots, opts.newton_iterations);
                PairResult {
                    roots: Some(match_pair(&roots, s0, s1)),
                    note: None,
                }
            }
            Err(e) => PairResult {
                roots: None,
                note: Some(e.to_string()),
            },
        },
        Ok(trace) => PairResult {
            roots: None,
            note: Some(format!("winding {} around {circle:?}", trace.winding)),
        },
        Err(e) => PairResult {
            roots: None,
            note: Some(e.to_string()),
        },
    }
}

/// All zeros of Δ inside a rectangle holding `count` of them, by bisection into
/// pieces small enough for a circumscribed circle to isolate at most two.
fn roots_in_rect(op: &DiracOperator, rect: Contour, count: i64, opts: &LocalizeOptions, depth: usize) -> Result<Vec<C64>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let Contour::Rectangle {
        re_min,
        re_max,
        im_min,
        im_max,
    } = rect
    else {
        unreachable!()
    };
    let f = |z: C64| op.char_det(z);
    let (w, h) = (re_max - re_min, im_max - im_min);
    let diameter = w.hypot(h);
    if count <= 2 && diameter <= 1.0 {
        let center = C64::new(re_min + 0.5 * w, im_min + 0.5 * h);
        let circle = Contour::circle(center, 0.5 * diameter * 1.02);
        if let Ok(trace) = trace_contour(&f, &circle, &opts.winding) {
            if trace.winding == count {
                let roots = circle_roots(&trace, center)?;
                if roots.iter().all(|&r| rect.contains(r) || rect.boundary_distance(r) < 1e-9) {
                    return Ok(polish(op, roots, opts.newton_iterations));
                }
            }
        }
    }
    if depth > 40 {
        return Err(DiracError::WindingFailed {
            contour: format!("{rect:?}: bisection depth exhausted"),
        });
    }
    for frac in [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65] {
        let (first, second) = if w >= h {
            let x = re_min + frac * w;
            (
                Contour::rectangle(re_min, x, im_min, im_max),
                Contour::rectangle(x, re_max, im_min, im_max),
            )
        } else {
            let y = im_min + frac * h;
            (
                Contour::rectangle(re_min, re_max, im_min, y),
                Contour::rectangle(re_min, re_max, y, im_max),
            )
        };
        let Ok(c1) = winding_number(&f, &first, &opts.winding) else {
            continue;
        };
        if !(0..=count).contains(&c1) {
            continue;
        }
        let mut roots = roots_in_rect(op, first, c1, opts, depth + 1)?;
        roots.extend(roots_in_rect(op, second, count - c1, opts, depth + 1)?);
        return Ok(roots);
    }
    Err(DiracError::WindingFailed {
        contour: format!("{rect:?}: no admissible split line"),
    })
}

/// Localizes λ_n for n ∈ [−2·m_max, 2·m_max+1] starting from the comparison spectrum.
pub fn localize(op: &DiracOperator, m_max: usize, opts: &LocalizeOptions) -> Result<EigenvalueList> {
    let (spec0, gamma, _) = reference_spectrum(op)?;
    let m = m_max as i64;
    // One extra pair on each side provides outside neighbours for the window.
    let first = -2 * m - 2;
    let last = 2 * m + 3;
    let seeds: Vec<C64> = (first..=last).map(|n| spec0.eigenvalue(n) + gamma).collect();
    let pairs = seeds.len() / 2;
    let results: Vec<PairResult> = (1..pairs - 1)
        .into_par_iter()
        .map(|slot| localize_pair(op, &seeds, slot, opts))
        .collect();
    // Pair slot s covers n = first + 2s, first + 2s + 1; pair index k = s − m − 1.
    let k_of = |slot: usize| slot as i64 - m - 1;
    let mut diagnostics = Vec::new();
    for (j, r) in results.iter().enumerate() {
        if let Some(note) = &r.note {
            diagnostics.push(format!("pair k={}: {note}", k_of(j + 1)));
        }
    }
    let passes = |k: i64| results[(k + m) as usize].roots.is_some();
    let mut tail_start = 0i64;
    for k in (0..=m).rev() {
        if !(passes(k) && passes(-k)) {
            tail_start = k + 1;
            break;
        }
    }

    let mut values = vec![ZERO; (4 * m + 2) as usize];
    let mut multiplicity = vec![1u8; values.len()];
    let idx = |n: i64| (n + 2 * m) as usize;
    for k in -m..=m {
        if k.abs() >= tail_start {
            let roots = results[(k + m) as usize].roots.expect("tail pair passed");
            values[idx(2 * k)] = roots[0];
            values[idx(2 * k + 1)] = roots[1];
        }
    }

    if tail_start > 0 {
        let kb = tail_start;
        let block_seeds: Vec<C64> = (-2 * kb + 2..2 * kb).map(|n| seeds[(n - first) as usize]).collect();
        let outer_left: Vec<C64> = {
            let n0 = -2 * kb;
            let mut v = vec![seeds[(n0 - first) as usize], seeds[(n0 + 1 - first) as usize]];
            if n0 >= -2 * m {
                v.extend([values[idx(n0)], values[idx(n0 + 1)]]);
            }
            v
        };
        let outer_right: Vec<C64> = {
            let n0 = 2 * kb;
            let mut v = vec![seeds[(n0 - first) as usize], seeds[(n0 + 1 - first) as usize]];
            if n0 < 2 * m + 1 {
                v.extend([values[idx(n0)], values[idx(n0 + 1)]]);
            }
            v
        };
        let in_min = block_seeds.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let in_max = block_seeds.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let out_left = outer_left.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let out_right = outer_right.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let re_min = 0.5 * (in_min + out_left);
        let re_max = 0.5 * (in_max + out_right);
        let expected = 4 * kb - 2;
        let mut hh = block_seeds.iter().map(|z| z.im.abs()).fold(0.0, f64::max) + 0.5;
        hh = hh.max(1.0);
        let mut rect = Contour::rectangle(re_min, re_max, -hh, hh);
        let mut count = winding_count(op, &rect, &opts.winding)?;
        let mut tries = 0;
        while count < expected && tries < 3 && 2.0 * hh < op.lambda_cap() {
            hh *= 2.0;
            rect = Contour::rectangle(re_min, re_max, -hh, hh);
            count = winding_count(op, &rect, &opts.winding)?;
            tries += 1;
        }
        if count != expected {
            return Err(DiracError::ContourValidation(format!(
                "block {rect:?} holds {count} zeros, expected {expected}; diagnostics: {}",
                diagnostics.join("; ")
            )));
        }
        let mut roots = roots_in_rect(op, rect, count, opts, 0)?;
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        for (j, n) in (-2 * kb + 2..2 * kb).enumerate() {
            values[idx(n)] = roots[j];
        }
    }

    for n in -2 * m..=2 * m + 1 {
        let z = values[idx(n)];
        let twin = [n - 1, n + 1]
            .into_iter()
            .filter(|j| (-2 * m..=2 * m + 1).contains(j))
            .any(|j| (values[idx(j)] - z).norm() < MULTIPLICITY_TOL);
        if twin {
            multiplicity[idx(n)] = 2;
        }
    }

    Ok(EigenvalueList {
        m_max,
        reference: (-2 * m..=2 * m + 1).map(|n| spec0.eigenvalue(n) + gamma).collect(),
        values,
        multiplicity,
        tail_start: tail_start as usize,
        shift: gamma,
        diagnostics,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourFamily {
    pub delta: f64,
    /// γ_k around the pair (λ_{2k}, λ_{2k+1}) for every separated pair.
    pub circles: Vec<(i64, Contour)>,
    /// Γ_m around {λ_n, λ_n⁰ : n ∈ [−2m, 2m+1]}.
    pub rectangles: Vec<(usize, Contour)>,
}

/// Γ_m: vertical sides midway between the window's extreme real parts and those of
/// the nearest outside indices (perturbed and reference); half-height
/// max(1, max |Im| + 0.5) over the window.
pub fn window_rectangle(eigs: &EigenvalueList, m: usize) -> Result<Contour> {
    if m >= eigs.m_max {
        return Err(DiracError::WindowTooSmall {
            requested: m + 1,
            available: eigs.m_max,
        });
    }
    let m = m as i64;
    let both = |n: i64| [eigs.get(n), eigs.reference(n)];
    let window: Vec<C64> = (-2 * m..=2 * m + 1).flat_map(both).collect();
    let left: Vec<C64> = [-2 * m - 2, -2 * m - 1].into_iter().flat_map(both).collect();
    let right: Vec<C64> = [2 * m + 2, 2 * m + 3].into_iter().flat_map(both).collect();
    let in_min = window.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let in_max = window.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let out_left = left.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let out_right = right.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if out_left >= in_min || out_right <= in_max {
        return Err(DiracError::ContourValidation(format!(
            "window m={m} is not separated by a vertical line from its neighbours"
        )));
    }
    let hh = window.iter().map(|z| z.im.abs()).fold(0.0, f64::max) + 0.5;
    let hh = hh.max(1.0);
    Ok(Contour::rectangle(
        0.5 * (in_min + out_left),
        0.5 * (in_max + out_right),
        -hh,
        hh,
    ))
}

/// Builds γ_k for the separated pairs and Γ_m for each requested m.
pub fn contour_family(eigs: &EigenvalueList, ms: &[usize], delta: f64) -> Result<ContourFamily> {
    let m = eigs.m_max as i64;
    let n0 = eigs.tail_start as i64;
    let mut circles = Vec::new();
    for k in -m..=m {
        if k.abs() < n0 {
            continue;
        }
        let (a, b) = (eigs.get(2 * k), eigs.get(2 * k + 1));
        let others = eigs
            .indices()
            .filter(|&n| n != 2 * k && n != 2 * k + 1)
            .map(|n| eigs.get(n));
        let circle = pair_circle(a, b, others, delta).ok_or_else(|| {
            DiracError::ContourValidation(format!(
                "circle around pair k={k} ({a}, {b}) cannot keep δ={delta} from the other eigenvalues"
            ))
        })?;
        circles.push((k, circle));
    }
    let rectangles = ms
        .iter()
        .map(|&mm| Ok((mm, window_rectangle(eigs, mm)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourFamily {
        delta,
        circles,
        rectangles,
    })
}

impl ContourFamily {
    /// Winding checks: two zeros of Δ inside each γ_k; 4m+2 zeros of Δ and of the
    /// comparison determinant inside each Γ_m.
    pub fn validate(&self, op: &DiracOperator, opts: &WindingOptions) -> Result<()> {
        let (_, gamma, twisted) = reference_spectrum(op)?;
        self.circles.par_iter().try_for_each(|(k, c)| {
            let w = winding_count(op, c, opts)?;
            if w != 2 {
                return Err(DiracError::ContourValidation(format!(
                    "γ_{k} = {c:?} holds {w} zeros instead of 2"
                )));
            }
            Ok(())
        })?;
        for (m, rect) in &self.rectangles {
            let expected = 4 * *m as i64 + 2;
            let w = winding_count(op, rect, opts)?;
            let w0 = winding_number(&|z: C64| Ok(twisted.delta0(z - gamma)), rect, opts)?;
            if w != expected || w0 != expected {
                return Err(DiracError::ContourValidation(format!(
                    "Γ_{m} = {rect:?} holds {w} perturbed and {w0} reference zeros, expected {expected}"
                )));
            }
        }
        Ok(())
    }
}
