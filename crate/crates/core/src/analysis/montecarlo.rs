//! Monte Carlo pole-accuracy study over random parameter draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::poles::{dominant_poles, paired_relative_errors};
use super::transfer::TransferModel;
use crate::error::{Error, Result};
use crate::sysmodel::ParameterPoint;

/// Independent normal variation per parameter, truncated at
/// `truncate` standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variation {
    pub sigma: Vec<f64>,
    pub truncate: f64,
}

impl Variation {
    /// `3σ` equal to `max` for every parameter.
    pub fn three_sigma(max: &[f64]) -> Self {
        Self {
            sigma: max.iter().map(|m| m / 3.0).collect(),
            truncate: 3.0,
        }
    }

    /// Deterministic draws, generated sequentially from one stream.
    pub fn draw(&self, n_samples: usize, seed: u64) -> Vec<ParameterPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        (0..n_samples)
            .map(|_| {
                ParameterPoint(
                    self.sigma
                        .iter()
                        .map(|&s| loop {
                            let z: f64 = unit.sample(&mut rng);
                            if z.abs() <= self.truncate {
                                break z * s;
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McSample {
    pub index: usize,
    pub p: ParameterPoint,
    /// Relative error per dominant pole, dominant first.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn linear(values: &[f64], bins: usize) -> Self {
        let max = values.iter().copied().fold(0.0f64, f64::max);
        let top = if max > 0.0 { max } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|i| top * i as f64 / bins as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = ((v / top) * bins as f64).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    pub pole_count: usize,
    pub samples: Vec<McSample>,
    pub skipped: Vec<usize>,
    pub max_error: f64,
    pub mean_error: f64,
    pub histogram: Histogram,
}

impl McResult {
    /// `sample,p...,pole,error` rows.
    pub fn to_csv(&self) -> String {
        let n_p = self.samples.first().map_or(0, |s| s.p.len());
        let mut out = String::from("sample");
        for i in 0..n_p {
            out += &format!(",p{}", i + 1);
        }
        out += ",pole,rel_error\n";
        for s in &self.samples {
            for (k, e) in s.errors.iter().enumerate() {
                out += &s.index.to_string();
                for v in s.p.values() {
                    out += &format!(",{v:e}");
                }
                out += &format!(",{},{e:e}\n", k + 1);
            }
        }
        out
    }
}

fn sample_errors<F, R>(full: &F, reduced: &R, p: &ParameterPoint, count: usize) -> Result<Vec<f64>>
where
    F: TransferModel + ?Sized,
    R: TransferModel + ?Sized,
{
    let f = dominant_poles(full, p, count)?;
    // Extra reduced poles give the pairing room to find the right partners.
    let r = dominant_poles(reduced, p, 2 * count)?;
    Ok(paired_relative_errors(&f.poles, &r.poles))
}

pub fn monte_carlo_poles<F, R>(
    full: &F,
    reduced: &R,
    variation: &Variation,
    n_samples: usize,
    pole_count: usize,
    seed: u64,
) -> Result<McResult>
where
    F: TransferModel + ?Sized,
    R: TransferModel + ?Sized,
{
    let points = variation.draw(n_samples, seed);
    let outcomes: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|p| sample_errors(full, reduced, p, pole_count))
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    let mut skipped = Vec::new();
    for (index, (p, out)) in points.into_iter().zip(outcomes).enumerate() {
        match out {
            Ok(errors) => samples.push(McSample { index, p, errors }),
            Err(e) if e.is_numerical() => skipped.push(index),
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() && n_samples > 0 {
        return Err(Error::InvalidSpec("every Monte Carlo sample was singular".into()));
    }
    let all: Vec<f64> = samples.iter().flat_map(|s| s.errors.iter().copied()).collect();
    let max_error = all.iter().copied().fold(0.0f64, f64::max);
    let mean_error = if all.is_empty() {
        0.0
    } else {
        all.iter().sum::<f64>() / all.len() as f64
    };
    Ok(McResult {
        pole_count,
        histogram: Histogram::linear(&all, 20),
        samples,
        skipped,
        max_error,
        mean_error,
    })
}
