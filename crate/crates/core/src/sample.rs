//! Sampled paths `mu(t) = mu((0, t])` and dyadic fields `mu(x) = mu(prod [0, x_i])`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmError};
use crate::model::{ModelKind, ModelSpec, SamplingConfig};
use crate::rademacher::realize_rademacher;
use crate::rng::RngStream;

/// `n + 1` equispaced points `0 = t_0 < ... < t_n = T`.
pub fn uniform_grid(horizon: f64, intervals: usize) -> Vec<f64> {
    let n = intervals as f64;
    (0..=intervals).map(|i| horizon * (i as f64) / n).collect()
}

/// Values of `mu(t)` on a closed equispaced grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    model: Option<ModelSpec>,
    stream: Option<RngStream>,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl PathSample {
    /// Wraps externally produced values. The grid is rebuilt as equispaced on
    /// `[0, horizon]`; `values[0]` must be zero.
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(SmError::InvalidInput(format!(
                "a path needs at least 3 grid points, got {}",
                values.len()
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SmError::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        if values[0] != 0.0 {
            return Err(SmError::InvalidInput(format!(
                "path must start at zero, got {}",
                values[0]
            )));
        }
        Ok(Self {
            model: None,
            stream: None,
            grid: uniform_grid(horizon, values.len() - 1),
            values,
        })
    }

    pub fn model(&self) -> Option<&ModelSpec> {
        self.model.as_ref()
    }

    pub fn stream(&self) -> Option<RngStream> {
        self.stream
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn step(&self) -> f64 {
        self.horizon() / self.intervals() as f64
    }

    /// `mu((t_j, t_{j+1}])` for every grid cell.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Piecewise-linear interpolation of the path; `t` is clamped to `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.intervals();
        let pos = (t / self.step()).clamp(0.0, n as f64);
        let j = (pos.floor() as usize).min(n - 1);
        let frac = pos - j as f64;
        if frac == 0.0 {
            return self.values[j];
        }
        self.values[j] + frac * (self.values[j + 1] - self.values[j])
    }

    /// Keeps every `factor`-th grid point.
    pub fn coarsen(&self, factor: usize) -> Result<PathSample> {
        if factor == 0 || self.intervals() % factor != 0 || self.intervals() / factor < 2 {
            return Err(SmError::Domain(format!(
                "cannot coarsen {} intervals by {factor}",
                self.intervals()
            )));
        }
        let values: Vec<f64> = self.values.iter().step_by(factor).copied().collect();
        Ok(PathSample {
            model: self.model.clone(),
            stream: self.stream,
            grid: uniform_grid(self.horizon(), values.len() - 1),
            values,
        })
    }

    /// `mu(t) - (t / T) mu(T)`: the path of the measure with zero total mass.
    pub fn zero_total_mass(&self) -> PathSample {
        let total = *self.values.last().expect("non-empty path");
        let horizon = self.horizon();
        let values = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(t, v)| v - t / horizon * total)
            .collect();
        PathSample {
            model: self.model.clone(),
            stream: self.stream,
            grid: self.grid.clone(),
            values,
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> PathSample {
        PathSample {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Dense fBm sampler: factors the covariance once, then draws any number of paths.
#[derive(Clone, Debug)]
pub struct FbmSampler {
    model: ModelSpec,
    intervals: usize,
    factor: DMatrix<f64>,
}

impl FbmSampler {
    pub fn new(model: &ModelSpec, intervals: usize, config: &SamplingConfig) -> Result<Self> {
        let hurst = model
            .hurst()
            .filter(|_| model.kind() == ModelKind::Fbm)
            .ok_or_else(|| SmError::InvalidModel(format!("{} is not an fbm model", model.kind())))?;
        if intervals < 2 {
            return Err(SmError::Domain(format!("grid size must be at least 2, got {intervals}")));
        }
        if intervals + 1 > config.fbm_max_points {
            return Err(SmError::Resource(format!(
                "fbm grid of {} points exceeds the dense factorization cap of {}",
                intervals + 1,
                config.fbm_max_points
            )));
        }
        let grid = uniform_grid(model.horizon(), intervals);
        let times = &grid[1..];
        let two_h = 2.0 * hurst;
        let cov = DMatrix::from_fn(intervals, intervals, |i, j| {
            let (s, t) = (times[i], times[j]);
            0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
        });
        let chol = cov.cholesky().ok_or_else(|| {
            SmError::Resource(format!(
                "fbm covariance for H = {hurst} on {intervals} intervals is numerically singular"
            ))
        })?;
        Ok(Self {
            model: model.clone(),
            intervals,
            factor: chol.unpack(),
        })
    }

    pub fn sample(&self, stream: RngStream) -> PathSample {
        let mut rng = stream.rng();
        let z: Vec<f64> = (0..self.intervals).map(|_| rng.sample(StandardNormal)).collect();
        let mut values = Vec::with_capacity(self.intervals + 1);
        values.push(0.0);
        for i in 0..self.intervals {
            let mut acc = 0.0;
            for (j, zj) in z.iter().enumerate().take(i + 1) {
                acc += self.factor[(i, j)] * zj;
            }
            values.push(acc);
        }
        PathSample {
            model: Some(self.model.clone()),
            stream: Some(stream),
            grid: uniform_grid(self.model.horizon(), self.intervals),
            values,
        }
    }
}

/// Samples `mu(t_i)` on `grid_size` equispaced intervals of `(0, T]`.
pub fn sample_path(model: &ModelSpec, stream: RngStream, grid_size: usize) -> Result<PathSample> {
    sample_path_with(model, stream, grid_size, &SamplingConfig::default())
}

pub fn sample_path_with(
    model: &ModelSpec,
    stream: RngStream,
    grid_size: usize,
    config: &SamplingConfig,
) -> Result<PathSample> {
    if grid_size < 2 {
        return Err(SmError::Domain(format!("grid size must be at least 2, got {grid_size}")));
    }
    let horizon = model.horizon();
    let grid = uniform_grid(horizon, grid_size);
    let values = match model.kind() {
        ModelKind::DeterministicLebesgue => grid.clone(),
        ModelKind::RademacherSeries => {
            let series = realize_rademacher(model, stream)?.series().clone();
            grid.par_iter().map(|&t| series.cumulative(t)).collect()
        }
        ModelKind::Wiener => {
            let mut rng = stream.rng();
            let sd = (horizon / grid_size as f64).sqrt();
            let mut acc = 0.0;
            std::iter::once(0.0)
                .chain((0..grid_size).map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    acc += sd * z;
                    acc
                }))
                .collect()
        }
        ModelKind::Fbm => return Ok(FbmSampler::new(model, grid_size, config)?.sample(stream)),
        ModelKind::BrownianSheet2D => {
            return Err(SmError::InvalidModel(
                "the Brownian sheet is two-dimensional; use sample_field with d = 2".into(),
            ))
        }
    };
    Ok(PathSample {
        model: Some(model.clone()),
        stream: Some(stream),
        grid,
        values,
    })
}

/// Repeated draws of one model on one grid; the fBm covariance is factored
/// once, at construction.
#[derive(Clone, Debug)]
pub struct PathSampler {
    model: ModelSpec,
    grid_size: usize,
    config: SamplingConfig,
    fbm: Option<FbmSampler>,
}

impl PathSampler {
    pub fn new(model: &ModelSpec, grid_size: usize, config: &SamplingConfig) -> Result<Self> {
        if grid_size < 2 {
            return Err(SmError::Domain(format!("grid size must be at least 2, got {grid_size}")));
        }
        if model.kind().dimension() != 1 {
            return Err(SmError::InvalidModel(format!(
                "{} has no one-dimensional path",
                model.kind()
            )));
        }
        let fbm = match model.kind() {
            ModelKind::Fbm => Some(FbmSampler::new(model, grid_size, config)?),
            _ => None,
        };
        Ok(Self {
            model: model.clone(),
            grid_size,
            config: *config,
            fbm,
        })
    }

    pub fn sample(&self, stream: RngStream) -> Result<PathSample> {
        match &self.fbm {
            Some(f) => Ok(f.sample(stream)),
            None => sample_path_with(&self.model, stream, self.grid_size, &self.config),
        }
    }
}

/// Values of `mu(x)` on the dyadic grid `{k / 2^depth}^d` of the unit cube,
/// stored row-major (the last coordinate varies fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    model: Option<ModelSpec>,
    stream: Option<RngStream>,
    dim: usize,
    depth: u32,
    horizon: f64,
    values: Vec<f64>,
}

impl FieldSample {
    /// Wraps externally produced values on a `(2^depth + 1)^dim` grid.
    /// Values on the coordinate hyperplanes must be zero.
    pub fn from_values(dim: usize, depth: u32, horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(SmError::InvalidInput(format!("fields must be 1- or 2-dimensional, got {dim}")));
        }
        if depth > 30 {
            return Err(SmError::InvalidInput(format!("dyadic depth {depth} too large")));
        }
        let side = (1usize << depth) + 1;
        if values.len() != side.pow(dim as u32) {
            return Err(SmError::InvalidInput(format!(
                "expected {} values for a depth-{depth} {dim}-d field, got {}",
                side.pow(dim as u32),
                values.len()
            )));
        }
        let field = Self {
            model: None,
            stream: None,
            dim,
            depth,
            horizon,
            values,
        };
        let on_axes_nonzero = match dim {
            1 => field.values[0] != 0.0,
            _ => (0..side).any(|k| field.at2(0, k) != 0.0 || field.at2(k, 0) != 0.0),
        };
        if on_axes_nonzero {
            return Err(SmError::InvalidInput(
                "field must vanish where any coordinate is zero".into(),
            ));
        }
        Ok(field)
    }

    pub fn from_path(path: &PathSample) -> Result<Self> {
        let n = path.intervals();
        if !n.is_power_of_two() {
            return Err(SmError::InvalidInput(format!(
                "a dyadic field needs 2^N intervals, got {n}"
            )));
        }
        Ok(Self {
            model: path.model.clone(),
            stream: path.stream,
            dim: 1,
            depth: n.trailing_zeros(),
            horizon: path.horizon(),
            values: path.values.clone(),
        })
    }

    pub fn model(&self) -> Option<&ModelSpec> {
        self.model.as_ref()
    }

    pub fn stream(&self) -> Option<RngStream> {
        self.stream
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Points per axis, `2^depth + 1`.
    pub fn side(&self) -> usize {
        (1usize << self.depth) + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at1(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn at2(&self, k1: usize, k2: usize) -> f64 {
        self.values[k1 * self.side() + k2]
    }

    /// Rectangle increment of `mu` over the grid cell with lower corner `(k1, k2)`.
    pub fn cell_increment(&self, k1: usize, k2: usize) -> f64 {
        self.at2(k1 + 1, k2 + 1) - self.at2(k1, k2 + 1) - self.at2(k1 + 1, k2) + self.at2(k1, k2)
    }

    pub fn scaled(&self, factor: f64) -> FieldSample {
        FieldSample {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Samples a `d`-dimensional field on the dyadic grid of depth `depth`.
pub fn sample_field(model: &ModelSpec, stream: RngStream, dim: usize, depth: u32) -> Result<FieldSample> {
    sample_field_with(model, stream, dim, depth, &SamplingConfig::default())
}

pub fn sample_field_with(
    model: &ModelSpec,
    stream: RngStream,
    dim: usize,
    depth: u32,
    config: &SamplingConfig,
) -> Result<FieldSample> {
    if dim != model.kind().dimension() {
        return Err(SmError::InvalidModel(format!(
            "{} model cannot be sampled as a {dim}-dimensional field",
            model.kind()
        )));
    }
    let cap = if dim == 1 { config.max_depth_1d } else { config.max_depth_2d };
    if depth > cap {
        return Err(SmError::Resource(format!(
            "dyadic depth {depth} exceeds the {dim}-d cap of {cap}"
        )));
    }
    if dim == 1 {
        let path = sample_path_with(model, stream, 1usize << depth, config)?;
        return FieldSample::from_path(&path);
    }
    let m = 1usize << depth;
    let side = m + 1;
    let sd = model.horizon() / m as f64;
    let mut rng = stream.rng();
    let mut values = vec![0.0; side * side];
    for i in 1..side {
        for j in 1..side {
            let z: f64 = rng.sample(StandardNormal);
            values[i * side + j] = values[(i - 1) * side + j] + values[i * side + j - 1]
                - values[(i - 1) * side + j - 1]
                + sd * z;
        }
    }
    Ok(FieldSample {
        model: Some(model.clone()),
        stream: Some(stream),
        dim: 2,
        depth,
        horizon: model.horizon(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn lebesgue_path_is_identity() {
        let m = ModelSpec::lebesgue(std::f64::consts::TAU).unwrap();
        let p = sample_path(&m, RngStream::new(3, 0), 64).unwrap();
        assert_eq!(p.values(), p.grid());
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.horizon(), std::f64::consts::TAU);
    }

    #[test]
    fn rademacher_path_matches_interval_measure() {
        let m = ModelSpec::rademacher(2.0, 30).unwrap();
        let s = RngStream::new(5, 1);
        let p = sample_path(&m, s, 16).unwrap();
        let r = realize_rademacher(&m, s).unwrap();
        for (t, v) in p.grid().iter().zip(p.values()) {
            assert!((r.interval_measure(0.0, *t).unwrap() - v).abs() < 1e-14);
        }
    }

    #[test]
    fn wiener_terminal_variance() {
        let m = ModelSpec::wiener(1.0).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|i| *sample_path(&m, RngStream::new(17, i), 8).unwrap().values().last().unwrap())
            .collect();
        let v = var(&xs);
        assert!((v - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn wiener_disjoint_increments_uncorrelated() {
        let m = ModelSpec::wiener(1.0).unwrap();
        let pairs: Vec<(f64, f64)> = (0..10_000)
            .map(|i| {
                let p = sample_path(&m, RngStream::new(23, i), 4).unwrap();
                let v = p.values();
                (v[1] - v[0], v[3] - v[2])
            })
            .collect();
        let n = pairs.len() as f64;
        let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let cov = pairs.iter().map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let corr = cov / (var(&a) * var(&b)).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr}");
    }

    #[test]
    fn fbm_increment_variance() {
        let m = ModelSpec::fbm(1.0, 0.7).unwrap();
        let sampler = FbmSampler::new(&m, 2, &SamplingConfig::default()).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|i| {
                let p = sampler.sample(RngStream::new(31, i));
                p.values()[2] - p.values()[1]
            })
            .collect();
        let expected = 0.5f64.powf(1.4);
        let v = var(&xs);
        assert!((v / expected - 1.0).abs() < 0.1, "variance {v} vs {expected}");
    }

    #[test]
    fn fbm_cap_enforced() {
        let m = ModelSpec::fbm(1.0, 0.7).unwrap();
        let err = sample_path(&m, RngStream::new(0, 0), 4097).unwrap_err();
        assert!(matches!(err, SmError::Resource(_)));
        let cfg = SamplingConfig {
            fbm_max_points: 9,
            ..Default::default()
        };
        assert!(sample_path_with(&m, RngStream::new(0, 0), 8, &cfg).is_ok());
        assert!(sample_path_with(&m, RngStream::new(0, 0), 9, &cfg).is_err());
    }

    #[test]
    fn grid_size_must_be_two() {
        let m = ModelSpec::wiener(1.0).unwrap();
        assert!(sample_path(&m, RngStream::new(0, 0), 1).is_err());
        assert!(sample_path(&m, RngStream::new(0, 0), 2).is_ok());
    }

    #[test]
    fn sheet_boundary_and_shape() {
        let m = ModelSpec::brownian_sheet(1.0).unwrap();
        let f = sample_field(&m, RngStream::new(1, 1), 2, 1).unwrap();
        assert_eq!(f.values().len(), 9);
        for k in 0..3 {
            assert_eq!(f.at2(0, k), 0.0);
            assert_eq!(f.at2(k, 0), 0.0);
        }
    }

    #[test]
    fn sheet_unit_variance() {
        let m = ModelSpec::brownian_sheet(1.0).unwrap();
        let xs: Vec<f64> = (0..10_000)
            .map(|i| sample_field(&m, RngStream::new(41, i), 2, 2).unwrap().at2(4, 4))
            .collect();
        let v = var(&xs);
        assert!((v - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn sheet_cell_increments_are_additive() {
        let m = ModelSpec::brownian_sheet(1.0).unwrap();
        let f = sample_field(&m, RngStream::new(2, 9), 2, 3).unwrap();
        // union of cells [1,5) x [2,7) against the rectangle increment of the union
        let mut sum = 0.0;
        for i in 1..5 {
            for j in 2..7 {
                sum += f.cell_increment(i, j);
            }
        }
        let rect = f.at2(5, 7) - f.at2(1, 7) - f.at2(5, 2) + f.at2(1, 2);
        assert!((sum - rect).abs() < 1e-12);
    }

    #[test]
    fn unsupported_dimension_pairs() {
        let w = ModelSpec::wiener(1.0).unwrap();
        let s = ModelSpec::brownian_sheet(1.0).unwrap();
        assert!(matches!(sample_field(&w, RngStream::new(0, 0), 2, 3), Err(SmError::InvalidModel(_))));
        assert!(matches!(sample_field(&s, RngStream::new(0, 0), 1, 3), Err(SmError::InvalidModel(_))));
        assert!(matches!(sample_path(&s, RngStream::new(0, 0), 8), Err(SmError::InvalidModel(_))));
        assert!(matches!(sample_field(&w, RngStream::new(0, 0), 1, 13), Err(SmError::Resource(_))));
        assert!(matches!(sample_field(&s, RngStream::new(0, 0), 2, 10), Err(SmError::Resource(_))));
    }

    #[test]
    fn one_d_field_matches_path() {
        let m = ModelSpec::wiener(1.0).unwrap();
        let s = RngStream::new(8, 2);
        let f = sample_field(&m, s, 1, 6).unwrap();
        let p = sample_path(&m, s, 64).unwrap();
        assert_eq!(f.values(), p.values());
    }

    #[test]
    fn sampling_is_reproducible() {
        for m in [
            ModelSpec::wiener(1.0).unwrap(),
            ModelSpec::fbm(1.0, 0.8).unwrap(),
            ModelSpec::rademacher(1.0, 100).unwrap(),
        ] {
            let a = sample_path(&m, RngStream::new(77, 3), 128).unwrap();
            let b = sample_path(&m, RngStream::new(77, 3), 128).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn coarsen_and_interpolate() {
        let m = ModelSpec::wiener(2.0).unwrap();
        let p = sample_path(&m, RngStream::new(1, 2), 64).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.intervals(), 16);
        assert_eq!(c.values()[3], p.values()[12]);
        assert_eq!(p.value_at(p.grid()[10]), p.values()[10]);
        let mid = 0.5 * (p.grid()[10] + p.grid()[11]);
        assert!((p.value_at(mid) - 0.5 * (p.values()[10] + p.values()[11])).abs() < 1e-15);
        assert!(p.coarsen(3).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn model_strategy() -> impl Strategy<Value = ModelSpec> {
            prop_oneof![
                (0.1f64..10.0).prop_map(|t| ModelSpec::lebesgue(t).unwrap()),
                (0.1f64..10.0).prop_map(|t| ModelSpec::wiener(t).unwrap()),
                (0.1f64..10.0, 1usize..64).prop_map(|(t, k)| ModelSpec::rademacher(t, k).unwrap()),
                (0.1f64..10.0, 0.55f64..0.95).prop_map(|(t, h)| ModelSpec::fbm(t, h).unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn paths_start_at_zero_and_reproduce(model in model_strategy(), seed in any::<u64>(), n in 2usize..300) {
                let s = RngStream::new(seed, 1);
                let a = sample_path(&model, s, n).unwrap();
                prop_assert_eq!(a.values().len(), n + 1);
                prop_assert_eq!(a.values()[0], 0.0);
                prop_assert!((a.grid()[n] - model.horizon()).abs() <= 1e-12 * model.horizon());
                prop_assert_eq!(&a, &sample_path(&model, s, n).unwrap());
            }
        }
    }
}
