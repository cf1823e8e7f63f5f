//! Persistent homology convolutions.
//!
//! An `N x N` image is covered by `M x M` windows whose top-left corners sit on
//! a stride-`c` lattice, `floor((N - M) / c) + 1` positions per axis starting
//! at 0. Each window gets its own filtered complex, diagram and persistence
//! image; the images are stacked in row-major window order into a
//! `(W, n, n)` tensor, which a kernel of per-window weights can contract to a
//! single grid.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{
    build_adjacency_complex_with, build_alpha, build_lower_star_with, Connectivity, FilteredComplex, FiltrationKind,
    GridOptions,
};
use crate::error::{Error, Result};
use crate::imgprep::{
    apply_morphology, resize_half, threshold_with, BinaryMask, GrayImage, Morphology, ThresholdPolarity,
    DEFAULT_THRESHOLD,
};
use crate::persistence::{reduce_extended, reduce_ordinary, IntervalKind, PersistenceDiagram};
use crate::vectorize::{persistence_image, select_intervals, PersistenceImageGrid, VectorizationParams, Weight};

/// Window lattice over a square image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowGrid {
    pub image_side: usize,
    pub window: usize,
    pub stride: usize,
    /// Windows per axis.
    pub per_axis: usize,
    origins: Vec<(usize, usize)>,
}

impl WindowGrid {
    /// (row, col) top-left corners in row-major order.
    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }
}

pub fn make_window_grid(image_side: usize, window: usize, stride: usize) -> Result<WindowGrid> {
    if !(1 <= stride && stride <= window && window <= image_side) {
        return Err(Error::Config(format!(
            "window lattice needs 1 <= stride <= window <= image side, got stride {stride}, \
             window {window}, image {image_side}"
        )));
    }
    let per_axis = (image_side - window) / stride + 1;
    let origins = (0..per_axis)
        .flat_map(|i| (0..per_axis).map(move |j| (stride * i, stride * j)))
        .collect();
    Ok(WindowGrid {
        image_side,
        window,
        stride,
        per_axis,
        origins,
    })
}

/// Everything that determines a PHC tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhcConfig {
    pub filtration: FiltrationKind,
    pub threshold: u8,
    pub polarity: ThresholdPolarity,
    pub morphology: Morphology,
    pub connectivity: Connectivity,
    pub flag_expansion: bool,
    pub window: usize,
    pub stride: usize,
    /// Persistence image cells per axis.
    pub resolution: usize,
    /// Gaussian bandwidth; defaults per filtration (see [`PhcConfig::vectorization`]).
    pub sigma: Option<f64>,
    /// Upper end of both persistence image axes; defaults to the window side.
    pub range_max: Option<f64>,
    pub weight: Weight,
    /// Interval kinds to vectorize; `Ext1` for height, `Ord1` otherwise.
    pub kinds: Option<Vec<IntervalKind>>,
    /// Images wider than this are halved (2x2 averaging) until they fit.
    pub target_side: Option<usize>,
}

impl Default for PhcConfig {
    fn default() -> Self {
        PhcConfig {
            filtration: FiltrationKind::Height,
            threshold: DEFAULT_THRESHOLD,
            polarity: ThresholdPolarity::Below,
            morphology: Morphology::Dilate,
            connectivity: Connectivity::Eight,
            flag_expansion: true,
            window: 32,
            stride: 32,
            resolution: 20,
            sigma: None,
            range_max: None,
            weight: Weight::Linear,
            kinds: None,
            target_side: Some(512),
        }
    }
}

impl PhcConfig {
    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            connectivity: self.connectivity,
            flag_expansion: self.flag_expansion,
        }
    }

    pub fn interval_kinds(&self) -> Vec<IntervalKind> {
        match &self.kinds {
            Some(kinds) => kinds.clone(),
            None if self.filtration == FiltrationKind::Height => vec![IntervalKind::Ext1],
            None => vec![IntervalKind::Ord1],
        }
    }

    /// Persistence image parameters for a region of the given side length.
    ///
    /// Height and alpha values are in pixel units: axes span the region side
    /// and sigma is one pixel. Lower-star values live in [0, 1], so the axes
    /// span 1 and sigma is 1/32 of that.
    pub fn vectorization(&self, side: usize) -> VectorizationParams {
        let (range, sigma) = match self.filtration {
            FiltrationKind::Height | FiltrationKind::Alpha => (side as f64, 1.0),
            FiltrationKind::LowerStar => (1.0, 1.0 / 32.0),
        };
        VectorizationParams {
            n: self.resolution,
            range_max: self.range_max.unwrap_or(range),
            sigma: self.sigma.unwrap_or(sigma),
            weight: self.weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.stride == 0 || self.stride > self.window {
            return Err(Error::Config(format!(
                "need 1 <= stride <= window, got stride {} window {}",
                self.stride, self.window
            )));
        }
        self.vectorization(self.window).validate()
    }
}

/// Halves the image with 2x2 averaging while it is larger than
/// `cfg.target_side`.
pub fn prepare_image(img: &GrayImage, cfg: &PhcConfig) -> Result<GrayImage> {
    let mut out = img.clone();
    if let Some(target) = cfg.target_side {
        while out.width() > target || out.height() > target {
            out = resize_half(&out)?;
        }
    }
    Ok(out)
}

/// Global threshold followed by the configured morphology.
pub fn condition(img: &GrayImage, cfg: &PhcConfig) -> BinaryMask {
    apply_morphology(&threshold_with(img, cfg.threshold, cfg.polarity), cfg.morphology)
}

/// What each window is cut from: the conditioned mask, or the grayscale
/// image itself for lower-star.
enum Source {
    Mask(BinaryMask),
    Gray(GrayImage),
}

impl Source {
    fn new(img: &GrayImage, cfg: &PhcConfig) -> Self {
        match cfg.filtration {
            FiltrationKind::LowerStar => Source::Gray(img.clone()),
            _ => Source::Mask(condition(img, cfg)),
        }
    }

    fn complex(&self, origin: (usize, usize), side: usize, cfg: &PhcConfig) -> Result<FilteredComplex> {
        let (row, col) = origin;
        Ok(match (self, cfg.filtration) {
            (Source::Gray(img), _) => build_lower_star_with(&img.crop(row, col, side, side)?, cfg.grid_options()),
            (Source::Mask(mask), FiltrationKind::Alpha) => build_alpha(&mask.crop(row, col, side, side)?),
            (Source::Mask(mask), _) => {
                build_adjacency_complex_with(&mask.crop(row, col, side, side)?, cfg.grid_options())
            }
        })
    }
}

fn diagram_of(cx: &FilteredComplex, cfg: &PhcConfig) -> Result<PersistenceDiagram> {
    match cfg.filtration {
        FiltrationKind::Height => reduce_extended(cx),
        FiltrationKind::LowerStar | FiltrationKind::Alpha => reduce_ordinary(cx),
    }
}

/// Per-image wall-clock accounting, in milliseconds. Window stages are summed
/// over windows, so with several workers they exceed elapsed time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub preprocess_ms: f64,
    pub persistence_ms: f64,
    pub vectorize_ms: f64,
    pub total_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Metadata carried with every tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorMeta {
    pub config: PhcConfig,
    pub image_side: usize,
    pub per_axis: usize,
    pub kinds: Vec<IntervalKind>,
    pub vectorization: VectorizationParams,
}

/// `(W, n, n)` stack of per-window persistence images.
#[derive(Debug, Clone, PartialEq)]
pub struct PhcTensor {
    shape: [usize; 3],
    data: Vec<f32>,
    window_index: Vec<(usize, usize)>,
    meta: TensorMeta,
}

impl PhcTensor {
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Window origin (row, col) of each slice.
    pub fn window_index(&self) -> &[(usize, usize)] {
        &self.window_index
    }

    pub fn meta(&self) -> &TensorMeta {
        &self.meta
    }

    pub fn slice(&self, k: usize) -> &[f32] {
        let len = self.shape[1] * self.shape[2];
        &self.data[k * len..(k + 1) * len]
    }

    pub fn to_npy(&self) -> Result<Vec<u8>> {
        crate::npy::to_bytes(&self.shape, &self.data)
    }
}

/// Runs windows on the current rayon pool; see [`WorkerPool`].
pub fn phc_stack(img: &GrayImage, cfg: &PhcConfig) -> Result<PhcTensor> {
    phc_stack_timed(img, cfg).map(|(tensor, _)| tensor)
}

pub fn phc_stack_timed(img: &GrayImage, cfg: &PhcConfig) -> Result<(PhcTensor, StageTimings)> {
    let start = Instant::now();
    cfg.validate()?;
    if !img.is_square() {
        return Err(Error::Config(format!(
            "PHC needs a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let grid = make_window_grid(img.width(), cfg.window, cfg.stride)?;
    let params = cfg.vectorization(cfg.window);
    let kinds = cfg.interval_kinds();

    let t = Instant::now();
    let source = Source::new(img, cfg);
    let preprocess = t.elapsed();

    let results: Vec<(Vec<f32>, Duration, Duration)> = grid
        .origins()
        .par_iter()
        .map(|&origin| -> Result<_> {
            let t = Instant::now();
            let cx = source.complex(origin, cfg.window, cfg)?;
            let diagram = diagram_of(&cx, cfg)?;
            let persistence = t.elapsed();
            let t = Instant::now();
            let image = persistence_image(&select_intervals(&diagram, &kinds), &params);
            Ok((image.to_f32(), persistence, t.elapsed()))
        })
        .collect::<Result<_>>()?;

    let mut timings = StageTimings {
        preprocess_ms: ms(preprocess),
        ..StageTimings::default()
    };
    let n = cfg.resolution;
    let mut data = Vec::with_capacity(grid.len() * n * n);
    for (slice, persistence, vectorize) in results {
        data.extend_from_slice(&slice);
        timings.persistence_ms += ms(persistence);
        timings.vectorize_ms += ms(vectorize);
    }
    timings.total_ms = ms(start.elapsed());
    let tensor = PhcTensor {
        shape: [grid.len(), n, n],
        data,
        window_index: grid.origins().to_vec(),
        meta: TensorMeta {
            config: cfg.clone(),
            image_side: img.width(),
            per_axis: grid.per_axis,
            kinds,
            vectorization: params,
        },
    };
    Ok((tensor, timings))
}

/// Diagram of every window, in window order, with origins recorded.
pub fn window_diagrams(img: &GrayImage, cfg: &PhcConfig) -> Result<Vec<PersistenceDiagram>> {
    let grid = make_window_grid(img.width().min(img.height()), cfg.window, cfg.stride)?;
    let source = Source::new(img, cfg);
    grid.origins()
        .par_iter()
        .map(|&origin| {
            let cx = source.complex(origin, cfg.window, cfg)?;
            Ok(diagram_of(&cx, cfg)?.with_origin(origin))
        })
        .collect()
}

/// The complex of the window at `origin`, or of the whole image when `None`.
pub fn region_complex(img: &GrayImage, cfg: &PhcConfig, origin: Option<(usize, usize)>) -> Result<FilteredComplex> {
    let source = Source::new(img, cfg);
    match origin {
        Some(o) => source.complex(o, cfg.window, cfg),
        None => {
            if !img.is_square() {
                return Err(Error::Config("whole-image complexes need a square image".into()));
            }
            source.complex((0, 0), img.width(), cfg)
        }
    }
}

/// Diagram of the whole image as a single window.
pub fn global_diagram(img: &GrayImage, cfg: &PhcConfig) -> Result<PersistenceDiagram> {
    diagram_of(&region_complex(img, cfg, None)?, cfg)
}

/// Persistence image of the whole image; axes span the image side.
pub fn global_ph(img: &GrayImage, cfg: &PhcConfig) -> Result<PersistenceImageGrid> {
    global_ph_timed(img, cfg).map(|(grid, _)| grid)
}

pub fn global_ph_timed(img: &GrayImage, cfg: &PhcConfig) -> Result<(PersistenceImageGrid, StageTimings)> {
    let start = Instant::now();
    let params = cfg.vectorization(img.width());
    params.validate()?;
    let t = Instant::now();
    let source = Source::new(img, cfg);
    let preprocess = t.elapsed();
    if !img.is_square() {
        return Err(Error::Config("global persistence needs a square image".into()));
    }
    let t = Instant::now();
    let cx = source.complex((0, 0), img.width(), cfg)?;
    let diagram = diagram_of(&cx, cfg)?;
    let persistence = t.elapsed();
    let t = Instant::now();
    let grid = persistence_image(&select_intervals(&diagram, &cfg.interval_kinds()), &params);
    let vectorize = t.elapsed();
    Ok((
        grid,
        StageTimings {
            preprocess_ms: ms(preprocess),
            persistence_ms: ms(persistence),
            vectorize_ms: ms(vectorize),
            total_ms: ms(start.elapsed()),
        },
    ))
}

/// Per-window weights `k(c*i, c*j)` for a `per_axis x per_axis` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PhcKernel {
    per_axis: usize,
    weights: Vec<f64>,
}

impl PhcKernel {
    pub fn new(per_axis: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != per_axis * per_axis {
            return Err(Error::Config(format!(
                "{} kernel weights for a {per_axis}x{per_axis} lattice",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("kernel weights must be finite".into()));
        }
        Ok(PhcKernel { per_axis, weights })
    }

    pub fn zeros(per_axis: usize) -> Self {
        PhcKernel {
            per_axis,
            weights: vec![0.0; per_axis * per_axis],
        }
    }

    pub fn ones(per_axis: usize) -> Self {
        PhcKernel {
            per_axis,
            weights: vec![1.0; per_axis * per_axis],
        }
    }

    pub fn one_hot(per_axis: usize, i: usize, j: usize) -> Self {
        let mut k = PhcKernel::zeros(per_axis);
        k.weights[i * per_axis + j] = 1.0;
        k
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `sum_{i,j} k(c*i, c*j) * slice(i, j)`.
pub fn phc_convolve(stack: &PhcTensor, kernel: &PhcKernel) -> Result<PersistenceImageGrid> {
    let [w, n, _] = stack.shape;
    if kernel.per_axis != stack.meta.per_axis || kernel.weights.len() != w {
        return Err(Error::Config(format!(
            "kernel is {0}x{0} but the stack has {1} windows per axis",
            kernel.per_axis, stack.meta.per_axis
        )));
    }
    let mut out = vec![0.0f64; n * n];
    for (k, &weight) in kernel.weights.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (acc, &v) in out.iter_mut().zip(stack.slice(k)) {
            *acc += weight * f64::from(v);
        }
    }
    PersistenceImageGrid::from_data(n, out)
}

/// A bounded pool for window- and image-level parallelism.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    /// `workers == 0` lets rayon pick one thread per core.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(WorkerPool { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}
