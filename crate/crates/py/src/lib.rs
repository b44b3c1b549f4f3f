//! Python bindings for the `gpbm` crate.
//!
//! Eye coordinates cross the boundary as `(lx, ly, rx, ry)` tuples. Every
//! library error surfaces as `gpbm.GpbmError` whose message starts with the
//! stable error kind, e.g. `"BadMagic: ..."`.

use std::path::PathBuf;

use gpbm::gallery::{encode_image, GalleryRecord};
use gpbm::{Config, EyePair, GalleryIndex, MatchReport, PhaseCodeImage, Point, RasterImage};
use pyo3::create_exception;
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(gpbm, GpbmError, PyValueError);

fn to_py(err: gpbm::Error) -> PyErr {
    GpbmError::new_err(format!("{}: {}", err.kind(), err))
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gpbm::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

type EyeTuple = (f64, f64, f64, f64);

fn eyes_from(t: EyeTuple) -> PyResult<EyePair> {
    EyePair::new(Point::new(t.0, t.1), Point::new(t.2, t.3)).py_err()
}

fn config_or_default(config: Option<&PyConfig>) -> Config {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

#[pyclass(name = "RasterImage", module = "gpbm", frozen)]
struct PyRasterImage {
    inner: RasterImage,
}

#[pymethods]
impl PyRasterImage {
    /// Row-major 8-bit image.
    #[new]
    fn new(height: usize, width: usize, pixels: &[u8]) -> PyResult<Self> {
        let inner = RasterImage::new(height, width, pixels.to_vec()).py_err()?;
        Ok(PyRasterImage { inner })
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn get(&self, y: usize, x: usize) -> PyResult<u8> {
        if y >= self.inner.height() || x >= self.inner.width() {
            return Err(PyIndexError::new_err(format!("pixel ({y}, {x}) out of range")));
        }
        Ok(self.inner.get(y, x))
    }

    /// Writes a binary PGM.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        gpbm::save_pgm(&self.inner, path).py_err()
    }

    fn __repr__(&self) -> String {
        format!("RasterImage({}x{})", self.inner.height(), self.inner.width())
    }
}

/// Full pipeline configuration. `Config()` gives the defaults and
/// `Config(text)` parses `key = value` lines.
#[pyclass(name = "Config", module = "gpbm", frozen)]
struct PyConfig {
    inner: Config,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text=None))]
    fn new(text: Option<&str>) -> PyResult<Self> {
        let inner = match text {
            Some(t) => Config::parse(t).py_err()?,
            None => Config::default(),
        };
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyConfig {
            inner: Config::load(path).py_err()?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[getter]
    fn orientations(&self) -> Vec<u8> {
        self.inner.gabor.orientations.clone()
    }

    #[getter]
    fn kernel_size(&self) -> usize {
        self.inner.gabor.kernel_size
    }

    #[getter]
    fn block_size(&self) -> (usize, usize) {
        (self.inner.matching.block_h, self.inner.matching.block_w)
    }

    #[getter]
    fn search_offsets(&self) -> (usize, usize) {
        (self.inner.matching.search_r, self.inner.matching.search_c)
    }

    #[getter]
    fn fit_count(&self) -> usize {
        self.inner.matching.fit_count
    }

    #[getter]
    fn frame_size(&self) -> (usize, usize) {
        (self.inner.alignment.out_height, self.inner.alignment.out_width)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Config(fingerprint={})", self.inner.fingerprint())
    }
}

#[pyclass(name = "PhaseCodeImage", module = "gpbm", frozen)]
struct PyPhaseCodeImage {
    inner: PhaseCodeImage,
}

#[pymethods]
impl PyPhaseCodeImage {
    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    /// Channel-major code bytes, one 4-bit code per pixel per channel.
    fn codes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.codes())
    }

    fn get(&self, channel: usize, y: usize, x: usize) -> PyResult<u8> {
        let c = &self.inner;
        if channel >= c.channels() || y >= c.height() || x >= c.width() {
            return Err(PyIndexError::new_err("code position out of range"));
        }
        Ok(c.get(channel, y, x))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!("PhaseCodeImage({}x{}x{})", c.channels(), c.height(), c.width())
    }
}

#[pyclass(name = "MatchReport", module = "gpbm", frozen)]
struct PyMatchReport {
    inner: MatchReport,
}

#[pymethods]
impl PyMatchReport {
    #[getter]
    fn dist(&self) -> f64 {
        self.inner.dist
    }

    fn weight_sum(&self) -> f64 {
        self.inner.weight_sum()
    }

    /// `(block, d_n, dy, dx, k_n, s_hat)` per block, in grid order.
    fn blocks(&self) -> Vec<(usize, f64, isize, isize, f64, f64)> {
        self.inner
            .blocks
            .iter()
            .map(|b| (b.block.index, b.min_dist, b.best_dy, b.best_dx, b.slope, b.weight))
            .collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.blocks.len()
    }
}

#[pyclass(name = "GalleryIndex", module = "gpbm", frozen)]
struct PyGalleryIndex {
    inner: GalleryIndex,
}

#[pymethods]
impl PyGalleryIndex {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyGalleryIndex {
            inner: gpbm::load_index(path).py_err()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        gpbm::save_index(&self.inner, path).py_err()
    }

    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig {
            inner: self.inner.config().clone(),
        }
    }

    /// `(identity, image_id)` pairs in insertion order.
    fn entries(&self) -> Vec<(String, String)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.identity.clone(), e.image_id.clone()))
            .collect()
    }

    fn codes(&self, position: usize) -> PyResult<PyPhaseCodeImage> {
        let entry = self
            .inner
            .entries()
            .get(position)
            .ok_or_else(|| PyIndexError::new_err("entry position out of range"))?;
        Ok(PyPhaseCodeImage {
            inner: entry.codes.clone(),
        })
    }

    fn contains_identity(&self, identity: &str) -> bool {
        self.inner.contains_identity(identity)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("GalleryIndex(entries={})", self.inner.len())
    }
}

#[pyfunction]
fn load_grayscale(path: PathBuf) -> PyResult<PyRasterImage> {
    Ok(PyRasterImage {
        inner: gpbm::load_grayscale(path).py_err()?,
    })
}

/// Warps `img` so the eyes land on the canonical positions.
#[pyfunction]
#[pyo3(signature = (img, eyes, config=None))]
fn align_face(img: &PyRasterImage, eyes: EyeTuple, config: Option<&PyConfig>) -> PyResult<PyRasterImage> {
    let config = config_or_default(config);
    let inner = gpbm::align_face(&img.inner, &eyes_from(eyes)?, &config.alignment).py_err()?;
    Ok(PyRasterImage { inner })
}

/// Phase codes of an already aligned face.
#[pyfunction]
#[pyo3(signature = (img, config=None))]
fn encode_face(py: Python<'_>, img: &PyRasterImage, config: Option<&PyConfig>) -> PyResult<PyPhaseCodeImage> {
    let config = config_or_default(config);
    let inner = py.detach(|| gpbm::encode_face(&img.inner, &config.gabor)).py_err()?;
    Ok(PyPhaseCodeImage { inner })
}

/// Aligns then encodes a raw image.
#[pyfunction(name = "encode_image")]
#[pyo3(signature = (img, eyes, config=None))]
fn py_encode_image(
    py: Python<'_>,
    img: &PyRasterImage,
    eyes: EyeTuple,
    config: Option<&PyConfig>,
) -> PyResult<PyPhaseCodeImage> {
    let config = config_or_default(config);
    let eyes = eyes_from(eyes)?;
    let inner = py.detach(|| encode_image(&img.inner, &eyes, &config)).py_err()?;
    Ok(PyPhaseCodeImage { inner })
}

#[pyfunction]
#[pyo3(signature = (probe, gallery, config=None))]
fn pair_distance(
    py: Python<'_>,
    probe: &PyPhaseCodeImage,
    gallery: &PyPhaseCodeImage,
    config: Option<&PyConfig>,
) -> PyResult<PyMatchReport> {
    let params = config_or_default(config).matching;
    let inner = py
        .detach(|| gpbm::pair_distance(&probe.inner, &gallery.inner, &params))
        .py_err()?;
    Ok(PyMatchReport { inner })
}

#[pyfunction]
fn gray_code(sector: u8) -> PyResult<u8> {
    gpbm::gray_code(sector).py_err()
}

#[pyfunction]
fn code_distance(a: u8, b: u8) -> PyResult<u32> {
    gpbm::code_distance(a, b).py_err()
}

/// Kernel taps as a list of rows of complex numbers.
#[pyfunction]
#[pyo3(signature = (u, config=None))]
fn make_kernel(u: u8, config: Option<&PyConfig>) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let kernel = gpbm::make_kernel(&config_or_default(config).gabor, u).py_err()?;
    let n = kernel.size();
    Ok((0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let t = kernel.tap(r, c);
                    (t.re, t.im)
                })
                .collect()
        })
        .collect())
}

#[pyfunction]
fn suggest_search_offsets(block_h: usize, block_w: usize) -> (usize, usize) {
    gpbm::suggest_search_offsets(block_h, block_w)
}

/// Builds an index from `(identity, image_id, path, eyes)` records.
#[pyfunction]
#[pyo3(signature = (records, config=None))]
fn build_gallery(
    py: Python<'_>,
    records: Vec<(String, String, PathBuf, EyeTuple)>,
    config: Option<&PyConfig>,
) -> PyResult<PyGalleryIndex> {
    let config = config_or_default(config);
    let records = records
        .into_iter()
        .map(|(identity, image_id, path, eyes)| {
            Ok(GalleryRecord {
                identity,
                image_id,
                path,
                eyes: eyes_from(eyes)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let inner = py.detach(|| gpbm::build_gallery(&records, &config)).py_err()?;
    Ok(PyGalleryIndex { inner })
}

/// Best `top_k` gallery entries as `(identity, image_id, dist)`.
#[pyfunction]
#[pyo3(signature = (probe, index, top_k=10, config=None, probe_id="probe"))]
fn identify(
    py: Python<'_>,
    probe: &PyPhaseCodeImage,
    index: &PyGalleryIndex,
    top_k: usize,
    config: Option<&PyConfig>,
    probe_id: &str,
) -> PyResult<Vec<(String, String, f64)>> {
    let config = config.map_or_else(|| index.inner.config().clone(), |c| c.inner.clone());
    let result = py
        .detach(|| gpbm::identify(probe_id, &probe.inner, &config, &index.inner, top_k))
        .py_err()?;
    Ok(result
        .candidates
        .into_iter()
        .map(|c| (c.identity, c.image_id, c.dist))
        .collect())
}

#[pyfunction]
fn load_index(path: PathBuf) -> PyResult<PyGalleryIndex> {
    PyGalleryIndex::load(path)
}

#[pyfunction]
fn save_index(index: &PyGalleryIndex, path: PathBuf) -> PyResult<()> {
    index.save(path)
}

#[pymodule(name = "gpbm")]
fn gpbm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GpbmError", m.py().get_type::<GpbmError>())?;
    m.add_class::<PyRasterImage>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyPhaseCodeImage>()?;
    m.add_class::<PyMatchReport>()?;
    m.add_class::<PyGalleryIndex>()?;
    m.add_function(wrap_pyfunction!(load_grayscale, m)?)?;
    m.add_function(wrap_pyfunction!(align_face, m)?)?;
    m.add_function(wrap_pyfunction!(encode_face, m)?)?;
    m.add_function(wrap_pyfunction!(py_encode_image, m)?)?;
    m.add_function(wrap_pyfunction!(pair_distance, m)?)?;
    m.add_function(wrap_pyfunction!(gray_code, m)?)?;
    m.add_function(wrap_pyfunction!(code_distance, m)?)?;
    m.add_function(wrap_pyfunction!(make_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(suggest_search_offsets, m)?)?;
    m.add_function(wrap_pyfunction!(build_gallery, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(load_index, m)?)?;
    m.add_function(wrap_pyfunction!(save_index, m)?)?;
    Ok(())
}
