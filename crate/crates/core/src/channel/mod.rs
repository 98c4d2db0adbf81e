//! Frequency-sampled self-interference coupling between the Tx and Rx arrays.
//!
//! The tensor is stored row-major as `[rx][tx][freq]`, with rx/tx element
//! indices in the layouts' Kronecker order (see [`crate::geometry`]).

mod io;

pub use io::{
    load_channel, read_binary, read_csv, save_channel, write_binary, write_csv, ChannelFormat,
};

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayLayout;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default Tx/Rx plane separation of the synthetic LoS channel, in carrier wavelengths.
pub const DEFAULT_SEPARATION_WAVELENGTHS: f64 = 2.0;

/// Default path amplitude of the synthetic LoS channel (metres). Puts the
/// coupling between facing elements at about −30 dB for the default
/// separation at 3.5 GHz.
pub const DEFAULT_LOS_ALPHA: f64 = 5.4e-3;

/// `n` evenly spaced frequencies from `start_hz` to `stop_hz` inclusive.
pub fn linspace_hz(start_hz: f64, stop_hz: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start_hz],
        _ => {
            let step = (stop_hz - start_hz) / (n - 1) as f64;
            (0..n).map(|i| start_hz + i as f64 * step).collect()
        }
    }
}

/// The 1601-point, 3-4 GHz measurement grid.
pub fn reference_frequency_grid() -> Vec<f64> {
    linspace_hz(3.0e9, 4.0e9, 1601)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiChannel {
    rx_layout: ArrayLayout,
    tx_layout: ArrayLayout,
    freqs_hz: Vec<f64>,
    data: Vec<Complex64>,
}

impl SiChannel {
    pub fn new(
        rx_layout: ArrayLayout,
        tx_layout: ArrayLayout,
        freqs_hz: Vec<f64>,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        validate_grid(&freqs_hz)?;
        let expected = rx_layout.len() * tx_layout.len() * freqs_hz.len();
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "channel tensor entries",
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            rx_layout,
            tx_layout,
            freqs_hz,
            data,
        })
    }

    /// Builds a channel from `f(rx, tx, freq_index)`.
    pub fn from_fn(
        rx_layout: ArrayLayout,
        tx_layout: ArrayLayout,
        freqs_hz: Vec<f64>,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Result<Self> {
        let n = freqs_hz.len();
        let mut data = Vec::with_capacity(rx_layout.len() * tx_layout.len() * n);
        for u in 0..rx_layout.len() {
            for d in 0..tx_layout.len() {
                for k in 0..n {
                    data.push(f(u, d, k));
                }
            }
        }
        Self::new(rx_layout, tx_layout, freqs_hz, data)
    }

    pub fn rx_layout(&self) -> &ArrayLayout {
        &self.rx_layout
    }

    pub fn tx_layout(&self) -> &ArrayLayout {
        &self.tx_layout
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn n_rx(&self) -> usize {
        self.rx_layout.len()
    }

    pub fn n_tx(&self) -> usize {
        self.tx_layout.len()
    }

    pub fn n_freqs(&self) -> usize {
        self.freqs_hz.len()
    }

    /// Raw `[rx][tx][freq]` entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, rx: usize, tx: usize, freq: usize) -> Complex64 {
        self.data[(rx * self.n_tx() + tx) * self.n_freqs() + freq]
    }

    /// Frequency response between one Rx and one Tx element.
    #[inline]
    pub fn series(&self, rx: usize, tx: usize) -> &[Complex64] {
        let n = self.n_freqs();
        let start = (rx * self.n_tx() + tx) * n;
        &self.data[start..start + n]
    }

    /// Re-labels the element grids, keeping the tensor. Element counts must match.
    pub fn with_layouts(mut self, rx_layout: ArrayLayout, tx_layout: ArrayLayout) -> Result<Self> {
        if rx_layout.len() != self.n_rx() {
            return Err(Error::DimensionMismatch {
                context: "rx layout element count",
                expected: self.n_rx(),
                actual: rx_layout.len(),
            });
        }
        if tx_layout.len() != self.n_tx() {
            return Err(Error::DimensionMismatch {
                context: "tx layout element count",
                expected: self.n_tx(),
                actual: tx_layout.len(),
            });
        }
        self.rx_layout = rx_layout;
        self.tx_layout = tx_layout;
        Ok(self)
    }

    /// A compact copy holding only the frequencies of `band`.
    pub fn select_band(&self, band: &BandSlice) -> Result<Self> {
        let idx = band.indices();
        if idx.end > self.n_freqs() {
            return Err(Error::DimensionMismatch {
                context: "band slice end vs frequency count",
                expected: self.n_freqs(),
                actual: idx.end,
            });
        }
        let mut data = Vec::with_capacity(self.n_rx() * self.n_tx() * idx.len());
        for u in 0..self.n_rx() {
            for d in 0..self.n_tx() {
                data.extend_from_slice(&self.series(u, d)[idx.clone()]);
            }
        }
        Self::new(
            self.rx_layout,
            self.tx_layout,
            self.freqs_hz[idx].to_vec(),
            data,
        )
    }

    /// Mean coupling power over all element pairs and frequencies.
    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }
}

fn validate_grid(freqs_hz: &[f64]) -> Result<()> {
    if freqs_hz.is_empty() {
        return Err(Error::InvalidChannel("empty frequency grid".into()));
    }
    if let Some(f) = freqs_hz.iter().find(|f| !f.is_finite()) {
        return Err(Error::InvalidChannel(format!("non-finite frequency {f}")));
    }
    if let Some(w) = freqs_hz.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidChannel(format!(
            "frequency grid not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Synthetic line-of-sight coupling between two parallel planar arrays.
///
/// Both arrays lie in planes normal to z with their first elements on the
/// z-axis; the Rx plane is `separation_wavelengths` above the Tx plane.
/// Element positions are scaled by the carrier wavelength at the centre of
/// `freqs_hz`. Entry `[u, d, n]` is `α / r · exp(−j 2π r f_n / c)`, with `r` the
/// Euclidean distance in metres between Rx element `u` and Tx element `d`.
pub fn generate_los_channel(
    tx_layout: &ArrayLayout,
    rx_layout: &ArrayLayout,
    separation_wavelengths: f64,
    freqs_hz: &[f64],
    alpha: f64,
) -> Result<SiChannel> {
    if !(separation_wavelengths.is_finite() && separation_wavelengths > 0.0) {
        return Err(Error::InvalidChannel(format!(
            "array separation must be positive, got {separation_wavelengths}"
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidChannel(format!(
            "non-finite amplitude {alpha}"
        )));
    }
    validate_grid(freqs_hz)?;
    let center = 0.5 * (freqs_hz[0] + freqs_hz[freqs_hz.len() - 1]);
    if center <= 0.0 {
        return Err(Error::InvalidChannel(format!(
            "centre frequency must be positive, got {center}"
        )));
    }
    let wavelength = SPEED_OF_LIGHT / center;
    let dz = separation_wavelengths * wavelength;
    let tx_pos: Vec<(f64, f64)> = tx_layout.positions().collect();
    let rx_pos: Vec<(f64, f64)> = rx_layout.positions().collect();

    let mut data = Vec::with_capacity(rx_pos.len() * tx_pos.len() * freqs_hz.len());
    for &(ux, uy) in &rx_pos {
        for &(dx, dy) in &tx_pos {
            let r = ((ux - dx) * wavelength)
                .hypot((uy - dy) * wavelength)
                .hypot(dz);
            let amp = alpha / r;
            for &f in freqs_hz {
                data.push(Complex64::from_polar(
                    amp,
                    -2.0 * std::f64::consts::PI * r * f / SPEED_OF_LIGHT,
                ));
            }
        }
    }
    SiChannel::new(*rx_layout, *tx_layout, freqs_hz.to_vec(), data)
}

/// A contiguous run of frequency samples inside `[center − BW/2, center + BW/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSlice {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    start: usize,
    len: usize,
}

impl BandSlice {
    /// Every sample of `ch`.
    pub fn full(ch: &SiChannel) -> Self {
        let f = ch.freqs_hz();
        let (lo, hi) = (f[0], f[f.len() - 1]);
        Self {
            center_hz: 0.5 * (lo + hi),
            bandwidth_hz: hi - lo,
            start: 0,
            len: f.len(),
        }
    }

    pub fn indices(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Selects the grid points of `ch` inside the band centred at `center_hz`.
/// The band must lie within the grid's span.
pub fn slice_band(ch: &SiChannel, center_hz: f64, bandwidth_hz: f64) -> Result<BandSlice> {
    slice_grid(ch.freqs_hz(), center_hz, bandwidth_hz)
}

pub(crate) fn slice_grid(freqs: &[f64], center_hz: f64, bandwidth_hz: f64) -> Result<BandSlice> {
    if !(center_hz.is_finite() && bandwidth_hz.is_finite() && bandwidth_hz >= 0.0) {
        return Err(Error::InvalidChannel(format!(
            "invalid band centre {center_hz} / width {bandwidth_hz}"
        )));
    }
    let low = center_hz - 0.5 * bandwidth_hz;
    let high = center_hz + 0.5 * bandwidth_hz;
    let (grid_low, grid_high) = (freqs[0], freqs[freqs.len() - 1]);
    // Absorbs rounding in `center ± bw/2` so edge samples are not lost.
    let tol = 4.0 * f64::EPSILON * grid_low.abs().max(grid_high.abs());
    if low < grid_low - tol || high > grid_high + tol {
        return Err(Error::BandOutsideGrid {
            low_hz: low,
            high_hz: high,
            grid_low_hz: grid_low,
            grid_high_hz: grid_high,
        });
    }
    let start = freqs.partition_point(|&f| f < low - tol);
    let end = freqs.partition_point(|&f| f <= high + tol);
    if end <= start {
        return Err(Error::EmptyBand);
    }
    Ok(BandSlice {
        center_hz,
        bandwidth_hz,
        start,
        len: end - start,
    })
}

/// Number of `sub`-shaped tiles along each axis of `full`, `(tiles_x, tiles_y)`.
pub fn tile_counts(full: &ArrayLayout, sub: &ArrayLayout) -> Result<(usize, usize)> {
    if !full.m_x().is_multiple_of(sub.m_x()) || !full.m_y().is_multiple_of(sub.m_y()) {
        return Err(Error::Partition(format!(
            "{sub} sub-arrays do not tile a {full} array exactly"
        )));
    }
    if (full.spacing() - sub.spacing()).abs() > 1e-12 {
        return Err(Error::Partition(format!(
            "sub-array spacing {} differs from array spacing {}",
            sub.spacing(),
            full.spacing()
        )));
    }
    Ok((full.m_x() / sub.m_x(), full.m_y() / sub.m_y()))
}

/// Flat indices (in the full array) of the elements of tile `block`.
/// Tiles are numbered x-major, like elements.
pub fn tile_elements(full: &ArrayLayout, sub: &ArrayLayout, block: usize) -> Result<Vec<usize>> {
    let (tiles_x, tiles_y) = tile_counts(full, sub)?;
    if block >= tiles_x * tiles_y {
        return Err(Error::Partition(format!(
            "sub-array index {block} out of range (array has {} sub-arrays)",
            tiles_x * tiles_y
        )));
    }
    let (bx, by) = (block / tiles_y, block % tiles_y);
    Ok((0..sub.len())
        .map(|i| {
            let (k, l) = sub.coords(i);
            full.index(bx * sub.m_x() + k, by * sub.m_y() + l)
        })
        .collect())
}

/// The `M_us × M_ds × N` channel between Tx tile `tx_block` and Rx tile `rx_block`.
pub fn extract_subarray(
    ch: &SiChannel,
    tx_block: usize,
    rx_block: usize,
    tx_sub: &ArrayLayout,
    rx_sub: &ArrayLayout,
) -> Result<SiChannel> {
    let tx_idx = tile_elements(ch.tx_layout(), tx_sub, tx_block)?;
    let rx_idx = tile_elements(ch.rx_layout(), rx_sub, rx_block)?;
    let mut data = Vec::with_capacity(tx_idx.len() * rx_idx.len() * ch.n_freqs());
    for &u in &rx_idx {
        for &d in &tx_idx {
            data.extend_from_slice(ch.series(u, d));
        }
    }
    SiChannel::new(*rx_sub, *tx_sub, ch.freqs_hz().to_vec(), data)
}
