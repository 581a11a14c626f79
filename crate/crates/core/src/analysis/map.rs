use super::AnalysisError;
use crate::numeric::wrap_tau;
use crate::sim::CoincidenceRecord;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Per-axis phase bins: one `coarse` bin centered on 0 and on π, `fine`
/// bins filling the two arcs between them. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub fine: f64,
    pub coarse: f64,
}

impl Default for BinLayout {
    fn default() -> Self {
        Self {
            fine: 3f64.to_radians(),
            coarse: 45f64.to_radians(),
        }
    }
}

impl BinLayout {
    pub fn from_degrees(fine: f64, coarse: f64) -> Result<Self, AnalysisError> {
        let layout = Self {
            fine: fine.to_radians(),
            coarse: coarse.to_radians(),
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.fine > 0.0 && self.coarse >= self.fine && self.coarse < PI) {
            return Err(AnalysisError::Layout(format!(
                "need 0 < fine <= coarse < 180 deg, got fine {:.3} and coarse {:.3}",
                self.fine.to_degrees(),
                self.coarse.to_degrees()
            )));
        }
        Ok(())
    }

    /// Number of fine bins in each arc between the flat zones.
    pub fn fine_per_arc(&self) -> usize {
        (((PI - self.coarse) / self.fine).round() as usize).max(1)
    }

    fn fine_width(&self) -> f64 {
        (PI - self.coarse) / self.fine_per_arc() as f64
    }

    pub fn bins_per_axis(&self) -> usize {
        2 * self.fine_per_arc() + 2
    }

    /// Index of the bin containing `phase`. Index order follows the bin
    /// centers, starting with the flat bin at 0.
    pub fn index(&self, phase: f64) -> usize {
        let n = self.fine_per_arc();
        let half = 0.5 * self.coarse;
        let p = wrap_tau(phase + half);
        let fine = |offset: f64| (((p - offset) / self.fine_width()) as usize).min(n - 1);
        if p < self.coarse {
            0
        } else if p < PI {
            1 + fine(self.coarse)
        } else if p < PI + self.coarse {
            n + 1
        } else {
            n + 2 + fine(PI + self.coarse)
        }
    }

    pub fn center(&self, index: usize) -> f64 {
        let n = self.fine_per_arc();
        let half = 0.5 * self.coarse;
        let w = self.fine_width();
        match index {
            0 => 0.0,
            i if i <= n => half + (i as f64 - 0.5) * w,
            i if i == n + 1 => PI,
            i => PI + half + ((i - n - 1) as f64 - 0.5) * w,
        }
    }

    pub fn width(&self, index: usize) -> f64 {
        if index == 0 || index == self.fine_per_arc() + 1 {
            self.coarse
        } else {
            self.fine_width()
        }
    }

    /// Bin holding `center(index) + π`.
    pub fn conjugate(&self, index: usize) -> usize {
        (index + self.fine_per_arc() + 1) % self.bins_per_axis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MapBin {
    pub coincidences: f64,
    pub accidentals: f64,
    pub records: u64,
    /// Variance of `coincidences`.
    pub variance: f64,
}

/// Coincidences accumulated over `(φ_A, φ_B)` bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceMap {
    pub layout: BinLayout,
    /// Seconds of exposure per record.
    pub record_interval: f64,
    pub gates_per_record: u64,
    pub accidentals_subtracted: bool,
    bins: Vec<MapBin>,
}

impl CoincidenceMap {
    pub fn empty(layout: BinLayout, record_interval: f64, gates_per_record: u64) -> Self {
        let n = layout.bins_per_axis();
        Self {
            layout,
            record_interval,
            gates_per_record,
            accidentals_subtracted: false,
            bins: vec![MapBin::default(); n * n],
        }
    }

    /// Map with every bin filled by `f(φ_A center, φ_B center)`.
    pub fn from_fn(
        layout: BinLayout,
        record_interval: f64,
        gates_per_record: u64,
        mut f: impl FnMut(f64, f64) -> MapBin,
    ) -> Self {
        let mut map = Self::empty(layout, record_interval, gates_per_record);
        let n = layout.bins_per_axis();
        for a in 0..n {
            for b in 0..n {
                map.bins[a * n + b] = f(layout.center(a), layout.center(b));
            }
        }
        map
    }

    pub fn axis_len(&self) -> usize {
        self.layout.bins_per_axis()
    }

    pub fn bin(&self, a: usize, b: usize) -> &MapBin {
        &self.bins[a * self.axis_len() + b]
    }

    pub fn exposure_seconds(&self, a: usize, b: usize) -> f64 {
        self.bin(a, b).records as f64 * self.record_interval
    }

    pub fn exposure_gates(&self, a: usize, b: usize) -> u64 {
        self.bin(a, b).records * self.gates_per_record
    }

    /// Rate in Hz and its standard deviation; `None` for unexposed bins.
    pub fn rate(&self, a: usize, b: usize) -> Option<(f64, f64)> {
        let t = self.exposure_seconds(a, b);
        if t <= 0.0 {
            return None;
        }
        let bin = self.bin(a, b);
        Some((bin.coincidences / t, self.count_sigma(a, b) / t))
    }

    pub fn count_sigma(&self, a: usize, b: usize) -> f64 {
        self.bin(a, b).variance.max(1.0).sqrt()
    }

    /// Standard deviation of the phase within a bin on each axis.
    pub fn phase_sigma(&self, a: usize, b: usize) -> (f64, f64) {
        let root12 = 12f64.sqrt();
        (self.layout.width(a) / root12, self.layout.width(b) / root12)
    }

    pub fn populated(&self) -> usize {
        self.bins.iter().filter(|b| b.records > 0).count()
    }

    pub fn total_coincidences(&self) -> f64 {
        self.bins.iter().map(|b| b.coincidences).sum()
    }

    /// Rows `phi_a_deg,phi_b_deg,rate_hz,sigma` for exposed bins.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phi_a_deg", "phi_b_deg", "rate_hz", "sigma"])?;
        let n = self.axis_len();
        for a in 0..n {
            for b in 0..n {
                if let Some((rate, sigma)) = self.rate(a, b) {
                    w.write_record([
                        format!("{:.4}", self.layout.center(a).to_degrees()),
                        format!("{:.4}", self.layout.center(b).to_degrees()),
                        format!("{rate:.9e}"),
                        format!("{sigma:.9e}"),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulates every kept record into the bin of its phase estimates.
pub fn bin_records(
    records: &[CoincidenceRecord],
    layout: BinLayout,
    record_interval: f64,
    gates_per_record: u64,
) -> Result<CoincidenceMap, AnalysisError> {
    layout.validate()?;
    let mut map = CoincidenceMap::empty(layout, record_interval, gates_per_record);
    let n = layout.bins_per_axis();
    for r in records.iter().filter(|r| !r.discarded) {
        let bin = &mut map.bins[layout.index(r.phi_a_est) * n + layout.index(r.phi_b_est)];
        bin.coincidences += r.coincidences as f64;
        bin.accidentals += r.accidental_estimate;
        bin.records += 1;
    }
    if map.populated() == 0 {
        return Err(AnalysisError::NoData);
    }
    for bin in &mut map.bins {
        bin.variance = bin.coincidences;
    }
    Ok(map)
}

/// Removes the estimated accidentals from each bin, flooring at zero.
pub fn subtract_accidentals(map: &CoincidenceMap) -> CoincidenceMap {
    let mut out = map.clone();
    for bin in &mut out.bins {
        bin.variance = bin.coincidences + bin.accidentals;
        bin.coincidences = (bin.coincidences - bin.accidentals).max(0.0);
        bin.accidentals = 0.0;
    }
    out.accidentals_subtracted = true;
    out
}
