use super::map::CoincidenceMap;
use super::AnalysisError;
use serde::Serialize;

/// Largest `|S|` over all bin settings of a coincidence map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshResult {
    pub s: f64,
    pub s_sigma: f64,
    /// `(a, a′, b, b′)` bin centers in degrees.
    pub settings_deg: [f64; 4],
    pub accidentals_subtracted: bool,
}

/// Correlation from the four bins `{a, a+π} × {b, b+π}` and its standard
/// deviation; `None` if any of them is unexposed or all rates vanish.
pub fn correlation(map: &CoincidenceMap, a: usize, b: usize) -> Option<(f64, f64)> {
    let (ac, bc) = (map.layout.conjugate(a), map.layout.conjugate(b));
    let (pp, spp) = map.rate(a, b)?;
    let (mm, smm) = map.rate(ac, bc)?;
    let (pm, spm) = map.rate(a, bc)?;
    let (mp, smp) = map.rate(ac, b)?;
    let total = pp + mm + pm + mp;
    if !(total > 0.0) {
        return None;
    }
    let e = (pp + mm - pm - mp) / total;
    let same = (1.0 - e) / total;
    let opposite = (1.0 + e) / total;
    let var = same * same * (spp * spp + smm * smm) + opposite * opposite * (spm * spm + smp * smp);
    Some((e, var.sqrt()))
}

/// Exhaustive scan of `S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)` with
/// `a′ ∉ {a, a+π}` and `b′ ∉ {b, b+π}`. Ties keep the lexicographically
/// smallest setting.
pub fn chsh_scan(map: &CoincidenceMap) -> Result<ChshResult, AnalysisError> {
    let n = map.axis_len();
    let layout = map.layout;
    let mut e = vec![f64::NAN; n * n];
    let mut sigma = vec![f64::NAN; n * n];
    let mut missing = Vec::new();
    for a in 0..n {
        for b in 0..n {
            match correlation(map, a, b) {
                Some((v, s)) => {
                    e[a * n + b] = v;
                    sigma[a * n + b] = s;
                }
                None => missing.push((
                    layout.center(a).to_degrees(),
                    layout.center(b).to_degrees(),
                )),
            }
        }
    }

    let mut best: Option<(f64, [usize; 4])> = None;
    for a in 0..n {
        let ac = layout.conjugate(a);
        for a2 in (0..n).filter(|&x| x != a && x != ac) {
            for b in 0..n {
                let (eab, ea2b) = (e[a * n + b], e[a2 * n + b]);
                if eab.is_nan() || ea2b.is_nan() {
                    continue;
                }
                let bc = layout.conjugate(b);
                for b2 in (0..n).filter(|&x| x != b && x != bc) {
                    let s = (eab - e[a * n + b2] + ea2b + e[a2 * n + b2]).abs();
                    if s.is_nan() {
                        continue;
                    }
                    if best.is_none_or(|(top, _)| s > top + 1e-12) {
                        best = Some((s, [a, a2, b, b2]));
                    }
                }
            }
        }
    }

    let (s, [a, a2, b, b2]) = best.ok_or_else(|| AnalysisError::MissingSettings(missing))?;
    let var: f64 = [(a, b), (a, b2), (a2, b), (a2, b2)]
        .iter()
        .map(|&(x, y)| sigma[x * n + y].powi(2))
        .sum();
    Ok(ChshResult {
        s,
        s_sigma: var.sqrt(),
        settings_deg: [a, a2, b, b2].map(|i| (layout.center(i).to_degrees() * 1e9).round() / 1e9),
        accidentals_subtracted: map.accidentals_subtracted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{BinLayout, MapBin};
    use std::f64::consts::SQRT_2;

    fn map(v: f64) -> CoincidenceMap {
        let layout = BinLayout::from_degrees(15.0, 15.0).unwrap();
        CoincidenceMap::from_fn(layout, 1.0, 1, |a, b| MapBin {
            coincidences: 100.0 * (1.0 - v * (a + b).cos()),
            accidentals: 0.0,
            records: 1,
            variance: 100.0,
        })
    }

    #[test]
    fn ideal_map_reaches_tsirelson() {
        let r = chsh_scan(&map(1.0)).unwrap();
        assert!((r.s - 2.0 * SQRT_2).abs() < 1e-9, "{}", r.s);
        assert!(r.s_sigma > 0.0);
    }

    #[test]
    fn flat_map_gives_zero() {
        assert!(chsh_scan(&map(0.0)).unwrap().s.abs() < 1e-12);
    }

    #[test]
    fn missing_conjugates_reported() {
        let layout = BinLayout::from_degrees(15.0, 15.0).unwrap();
        let m = CoincidenceMap::from_fn(layout, 1.0, 1, |a, _| MapBin {
            coincidences: 5.0,
            accidentals: 0.0,
            records: (a < 3.0) as u64,
            variance: 5.0,
        });
        assert!(matches!(chsh_scan(&m), Err(AnalysisError::MissingSettings(v)) if !v.is_empty()));
    }
}
