use crate::simplant::SensorRecord;

use super::ransac::ransac_filter;

/// Cleaning knobs. The RANSAC tolerance is `tol_sigmas` times a robust
/// noise estimate taken from a global fit of each series.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    pub tol_sigmas: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self { tol_sigmas: 3.0, iterations: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanReport {
    pub records: Vec<SensorRecord>,
    pub dropouts: usize,
    pub outliers: usize,
}

fn zero_while_on(r: &SensorRecord) -> bool {
    let pairs = [(&r.chkw, &r.config.ch), (&r.ctkw, &r.config.ct), (&r.cwpkw, &r.config.cwp), (&r.chwpkw, &r.config.chwp)];
    pairs.iter().any(|(kw, on)| kw.iter().zip(on.iter()).any(|(&p, &on)| on && p <= 0.0))
}

/// Drops sensor dropouts (zero power on running equipment), then gross
/// outliers in each per-equipment power series.
///
/// Series are filtered in log-log space, where multiplicative sensor noise
/// becomes additive and the pump/fan cube law becomes a straight line.
pub fn clean_records(records: &[SensorRecord], cfg: &CleanConfig) -> CleanReport {
    let kept: Vec<&SensorRecord> = records.iter().filter(|r| !zero_while_on(r)).collect();
    let dropouts = records.len() - kept.len();
    let mut keep = vec![true; kept.len()];

    type Series = fn(&SensorRecord, usize) -> Option<(f64, f64)>;
    let series: [(Series, usize); 4] = [
        (|r, i| r.config.cwp[i].then(|| (r.control.cwp_speed, r.cwpkw[i])), kept.first().map_or(0, |r| r.cwpkw.len())),
        (|r, i| r.config.chwp[i].then(|| (r.control.chwp_speed, r.chwpkw[i])), kept.first().map_or(0, |r| r.chwpkw.len())),
        (|r, i| r.config.ct[i].then(|| (r.control.ct_speed, r.ctkw[i])), kept.first().map_or(0, |r| r.ctkw.len())),
        (
            |r, i| {
                let n_on = r.config.ch.iter().filter(|&&b| b).count();
                r.config.ch[i].then(|| (r.load_rt / n_on as f64, r.chkw[i]))
            },
            kept.first().map_or(0, |r| r.chkw.len()),
        ),
    ];

    let mut seed = cfg.seed;
    for (get, count) in series {
        for unit in 0..count {
            let (idx, pts): (Vec<usize>, Vec<(f64, f64)>) = kept
                .iter()
                .enumerate()
                .filter_map(|(k, r)| get(r, unit).filter(|&(x, y)| x > 0.0 && y > 0.0).map(|(x, y)| (k, (x.ln(), y.ln()))))
                .unzip();
            seed = seed.wrapping_add(1);
            for (k, ok) in idx.into_iter().zip(series_inliers(&pts, cfg, seed)) {
                keep[k] &= ok;
            }
        }
    }
    let out: Vec<SensorRecord> = kept.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(r, _)| r.clone()).collect();
    let outliers = records.len() - dropouts - out.len();
    CleanReport { records: out, dropouts, outliers }
}

fn series_inliers(pts: &[(f64, f64)], cfg: &CleanConfig, seed: u64) -> Vec<bool> {
    if pts.len() < 8 {
        return vec![true; pts.len()];
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let global = crate::numeric::fit_poly_lstsq(&xs, &ys, 3).ok();
    let resid: Vec<f64> = match &global {
        Some(c) => pts.iter().map(|&(x, y)| y - crate::numeric::eval_poly(c, x)).collect(),
        None => {
            let m = median(&ys);
            ys.iter().map(|y| y - m).collect()
        }
    };
    let sigma = robust_sigma(&resid).max(1e-9);
    let tol = cfg.tol_sigmas * sigma;
    match ransac_filter(pts, 3, tol, cfg.iterations, seed) {
        Ok(fit) => fit.inliers,
        // A single operating point (constant speed) has no curve to fit.
        Err(_) => resid.iter().map(|r| r.abs() <= tol).collect(),
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}

/// Normal-consistent MAD.
pub(crate) fn robust_sigma(resid: &[f64]) -> f64 {
    let m = median(resid);
    let dev: Vec<f64> = resid.iter().map(|r| (r - m).abs()).collect();
    1.4826 * median(&dev)
}
