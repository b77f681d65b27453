//! Price-panel ingestion, validation, windowing, completeness filtering,
//! ranking snapshots, and synthetic panel generation.
//!
//! The canonical input is a long-format CSV with header `date,asset_id,close`
//! (ISO-8601 dates, strictly positive decimal closes). Assets missing any date
//! are dropped by [`filter_complete`]; no interpolation is performed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Rectangular grid of closing prices, assets x dates. Cells may be missing.
///
/// Invariants: asset ids unique, dates strictly increasing, every present
/// price strictly positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    asset_ids: Vec<String>,
    dates: Vec<NaiveDate>,
    /// Row-major, asset-major: cell (asset i, date t) at `i * dates.len() + t`.
    prices: Vec<Option<f64>>,
}

impl PricePanel {
    /// Builds a panel and validates its invariants.
    pub fn new(
        asset_ids: Vec<String>,
        dates: Vec<NaiveDate>,
        prices: Vec<Option<f64>>,
    ) -> Result<Self> {
        if prices.len() != asset_ids.len() * dates.len() {
            return Err(Error::Integrity(format!(
                "price grid has {} cells, expected {} assets x {} dates",
                prices.len(),
                asset_ids.len(),
                dates.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &asset_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Integrity(format!("duplicate asset id {id:?}")));
            }
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Integrity(format!(
                    "dates not strictly increasing at {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        for (idx, cell) in prices.iter().enumerate() {
            if let Some(p) = cell {
                if !p.is_finite() || *p <= 0.0 {
                    let (i, t) = (idx / dates.len(), idx % dates.len());
                    return Err(Error::Domain(format!(
                        "non-positive price {p} for asset {:?} on {}",
                        asset_ids[i], dates[t]
                    )));
                }
            }
        }
        Ok(Self {
            asset_ids,
            dates,
            prices,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn price(&self, asset: usize, date: usize) -> Option<f64> {
        self.prices[asset * self.dates.len() + date]
    }

    /// Number of missing cells in the grid.
    pub fn n_missing(&self) -> usize {
        self.prices.iter().filter(|c| c.is_none()).count()
    }

    /// True when every cell holds a price.
    pub fn is_complete(&self) -> bool {
        self.prices.iter().all(|c| c.is_some())
    }

    /// The complete price series of one asset; errors if any cell is missing.
    pub fn complete_row(&self, asset: usize) -> Result<Vec<f64>> {
        let t = self.dates.len();
        self.prices[asset * t..(asset + 1) * t]
            .iter()
            .map(|c| {
                c.ok_or_else(|| {
                    Error::IncompletePanel(format!(
                        "asset {:?} has missing prices",
                        self.asset_ids[asset]
                    ))
                })
            })
            .collect()
    }

    /// Restricts the panel to the given asset indices (order as given).
    pub fn select_assets(&self, indices: &[usize]) -> Result<PricePanel> {
        if indices.is_empty() {
            return Err(Error::EmptyPanel("empty asset selection".into()));
        }
        let n_dates = self.dates.len();
        let mut asset_ids = Vec::with_capacity(indices.len());
        let mut prices = Vec::with_capacity(indices.len() * n_dates);
        for &i in indices {
            if i >= self.n_assets() {
                return Err(Error::Domain(format!(
                    "asset index {i} out of range for {} assets",
                    self.n_assets()
                )));
            }
            asset_ids.push(self.asset_ids[i].clone());
            prices.extend_from_slice(&self.prices[i * n_dates..(i + 1) * n_dates]);
        }
        PricePanel::new(asset_ids, self.dates.clone(), prices)
    }

    /// Writes the panel as long-format CSV (`date,asset_id,close`), skipping
    /// missing cells. Floats use shortest round-trip formatting, so a
    /// write-read cycle reproduces the panel exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "asset_id", "close"])?;
        for (i, id) in self.asset_ids.iter().enumerate() {
            for (t, date) in self.dates.iter().enumerate() {
                if let Some(p) = self.price(i, t) {
                    w.write_record([date.to_string(), id.clone(), format!("{p}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a long-format price CSV (`date,asset_id,close`) into a panel.
///
/// The panel's date axis is the sorted union of all dates seen; (asset, date)
/// pairs absent from the file are marked missing. Asset order follows first
/// appearance in the file.
pub fn load_price_panel<R: Read>(source: R) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);

    {
        let headers = reader.headers()?;
        let expect = ["date", "asset_id", "close"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expect {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `date,asset_id,close`, got {got:?}"),
            });
        }
    }

    let mut rows: Vec<(NaiveDate, String, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let date_str = record.get(0).unwrap_or("");
        let asset = record.get(1).unwrap_or("");
        let close_str = record.get(2).unwrap_or("");

        let date = date_str.parse::<NaiveDate>().map_err(|e| Error::Parse {
            line,
            msg: format!("bad date {date_str:?}: {e}"),
        })?;
        if asset.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty asset_id".into(),
            });
        }
        let close = close_str.parse::<f64>().map_err(|e| Error::Parse {
            line,
            msg: format!("bad close {close_str:?}: {e}"),
        })?;
        if !close.is_finite() || close <= 0.0 {
            return Err(Error::Domain(format!(
                "non-positive close {close} for asset {asset:?} on {date} (line {line})"
            )));
        }
        rows.push((date, asset.to_string(), close));
    }

    let mut asset_ids: Vec<String> = Vec::new();
    let mut asset_index: HashMap<String, usize> = HashMap::new();
    let mut date_set: HashSet<NaiveDate> = HashSet::new();
    for (date, asset, _) in &rows {
        if !asset_index.contains_key(asset) {
            asset_index.insert(asset.clone(), asset_ids.len());
            asset_ids.push(asset.clone());
        }
        date_set.insert(*date);
    }
    let mut dates: Vec<NaiveDate> = date_set.into_iter().collect();
    dates.sort_unstable();
    let date_index: HashMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(t, d)| (*d, t)).collect();

    let mut prices: Vec<Option<f64>> = vec![None; asset_ids.len() * dates.len()];
    for (date, asset, close) in rows {
        let i = asset_index[&asset];
        let t = date_index[&date];
        let cell = &mut prices[i * dates.len() + t];
        if cell.is_some() {
            return Err(Error::Integrity(format!(
                "duplicate price for asset {asset:?} on {date}"
            )));
        }
        *cell = Some(close);
    }

    PricePanel::new(asset_ids, dates, prices)
}

/// Keeps only the assets with a present price on every panel date in
/// `[start, end]`. Dates are not restricted; asset order is preserved.
pub fn filter_complete(panel: &PricePanel, start: NaiveDate, end: NaiveDate) -> Result<PricePanel> {
    check_range_within(panel, start, end)?;
    let t_range: Vec<usize> = panel
        .dates
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= start && **d <= end)
        .map(|(t, _)| t)
        .collect();

    let keep: Vec<usize> = (0..panel.n_assets())
        .filter(|&i| t_range.iter().all(|&t| panel.price(i, t).is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyPanel(format!(
            "no asset has a complete series over {start}..{end}"
        )));
    }

    let n_dates = panel.n_dates();
    let mut prices = Vec::with_capacity(keep.len() * n_dates);
    let mut asset_ids = Vec::with_capacity(keep.len());
    for &i in &keep {
        asset_ids.push(panel.asset_ids[i].clone());
        prices.extend_from_slice(&panel.prices[i * n_dates..(i + 1) * n_dates]);
    }
    PricePanel::new(asset_ids, panel.dates.clone(), prices)
}

/// Restricts the panel to dates in `[start, end]` inclusive.
pub fn slice_window(panel: &PricePanel, start: NaiveDate, end: NaiveDate) -> Result<PricePanel> {
    if start >= end {
        return Err(Error::Range(format!(
            "window start {start} must precede end {end}"
        )));
    }
    check_range_within(panel, start, end)?;
    let t_range: Vec<usize> = panel
        .dates
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= start && **d <= end)
        .map(|(t, _)| t)
        .collect();
    let dates: Vec<NaiveDate> = t_range.iter().map(|&t| panel.dates[t]).collect();
    let mut prices = Vec::with_capacity(panel.n_assets() * dates.len());
    for i in 0..panel.n_assets() {
        for &t in &t_range {
            prices.push(panel.price(i, t));
        }
    }
    PricePanel::new(panel.asset_ids.clone(), dates, prices)
}

fn check_range_within(panel: &PricePanel, start: NaiveDate, end: NaiveDate) -> Result<()> {
    let (first, last) = match (panel.dates.first(), panel.dates.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::EmptyPanel("panel has no dates".into())),
    };
    if start < first || end > last {
        return Err(Error::Range(format!(
            "window {start}..{end} outside panel range {first}..{last}"
        )));
    }
    Ok(())
}

/// Market-capitalisation ranking of assets as of a given date.
///
/// Rank values are positive and unique within a snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingSnapshot {
    pub as_of_date: NaiveDate,
    ranks: BTreeMap<String, u32>,
}

impl RankingSnapshot {
    pub fn new(as_of_date: NaiveDate, pairs: Vec<(String, u32)>) -> Result<Self> {
        let mut ranks = BTreeMap::new();
        let mut seen_ranks = HashSet::new();
        for (asset, rank) in pairs {
            if rank == 0 {
                return Err(Error::Domain(format!(
                    "rank for {asset:?} must be positive"
                )));
            }
            if !seen_ranks.insert(rank) {
                return Err(Error::Integrity(format!("duplicate rank value {rank}")));
            }
            if ranks.insert(asset.clone(), rank).is_some() {
                return Err(Error::Integrity(format!("duplicate asset id {asset:?}")));
            }
        }
        Ok(Self { as_of_date, ranks })
    }

    pub fn rank_of(&self, asset_id: &str) -> Option<u32> {
        self.ranks.get(asset_id).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Iterates `(asset_id, rank)` in asset-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.ranks.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Writes the snapshot as `asset_id,rank` CSV, in asset-id order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["asset_id", "rank"])?;
        for (asset, rank) in self.iter() {
            w.write_record([asset, &rank.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses `asset_id,rank` CSV into a snapshot dated `as_of_date`.
pub fn load_ranking_snapshot<R: Read>(source: R, as_of_date: NaiveDate) -> Result<RankingSnapshot> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != ["asset_id", "rank"] {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `asset_id,rank`, got {got:?}"),
            });
        }
    }
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let asset = record.get(0).unwrap_or("").to_string();
        let rank_str = record.get(1).unwrap_or("");
        let rank: u32 = rank_str.parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad rank {rank_str:?}: {e}"),
        })?;
        pairs.push((asset, rank));
    }
    RankingSnapshot::new(as_of_date, pairs)
}

/// Descriptor of one analysis window: date range, asset count N, and the
/// number of return observations T. The quality factor Q = T/N governs the
/// Marchenko-Pastur bounds, which require Q >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_assets: usize,
    pub n_days: usize,
}

impl AnalysisWindow {
    pub fn new(start: NaiveDate, end: NaiveDate, n_assets: usize, n_days: usize) -> Result<Self> {
        if end <= start {
            return Err(Error::Range(format!("end {end} must follow start {start}")));
        }
        if n_assets == 0 || n_days == 0 {
            return Err(Error::Domain(
                "window needs at least one asset and one return day".into(),
            ));
        }
        Ok(Self {
            start,
            end,
            n_assets,
            n_days,
        })
    }

    /// Describes a sliced, complete panel: N from the asset count, T from the
    /// date count minus one.
    pub fn describe(panel: &PricePanel) -> Result<Self> {
        let (first, last) = match (panel.dates().first(), panel.dates().last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::EmptyPanel("panel has no dates".into())),
        };
        if panel.n_dates() < 2 {
            return Err(Error::Domain("panel needs at least 2 dates".into()));
        }
        Self::new(first, last, panel.n_assets(), panel.n_dates() - 1)
    }

    pub fn q_factor(&self) -> f64 {
        self.n_days as f64 / self.n_assets as f64
    }
}

/// Daily log-volatility applied to synthetic returns. Normalization removes
/// it again, so it only keeps generated prices in a plausible range.
const SYNTH_DAILY_VOL: f64 = 0.03;

/// Generates a synthetic price panel whose log returns follow a linear factor
/// model: `n_factors` shared standard-Gaussian factors plus idiosyncratic
/// Gaussian noise. With `n_factors = 0` the returns are i.i.d. Gaussian.
///
/// `n_days` counts return observations; the panel has `n_days + 1` dates, so
/// Q = n_days / n_assets. Per-asset factor loadings are drawn uniformly from
/// [0.8, 1.2] x `factor_loadings_scale`. Deterministic for a fixed argument
/// tuple.
pub fn synthesize_panel(
    seed: u64,
    n_assets: usize,
    n_days: usize,
    n_factors: usize,
    factor_loadings_scale: f64,
) -> Result<PricePanel> {
    if n_assets < 2 {
        return Err(Error::Domain("need at least 2 assets".into()));
    }
    if n_days < 2 {
        return Err(Error::Domain("need at least 2 return days".into()));
    }
    if n_factors > 0 && (!factor_loadings_scale.is_finite() || factor_loadings_scale <= 0.0) {
        return Err(Error::Domain(format!(
            "factor loading scale must be positive, got {factor_loadings_scale}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;

    let mut loadings = vec![0.0_f64; n_assets * n_factors];
    for cell in loadings.iter_mut() {
        *cell = factor_loadings_scale * rng.random_range(0.8..1.2);
    }

    let start = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    let mut dates = Vec::with_capacity(n_days + 1);
    let mut d = start;
    for _ in 0..=n_days {
        dates.push(d);
        d = d.succ_opt().expect("date overflow");
    }

    let mut prices = vec![None; n_assets * (n_days + 1)];
    for i in 0..n_assets {
        prices[i * (n_days + 1)] = Some(100.0);
    }
    let mut factors = vec![0.0_f64; n_factors];
    for t in 0..n_days {
        for f in factors.iter_mut() {
            *f = normal.sample(&mut rng);
        }
        for i in 0..n_assets {
            let mut shock: f64 = normal.sample(&mut rng);
            for (f, factor) in factors.iter().enumerate() {
                shock += loadings[i * n_factors + f] * factor;
            }
            let prev = prices[i * (n_days + 1) + t].expect("previous price present");
            prices[i * (n_days + 1) + t + 1] = Some(prev * (SYNTH_DAILY_VOL * shock).exp());
        }
    }

    let asset_ids = (0..n_assets).map(|i| format!("SYN{i:03}")).collect();
    PricePanel::new(asset_ids, dates, prices)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn load_single_asset_three_days() {
        let csv =
            "date,asset_id,close\n2019-01-01,BTC,100\n2019-01-02,BTC,101\n2019-01-03,BTC,99.5\n";
        let panel = load_price_panel(csv.as_bytes()).unwrap();
        assert_eq!(panel.n_assets(), 1);
        assert_eq!(panel.n_dates(), 3);
        assert_eq!(panel.n_missing(), 0);
        assert_eq!(panel.price(0, 2), Some(99.5));
    }

    #[test]
    fn load_two_assets_one_missing_middle_date() {
        let csv = "date,asset_id,close\n\
                   2019-01-01,BTC,100\n2019-01-02,BTC,101\n2019-01-03,BTC,99\n\
                   2019-01-01,ETH,10\n2019-01-03,ETH,11\n";
        let panel = load_price_panel(csv.as_bytes()).unwrap();
        assert_eq!(panel.n_assets(), 2);
        assert_eq!(panel.n_dates(), 3);
        assert_eq!(panel.n_missing(), 1);
        assert_eq!(panel.price(1, 1), None);
    }

    #[test]
    fn load_rejects_non_positive_close() {
        let csv = "date,asset_id,close\n2019-01-01,BTC,-1.0\n";
        let err = load_price_panel(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "got {err:?}");
    }

    #[test]
    fn load_reports_line_number_on_malformed_row() {
        let csv = "date,asset_id,close\n2019-01-01,BTC,100\nnot-a-date,BTC,100\n";
        let err = load_price_panel(csv.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_cell() {
        let csv = "date,asset_id,close\n2019-01-01,BTC,100\n2019-01-01,BTC,101\n";
        let err = load_price_panel(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "got {err:?}");
    }

    #[test]
    fn load_rejects_wrong_header() {
        let csv = "day,asset,price\n2019-01-01,BTC,100\n";
        let err = load_price_panel(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "got {err:?}");
    }

    /// Brute-force oracle: re-scan each asset row for gaps and compare with
    /// the filter's retained set.
    #[test]
    fn filter_complete_matches_scan_oracle() {
        let n_assets = 10;
        let n_dates = 8;
        let start = date("2019-01-01");
        let dates: Vec<NaiveDate> = (0..n_dates)
            .map(|t| start + chrono::Days::new(t as u64))
            .collect();
        let asset_ids: Vec<String> = (0..n_assets).map(|i| format!("A{i}")).collect();
        let mut prices: Vec<Option<f64>> = (0..n_assets * n_dates)
            .map(|k| Some(1.0 + k as f64))
            .collect();
        // Punch holes in three rows.
        prices[2 * n_dates + 3] = None;
        prices[5 * n_dates] = None;
        prices[9 * n_dates + 7] = None;
        let panel = PricePanel::new(asset_ids.clone(), dates.clone(), prices.clone()).unwrap();

        let filtered = filter_complete(&panel, dates[0], dates[n_dates - 1]).unwrap();
        assert_eq!(filtered.n_assets(), 7);

        let oracle: Vec<String> = (0..n_assets)
            .filter(|&i| (0..n_dates).all(|t| prices[i * n_dates + t].is_some()))
            .map(|i| asset_ids[i].clone())
            .collect();
        assert_eq!(filtered.asset_ids(), oracle.as_slice());
    }

    /// The headline data shape: 200 assets, 54 with gaps, 146 retained.
    #[test]
    fn filter_complete_keeps_146_of_200() {
        let n_assets = 200;
        let panel = synthesize_panel(6, n_assets, 30, 0, 0.0).unwrap();
        let n_dates = panel.n_dates();
        let mut prices: Vec<Option<f64>> = (0..n_assets)
            .flat_map(|i| (0..n_dates).map(move |t| (i, t)))
            .map(|(i, t)| panel.price(i, t))
            .collect();
        for i in 0..54 {
            // Spread the gaps over assets 3, 6, 9, ... and varying dates.
            prices[(3 * i + 2) * n_dates + (i % n_dates)] = None;
        }
        let gappy =
            PricePanel::new(panel.asset_ids().to_vec(), panel.dates().to_vec(), prices).unwrap();
        let filtered =
            filter_complete(&gappy, gappy.dates()[0], *gappy.dates().last().unwrap()).unwrap();
        assert_eq!(filtered.n_assets(), 146);
    }

    /// Three overlapping windows across a year each span 125 calendar dates
    /// inclusively (May 5 is day-of-year 125, and so on).
    #[test]
    fn overlapping_windows_span_125_dates() {
        let panel = synthesize_panel(8, 3, 364, 0, 0.0).unwrap(); // all of 2019
        for (start, end) in [
            ("2019-01-01", "2019-05-05"),
            ("2019-05-01", "2019-09-02"),
            ("2019-08-29", "2019-12-31"),
        ] {
            let s = slice_window(&panel, date(start), date(end)).unwrap();
            assert_eq!(s.n_dates(), 125, "{start}..{end}");
        }
    }

    #[test]
    fn filter_complete_is_identity_when_all_complete() {
        let panel = synthesize_panel(3, 4, 5, 0, 0.0).unwrap();
        let f = filter_complete(&panel, panel.dates()[0], *panel.dates().last().unwrap()).unwrap();
        assert_eq!(f, panel);
    }

    #[test]
    fn filter_complete_is_idempotent() {
        let csv = "date,asset_id,close\n\
                   2019-01-01,BTC,100\n2019-01-02,BTC,101\n\
                   2019-01-01,ETH,10\n";
        let panel = load_price_panel(csv.as_bytes()).unwrap();
        let start = date("2019-01-01");
        let end = date("2019-01-02");
        let once = filter_complete(&panel, start, end).unwrap();
        let twice = filter_complete(&once, start, end).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.n_assets(), 1);
    }

    #[test]
    fn filter_complete_errors_when_nothing_survives() {
        let csv = "date,asset_id,close\n2019-01-01,BTC,100\n2019-01-02,ETH,10\n";
        let panel = load_price_panel(csv.as_bytes()).unwrap();
        let err = filter_complete(&panel, date("2019-01-01"), date("2019-01-02")).unwrap_err();
        assert!(matches!(err, Error::EmptyPanel(_)), "got {err:?}");
    }

    #[test]
    fn slice_window_inclusive_and_idempotent() {
        let panel = synthesize_panel(1, 3, 9, 0, 0.0).unwrap(); // 10 dates
        let start = panel.dates()[2];
        let end = panel.dates()[6];
        let sliced = slice_window(&panel, start, end).unwrap();
        assert_eq!(sliced.n_dates(), 5);
        assert_eq!(sliced.dates()[0], start);
        assert_eq!(*sliced.dates().last().unwrap(), end);
        let again = slice_window(&sliced, start, end).unwrap();
        assert_eq!(sliced, again);
    }

    #[test]
    fn slice_window_full_range_is_identity() {
        let panel = synthesize_panel(2, 3, 5, 0, 0.0).unwrap();
        let s = slice_window(&panel, panel.dates()[0], *panel.dates().last().unwrap()).unwrap();
        assert_eq!(s, panel);
    }

    #[test]
    fn slice_window_two_date_range() {
        let panel = synthesize_panel(2, 3, 5, 0, 0.0).unwrap();
        let s = slice_window(&panel, panel.dates()[0], panel.dates()[1]).unwrap();
        assert_eq!(s.n_dates(), 2);
    }

    #[test]
    fn slice_window_rejects_out_of_range() {
        let panel = synthesize_panel(2, 3, 5, 0, 0.0).unwrap();
        let before = panel.dates()[0].pred_opt().unwrap();
        let err = slice_window(&panel, before, panel.dates()[3]).unwrap_err();
        assert!(matches!(err, Error::Range(_)), "got {err:?}");
        let err = slice_window(&panel, panel.dates()[3], panel.dates()[1]).unwrap_err();
        assert!(matches!(err, Error::Range(_)), "got {err:?}");
    }

    #[test]
    fn ranking_snapshot_basic_and_duplicate_rank() {
        let csv = "asset_id,rank\nBTC,1\nETH,2\n";
        let snap = load_ranking_snapshot(csv.as_bytes(), date("2019-12-29")).unwrap();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap.rank_of("BTC"), Some(1));
        assert_eq!(snap.rank_of("XRP"), None);

        let dup = "asset_id,rank\nBTC,1\nETH,1\n";
        let err = load_ranking_snapshot(dup.as_bytes(), date("2019-12-29")).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "got {err:?}");
    }

    /// Round-trip oracle: a 200-row snapshot survives write-then-read intact.
    #[test]
    fn ranking_snapshot_round_trip() {
        let pairs: Vec<(String, u32)> = (1..=200)
            .map(|r| (format!("COIN{r:03}"), r as u32))
            .collect();
        let snap = RankingSnapshot::new(date("2019-12-29"), pairs).unwrap();
        let mut buf = Vec::new();
        snap.write_csv(&mut buf).unwrap();
        let back = load_ranking_snapshot(buf.as_slice(), date("2019-12-29")).unwrap();
        assert_eq!(snap, back);
    }

    #[test]
    fn synthesize_panel_is_deterministic_and_valid() {
        let a = synthesize_panel(7, 20, 50, 2, 0.8).unwrap();
        let b = synthesize_panel(7, 20, 50, 2, 0.8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_assets(), 20);
        assert_eq!(a.n_dates(), 51);
        assert!(a.is_complete());
        for i in 0..a.n_assets() {
            for t in 0..a.n_dates() {
                assert!(a.price(i, t).unwrap() > 0.0);
            }
        }
        let c = synthesize_panel(8, 20, 50, 2, 0.8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthesize_panel_rejects_bad_args() {
        assert!(synthesize_panel(0, 1, 50, 0, 0.0).is_err());
        assert!(synthesize_panel(0, 5, 1, 0, 0.0).is_err());
        assert!(synthesize_panel(0, 5, 50, 1, -0.5).is_err());
    }

    #[test]
    fn panel_csv_round_trip_is_exact() {
        let panel = synthesize_panel(42, 5, 20, 1, 0.7).unwrap();
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let back = load_price_panel(buf.as_slice()).unwrap();
        assert_eq!(panel, back);
    }

    #[test]
    fn select_assets_preserves_dates_and_order() {
        let panel = synthesize_panel(4, 6, 5, 0, 0.0).unwrap();
        let sub = panel.select_assets(&[4, 1]).unwrap();
        assert_eq!(sub.n_assets(), 2);
        assert_eq!(sub.asset_ids()[0], panel.asset_ids()[4]);
        assert_eq!(sub.asset_ids()[1], panel.asset_ids()[1]);
        assert_eq!(sub.dates(), panel.dates());
        assert_eq!(sub.price(0, 3), panel.price(4, 3));
        assert!(panel.select_assets(&[]).is_err());
        assert!(panel.select_assets(&[9]).is_err());
    }

    #[test]
    fn analysis_window_describe_and_q_factor() {
        let panel = synthesize_panel(1, 4, 10, 0, 0.0).unwrap();
        let w = AnalysisWindow::describe(&panel).unwrap();
        assert_eq!(w.n_assets, 4);
        assert_eq!(w.n_days, 10);
        assert!((w.q_factor() - 2.5).abs() < 1e-15);
    }
}
