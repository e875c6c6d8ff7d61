//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{Datelike, Days, NaiveDate};
use infoveil_core::analytics::{pca, pearson_matrix, percent_change_values, ChangeOutcome, MissingPolicy};
use infoveil_core::catalog::INCOMPLETE_STATE_QUERIES;
use infoveil_core::fixtures::{self, reference_snapshot};
use infoveil_core::leadlag::{best_lag, seasonal_adjust, LagObjective, PolicyEvent};
use infoveil_core::report::{self, ChangeParams, ChangeStatus};
use infoveil_core::rsv::{quantize_rsv, quantize_shares, RawSharePanel, ShareAxis};
use infoveil_core::{geo, Catalog, DateWindow, Granularity, SnapshotStore, StatePanel, ValueSeries};
use infoveil_service::{serve_api, AppState, WatchlistStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn panel_window() -> DateWindow {
    fixtures::state_window()
}

fn panel_from(columns: &[Vec<Option<f64>>]) -> StatePanel {
    let n = columns[0].len();
    let states: Vec<String> = geo::state_codes().take(n).map(String::from).collect();
    let ids = (0..columns.len()).map(|j| format!("q{j}")).collect();
    StatePanel::from_columns(panel_window(), states, ids, columns).expect("valid panel")
}

// ---------------------------------------------------------------- correlation

/// Direct formula over the pairwise-complete rows.
fn oracle_r(x: &[Option<f64>], y: &[Option<f64>]) -> (Option<f64>, usize) {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    let n = pairs.len();
    if n < 2 {
        return (None, n);
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return (None, n);
    }
    (Some(sxy / (sxx.sqrt() * syy.sqrt())), n)
}

fn correlation_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut missing = 0usize;
    for trial in 0..100 {
        let cols: Vec<Vec<Option<f64>>> = (0..30)
            .map(|_| {
                (0..51)
                    .map(|_| (!rng.random_bool(0.05)).then(|| rng.random_range(0.0..100.0)))
                    .collect()
            })
            .collect();
        missing += cols.iter().flatten().filter(|v| v.is_none()).count();
        let m = pearson_matrix(&panel_from(&cols), MissingPolicy::PairwiseComplete).map_err(|e| e.to_string())?;
        for a in 0..30 {
            for b in 0..30 {
                let (r, n) = oracle_r(&cols[a], &cols[b]);
                ensure(m.n_pairs[a][b] == n, || format!("trial {trial} ({a},{b}): n {} vs {n}", m.n_pairs[a][b]))?;
                match (m.r[a][b], r) {
                    (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                    (None, None) => {}
                    (x, y) => return Err(format!("trial {trial} ({a},{b}): {x:?} vs {y:?}")),
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max |Δr| = {worst:e}"))?;
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!(
        "100 panels 51x30, {:.1}% missing, max |Δr| = {worst:.1e}, {took:.2?}",
        missing as f64 / (100.0 * 51.0 * 30.0) * 100.0
    ))
}

// ---------------------------------------------------------------- pca

fn zscore(col: &[f64]) -> Vec<f64> {
    let n = col.len() as f64;
    let m = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    col.iter().map(|v| (v - m) / sd).collect()
}

fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Every eigenpair of a symmetric matrix by power iteration with deflation,
/// each polished by Rayleigh-quotient iteration; largest eigenvalue first.
fn eigen_oracle(c: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let p = c.len();
    let mut a = c.to_vec();
    let mut out = Vec::with_capacity(p);
    for comp in 0..p {
        let mut v: Vec<f64> = (0..p).map(|i| 1.0 + ((i + 3 * comp) as f64 * 0.7).sin()).collect();
        normalize(&mut v);
        for _ in 0..200 {
            v = mat_vec(&a, &v);
            normalize(&mut v);
        }
        let mut mu = dot(&v, &mat_vec(&a, &v));
        for _ in 0..30 {
            let av = mat_vec(&a, &v);
            let residual: f64 = av.iter().zip(&v).map(|(x, y)| (x - mu * y).powi(2)).sum::<f64>().sqrt();
            if residual < 1e-14 {
                break;
            }
            let shifted: Vec<Vec<f64>> = a
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().enumerate().map(|(j, x)| if i == j { x - mu } else { *x }).collect())
                .collect();
            match solve(shifted, v.clone()) {
                Some(w) if w.iter().all(|x| x.is_finite()) => {
                    v = w;
                    normalize(&mut v);
                    mu = dot(&v, &mat_vec(&a, &v));
                }
                _ => break,
            }
        }
        for i in 0..p {
            for j in 0..p {
                a[i][j] -= mu * v[i] * v[j];
            }
        }
        out.push((mu, v));
    }
    out.sort_by(|x, y| y.0.total_cmp(&x.0));
    out
}

fn pca_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_l, mut worst_s, mut worst_v, mut worst_rec) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for trial in 0..100 {
        let (n, p) = if trial == 0 {
            (51, 30)
        } else {
            let n = rng.random_range(12..=51);
            (n, rng.random_range(3..=30.min(n - 2)))
        };
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| f64::from(rng.random_range(0u8..=100))).collect())
            .collect();
        let panel = panel_from(&cols.iter().map(|c| c.iter().map(|v| Some(*v)).collect()).collect::<Vec<_>>());
        let result = pca(&panel, p).map_err(|e| format!("trial {trial}: {e}"))?;

        let z: Vec<Vec<f64>> = cols.iter().map(|c| zscore(c)).collect();
        let corr: Vec<Vec<f64>> = (0..p)
            .map(|a| (0..p).map(|b| dot(&z[a], &z[b]) / (n as f64 - 1.0)).collect())
            .collect();
        let oracle = eigen_oracle(&corr);
        let total: f64 = oracle.iter().map(|e| e.0).sum();
        for (k, (comp, (lambda, v))) in result.components.iter().zip(&oracle).enumerate() {
            let sign = dot(&comp.loadings, v).signum();
            let largest = comp.loadings.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            ensure(largest > 0.0, || format!("trial {trial} component {k}: largest loading {largest} not positive"))?;
            for (x, y) in comp.loadings.iter().zip(v) {
                worst_l = worst_l.max((x - sign * y).abs());
            }
            for i in 0..n {
                let s: f64 = (0..p).map(|j| z[j][i] * v[j]).sum::<f64>() * sign;
                worst_s = worst_s.max((comp.scores[i] - s).abs());
            }
            worst_v = worst_v.max((comp.explained_variance_ratio - lambda / total).abs());
        }
        for i in 0..n {
            for (j, zj) in z.iter().enumerate() {
                let rebuilt: f64 = result.components.iter().map(|c| c.scores[i] * c.loadings[j]).sum();
                worst_rec = worst_rec.max((rebuilt - zj[i]).abs());
            }
        }
    }
    for (what, w) in [
        ("loading", worst_l),
        ("score", worst_s),
        ("variance ratio", worst_v),
        ("reconstruction", worst_rec),
    ] {
        ensure(w <= 1e-6, || format!("max {what} error {w:e}"))?;
    }
    let took = within(start, Duration::from_secs(30))?;
    Ok(format!(
        "100 panels up to 51x30, max error loading {worst_l:.1e} score {worst_s:.1e} ratio {worst_v:.1e} reconstruction {worst_rec:.1e}, {took:.2?}"
    ))
}

// ---------------------------------------------------------------- rsv

fn rsv_quantizer() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let len = rng.random_range(1..=60);
        let counts: Vec<f64> = (0..len)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..5000.0) })
            .collect();
        let totals: Vec<f64> = (0..len).map(|_| rng.random_range(1000.0..1e6)).collect();
        let keys: Vec<String> = (0..len).map(|i| format!("k{i}")).collect();
        let base = quantize_rsv(&RawSharePanel::from_counts(ShareAxis::TimeWithinGeo, &keys, &counts, &totals).unwrap())
            .map_err(|e| e.to_string())?;
        let values: Vec<u8> = base.iter().map(|(_, v)| *v).collect();
        let any_positive = counts.iter().any(|c| *c > 0.0);
        let max = values.iter().copied().max().unwrap_or(0);
        ensure(max == if any_positive { 100 } else { 0 }, || format!("trial {trial}: max {max}"))?;
        let c = rng.random_range(1e-3..1e3);
        let scaled: Vec<f64> = counts.iter().map(|x| x * c).collect();
        let again = quantize_rsv(&RawSharePanel::from_counts(ShareAxis::TimeWithinGeo, &keys, &scaled, &totals).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(again == base, || format!("trial {trial}: scaling by {c} changed the RSVs"))?;
    }
    let worked = quantize_rsv(&RawSharePanel::from_counts(ShareAxis::TimeWithinGeo, &["a", "b"], &[3.0, 1.0], &[300.0, 50.0]).unwrap())
        .map_err(|e| e.to_string())?;
    let worked: Vec<u8> = worked.into_iter().map(|(_, v)| v).collect();
    ensure(worked == [50, 100], || format!("worked example gave {worked:?}"))?;
    ensure(quantize_shares(&[0.0, 0.0]) == [0, 0], || "all-zero panel".into())?;
    Ok("1000 panels: max 100 and scale invariance hold; [3,1]/[300,50] -> [50,100]".into())
}

// ---------------------------------------------------------------- fixture regressions

fn panel_regression() -> Check {
    let s = reference_snapshot(fixtures::DEFAULT_SEED);
    ensure(s.state_window.n_queries() == 39, || format!("{} queries", s.state_window.n_queries()))?;
    let r = report::correlation_report(&s, true).map_err(|e| e.to_string())?;
    let dropped: BTreeSet<&str> = r.dropped.iter().map(String::as_str).collect();
    let named: BTreeSet<&str> = INCOMPLETE_STATE_QUERIES.iter().copied().collect();
    ensure(r.query_ids.len() == 30, || format!("{} retained", r.query_ids.len()))?;
    ensure(dropped == named, || format!("dropped {dropped:?}"))?;
    Ok(format!("39 -> {} retained, dropped the 9 named queries", r.query_ids.len()))
}

fn typology() -> Check {
    let s = reference_snapshot(fixtures::DEFAULT_SEED);
    let r = report::interpret_report(&s, 1, 0.2, 5, None).map_err(|e| e.to_string())?;
    let salient: BTreeSet<&str> = r.salient.iter().map(|l| l.query_id.as_str()).collect();
    let planted: BTreeSet<&str> = fixtures::TYPOLOGY_POSITIVE
        .iter()
        .chain(&fixtures::TYPOLOGY_NEGATIVE)
        .copied()
        .collect();
    ensure(salient == planted, || format!("salient {salient:?}"))?;
    let top: Vec<&str> = r.top_states.iter().map(|t| t.state.as_str()).collect();
    ensure(top == fixtures::TYPOLOGY_TOP_STATES, || format!("top states {top:?}"))?;
    Ok(format!("salient set = planted 5, top states {}", top.join(" ")))
}

fn weekly_series(start: NaiveDate, values: &[f64]) -> ValueSeries {
    let points = values
        .iter()
        .enumerate()
        .map(|(i, v)| (start + Days::new(7 * i as u64), *v))
        .collect();
    ValueSeries::new(Granularity::Weekly, points).unwrap()
}

fn lag_recovery() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let (n, pad, phi) = (150usize, 8usize, 0.6);
    let origin = NaiveDate::from_ymd_opt(2016, 1, 3).unwrap();
    let mut hits = 0;
    for _ in 0..100 {
        let lag = rng.random_range(-8i64..=8);
        let mut x = vec![0.0; n + 2 * pad];
        for t in 1..x.len() {
            x[t] = phi * x[t - 1] + gauss.sample(&mut rng);
        }
        let query = &x[pad..pad + n];
        let mean = query.iter().sum::<f64>() / n as f64;
        let sd = (query.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        // indicator(t) = query(t - lag) + noise
        let indicator: Vec<f64> = (pad..pad + n)
            .map(|t| x[(t as i64 - lag) as usize] + 0.25 * sd * gauss.sample(&mut rng))
            .collect();
        let start_date = origin + Days::new(7 * pad as u64);
        let best = best_lag(
            &weekly_series(start_date, query),
            &weekly_series(start_date, &indicator),
            -8..=8,
            LagObjective::Signed,
        )
        .map_err(|e| e.to_string())?;
        hits += usize::from(best.lag == lag);
    }
    ensure(hits >= 95, || format!("recovered {hits}/100"))?;
    let took = within(start, Duration::from_secs(20))?;
    Ok(format!("recovered {hits}/100 planted lags (AR(1), n=150, noise 25%), {took:.2?}"))
}

fn season_of(sunday: NaiveDate) -> u32 {
    (sunday + Days::new(3)).iso_week().week()
}

fn seasonal() -> Check {
    let pattern = |w: u32| {
        let w = f64::from(w.min(52));
        let x = std::f64::consts::TAU * w / 52.0;
        12.0 * x.sin() + 5.0 * (2.0 * x).cos() + 2.0 * (3.0 * x).sin()
    };
    let mean = (1..=52).map(pattern).sum::<f64>() / 52.0;
    let s = |w: u32| pattern(w) - mean;
    let first = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap();
    let baseline = DateWindow::new(first, NaiveDate::from_ymd_opt(2019, 12, 28).unwrap()).unwrap();
    let dates: Vec<NaiveDate> = (0..234).map(|i| first + Days::new(7 * i)).collect();
    let eval: Vec<usize> = (0..dates.len()).filter(|&i| !baseline.contains(dates[i])).collect();
    ensure(eval.iter().any(|&i| season_of(dates[i]) == 53), || "fixture lacks an ISO week 53".into())?;

    let pure: Vec<f64> = dates.iter().map(|d| 40.0 + s(season_of(*d))).collect();
    let adjusted = seasonal_adjust(&weekly_series(first, &pure), &baseline).map_err(|e| e.to_string())?;
    let values = adjusted.values();
    let (lo, hi) = eval
        .iter()
        .map(|&i| values[i])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    ensure(hi - lo <= 1e-9, || format!("pure seasonal spread {:e}", hi - lo))?;

    let trend = |t: usize| 40.0 + 0.3 * t as f64 + 5.0 * (t as f64 / 9.0).sin();
    let mixed: Vec<f64> = dates
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let level = if baseline.contains(*d) { 40.0 } else { trend(i - eval[0]) };
            level + s(season_of(*d))
        })
        .collect();
    let adjusted = seasonal_adjust(&weekly_series(first, &mixed), &baseline).map_err(|e| e.to_string())?;
    let values = adjusted.values();
    let worst = eval
        .iter()
        .map(|&i| (values[i] - trend(i - eval[0])).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("trend recovery error {worst:e}"))?;
    Ok(format!("pure seasonal spread {:.1e}, trend recovery error {worst:.1e}", hi - lo))
}

fn lead_times() -> Check {
    let s = reference_snapshot(fixtures::DEFAULT_SEED);
    let c = Catalog::bundled();
    let events = PolicyEvent::bundled();
    let days = |query: &str| -> Result<Vec<Option<i64>>, String> {
        let r = report::leadtime_report(&s, c, query, 50, events).map_err(|e| e.to_string())?;
        Ok(r.events.iter().map(|e| e.lead_days).collect())
    };
    let sd = days(fixtures::CAPPED_QUERY)?;
    let mask = days(fixtures::ZERO_BASELINE_QUERY)?;
    let got = [sd[0], sd[1], sd[2], mask[3]];
    ensure(got == [Some(3), Some(5), Some(8), Some(12)], || format!("lead times {got:?}"))?;
    Ok("3, 5, 8 and 12 days against the four bundled events".into())
}

fn percent_change() -> Check {
    let s = reference_snapshot(fixtures::DEFAULT_SEED);
    let r = report::change_report(&s, Catalog::bundled(), "US", &ChangeParams::default()).map_err(|e| e.to_string())?;
    let row = |id: &str| r.rows.iter().find(|x| x.query_id == id).ok_or_else(|| format!("no row for {id}"));
    let mut got = Vec::new();
    for (id, _) in fixtures::PLANTED_DECLINES {
        got.push(row(id)?.percent_change);
    }
    ensure(got == [Some(-18.0), Some(-23.0), Some(-26.0)], || format!("declines {got:?}"))?;
    let capped = row(fixtures::CAPPED_QUERY)?;
    ensure(
        capped.status == ChangeStatus::Change && capped.percent_change == Some(10_000.0) && capped.capped,
        || format!("capped row {capped:?}"),
    )?;
    let direct = percent_change_values(&[1.0], &[150.0], Some(10_000.0)).map_err(|e| e.to_string())?;
    ensure(
        direct.outcome
            == ChangeOutcome::Change {
                percent: 10_000.0,
                capped: true,
            },
        || format!("150x gave {:?}", direct.outcome),
    )?;
    Ok("-18 / -23 / -26 exact; 150x rise reported as 10000 capped".into())
}

// ---------------------------------------------------------------- cli/api equivalence

fn canonical(v: &Value) -> String {
    // serde_json maps are ordered by key, so this is a canonical form
    serde_json::to_string(v).expect("json")
}

fn cli_json(store: &Path, args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_infoveil"))
        .args(args)
        .arg("--store")
        .arg(store)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: {e}"))
}

fn cli_api_equivalence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store_dir = dir.path().join("store");
    let store = SnapshotStore::open(&store_dir).map_err(|e| e.to_string())?;
    let snapshot = reference_snapshot(fixtures::DEFAULT_SEED);
    let hash = store.save_and_commit(&snapshot).map_err(|e| e.to_string())?;

    let watch_entries = json!([
        { "query_id": fixtures::ZERO_BASELINE_QUERY, "rule": { "kind": "threshold_cross", "value": 50 } },
        { "query_id": "medicaid", "geo": "US", "rule": { "kind": "percent_change_over", "window_weeks": 4, "threshold_percent": -10 } }
    ]);
    let watch_file = dir.path().join("watchlist.json");
    std::fs::write(&watch_file, json!({ "version": 1, "entries": watch_entries }).to_string()).map_err(|e| e.to_string())?;
    let watch_path = watch_file.to_str().unwrap().to_string();

    let cases: Vec<(&str, Vec<(&str, &str)>, Vec<&str>)> = vec![
        ("catalog", vec![], vec!["catalog"]),
        (
            "trends",
            vec![("query", "coronavirus-symptoms"), ("granularity", "weekly"), ("from", "2020-01-01"), ("to", "2020-03-31")],
            vec!["trends", "--query", "coronavirus-symptoms", "--granularity", "weekly", "--window", "2020-01-01..2020-03-31"],
        ),
        ("panel", vec![], vec!["panel"]),
        (
            "change",
            vec![("from_window", "2020-01"), ("to_window", "2020-03"), ("cap", "10000")],
            vec!["change", "--from", "2020-01", "--to", "2020-03", "--cap", "10000"],
        ),
        ("change", vec![("cap", "none")], vec!["change", "--no-cap"]),
        ("correlation", vec![], vec!["corr"]),
        ("correlation", vec![("drop_incomplete", "false")], vec!["corr", "--keep-incomplete"]),
        ("pca", vec![("k", "3"), ("threshold", "0.25")], vec!["pca", "--k", "3", "--threshold", "0.25"]),
        (
            "pca/1/interpret",
            vec![("threshold", "0.2"), ("n_top", "5"), ("label", "Economically vulnerable")],
            vec!["interpret", "--component", "1", "--threshold", "0.2", "--n-top", "5", "--label", "Economically vulnerable"],
        ),
        ("choropleth", vec![("query", "stimulus-check")], vec!["choropleth", "--query", "stimulus-check"]),
        (
            "leadlag",
            vec![("query", fixtures::UNEMPLOYMENT_QUERY), ("indicator", "unemployment_claims"), ("lag_min", "-8"), ("lag_max", "8")],
            vec!["leadlag", "--query", fixtures::UNEMPLOYMENT_QUERY, "--indicator", "unemployment_claims", "--lag-min", "-8", "--lag-max", "8"],
        ),
        (
            "leadlag",
            vec![
                ("query", fixtures::MEDICAID_QUERY),
                ("indicator", "medicaid_applications"),
                ("lag", "1"),
                ("baseline", "2016-01-01..2018-12-31"),
            ],
            vec![
                "leadlag",
                "--query",
                fixtures::MEDICAID_QUERY,
                "--indicator",
                "medicaid_applications",
                "--lag",
                "1",
                "--baseline",
                "2016-01-01..2018-12-31",
            ],
        ),
        (
            "events/leadtime",
            vec![("query", fixtures::CAPPED_QUERY), ("threshold", "50")],
            vec!["leadtime", "--query", fixtures::CAPPED_QUERY, "--threshold", "50"],
        ),
        ("alerts", vec![], vec!["alerts", "--watchlist", &watch_path]),
    ];

    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let state = AppState::new(
            store.clone(),
            Catalog::bundled().clone(),
            PolicyEvent::bundled().to_vec(),
            WatchlistStore::in_memory(),
        );
        let handle = serve_api(state, "127.0.0.1:0".parse().unwrap()).await.map_err(|e| e.to_string())?;
        let http = reqwest::Client::new();
        let base = handle.base_url();
        let put = http
            .put(format!("{base}/api/v1/watchlist"))
            .json(&json!({ "version": 0, "entries": watch_entries }))
            .send()
            .await
            .map_err(|e| e.to_string())?;
        ensure(put.status().is_success(), || format!("watchlist update returned {}", put.status()))?;

        let mut compared = 0;
        for (endpoint, query, args) in &cases {
            let resp = http
                .get(format!("{base}/api/v1/{endpoint}"))
                .query(query)
                .send()
                .await
                .map_err(|e| e.to_string())?;
            let status = resp.status();
            let body: Value = resp.json().await.map_err(|e| e.to_string())?;
            ensure(status.is_success(), || format!("{endpoint}: {status} {body}"))?;
            ensure(body["snapshot"] == hash.as_str(), || format!("{endpoint}: snapshot {}", body["snapshot"]))?;
            let cli = tokio::task::block_in_place(|| cli_json(&store_dir, args))?;
            ensure(canonical(&cli) == canonical(&body["data"]), || {
                format!("{endpoint} {query:?}: CLI and API payloads differ")
            })?;
            compared += 1;
        }
        handle.shutdown().await;
        Ok(format!("{compared} endpoint/parameter combinations byte-identical after canonical formatting"))
    })
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("correlation oracle equivalence", correlation_oracle),
        ("PCA oracle equivalence", pca_oracle),
        ("RSV quantizer", rsv_quantizer),
        ("39-query panel regression (39 -> 30)", panel_regression),
        ("planted-typology recovery", typology),
        ("injected-lag recovery", lag_recovery),
        ("seasonal adjustment", seasonal),
        ("lead-time regression", lead_times),
        ("percent change", percent_change),
        ("CLI/API equivalence", cli_api_equivalence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
