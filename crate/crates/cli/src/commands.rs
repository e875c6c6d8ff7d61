use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{DateTime, Utc};
use infoveil_core::ingest::{self, IndicatorSchema};
use infoveil_core::leadlag::PolicyEvent;
use infoveil_core::report::{self, ChangeParams, LagSpec, LeadLagParams};
use infoveil_core::{fixtures, Catalog, IndicatorSeries, Snapshot, SnapshotStore};
use infoveil_service::{alert_report, ServiceConfig, Watchlist};
use infoveil_trends::{pull_snapshot, ClientConfig, MockData, MockServer, PullPlan, TrendsClient};

use crate::error::CliError;
use crate::output::emit;
use crate::{Command, FixturesCommand, IngestArgs, ReportArgs, ServeArgs};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(args) => ingest(args),
        Command::Catalog(r) => {
            let catalog = Catalog::load(r.catalog.as_deref())?;
            emit(&report::catalog_report(&catalog), "catalog", r.format, r.out.as_deref())
        }
        Command::Trends {
            report: r,
            query,
            geo,
            granularity,
            window,
        } => {
            let (s, c) = open(&r)?;
            let rep = report::trends_report(&s, &c, &query, &geo, granularity, window)?;
            emit(&rep, "trends", r.format, r.out.as_deref())
        }
        Command::Panel { report: r, window } => {
            let (s, _) = open(&r)?;
            emit(&report::panel_report(&s, window)?, "panel", r.format, r.out.as_deref())
        }
        Command::Change {
            report: r,
            from,
            to,
            cap,
            no_cap,
            geo,
        } => {
            let (s, c) = open(&r)?;
            let params = ChangeParams {
                from,
                to,
                cap: (!no_cap).then_some(cap),
            };
            emit(&report::change_report(&s, &c, &geo, &params)?, "change", r.format, r.out.as_deref())
        }
        Command::Corr {
            report: r,
            keep_incomplete,
        } => {
            let (s, _) = open(&r)?;
            let rep = report::correlation_report(&s, !keep_incomplete)?;
            emit(&rep, "correlation", r.format, r.out.as_deref())
        }
        Command::Pca {
            report: r,
            k,
            threshold,
        } => {
            let (s, _) = open(&r)?;
            emit(&report::pca_report(&s, k, threshold)?, "pca", r.format, r.out.as_deref())
        }
        Command::Interpret {
            report: r,
            component,
            threshold,
            n_top,
            label,
        } => {
            let (s, _) = open(&r)?;
            let rep = report::interpret_report(&s, component, threshold, n_top, label)?;
            emit(&rep, "interpret", r.format, r.out.as_deref())
        }
        Command::Choropleth {
            report: r,
            query,
            window,
        } => {
            let (s, c) = open(&r)?;
            let rep = report::choropleth_report(&s, &c, &query, window)?;
            emit(&rep, "choropleth", r.format, r.out.as_deref())
        }
        Command::Leadlag {
            report: r,
            query,
            indicator,
            lag,
            lag_min,
            lag_max,
            objective,
            baseline,
        } => {
            let (s, c) = open(&r)?;
            let lags = match (lag, lag_min, lag_max) {
                (Some(l), _, _) => LagSpec::Single(l),
                (None, Some(lo), Some(hi)) => LagSpec::Range(lo, hi),
                _ => LagSpec::default(),
            };
            let params = LeadLagParams {
                query_id: query,
                indicator,
                lags,
                objective,
                baseline,
            };
            emit(&report::leadlag_report(&s, &c, &params)?, "leadlag", r.format, r.out.as_deref())
        }
        Command::Leadtime {
            report: r,
            query,
            threshold,
            events,
        } => {
            let (s, c) = open(&r)?;
            let events = PolicyEvent::load(events.as_deref())?;
            let rep = report::leadtime_report(&s, &c, &query, threshold, &events)?;
            emit(&rep, "leadtime", r.format, r.out.as_deref())
        }
        Command::Alerts { report: r, watchlist } => {
            let (s, c) = open(&r)?;
            let list = read_watchlist(&watchlist, &c)?;
            emit(&alert_report(&s, &list), "alerts", r.format, r.out.as_deref())
        }
        Command::Serve(args) => serve(args),
        Command::Fixtures(FixturesCommand::Gen { seed, out, commit_to }) => fixtures_gen(seed, &out, commit_to.as_deref()),
        Command::Mock { bind, seed } => runtime()?.block_on(async {
            let data = MockData::from_snapshot(&fixtures::reference_snapshot(seed), Catalog::bundled());
            let server = MockServer::bind(data, bind)
                .await
                .map_err(CliError::io(format!("binding {bind}")))?;
            println!("{}", server.base_url());
            wait_for_ctrl_c().await?;
            server.shutdown().await;
            Ok(())
        }),
    }
}

/// Resolves the snapshot named by `--snapshot` (a file or a hash in the
/// store) or the store's HEAD, plus the catalog.
fn open(r: &ReportArgs) -> Result<(Snapshot, Catalog), CliError> {
    let catalog = Catalog::load(r.catalog.as_deref())?;
    let snapshot = match &r.snapshot {
        Some(name) if Path::new(name).is_file() => {
            let bytes = std::fs::read(name).map_err(CliError::io(format!("reading {name}")))?;
            Snapshot::from_json(&bytes).map_err(|e| CliError::SnapshotFile {
                path: name.into(),
                reason: e.to_string(),
            })?
        }
        Some(hash) => SnapshotStore::open(&r.store)?.load(hash)?,
        None => SnapshotStore::open(&r.store)?.load_head()?,
    };
    Ok((snapshot, catalog))
}

fn read_watchlist(path: &Path, catalog: &Catalog) -> Result<Watchlist, CliError> {
    let bytes = std::fs::read(path).map_err(CliError::io(format!("reading {}", path.display())))?;
    let list: Watchlist = serde_json::from_slice(&bytes).map_err(|e| infoveil_service::WatchlistError::InvalidEntry {
        index: 0,
        reason: format!("{}: {e}", path.display()),
    })?;
    Watchlist::validate(&list.entries, catalog)?;
    Ok(list)
}

fn indicators(args: &IngestArgs) -> Result<Vec<IndicatorSeries>, CliError> {
    let unemployment = match &args.unemployment {
        Some(p) => ingest::load_indicator_csv(p, IndicatorSchema::UnemploymentWeekly)?,
        None => ingest::bundled_unemployment(),
    };
    let medicaid = match &args.medicaid {
        Some(p) => ingest::load_indicator_csv(p, IndicatorSchema::MedicaidMonthly)?,
        None => ingest::bundled_medicaid(),
    };
    Ok(vec![unemployment, medicaid])
}

fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let catalog = Catalog::load(args.catalog.as_deref())?;
    let indicators = indicators(&args)?;
    let snapshot = match (&args.csv, &args.source) {
        (Some(csv), _) => {
            let created_at = match &args.created_at {
                Some(t) => t
                    .parse::<DateTime<Utc>>()
                    .map_err(|e| CliError::Usage(format!("--created-at {t:?}: {e}")))?,
                None => Utc::now(),
            };
            let table = ingest::load_rsv_csv(csv, &catalog)?;
            ingest::snapshot_from_table(table, indicators, &catalog, created_at)?
        }
        (None, Some(url)) => {
            let mut config = ClientConfig::new(url.clone());
            config.requests_per_minute = args.rpm;
            let client = TrendsClient::new(config)?;
            let plan = PullPlan {
                national_window: args.national_window,
                granularity: args.granularity,
                state_window: args.state_window,
                state_weekly_queries: args.state_weekly.clone(),
            };
            runtime()?.block_on(pull_snapshot(&client, &catalog, &plan, indicators))?
        }
        (None, None) => return Err(CliError::Usage("give --csv or --source".into())),
    };
    let store = SnapshotStore::open(&args.store)?;
    let hash = if args.no_commit {
        store.save(&snapshot)?
    } else {
        store.save_and_commit(&snapshot)?
    };
    println!("{hash}");
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut config = ServiceConfig::load(args.config.as_deref())?;
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if let Some(store) = args.store {
        config.snapshot_dir = store;
    }
    if let Some(source) = args.source {
        config.trends_base_url = Some(source);
    }
    if let Some(hours) = args.refresh_hours {
        config.refresh_hours = hours;
    }
    runtime()?.block_on(async {
        let handle = infoveil_service::start(&config).await?;
        println!("{}", handle.base_url());
        wait_for_ctrl_c().await?;
        handle.shutdown().await;
        Ok(())
    })
}

fn fixtures_gen(seed: u64, out: &Path, commit_to: Option<&Path>) -> Result<(), CliError> {
    let snapshot = fixtures::reference_snapshot(seed);
    std::fs::create_dir_all(out).map_err(CliError::io(format!("creating {}", out.display())))?;
    let create = |name: &str| {
        let path = out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(CliError::io(format!("creating {}", path.display())))
    };
    ingest::write_rsv_csv(&ingest::table_from_snapshot(&snapshot), create("rsv.csv")?)?;
    for (schema, file) in [
        (IndicatorSchema::UnemploymentWeekly, "unemployment.csv"),
        (IndicatorSchema::MedicaidMonthly, "medicaid.csv"),
    ] {
        if let Some(series) = snapshot.indicator(schema.series_name()) {
            ingest::write_indicator_csv(series, schema, create(file)?)?;
        }
    }
    let path = out.join("snapshot.json");
    std::fs::write(&path, snapshot.canonical_bytes()).map_err(CliError::io(format!("writing {}", path.display())))?;
    if let Some(dir) = commit_to {
        SnapshotStore::open(dir)?.save_and_commit(&snapshot)?;
    }
    println!("{}", snapshot.content_hash());
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(CliError::io("starting the async runtime"))
}

async fn wait_for_ctrl_c() -> Result<(), CliError> {
    tokio::signal::ctrl_c().await.map_err(CliError::io("waiting for ctrl-c"))
}
