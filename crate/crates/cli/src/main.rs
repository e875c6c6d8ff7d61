//! `infoveil`: ingest, analyze, export and serve search-trend snapshots.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error or invalid parameter |
//! | 3 | invalid input file, catalog, events, watchlist or config |
//! | 4 | snapshot, query, geography or indicator not found |
//! | 5 | analysis cannot be computed on this data |
//! | 6 | upstream source failure or rate limit |
//! | 7 | filesystem error |
//! | 8 | cannot bind the service address |

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use infoveil_core::leadlag::LagObjective;
use infoveil_core::{DateWindow, Granularity};

mod commands;
mod error;
mod output;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "infoveil", version, about = "Search-trend infoveillance: snapshots, analytics and an HTTP API")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where reports are read from and written to.
#[derive(Debug, Args)]
struct ReportArgs {
    /// Snapshot store directory.
    #[arg(long, env = "INFOVEIL_SNAPSHOT_DIR", default_value = "snapshots")]
    store: PathBuf,
    /// Snapshot file or content hash; the store's HEAD otherwise.
    #[arg(long)]
    snapshot: Option<String>,
    /// Query catalog file; the bundled catalog otherwise.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Output directory; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Builds a snapshot from fixture files or a trends source and commits it.
    Ingest(IngestArgs),
    /// Lists the query catalog.
    Catalog(ReportArgs),
    /// One RSV series.
    Trends {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        query: String,
        #[arg(long, default_value = "US")]
        geo: String,
        #[arg(long)]
        granularity: Option<Granularity>,
        /// `YYYY-MM-DD..YYYY-MM-DD`, `YYYY-MM` or a single day.
        #[arg(long)]
        window: Option<DateWindow>,
    },
    /// The state x query panel.
    Panel {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        window: Option<DateWindow>,
    },
    /// Percent change of every query between two windows.
    Change {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long, default_value = "2020-01")]
        from: DateWindow,
        #[arg(long, default_value = "2020-03")]
        to: DateWindow,
        #[arg(long, default_value_t = infoveil_core::report::DEFAULT_CAP, conflicts_with = "no_cap")]
        cap: f64,
        /// Report uncapped changes.
        #[arg(long)]
        no_cap: bool,
        #[arg(long, default_value = "US")]
        geo: String,
    },
    /// Pairwise correlations across states.
    Corr {
        #[command(flatten)]
        report: ReportArgs,
        /// Keep queries with withheld states (pairwise-complete correlation).
        #[arg(long)]
        keep_incomplete: bool,
    },
    /// Principal components of the state panel.
    Pca {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long, default_value_t = infoveil_core::report::DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = infoveil_core::analytics::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Salient queries and top states of one component.
    Interpret {
        #[command(flatten)]
        report: ReportArgs,
        /// One-based component number.
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long, default_value_t = infoveil_core::analytics::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = infoveil_core::analytics::DEFAULT_N_TOP)]
        n_top: usize,
        #[arg(long)]
        label: Option<String>,
    },
    /// State values of one query over the panel window.
    Choropleth {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        query: String,
        #[arg(long)]
        window: Option<DateWindow>,
    },
    /// Lagged correlation between a query and an indicator.
    Leadlag {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        query: String,
        #[arg(long)]
        indicator: String,
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["lag_min", "lag_max"])]
        lag: Option<i64>,
        #[arg(long, allow_hyphen_values = true, requires = "lag_max")]
        lag_min: Option<i64>,
        #[arg(long, allow_hyphen_values = true, requires = "lag_min")]
        lag_max: Option<i64>,
        #[arg(long, default_value = "signed")]
        objective: LagObjective,
        /// Seasonal baseline window; no adjustment otherwise.
        #[arg(long)]
        baseline: Option<DateWindow>,
    },
    /// Days between a query's threshold crossing and each policy event.
    Leadtime {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = infoveil_core::leadlag::DEFAULT_LEAD_THRESHOLD, value_parser = clap::value_parser!(u8).range(0..=100))]
        threshold: u8,
        /// Events file (`name,date`); the bundled events otherwise.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Evaluates a watchlist file against a snapshot.
    Alerts {
        #[command(flatten)]
        report: ReportArgs,
        #[arg(long)]
        watchlist: PathBuf,
    },
    /// Runs the HTTP API and, with a source, the refresh worker.
    Serve(ServeArgs),
    /// Synthetic fixture data.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
    /// Serves fixture data over the trends wire protocol.
    Mock {
        #[arg(long, default_value = "127.0.0.1:8090")]
        bind: SocketAddr,
        #[arg(long, default_value_t = infoveil_core::fixtures::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, env = "INFOVEIL_SNAPSHOT_DIR", default_value = "snapshots")]
    store: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// RSV fixture file.
    #[arg(long, required_unless_present = "source")]
    csv: Option<PathBuf>,
    /// Weekly initial claims file; the bundled series otherwise.
    #[arg(long)]
    unemployment: Option<PathBuf>,
    /// Monthly Medicaid applications file; the bundled series otherwise.
    #[arg(long)]
    medicaid: Option<PathBuf>,
    /// Creation timestamp (RFC 3339) recorded in a CSV-built snapshot.
    #[arg(long)]
    created_at: Option<String>,
    /// Trends source base URL.
    #[arg(long, env = "INFOVEIL_TRENDS_BASE_URL")]
    source: Option<String>,
    #[arg(long, default_value = "2016-01-03..2020-04-15")]
    national_window: DateWindow,
    #[arg(long, default_value = "weekly")]
    granularity: Granularity,
    #[arg(long, default_value = "2020-03-01..2020-04-15")]
    state_window: DateWindow,
    /// Comma-separated query ids pulled weekly per state.
    #[arg(long, value_delimiter = ',')]
    state_weekly: Vec<String>,
    #[arg(long, default_value_t = infoveil_trends::DEFAULT_REQUESTS_PER_MINUTE)]
    rpm: u32,
    /// Save without moving HEAD.
    #[arg(long)]
    no_commit: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<SocketAddr>,
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    refresh_hours: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum FixturesCommand {
    /// Writes a seeded fixture set: rsv.csv, unemployment.csv, medicaid.csv
    /// and snapshot.json.
    Gen {
        #[arg(long, default_value_t = infoveil_core::fixtures::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also commit the snapshot to this store.
        #[arg(long)]
        commit_to: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::from(error::exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
