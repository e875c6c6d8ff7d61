//! Census region/division reference table and regional aggregation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::panel::StatePanel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("unknown geography `{0}`")]
    UnknownGeography(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    Northeast,
    Midwest,
    South,
    West,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Northeast, Region::Midwest, Region::South, Region::West];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Northeast => "Northeast",
            Region::Midwest => "Midwest",
            Region::South => "South",
            Region::West => "West",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Division {
    NewEngland,
    MiddleAtlantic,
    EastNorthCentral,
    WestNorthCentral,
    SouthAtlantic,
    EastSouthCentral,
    WestSouthCentral,
    Mountain,
    Pacific,
}

impl Division {
    pub const fn region(self) -> Region {
        use Division::*;
        match self {
            NewEngland | MiddleAtlantic => Region::Northeast,
            EastNorthCentral | WestNorthCentral => Region::Midwest,
            SouthAtlantic | EastSouthCentral | WestSouthCentral => Region::South,
            Mountain | Pacific => Region::West,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GeoRef {
    pub state: &'static str,
    pub name: &'static str,
    pub region: Region,
    pub division: Division,
}

macro_rules! geo {
    ($code:literal, $name:literal, $div:ident) => {
        GeoRef {
            state: $code,
            name: $name,
            region: Division::$div.region(),
            division: Division::$div,
        }
    };
}

/// 50 states plus DC, ordered by code. DC sits in the South Atlantic division.
pub static STATES: [GeoRef; 51] = [
    geo!("US-AK", "Alaska", Pacific),
    geo!("US-AL", "Alabama", EastSouthCentral),
    geo!("US-AR", "Arkansas", WestSouthCentral),
    geo!("US-AZ", "Arizona", Mountain),
    geo!("US-CA", "California", Pacific),
    geo!("US-CO", "Colorado", Mountain),
    geo!("US-CT", "Connecticut", NewEngland),
    geo!("US-DC", "District of Columbia", SouthAtlantic),
    geo!("US-DE", "Delaware", SouthAtlantic),
    geo!("US-FL", "Florida", SouthAtlantic),
    geo!("US-GA", "Georgia", SouthAtlantic),
    geo!("US-HI", "Hawaii", Pacific),
    geo!("US-IA", "Iowa", WestNorthCentral),
    geo!("US-ID", "Idaho", Mountain),
    geo!("US-IL", "Illinois", EastNorthCentral),
    geo!("US-IN", "Indiana", EastNorthCentral),
    geo!("US-KS", "Kansas", WestNorthCentral),
    geo!("US-KY", "Kentucky", EastSouthCentral),
    geo!("US-LA", "Louisiana", WestSouthCentral),
    geo!("US-MA", "Massachusetts", NewEngland),
    geo!("US-MD", "Maryland", SouthAtlantic),
    geo!("US-ME", "Maine", NewEngland),
    geo!("US-MI", "Michigan", EastNorthCentral),
    geo!("US-MN", "Minnesota", WestNorthCentral),
    geo!("US-MO", "Missouri", WestNorthCentral),
    geo!("US-MS", "Mississippi", EastSouthCentral),
    geo!("US-MT", "Montana", Mountain),
    geo!("US-NC", "North Carolina", SouthAtlantic),
    geo!("US-ND", "North Dakota", WestNorthCentral),
    geo!("US-NE", "Nebraska", WestNorthCentral),
    geo!("US-NH", "New Hampshire", NewEngland),
    geo!("US-NJ", "New Jersey", MiddleAtlantic),
    geo!("US-NM", "New Mexico", Mountain),
    geo!("US-NV", "Nevada", Mountain),
    geo!("US-NY", "New York", MiddleAtlantic),
    geo!("US-OH", "Ohio", EastNorthCentral),
    geo!("US-OK", "Oklahoma", WestSouthCentral),
    geo!("US-OR", "Oregon", Pacific),
    geo!("US-PA", "Pennsylvania", MiddleAtlantic),
    geo!("US-RI", "Rhode Island", NewEngland),
    geo!("US-SC", "South Carolina", SouthAtlantic),
    geo!("US-SD", "South Dakota", WestNorthCentral),
    geo!("US-TN", "Tennessee", EastSouthCentral),
    geo!("US-TX", "Texas", WestSouthCentral),
    geo!("US-UT", "Utah", Mountain),
    geo!("US-VA", "Virginia", SouthAtlantic),
    geo!("US-VT", "Vermont", NewEngland),
    geo!("US-WA", "Washington", Pacific),
    geo!("US-WI", "Wisconsin", EastNorthCentral),
    geo!("US-WV", "West Virginia", SouthAtlantic),
    geo!("US-WY", "Wyoming", Mountain),
];

pub const NATIONAL: &str = "US";

pub fn lookup(state: &str) -> Result<&'static GeoRef, GeoError> {
    STATES
        .binary_search_by(|g| g.state.cmp(state))
        .map(|i| &STATES[i])
        .map_err(|_| GeoError::UnknownGeography(state.to_string()))
}

pub fn region_of(state: &str) -> Result<(Region, Division), GeoError> {
    lookup(state).map(|g| (g.region, g.division))
}

/// `US` or one of the 51 state codes.
pub fn is_valid_geo(code: &str) -> bool {
    code == NATIONAL || lookup(code).is_ok()
}

pub fn state_codes() -> impl Iterator<Item = &'static str> {
    STATES.iter().map(|g| g.state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistic {
    Mean,
    Median,
}

/// Region x query matrix; `None` where a region has no present values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionalTable {
    pub regions: Vec<Region>,
    pub query_ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn regional_aggregate(panel: &StatePanel, statistic: Statistic) -> Result<RegionalTable, GeoError> {
    let state_regions = panel
        .states()
        .iter()
        .map(|s| region_of(s).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    let values = Region::ALL
        .iter()
        .map(|&region| {
            (0..panel.n_queries())
                .map(|j| {
                    let mut present: Vec<f64> = state_regions
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| **r == region)
                        .filter_map(|(i, _)| panel.get(i, j))
                        .collect();
                    summarize(&mut present, statistic)
                })
                .collect()
        })
        .collect();
    Ok(RegionalTable {
        regions: Region::ALL.to_vec(),
        query_ids: panel.query_ids().to_vec(),
        values,
    })
}

fn summarize(values: &mut [f64], statistic: Statistic) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    match statistic {
        Statistic::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
        Statistic::Median => {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            Some(if n % 2 == 1 {
                values[n / 2]
            } else {
                (values[n / 2 - 1] + values[n / 2]) / 2.0
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DateWindow;

    fn window() -> DateWindow {
        "2020-03-01..2020-04-15".parse().unwrap()
    }

    #[test]
    fn table_shape() {
        assert_eq!(STATES.len(), 51);
        assert!(STATES.windows(2).all(|w| w[0].state < w[1].state));
        let count = |r: Region| STATES.iter().filter(|g| g.region == r && g.state != "US-DC").count();
        assert_eq!(count(Region::Northeast), 9);
        assert_eq!(count(Region::Midwest), 12);
        assert_eq!(count(Region::South), 16);
        assert_eq!(count(Region::West), 13);
        assert_eq!(region_of("US-DC").unwrap(), (Region::South, Division::SouthAtlantic));
    }

    #[test]
    fn region_lookup() {
        assert_eq!(region_of("US-LA").unwrap().0, Region::South);
        assert_eq!(region_of("US-NY").unwrap().0, Region::Northeast);
        assert_eq!(region_of("US-ZZ"), Err(GeoError::UnknownGeography("US-ZZ".into())));
        assert!(is_valid_geo("US"));
        assert!(!is_valid_geo("US-ZZ"));
    }

    #[test]
    fn southern_constant_mean() {
        let states: Vec<String> = state_codes().map(String::from).collect();
        let col: Vec<Option<f64>> = states
            .iter()
            .map(|s| Some(if region_of(s).unwrap().0 == Region::South { 80.0 } else { 10.0 }))
            .collect();
        let panel = StatePanel::from_columns(window(), states, vec!["stimulus-check".into()], &[col]).unwrap();
        let t = regional_aggregate(&panel, Statistic::Mean).unwrap();
        let south = Region::ALL.iter().position(|r| *r == Region::South).unwrap();
        assert_eq!(t.values[south][0], Some(80.0));
    }

    #[test]
    fn missing_region_propagates() {
        let states = vec!["US-NY".to_string(), "US-TX".to_string()];
        let panel = StatePanel::from_columns(window(), states, vec!["q".into()], &[vec![None, Some(5.0)]]).unwrap();
        let t = regional_aggregate(&panel, Statistic::Median).unwrap();
        assert_eq!(t.values[0][0], None);
        assert_eq!(t.values[2][0], Some(5.0));
        assert_eq!(t.values[1][0], None);
    }

    #[test]
    fn unknown_state_in_panel() {
        let panel = StatePanel::from_columns(window(), vec!["US-ZZ".into()], vec!["q".into()], &[vec![Some(1.0)]]).unwrap();
        assert!(regional_aggregate(&panel, Statistic::Mean).is_err());
    }
}
