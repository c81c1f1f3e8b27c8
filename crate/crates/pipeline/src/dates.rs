//! Conversions between text dates and [`Day`].

use chrono::{Datelike, NaiveDate};
use r0_core::Day;

pub const ISO: &str = "%Y-%m-%d";

/// Parses `text` with a chrono format string.
pub fn parse_with(text: &str, format: &str) -> Option<Day> {
    let d = NaiveDate::parse_from_str(text.trim(), format).ok()?;
    Day::from_ymd(d.year(), d.month(), d.day())
}

pub fn parse_iso(text: &str) -> Option<Day> {
    parse_with(text, ISO)
}

/// Inclusive range `first..=last`.
pub fn days(first: Day, last: Day) -> impl Iterator<Item = Day> {
    (first.0..=last.0).map(Day)
}
