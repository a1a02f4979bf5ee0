//! Minimal calendar arithmetic over Unix timestamps (UTC, proleptic
//! Gregorian), enough to place the sun without pulling a date-time crate
//! into the `no_std` core.

/// A calendar instant, stored as Unix seconds (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instant(pub i64);

impl Instant {
    pub fn from_unix(secs: i64) -> Self {
        Instant(secs)
    }

    pub fn unix(self) -> i64 {
        self.0
    }

    pub fn add_seconds(self, s: i64) -> Self {
        Instant(self.0 + s)
    }

    /// Seconds elapsed since 00:00 UTC of the instant's day.
    pub fn seconds_of_day(self) -> i64 {
        self.0.rem_euclid(86_400)
    }

    /// Fractional UTC hour of day in [0, 24).
    pub fn hour_of_day(self) -> f64 {
        self.seconds_of_day() as f64 / 3600.0
    }

    /// Day of year, 1-based (Jan 1 = 1).
    pub fn day_of_year(self) -> u32 {
        let days = self.0.div_euclid(86_400);
        let (y, m, d) = civil_from_days(days);
        let mut doy = d;
        for month in 1..m {
            doy += days_in_month(y, month);
        }
        doy
    }

    /// Builds an instant from a civil UTC date and time.
    pub fn from_civil(year: i32, month: u32, day: u32, hour: u32, minute: u32, second: u32) -> Self {
        let days = days_from_civil(year, month, day);
        Instant(days * 86_400 + (hour as i64) * 3600 + (minute as i64) * 60 + second as i64)
    }

    pub fn civil_date(self) -> (i32, u32, u32) {
        civil_from_days(self.0.div_euclid(86_400))
    }
}

fn is_leap(y: i32) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

fn days_in_month(y: i32, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if is_leap(y) {
                29
            } else {
                28
            }
        }
        _ => unreachable!(),
    }
}

// Days-from-civil and its inverse, after Hinnant's calendar algorithms.
fn days_from_civil(y: i32, m: u32, d: u32) -> i64 {
    let y = y as i64 - if m <= 2 { 1 } else { 0 };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (m as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i32, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    ((y + if m <= 2 { 1 } else { 0 }) as i32, m as u32, d as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_is_jan_1_1970() {
        assert_eq!(Instant(0).civil_date(), (1970, 1, 1));
        assert_eq!(Instant(0).day_of_year(), 1);
    }

    #[test]
    fn civil_round_trip() {
        for &(y, m, d) in &[(2015, 1, 3), (2000, 2, 29), (1999, 12, 31), (2024, 7, 15)] {
            let i = Instant::from_civil(y, m, d, 12, 34, 56);
            assert_eq!(i.civil_date(), (y, m, d));
            assert_eq!(i.seconds_of_day(), 12 * 3600 + 34 * 60 + 56);
        }
    }

    #[test]
    fn day_of_year_jan_3() {
        assert_eq!(Instant::from_civil(2015, 1, 3, 0, 0, 0).day_of_year(), 3);
        assert_eq!(Instant::from_civil(2015, 12, 31, 0, 0, 0).day_of_year(), 365);
    }
}
