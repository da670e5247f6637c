//! The eleven-variable daily/monthly sea-ice dataset schema.

use causalcast_core::VariableMeta;

pub const TARGET: &str = "Sea Ice Extent";

/// `(name, unit, lo, hi)` for every column, target last.
pub const TABLE_ONE: [(&str, &str, f64, f64); 11] = [
    ("Surface Pressure", "hPa", 400.0, 1100.0),
    ("Wind Velocity", "m/s", 0.0, 40.0),
    ("Specific Humidity", "kg/kg", 0.0, 0.1),
    ("Air Temperature", "K", 200.0, 350.0),
    ("Shortwave Radiation", "W/m2", 0.0, 1500.0),
    ("Longwave Radiation", "W/m2", 0.0, 700.0),
    ("Rainfall", "mm/day", 0.0, 800.0),
    ("Snowfall", "mm/day", 0.0, 200.0),
    ("Sea Surface Temperature", "K", 200.0, 350.0),
    ("Sea Surface Salinity", "psu", 0.0, 50.0),
    (TARGET, "Million km2", 3.34, 16.63),
];

pub fn table_one() -> Vec<VariableMeta> {
    TABLE_ONE
        .iter()
        .map(|&(name, unit, lo, hi)| VariableMeta::new(name, unit).with_range(lo, hi))
        .collect()
}
