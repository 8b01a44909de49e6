#![allow(dead_code)]

use std::collections::HashMap;

/// Parsed CSV: header plus rows of string cells.
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn parse(text: &str) -> Csv {
        let mut lines = text.lines();
        let header = lines.next().expect("header row").split(',').map(str::to_string).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Csv { header, rows }
    }

    pub fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    /// First row whose `key` column equals `value`.
    pub fn find(&self, key: &str, value: &str) -> HashMap<String, String> {
        let j = self.col(key);
        let row = self.rows.iter().find(|r| r[j] == value).unwrap_or_else(|| panic!("no row {key}={value}"));
        self.header.iter().cloned().zip(row.iter().cloned()).collect()
    }

    /// Rows matching every `(column, value)` pair.
    pub fn select(&self, filters: &[(&str, &str)]) -> Vec<HashMap<String, String>> {
        self.rows
            .iter()
            .filter(|r| filters.iter().all(|(k, v)| r[self.col(k)] == *v))
            .map(|r| self.header.iter().cloned().zip(r.iter().cloned()).collect())
            .collect()
    }

    pub fn num(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }
}

pub fn f(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key].parse().unwrap_or_else(|_| panic!("{key} = {} is not a number", map[key]))
}
