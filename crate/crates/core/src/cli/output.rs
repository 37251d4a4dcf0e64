use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{CliError, CliResult};
use crate::model::units::{to_hz, to_khz};
use crate::model::PhysicalParams;

/// Fixed scientific format so reruns are byte-identical.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn params_line(p: &PhysicalParams) -> String {
    format!(
        "# params: detuning_khz={} kappa_khz={} omega_x_khz={} omega_y_khz={} gamma_mx_hz={} gamma_my_hz={} \
         g_x_khz={} g_y_khz={} n_th_x={} n_th_y={} gamma_nx_khz={} gamma_ny_khz={} eta={} omega_lo_khz={}",
        fmt_f(to_khz(p.delta)),
        fmt_f(to_khz(p.kappa)),
        fmt_f(to_khz(p.omega_x0)),
        fmt_f(to_khz(p.omega_y0)),
        fmt_f(to_hz(p.gamma_mx)),
        fmt_f(to_hz(p.gamma_my)),
        fmt_f(to_khz(p.g_x)),
        fmt_f(to_khz(p.g_y)),
        fmt_f(p.n_th_x),
        fmt_f(p.n_th_y),
        fmt_f(to_khz(p.gamma_nx)),
        fmt_f(to_khz(p.gamma_ny)),
        fmt_f(p.eta),
        fmt_f(to_khz(p.omega_lo)),
    )
}

/// CSV with `#` metadata lines, a column header and formatted rows.
pub struct Table {
    head: String,
    body: String,
}

impl Table {
    pub fn new(title: &str, params: Option<&PhysicalParams>) -> Self {
        let mut head = format!("# polaritron {} {title}\n", env!("CARGO_PKG_VERSION"));
        if let Some(p) = params {
            head.push_str(&params_line(p));
            head.push('\n');
        }
        Self { head, body: String::new() }
    }

    pub fn note(&mut self, line: String) {
        let _ = writeln!(self.head, "# {line}");
    }

    pub fn unit(&mut self, column: &str, unit: &str) {
        let _ = writeln!(self.head, "# unit {column}: {unit}");
    }

    pub fn columns(&mut self, names: &[&str]) {
        let _ = writeln!(self.body, "{}", names.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        self.row_str(values.iter().map(|v| fmt_f(*v)).collect());
    }

    pub fn row_str(&mut self, values: Vec<String>) {
        let _ = writeln!(self.body, "{}", values.join(","));
    }

    pub fn write(self, path: &Path) -> CliResult<PathBuf> {
        let text = self.head + &self.body;
        std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Ok(path.to_path_buf())
    }
}
