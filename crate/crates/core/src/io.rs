//! CSV and JSON output. Every CSV starts with a `# config_hash=` comment and
//! a header row.

use crate::error::Result;
use crate::evolution::Trajectory;
use serde::Serialize;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn write_csv<I>(path: &Path, hash: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# config_hash={hash}")?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Config(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Long form (t, r, value) over every record and node.
pub fn write_trajectory(path: &Path, hash: &str, traj: &Trajectory) -> Result<()> {
    let rows = traj
        .times
        .iter()
        .zip(&traj.fields)
        .flat_map(|(&t, f)| (0..f.values.len()).map(move |i| vec![t, f.grid.r(i), f.values[i]]));
    write_csv(path, hash, &["t", "r", "value"], rows)
}

/// One row of norms per record.
pub fn write_summary(path: &Path, hash: &str, traj: &Trajectory) -> Result<()> {
    let rows = traj.diagnostics.iter().map(|d| vec![d.t, d.sup, d.l1, d.l2, d.l5, d.l5_weighted]);
    write_csv(path, hash, &["t", "sup", "L1", "L2", "L5", "t^0.3*L5"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{RadialField, RadialGrid};

    #[test]
    fn csv_layout() {
        let dir = std::env::temp_dir().join(format!("shl-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let grid = RadialGrid::new(1.0, 4, 1.0).unwrap();
        let mut tr = Trajectory::new();
        tr.push(0.0, RadialField::constant(grid, 1.0));
        tr.push(0.5, RadialField::constant(grid, 2.0));
        let p = dir.join("t.csv");
        write_trajectory(&p, "abc", &tr).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=abc");
        assert_eq!(lines[1], "t,r,value");
        assert_eq!(lines.len(), 2 + 10);
        assert_eq!(lines[2], "0e0,1e0,1e0");
        write_summary(&dir.join("s.csv"), "abc", &tr).unwrap();
        let s = fs::read_to_string(dir.join("s.csv")).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "t,sup,L1,L2,L5,t^0.3*L5");
        fs::remove_dir_all(&dir).unwrap();
    }
}
