//! Aggregate trial CSVs into a summary on standard output.

use std::path::Path;

use crate::CliError;

struct FileSummary {
    path: String,
    trials: usize,
    pass_rate: f64,
    median_error: f64,
    median_core_ms: f64,
    median_build_ms: f64,
}

pub fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let mut csvs = Vec::new();
    collect_csvs(dir, &mut csvs)?;
    if csvs.is_empty() {
        return Err(CliError::validation(format!(
            "no trials.csv found under {}",
            dir.display()
        )));
    }
    csvs.sort();
    let mut summaries = Vec::new();
    for path in &csvs {
        summaries.push(summarize(path)?);
    }
    println!(
        "{:<40} {:>7} {:>10} {:>14} {:>12} {:>12}",
        "file", "trials", "pass_rate", "median_error", "build_ms", "core_ms"
    );
    for s in &summaries {
        println!(
            "{:<40} {:>7} {:>10.3} {:>14.4e} {:>12.2} {:>12.2}",
            s.path, s.trials, s.pass_rate, s.median_error, s.median_build_ms, s.median_core_ms
        );
    }
    Ok(())
}

fn collect_csvs(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<(), CliError> {
    if !dir.exists() {
        return Err(CliError::validation(format!(
            "{} does not exist",
            dir.display()
        )));
    }
    for entry in std::fs::read_dir(dir).map_err(CliError::io_from)? {
        let entry = entry.map_err(CliError::io_from)?;
        let path = entry.path();
        if path.is_dir() {
            collect_csvs(&path, out)?;
        } else if path.file_name().and_then(|n| n.to_str()) == Some("trials.csv") {
            out.push(path);
        }
    }
    Ok(())
}

fn summarize(path: &Path) -> Result<FileSummary, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io_from)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::validation(format!("{}: empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let idx = |name: &str| -> Result<usize, CliError> {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::validation(format!("{}: missing column {name}", path.display())))
    };
    let (e_i, p_i) = (idx("measured_error")?, idx("pass")?);
    let mut errors = Vec::new();
    let mut passes = 0usize;
    let mut trials = 0usize;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        trials += 1;
        if fields[p_i] == "true" {
            passes += 1;
        }
        if let Ok(v) = fields[e_i].parse::<f64>() {
            if v.is_finite() {
                errors.push(v);
            }
        }
    }
    // Wall times live in the companion timings.csv next to the trials file.
    let mut builds = Vec::new();
    let mut cores = Vec::new();
    if let Ok(ttext) = std::fs::read_to_string(path.with_file_name("timings.csv")) {
        for line in ttext.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() >= 3 {
                if let Ok(v) = fields[1].parse::<f64>() {
                    builds.push(v);
                }
                if let Ok(v) = fields[2].parse::<f64>() {
                    cores.push(v);
                }
            }
        }
    }
    if trials == 0 {
        return Err(CliError::validation(format!(
            "{}: no trial rows",
            path.display()
        )));
    }
    Ok(FileSummary {
        path: path.display().to_string(),
        trials,
        pass_rate: passes as f64 / trials as f64,
        median_error: median(&mut errors),
        median_build_ms: median(&mut builds),
        median_core_ms: median(&mut cores),
    })
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
