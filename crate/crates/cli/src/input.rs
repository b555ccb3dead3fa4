use std::fs::File;
use std::io::{self, BufRead, BufReader};

use gkw_core::{generate, parse_line, StreamItem, StreamSpec};

use crate::{CliError, InputArgs};

/// Items tagged with their input line, or their 1-based position for
/// generated streams.
pub type Items = Box<dyn Iterator<Item = Result<(usize, StreamItem), CliError>>>;

pub fn parse_spec(text: &str, seed: Option<u64>) -> Result<StreamSpec, CliError> {
    let mut spec: StreamSpec = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    Ok(spec)
}

/// Short label for reports.
pub fn describe(args: &InputArgs) -> Result<String, CliError> {
    Ok(match (&args.gen, &args.file) {
        (Some(g), _) => parse_spec(g, args.seed)?.to_string(),
        (None, Some(p)) if p.as_os_str() != "-" => p.display().to_string(),
        _ => "stdin".into(),
    })
}

pub fn open(args: &InputArgs) -> Result<Items, CliError> {
    if let Some(text) = &args.gen {
        let spec = parse_spec(text, args.seed)?;
        return Ok(Box::new(generate(&spec).enumerate().map(|(i, it)| Ok((i + 1, it)))));
    }
    if args.seed.is_some() {
        return Err(CliError::Config("--seed only applies to --gen".into()));
    }
    let lines = match &args.file {
        Some(p) if p.as_os_str() != "-" => {
            let f = File::open(p).map_err(|e| CliError::Input(format!("cannot open {}: {e}", p.display())))?;
            Box::new(numbered(BufReader::new(f))) as Items
        }
        _ => Box::new(numbered(io::stdin().lock())),
    };
    Ok(lines)
}

/// Like `read_items`, but keeps the line number of each item.
fn numbered(reader: impl BufRead + 'static) -> impl Iterator<Item = Result<(usize, StreamItem), CliError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let parsed = match line {
            Ok(text) => parse_line(&text, line_no).map_err(|e| e.to_string()),
            Err(e) => Err(format!("line {line_no}: read failed: {e}")),
        };
        parsed.map(|o| o.map(|it| (line_no, it))).map_err(CliError::Input).transpose()
    })
}

/// Prefix for diagnostics about a single item.
pub fn position_word(args: &InputArgs) -> &'static str {
    if args.gen.is_some() {
        "item"
    } else {
        "line"
    }
}
