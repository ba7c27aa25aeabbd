//! Command-line handling shared by every application binary.

use super::{ParamError, Verbosity};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOptions {
    pub help: bool,
    pub generate: Option<Verbosity>,
    pub params_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub app_args: Vec<String>,
}

impl Default for CliOptions {
    fn default() -> Self {
        Self {
            help: false,
            generate: None,
            params_file: None,
            output_dir: PathBuf::from("."),
            app_args: Vec::new(),
        }
    }
}

/// An invocation is exactly one of these; help wins over generate, generate
/// over run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliMode {
    Help,
    Generate(Verbosity),
    Run,
}

impl CliOptions {
    pub fn mode(&self) -> CliMode {
        if self.help {
            CliMode::Help
        } else if let Some(v) = self.generate {
            CliMode::Generate(v)
        } else {
            CliMode::Run
        }
    }
}

pub fn usage(program: &str) -> String {
    format!(
        "Usage: {program} [options] [app args]\n\
         \n\
         Options:\n\
         \x20 -h, --help                        print this help and exit\n\
         \x20 -g, --generate-params [minimal|full]\n\
         \x20                                   write the default parameter file and exit;\n\
         \x20                                   without an argument the standard verbosity is used\n\
         \x20 -f, --params-file <path>          parameter file to read (or to write with -g);\n\
         \x20                                   .json selects the JSON format, anything else prm\n\
         \x20 -o, --output-directory <path>     directory for result files (default '.')\n"
    )
}

/// Parses arguments (without the program name). Unknown flags are errors;
/// tokens that are not flags are collected in order into `app_args`.
pub fn parse_cli<I>(argv: I) -> Result<CliOptions, ParamError>
where
    I: IntoIterator,
    I::Item: Into<String>,
{
    let mut options = CliOptions::default();
    let mut it = argv.into_iter().map(Into::into).peekable();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "-h" | "--help" => options.help = true,
            "-g" | "--generate-params" => {
                let verbosity = match it.peek().map(String::as_str) {
                    Some("minimal") => {
                        it.next();
                        Verbosity::Minimal
                    }
                    Some("full") => {
                        it.next();
                        Verbosity::Full
                    }
                    _ => Verbosity::Standard,
                };
                options.generate = Some(verbosity);
            }
            "-f" | "--params-file" => {
                let value = it.next().ok_or_else(|| {
                    ParamError::Usage(format!("'{arg}' requires a path argument"))
                })?;
                options.params_file = Some(PathBuf::from(value));
            }
            "-o" | "--output-directory" => {
                let value = it.next().ok_or_else(|| {
                    ParamError::Usage(format!("'{arg}' requires a path argument"))
                })?;
                options.output_dir = PathBuf::from(value);
            }
            other if other.starts_with('-') && other.len() > 1 => {
                return Err(ParamError::Usage(format!(
                    "unknown flag '{other}'; try -h for usage"
                )));
            }
            _ => options.app_args.push(arg),
        }
    }
    Ok(options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<CliOptions, ParamError> {
        parse_cli(args.iter().copied())
    }

    #[test]
    fn generate_with_level_and_file() {
        let o = parse(&["-g", "full", "-f", "p.prm"]).unwrap();
        assert_eq!(o.generate, Some(Verbosity::Full));
        assert_eq!(o.params_file, Some(PathBuf::from("p.prm")));
        assert_eq!(o.mode(), CliMode::Generate(Verbosity::Full));
    }

    #[test]
    fn generate_without_level_means_standard() {
        let o = parse(&["--generate-params"]).unwrap();
        assert_eq!(o.mode(), CliMode::Generate(Verbosity::Standard));
        let o = parse(&["-g", "extra"]).unwrap();
        assert_eq!(o.generate, Some(Verbosity::Standard));
        assert_eq!(o.app_args, vec!["extra"]);
    }

    #[test]
    fn help_flag() {
        let o = parse(&["-h"]).unwrap();
        assert!(o.help);
        assert_eq!(o.mode(), CliMode::Help);
    }

    #[test]
    fn params_file_selects_run_mode() {
        let o = parse(&["-f", "p.json"]).unwrap();
        assert_eq!(o.mode(), CliMode::Run);
        assert_eq!(o.params_file, Some(PathBuf::from("p.json")));
    }

    #[test]
    fn help_takes_precedence_over_generate() {
        let o = parse(&["-g", "-h"]).unwrap();
        assert_eq!(o.mode(), CliMode::Help);
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let err = parse(&["--frobnicate"]).unwrap_err();
        assert!(matches!(err, ParamError::Usage(_)));
        assert!(err.to_string().contains("--frobnicate"));
    }

    #[test]
    fn missing_path_argument_is_a_usage_error() {
        assert!(parse(&["-f"]).is_err());
        assert!(parse(&["-o"]).is_err());
    }

    #[test]
    fn app_args_are_preserved_in_order() {
        let o = parse(&["alpha", "-o", "out", "beta"]).unwrap();
        assert_eq!(o.app_args, vec!["alpha", "beta"]);
        assert_eq!(o.output_dir, PathBuf::from("out"));
    }
}
