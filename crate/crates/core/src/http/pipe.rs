use std::io::{self, Write};
use std::process::{Command, Stdio};
use std::thread;

#[derive(Debug, thiserror::Error)]
pub enum PipeError {
    #[error("empty command")]
    EmptyCommand,
    #[error("cannot start `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("`{program}` exited with {status}: {stderr}")]
    Failed {
        program: String,
        status: std::process::ExitStatus,
        stderr: String,
    },
    #[error("i/o with subprocess: {0}")]
    Io(#[from] io::Error),
}

/// Runs `argv`, feeding `input` on stdin, and returns stdout.
pub fn run_pipe(argv: &[String], input: &[u8]) -> Result<Vec<u8>, PipeError> {
    let (program, args) = argv.split_first().ok_or(PipeError::EmptyCommand)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| PipeError::Spawn {
            program: program.clone(),
            source,
        })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = input.to_vec();
    // feed from another thread so a large output cannot deadlock us
    let feeder = thread::spawn(move || {
        let r = stdin.write_all(&input);
        drop(stdin);
        r
    });
    let out = child.wait_with_output()?;
    match feeder.join() {
        Ok(Err(e)) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    if !out.status.success() {
        return Err(PipeError::Failed {
            program: program.clone(),
            status: out.status,
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(out.stdout)
}

/// A shell command line run through `sh -c`.
pub fn shell_argv(command: &str) -> Vec<String> {
    vec!["/bin/sh".into(), "-c".into(), command.into()]
}

/// Splits a processor command line and inserts the stylesheet path at
/// each `{xsl}`, or appends it when there is no placeholder.
pub fn processor_argv(command: &str, stylesheet: &str) -> Option<Vec<String>> {
    let mut argv = shlex::split(command)?;
    if argv.is_empty() {
        return None;
    }
    if argv.iter().any(|a| a.contains("{xsl}")) {
        for a in &mut argv {
            *a = a.replace("{xsl}", stylesheet);
        }
    } else {
        argv.push(stylesheet.to_string());
    }
    Some(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholder_substitution() {
        assert_eq!(
            processor_argv("xsltproc {xsl} -", "/x/a b.xsl").unwrap(),
            vec!["xsltproc", "/x/a b.xsl", "-"]
        );
        assert_eq!(
            processor_argv("proc -q", "s.xsl").unwrap(),
            vec!["proc", "-q", "s.xsl"]
        );
        assert!(processor_argv("", "s").is_none());
        assert!(processor_argv("'unterminated", "s").is_none());
    }

    #[test]
    fn pipes_through_shell() {
        let out = run_pipe(&shell_argv("tr a-z A-Z"), b"ok\n").unwrap();
        assert_eq!(out, b"OK\n");
        let err = run_pipe(&shell_argv("echo bad >&2; exit 3"), b"").unwrap_err();
        assert!(err.to_string().contains("bad"), "{err}");
    }
}
