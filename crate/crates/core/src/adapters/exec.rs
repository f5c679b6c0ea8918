//! Subprocess execution with process-group timeouts and rusage capture.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Once;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bytes kept per output stream; the rest is drained and dropped.
pub const OUTPUT_CAP: usize = 16 * 1024 * 1024;

const POLL: Duration = Duration::from_millis(2);

#[derive(Debug, Error)]
#[error("cannot spawn `{program}`: {source}")]
pub struct SpawnError {
    pub program: String,
    #[source]
    pub source: std::io::Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandSpec {
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    /// The complete environment; nothing is inherited.
    pub env: Vec<(String, String)>,
    pub stdin: Option<Vec<u8>>,
    pub timeout: Duration,
}

impl CommandSpec {
    /// Shell-quoted command line for display.
    pub fn display(&self) -> String {
        self.argv.iter().map(|a| shell_quote(a)).collect::<Vec<_>>().join(" ")
    }
}

pub fn shell_quote(s: &str) -> String {
    let plain = !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"-_./:=,+@%".contains(&b));
    if plain {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "code")]
pub enum Termination {
    Exit(i32),
    Signal(i32),
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct RawRun {
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub termination: Termination,
    pub duration: Duration,
    pub peak_memory: Option<u64>,
    pub pid: u32,
}

static SUBREAPER: Once = Once::new();

/// Makes orphaned descendants reparent to this process so that process
/// groups can be reaped completely after a kill.
fn become_subreaper() {
    SUBREAPER.call_once(|| {
        #[cfg(target_os = "linux")]
        unsafe {
            libc::prctl(libc::PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0);
        }
    });
}

fn drain<R: Read + Send + 'static>(mut r: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match r.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let room = OUTPUT_CAP.saturating_sub(kept.len());
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(_) => break,
            }
        }
        kept
    })
}

/// Whether `pid` has exited, without reaping it.
fn exited(pid: libc::pid_t) -> bool {
    unsafe {
        let mut info: libc::siginfo_t = std::mem::zeroed();
        let r = libc::waitid(
            libc::P_PID,
            pid as libc::id_t,
            &mut info,
            libc::WEXITED | libc::WNOHANG | libc::WNOWAIT,
        );
        r == 0 && info.si_pid() == pid
    }
}

fn reap(pid: libc::pid_t) -> (libc::c_int, libc::rusage) {
    unsafe {
        let mut status = 0;
        let mut usage: libc::rusage = std::mem::zeroed();
        loop {
            let r = libc::wait4(pid, &mut status, 0, &mut usage);
            if r == pid || std::io::Error::last_os_error().raw_os_error() != Some(libc::EINTR) {
                return (status, usage);
            }
        }
    }
}

/// Kills every member of group `pgid` and reaps those that became our
/// children. Returns once the group is empty or after a grace period.
pub fn kill_group(pgid: libc::pid_t) {
    let deadline = Instant::now() + Duration::from_secs(2);
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
        loop {
            while libc::waitpid(-pgid, std::ptr::null_mut(), libc::WNOHANG) > 0 {}
            if group_alive(pgid) == Some(false) || Instant::now() >= deadline {
                return;
            }
            libc::killpg(pgid, libc::SIGKILL);
            thread::sleep(Duration::from_millis(1));
        }
    }
}

/// `Some(false)` once no process is left in group `pgid`.
pub fn group_alive(pgid: libc::pid_t) -> Option<bool> {
    let r = unsafe { libc::kill(-pgid, 0) };
    if r == 0 {
        return Some(true);
    }
    match std::io::Error::last_os_error().raw_os_error() {
        Some(libc::ESRCH) => Some(false),
        Some(libc::EPERM) => Some(true),
        _ => None,
    }
}

/// Runs a command in its own process group. Nonzero exits, signals and
/// timeouts are data; only a failure to spawn is an error.
pub fn run_process(spec: &CommandSpec) -> Result<RawRun, SpawnError> {
    become_subreaper();
    let program = spec.argv.first().cloned().unwrap_or_default();
    let spawn_err = |source| SpawnError {
        program: program.clone(),
        source,
    };
    if program.is_empty() {
        return Err(spawn_err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty command line",
        )));
    }

    let mut cmd = Command::new(&program);
    cmd.args(&spec.argv[1..])
        .current_dir(&spec.cwd)
        .env_clear()
        .envs(spec.env.iter().map(|(k, v)| (k, v)))
        .stdin(if spec.stdin.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);

    let start = Instant::now();
    let mut child = cmd.spawn().map_err(spawn_err)?;
    let pid = child.id() as libc::pid_t;

    let writer = match (child.stdin.take(), spec.stdin.clone()) {
        (Some(mut pipe), Some(bytes)) => Some(thread::spawn(move || {
            let _ = pipe.write_all(&bytes);
        })),
        _ => None,
    };
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let deadline = start + spec.timeout;
    let mut timed_out = false;
    loop {
        if exited(pid) {
            break;
        }
        let now = Instant::now();
        if now >= deadline {
            timed_out = true;
            break;
        }
        thread::sleep(POLL.min(deadline - now));
    }
    // The leader is not reaped yet, so the group id cannot be recycled.
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }
    let (status, usage) = reap(pid);
    let duration = start.elapsed();
    kill_group(pid);

    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if let Some(w) = writer {
        let _ = w.join();
    }

    let termination = if timed_out {
        Termination::TimedOut
    } else if libc::WIFEXITED(status) {
        Termination::Exit(libc::WEXITSTATUS(status))
    } else if libc::WIFSIGNALED(status) {
        Termination::Signal(libc::WTERMSIG(status))
    } else {
        Termination::Exit(-1)
    };
    let peak = usage.ru_maxrss.max(0) as u64 * 1024;

    Ok(RawRun {
        stdout,
        stderr,
        termination,
        duration,
        peak_memory: (peak > 0).then_some(peak),
        pid: pid as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str, timeout_ms: u64) -> RawRun {
        run_process(&CommandSpec {
            argv: vec!["/bin/sh".into(), "-c".into(), script.into()],
            cwd: std::env::temp_dir(),
            env: vec![("PATH".into(), "/usr/bin:/bin".into())],
            stdin: Some(b"in".to_vec()),
            timeout: Duration::from_millis(timeout_ms),
        })
        .unwrap()
    }

    #[test]
    fn classifies_exit_and_signal() {
        let r = sh("cat; echo err >&2; exit 3", 5000);
        assert_eq!(r.stdout, b"in");
        assert_eq!(r.stderr, b"err\n");
        assert_eq!(r.termination, Termination::Exit(3));
        assert!(r.peak_memory.is_some());
        let r = sh("kill -SEGV $$", 5000);
        assert_eq!(r.termination, Termination::Signal(libc::SIGSEGV));
    }

    #[test]
    fn timeout_kills_group() {
        let r = sh("sleep 30 & sleep 30; echo never", 300);
        assert_eq!(r.termination, Termination::TimedOut);
        assert!(r.duration >= Duration::from_millis(300));
        assert!(r.duration < Duration::from_secs(5));
        assert_eq!(group_alive(r.pid as libc::pid_t), Some(false));
    }

    #[test]
    fn spawn_failure_is_an_error() {
        let e = run_process(&CommandSpec {
            argv: vec!["/definitely/not/here".into()],
            cwd: std::env::temp_dir(),
            env: vec![],
            stdin: None,
            timeout: Duration::from_secs(1),
        });
        assert!(e.is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote("--dir=/a::/"), "--dir=/a::/");
        assert_eq!(shell_quote("it's"), r"'it'\''s'");
        assert_eq!(shell_quote(""), "''");
    }
}
