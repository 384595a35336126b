//! Drives an in-process UCI session over OS pipes.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, PipeWriter, Write};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use latent_chess::uci::UciSession;

pub struct Live {
    input: PipeWriter,
    lines: mpsc::Receiver<String>,
    session: Option<thread::JoinHandle<std::io::Result<()>>>,
}

impl Live {
    pub fn start() -> Live {
        let (in_r, input) = std::io::pipe().unwrap();
        let (out_r, out_w) = std::io::pipe().unwrap();
        let session = thread::spawn(move || UciSession::default().run(BufReader::new(in_r), out_w));
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for l in BufReader::new(out_r).lines() {
                let Ok(l) = l else { break };
                if tx.send(l).is_err() {
                    break;
                }
            }
        });
        Live {
            input,
            lines,
            session: Some(session),
        }
    }

    pub fn send(&mut self, line: &str) {
        writeln!(self.input, "{line}").unwrap();
    }

    pub fn send_bytes(&mut self, bytes: &[u8]) {
        self.input.write_all(bytes).unwrap();
        self.input.write_all(b"\n").unwrap();
    }

    /// Next line starting with `prefix`, skipping others.
    pub fn until(&self, prefix: &str) -> String {
        loop {
            let l = self.lines.recv_timeout(Duration::from_secs(30)).expect("engine reply");
            if l.starts_with(prefix) {
                return l;
            }
        }
    }

    /// Every line up to and including the next one starting with `prefix`.
    pub fn collect_until(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        loop {
            let l = self.lines.recv_timeout(Duration::from_secs(30)).expect("engine reply");
            let done = l.starts_with(prefix);
            out.push(l);
            if done {
                return out;
            }
        }
    }

    /// Sends `quit` and reports whether the session ended cleanly.
    pub fn quit(mut self) -> bool {
        self.send("quit");
        matches!(self.session.take().unwrap().join(), Ok(Ok(())))
    }
}
