//! Semantic attachments: external code that computes part of a tick's dynamics.
//!
//! An attachment declares the fluents it may write, reads the whole state and
//! returns assignments. Attachments run inside time-passing, in registration order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use thiserror::Error;

use crate::ground::{GroundedProblem, SymbolTables};
use crate::pddl::GroundAtom;
use crate::state::{Precision, State};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AttachError {
    /// The attachment could not produce values for this state; the successor is dropped.
    #[error("attachment `{name}` failed: {message}")]
    Failed { name: String, message: String },
    /// The attachment broke its contract; the run is aborted.
    #[error("attachment protocol error: {0}")]
    Protocol(String),
    #[error("attachment `{name}` writes `{fluent}`, which is not a grounded fluent")]
    UnknownFluent { name: String, fluent: String },
    #[error("failed to start attachment command `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
}

/// Read access to the state handed to an attachment.
pub struct TickInput<'a> {
    pub state: &'a State,
    pub dt: f64,
    pub tables: &'a SymbolTables,
}

impl TickInput<'_> {
    /// Value of a fluent by printed name, e.g. `(flow engine1)`.
    pub fn get(&self, printed: &str) -> Option<f64> {
        self.tables
            .vars
            .find(printed)
            .map(|slot| self.state.vars[slot as usize])
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }
}

pub trait Attachment {
    fn name(&self) -> &str;

    /// Printed names of the fluents this attachment may assign.
    fn write_set(&self) -> Vec<String>;

    /// Assignments for a subset of the write-set.
    fn compute(&mut self, input: &TickInput<'_>) -> Result<Vec<(String, f64)>, AttachError>;
}

/// Where attachments run inside time-passing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttachmentOrder {
    /// Before processes, the default.
    #[default]
    Before,
    /// After processes, before events.
    Between,
    /// After events.
    After,
}

impl AttachmentOrder {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "before" => Some(AttachmentOrder::Before),
            "between" => Some(AttachmentOrder::Between),
            "after" => Some(AttachmentOrder::After),
            _ => None,
        }
    }
}

struct Bound {
    attachment: Box<dyn Attachment>,
    slots: HashMap<String, u32>,
}

/// Attachments bound to a grounded problem's variable slots.
pub struct AttachmentRegistry {
    entries: Vec<Bound>,
    active: bool,
    pub order: AttachmentOrder,
    pub warnings: Vec<String>,
    /// Invocations that failed and invalidated a successor.
    pub failures: u64,
    pub invocations: u64,
}

impl AttachmentRegistry {
    pub fn new(gp: &GroundedProblem) -> Self {
        AttachmentRegistry {
            entries: Vec::new(),
            active: gp.semantic_attachment,
            order: AttachmentOrder::Before,
            warnings: Vec::new(),
            failures: 0,
            invocations: 0,
        }
    }

    /// Binds the write-set to variable slots. A domain without the
    /// `:semantic-attachment` requirement keeps the attachment but never calls it.
    pub fn register(&mut self, gp: &GroundedProblem, attachment: Box<dyn Attachment>) -> Result<(), AttachError> {
        let mut slots = HashMap::new();
        for fluent in attachment.write_set() {
            let slot = gp.var_slot(&fluent).ok_or_else(|| AttachError::UnknownFluent {
                name: attachment.name().to_string(),
                fluent: fluent.clone(),
            })?;
            slots.insert(canonical(&fluent), slot);
        }
        if !self.active {
            self.warnings.push(format!(
                "attachment `{}` registered but the domain does not declare :semantic-attachment; it will not run",
                attachment.name()
            ));
        }
        self.entries.push(Bound { attachment, slots });
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.active && !self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Runs every attachment in order on `state`. Only write-set slots change.
    pub fn invoke(&mut self, state: &mut State, gp: &GroundedProblem) -> Result<(), AttachError> {
        if !self.active {
            return Ok(());
        }
        for entry in &mut self.entries {
            self.invocations += 1;
            let assignments = {
                let input = TickInput {
                    state,
                    dt: gp.dt,
                    tables: &gp.tables,
                };
                entry.attachment.compute(&input)
            };
            let assignments = match assignments {
                Ok(a) => a,
                Err(e @ AttachError::Failed { .. }) => {
                    self.failures += 1;
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            let name = entry.attachment.name();
            let mut writes = Vec::with_capacity(assignments.len());
            for (fluent, value) in assignments {
                let slot = *entry.slots.get(&canonical(&fluent)).ok_or_else(|| {
                    AttachError::Protocol(format!("`{name}` assigned `{fluent}` outside its write-set"))
                })?;
                let value = gp.precision.apply(value);
                if !value.is_finite() {
                    self.failures += 1;
                    return Err(AttachError::Failed {
                        name: name.to_string(),
                        message: format!("non-finite value for `{fluent}`"),
                    });
                }
                writes.push((slot, value));
            }
            for (slot, value) in writes {
                state.vars[slot as usize] = value;
            }
        }
        Ok(())
    }
}

fn canonical(printed: &str) -> String {
    match parse_wire_name(printed) {
        Some(atom) => atom.to_string(),
        None => printed.trim().to_string(),
    }
}

/// `(flow e1 e2)` is sent over the wire as `flow(e1,e2)`; a nullary fluent as `flow`.
pub fn wire_name(atom: &GroundAtom) -> String {
    if atom.args.is_empty() {
        atom.name.clone()
    } else {
        format!("{}({})", atom.name, atom.args.join(","))
    }
}

/// Accepts the wire form as well as the printed form.
pub fn parse_wire_name(s: &str) -> Option<GroundAtom> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('(') {
        let inner = inner.strip_suffix(')')?;
        let mut parts = inner.split_whitespace();
        let name = parts.next()?;
        return Some(GroundAtom::new(name, parts.map(str::to_string).collect()));
    }
    match s.split_once('(') {
        Some((name, rest)) => {
            let args = rest.strip_suffix(')')?;
            let args = args
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(str::to_string)
                .collect();
            (!name.is_empty()).then(|| GroundAtom::new(name, args))
        }
        None => (!s.is_empty()).then(|| GroundAtom::new(s, Vec::new())),
    }
}

/// Toy flow model: `flow := pump_speed * factor`.
pub struct FlowAttachment {
    pub flow: String,
    pub pump_speed: String,
    pub factor: f64,
}

impl FlowAttachment {
    pub fn new(flow: &str, pump_speed: &str, factor: f64) -> Self {
        FlowAttachment {
            flow: flow.to_string(),
            pump_speed: pump_speed.to_string(),
            factor,
        }
    }
}

impl Attachment for FlowAttachment {
    fn name(&self) -> &str {
        "flow"
    }

    fn write_set(&self) -> Vec<String> {
        vec![self.flow.clone()]
    }

    fn compute(&mut self, input: &TickInput<'_>) -> Result<Vec<(String, f64)>, AttachError> {
        let speed = input.get(&self.pump_speed).ok_or_else(|| AttachError::Failed {
            name: self.name().to_string(),
            message: format!("no fluent `{}`", self.pump_speed),
        })?;
        Ok(vec![(self.flow.clone(), speed * self.factor)])
    }
}

/// Attachment backed by a child process speaking the line protocol:
///
/// ```text
/// child:   hello 1 flow(e1) temp
/// planner: tick 3 flow(e1)=0.5 temp=20 speed=4
/// child:   flow(e1)=2
/// ```
pub struct SubprocessAttachment {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    write_set: Vec<String>,
    names: Vec<String>,
}

impl SubprocessAttachment {
    /// Starts `command` (split on whitespace) and reads its handshake.
    pub fn spawn(command: &str, tables: &SymbolTables) -> Result<Self, AttachError> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| AttachError::Protocol("empty attachment command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|source| AttachError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut this = SubprocessAttachment {
            command: command.to_string(),
            child,
            stdin,
            stdout,
            write_set: Vec::new(),
            names: tables.vars.iter().map(|(_, a)| wire_name(a)).collect(),
        };
        let hello = this.read_line()?;
        let mut words = hello.split_whitespace();
        if words.next() != Some("hello") {
            return Err(AttachError::Protocol(format!("expected handshake, got `{hello}`")));
        }
        let version = words.next().and_then(|v| v.parse::<u32>().ok());
        if version != Some(PROTOCOL_VERSION) {
            return Err(AttachError::Protocol(format!(
                "unsupported protocol version in `{hello}`, expected {PROTOCOL_VERSION}"
            )));
        }
        for w in words {
            let atom = parse_wire_name(w).ok_or_else(|| AttachError::Protocol(format!("bad fluent name `{w}`")))?;
            this.write_set.push(atom.to_string());
        }
        Ok(this)
    }

    fn read_line(&mut self) -> Result<String, AttachError> {
        let mut line = String::new();
        let n = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| AttachError::Protocol(format!("read from `{}`: {e}", self.command)))?;
        if n == 0 {
            return Err(AttachError::Protocol(format!("`{}` closed its output", self.command)));
        }
        Ok(line.trim_end().to_string())
    }
}

impl Attachment for SubprocessAttachment {
    fn name(&self) -> &str {
        &self.command
    }

    fn write_set(&self) -> Vec<String> {
        self.write_set.clone()
    }

    fn compute(&mut self, input: &TickInput<'_>) -> Result<Vec<(String, f64)>, AttachError> {
        let mut line = format!("tick {}", input.state.time);
        for (name, v) in self.names.iter().zip(&input.state.vars) {
            line.push_str(&format!(" {name}={v}"));
        }
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| AttachError::Protocol(format!("write to `{}`: {e}", self.command)))?;
        let reply = self.read_line()?;
        parse_assignments(&reply)
    }
}

impl Drop for SubprocessAttachment {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Parses `name=value name=value ...`. A reply of `error <message>` is a failure
/// for this state only.
pub fn parse_assignments(line: &str) -> Result<Vec<(String, f64)>, AttachError> {
    if let Some(msg) = line.strip_prefix("error") {
        return Err(AttachError::Failed {
            name: "subprocess".into(),
            message: msg.trim().to_string(),
        });
    }
    line.split_whitespace()
        .map(|pair| {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| AttachError::Protocol(format!("expected name=value, got `{pair}`")))?;
            let atom =
                parse_wire_name(name).ok_or_else(|| AttachError::Protocol(format!("bad fluent name `{name}`")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| AttachError::Protocol(format!("bad number `{value}` for `{name}`")))?;
            Ok((atom.to_string(), value))
        })
        .collect()
}

/// Tick input as parsed by an attachment process.
#[derive(Debug, Clone, PartialEq)]
pub struct TickMessage {
    pub time: f64,
    pub values: Vec<(String, f64)>,
}

impl TickMessage {
    pub fn parse(line: &str) -> Option<Self> {
        let mut words = line.split_whitespace();
        if words.next()? != "tick" {
            return None;
        }
        let time = words.next()?.parse().ok()?;
        let values = words
            .map(|w| {
                let (n, v) = w.split_once('=')?;
                Some((n.to_string(), v.parse().ok()?))
            })
            .collect::<Option<_>>()?;
        Some(TickMessage { time, values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Reference attachment process: serves the flow model over stdin/stdout.
pub fn serve_flow(
    input: impl BufRead,
    mut output: impl Write,
    flow: &str,
    pump_speed: &str,
    factor: f64,
    precision: Precision,
) -> std::io::Result<()> {
    writeln!(output, "hello {PROTOCOL_VERSION} {flow}")?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        match TickMessage::parse(&line).and_then(|m| m.get(pump_speed)) {
            Some(speed) => writeln!(output, "{flow}={}", precision.apply(speed * factor))?,
            None => writeln!(output, "error no `{pump_speed}` in tick")?,
        }
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_names() {
        let a = GroundAtom::new("flow", vec!["e1".into(), "e2".into()]);
        assert_eq!(wire_name(&a), "flow(e1,e2)");
        assert_eq!(parse_wire_name("flow(e1,e2)"), Some(a.clone()));
        assert_eq!(parse_wire_name("(flow e1 e2)"), Some(a));
        assert_eq!(parse_wire_name("x"), Some(GroundAtom::new("x", vec![])));
        assert_eq!(parse_wire_name("x("), None);
    }

    #[test]
    fn assignments_and_ticks() {
        let a = parse_assignments("flow=2 speed(p1)=0.5").unwrap();
        assert_eq!(a, vec![("(flow)".to_string(), 2.0), ("(speed p1)".to_string(), 0.5)]);
        assert!(matches!(parse_assignments("flow"), Err(AttachError::Protocol(_))));
        assert!(matches!(
            parse_assignments("error boom"),
            Err(AttachError::Failed { .. })
        ));
        let m = TickMessage::parse("tick 2 flow=1 pump_speed=4").unwrap();
        assert_eq!(m.time, 2.0);
        assert_eq!(m.get("pump_speed"), Some(4.0));
    }

    #[test]
    fn flow_server_replies() {
        let mut out = Vec::new();
        serve_flow(
            &b"tick 0 flow=0 pump_speed=4\n"[..],
            &mut out,
            "flow",
            "pump_speed",
            0.5,
            Precision::default(),
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "hello 1 flow\nflow=2\n");
    }
}
