//! The transition function and the time-passing pipeline.

use crate::attach::{AttachError, AttachmentOrder, AttachmentRegistry};
use crate::expr::{apply_effects, EvalStats};
use crate::ground::{GroundedHappening, GroundedProblem};
use crate::pddl::HappeningKind;
use crate::ptree::Applicability;
use crate::state::State;

/// Upper bound on event passes with cascading enabled.
pub const CASCADE_LIMIT: usize = 100;

/// Why a successor was dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Invalid {
    NonFinite,
    Attachment,
    EventLoop,
}

#[derive(Debug)]
pub enum StepError {
    Invalid(Invalid),
    /// Unrecoverable; aborts the search.
    Protocol(AttachError),
}

impl From<Invalid> for StepError {
    fn from(i: Invalid) -> Self {
        StepError::Invalid(i)
    }
}

/// One step of an instrumented tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceStep {
    Attachments,
    Process(u32),
    Event(u32),
}

/// Applies happenings to states for one grounded problem.
pub struct Dynamics<'a> {
    pub gp: &'a GroundedProblem,
    pub index: &'a Applicability,
    pub attachments: Option<&'a mut AttachmentRegistry>,
    pub cascade: bool,
    pub stats: EvalStats,
    /// When set, every tick appends its steps here.
    pub trace: Option<Vec<TraceStep>>,
    scratch: Vec<u32>,
}

impl<'a> Dynamics<'a> {
    pub fn new(gp: &'a GroundedProblem, index: &'a Applicability) -> Self {
        Dynamics {
            gp,
            index,
            attachments: None,
            cascade: false,
            stats: EvalStats::default(),
            trace: None,
            scratch: Vec::new(),
        }
    }

    pub fn with_attachments(mut self, registry: &'a mut AttachmentRegistry) -> Self {
        self.attachments = Some(registry);
        self
    }

    /// Ids of the happenings of `kind` applicable in `s`, ascending.
    pub fn applicable(&mut self, kind: HappeningKind, s: &State) -> Vec<u32> {
        let mut out = std::mem::take(&mut self.scratch);
        self.index.applicable(kind, self.gp, s, &mut self.stats, &mut out);
        out
    }

    fn recycle(&mut self, ids: Vec<u32>) {
        self.scratch = ids;
    }

    /// Applies `h`'s effects to `s` in place with duration `d`; `#t` reads `d`.
    pub fn apply_in_place(&self, s: &mut State, h: &GroundedHappening, d: f64) -> Result<(), Invalid> {
        apply_effects(self.gp.effects(h), s, d, &self.gp.registry, self.gp.precision).map_err(|_| Invalid::NonFinite)
    }

    /// `F(s, h, d)`: a copy of `s` with `h` applied and time advanced by `d`.
    pub fn transition(&self, s: &State, h: &GroundedHappening, d: f64) -> Result<State, Invalid> {
        let mut next = s.clone();
        self.apply_in_place(&mut next, h, d)?;
        if d > 0.0 {
            advance(&mut next, self.gp.dt);
        }
        next.depth += 1;
        if h.kind == HappeningKind::Action && !h.time_passing {
            next.actions += 1;
        }
        Ok(next)
    }

    /// Successor of `s` under agent action `a`. Outside temporal mode, applicable
    /// events fire once afterwards.
    pub fn apply_action(&mut self, s: &State, a: &GroundedHappening) -> Result<State, StepError> {
        if a.time_passing {
            return self.time_passing(s);
        }
        let mut next = self.transition(s, a, 0.0)?;
        if !self.gp.temporal {
            self.event_pass(&mut next)?;
        }
        Ok(next)
    }

    /// Advances `s` by one time step: attachments, then every applicable process
    /// for `dt`, then every applicable event.
    pub fn time_passing(&mut self, s: &State) -> Result<State, StepError> {
        let order = self.attachments.as_ref().map(|r| r.order);
        let mut next = s.clone();
        if order == Some(AttachmentOrder::Before) {
            self.attach(&mut next)?;
        }
        let dt = self.gp.dt;
        let active = self.applicable(HappeningKind::Process, &next);
        for &p in &active {
            let h = &self.gp.processes[p as usize];
            self.apply_in_place(&mut next, h, dt)?;
            self.record(TraceStep::Process(p));
        }
        self.recycle(active);
        if order == Some(AttachmentOrder::Between) {
            self.attach(&mut next)?;
        }
        self.event_pass(&mut next)?;
        if order == Some(AttachmentOrder::After) {
            self.attach(&mut next)?;
        }
        advance(&mut next, dt);
        next.depth = s.depth + 1;
        Ok(next)
    }

    /// Fires every event applicable at entry, in id order. With cascading the pass
    /// repeats until no event applies.
    pub fn event_pass(&mut self, s: &mut State) -> Result<(), Invalid> {
        let mut passes = 0;
        loop {
            let fired = self.applicable(HappeningKind::Event, s);
            if fired.is_empty() {
                self.recycle(fired);
                return Ok(());
            }
            for &e in &fired {
                let h = &self.gp.events[e as usize];
                self.apply_in_place(s, h, 0.0)?;
                self.record(TraceStep::Event(e));
            }
            self.recycle(fired);
            passes += 1;
            if !self.cascade {
                return Ok(());
            }
            if passes >= CASCADE_LIMIT {
                return Err(Invalid::EventLoop);
            }
        }
    }

    fn attach(&mut self, s: &mut State) -> Result<(), StepError> {
        let Some(registry) = self.attachments.as_deref_mut() else {
            return Ok(());
        };
        if !registry.is_active() {
            return Ok(());
        }
        match registry.invoke(s, self.gp) {
            Ok(()) => {}
            Err(AttachError::Failed { .. }) => return Err(StepError::Invalid(Invalid::Attachment)),
            Err(e) => return Err(StepError::Protocol(e)),
        }
        self.record(TraceStep::Attachments);
        Ok(())
    }

    fn record(&mut self, step: TraceStep) {
        if let Some(t) = &mut self.trace {
            t.push(step);
        }
    }
}

fn advance(s: &mut State, dt: f64) {
    s.steps += 1;
    s.time = s.steps as f64 * dt;
}
