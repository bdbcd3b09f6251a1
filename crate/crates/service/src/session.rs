use narrative_core::{
    build_narrative, AutomaticTranscript, LocalizedNarrative, ManualTranscript, MouseTrace, NarrativeMeta,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Created,
    Captured,
    Transcribed,
    Finalized,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::Captured => "captured",
            SessionState::Transcribed => "transcribed",
            SessionState::Finalized => "finalized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionError {
    EmptyImageRef,
    WrongState { expected: SessionState, actual: SessionState },
    InvalidCapture(String),
    Pipeline(String),
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SessionError::EmptyImageRef => f.write_str("image_ref must not be empty"),
            SessionError::WrongState { expected, actual } => write!(
                f,
                "session is {}, expected {}",
                actual.as_str(),
                expected.as_str()
            ),
            SessionError::InvalidCapture(m) => write!(f, "invalid capture: {m}"),
            SessionError::Pipeline(m) => write!(f, "pipeline error: {m}"),
        }
    }
}

/// One annotation: narration capture, then transcription, then finalize.
/// States only move forward.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub image_ref: String,
    pub annotator_id: String,
    pub state: SessionState,
    pub trace: Option<MouseTrace>,
    pub automatic: Option<AutomaticTranscript>,
    pub manual: Option<ManualTranscript>,
}

impl Session {
    pub fn new(id: String, image_ref: &str, annotator_id: &str) -> Result<Self, SessionError> {
        if image_ref.trim().is_empty() {
            return Err(SessionError::EmptyImageRef);
        }
        Ok(Self {
            id,
            image_ref: image_ref.to_string(),
            annotator_id: annotator_id.to_string(),
            state: SessionState::Created,
            trace: None,
            automatic: None,
            manual: None,
        })
    }

    fn expect(&self, expected: SessionState) -> Result<(), SessionError> {
        if self.state == expected {
            Ok(())
        } else {
            Err(SessionError::WrongState { expected, actual: self.state })
        }
    }

    pub fn capture(&mut self, trace: MouseTrace, automatic: AutomaticTranscript) -> Result<(), SessionError> {
        self.expect(SessionState::Created)?;
        if trace.is_empty() {
            return Err(SessionError::InvalidCapture("trace has no points".into()));
        }
        self.trace = Some(trace);
        self.automatic = Some(automatic);
        self.state = SessionState::Captured;
        Ok(())
    }

    pub fn transcribe(&mut self, caption: &str) -> Result<(), SessionError> {
        self.expect(SessionState::Captured)?;
        self.manual = Some(ManualTranscript::from_caption(caption));
        self.state = SessionState::Transcribed;
        Ok(())
    }

    /// Runs the build pipeline. The session stays `transcribed` until
    /// [`Session::mark_finalized`], so a failed persist can be retried.
    pub fn build(&self, dataset_id: &str, threshold: f64) -> Result<LocalizedNarrative, SessionError> {
        self.expect(SessionState::Transcribed)?;
        let (Some(trace), Some(a), Some(m)) = (&self.trace, &self.automatic, &self.manual) else {
            unreachable!("transcribed sessions hold capture and caption");
        };
        let meta = NarrativeMeta {
            dataset_id: dataset_id.to_string(),
            image_id: self.image_ref.clone(),
            annotator_id: self.annotator_id.clone(),
        };
        build_narrative(a, m, trace, meta, threshold).map_err(|e| SessionError::Pipeline(e.to_string()))
    }

    pub fn mark_finalized(&mut self) {
        self.state = SessionState::Finalized;
    }
}
