//! Recordings, annotations, audio/EEG synchronization, trial segmentation and
//! the synthetic dataset generator.

mod annotations;
mod recording;
mod segment;
mod sync;
mod synth;

pub use annotations::{
    load_annotations, save_annotations, AnnotationEvent, AnnotationTrack, EventLabel,
};
pub use recording::{load_recording, save_recording, EegRecording};
pub use segment::{segment_trials, Trial, TrialLabel, TRIAL_DURATION_S};
pub use sync::{envelope, find_sync_offset, ENVELOPE_WINDOW_S};
pub use synth::{synth_dataset, SynthSpec};
