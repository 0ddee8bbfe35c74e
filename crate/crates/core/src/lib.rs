//! Accent intensity quantization from phonetic posteriorgrams and a small
//! intensity-conditioned accent renderer.

pub mod cli;
pub mod gop;
pub mod io;
pub mod renderer;
pub mod tensorlet;
pub mod types;
pub mod verify;
