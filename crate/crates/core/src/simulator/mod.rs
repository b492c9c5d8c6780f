//! Semi-random simulated user built from the seed corpus, and the episode
//! runner that couples it to the agent.

mod episode;
mod user;

pub use episode::{run_episode, Environment, Episode, EpisodeRecord, MAX_AGENT_TURNS};
pub use user::{OpponentMode, Repertoire, Response, SimulatedUser, SimulatorConfig, NOISE_WORDS};

#[cfg(test)]
mod tests;
