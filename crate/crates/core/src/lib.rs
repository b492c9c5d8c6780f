pub mod agent;
pub mod dialogue;
pub mod game;
pub mod numerics;
pub mod perception;
pub mod service;
pub mod simulator;
