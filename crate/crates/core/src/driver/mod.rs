//! Simulation orchestration: configuration, the timestep loop, and I/O.
