//! Adaptive regridding: cell tagging, point clustering, velocity and
//! pressure prolongation, and state transfer between hierarchies.
