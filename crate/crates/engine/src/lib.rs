//! Distribution market clearing and settlement engine.
//!
//! A distribution market operator (DMO) collects stepwise demand bids
//! from proactive customers on a radial feeder, clears an hourly
//! social-welfare LP against the wholesale price at the feeder head, and
//! reads distribution locational marginal prices (D-LMPs) off the duals
//! of the nodal balance constraints. Settlement prices each customer's
//! load at its bus D-LMP and the DMO's wholesale purchase at the T-LMP.
//!
//! All types are immutable after construction and the operations are
//! pure functions, so everything here is safe to share across threads.

pub mod clearing;
pub mod io;
pub mod model;
pub mod scenarios;
pub mod settlement;
