//! Cognitive bandwidth-allocation-model (BAM) switching for multi-class links.
//!
//! * [`bam`]: MAM, RDM and ATCS admission engines over a single link.
//! * [`traffic`]: Poisson workload synthesis and traffic-profile classification.
//! * [`cognitive`]: controllers deciding which BAM is active (static, rule table, CBR, Q-learning).
//! * [`plane`]: SDN-style global view that sets up, preempts and tears down paths over links.
//! * [`sim`]: deterministic discrete-event loop and run reports.
//! * [`scenario`]: JSON scenario files and their validation.

pub mod bam;
pub mod traffic;
pub mod cognitive;
pub mod plane;
pub mod scenario;
pub mod sim;
