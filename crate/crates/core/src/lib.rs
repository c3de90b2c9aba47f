pub mod rma;
pub mod rtm;
pub mod sched;
pub mod sim;
pub mod wave;
