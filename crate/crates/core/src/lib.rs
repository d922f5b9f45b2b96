//! Two-tier wireless blockchain model: radio links, witness selection,
//! witness and global-block queues, a discrete-event simulator and the
//! experiment drivers built on them.

pub mod analytic;
pub mod config;
pub mod des;
pub mod experiments;
pub mod radio;
pub mod scalar;
pub mod selection;

use num_rational::Ratio;

pub type Rational = Ratio<i128>;

pub type LinkBudgetF64 = radio::LinkBudget<f64>;
pub type LinkBudgetF32 = radio::LinkBudget<f32>;

pub type WitnessStats = analytic::WitnessQueueStats<f64>;
pub type WitnessStatsF32 = analytic::WitnessQueueStats<f32>;
pub type ExactWitnessStats = analytic::WitnessQueueStats<Rational>;
pub type WitnessStationaryF64 = analytic::WitnessStationary<f64>;

pub type GbStats = analytic::GbQueueStats<f64>;
pub type GbStatsF32 = analytic::GbQueueStats<f32>;
pub type GbAlphaF64 = analytic::GbAlpha<f64>;

pub type Growth = analytic::LedgerGrowth<f64>;
pub type ExactLedgerGrowth = analytic::LedgerGrowth<Rational>;

pub type Profile = selection::SelectionProfile<f64>;
pub type ExactProfile = selection::SelectionProfile<Rational>;
