//! Collision-event kinematics, selection, normalisation, splitting and
//! synthetic data.

pub mod event;
pub mod kinematics;
pub mod normalize;
pub mod split;
pub mod synthetic;

pub use event::{apply_selection, feature_names, flatten_event, EventRecord, Jet, Lepton, LeptonFlavour, Met, SelectionConfig};
pub use kinematics::{pseudorapidity, rapidity, to_cartesian, transverse_momentum, FourMomentum, MomentumRepr};
pub use normalize::{apply_minmax, fit_minmax, NormalizationSpec};
pub use split::{split_dataset, SplitSizes, SplitSpec, Splits};
pub use synthetic::{generate_synthetic, generate_synthetic_with_latents, SyntheticData, LATENT_DIMS};
