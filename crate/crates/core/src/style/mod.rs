//! Behavioral style metric: transition vectors are compressed by an
//! autoencoder, projected to 2D, binned on a shared 15x15 grid and compared
//! with the Jensen-Shannon divergence.

mod autoencoder;
mod dump;
mod histogram;
mod jsd;
mod projector;
mod transition;

pub use autoencoder::{train_autoencoder, AeConfig, AeTrainReport, AutoEncoder, LATENT_DIM};
pub use dump::{histogram_json, read_points_csv, write_histogram_json, write_points_csv, PointRow};
pub use histogram::{build_histogram, GridBounds, GridHistogram, GRID};
pub(crate) use jsd::sample_std;
pub use jsd::{bootstrap_jsd_std, jensen_shannon, jsd_distributions, BOOTSTRAP_RESAMPLES};
pub use projector::{fit_projector, PcaProjector, Projector};
pub use transition::{transition_vector, TransitionVector, TRANSITION_LEN};
