//! Substitution-cipher decipherment: text normalization, cipher
//! generation, EM with a pluggable E-step, and accuracy metrics.

mod em;
mod instance;
mod metrics;
mod text;

pub use em::{run_em, EmConfig, EmRun, Method};
pub use instance::{generate_cipher, CipherInstance, CIPHER_FORMAT, CIPHER_FORMAT_VERSION};
pub use metrics::{mapping_accuracy, Accuracy};
pub use text::TextNormalizer;
