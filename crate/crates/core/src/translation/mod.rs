//! Translational adversarial examples on padded images, plus finite
//! translation-closed universes for exact checks of the density weights.

pub mod aeg;
pub mod image;
pub mod universe;

pub use aeg::{excess_logit, TranslationalAeg, TranslationalAegConfig, Variant};
pub use image::{max_valid_epsilon, Pixels, Shift, SourceImage, TranslationSet, ViewKey};
pub use universe::{
    brute_force_pushforward, check_fixture, check_variant, random_fixture, ClassifierKind, Fixture,
    LinearImageClassifier, OracleReport, TableClassifier, Tile, ToyClassifier, Universe, ORACLE_TOLERANCE,
};
