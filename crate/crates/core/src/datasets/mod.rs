mod files;
mod sample;
mod splits;
mod toy;

pub use files::{
    load_feature_bundle, load_image_dataset, read_manifest, save_feature_bundle, write_manifest, MANIFEST_FILE,
    SAMPLES_FILE, WITHHELD_FILE,
};
pub use sample::{Domain, Origin, Sample, SampleInput};
pub use splits::{attach_virtual, build_splits, virtual_id, Role, SplitBundle, ViewSet};
pub use toy::{gen_toy_samples, gen_two_domain_toy, rotate_pairs, smooth, ToyShiftConfig, MAX_YAW};
