#![allow(dead_code)]

use std::path::PathBuf;

use spidereval_core::dataset::{load_dataset, Dataset, Split};
use spidereval_core::schema::DatabaseSchema;

pub const FIXTURE_DBS: [&str; 5] = [
    "student_transcripts_tracking",
    "car_1",
    "battle_death",
    "dog_kennels",
    "concert_singer",
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn spider_mini() -> PathBuf {
    fixtures().join("spider_mini")
}

pub fn mini_dev() -> Dataset {
    load_dataset(&spider_mini(), Split::Dev).expect("fixture dataset loads")
}

pub fn schema(db_id: &str) -> DatabaseSchema {
    mini_dev().schemas.remove(db_id).expect("fixture schema")
}
