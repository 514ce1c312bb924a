#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use spidereval_core::dataset::{load_dataset, Dataset, Split};
use spidereval_pipeline::script::{ModelScript, ScriptRole, ScriptedTransport};
use spidereval_pipeline::{
    ChatTransport, EndpointRole, Endpoints, ModelEndpoint, ReplayStore, Sampling,
};

pub const GENERATOR_MODEL: &str = "fixture-generator";
pub const CORRECTOR_MODEL: &str = "fixture-corrector";

pub fn fixture_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/spider_mini")
}

pub fn replay_dir() -> PathBuf {
    fixture_root().join("replay")
}

pub fn dataset() -> Dataset {
    load_dataset(&fixture_root(), Split::Dev).unwrap()
}

pub fn script() -> ModelScript {
    ModelScript::load(&fixture_root().join("model_script.json")).unwrap()
}

pub fn endpoints(
    generator: Arc<dyn ChatTransport>,
    corrector: Arc<dyn ChatTransport>,
) -> Endpoints {
    Endpoints {
        generator: ModelEndpoint {
            role: EndpointRole::Generator,
            model_name: GENERATOR_MODEL.into(),
            sampling: Sampling::default(),
            transport: generator,
        },
        corrector: ModelEndpoint {
            role: EndpointRole::Corrector,
            model_name: CORRECTOR_MODEL.into(),
            sampling: Sampling::default(),
            transport: corrector,
        },
    }
}

pub fn scripted() -> Endpoints {
    let s = script();
    endpoints(
        Arc::new(ScriptedTransport::new(&s, ScriptRole::Generator)),
        Arc::new(ScriptedTransport::new(&s, ScriptRole::Corrector)),
    )
}

pub fn replayed() -> Endpoints {
    let store = Arc::new(ReplayStore::new(replay_dir()));
    endpoints(store.clone(), store)
}
