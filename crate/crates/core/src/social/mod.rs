//! Interaction features: permutation-invariant pooling over the other people in a
//! scene, and a projected scene-context descriptor.

pub mod context;
pub mod pooling;

pub use context::{
    context_mlp_forward, load_context_features, parse_context_features, serialize_context_features,
    write_context_features, zero_context_provider, ContextFeature, ContextMlp, ContextProvider, Mode,
};
pub use pooling::{social_pool, social_pool_backward, social_pool_by_id, PoolingStrategy, SocialFeature};
