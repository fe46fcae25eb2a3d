"""Locality, timeline, topic and propagation analysis of geotagged message streams."""

from ._geoprop import (
    EARTH_RADIUS_KM,
    Corpus,
    GeopropError,
    LoadStats,
    LocalityReport,
    Message,
    PipelineConfig,
    SynthSpec,
    TopicModel,
    assign_region,
    choose_k,
    classify,
    entropy,
    focus,
    haversine,
    load_corpus,
    load_model,
    lowess,
    metrics,
    midpoint,
    perplexity,
    prepare,
    propagation,
    report,
    spread,
    synth,
    timeline,
    tokenize,
    topics,
    train_lda,
)

__all__ = [name for name in dir() if not name.startswith("_")]
