"""
File formats, manifests and the synthetic conversation generator
"""

from .ground_truth_builder import EXTENTS, build_ground_truth, speech_regions
from .manifest import (
    SPLITS,
    Conversation,
    DatasetManifest,
    ManifestRecord,
    load_conversation,
    load_conversations,
    read_manifest,
    write_manifest,
)
from .synth import (
    RNG_ALGORITHM,
    SynthConfig,
    generate_conversation,
    generate_plda_corpus,
    generate_split,
    raw_space_map,
    split_rngs,
)
from .xvector_io import decode_xvectors, encode_xvectors, read_xvectors, write_xvectors

__all__ = [
    "EXTENTS",
    "SPLITS",
    "RNG_ALGORITHM",
    "SynthConfig",
    "DatasetManifest",
    "ManifestRecord",
    "Conversation",
    "build_ground_truth",
    "speech_regions",
    "generate_conversation",
    "generate_split",
    "generate_plda_corpus",
    "raw_space_map",
    "split_rngs",
    "encode_xvectors",
    "decode_xvectors",
    "read_xvectors",
    "write_xvectors",
    "read_manifest",
    "write_manifest",
    "load_conversation",
    "load_conversations",
]
