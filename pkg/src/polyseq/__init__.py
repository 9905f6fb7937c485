"""P-SMILES parsing and polymer-graph analysis toolkit.

Core pieces: a P-SMILES parser/writer with repeat and translation
augmentation, star-linking graph construction with backbone detection,
color-refinement and twin-pair analysis, localized attention contexts,
deterministic forward-only reference network layers with finite-unroll
equivalence oracles, and a repeat/shift invariance test harness.
"""

from .errors import (
    BudgetExceeded,
    DisconnectedError,
    LexError,
    ParseError,
    PolyseqError,
)
from .graphs import (
    Atom,
    Bond,
    MolGraph,
    MonomerGraph,
    StarLinkGraph,
    apply_backbone_embedding,
    auto_repeat_for_lga,
    detect_backbone,
    featurize,
    repeat_monomer,
    ring_stats,
    star_link,
    strategy_transform,
    unroll,
)
from .psmiles import (
    canonical_form,
    parse,
    random_augment,
    random_translation,
    repeat,
    write,
)
from .wl import (
    ColoringResult,
    TwinPair,
    canonical_key,
    generate_twins,
    isomorphic,
    monomer_isomorphic,
    polymer_equal,
    primitive_reduce,
    wl_refine,
)
from .context import (
    AttentionContext,
    build_context,
    fold_equivalent,
    periodic_context,
)
from .nets import (
    ReferenceModel,
    SpatialDescriptors,
    cross_modal_fusion,
    forward_polymer,
    fragcam,
    gin_layer,
    layer_norm,
    local_attention_layer,
    mask_atoms,
    project_spatial,
)
from .rsit import ModelPredictor, RsitReport, compare_strategies
from .verify import theorem1_suite, theorem2_suite, twin_suite

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
