"""Self-synchronizing tokenization disambiguation for
distribution-preserving text steganography, with a pooled auxiliary
channel and a grouped correction protocol for exact end-to-end recovery.
"""

__version__ = "0.1.0"

from .codec import (
    ExtractionResult,
    MaskState,
    StepOutcome,
    dec,
    dec_step,
    enc_step,
    mask_block,
    marginal_check,
)
from .core import (
    AmbiguityEvent,
    EmbedResult,
    RunParams,
    ambiguity_trace,
    corrective_reset,
    detect_ambiguity,
    embed,
    extract,
    extract_detailed,
)
from .correction import (
    CorrectionItem,
    GroupLedger,
    apply_corrections,
    diff_group,
    encode_message,
    parse_message,
)
from .metrics import (
    MetricsReport,
    ambiguity_statistics,
    capacity_and_utilization,
    error_ratios,
    kld_bits,
    ppl,
    rto,
    transcript_oracle,
)
from .pools import Pool, PoolPartition, build_pools, embed_aux, extract_aux
from .providers import (
    Distribution,
    ProviderConfig,
    QuantizedDistribution,
    entropy_bits,
    make_provider,
    quantize,
    top_k_truncate,
)
from .session import SessionConfig, SessionReport, run_receiver, run_sender, simulate
from .tokenizer import (
    Segment,
    TokenizerProfile,
    build_profile,
    load_profile,
    pre_segment,
    save_profile,
    train_bpe,
)
