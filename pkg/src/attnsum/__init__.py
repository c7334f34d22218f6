"""attnsum: extractive summarization from pre-trained-encoder attention.

Raw per-head CLS attention slices become per-sentence graphs, a small
multi-head graph convolutional classifier scores every sentence, and the
highest-scoring sentences form the summary. Ships with its own oracle
labeling, ROUGE-1/2/L scoring, hand-verified reverse-mode gradients with
Adam training, and an evaluation harness with a Lead-N baseline.
"""

__version__ = "0.1.0"

from .bundle_io import (
    CorpusReport,
    DocumentBundle,
    load_bundle,
    read_bundle,
    save_bundle,
    validate_corpus,
    write_bundle,
)
from .errors import (
    AttnsumError,
    ConfigError,
    ContractError,
    DataError,
    FormatError,
    TruncationError,
    ValidationError,
)
from .eval_harness import (
    EvalReport,
    evaluate,
    filter_corpus,
    lead_k,
    model_scorer,
    select_top_k,
)
from .gcn_core import (
    GcnParams,
    ModelDims,
    forward,
    gcn_layer,
    init_params,
    load_params,
    multi_head_layer,
    readout,
    save_params,
)
from .graph_extract import (
    SentenceGraph,
    binarize,
    build_graphs,
    graphs_from_binary,
    normalize_adjacency,
    resoftmax_rows,
    symmetrize,
)
from .oracle import label_corpus, label_document
from .rouge import RougeScore, rouge_l, rouge_n, tokenize
from .training import (
    AdamState,
    TrainConfig,
    adam_step,
    backward,
    bce_loss,
    count_params,
    grad_check,
    train,
)
