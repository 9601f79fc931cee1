"""Code-comment coherence classifiers built from scratch.

Pipeline: load labeled (comment, code) pairs, tokenize preserving word order,
encode with word vectors into fixed-shape matrices, train a SimpleRNN or LSTM
classifier (or the TF-IDF + linear-SVM baseline), evaluate per project, and
attribute predictions back to tokens.
"""

from .corpus import (
    COHERENT,
    INCOHERENT,
    CodeCommentPair,
    DatasetSplit,
    load_csv,
    split,
    write_csv,
)
from .tokenizer import TokenSequence, corpus_stats, pair_tokens, tokenize
from .embedding import (
    EmbeddedPair,
    EncoderConfig,
    VectorStore,
    encode_dataset,
    encode_pair,
    load_word_vectors,
    save_word_vectors,
    train_skipgram,
)
from .neurnet import (
    CELL_LSTM,
    CELL_RNN,
    AdamState,
    ModelConfig,
    RecurrentModel,
    TrainConfig,
    adam_step,
    forward,
    grad_check,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from .baseline import (
    LinearSvm,
    TfidfModel,
    svm_predict,
    svm_train,
    tfidf_fit,
    tfidf_transform,
)
from .evaluation import (
    MetricsReport,
    TimingRecord,
    benchmark_embedding,
    compute_metrics,
    evaluate,
    per_project_report,
)
from .interpret import (
    SaliencyReport,
    render_html,
    saliency_grad_input,
    saliency_occlusion,
)

__version__ = "0.1.0"
