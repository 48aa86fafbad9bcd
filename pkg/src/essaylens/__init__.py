"""Essay scoring over sentence embeddings.

Library layout:

- ``autodiff``    tensors and reverse-mode differentiation
- ``layers``      dense / LSTM / multi-head attention building blocks
- ``objectives``  CCE, MSE, ordinal weighted-kappa loss, loss blending
- ``optimizers``  Adam, AdaMax, warmup learning-rate schedule
- ``corpus``      essay-set metadata, TSV ingestion, folds, normalization
- ``embeddings``  sentence segmentation, providers, embedding files
- ``hypergen``    metadata-driven hyperparameter generation
- ``scorers``     model assembly, training, prediction, persistence
- ``evaluation``  QWK and the cross-validation harness
- ``insight``     essay-to-passage semantic similarity and highlights
- ``reports``     figure rendering for evaluation reports
- ``cli`` / ``service``  command line and HTTP gateway
"""

__version__ = "0.1.0"
