//! Balanced-batch training loop, evaluation and ranking metrics.
