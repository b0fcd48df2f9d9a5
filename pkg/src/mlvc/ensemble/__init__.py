from .bagging import bootstrap_sample
from .boosting import (BoostingTerminated, SampleWeights, boosting_update, clip_weights, kept_examples,
                       perr_errors)
from .cascade import CascadeLayer, cascade_forward
from .predfile import manifest_path, read_prediction_matrix, write_prediction_matrix
from .stacking import (STACK_MODES, Stacker, StackerConfig, StackingDiverged, attention_stack_forward, combine,
                       simple_average, stack_combine, train_stacker)

__all__ = [
    "bootstrap_sample", "BoostingTerminated", "SampleWeights", "boosting_update", "clip_weights",
    "kept_examples", "perr_errors", "CascadeLayer", "cascade_forward", "manifest_path",
    "read_prediction_matrix", "write_prediction_matrix", "STACK_MODES", "Stacker", "StackerConfig",
    "StackingDiverged", "attention_stack_forward", "combine", "simple_average", "stack_combine",
    "train_stacker",
]
