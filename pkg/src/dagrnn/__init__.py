"""DAG-structured recurrent networks for dense image labelling."""
from .conv import build_preset
from .dag_rnn import (
    DirectionParams,
    EnsembleParams,
    backward_direction,
    backward_ensemble,
    chain_rnn_forward,
    forward_direction,
    forward_ensemble,
    init_ensemble,
)
from .grid import DIRECTIONS, Direction, GridDag, GridSpec, Neighborhood, decompose, decompose_all
from .network import FullNetwork, backward_full, forward_full, predict
from .objective import ClassStats, ClassWeights, class_frequencies, class_weights, compute_eta, weighted_ce_loss
from .data import gen_beacon_dataset
from .trainer import SGDMomentum, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"
